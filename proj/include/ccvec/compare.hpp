#pragma once

#include <string>
#include <vector>

#include "ccvec/graph.hpp"
#include "ccvec/params.hpp"

namespace ccvec {

// Parameters of the two learned comparison functions. `width` is the
// embedding width n (= 2 * gru_hidden); the bilinear tensor holds `slices`
// stacked n x n matrices.
struct ComparisonParams {
  ParamTensor* ntn_tensor = nullptr;  // slices x n x n
  ParamTensor* ntn_bias = nullptr;    // slices
  ParamTensor* ff_w = nullptr;        // n x 2n
  ParamTensor* ff_b = nullptr;        // n
  int width = 0;
  int slices = 0;
};

ComparisonParams make_comparison_params(ParamStore& store, Rng& rng, const std::string& prefix,
                                        int width, int slices);

// Which comparison functions feed the file embedding. `bypass` is the
// variant that skips comparison entirely and concatenates the two side
// embeddings; with bypass off at least one function must stay enabled.
struct ComparisonMask {
  bool ntn = true;
  bool ffnn = true;
  bool similarity = true;
  bool subtract = true;
  bool multiply = true;
  bool bypass = false;

  bool any_enabled() const { return ntn || ffnn || similarity || subtract || multiply; }
  bool operator==(const ComparisonMask&) const = default;
};

// Flag grammar used by the CLI: comma-separated subset of
// {nt, nn, sim, sub, mul} naming the functions to disable.
ComparisonMask mask_from_disabled(const std::string& disabled_csv);
std::string mask_to_string(const ComparisonMask& mask);

int file_embedding_width(const ComparisonMask& mask, int width, int slices);

// slice i of the output: ReLU(e_r^T T_i e_a + bias_i)
Val compare_ntn(Graph& g, const ComparisonParams& params, Val removed, Val added);
// ReLU(W [e_a ++ e_r] + bias); the added side comes first in the concatenation
Val compare_ffnn(Graph& g, const ComparisonParams& params, Val removed, Val added);
// [euclidean distance, cosine similarity]; cosine of a zero vector is 0
Val compare_similarity(Graph& g, Val removed, Val added);
Val compare_subtract(Graph& g, Val removed, Val added);
Val compare_multiply(Graph& g, Val removed, Val added);

// Concatenation of the enabled comparison outputs in the fixed order
// ntn ++ ffnn ++ similarity ++ subtract ++ multiply; bypass mode returns
// removed ++ added instead.
Val file_embedding(Graph& g, const ComparisonParams& params, const ComparisonMask& mask,
                   Val removed, Val added);

}  // namespace ccvec

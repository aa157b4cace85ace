#pragma once

#include <string>
#include <vector>

#include "ccvec/graph.hpp"
#include "ccvec/params.hpp"

namespace ccvec {

// Fusion hidden layer plus the per-word sigmoid output layer.
struct HeadParams {
  ParamTensor* hidden_w = nullptr;  // hidden_dim x input_dim
  ParamTensor* hidden_b = nullptr;  // hidden_dim
  ParamTensor* out_w = nullptr;     // vocab_size x hidden_dim
  int input_dim = 0;
  int hidden_dim = 0;
  int vocab_size = 0;
};

HeadParams make_head_params(ParamStore& store, Rng& rng, const std::string& prefix,
                            int input_dim, int hidden_dim, int vocab_size);

// Ordered concatenation of exactly `expected_files` per-file embeddings.
Val fuse_files(Graph& g, const std::vector<Val>& file_embeddings, int expected_files);

// h = ReLU(W e_p + b)
Val head_hidden(Graph& g, const HeadParams& params, Val patch_vec);
// p_i = sigmoid(h . out_row_i), independent per word (multi-label)
Val head_word_probs(Graph& g, const HeadParams& params, Val hidden);
// the two steps composed; the training path splits them to insert dropout
Val predict_word_probs(Graph& g, const HeadParams& params, Val patch_vec);

// sum_i -y_i log p_i - (1 - y_i) log(1 - p_i), probabilities clamped to
// [1e-7, 1 - 1e-7], plus (l2_lambda / 2) * ||theta||^2 over every learnable
// parameter. The regularizer is evaluated outside the graph.
double loss_value(Graph& g, Val probs, const std::vector<double>& labels,
                  const ParamStore& all_params, double l2_lambda);

}  // namespace ccvec

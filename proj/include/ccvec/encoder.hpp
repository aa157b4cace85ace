#pragma once

#include <string>
#include <vector>

#include "ccvec/graph.hpp"
#include "ccvec/params.hpp"
#include "ccvec/tensorize.hpp"

namespace ccvec {

// One GRU direction. Gate equations, with x the input and h the previous
// hidden state (initial state is the zero vector):
//   update    z = sigmoid(W_z x + U_z h + b_z)
//   reset     r = sigmoid(W_r x + U_r h + b_r)
//   candidate c = tanh(W_c x + U_c (r .* h) + b_c)   (reset applied to the
//                                                     state before U_c)
//   output    h' = z .* h + (1 - z) .* c
struct GruCellParams {
  ParamTensor* update_x = nullptr;
  ParamTensor* update_h = nullptr;
  ParamTensor* update_b = nullptr;
  ParamTensor* reset_x = nullptr;
  ParamTensor* reset_h = nullptr;
  ParamTensor* reset_b = nullptr;
  ParamTensor* cand_x = nullptr;
  ParamTensor* cand_h = nullptr;
  ParamTensor* cand_b = nullptr;
};

struct GruLevelParams {
  int input_dim = 0;
  int hidden_dim = 0;
  GruCellParams fwd;
  GruCellParams bwd;
};

// Attention block over annotations of a fixed width: a square projection,
// bias, and a learned context vector that scores informativeness.
struct AttentionParams {
  ParamTensor* proj_w = nullptr;
  ParamTensor* proj_b = nullptr;
  ParamTensor* context = nullptr;
  int width = 0;
};

// The full hierarchical encoder for one side of one file: embedding lookup,
// then bi-GRU + attention at the word, line, and hunk levels. Annotations at
// every level have width 2 * gru_hidden.
struct EncoderParams {
  ParamTensor* embedding = nullptr;
  int embed_dim = 0;
  int gru_hidden = 0;
  GruLevelParams word;
  GruLevelParams line;
  GruLevelParams hunk;
  AttentionParams attn_word;
  AttentionParams attn_line;
  AttentionParams attn_hunk;

  int annotation_width() const { return 2 * gru_hidden; }
};

// Registers all encoder tensors under `prefix` and returns the wiring.
// Weight matrices and context vectors are drawn uniform(-0.1, 0.1), biases
// start at zero.
EncoderParams make_encoder_params(ParamStore& store, Rng& rng, const std::string& prefix,
                                  int vocab_size, int embed_dim, int gru_hidden);

Val gru_step(Graph& g, const GruCellParams& cell, Val x, Val h_prev);

// Bidirectional encoding: output[k] = forward_hidden[k] ++ backward_hidden[k]
// where the backward pass reads the sequence end to start.
std::vector<Val> encode_sequence(Graph& g, const GruLevelParams& level,
                                 const std::vector<Val>& inputs);

// ReLU projection, context-vector scores, softmax weights, weighted sum.
// Returns (pooled vector, weights). A null mask attends everywhere.
std::pair<Val, Val> attention_pool(Graph& g, const AttentionParams& block,
                                   const std::vector<Val>& annotations,
                                   const std::vector<uint8_t>* mask = nullptr);

// Normalized attention weights recorded during one encode_side call.
struct AttentionTrace {
  std::vector<std::vector<std::vector<double>>> word;  // [hunk][line] -> weights over words
  std::vector<std::vector<double>> line;               // [hunk] -> weights over lines
  std::vector<double> hunk;                            // weights over hunks
};

// H x L x W ids -> embedding vector of width 2 * gru_hidden.
// mask_pad excludes PAD positions from the attention softmax (never from the
// GRU); an all-PAD scope falls back to unmasked attention.
Val encode_side(Graph& g, const EncoderParams& params, const SideView& side,
                AttentionTrace* trace = nullptr, bool mask_pad = false);

}  // namespace ccvec

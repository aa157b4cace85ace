#include "ccvec/head.hpp"

#include "ccvec/errors.hpp"

namespace ccvec {

HeadParams make_head_params(ParamStore& store, Rng& rng, const std::string& prefix,
                            int input_dim, int hidden_dim, int vocab_size) {
  if (input_dim < 1 || hidden_dim < 1 || vocab_size < 1) {
    throw ConfigError("head dimensions must be >= 1");
  }
  HeadParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  p.vocab_size = vocab_size;
  ParamTensor& w = store.create(prefix + "hidden_w", "head_hidden", {hidden_dim, input_dim});
  init_uniform(w, rng);
  p.hidden_w = &w;
  ParamTensor& b = store.create(prefix + "hidden_b", "head_hidden", {hidden_dim});
  init_zero(b);
  p.hidden_b = &b;
  ParamTensor& o = store.create(prefix + "out_w", "head_out", {vocab_size, hidden_dim});
  init_uniform(o, rng);
  p.out_w = &o;
  return p;
}

Val fuse_files(Graph& g, const std::vector<Val>& file_embeddings, int expected_files) {
  if (static_cast<int>(file_embeddings.size()) != expected_files) {
    throw ShapeError("fuse_files: got " + std::to_string(file_embeddings.size()) +
                     " file embeddings, expected " + std::to_string(expected_files));
  }
  if (expected_files == 1) return file_embeddings[0];
  return g.concat(file_embeddings);
}

Val head_hidden(Graph& g, const HeadParams& params, Val patch_vec) {
  if (g.width(patch_vec) != static_cast<size_t>(params.input_dim)) {
    throw ShapeError("head_hidden: patch vector width " + std::to_string(g.width(patch_vec)) +
                     ", expected " + std::to_string(params.input_dim));
  }
  return g.relu(g.add(g.matvec(*params.hidden_w, patch_vec), g.param(*params.hidden_b)));
}

Val head_word_probs(Graph& g, const HeadParams& params, Val hidden) {
  return g.sigmoid(g.matvec(*params.out_w, hidden));
}

Val predict_word_probs(Graph& g, const HeadParams& params, Val patch_vec) {
  return head_word_probs(g, params, head_hidden(g, params, patch_vec));
}

double loss_value(Graph& g, Val probs, const std::vector<double>& labels,
                  const ParamStore& all_params, double l2_lambda) {
  if (l2_lambda < 0.0) throw ConfigError("l2 coefficient must be >= 0");
  Val bce = g.bce_sum(probs, labels);
  return g.value(bce)[0] + 0.5 * l2_lambda * all_params.squared_norm();
}

}  // namespace ccvec

#include "ccvec/model.hpp"

#include "ccvec/errors.hpp"

namespace ccvec {

Model::Model(const ModelConfig& config, Vocabulary code_vocab, Vocabulary message_vocab,
             uint64_t init_seed)
    : config_(config),
      code_vocab_(std::move(code_vocab)),
      message_vocab_(std::move(message_vocab)),
      store_(std::make_unique<ParamStore>()) {
  if (code_vocab_.kind() != VocabKind::code || message_vocab_.kind() != VocabKind::message) {
    throw ConfigError("model requires a code vocabulary and a message vocabulary");
  }
  Rng rng(init_seed);
  int n = config_.embedding_width();
  int slices = config_.resolved_slices();

  encoder_removed_ = make_encoder_params(*store_, rng, "encoder.", code_vocab_.size(),
                                         config_.dims.embed_dim, config_.dims.gru_hidden);
  if (config_.shared_encoders) {
    encoder_added_ = encoder_removed_;
  } else {
    encoder_added_ = make_encoder_params(*store_, rng, "encoder_added.", code_vocab_.size(),
                                         config_.dims.embed_dim, config_.dims.gru_hidden);
  }
  comparison_ = make_comparison_params(*store_, rng, "compare.", n, slices);
  head_ = make_head_params(*store_, rng, "head.", patch_embedding_dim(),
                           config_.dims.fusion_hidden, message_vocab_.size());
}

int Model::file_embedding_dim() const {
  return file_embedding_width(config_.mask, config_.embedding_width(),
                              config_.resolved_slices());
}

int Model::patch_embedding_dim() const {
  return config_.shape.files * file_embedding_dim();
}

Model::Forward Model::forward(Graph& g, const ChangeTensor& input) const {
  return forward(g, input, ForwardOptions());
}

Model::Forward Model::forward(Graph& g, const ChangeTensor& input,
                              const ForwardOptions& options, bool want_traces) const {
  if (input.shape != config_.shape) {
    throw ShapeError("change tensor shape does not match the model configuration");
  }
  bool use_dropout = options.train_mode && options.dropout_rate > 0.0;
  if (use_dropout && options.rng == nullptr) {
    throw ConfigError("dropout requires an RNG in training mode");
  }

  Forward out;
  if (want_traces) out.traces.resize(static_cast<size_t>(config_.shape.files));
  out.file_vecs.reserve(static_cast<size_t>(config_.shape.files));

  // comparison tensors are shared across file slots; const_cast is confined
  // to graph wiring (gradients accumulate into the store during training)
  auto& enc_r = const_cast<EncoderParams&>(encoder_removed_);
  auto& enc_a = const_cast<EncoderParams&>(encoder_added_);
  auto& cmp = const_cast<ComparisonParams&>(comparison_);
  auto& head = const_cast<HeadParams&>(head_);

  for (int f = 0; f < config_.shape.files; ++f) {
    AttentionTrace* tr_removed = want_traces ? &out.traces[static_cast<size_t>(f)][0] : nullptr;
    AttentionTrace* tr_added = want_traces ? &out.traces[static_cast<size_t>(f)][1] : nullptr;
    Val e_removed =
        encode_side(g, enc_r, input.removed_side(f), tr_removed, config_.mask_pad);
    Val e_added = encode_side(g, enc_a, input.added_side(f), tr_added, config_.mask_pad);
    out.file_vecs.push_back(file_embedding(g, cmp, config_.mask, e_removed, e_added));
  }

  out.patch_vec = fuse_files(g, out.file_vecs, config_.shape.files);
  Val fused = out.patch_vec;
  if (use_dropout) fused = g.dropout(fused, options.dropout_rate, *options.rng);
  Val hidden = head_hidden(g, head, fused);
  if (use_dropout) hidden = g.dropout(hidden, options.dropout_rate, *options.rng);
  out.probs = head_word_probs(g, head, hidden);
  return out;
}

}  // namespace ccvec

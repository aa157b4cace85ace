#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ccvec/compare.hpp"
#include "ccvec/corpus.hpp"
#include "ccvec/encoder.hpp"
#include "ccvec/head.hpp"
#include "ccvec/tensorize.hpp"

namespace ccvec {

struct ModelDims {
  int embed_dim = 64;
  int gru_hidden = 32;
  int ntn_slices = 0;  // 0: default to the embedding width n = 2 * gru_hidden
  int fusion_hidden = 256;

  bool operator==(const ModelDims&) const = default;
};

struct ModelConfig {
  ShapeConfig shape;
  ModelDims dims;
  ComparisonMask mask;
  bool shared_encoders = true;  // one encoder for both sides, or one per side
  bool mask_pad = false;        // exclude PAD positions from attention

  int embedding_width() const { return 2 * dims.gru_hidden; }
  int resolved_slices() const {
    return dims.ntn_slices > 0 ? dims.ntn_slices : embedding_width();
  }
};

// The assembled network. Owns every learnable tensor plus copies of the two
// vocabularies; construction order of the tensors is fixed by the
// configuration alone, which checkpoint loading relies on.
class Model {
 public:
  Model(const ModelConfig& config, Vocabulary code_vocab, Vocabulary message_vocab,
        uint64_t init_seed);
  Model(Model&&) = default;
  Model& operator=(Model&&) = default;

  struct ForwardOptions {
    bool train_mode = false;
    double dropout_rate = 0.0;
    Rng* rng = nullptr;  // required when train_mode && dropout_rate > 0
  };

  struct Forward {
    Val patch_vec;
    Val probs;
    std::vector<Val> file_vecs;
    // [file][0]=removed side, [file][1]=added side; filled when tracing
    std::vector<std::array<AttentionTrace, 2>> traces;
  };

  Forward forward(Graph& g, const ChangeTensor& input, const ForwardOptions& options,
                  bool want_traces = false) const;
  Forward forward(Graph& g, const ChangeTensor& input) const;  // inference defaults

  const ModelConfig& config() const { return config_; }
  const Vocabulary& code_vocab() const { return code_vocab_; }
  const Vocabulary& message_vocab() const { return message_vocab_; }
  ParamStore& params() { return *store_; }
  const ParamStore& params() const { return *store_; }

  int file_embedding_dim() const;
  int patch_embedding_dim() const;

 private:
  ModelConfig config_;
  Vocabulary code_vocab_;
  Vocabulary message_vocab_;
  // heap-allocated so Model stays movable while ParamTensor pointers in the
  // wiring structs below remain stable
  std::unique_ptr<ParamStore> store_;
  EncoderParams encoder_removed_;
  EncoderParams encoder_added_;  // aliases encoder_removed_ when shared
  ComparisonParams comparison_;
  HeadParams head_;
};

}  // namespace ccvec

#include <cstring>
#include <set>
#include <sstream>

#include "ccvec/errors.hpp"
#include "ccvec/train.hpp"
#include "ccvec/util.hpp"
#include "json.hpp"
#include "json_support.hpp"

namespace ccvec {

namespace {

constexpr char kMagic[4] = {'C', 'C', '2', 'V'};

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

class Reader {
 public:
  Reader(const std::string& data, const std::string& path) : data_(data), path_(path) {}

  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<uint32_t>(static_cast<unsigned char>(data_[pos_ + static_cast<size_t>(i)]))
           << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<uint64_t>(static_cast<unsigned char>(data_[pos_ + static_cast<size_t>(i)]))
           << (8 * i);
    }
    pos_ += 8;
    return v;
  }

  float f32() {
    uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }

  std::string bytes(size_t n) {
    need(n);
    std::string out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  void need(size_t n) {
    if (pos_ + n > data_.size()) {
      throw CheckpointError("checkpoint truncated: " + path_ + " (need " + std::to_string(n) +
                            " more bytes at offset " + std::to_string(pos_) + ")");
    }
  }

  void seek(size_t pos) {
    pos_ = pos;
    need(0);
  }

  size_t pos() const { return pos_; }

 private:
  const std::string& data_;
  std::string path_;
  size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const Model& model, const TrainConfig& config, const std::string& path) {
  const ParamStore& params = model.params();

  nlohmann::json directory = nlohmann::json::array();
  uint64_t offset = 0;
  for (const ParamTensor& p : params.tensors()) {
    directory.push_back({{"name", p.name},
                         {"shape", p.shape},
                         {"offset", offset},
                         {"count", p.size()}});
    offset += static_cast<uint64_t>(p.size()) * 4;
  }
  nlohmann::json header = {{"config", nlohmann::json::parse(config.to_json_string())},
                           {"vocab_code", vocabulary_to_json(model.code_vocab())},
                           {"vocab_msg", vocabulary_to_json(model.message_vocab())},
                           {"tensors", directory}};
  std::string header_bytes = header.dump();

  std::string out;
  out.reserve(16 + header_bytes.size() + offset);
  out.append(kMagic, 4);
  put_u32(out, kCheckpointVersion);
  put_u64(out, header_bytes.size());
  out += header_bytes;
  for (const ParamTensor& p : params.tensors()) {
    for (double v : p.value) put_f32(out, static_cast<float>(v));
  }
  write_file_atomic(path, out);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::string data = read_text_file(path);
  Reader r(data, path);

  std::string magic = r.bytes(4);
  if (std::memcmp(magic.data(), kMagic, 4) != 0) {
    throw CheckpointError("bad checkpoint magic in " + path + ": found '" + magic +
                          "', expected 'CC2V'");
  }
  uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version) +
                          " (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  uint64_t header_len = r.u64();
  std::string header_bytes = r.bytes(header_len);
  nlohmann::json header = nlohmann::json::parse(header_bytes, nullptr, false);
  if (header.is_discarded()) throw CheckpointError("corrupt checkpoint header in " + path);

  TrainConfig config;
  Vocabulary code_vocab, msg_vocab;
  try {
    config = TrainConfig::from_json_string(header.at("config").dump());
    code_vocab = vocabulary_from_json(header.at("vocab_code"));
    msg_vocab = vocabulary_from_json(header.at("vocab_msg"));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint header field error: ") + e.what());
  }

  Model model(config.model_config(), std::move(code_vocab), std::move(msg_vocab), config.seed);

  const auto& directory = header.at("tensors");
  if (!directory.is_array() ||
      directory.size() != model.params().tensors().size()) {
    throw CheckpointError("checkpoint tensor directory does not match the model layout");
  }
  size_t payload_start = r.pos();
  std::set<std::string> seen;
  for (const auto& entry : directory) {
    std::string name = entry.at("name").get<std::string>();
    ParamTensor* p = model.params().find(name);
    if (!p) throw CheckpointError("checkpoint names unknown tensor '" + name + "'");
    if (!seen.insert(name).second) {
      throw CheckpointError("checkpoint lists tensor '" + name + "' twice");
    }
    std::vector<int> shape = entry.at("shape").get<std::vector<int>>();
    if (shape != p->shape) {
      throw CheckpointError("checkpoint tensor '" + name + "' has mismatched shape");
    }
    uint64_t offset = entry.at("offset").get<uint64_t>();
    int64_t count = entry.at("count").get<int64_t>();
    if (count != p->size()) {
      throw CheckpointError("checkpoint tensor '" + name + "' has mismatched element count");
    }
    Reader pr(data, path);
    pr.seek(payload_start + offset);
    for (int64_t i = 0; i < count; ++i) {
      p->value[static_cast<size_t>(i)] = static_cast<double>(pr.f32());
    }
  }
  return Checkpoint{config, std::move(model)};
}

}  // namespace ccvec

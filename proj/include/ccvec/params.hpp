#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <unordered_map>
#include <vector>

#include "ccvec/rng.hpp"

namespace ccvec {

// One named learnable tensor. Values and gradients live here; Adam moments
// are attached lazily by the optimizer.
struct ParamTensor {
  std::string name;   // unique, e.g. "encoder.word.fwd.update_x"
  std::string group;  // reporting bucket, e.g. "gru_word"
  std::vector<int> shape;
  std::vector<double> value;
  std::vector<double> grad;
  std::vector<double> adam_m;
  std::vector<double> adam_v;

  int64_t size() const { return static_cast<int64_t>(value.size()); }
  int rows() const { return shape.empty() ? 0 : shape[0]; }
  int cols() const { return shape.size() < 2 ? 1 : shape[1]; }
};

// Registry of all model parameters in a stable registration order. The order
// defines checkpoint payload layout and initialization draws, so it must not
// depend on anything but the model configuration.
class ParamStore {
 public:
  ParamTensor& create(const std::string& name, const std::string& group,
                      std::vector<int> shape);
  ParamTensor* find(const std::string& name);
  const ParamTensor* find(const std::string& name) const;

  const std::deque<ParamTensor>& tensors() const { return tensors_; }
  std::deque<ParamTensor>& tensors() { return tensors_; }

  int64_t total_size() const;
  double squared_norm() const;
  void zero_grad();
  std::vector<std::string> group_names() const;  // first-seen order

 private:
  std::deque<ParamTensor> tensors_;  // deque: stable addresses across create()
  std::unordered_map<std::string, ParamTensor*> by_name_;
};

void init_uniform(ParamTensor& p, Rng& rng, double lo = -0.1, double hi = 0.1);
void init_zero(ParamTensor& p);

}  // namespace ccvec

#include "ccvec/params.hpp"

#include "ccvec/errors.hpp"

namespace ccvec {

ParamTensor& ParamStore::create(const std::string& name, const std::string& group,
                                std::vector<int> shape) {
  if (by_name_.count(name)) throw ConfigError("duplicate parameter tensor: " + name);
  int64_t count = 1;
  for (int d : shape) {
    if (d < 1) throw ConfigError("parameter dimension must be >= 1: " + name);
    count *= d;
  }
  ParamTensor& p = tensors_.emplace_back();
  p.name = name;
  p.group = group;
  p.shape = std::move(shape);
  p.value.assign(static_cast<size_t>(count), 0.0);
  p.grad.assign(static_cast<size_t>(count), 0.0);
  by_name_[name] = &p;
  return p;
}

ParamTensor* ParamStore::find(const std::string& name) {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : it->second;
}

const ParamTensor* ParamStore::find(const std::string& name) const {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : it->second;
}

int64_t ParamStore::total_size() const {
  int64_t n = 0;
  for (const ParamTensor& p : tensors_) n += p.size();
  return n;
}

double ParamStore::squared_norm() const {
  double s = 0.0;
  for (const ParamTensor& p : tensors_) {
    for (double v : p.value) s += v * v;
  }
  return s;
}

void ParamStore::zero_grad() {
  for (ParamTensor& p : tensors_) {
    std::fill(p.grad.begin(), p.grad.end(), 0.0);
  }
}

std::vector<std::string> ParamStore::group_names() const {
  std::vector<std::string> names;
  for (const ParamTensor& p : tensors_) {
    bool seen = false;
    for (const std::string& g : names) {
      if (g == p.group) {
        seen = true;
        break;
      }
    }
    if (!seen) names.push_back(p.group);
  }
  return names;
}

void init_uniform(ParamTensor& p, Rng& rng, double lo, double hi) {
  for (double& v : p.value) v = rng.uniform(lo, hi);
}

void init_zero(ParamTensor& p) {
  std::fill(p.value.begin(), p.value.end(), 0.0);
}

}  // namespace ccvec

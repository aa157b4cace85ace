#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ccvec/params.hpp"
#include "ccvec/rng.hpp"

namespace ccvec {

// Reverse-mode tape over flat double buffers. A Graph is built per example,
// consumed by one backward() sweep and thrown away. Parameter tensors are
// referenced in place: large matrices are never copied into the tape, and
// their gradients accumulate directly into ParamTensor::grad, which makes
// weight sharing (the same tensor used at many sites) work with no extra
// bookkeeping.
//
// Constructed with record=false the tape is skipped entirely; values are
// still computed, backward() is then invalid. Used for inference.
class Graph {
 public:
  struct Val {
    int32_t idx = -1;
    bool valid() const { return idx >= 0; }
  };

  explicit Graph(bool record = true) : record_(record) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // ---- leaves ----
  Val constant(std::vector<double> v);
  Val param(ParamTensor& p);                    // whole tensor as a vector
  Val lookup(ParamTensor& table, int32_t row);  // one row of an embedding matrix

  // ---- elementwise / vector ops ----
  Val add(Val a, Val b);
  Val sub(Val a, Val b);
  Val mul(Val a, Val b);
  Val scale(Val a, double s);
  Val concat(const std::vector<Val>& parts);
  Val sigmoid(Val a);
  Val tanh_act(Val a);
  Val relu(Val a);

  // ---- linear algebra ----
  // y = W x with W referenced in place (row-major rows x cols)
  Val matvec(ParamTensor& w, Val x);
  // scalar a^T T_slice b where T holds `slices` stacked n x n matrices
  Val bilinear(Val a, ParamTensor& t, int slice, Val b);
  Val dot(Val a, Val b);  // length-1

  // ---- reductions / attention ----
  // masked entries get zero weight; if every entry is masked the mask is
  // ignored so the result stays a distribution
  Val softmax(Val scores, const std::vector<uint8_t>* mask = nullptr);
  Val weighted_sum(Val weights, const std::vector<Val>& items);

  // ---- comparison primitives ----
  Val euclidean_distance(Val a, Val b);  // length-1; zero gradient at a == b
  Val cosine_sim(Val a, Val b);          // length-1; 0 when either side is zero

  // ---- training-only ----
  // inverted dropout: kept entries scaled by 1/(1-rate); rate 0 is identity
  Val dropout(Val a, double rate, Rng& rng);
  // sum_i -y_i log p_i - (1-y_i) log(1-p_i), probabilities clamped to
  // [eps, 1-eps]; clamped entries have zero gradient
  Val bce_sum(Val probs, const std::vector<double>& labels, double eps = 1e-7);

  const std::vector<double>& value(Val v) const { return nodes_[static_cast<size_t>(v.idx)].v; }
  size_t width(Val v) const { return nodes_[static_cast<size_t>(v.idx)].v.size(); }
  size_t node_count() const { return nodes_.size(); }

  // seeds d(out)/d(out) = seed and sweeps the tape once in reverse
  void backward(Val scalar_out, double seed = 1.0);

 private:
  struct Node {
    std::vector<double> v;
    std::vector<double> g;
  };

  Val make(std::vector<double> v);
  std::vector<double>& grad(Val v) { return nodes_[static_cast<size_t>(v.idx)].g; }
  void check_same_width(Val a, Val b, const char* op) const;

  std::vector<Node> nodes_;
  std::vector<std::function<void()>> tape_;
  bool record_;
};

using Val = Graph::Val;

}  // namespace ccvec

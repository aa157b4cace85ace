#include "ccvec/graph.hpp"

#include <algorithm>
#include <cmath>

#include "ccvec/errors.hpp"

namespace ccvec {

Val Graph::make(std::vector<double> v) {
  Node n;
  n.v = std::move(v);
  if (record_) n.g.assign(n.v.size(), 0.0);
  nodes_.push_back(std::move(n));
  return Val{static_cast<int32_t>(nodes_.size() - 1)};
}

void Graph::check_same_width(Val a, Val b, const char* op) const {
  if (width(a) != width(b)) {
    throw ShapeError(std::string(op) + ": width mismatch " + std::to_string(width(a)) +
                     " vs " + std::to_string(width(b)));
  }
}

Val Graph::constant(std::vector<double> v) { return make(std::move(v)); }

Val Graph::param(ParamTensor& p) {
  Val out = make(p.value);
  if (record_) {
    tape_.push_back([this, out, &p] {
      const std::vector<double>& g = grad(out);
      for (size_t i = 0; i < g.size(); ++i) p.grad[i] += g[i];
    });
  }
  return out;
}

Val Graph::lookup(ParamTensor& table, int32_t row) {
  int cols = table.cols();
  const double* src = table.value.data() + static_cast<int64_t>(row) * cols;
  Val out = make(std::vector<double>(src, src + cols));
  if (record_) {
    tape_.push_back([this, out, &table, row, cols] {
      const std::vector<double>& g = grad(out);
      double* dst = table.grad.data() + static_cast<int64_t>(row) * cols;
      for (int i = 0; i < cols; ++i) dst[i] += g[i];
    });
  }
  return out;
}

Val Graph::add(Val a, Val b) {
  check_same_width(a, b, "add");
  const std::vector<double>& va = value(a);
  const std::vector<double>& vb = value(b);
  std::vector<double> v(va.size());
  for (size_t i = 0; i < v.size(); ++i) v[i] = va[i] + vb[i];
  Val out = make(std::move(v));
  if (record_) {
    tape_.push_back([this, out, a, b] {
      const std::vector<double>& g = grad(out);
      std::vector<double>& ga = grad(a);
      std::vector<double>& gb = grad(b);
      for (size_t i = 0; i < g.size(); ++i) {
        ga[i] += g[i];
        gb[i] += g[i];
      }
    });
  }
  return out;
}

Val Graph::sub(Val a, Val b) {
  check_same_width(a, b, "sub");
  const std::vector<double>& va = value(a);
  const std::vector<double>& vb = value(b);
  std::vector<double> v(va.size());
  for (size_t i = 0; i < v.size(); ++i) v[i] = va[i] - vb[i];
  Val out = make(std::move(v));
  if (record_) {
    tape_.push_back([this, out, a, b] {
      const std::vector<double>& g = grad(out);
      std::vector<double>& ga = grad(a);
      std::vector<double>& gb = grad(b);
      for (size_t i = 0; i < g.size(); ++i) {
        ga[i] += g[i];
        gb[i] -= g[i];
      }
    });
  }
  return out;
}

Val Graph::mul(Val a, Val b) {
  check_same_width(a, b, "mul");
  const std::vector<double>& va = value(a);
  const std::vector<double>& vb = value(b);
  std::vector<double> v(va.size());
  for (size_t i = 0; i < v.size(); ++i) v[i] = va[i] * vb[i];
  Val out = make(std::move(v));
  if (record_) {
    tape_.push_back([this, out, a, b] {
      const std::vector<double>& g = grad(out);
      const std::vector<double>& va = value(a);
      const std::vector<double>& vb = value(b);
      std::vector<double>& ga = grad(a);
      std::vector<double>& gb = grad(b);
      for (size_t i = 0; i < g.size(); ++i) {
        ga[i] += g[i] * vb[i];
        gb[i] += g[i] * va[i];
      }
    });
  }
  return out;
}

Val Graph::scale(Val a, double s) {
  const std::vector<double>& va = value(a);
  std::vector<double> v(va.size());
  for (size_t i = 0; i < v.size(); ++i) v[i] = va[i] * s;
  Val out = make(std::move(v));
  if (record_) {
    tape_.push_back([this, out, a, s] {
      const std::vector<double>& g = grad(out);
      std::vector<double>& ga = grad(a);
      for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * s;
    });
  }
  return out;
}

Val Graph::concat(const std::vector<Val>& parts) {
  if (parts.empty()) throw ShapeError("concat: no parts");
  size_t total = 0;
  for (Val p : parts) total += width(p);
  std::vector<double> v;
  v.reserve(total);
  for (Val p : parts) {
    const std::vector<double>& vp = value(p);
    v.insert(v.end(), vp.begin(), vp.end());
  }
  Val out = make(std::move(v));
  if (record_) {
    std::vector<Val> ps = parts;
    tape_.push_back([this, out, ps] {
      const std::vector<double>& g = grad(out);
      size_t offset = 0;
      for (Val p : ps) {
        std::vector<double>& gp = grad(p);
        for (size_t i = 0; i < gp.size(); ++i) gp[i] += g[offset + i];
        offset += gp.size();
      }
    });
  }
  return out;
}

Val Graph::sigmoid(Val a) {
  const std::vector<double>& va = value(a);
  std::vector<double> v(va.size());
  for (size_t i = 0; i < v.size(); ++i) v[i] = 1.0 / (1.0 + std::exp(-va[i]));
  Val out = make(std::move(v));
  if (record_) {
    tape_.push_back([this, out, a] {
      const std::vector<double>& g = grad(out);
      const std::vector<double>& y = value(out);
      std::vector<double>& ga = grad(a);
      for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
    });
  }
  return out;
}

Val Graph::tanh_act(Val a) {
  const std::vector<double>& va = value(a);
  std::vector<double> v(va.size());
  for (size_t i = 0; i < v.size(); ++i) v[i] = std::tanh(va[i]);
  Val out = make(std::move(v));
  if (record_) {
    tape_.push_back([this, out, a] {
      const std::vector<double>& g = grad(out);
      const std::vector<double>& y = value(out);
      std::vector<double>& ga = grad(a);
      for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
    });
  }
  return out;
}

Val Graph::relu(Val a) {
  const std::vector<double>& va = value(a);
  std::vector<double> v(va.size());
  for (size_t i = 0; i < v.size(); ++i) v[i] = va[i] > 0.0 ? va[i] : 0.0;
  Val out = make(std::move(v));
  if (record_) {
    tape_.push_back([this, out, a] {
      const std::vector<double>& g = grad(out);
      const std::vector<double>& y = value(out);
      std::vector<double>& ga = grad(a);
      for (size_t i = 0; i < g.size(); ++i) {
        if (y[i] > 0.0) ga[i] += g[i];
      }
    });
  }
  return out;
}

Val Graph::matvec(ParamTensor& w, Val x) {
  int rows = w.rows();
  int cols = w.cols();
  if (static_cast<size_t>(cols) != width(x)) {
    throw ShapeError("matvec: " + w.name + " has " + std::to_string(cols) +
                     " cols, input width " + std::to_string(width(x)));
  }
  const std::vector<double>& vx = value(x);
  std::vector<double> v(static_cast<size_t>(rows), 0.0);
  const double* wd = w.value.data();
  for (int r = 0; r < rows; ++r) {
    const double* row = wd + static_cast<int64_t>(r) * cols;
    double s = 0.0;
    for (int c = 0; c < cols; ++c) s += row[c] * vx[static_cast<size_t>(c)];
    v[static_cast<size_t>(r)] = s;
  }
  Val out = make(std::move(v));
  if (record_) {
    tape_.push_back([this, out, &w, x, rows, cols] {
      const std::vector<double>& g = grad(out);
      const std::vector<double>& vx = value(x);
      std::vector<double>& gx = grad(x);
      const double* wd = w.value.data();
      double* gw = w.grad.data();
      for (int r = 0; r < rows; ++r) {
        double gr = g[static_cast<size_t>(r)];
        if (gr == 0.0) continue;
        const double* row = wd + static_cast<int64_t>(r) * cols;
        double* grow = gw + static_cast<int64_t>(r) * cols;
        for (int c = 0; c < cols; ++c) {
          grow[c] += gr * vx[static_cast<size_t>(c)];
          gx[static_cast<size_t>(c)] += gr * row[c];
        }
      }
    });
  }
  return out;
}

Val Graph::bilinear(Val a, ParamTensor& t, int slice, Val b) {
  size_t n = width(a);
  check_same_width(a, b, "bilinear");
  if (t.value.size() % (n * n) != 0) {
    throw ShapeError("bilinear: " + t.name + " is not a stack of " + std::to_string(n) + "x" +
                     std::to_string(n) + " slices");
  }
  const double* td = t.value.data() + static_cast<size_t>(slice) * n * n;
  const std::vector<double>& va = value(a);
  const std::vector<double>& vb = value(b);
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double* row = td + i * n;
    double acc = 0.0;
    for (size_t j = 0; j < n; ++j) acc += row[j] * vb[j];
    s += va[i] * acc;
  }
  Val out = make({s});
  if (record_) {
    tape_.push_back([this, out, a, b, &t, slice, n] {
      double g = grad(out)[0];
      if (g == 0.0) return;
      const double* td = t.value.data() + static_cast<size_t>(slice) * n * n;
      double* tg = t.grad.data() + static_cast<size_t>(slice) * n * n;
      const std::vector<double>& va = value(a);
      const std::vector<double>& vb = value(b);
      std::vector<double>& ga = grad(a);
      std::vector<double>& gb = grad(b);
      for (size_t i = 0; i < n; ++i) {
        const double* row = td + i * n;
        double* grow = tg + i * n;
        double row_dot_b = 0.0;
        for (size_t j = 0; j < n; ++j) {
          row_dot_b += row[j] * vb[j];
          grow[j] += g * va[i] * vb[j];
          gb[j] += g * va[i] * row[j];
        }
        ga[i] += g * row_dot_b;
      }
    });
  }
  return out;
}

Val Graph::dot(Val a, Val b) {
  check_same_width(a, b, "dot");
  const std::vector<double>& va = value(a);
  const std::vector<double>& vb = value(b);
  double s = 0.0;
  for (size_t i = 0; i < va.size(); ++i) s += va[i] * vb[i];
  Val out = make({s});
  if (record_) {
    tape_.push_back([this, out, a, b] {
      double g = grad(out)[0];
      const std::vector<double>& va = value(a);
      const std::vector<double>& vb = value(b);
      std::vector<double>& ga = grad(a);
      std::vector<double>& gb = grad(b);
      for (size_t i = 0; i < va.size(); ++i) {
        ga[i] += g * vb[i];
        gb[i] += g * va[i];
      }
    });
  }
  return out;
}

Val Graph::softmax(Val scores, const std::vector<uint8_t>* mask) {
  const std::vector<double>& vs = value(scores);
  size_t n = vs.size();
  bool use_mask = false;
  if (mask) {
    if (mask->size() != n) throw ShapeError("softmax: mask width mismatch");
    size_t kept = 0;
    for (uint8_t m : *mask) kept += m ? 1 : 0;
    use_mask = kept > 0 && kept < n;
  }
  double max_s = -1e300;
  for (size_t i = 0; i < n; ++i) {
    if (!use_mask || (*mask)[i]) max_s = std::max(max_s, vs[i]);
  }
  std::vector<double> v(n, 0.0);
  double total = 0.0;
  for (size_t i = 0; i < n; ++i) {
    if (!use_mask || (*mask)[i]) {
      v[i] = std::exp(vs[i] - max_s);
      total += v[i];
    }
  }
  for (size_t i = 0; i < n; ++i) v[i] /= total;
  Val out = make(std::move(v));
  if (record_) {
    tape_.push_back([this, out, scores] {
      const std::vector<double>& g = grad(out);
      const std::vector<double>& y = value(out);
      std::vector<double>& gs = grad(scores);
      double g_dot_y = 0.0;
      for (size_t i = 0; i < g.size(); ++i) g_dot_y += g[i] * y[i];
      for (size_t i = 0; i < g.size(); ++i) gs[i] += y[i] * (g[i] - g_dot_y);
    });
  }
  return out;
}

Val Graph::weighted_sum(Val weights, const std::vector<Val>& items) {
  if (items.empty()) throw ShapeError("weighted_sum: no items");
  if (width(weights) != items.size()) {
    throw ShapeError("weighted_sum: " + std::to_string(width(weights)) + " weights for " +
                     std::to_string(items.size()) + " items");
  }
  size_t n = width(items[0]);
  for (Val it : items) check_same_width(items[0], it, "weighted_sum");
  const std::vector<double>& vw = value(weights);
  std::vector<double> v(n, 0.0);
  for (size_t k = 0; k < items.size(); ++k) {
    const std::vector<double>& vi = value(items[k]);
    for (size_t i = 0; i < n; ++i) v[i] += vw[k] * vi[i];
  }
  Val out = make(std::move(v));
  if (record_) {
    std::vector<Val> its = items;
    tape_.push_back([this, out, weights, its] {
      const std::vector<double>& g = grad(out);
      const std::vector<double>& vw = value(weights);
      std::vector<double>& gw = grad(weights);
      for (size_t k = 0; k < its.size(); ++k) {
        const std::vector<double>& vi = value(its[k]);
        std::vector<double>& gi = grad(its[k]);
        double acc = 0.0;
        for (size_t i = 0; i < g.size(); ++i) {
          acc += g[i] * vi[i];
          gi[i] += g[i] * vw[k];
        }
        gw[k] += acc;
      }
    });
  }
  return out;
}

Val Graph::euclidean_distance(Val a, Val b) {
  check_same_width(a, b, "euclidean_distance");
  const std::vector<double>& va = value(a);
  const std::vector<double>& vb = value(b);
  double s = 0.0;
  for (size_t i = 0; i < va.size(); ++i) {
    double d = va[i] - vb[i];
    s += d * d;
  }
  double dist = std::sqrt(s);
  Val out = make({dist});
  if (record_) {
    tape_.push_back([this, out, a, b] {
      double g = grad(out)[0];
      double dist = value(out)[0];
      if (g == 0.0 || dist < 1e-12) return;  // subgradient 0 at the kink
      const std::vector<double>& va = value(a);
      const std::vector<double>& vb = value(b);
      std::vector<double>& ga = grad(a);
      std::vector<double>& gb = grad(b);
      for (size_t i = 0; i < va.size(); ++i) {
        double d = (va[i] - vb[i]) / dist;
        ga[i] += g * d;
        gb[i] -= g * d;
      }
    });
  }
  return out;
}

Val Graph::cosine_sim(Val a, Val b) {
  check_same_width(a, b, "cosine_sim");
  const std::vector<double>& va = value(a);
  const std::vector<double>& vb = value(b);
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (size_t i = 0; i < va.size(); ++i) {
    ab += va[i] * vb[i];
    aa += va[i] * va[i];
    bb += vb[i] * vb[i];
  }
  double na = std::sqrt(aa), nb = std::sqrt(bb);
  bool degenerate = na < 1e-12 || nb < 1e-12;
  double c = degenerate ? 0.0 : ab / (na * nb);
  Val out = make({c});
  if (record_ && !degenerate) {
    tape_.push_back([this, out, a, b, ab, na, nb] {
      double g = grad(out)[0];
      if (g == 0.0) return;
      const std::vector<double>& va = value(a);
      const std::vector<double>& vb = value(b);
      std::vector<double>& ga = grad(a);
      std::vector<double>& gb = grad(b);
      double inv = 1.0 / (na * nb);
      double ca = ab / (na * na * na * nb);
      double cb = ab / (na * nb * nb * nb);
      for (size_t i = 0; i < va.size(); ++i) {
        ga[i] += g * (vb[i] * inv - va[i] * ca);
        gb[i] += g * (va[i] * inv - vb[i] * cb);
      }
    });
  }
  return out;
}

Val Graph::dropout(Val a, double rate, Rng& rng) {
  if (rate <= 0.0) return a;
  const std::vector<double>& va = value(a);
  double keep_scale = 1.0 / (1.0 - rate);
  std::vector<double> mask(va.size());
  std::vector<double> v(va.size());
  for (size_t i = 0; i < va.size(); ++i) {
    mask[i] = rng.bernoulli(rate) ? 0.0 : keep_scale;
    v[i] = va[i] * mask[i];
  }
  Val out = make(std::move(v));
  if (record_) {
    tape_.push_back([this, out, a, mask = std::move(mask)] {
      const std::vector<double>& g = grad(out);
      std::vector<double>& ga = grad(a);
      for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * mask[i];
    });
  }
  return out;
}

Val Graph::bce_sum(Val probs, const std::vector<double>& labels, double eps) {
  if (width(probs) != labels.size()) {
    throw ShapeError("bce_sum: " + std::to_string(width(probs)) + " probabilities for " +
                     std::to_string(labels.size()) + " labels");
  }
  const std::vector<double>& vp = value(probs);
  double total = 0.0;
  for (size_t i = 0; i < vp.size(); ++i) {
    double p = std::clamp(vp[i], eps, 1.0 - eps);
    total += -labels[i] * std::log(p) - (1.0 - labels[i]) * std::log(1.0 - p);
  }
  Val out = make({total});
  if (record_) {
    std::vector<double> y = labels;
    tape_.push_back([this, out, probs, y = std::move(y), eps] {
      double g = grad(out)[0];
      if (g == 0.0) return;
      const std::vector<double>& vp = value(probs);
      std::vector<double>& gp = grad(probs);
      for (size_t i = 0; i < vp.size(); ++i) {
        if (vp[i] < eps || vp[i] > 1.0 - eps) continue;  // clamped: flat
        gp[i] += g * (-y[i] / vp[i] + (1.0 - y[i]) / (1.0 - vp[i]));
      }
    });
  }
  return out;
}

void Graph::backward(Val scalar_out, double seed) {
  if (!record_) throw ConfigError("backward() on a non-recording graph");
  if (width(scalar_out) != 1) throw ShapeError("backward: output must be scalar");
  for (Node& n : nodes_) std::fill(n.g.begin(), n.g.end(), 0.0);
  grad(scalar_out)[0] = seed;
  for (auto it = tape_.rbegin(); it != tape_.rend(); ++it) (*it)();
}

}  // namespace ccvec

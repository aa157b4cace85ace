#include "ccvec/compare.hpp"

#include <sstream>

#include "ccvec/errors.hpp"

namespace ccvec {

ComparisonParams make_comparison_params(ParamStore& store, Rng& rng, const std::string& prefix,
                                        int width, int slices) {
  if (width < 1 || slices < 1) throw ConfigError("comparison dimensions must be >= 1");
  ComparisonParams p;
  p.width = width;
  p.slices = slices;
  ParamTensor& t = store.create(prefix + "ntn_tensor", "compare_ntn", {slices, width, width});
  init_uniform(t, rng);
  p.ntn_tensor = &t;
  ParamTensor& tb = store.create(prefix + "ntn_bias", "compare_ntn", {slices});
  init_zero(tb);
  p.ntn_bias = &tb;
  ParamTensor& w = store.create(prefix + "ff_w", "compare_ffnn", {width, 2 * width});
  init_uniform(w, rng);
  p.ff_w = &w;
  ParamTensor& b = store.create(prefix + "ff_b", "compare_ffnn", {width});
  init_zero(b);
  p.ff_b = &b;
  return p;
}

ComparisonMask mask_from_disabled(const std::string& disabled_csv) {
  ComparisonMask mask;
  std::stringstream ss(disabled_csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    // trim spaces
    size_t b = item.find_first_not_of(" \t");
    size_t e = item.find_last_not_of(" \t");
    if (b == std::string::npos) continue;
    item = item.substr(b, e - b + 1);
    if (item == "nt") {
      mask.ntn = false;
    } else if (item == "nn") {
      mask.ffnn = false;
    } else if (item == "sim") {
      mask.similarity = false;
    } else if (item == "sub") {
      mask.subtract = false;
    } else if (item == "mul") {
      mask.multiply = false;
    } else {
      throw ConfigError("unknown comparison function '" + item +
                        "' (expected subset of nt,nn,sim,sub,mul)");
    }
  }
  return mask;
}

std::string mask_to_string(const ComparisonMask& mask) {
  if (mask.bypass) return "bypass";
  std::string out;
  auto append = [&out](bool enabled, const char* name) {
    if (!enabled) return;
    if (!out.empty()) out += ",";
    out += name;
  };
  append(mask.ntn, "nt");
  append(mask.ffnn, "nn");
  append(mask.similarity, "sim");
  append(mask.subtract, "sub");
  append(mask.multiply, "mul");
  return out.empty() ? "none" : out;
}

int file_embedding_width(const ComparisonMask& mask, int width, int slices) {
  if (mask.bypass) return 2 * width;
  if (!mask.any_enabled()) {
    throw ConfigError("all comparison functions disabled; use the bypass variant instead");
  }
  int total = 0;
  if (mask.ntn) total += slices;
  if (mask.ffnn) total += width;
  if (mask.similarity) total += 2;
  if (mask.subtract) total += width;
  if (mask.multiply) total += width;
  return total;
}

namespace {
void check_width(Graph& g, const ComparisonParams& params, Val removed, Val added) {
  if (g.width(removed) != static_cast<size_t>(params.width) ||
      g.width(added) != static_cast<size_t>(params.width)) {
    throw ShapeError("comparison inputs must have width " + std::to_string(params.width));
  }
}
}  // namespace

Val compare_ntn(Graph& g, const ComparisonParams& params, Val removed, Val added) {
  check_width(g, params, removed, added);
  std::vector<Val> slices;
  slices.reserve(static_cast<size_t>(params.slices));
  for (int i = 0; i < params.slices; ++i) {
    slices.push_back(g.bilinear(removed, *params.ntn_tensor, i, added));
  }
  return g.relu(g.add(g.concat(slices), g.param(*params.ntn_bias)));
}

Val compare_ffnn(Graph& g, const ComparisonParams& params, Val removed, Val added) {
  check_width(g, params, removed, added);
  Val joined = g.concat({added, removed});
  return g.relu(g.add(g.matvec(*params.ff_w, joined), g.param(*params.ff_b)));
}

Val compare_similarity(Graph& g, Val removed, Val added) {
  return g.concat({g.euclidean_distance(removed, added), g.cosine_sim(removed, added)});
}

Val compare_subtract(Graph& g, Val removed, Val added) { return g.sub(removed, added); }

Val compare_multiply(Graph& g, Val removed, Val added) { return g.mul(removed, added); }

Val file_embedding(Graph& g, const ComparisonParams& params, const ComparisonMask& mask,
                   Val removed, Val added) {
  if (mask.bypass) return g.concat({removed, added});
  if (!mask.any_enabled()) {
    throw ConfigError("all comparison functions disabled; use the bypass variant instead");
  }
  std::vector<Val> parts;
  if (mask.ntn) parts.push_back(compare_ntn(g, params, removed, added));
  if (mask.ffnn) parts.push_back(compare_ffnn(g, params, removed, added));
  if (mask.similarity) parts.push_back(compare_similarity(g, removed, added));
  if (mask.subtract) parts.push_back(compare_subtract(g, removed, added));
  if (mask.multiply) parts.push_back(compare_multiply(g, removed, added));
  return g.concat(parts);
}

}  // namespace ccvec

#pragma once

// Second BLEU-4 implementation, written directly from the formula:
// BLEU = BP * (p1 * p2 * p3 * p4)^(1/4), BP = 1 if c > r else e^(1 - r/c),
// scaled to 0..100. Shares only the stated conventions with the production
// code (empty candidate scores 0, an order with no candidate n-grams
// contributes a factor of 1, any zero precision zeroes the score) and takes
// a different route: sorted-vector n-gram counting and pow() instead of
// hashed counting and exp/log.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace testsupport {

inline std::map<std::vector<std::string>, int> oracle_ngrams(
    const std::vector<std::string>& tokens, size_t n) {
  std::map<std::vector<std::string>, int> counts;
  if (tokens.size() < n) return counts;
  for (size_t i = 0; i + n <= tokens.size(); ++i) {
    counts[std::vector<std::string>(tokens.begin() + static_cast<long>(i),
                                    tokens.begin() + static_cast<long>(i + n))]++;
  }
  return counts;
}

inline double oracle_bleu4(const std::vector<std::string>& candidate,
                           const std::vector<std::string>& reference) {
  if (candidate.empty()) return 0.0;
  double product = 1.0;
  for (size_t n = 1; n <= 4; ++n) {
    auto cand = oracle_ngrams(candidate, n);
    if (cand.empty()) continue;  // factor 1
    auto ref = oracle_ngrams(reference, n);
    double matched = 0.0, total = 0.0;
    for (const auto& [gram, count] : cand) {
      total += count;
      auto it = ref.find(gram);
      if (it != ref.end()) matched += std::min(count, it->second);
    }
    if (matched == 0.0) return 0.0;
    product *= matched / total;
  }
  double c = static_cast<double>(candidate.size());
  double r = static_cast<double>(reference.size());
  double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
  return 100.0 * bp * std::pow(product, 0.25);
}

}  // namespace testsupport

#include "ccvec/tasks.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include "ccvec/errors.hpp"
#include "ccvec/tensorize.hpp"
#include "ccvec/util.hpp"
#include "json.hpp"

namespace ccvec {

std::vector<EmbeddingRecord> extract_embeddings(const Model& model,
                                                const std::vector<PatchChange>& corpus,
                                                bool keep_file_vectors) {
  std::vector<EmbeddingRecord> records(corpus.size());
  parallel_for(corpus.size(), [&](size_t i) {
    ChangeTensor tensor = encode_change(corpus[i], model.config().shape, model.code_vocab());
    Graph g(/*record=*/false);
    Model::Forward fwd = model.forward(g, tensor);
    EmbeddingRecord rec;
    rec.id = corpus[i].id;
    rec.vector = g.value(fwd.patch_vec);
    if (keep_file_vectors) {
      std::vector<std::vector<double>> files;
      files.reserve(fwd.file_vecs.size());
      for (Val v : fwd.file_vecs) files.push_back(g.value(v));
      rec.file_vectors = std::move(files);
    }
    records[i] = std::move(rec);
  });
  return records;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("cosine_similarity: width mismatch");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return ab / (std::sqrt(aa) * std::sqrt(bb));
}

std::vector<std::string> flatten_code_tokens(const PatchChange& patch) {
  std::vector<std::string> tokens;
  for (const FileChange& f : patch.files) {
    for (const Hunk& h : f.hunks) {
      for (const TokenLine& line : h.removed) {
        tokens.insert(tokens.end(), line.begin(), line.end());
      }
      for (const TokenLine& line : h.added) {
        tokens.insert(tokens.end(), line.begin(), line.end());
      }
    }
  }
  return tokens;
}

namespace {

std::unordered_map<std::string, double> token_bag(const std::vector<std::string>& tokens) {
  std::unordered_map<std::string, double> bag;
  for (const std::string& t : tokens) bag[t] += 1.0;
  return bag;
}

}  // namespace

RetrievalIndex build_retrieval_index(const Model& model,
                                     const std::vector<PatchChange>& corpus) {
  std::vector<EmbeddingRecord> embeddings = extract_embeddings(model, corpus);
  RetrievalIndex index;
  index.entries.resize(corpus.size());
  for (size_t i = 0; i < corpus.size(); ++i) {
    IndexEntry& e = index.entries[i];
    e.id = corpus[i].id;
    e.vector = std::move(embeddings[i].vector);
    e.message = corpus[i].message_tokens;
    e.code_tokens = flatten_code_tokens(corpus[i]);
    e.code_bag = token_bag(e.code_tokens);
  }
  return index;
}

namespace {

// stage 1 scores -> top-k candidate positions ordered by (score desc, index)
std::vector<size_t> top_k_by_score(const std::vector<double>& scores, int k) {
  std::vector<size_t> order(scores.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return scores[a] > scores[b];
  });
  size_t keep = std::min<size_t>(order.size(), static_cast<size_t>(k));
  order.resize(keep);
  return order;
}

RetrievalResult second_stage(const std::string& query_id,
                             const std::vector<std::string>& query_code_tokens,
                             const RetrievalIndex& index, const std::vector<double>& stage1,
                             const std::vector<size_t>& shortlist, bool bleu_stage) {
  RetrievalResult best;
  best.query_id = query_id;
  bool first = true;
  double best_bleu = -1.0;
  for (size_t pos : shortlist) {
    const IndexEntry& entry = index.entries[pos];
    double bleu = 0.0;
    if (bleu_stage && !query_code_tokens.empty()) {
      bleu = bleu4(entry.code_tokens, query_code_tokens);
    }
    // shortlist is already (cosine desc, index asc), so a strict > keeps
    // the higher-cosine, earlier entry on ties
    if (first || bleu > best_bleu) {
      first = false;
      best_bleu = bleu;
      best.chosen_id = entry.id;
      best.message = entry.message;
      best.cosine = stage1[pos];
      best.bleu_stage2 = bleu;
    }
    if (!bleu_stage) break;  // plain nearest neighbour
  }
  return best;
}

}  // namespace

RetrievalResult retrieve_message(const EmbeddingRecord& query,
                                 const std::vector<std::string>& query_code_tokens,
                                 const RetrievalIndex& index, int k, bool bleu_stage) {
  if (index.entries.empty()) throw ConfigError("retrieval index is empty");
  if (k < 1) throw ConfigError("retrieval k must be >= 1");
  std::vector<double> scores(index.entries.size());
  for (size_t i = 0; i < index.entries.size(); ++i) {
    scores[i] = cosine_similarity(query.vector, index.entries[i].vector);
  }
  std::vector<size_t> shortlist = top_k_by_score(scores, k);
  return second_stage(query.id, query_code_tokens, index, scores, shortlist, bleu_stage);
}

namespace {

double bag_cosine(const std::unordered_map<std::string, double>& a,
                  const std::unordered_map<std::string, double>& b) {
  if (a.empty() || b.empty()) return 0.0;
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (const auto& [tok, n] : a) {
    aa += n * n;
    auto it = b.find(tok);
    if (it != b.end()) ab += n * it->second;
  }
  for (const auto& [tok, n] : b) bb += n * n;
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return ab / (std::sqrt(aa) * std::sqrt(bb));
}

}  // namespace

RetrievalResult nngen_baseline(const std::string& query_id,
                               const std::vector<std::string>& query_code_tokens,
                               const RetrievalIndex& index, int k, bool bleu_stage) {
  if (index.entries.empty()) throw ConfigError("retrieval index is empty");
  if (k < 1) throw ConfigError("retrieval k must be >= 1");
  std::unordered_map<std::string, double> query_bag = token_bag(query_code_tokens);
  std::vector<double> scores(index.entries.size());
  for (size_t i = 0; i < index.entries.size(); ++i) {
    scores[i] = bag_cosine(query_bag, index.entries[i].code_bag);
  }
  std::vector<size_t> shortlist = top_k_by_score(scores, k);
  return second_stage(query_id, query_code_tokens, index, scores, shortlist, bleu_stage);
}

// ---- BLEU-4 ----

namespace {

constexpr int kBleuOrder = 4;

// n-gram multiset keyed by token positions joined with an unlikely separator
std::unordered_map<std::string, int> ngram_counts(const TokenLine& tokens, int n) {
  std::unordered_map<std::string, int> counts;
  if (static_cast<int>(tokens.size()) < n) return counts;
  for (size_t i = 0; i + static_cast<size_t>(n) <= tokens.size(); ++i) {
    std::string key;
    for (int j = 0; j < n; ++j) {
      key += tokens[i + static_cast<size_t>(j)];
      key.push_back('\x1f');
    }
    ++counts[key];
  }
  return counts;
}

struct NgramStats {
  double matched = 0;
  double total = 0;
};

NgramStats clipped_matches(const TokenLine& candidate, const TokenLine& reference, int n) {
  NgramStats stats;
  std::unordered_map<std::string, int> cand = ngram_counts(candidate, n);
  if (cand.empty()) return stats;
  std::unordered_map<std::string, int> ref = ngram_counts(reference, n);
  for (const auto& [key, count] : cand) {
    stats.total += count;
    auto it = ref.find(key);
    if (it != ref.end()) stats.matched += std::min(count, it->second);
  }
  return stats;
}

double combine_bleu(const double matched[4], const double total[4], double candidate_length,
                    double reference_length) {
  double log_sum = 0.0;
  for (int n = 0; n < kBleuOrder; ++n) {
    if (total[n] == 0.0) continue;  // no n-grams of this order: factor 1
    if (matched[n] == 0.0) return 0.0;
    log_sum += std::log(matched[n] / total[n]) / kBleuOrder;
  }
  double bp = candidate_length > reference_length
                  ? 1.0
                  : std::exp(1.0 - reference_length / candidate_length);
  return 100.0 * bp * std::exp(log_sum);
}

}  // namespace

double bleu4(const TokenLine& candidate, const TokenLine& reference) {
  if (reference.empty()) throw ConfigError("bleu4: reference must be non-empty");
  if (candidate.empty()) return 0.0;
  double matched[4], total[4];
  for (int n = 1; n <= kBleuOrder; ++n) {
    NgramStats s = clipped_matches(candidate, reference, n);
    matched[n - 1] = s.matched;
    total[n - 1] = s.total;
  }
  return combine_bleu(matched, total, static_cast<double>(candidate.size()),
                      static_cast<double>(reference.size()));
}

void BleuAccumulator::add(const TokenLine& candidate, const TokenLine& reference) {
  if (reference.empty()) throw ConfigError("bleu4: reference must be non-empty");
  for (int n = 1; n <= kBleuOrder; ++n) {
    NgramStats s = clipped_matches(candidate, reference, n);
    matched_[n - 1] += s.matched;
    total_[n - 1] += s.total;
  }
  candidate_length_ += static_cast<double>(candidate.size());
  reference_length_ += static_cast<double>(reference.size());
  ++pairs_;
}

double BleuAccumulator::corpus_score() const {
  if (pairs_ == 0 || candidate_length_ == 0.0) return 0.0;
  return combine_bleu(matched_, total_, candidate_length_, reference_length_);
}

// ---- classification metrics ----

ClassificationMetrics classification_metrics(const std::vector<int>& labels,
                                             const std::vector<double>& scores,
                                             double threshold) {
  if (labels.size() != scores.size() || labels.empty()) {
    throw ConfigError("classification_metrics: labels and scores must match and be non-empty");
  }
  double tp = 0, fp = 0, fn = 0, tn = 0;
  for (size_t i = 0; i < labels.size(); ++i) {
    bool predicted = scores[i] >= threshold;
    if (labels[i] == 1) {
      predicted ? ++tp : ++fn;
    } else {
      predicted ? ++fp : ++tn;
    }
  }
  ClassificationMetrics m;
  double n = static_cast<double>(labels.size());
  m.accuracy = (tp + tn) / n;
  m.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  m.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  m.f1 = m.precision + m.recall > 0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                                    : 0.0;

  double positives = tp + fn;
  double negatives = fp + tn;
  if (positives == 0.0 || negatives == 0.0) {
    m.auc_note = "undefined: labels contain a single class";
    return m;
  }

  // rank-based AUC with averaged ranks on ties
  std::vector<size_t> order(labels.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return scores[a] < scores[b]; });
  std::vector<double> rank(labels.size(), 0.0);
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    double shared = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (size_t t = i; t <= j; ++t) rank[order[t]] = shared;
    i = j + 1;
  }
  double positive_rank_sum = 0.0;
  for (size_t t = 0; t < labels.size(); ++t) {
    if (labels[t] == 1) positive_rank_sum += rank[t];
  }
  m.auc = (positive_rank_sum - positives * (positives + 1.0) / 2.0) / (positives * negatives);
  return m;
}

// ---- feature export ----

namespace {
std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}
}  // namespace

void export_features(const std::vector<EmbeddingRecord>& records, const std::string& path,
                     ExportFormat format) {
  if (records.empty()) throw ConfigError("export_features: no records");
  size_t w = records[0].vector.size();
  for (const EmbeddingRecord& r : records) {
    if (r.vector.size() != w) {
      throw ConfigError("export_features: inconsistent vector width for record '" + r.id + "'");
    }
  }
  std::ostringstream out;
  if (format == ExportFormat::jsonl) {
    for (const EmbeddingRecord& r : records) {
      nlohmann::json j = {{"id", r.id}, {"vector", r.vector}};
      out << j.dump() << '\n';
    }
  } else {
    out << "id";
    for (size_t i = 0; i < w; ++i) out << ",v" << i;
    out << '\n';
    for (const EmbeddingRecord& r : records) {
      out << r.id;
      for (double v : r.vector) out << ',' << format_double(v);
      out << '\n';
    }
  }
  write_file_atomic(path, out.str());
}

// ---- linear probe ----

double LinearProbe::score(std::span<const double> features) const {
  if (features.size() != weights.size()) throw ShapeError("linear probe width mismatch");
  double s = bias;
  for (size_t i = 0; i < features.size(); ++i) s += weights[i] * features[i];
  return 1.0 / (1.0 + std::exp(-s));
}

LinearProbe train_linear_probe(const std::vector<EmbeddingRecord>& records,
                               const std::vector<int>& labels, int epochs,
                               double learning_rate, uint64_t seed) {
  if (records.size() != labels.size() || records.empty()) {
    throw ConfigError("train_linear_probe: records and labels must match and be non-empty");
  }
  size_t w = records[0].vector.size();
  LinearProbe probe;
  probe.weights.assign(w, 0.0);
  Rng rng(seed);
  std::vector<size_t> order(records.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (int e = 0; e < epochs; ++e) {
    rng.shuffle(order);
    for (size_t idx : order) {
      double p = probe.score(records[idx].vector);
      double err = p - static_cast<double>(labels[idx]);
      for (size_t i = 0; i < w; ++i) {
        probe.weights[i] -= learning_rate * err * records[idx].vector[i];
      }
      probe.bias -= learning_rate * err;
    }
  }
  return probe;
}

}  // namespace ccvec

#pragma once

#include <optional>
#include <span>
#include <unordered_map>
#include <string>
#include <vector>

#include "ccvec/model.hpp"

namespace ccvec {

struct EmbeddingRecord {
  std::string id;
  std::vector<double> vector;
  // per-file embeddings, kept only on request
  std::optional<std::vector<std::vector<double>>> file_vectors;
};

// Deterministic, order-preserving patch embeddings (dropout off). Patches
// are encoded independently, so extraction parallelizes across workers.
std::vector<EmbeddingRecord> extract_embeddings(const Model& model,
                                                const std::vector<PatchChange>& corpus,
                                                bool keep_file_vectors = false);

double cosine_similarity(std::span<const double> a, std::span<const double> b);  // 0 if a or b is 0

// ---- message retrieval ----

struct IndexEntry {
  std::string id;
  std::vector<double> vector;
  TokenLine message;
  std::vector<std::string> code_tokens;  // flattened change tokens in diff order
  std::unordered_map<std::string, double> code_bag;  // term frequencies of the same
};

struct RetrievalIndex {
  std::vector<IndexEntry> entries;
};

RetrievalIndex build_retrieval_index(const Model& model, const std::vector<PatchChange>& corpus);
std::vector<std::string> flatten_code_tokens(const PatchChange& patch);

struct RetrievalResult {
  std::string query_id;
  std::string chosen_id;
  TokenLine message;
  double cosine = 0.0;
  double bleu_stage2 = 0.0;
};

// Two-stage retrieval: top-k index entries by cosine similarity of the
// vectors, then the candidate whose code tokens score highest BLEU-4 against
// the query's code tokens. Ties fall back to higher cosine, then index
// order. bleu_stage=false returns the plain nearest neighbour.
RetrievalResult retrieve_message(const EmbeddingRecord& query,
                                 const std::vector<std::string>& query_code_tokens,
                                 const RetrievalIndex& index, int k, bool bleu_stage = true);

// Same two-stage procedure with stage one replaced by cosine over
// term-frequency bags of code tokens.
RetrievalResult nngen_baseline(const std::string& query_id,
                               const std::vector<std::string>& query_code_tokens,
                               const RetrievalIndex& index, int k, bool bleu_stage = true);

// ---- BLEU-4 ----
// Geometric mean of modified 1..4-gram precisions with brevity penalty,
// scaled to [0, 100]. Unsmoothed: any zero precision zeroes the score.
// Orders with no candidate n-grams contribute a factor of 1, which keeps
// bleu4(x, x) = 100 for candidates shorter than 4 tokens. An empty candidate
// scores 0; an empty reference is an error.
double bleu4(const TokenLine& candidate, const TokenLine& reference);

// Corpus-level variant: clipped matches, totals, and lengths aggregate over
// all pairs before the precisions and brevity penalty are formed.
class BleuAccumulator {
 public:
  void add(const TokenLine& candidate, const TokenLine& reference);
  double corpus_score() const;
  size_t pair_count() const { return pairs_; }

 private:
  double matched_[4] = {0, 0, 0, 0};
  double total_[4] = {0, 0, 0, 0};
  double candidate_length_ = 0;
  double reference_length_ = 0;
  size_t pairs_ = 0;
};

// ---- classification metrics ----

struct ClassificationMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::optional<double> auc;  // empty when labels are single-class
  std::string auc_note;
};

// Threshold rule: score >= threshold predicts positive. AUC is rank-based
// (ties share averaged ranks), equivalent to trapezoidal ROC integration.
ClassificationMetrics classification_metrics(const std::vector<int>& labels,
                                             const std::vector<double>& scores,
                                             double threshold);

// ---- feature export ----

enum class ExportFormat { jsonl, csv };

// JSONL lines {"id", "vector"} or CSV with header id,v0,...,v{n-1}. Record
// order and float formatting are stable across runs.
void export_features(const std::vector<EmbeddingRecord>& records, const std::string& path,
                     ExportFormat format);

// ---- linear probe ----
// Logistic regression on exported features; a smoke-test stand-in for the
// external classifiers that consume them.
struct LinearProbe {
  std::vector<double> weights;
  double bias = 0.0;
  double score(std::span<const double> features) const;  // probability of class 1
};

LinearProbe train_linear_probe(const std::vector<EmbeddingRecord>& records,
                               const std::vector<int>& labels, int epochs = 200,
                               double learning_rate = 0.1, uint64_t seed = 1);

}  // namespace ccvec

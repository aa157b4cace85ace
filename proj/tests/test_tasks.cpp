#include "ccvec/tasks.hpp"

#include <cmath>

#include "ccvec/errors.hpp"
#include "ccvec/synthetic.hpp"
#include "ccvec/train.hpp"
#include "ccvec/util.hpp"
#include "doctest.h"
#include "support/bleu_oracle.hpp"
#include "support/test_util.hpp"

using namespace ccvec;

namespace {

struct TaskFixture {
  std::vector<PatchChange> corpus;
  Model model;
};

TaskFixture make_task_fixture(int patches = 6) {
  SyntheticOptions syn;
  syn.patches = patches;
  syn.seed = 33;
  std::vector<PatchChange> corpus = make_synthetic_corpus(syn);
  auto [code_vocab, msg_vocab] = build_vocabularies(corpus, 1, 1, 1000);
  ModelConfig mc;
  mc.shape = {2, 2, 2, 4};
  mc.dims = {6, 3, 3, 8};
  Model model(mc, std::move(code_vocab), std::move(msg_vocab), 77);
  return TaskFixture{std::move(corpus), std::move(model)};
}

IndexEntry entry(std::string id, std::vector<double> vec, TokenLine message,
                 std::vector<std::string> code) {
  IndexEntry e{std::move(id), std::move(vec), std::move(message), std::move(code), {}};
  for (const std::string& t : e.code_tokens) e.code_bag[t] += 1.0;
  return e;
}

}  // namespace

TEST_CASE("extract_embeddings is deterministic with the advertised width") {
  TaskFixture fx = make_task_fixture();
  std::vector<EmbeddingRecord> a = extract_embeddings(fx.model, fx.corpus);
  std::vector<EmbeddingRecord> b = extract_embeddings(fx.model, fx.corpus);
  REQUIRE(a.size() == fx.corpus.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].id == fx.corpus[i].id);
    CHECK(a[i].vector == b[i].vector);
    CHECK(a[i].vector.size() == static_cast<size_t>(fx.model.patch_embedding_dim()));
  }
}

TEST_CASE("all-PAD patches embed identically") {
  TaskFixture fx = make_task_fixture();
  PatchChange empty1, empty2;
  empty1.id = "e1";
  empty2.id = "e2";
  std::vector<EmbeddingRecord> recs = extract_embeddings(fx.model, {empty1, empty2});
  CHECK(recs[0].vector == recs[1].vector);
}

TEST_CASE("per-file vectors are returned on request") {
  TaskFixture fx = make_task_fixture();
  std::vector<EmbeddingRecord> recs = extract_embeddings(fx.model, fx.corpus, true);
  REQUIRE(recs[0].file_vectors.has_value());
  CHECK(recs[0].file_vectors->size() == 2);
  CHECK((*recs[0].file_vectors)[0].size() ==
        static_cast<size_t>(fx.model.file_embedding_dim()));
}

TEST_CASE("cosine_similarity conventions") {
  std::vector<double> a{1.0, 0.0}, b{0.0, 1.0}, z{0.0, 0.0};
  CHECK(cosine_similarity(a, a) == doctest::Approx(1.0));
  CHECK(cosine_similarity(a, b) == doctest::Approx(0.0));
  CHECK(cosine_similarity(a, z) == 0.0);
}

TEST_CASE("retrieve_message picks by cosine then BLEU") {
  RetrievalIndex index;
  index.entries.push_back(entry("e1", {2.0, 0.0}, {"fix", "alpha"}, {"alpha", "(", ")"}));
  index.entries.push_back(entry("e2", {0.6, 0.8}, {"fix", "beta"}, {"beta", "(", ")"}));
  index.entries.push_back(entry("e3", {0.0, 1.0}, {"fix", "gamma"}, {"gamma", "(", ")"}));

  EmbeddingRecord query;
  query.id = "q";
  query.vector = {1.0, 0.0};  // hand cosines: 1.0, 0.6, 0.0

  SUBCASE("k=1 takes the top cosine") {
    RetrievalResult r = retrieve_message(query, {"alpha", "(", ")"}, index, 1);
    CHECK(r.chosen_id == "e1");
    CHECK(r.message == TokenLine{"fix", "alpha"});
    CHECK(r.cosine == doctest::Approx(1.0));
  }
  SUBCASE("the BLEU stage can override cosine order inside the shortlist") {
    RetrievalResult r = retrieve_message(query, {"beta", "(", ")"}, index, 3);
    CHECK(r.chosen_id == "e2");  // exact code match wins stage two
    CHECK(r.bleu_stage2 == doctest::Approx(100.0));
  }
  SUBCASE("single-entry index returns that entry") {
    RetrievalIndex one;
    one.entries.push_back(index.entries[2]);
    RetrievalResult r = retrieve_message(query, {"x"}, one, 5);
    CHECK(r.chosen_id == "e3");
  }
  SUBCASE("empty index is an error") {
    RetrievalIndex none;
    CHECK_THROWS_AS(retrieve_message(query, {"x"}, none, 1), ConfigError);
  }
}

TEST_CASE("a query equal to an index entry retrieves its own message") {
  TaskFixture fx = make_task_fixture(6);
  RetrievalIndex index = build_retrieval_index(fx.model, fx.corpus);
  for (size_t i = 0; i < fx.corpus.size(); ++i) {
    EmbeddingRecord query{fx.corpus[i].id, index.entries[i].vector, std::nullopt};
    RetrievalResult r = retrieve_message(query, index.entries[i].code_tokens, index,
                                         static_cast<int>(index.entries.size()));
    CHECK(r.chosen_id == fx.corpus[i].id);
    CHECK(r.message == fx.corpus[i].message_tokens);
  }
}

TEST_CASE("nngen_baseline bag cosine behavior") {
  RetrievalIndex index;
  index.entries.push_back(entry("e1", {}, {"fix", "a"}, {"a"}));
  index.entries.push_back(entry("e2", {}, {"fix", "b"}, {"b"}));

  SUBCASE("identical code finds its entry") {
    RetrievalResult r = nngen_baseline("q", {"a"}, index, 2);
    CHECK(r.chosen_id == "e1");
  }
  SUBCASE("bag {a:2} against {a:1} and {b:1} picks the a entry") {
    RetrievalResult r = nngen_baseline("q", {"a", "a"}, index, 1);
    CHECK(r.chosen_id == "e1");
    CHECK(r.cosine == doctest::Approx(1.0));
  }
  SUBCASE("disjoint tokens fall through to the BLEU stage over the shortlist") {
    RetrievalIndex idx2;
    idx2.entries.push_back(entry("e1", {}, {"one"}, {"x", "y"}));
    idx2.entries.push_back(entry("e2", {}, {"two"}, {"w", "v"}));
    RetrievalResult r = nngen_baseline("q", {"q", "q"}, idx2, 2);
    CHECK(r.cosine == 0.0);
    CHECK(r.bleu_stage2 == 0.0);
    CHECK(r.chosen_id == "e1");  // every stage ties, index order decides
  }
}

TEST_CASE("bleu4 fixed points") {
  TokenLine sentence{"fix", "null", "check", "here"};
  CHECK(bleu4(sentence, sentence) == doctest::Approx(100.0));
  CHECK(bleu4({}, sentence) == 0.0);
  CHECK_THROWS_AS(bleu4(sentence, {}), ConfigError);
  // short identities stay exact thanks to the missing-order convention
  CHECK(bleu4({"a"}, {"a"}) == doctest::Approx(100.0));
  CHECK(bleu4({"a", "b"}, {"a", "b"}) == doctest::Approx(100.0));
  // unsmoothed: a zero precision zeroes the sentence
  CHECK(bleu4({"x", "y", "z", "w"}, {"a", "b", "c", "d"}) == 0.0);
}

TEST_CASE("bleu4 agrees with the independent oracle on random pairs") {
  // candidates are mutated copies of the reference so n-gram overlap (and
  // with it every branch of the formula) actually occurs
  Rng rng(101);
  const std::vector<std::string> alphabet{"a", "b", "c", "d", "e"};
  int nontrivial = 0;
  for (int trial = 0; trial < 20; ++trial) {
    TokenLine ref;
    size_t rl = 4 + rng.next_below(8);
    for (size_t i = 0; i < rl; ++i) ref.push_back(alphabet[rng.next_below(alphabet.size())]);
    TokenLine cand = ref;
    size_t edits = rng.next_below(4);
    for (size_t e = 0; e < edits && !cand.empty(); ++e) {
      size_t pos = rng.next_below(cand.size());
      if (rng.bernoulli(0.5)) {
        cand[pos] = alphabet[rng.next_below(alphabet.size())];
      } else {
        cand.erase(cand.begin() + static_cast<long>(pos));
      }
    }
    if (cand.empty()) cand.push_back(alphabet[0]);
    double mine = bleu4(cand, ref);
    double oracle = testsupport::oracle_bleu4(cand, ref);
    CHECK(std::abs(mine - oracle) < 1e-6);
    if (mine > 0.0 && mine < 100.0) ++nontrivial;
  }
  CHECK(nontrivial > 3);  // the sample exercises more than the trivial branches
}

TEST_CASE("bleu4 is invariant under consistent token renaming") {
  Rng rng(103);
  const std::vector<std::string> alphabet{"a", "b", "c", "d"};
  const std::vector<std::string> renamed{"w", "x", "y", "z"};
  for (int trial = 0; trial < 30; ++trial) {
    TokenLine cand, ref, cand2, ref2;
    size_t cl = 1 + rng.next_below(8);
    size_t rl = 1 + rng.next_below(8);
    for (size_t i = 0; i < cl; ++i) {
      size_t t = rng.next_below(alphabet.size());
      cand.push_back(alphabet[t]);
      cand2.push_back(renamed[t]);
    }
    for (size_t i = 0; i < rl; ++i) {
      size_t t = rng.next_below(alphabet.size());
      ref.push_back(alphabet[t]);
      ref2.push_back(renamed[t]);
    }
    CHECK(bleu4(cand, ref) == doctest::Approx(bleu4(cand2, ref2)).epsilon(1e-12));
  }
}

TEST_CASE("corpus BLEU of identical pairs is exactly 100") {
  BleuAccumulator acc;
  acc.add({"fix", "leak"}, {"fix", "leak"});
  acc.add({"add", "timer", "support"}, {"add", "timer", "support"});
  acc.add({"x"}, {"x"});
  CHECK(acc.corpus_score() == doctest::Approx(100.0));
  CHECK(acc.pair_count() == 3);
}

TEST_CASE("corpus BLEU aggregates counts rather than averaging scores") {
  BleuAccumulator acc;
  acc.add({"a", "b", "c", "d"}, {"a", "b", "c", "d"});
  acc.add({"q", "r"}, {"s", "t"});  // contributes totals but no matches
  double score = acc.corpus_score();
  CHECK(score > 0.0);
  CHECK(score < 100.0);
}

TEST_CASE("classification metrics reproduce the confusion-matrix example") {
  // TP=3 FP=1 FN=2 TN=4
  std::vector<int> labels{1, 1, 1, 1, 1, 0, 0, 0, 0, 0};
  std::vector<double> scores{0.9, 0.9, 0.9, 0.1, 0.1, 0.8, 0.2, 0.2, 0.2, 0.2};
  ClassificationMetrics m = classification_metrics(labels, scores, 0.5);
  CHECK(m.accuracy == doctest::Approx(0.7));
  CHECK(m.precision == doctest::Approx(0.75));
  CHECK(m.recall == doctest::Approx(0.6));
  CHECK(m.f1 == doctest::Approx(0.6667).epsilon(1e-3));
}

TEST_CASE("classification metrics AUC conventions") {
  SUBCASE("perfect separation") {
    std::vector<int> labels{0, 0, 1, 1};
    std::vector<double> scores{0.1, 0.2, 0.8, 0.9};
    ClassificationMetrics m = classification_metrics(labels, scores, 0.5);
    REQUIRE(m.auc.has_value());
    CHECK(*m.auc == doctest::Approx(1.0));
    CHECK(m.accuracy == doctest::Approx(1.0));
    CHECK(m.f1 == doctest::Approx(1.0));
  }
  SUBCASE("all scores tied on balanced labels") {
    std::vector<int> labels{0, 1, 0, 1};
    std::vector<double> scores{0.4, 0.4, 0.4, 0.4};
    ClassificationMetrics m = classification_metrics(labels, scores, 0.5);
    REQUIRE(m.auc.has_value());
    CHECK(*m.auc == doctest::Approx(0.5));
  }
  SUBCASE("single-class labels leave AUC undefined but keep the rest") {
    std::vector<int> labels{1, 1, 1};
    std::vector<double> scores{0.9, 0.8, 0.1};
    ClassificationMetrics m = classification_metrics(labels, scores, 0.5);
    CHECK(!m.auc.has_value());
    CHECK(!m.auc_note.empty());
    CHECK(m.recall == doctest::Approx(2.0 / 3.0));
  }
}

TEST_CASE("AUC is invariant under strictly monotone score transforms") {
  Rng rng(107);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> labels;
    std::vector<double> scores, squashed;
    for (int i = 0; i < 30; ++i) {
      labels.push_back(rng.bernoulli(0.4) ? 1 : 0);
      double s = rng.uniform(-3.0, 3.0);
      scores.push_back(s);
      squashed.push_back(1.0 / (1.0 + std::exp(-2.0 * s)) + 5.0);
    }
    bool has_pos = false, has_neg = false;
    for (int l : labels) (l ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg) continue;
    ClassificationMetrics a = classification_metrics(labels, scores, 0.0);
    ClassificationMetrics b = classification_metrics(labels, squashed, 0.0);
    REQUIRE(a.auc.has_value());
    REQUIRE(b.auc.has_value());
    CHECK(*a.auc == doctest::Approx(*b.auc).epsilon(1e-12));
  }
}

TEST_CASE("export_features formats") {
  testsupport::TempDir dir("export");
  std::vector<EmbeddingRecord> records{
      {"p1", {0.5, -1.25, 3.0, 0.0}, std::nullopt},
      {"p2", {1.0, 2.0, -0.5, 4.25}, std::nullopt},
  };

  SUBCASE("jsonl lines carry id and full-width vectors") {
    std::string path = dir.file("f.jsonl");
    export_features(records, path, ExportFormat::jsonl);
    std::string text = read_text_file(path);
    CHECK(text.find("\"id\":\"p1\"") != std::string::npos);
    CHECK(text.find("\"vector\":[0.5,-1.25,3.0,0.0]") != std::string::npos);
    size_t lines = static_cast<size_t>(std::count(text.begin(), text.end(), '\n'));
    CHECK(lines == 2);
  }
  SUBCASE("csv header enumerates the columns") {
    std::string path = dir.file("f.csv");
    export_features(records, path, ExportFormat::csv);
    std::string text = read_text_file(path);
    CHECK(text.rfind("id,v0,v1,v2,v3\n", 0) == 0);
    CHECK(text.find("p2,1,2,-0.5,4.25") != std::string::npos);
  }
  SUBCASE("mixed widths are rejected") {
    std::vector<EmbeddingRecord> bad = records;
    bad[1].vector.pop_back();
    CHECK_THROWS_AS(export_features(bad, dir.file("bad.jsonl"), ExportFormat::jsonl),
                    ConfigError);
  }
  SUBCASE("export is byte-stable across runs") {
    std::string p1 = dir.file("s1.jsonl"), p2 = dir.file("s2.jsonl");
    export_features(records, p1, ExportFormat::jsonl);
    export_features(records, p2, ExportFormat::jsonl);
    CHECK(read_text_file(p1) == read_text_file(p2));
  }
}

TEST_CASE("linear probe separates linearly separable features") {
  Rng rng(111);
  std::vector<EmbeddingRecord> records;
  std::vector<int> labels;
  for (int i = 0; i < 40; ++i) {
    int label = i % 2;
    double base = label ? 1.0 : -1.0;
    records.push_back({"r" + std::to_string(i),
                       {base + rng.uniform(-0.3, 0.3), rng.uniform(-1.0, 1.0)},
                       std::nullopt});
    labels.push_back(label);
  }
  LinearProbe probe = train_linear_probe(records, labels, 100, 0.5, 3);
  std::vector<double> scores;
  for (const EmbeddingRecord& r : records) scores.push_back(probe.score(r.vector));
  ClassificationMetrics m = classification_metrics(labels, scores, 0.5);
  CHECK(m.accuracy > 0.95);
  REQUIRE(m.auc.has_value());
  CHECK(*m.auc > 0.99);
}

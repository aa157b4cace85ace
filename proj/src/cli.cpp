#include "ccvec/cli.hpp"

#include <functional>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "ccvec/corpus.hpp"
#include "ccvec/errors.hpp"
#include "ccvec/synthetic.hpp"
#include "ccvec/tasks.hpp"
#include "ccvec/tensorize.hpp"
#include "ccvec/train.hpp"
#include "ccvec/util.hpp"
#include "json_support.hpp"

namespace ccvec::cli {

namespace {

// deferred flag -> TrainConfig application, so an explicit flag wins over a
// value loaded from --config
struct TrainFlags {
  CLI::App* app = nullptr;
  std::string config_path;
  std::vector<std::pair<CLI::Option*, std::function<void(TrainConfig&)>>> appliers;

  double learning_rate = 0, adam_beta1 = 0, adam_beta2 = 0, adam_eps = 0;
  double l2_lambda = 0, dropout_rate = 0, grad_clip_norm = 0;
  int batch_size = 0, epochs = 0;
  uint64_t seed = 0;
  int files = 0, hunks = 0, lines = 0, words = 0;
  int embed_dim = 0, gru_hidden = 0, ntn_slices = 0, fusion_hidden = 0;
  int code_min_count = 0, msg_min_count = 0, msg_max_size = 0;
  bool unshared_encoders = false, mask_pad = false;
  std::string disable_csv, ablation;

  void attach(CLI::App& a) {
    app = &a;
    a.add_option("--config", config_path, "JSON file with training configuration");
    auto opt = [&](const char* flag, auto& storage, auto apply, const char* help) {
      CLI::Option* o = a.add_option(flag, storage, help);
      appliers.emplace_back(o, [&storage, apply](TrainConfig& c) { apply(c, storage); });
      return o;
    };
    opt("--learning-rate", learning_rate,
        [](TrainConfig& c, double v) { c.learning_rate = v; }, "Adam learning rate");
    opt("--adam-beta1", adam_beta1, [](TrainConfig& c, double v) { c.adam_beta1 = v; },
        "Adam first-moment decay");
    opt("--adam-beta2", adam_beta2, [](TrainConfig& c, double v) { c.adam_beta2 = v; },
        "Adam second-moment decay");
    opt("--adam-eps", adam_eps, [](TrainConfig& c, double v) { c.adam_eps = v; },
        "Adam denominator epsilon");
    opt("--l2-lambda", l2_lambda, [](TrainConfig& c, double v) { c.l2_lambda = v; },
        "L2 regularization coefficient");
    opt("--dropout-rate", dropout_rate, [](TrainConfig& c, double v) { c.dropout_rate = v; },
        "dropout on the patch vector and hidden layer");
    opt("--grad-clip-norm", grad_clip_norm,
        [](TrainConfig& c, double v) { c.grad_clip_norm = v; },
        "global gradient norm cap, <= 0 disables");
    opt("--batch-size", batch_size, [](TrainConfig& c, int v) { c.batch_size = v; },
        "mini-batch size");
    opt("--epochs", epochs, [](TrainConfig& c, int v) { c.epochs = v; }, "training epochs");
    opt("--seed", seed, [](TrainConfig& c, uint64_t v) { c.seed = v; },
        "seed for initialization, shuffling, dropout");
    opt("--files", files, [](TrainConfig& c, int v) { c.shape.files = v; },
        "file slots per patch");
    opt("--hunks", hunks, [](TrainConfig& c, int v) { c.shape.hunks = v; },
        "hunk slots per file");
    opt("--lines", lines, [](TrainConfig& c, int v) { c.shape.lines = v; },
        "line slots per hunk");
    opt("--words", words, [](TrainConfig& c, int v) { c.shape.words = v; },
        "word slots per line");
    opt("--embed-dim", embed_dim, [](TrainConfig& c, int v) { c.dims.embed_dim = v; },
        "code token embedding width");
    opt("--gru-hidden", gru_hidden, [](TrainConfig& c, int v) { c.dims.gru_hidden = v; },
        "GRU hidden width per direction");
    opt("--ntn-slices", ntn_slices, [](TrainConfig& c, int v) { c.dims.ntn_slices = v; },
        "bilinear tensor slices (0: embedding width)");
    opt("--fusion-hidden", fusion_hidden,
        [](TrainConfig& c, int v) { c.dims.fusion_hidden = v; }, "fusion hidden layer width");
    opt("--code-min-count", code_min_count,
        [](TrainConfig& c, int v) { c.code_min_count = v; }, "code vocabulary cutoff");
    opt("--msg-min-count", msg_min_count, [](TrainConfig& c, int v) { c.msg_min_count = v; },
        "message vocabulary cutoff");
    opt("--msg-max-size", msg_max_size, [](TrainConfig& c, int v) { c.msg_max_size = v; },
        "message vocabulary size cap");

    CLI::Option* unshared = a.add_flag("--unshared-encoders", unshared_encoders,
                                       "separate encoder weights for removed/added code");
    appliers.emplace_back(unshared, [this](TrainConfig& c) {
      c.shared_encoders = !unshared_encoders;
    });
    CLI::Option* maskp =
        a.add_flag("--mask-pad", mask_pad, "exclude PAD positions from attention");
    appliers.emplace_back(maskp, [this](TrainConfig& c) { c.mask_pad = mask_pad; });
    CLI::Option* disable = a.add_option(
        "--disable", disable_csv, "comparison functions to drop: subset of nt,nn,sim,sub,mul");
    appliers.emplace_back(disable,
                          [this](TrainConfig& c) { c.mask = mask_from_disabled(disable_csv); });
    CLI::Option* abl =
        a.add_option("--ablation", ablation, "'all' bypasses the comparison layer entirely");
    appliers.emplace_back(abl, [this](TrainConfig& c) {
      if (ablation != "all") throw ConfigError("--ablation only accepts 'all'");
      c.mask = ComparisonMask{};
      c.mask.bypass = true;
    });
  }

  TrainConfig resolve() const {
    TrainConfig config;
    if (!config_path.empty()) {
      config = TrainConfig::from_json_string(read_text_file(config_path));
    }
    for (const auto& [option, apply] : appliers) {
      if (option->count() > 0) apply(config);
    }
    config.validate();
    return config;
  }
};

std::string default_sidecar(const std::string& out_path, const std::string& subcommand) {
  return out_path.empty() ? subcommand + ".run.json" : out_path + ".run.json";
}

void write_sidecar(const std::string& path, nlohmann::json resolved) {
  write_file_atomic(path, resolved.dump(2) + "\n");
}

std::string join_tokens(const TokenLine& tokens) {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

std::vector<TokenLine> read_token_lines(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::vector<TokenLine> lines;
  std::string line;
  while (std::getline(in, line)) {
    TokenLine tokens;
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) tokens.push_back(tok);
    lines.push_back(std::move(tokens));
  }
  return lines;
}

// ---- subcommand bodies ----

struct IngestArgs {
  std::string diff_path, msg_path, out_path, sidecar;
  std::string marker = "<nl>";
};

int run_ingest(const IngestArgs& a) {
  std::vector<RawPatch> patches = import_paired_files_raw(a.diff_path, a.msg_path, a.marker);
  save_corpus_jsonl(a.out_path, patches);
  std::cout << "ingested " << patches.size() << " patches -> " << a.out_path << "\n";
  write_sidecar(a.sidecar.empty() ? default_sidecar(a.out_path, "ingest") : a.sidecar,
                {{"subcommand", "ingest"},
                 {"diff", a.diff_path},
                 {"msg", a.msg_path},
                 {"out", a.out_path},
                 {"newline_marker", a.marker}});
  return 0;
}

struct VocabArgs {
  std::string corpus_path, out_path, sidecar;
  int code_min_count = 1, msg_min_count = 1, msg_max_size = 50000;
};

int run_vocab(const VocabArgs& a) {
  std::vector<PatchChange> corpus = load_corpus_jsonl(a.corpus_path);
  auto [code_vocab, msg_vocab] =
      build_vocabularies(corpus, a.code_min_count, a.msg_min_count, a.msg_max_size);
  nlohmann::json out = {{"code", vocabulary_to_json(code_vocab)},
                        {"message", vocabulary_to_json(msg_vocab)}};
  write_file_atomic(a.out_path, out.dump(2) + "\n");
  std::cout << "code vocabulary: " << code_vocab.size() << " entries, message vocabulary: "
            << msg_vocab.size() << " entries -> " << a.out_path << "\n";
  write_sidecar(a.sidecar.empty() ? default_sidecar(a.out_path, "vocab") : a.sidecar,
                {{"subcommand", "vocab"},
                 {"corpus", a.corpus_path},
                 {"out", a.out_path},
                 {"code_min_count", a.code_min_count},
                 {"msg_min_count", a.msg_min_count},
                 {"msg_max_size", a.msg_max_size}});
  return 0;
}

struct TrainArgs {
  std::string corpus_path, out_path, history_path, sidecar;
  std::vector<std::string> extra_corpora;
  TrainConfig config;
};

int run_train(const TrainArgs& a) {
  std::vector<PatchChange> corpus = load_corpus_jsonl(a.corpus_path);
  for (const std::string& extra : a.extra_corpora) {
    std::vector<PatchChange> more = load_corpus_jsonl(extra);
    corpus.insert(corpus.end(), std::make_move_iterator(more.begin()),
                  std::make_move_iterator(more.end()));
  }
  TrainedModel trained = train_from_corpus(corpus, a.config);
  for (size_t e = 0; e < trained.result.epoch_loss.size(); ++e) {
    std::cout << "epoch " << (e + 1) << " loss " << trained.result.epoch_loss[e] << "\n";
  }
  std::cout << "trained on " << trained.result.trainable_patches << " patches ("
            << trained.result.skipped_patches << " without in-vocabulary message words)\n";
  save_checkpoint(trained.model, a.config, a.out_path);
  std::cout << "checkpoint -> " << a.out_path << "\n";
  if (!a.history_path.empty()) {
    write_file_atomic(a.history_path,
                      nlohmann::json(trained.result.epoch_loss).dump() + "\n");
  }
  nlohmann::json sidecar = {{"subcommand", "train"},
                            {"corpus", a.corpus_path},
                            {"extra_corpora", a.extra_corpora},
                            {"out", a.out_path},
                            {"config", nlohmann::json::parse(a.config.to_json_string())}};
  write_sidecar(a.sidecar.empty() ? default_sidecar(a.out_path, "train") : a.sidecar, sidecar);
  return 0;
}

struct EmbedArgs {
  std::string model_path, corpus_path, out_path, sidecar;
  std::string format = "jsonl";
};

int run_embed(const EmbedArgs& a) {
  Checkpoint ckpt = load_checkpoint(a.model_path);
  std::vector<PatchChange> corpus = load_corpus_jsonl(a.corpus_path);
  std::vector<EmbeddingRecord> records = extract_embeddings(ckpt.model, corpus);
  ExportFormat format;
  if (a.format == "jsonl") {
    format = ExportFormat::jsonl;
  } else if (a.format == "csv") {
    format = ExportFormat::csv;
  } else {
    throw ConfigError("unknown export format '" + a.format + "' (expected jsonl or csv)");
  }
  export_features(records, a.out_path, format);
  std::cout << "wrote " << records.size() << " embeddings of width "
            << (records.empty() ? 0 : records[0].vector.size()) << " -> " << a.out_path << "\n";
  write_sidecar(a.sidecar.empty() ? default_sidecar(a.out_path, "embed") : a.sidecar,
                {{"subcommand", "embed"},
                 {"model", a.model_path},
                 {"corpus", a.corpus_path},
                 {"out", a.out_path},
                 {"format", a.format},
                 {"seed", ckpt.config.seed}});
  return 0;
}

struct RetrieveArgs {
  std::string model_path, index_path, query_path, out_path, sidecar;
  std::string baseline = "loggen";
  int k = 5;
  bool no_bleu_stage = false;
};

int run_retrieve(const RetrieveArgs& a) {
  if (a.baseline != "loggen" && a.baseline != "nngen") {
    throw ConfigError("--baseline must be loggen or nngen");
  }
  Checkpoint ckpt = load_checkpoint(a.model_path);
  std::vector<PatchChange> index_corpus = load_corpus_jsonl(a.index_path);
  std::vector<PatchChange> query_corpus = load_corpus_jsonl(a.query_path);
  RetrievalIndex index = build_retrieval_index(ckpt.model, index_corpus);
  std::vector<EmbeddingRecord> queries = extract_embeddings(ckpt.model, query_corpus);

  // index is immutable from here on; queries are independent
  std::vector<RetrievalResult> results(query_corpus.size());
  parallel_for(query_corpus.size(), [&](size_t i) {
    std::vector<std::string> code = flatten_code_tokens(query_corpus[i]);
    if (a.baseline == "loggen") {
      results[i] = retrieve_message(queries[i], code, index, a.k, !a.no_bleu_stage);
    } else {
      results[i] = nngen_baseline(query_corpus[i].id, code, index, a.k, !a.no_bleu_stage);
    }
  });
  std::ostringstream out;
  for (const RetrievalResult& r : results) {
    nlohmann::json j = {{"query_id", r.query_id},
                        {"chosen_id", r.chosen_id},
                        {"message", join_tokens(r.message)},
                        {"cosine", r.cosine},
                        {"bleu_stage2", r.bleu_stage2}};
    out << j.dump() << '\n';
  }
  write_file_atomic(a.out_path, out.str());
  std::cout << "retrieved messages for " << query_corpus.size() << " queries -> " << a.out_path
            << "\n";
  write_sidecar(a.sidecar.empty() ? default_sidecar(a.out_path, "retrieve") : a.sidecar,
                {{"subcommand", "retrieve"},
                 {"model", a.model_path},
                 {"index", a.index_path},
                 {"query", a.query_path},
                 {"out", a.out_path},
                 {"k", a.k},
                 {"bleu_stage", !a.no_bleu_stage},
                 {"baseline", a.baseline},
                 {"seed", ckpt.config.seed}});
  return 0;
}

struct EvalBleuArgs {
  std::string candidates_path, references_path, sidecar;
  bool sentence = false;
};

int run_eval_bleu(const EvalBleuArgs& a) {
  std::vector<TokenLine> candidates = read_token_lines(a.candidates_path);
  std::vector<TokenLine> references = read_token_lines(a.references_path);
  if (candidates.size() != references.size()) {
    throw ConfigError("candidate/reference line counts differ: " +
                      std::to_string(candidates.size()) + " != " +
                      std::to_string(references.size()));
  }
  BleuAccumulator corpus;
  for (size_t i = 0; i < candidates.size(); ++i) {
    corpus.add(candidates[i], references[i]);
    if (a.sentence) {
      std::cout << "sentence " << (i + 1) << " bleu4 " << bleu4(candidates[i], references[i])
                << "\n";
    }
  }
  std::cout << "corpus_bleu4 " << corpus.corpus_score() << "\n";
  write_sidecar(a.sidecar.empty() ? default_sidecar("", "eval-bleu") : a.sidecar,
                {{"subcommand", "eval-bleu"},
                 {"candidates", a.candidates_path},
                 {"references", a.references_path},
                 {"sentence", a.sentence}});
  return 0;
}

struct EvalClsArgs {
  std::string scores_path, labels_path, features_path, sidecar;
  double threshold = 0.5;
  bool probe = false;
  int probe_epochs = 200;
  uint64_t seed = 1;
};

int run_eval_cls(const EvalClsArgs& a) {
  auto parse_number = [](const std::string& line, const std::string& path) {
    try {
      size_t used = 0;
      double v = std::stod(line, &used);
      if (used != line.size()) throw std::invalid_argument(line);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("not a number in " + path + ": '" + line + "'");
    }
  };

  std::vector<int> labels;
  {
    std::istringstream in(read_text_file(a.labels_path));
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      double v = parse_number(line, a.labels_path);
      if (v != 0.0 && v != 1.0) {
        throw ConfigError("labels must be 0 or 1, got '" + line + "'");
      }
      labels.push_back(static_cast<int>(v));
    }
  }

  std::vector<double> scores;
  if (a.probe) {
    if (a.features_path.empty()) throw ConfigError("--probe requires --features");
    std::vector<EmbeddingRecord> records;
    std::istringstream in(read_text_file(a.features_path));
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded()) throw ConfigError("invalid JSONL in " + a.features_path);
      records.push_back({j.at("id").get<std::string>(),
                         j.at("vector").get<std::vector<double>>(), std::nullopt});
    }
    LinearProbe probe = train_linear_probe(records, labels, a.probe_epochs, 0.1, a.seed);
    scores.reserve(records.size());
    for (const EmbeddingRecord& r : records) scores.push_back(probe.score(r.vector));
  } else {
    if (a.scores_path.empty()) throw ConfigError("provide --scores or --features with --probe");
    std::istringstream in(read_text_file(a.scores_path));
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      scores.push_back(parse_number(line, a.scores_path));
    }
  }

  ClassificationMetrics m = classification_metrics(labels, scores, a.threshold);
  nlohmann::json out = {{"accuracy", m.accuracy},
                        {"precision", m.precision},
                        {"recall", m.recall},
                        {"f1", m.f1}};
  if (m.auc) {
    out["auc"] = *m.auc;
  } else {
    out["auc"] = nullptr;
    out["auc_note"] = m.auc_note;
  }
  std::cout << out.dump(2) << "\n";
  write_sidecar(a.sidecar.empty() ? default_sidecar("", "eval-cls") : a.sidecar,
                {{"subcommand", "eval-cls"},
                 {"scores", a.scores_path},
                 {"features", a.features_path},
                 {"labels", a.labels_path},
                 {"threshold", a.threshold},
                 {"probe", a.probe},
                 {"seed", a.seed}});
  return 0;
}

struct GradCheckArgs {
  std::string corpus_path, sidecar;
  TrainConfig config;
  int batch = 3;
  double tolerance = 1e-3;
  double step = 1e-4;
};

int run_grad_check(const GradCheckArgs& a) {
  std::vector<PatchChange> corpus;
  if (!a.corpus_path.empty()) {
    corpus = load_corpus_jsonl(a.corpus_path);
  } else {
    SyntheticOptions syn;
    syn.patches = std::max(a.batch, 2);
    syn.seed = a.config.seed;
    corpus = make_synthetic_corpus(syn);
  }
  auto [code_vocab, msg_vocab] = build_vocabularies(corpus, a.config.code_min_count,
                                                    a.config.msg_min_count, a.config.msg_max_size);
  Model model(a.config.model_config(), std::move(code_vocab), std::move(msg_vocab),
              a.config.seed);

  std::vector<ChangeTensor> batch;
  std::vector<LabelVector> labels;
  for (const PatchChange& p : corpus) {
    if (static_cast<int>(batch.size()) >= a.batch) break;
    LabelVector l = message_labels(p, model.message_vocab());
    if (!has_any_label(l)) continue;
    batch.push_back(encode_change(p, a.config.shape, model.code_vocab()));
    labels.push_back(std::move(l));
  }
  if (batch.empty()) throw ConfigError("no usable patch for the gradient check batch");

  // move off the init point so distance features clear the FD step
  randomize_parameters(model, a.config.seed + 1, -0.6, 0.6);
  GradCheckReport report =
      gradient_check(model, batch, labels, a.config.l2_lambda, a.step, a.tolerance);
  std::cout << format_report(report);
  std::cout << (report.all_pass() ? "gradient check passed" : "gradient check FAILED")
            << " (tolerance " << a.tolerance << ")\n";
  write_sidecar(a.sidecar.empty() ? default_sidecar("", "grad-check") : a.sidecar,
                {{"subcommand", "grad-check"},
                 {"corpus", a.corpus_path},
                 {"batch", a.batch},
                 {"tolerance", a.tolerance},
                 {"step", a.step},
                 {"config", nlohmann::json::parse(a.config.to_json_string())}});
  return report.all_pass() ? 0 : 1;
}

}  // namespace

int dispatch(const std::vector<std::string>& args) {
  CLI::App app{"code change embeddings: training, retrieval, and feature export"};
  app.require_subcommand(1);

  IngestArgs ingest;
  CLI::App* ingest_cmd =
      app.add_subcommand("ingest", "convert paired diff/message files to corpus JSONL");
  ingest_cmd->add_option("--diff", ingest.diff_path, "diff file, one patch per line")
      ->required();
  ingest_cmd->add_option("--msg", ingest.msg_path, "message file, one per line")->required();
  ingest_cmd->add_option("--out", ingest.out_path, "output corpus JSONL")->required();
  ingest_cmd->add_option("--marker", ingest.marker, "embedded newline marker (default <nl>)");
  ingest_cmd->add_option("--sidecar", ingest.sidecar, "resolved-config JSON path");

  VocabArgs vocab;
  CLI::App* vocab_cmd = app.add_subcommand("vocab", "build and save the two vocabularies");
  vocab_cmd->add_option("--corpus", vocab.corpus_path, "corpus JSONL")->required();
  vocab_cmd->add_option("--out", vocab.out_path, "output vocabulary JSON")->required();
  vocab_cmd->add_option("--code-min-count", vocab.code_min_count, "code vocabulary cutoff");
  vocab_cmd->add_option("--msg-min-count", vocab.msg_min_count, "message vocabulary cutoff");
  vocab_cmd->add_option("--msg-max-size", vocab.msg_max_size, "message vocabulary cap");
  vocab_cmd->add_option("--sidecar", vocab.sidecar, "resolved-config JSON path");

  TrainArgs train;
  TrainFlags train_flags;
  CLI::App* train_cmd = app.add_subcommand("train", "train a model and save a checkpoint");
  train_cmd->add_option("--corpus", train.corpus_path, "training corpus JSONL")->required();
  train_cmd->add_option("--extra-corpus", train.extra_corpora,
                        "additional corpora folded into training (repeatable)");
  train_cmd->add_option("--out", train.out_path, "output checkpoint path")->required();
  train_cmd->add_option("--history", train.history_path, "write per-epoch losses as JSON");
  train_cmd->add_option("--sidecar", train.sidecar, "resolved-config JSON path");
  train_flags.attach(*train_cmd);

  EmbedArgs embed;
  CLI::App* embed_cmd = app.add_subcommand("embed", "extract patch embeddings");
  embed_cmd->add_option("--model", embed.model_path, "checkpoint path")->required();
  embed_cmd->add_option("--corpus", embed.corpus_path, "corpus JSONL")->required();
  embed_cmd->add_option("--out", embed.out_path, "output path")->required();
  embed_cmd->add_option("--format", embed.format, "jsonl (default) or csv");
  embed_cmd->add_option("--sidecar", embed.sidecar, "resolved-config JSON path");

  RetrieveArgs retrieve;
  CLI::App* retrieve_cmd =
      app.add_subcommand("retrieve", "retrieve log messages for query patches");
  retrieve_cmd->add_option("--model", retrieve.model_path, "checkpoint path")->required();
  retrieve_cmd->add_option("--index", retrieve.index_path, "index corpus JSONL")->required();
  retrieve_cmd->add_option("--query", retrieve.query_path, "query corpus JSONL")->required();
  retrieve_cmd->add_option("--out", retrieve.out_path, "output results JSONL")->required();
  retrieve_cmd->add_option("--k", retrieve.k, "stage-one shortlist size (default 5)");
  retrieve_cmd->add_flag("--no-bleu-stage", retrieve.no_bleu_stage,
                         "skip the second stage, return the nearest neighbour");
  retrieve_cmd->add_option("--baseline", retrieve.baseline,
                           "loggen (embedding cosine, default) or nngen (token bags)");
  retrieve_cmd->add_option("--sidecar", retrieve.sidecar, "resolved-config JSON path");

  EvalBleuArgs eval_bleu;
  CLI::App* eval_bleu_cmd =
      app.add_subcommand("eval-bleu", "BLEU-4 between candidate and reference text files");
  eval_bleu_cmd->add_option("--candidates", eval_bleu.candidates_path, "one sentence per line")
      ->required();
  eval_bleu_cmd->add_option("--references", eval_bleu.references_path, "one sentence per line")
      ->required();
  eval_bleu_cmd->add_flag("--sentence", eval_bleu.sentence, "also print per-sentence scores");
  eval_bleu_cmd->add_option("--sidecar", eval_bleu.sidecar, "resolved-config JSON path");

  EvalClsArgs eval_cls;
  CLI::App* eval_cls_cmd =
      app.add_subcommand("eval-cls", "classification metrics from scores or a linear probe");
  eval_cls_cmd->add_option("--scores", eval_cls.scores_path, "one score per line");
  eval_cls_cmd->add_option("--labels", eval_cls.labels_path, "one 0/1 label per line")
      ->required();
  eval_cls_cmd->add_option("--features", eval_cls.features_path,
                           "feature JSONL for --probe mode");
  eval_cls_cmd->add_option("--threshold", eval_cls.threshold, "decision threshold");
  eval_cls_cmd->add_flag("--probe", eval_cls.probe,
                         "fit a logistic probe on --features and score with it");
  eval_cls_cmd->add_option("--probe-epochs", eval_cls.probe_epochs, "probe training epochs");
  eval_cls_cmd->add_option("--seed", eval_cls.seed, "probe shuffling seed");
  eval_cls_cmd->add_option("--sidecar", eval_cls.sidecar, "resolved-config JSON path");

  GradCheckArgs grad_check;
  TrainFlags grad_flags;
  CLI::App* grad_cmd = app.add_subcommand(
      "grad-check", "compare analytic gradients against central finite differences");
  grad_cmd->add_option("--corpus", grad_check.corpus_path,
                       "corpus JSONL (default: built-in synthetic batch)");
  grad_cmd->add_option("--batch", grad_check.batch, "patches in the check batch");
  grad_cmd->add_option("--tolerance", grad_check.tolerance, "max relative error per group");
  grad_cmd->add_option("--step", grad_check.step, "finite-difference step");
  grad_cmd->add_option("--sidecar", grad_check.sidecar, "resolved-config JSON path");
  grad_flags.attach(*grad_cmd);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // drop program name
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*ingest_cmd) return run_ingest(ingest);
    if (*vocab_cmd) return run_vocab(vocab);
    if (*train_cmd) {
      train.config = train_flags.resolve();
      return run_train(train);
    }
    if (*embed_cmd) return run_embed(embed);
    if (*retrieve_cmd) return run_retrieve(retrieve);
    if (*eval_bleu_cmd) return run_eval_bleu(eval_bleu);
    if (*eval_cls_cmd) return run_eval_cls(eval_cls);
    if (*grad_cmd) {
      // defaults sized for a quick desk check unless overridden
      TrainConfig c;
      c.shape = {2, 2, 2, 4};
      c.dims = {8, 4, 4, 8};
      c.dropout_rate = 0.0;
      if (!grad_flags.config_path.empty()) {
        c = TrainConfig::from_json_string(read_text_file(grad_flags.config_path));
      }
      for (const auto& [option, apply] : grad_flags.appliers) {
        if (option->count() > 0) apply(c);
      }
      c.validate();
      grad_check.config = c;
      return run_grad_check(grad_check);
    }
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const CheckpointError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const TrainingError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

int dispatch(int argc, const char* const* argv) {
  std::vector<std::string> args(argv, argv + argc);
  return dispatch(args);
}

}  // namespace ccvec::cli

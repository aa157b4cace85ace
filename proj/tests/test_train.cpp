#include "ccvec/train.hpp"

#include <cmath>
#include <fstream>

#include "ccvec/errors.hpp"
#include "ccvec/synthetic.hpp"
#include "ccvec/util.hpp"
#include "doctest.h"
#include "support/test_util.hpp"

using namespace ccvec;

namespace {

TrainConfig tiny_config() {
  TrainConfig c;
  c.shape = {2, 2, 2, 4};
  c.dims = {8, 4, 4, 8};
  c.dropout_rate = 0.0;
  c.l2_lambda = 1e-5;
  c.learning_rate = 5e-3;
  c.batch_size = 8;
  c.epochs = 30;
  c.seed = 123;
  return c;
}

struct Fixture {
  std::vector<PatchChange> corpus;
  Model model;
  std::vector<ChangeTensor> batch;
  std::vector<LabelVector> labels;
};

Fixture make_fixture(const TrainConfig& config, int batch_patches) {
  SyntheticOptions syn;
  syn.patches = 8;
  syn.seed = 9;
  std::vector<PatchChange> corpus = make_synthetic_corpus(syn);
  auto [code_vocab, msg_vocab] =
      build_vocabularies(corpus, config.code_min_count, config.msg_min_count, config.msg_max_size);
  Model model(config.model_config(), std::move(code_vocab), std::move(msg_vocab), config.seed);
  std::vector<ChangeTensor> batch;
  std::vector<LabelVector> labels;
  for (const PatchChange& p : corpus) {
    if (static_cast<int>(batch.size()) >= batch_patches) break;
    batch.push_back(encode_change(p, config.shape, model.code_vocab()));
    labels.push_back(message_labels(p, model.message_vocab()));
  }
  return Fixture{std::move(corpus), std::move(model), std::move(batch), std::move(labels)};
}

}  // namespace

TEST_CASE("TrainConfig validation") {
  TrainConfig c = tiny_config();
  CHECK_NOTHROW(c.validate());
  SUBCASE("learning rate bounds") {
    c.learning_rate = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }
  SUBCASE("negative lambda") {
    c.l2_lambda = -1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }
  SUBCASE("dropout must stay below 1") {
    c.dropout_rate = 1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }
  SUBCASE("batch size") {
    c.batch_size = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }
  SUBCASE("empty mask without bypass") {
    c.mask = mask_from_disabled("nt,nn,sim,sub,mul");
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.mask.bypass = true;
    CHECK_NOTHROW(c.validate());
  }
}

TEST_CASE("TrainConfig JSON round-trip") {
  TrainConfig c = tiny_config();
  c.mask = mask_from_disabled("sim,mul");
  c.shared_encoders = false;
  c.msg_max_size = 77;
  TrainConfig back = TrainConfig::from_json_string(c.to_json_string());
  CHECK(back.learning_rate == c.learning_rate);
  CHECK(back.seed == c.seed);
  CHECK(back.shape == c.shape);
  CHECK(back.dims == c.dims);
  CHECK(back.mask == c.mask);
  CHECK(back.shared_encoders == false);
  CHECK(back.msg_max_size == 77);
  CHECK_THROWS_AS(TrainConfig::from_json_string("{\"learning_rate\": 0.1}"), ConfigError);
}

TEST_CASE("one Adam step with zero gradients is the identity") {
  ParamStore store;
  Rng rng(3);
  ParamTensor& p = store.create("p", "p", {8});
  init_uniform(p, rng);
  std::vector<double> before = p.value;
  AdamOptimizer opt(1e-3, 0.9, 0.999, 1e-8);
  store.zero_grad();
  opt.step(store);
  CHECK(p.value == before);
}

TEST_CASE("Adam with a pure L2 gradient strictly shrinks the norm") {
  ParamStore store;
  Rng rng(5);
  ParamTensor& p = store.create("p", "p", {32});
  init_uniform(p, rng);
  AdamOptimizer opt(1e-4, 0.9, 0.999, 1e-8);
  const double lambda = 1e-5;
  double prev = std::sqrt(store.squared_norm());
  for (int step = 0; step < 5; ++step) {
    for (size_t i = 0; i < p.value.size(); ++i) p.grad[i] = lambda * p.value[i];
    opt.step(store);
    double now = std::sqrt(store.squared_norm());
    CHECK(now < prev);
    prev = now;
  }
}

TEST_CASE("gradient clipping rescales to the cap") {
  ParamStore store;
  ParamTensor& p = store.create("p", "p", {2});
  p.grad = {3.0, 4.0};  // norm 5
  double norm = clip_gradients(store, 2.5);
  CHECK(norm == doctest::Approx(5.0));
  CHECK(p.grad[0] == doctest::Approx(1.5));
  CHECK(p.grad[1] == doctest::Approx(2.0));
  // disabled when the cap is non-positive
  p.grad = {3.0, 4.0};
  clip_gradients(store, 0.0);
  CHECK(p.grad[0] == 3.0);
}

TEST_CASE("central differences on a quadratic recover the gradient almost exactly") {
  // loss = sum theta^2 has zero third derivative, so the 1e-4 step is exact
  // up to floating-point noise
  ParamStore store;
  Rng rng(7);
  ParamTensor& p = store.create("p", "p", {16});
  init_uniform(p, rng);
  auto loss = [&]() {
    double s = 0.0;
    for (double v : p.value) s += v * v;
    return s;
  };
  const double h = 1e-4;
  for (size_t i = 0; i < p.value.size(); ++i) {
    double saved = p.value[i];
    p.value[i] = saved + h;
    double up = loss();
    p.value[i] = saved - h;
    double down = loss();
    p.value[i] = saved;
    double numeric = (up - down) / (2.0 * h);
    CHECK(std::abs(numeric - 2.0 * saved) < 1e-8);
  }
}

TEST_CASE("gradient_check passes on a small full model") {
  TrainConfig config = tiny_config();
  Fixture fx = make_fixture(config, 2);
  // a generic parameter point: the distance features must clear the FD step
  randomize_parameters(fx.model, 4321, -0.6, 0.6);
  GradCheckReport report =
      gradient_check(fx.model, fx.batch, fx.labels, config.l2_lambda, 1e-4, 1e-3);
  INFO(format_report(report));
  CHECK(report.all_pass());
  CHECK(report.groups.size() == fx.model.params().group_names().size());
}

TEST_CASE("gradient_check covers unshared encoders") {
  TrainConfig config = tiny_config();
  config.shared_encoders = false;
  config.dims = {4, 2, 2, 4};
  Fixture fx = make_fixture(config, 2);
  randomize_parameters(fx.model, 4321, -0.6, 0.6);
  GradCheckReport report =
      gradient_check(fx.model, fx.batch, fx.labels, config.l2_lambda, 1e-4, 1e-3);
  INFO(format_report(report));
  CHECK(report.all_pass());
}

TEST_CASE("a corrupted gradient is flagged by the comparison") {
  TrainConfig config = tiny_config();
  config.dims = {4, 2, 2, 4};
  Fixture fx = make_fixture(config, 2);
  randomize_parameters(fx.model, 4321, -0.6, 0.6);
  compute_batch_gradients(fx.model, fx.batch, fx.labels, config.l2_lambda);
  std::map<std::string, std::vector<double>> analytic;
  for (const ParamTensor& p : fx.model.params().tensors()) analytic[p.name] = p.grad;
  // sabotage one group
  for (double& g : analytic["compare.ff_w"]) g += 0.05;
  GradCheckReport report = compare_with_finite_differences(
      fx.model, fx.batch, fx.labels, config.l2_lambda, analytic, 1e-4, 1e-3);
  bool ffnn_flagged = false;
  for (const GradGroupReport& g : report.groups) {
    if (g.group == "compare_ffnn") {
      ffnn_flagged = !g.pass;
    } else {
      CHECK(g.pass);
    }
  }
  CHECK(ffnn_flagged);
}

TEST_CASE("training memorizes the 8-patch synthetic corpus") {
  SyntheticOptions syn;
  syn.patches = 8;
  syn.seed = 9;
  std::vector<PatchChange> corpus = make_synthetic_corpus(syn);
  TrainConfig config = tiny_config();
  config.epochs = 500;
  TrainedModel trained = train_from_corpus(corpus, config);
  REQUIRE(trained.result.epoch_loss.size() == 500);
  CHECK(trained.result.trainable_patches == 8);
  CHECK(trained.result.epoch_loss.back() < 0.05);

  // windowed means never increase
  const std::vector<double>& loss = trained.result.epoch_loss;
  double prev_window = 1e300;
  for (size_t start = 0; start + 10 <= loss.size(); start += 10) {
    double window = 0.0;
    for (size_t i = start; i < start + 10; ++i) window += loss[i];
    window /= 10.0;
    CHECK(window <= prev_window);
    prev_window = window;
  }
}

TEST_CASE("fixed-seed training is bit-reproducible") {
  SyntheticOptions syn;
  syn.patches = 6;
  syn.seed = 21;
  std::vector<PatchChange> corpus = make_synthetic_corpus(syn);
  TrainConfig config = tiny_config();
  config.epochs = 5;
  config.dropout_rate = 0.3;  // exercise the dropout RNG path too

  TrainedModel a = train_from_corpus(corpus, config);
  TrainedModel b = train_from_corpus(corpus, config);
  REQUIRE(a.result.epoch_loss.size() == b.result.epoch_loss.size());
  for (size_t i = 0; i < a.result.epoch_loss.size(); ++i) {
    CHECK(a.result.epoch_loss[i] == b.result.epoch_loss[i]);  // bitwise
  }
  auto ta = a.model.params().tensors().begin();
  auto tb = b.model.params().tensors().begin();
  for (; ta != a.model.params().tensors().end(); ++ta, ++tb) {
    CHECK(ta->value == tb->value);
  }
}

TEST_CASE("training error paths") {
  TrainConfig config = tiny_config();
  SUBCASE("empty corpus") {
    CHECK_THROWS_AS(train_from_corpus({}, config), ConfigError);
  }
  SUBCASE("no trainable patch") {
    SyntheticOptions syn;
    syn.patches = 3;
    std::vector<PatchChange> corpus = make_synthetic_corpus(syn);
    auto [code_vocab, msg_vocab] = build_vocabularies(corpus, 1, 1, 100);
    // a vocabulary that shares no word with any message: every label is zero
    Model model(config.model_config(), code_vocab,
                Vocabulary(VocabKind::message, 1, {"zzz_never_present"}), config.seed);
    CHECK_THROWS_AS(train_model(model, corpus, config), TrainingError);
  }
  SUBCASE("non-finite loss aborts with a diagnostic") {
    SyntheticOptions syn;
    syn.patches = 3;
    std::vector<PatchChange> corpus = make_synthetic_corpus(syn);
    auto [code_vocab, msg_vocab] = build_vocabularies(corpus, 1, 1, 100);
    Model model(config.model_config(), std::move(code_vocab), std::move(msg_vocab),
                config.seed);
    model.params().tensors().front().value[0] = std::nan("");
    CHECK_THROWS_WITH_AS(train_model(model, corpus, config),
                         doctest::Contains("non-finite"), TrainingError);
  }
}

TEST_CASE("dropout is a no-op at inference") {
  TrainConfig config = tiny_config();
  Fixture fx = make_fixture(config, 1);
  Graph g1, g2;
  Model::Forward f1 = fx.model.forward(g1, fx.batch[0]);
  Model::Forward f2 = fx.model.forward(g2, fx.batch[0]);
  CHECK(g1.value(f1.probs) == g2.value(f2.probs));
  CHECK(g1.value(f1.patch_vec) == g2.value(f2.patch_vec));
}

TEST_CASE("checkpoint round-trip") {
  testsupport::TempDir dir("ckpt");
  std::string path = dir.file("model.ckpt");

  SyntheticOptions syn;
  syn.patches = 4;
  std::vector<PatchChange> corpus = make_synthetic_corpus(syn);
  TrainConfig config = tiny_config();
  config.epochs = 2;
  TrainedModel trained = train_from_corpus(corpus, config);
  save_checkpoint(trained.model, config, path);

  Checkpoint loaded = load_checkpoint(path);
  CHECK(loaded.config.seed == config.seed);
  CHECK(loaded.config.shape == config.shape);
  CHECK(loaded.model.code_vocab().size() == trained.model.code_vocab().size());
  CHECK(loaded.model.message_vocab().size() == trained.model.message_vocab().size());

  // loaded values are the float32 casts of the saved doubles
  auto orig = trained.model.params().tensors().begin();
  auto back = loaded.model.params().tensors().begin();
  for (; orig != trained.model.params().tensors().end(); ++orig, ++back) {
    REQUIRE(orig->name == back->name);
    for (size_t i = 0; i < orig->value.size(); ++i) {
      CHECK(back->value[i] == static_cast<double>(static_cast<float>(orig->value[i])));
    }
  }

  // a second save is byte-identical
  std::string path2 = dir.file("model2.ckpt");
  save_checkpoint(loaded.model, loaded.config, path2);
  CHECK(read_text_file(path) == read_text_file(path2));
}

TEST_CASE("checkpoint rejects corrupt containers") {
  testsupport::TempDir dir("ckpt_bad");
  std::string path = dir.file("model.ckpt");
  SyntheticOptions syn;
  syn.patches = 3;
  std::vector<PatchChange> corpus = make_synthetic_corpus(syn);
  TrainConfig config = tiny_config();
  config.epochs = 1;
  TrainedModel trained = train_from_corpus(corpus, config);
  save_checkpoint(trained.model, config, path);
  std::string bytes = read_text_file(path);

  SUBCASE("truncation") {
    write_text_file(path, bytes.substr(0, bytes.size() / 2));
    CHECK_THROWS_AS(load_checkpoint(path), CheckpointError);
  }
  SUBCASE("bad magic") {
    bytes[0] = 'X';
    write_text_file(path, bytes);
    CHECK_THROWS_WITH_AS(load_checkpoint(path), doctest::Contains("expected 'CC2V'"),
                         CheckpointError);
  }
  SUBCASE("unsupported version") {
    bytes[4] = 99;  // little-endian low byte of the version field
    write_text_file(path, bytes);
    CHECK_THROWS_WITH_AS(load_checkpoint(path), doctest::Contains("version 99"),
                         CheckpointError);
  }
}

#include "ccvec/train.hpp"

#include <cmath>
#include <sstream>

#include "ccvec/errors.hpp"
#include "json.hpp"

namespace ccvec {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

nlohmann::json mask_to_json(const ComparisonMask& m) {
  return {{"ntn", m.ntn},           {"ffnn", m.ffnn},     {"similarity", m.similarity},
          {"subtract", m.subtract}, {"multiply", m.multiply}, {"bypass", m.bypass}};
}

ComparisonMask mask_from_json(const nlohmann::json& j) {
  ComparisonMask m;
  m.ntn = j.at("ntn").get<bool>();
  m.ffnn = j.at("ffnn").get<bool>();
  m.similarity = j.at("similarity").get<bool>();
  m.subtract = j.at("subtract").get<bool>();
  m.multiply = j.at("multiply").get<bool>();
  m.bypass = j.at("bypass").get<bool>();
  return m;
}

}  // namespace

void TrainConfig::validate() const {
  require(learning_rate > 0.0 && learning_rate < 1.0, "learning_rate must be in (0, 1)");
  require(adam_beta1 > 0.0 && adam_beta1 < 1.0, "adam_beta1 must be in (0, 1)");
  require(adam_beta2 > 0.0 && adam_beta2 < 1.0, "adam_beta2 must be in (0, 1)");
  require(adam_eps > 0.0, "adam_eps must be > 0");
  require(l2_lambda >= 0.0, "l2_lambda must be >= 0");
  require(dropout_rate >= 0.0 && dropout_rate < 1.0, "dropout_rate must be in [0, 1)");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(epochs >= 1, "epochs must be >= 1");
  require(shape.files >= 1 && shape.hunks >= 1 && shape.lines >= 1 && shape.words >= 1,
          "all shape dimensions must be >= 1");
  require(dims.embed_dim >= 1 && dims.gru_hidden >= 1 && dims.fusion_hidden >= 1,
          "all model dimensions must be >= 1");
  require(dims.ntn_slices >= 0, "ntn_slices must be >= 0 (0 means embedding width)");
  require(mask.bypass || mask.any_enabled(),
          "all comparison functions disabled; use the bypass variant instead");
  require(code_min_count >= 1 && msg_min_count >= 1, "min counts must be >= 1");
  require(msg_max_size >= 1, "msg_max_size must be >= 1");
}

ModelConfig TrainConfig::model_config() const {
  ModelConfig mc;
  mc.shape = shape;
  mc.dims = dims;
  mc.mask = mask;
  mc.shared_encoders = shared_encoders;
  mc.mask_pad = mask_pad;
  return mc;
}

std::string TrainConfig::to_json_string() const {
  nlohmann::json j = {
      {"learning_rate", learning_rate},
      {"adam_beta1", adam_beta1},
      {"adam_beta2", adam_beta2},
      {"adam_eps", adam_eps},
      {"l2_lambda", l2_lambda},
      {"dropout_rate", dropout_rate},
      {"batch_size", batch_size},
      {"epochs", epochs},
      {"seed", seed},
      {"grad_clip_norm", grad_clip_norm},
      {"shape", {{"files", shape.files}, {"hunks", shape.hunks}, {"lines", shape.lines}, {"words", shape.words}}},
      {"dims",
       {{"embed_dim", dims.embed_dim},
        {"gru_hidden", dims.gru_hidden},
        {"ntn_slices", dims.ntn_slices},
        {"fusion_hidden", dims.fusion_hidden}}},
      {"mask", mask_to_json(mask)},
      {"shared_encoders", shared_encoders},
      {"mask_pad", mask_pad},
      {"code_min_count", code_min_count},
      {"msg_min_count", msg_min_count},
      {"msg_max_size", msg_max_size},
  };
  return j.dump();
}

TrainConfig TrainConfig::from_json_string(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ConfigError("invalid training config JSON");
  TrainConfig c;
  try {
    c.learning_rate = j.at("learning_rate").get<double>();
    c.adam_beta1 = j.at("adam_beta1").get<double>();
    c.adam_beta2 = j.at("adam_beta2").get<double>();
    c.adam_eps = j.at("adam_eps").get<double>();
    c.l2_lambda = j.at("l2_lambda").get<double>();
    c.dropout_rate = j.at("dropout_rate").get<double>();
    c.batch_size = j.at("batch_size").get<int>();
    c.epochs = j.at("epochs").get<int>();
    c.seed = j.at("seed").get<uint64_t>();
    c.grad_clip_norm = j.at("grad_clip_norm").get<double>();
    const auto& js = j.at("shape");
    c.shape = {js.at("files").get<int>(), js.at("hunks").get<int>(), js.at("lines").get<int>(),
               js.at("words").get<int>()};
    const auto& jd = j.at("dims");
    c.dims.embed_dim = jd.at("embed_dim").get<int>();
    c.dims.gru_hidden = jd.at("gru_hidden").get<int>();
    c.dims.ntn_slices = jd.at("ntn_slices").get<int>();
    c.dims.fusion_hidden = jd.at("fusion_hidden").get<int>();
    c.mask = mask_from_json(j.at("mask"));
    c.shared_encoders = j.at("shared_encoders").get<bool>();
    c.mask_pad = j.at("mask_pad").get<bool>();
    c.code_min_count = j.at("code_min_count").get<int>();
    c.msg_min_count = j.at("msg_min_count").get<int>();
    c.msg_max_size = j.at("msg_max_size").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("training config field error: ") + e.what());
  }
  return c;
}

AdamOptimizer::AdamOptimizer(double learning_rate, double beta1, double beta2, double eps)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void AdamOptimizer::step(ParamStore& params) {
  ++steps_;
  double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
  double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
  for (ParamTensor& p : params.tensors()) {
    if (p.adam_m.empty()) {
      p.adam_m.assign(p.value.size(), 0.0);
      p.adam_v.assign(p.value.size(), 0.0);
    }
    for (size_t i = 0; i < p.value.size(); ++i) {
      double g = p.grad[i];
      p.adam_m[i] = beta1_ * p.adam_m[i] + (1.0 - beta1_) * g;
      p.adam_v[i] = beta2_ * p.adam_v[i] + (1.0 - beta2_) * g * g;
      double m_hat = p.adam_m[i] / bc1;
      double v_hat = p.adam_v[i] / bc2;
      p.value[i] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
    }
  }
}

double clip_gradients(ParamStore& params, double max_norm) {
  double sq = 0.0;
  for (const ParamTensor& p : params.tensors()) {
    for (double g : p.grad) sq += g * g;
  }
  double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    double scale = max_norm / norm;
    for (ParamTensor& p : params.tensors()) {
      for (double& g : p.grad) g *= scale;
    }
  }
  return norm;
}

namespace {

struct TrainingSet {
  std::vector<ChangeTensor> tensors;
  std::vector<LabelVector> labels;
  std::vector<size_t> trainable;  // indices with at least one positive label
};

TrainingSet prepare_training_set(const Model& model, const std::vector<PatchChange>& corpus) {
  TrainingSet set;
  set.tensors.reserve(corpus.size());
  set.labels.reserve(corpus.size());
  for (const PatchChange& p : corpus) {
    set.tensors.push_back(encode_change(p, model.config().shape, model.code_vocab()));
    set.labels.push_back(message_labels(p, model.message_vocab()));
    if (has_any_label(set.labels.back())) {
      set.trainable.push_back(set.tensors.size() - 1);
    }
  }
  return set;
}

}  // namespace

TrainResult train_model(Model& model, const std::vector<PatchChange>& corpus,
                        const TrainConfig& config) {
  config.validate();
  if (corpus.empty()) throw TrainingError("training corpus is empty");

  TrainingSet set = prepare_training_set(model, corpus);
  if (set.trainable.empty()) {
    throw TrainingError("no patch has an in-vocabulary message word; nothing to train on");
  }

  TrainResult result;
  result.trainable_patches = static_cast<int>(set.trainable.size());
  result.skipped_patches = static_cast<int>(corpus.size() - set.trainable.size());

  // one stream drives shuffling and dropout so a seed pins the whole run
  Rng rng(config.seed + 0x5eedull);
  AdamOptimizer optimizer(config.learning_rate, config.adam_beta1, config.adam_beta2,
                          config.adam_eps);
  ParamStore& params = model.params();

  std::vector<size_t> order = set.trainable;
  result.epoch_loss.reserve(static_cast<size_t>(config.epochs));
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_total = 0.0;
    int batch_count = 0;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(config.batch_size)) {
      size_t end = std::min(order.size(), start + static_cast<size_t>(config.batch_size));
      size_t batch_n = end - start;
      params.zero_grad();
      double bce_total = 0.0;
      for (size_t i = start; i < end; ++i) {
        Graph g;
        Model::ForwardOptions opts;
        opts.train_mode = true;
        opts.dropout_rate = config.dropout_rate;
        opts.rng = &rng;
        Model::Forward fwd = model.forward(g, set.tensors[order[i]], opts);
        Val loss = g.bce_sum(fwd.probs, set.labels[order[i]]);
        bce_total += g.value(loss)[0];
        g.backward(loss, 1.0 / static_cast<double>(batch_n));
      }
      double l2_value = 0.0;
      if (config.l2_lambda > 0.0) {
        for (ParamTensor& p : params.tensors()) {
          for (size_t i = 0; i < p.value.size(); ++i) {
            p.grad[i] += config.l2_lambda * p.value[i];
          }
        }
        l2_value = 0.5 * config.l2_lambda * params.squared_norm();
      }
      double batch_loss_value = bce_total / static_cast<double>(batch_n) + l2_value;
      if (!std::isfinite(batch_loss_value)) {
        throw TrainingError("training diverged: non-finite loss at epoch " +
                            std::to_string(epoch + 1) + ", batch " +
                            std::to_string(batch_count + 1));
      }
      clip_gradients(params, config.grad_clip_norm);
      optimizer.step(params);
      epoch_total += batch_loss_value;
      ++batch_count;
    }
    result.epoch_loss.push_back(epoch_total / static_cast<double>(batch_count));
  }
  return result;
}

TrainedModel train_from_corpus(const std::vector<PatchChange>& corpus,
                               const TrainConfig& config) {
  config.validate();
  auto [code_vocab, msg_vocab] = build_vocabularies(corpus, config.code_min_count,
                                                    config.msg_min_count, config.msg_max_size);
  Model model(config.model_config(), std::move(code_vocab), std::move(msg_vocab), config.seed);
  TrainResult result = train_model(model, corpus, config);
  return TrainedModel{std::move(model), std::move(result)};
}

void randomize_parameters(Model& model, uint64_t seed, double lo, double hi) {
  Rng rng(seed);
  for (ParamTensor& p : model.params().tensors()) {
    for (double& v : p.value) v = rng.uniform(lo, hi);
  }
}

double batch_loss(const Model& model, std::span<const ChangeTensor> batch,
                  std::span<const LabelVector> labels, double l2_lambda) {
  if (batch.size() != labels.size() || batch.empty()) {
    throw ShapeError("batch_loss: batch and label counts must match and be non-empty");
  }
  double total = 0.0;
  for (size_t i = 0; i < batch.size(); ++i) {
    Graph g(/*record=*/false);
    Model::Forward fwd = model.forward(g, batch[i]);
    Graph::Val loss = g.bce_sum(fwd.probs, labels[i]);
    total += g.value(loss)[0];
  }
  return total / static_cast<double>(batch.size()) +
         0.5 * l2_lambda * model.params().squared_norm();
}

double compute_batch_gradients(Model& model, std::span<const ChangeTensor> batch,
                               std::span<const LabelVector> labels, double l2_lambda) {
  if (batch.size() != labels.size() || batch.empty()) {
    throw ShapeError("compute_batch_gradients: batch and label counts must match");
  }
  ParamStore& params = model.params();
  params.zero_grad();
  double total = 0.0;
  for (size_t i = 0; i < batch.size(); ++i) {
    Graph g;
    Model::Forward fwd = model.forward(g, batch[i]);
    Graph::Val loss = g.bce_sum(fwd.probs, labels[i]);
    total += g.value(loss)[0];
    g.backward(loss, 1.0 / static_cast<double>(batch.size()));
  }
  if (l2_lambda > 0.0) {
    for (ParamTensor& p : params.tensors()) {
      for (size_t i = 0; i < p.value.size(); ++i) p.grad[i] += l2_lambda * p.value[i];
    }
  }
  return total / static_cast<double>(batch.size()) +
         0.5 * l2_lambda * params.squared_norm();
}

bool GradCheckReport::all_pass() const {
  for (const GradGroupReport& g : groups) {
    if (!g.pass) return false;
  }
  return !groups.empty();
}

GradCheckReport compare_with_finite_differences(
    Model& model, std::span<const ChangeTensor> batch, std::span<const LabelVector> labels,
    double l2_lambda, const std::map<std::string, std::vector<double>>& analytic,
    double step, double tolerance) {
  GradCheckReport report;
  report.tolerance = tolerance;
  std::map<std::string, GradGroupReport> by_group;

  for (ParamTensor& p : model.params().tensors()) {
    auto it = analytic.find(p.name);
    if (it == analytic.end()) throw ConfigError("no analytic gradient for tensor " + p.name);
    const std::vector<double>& ga = it->second;
    GradGroupReport& group = by_group[p.group];
    group.group = p.group;
    for (size_t i = 0; i < p.value.size(); ++i) {
      double saved = p.value[i];
      p.value[i] = saved + step;
      double up = batch_loss(model, batch, labels, l2_lambda);
      p.value[i] = saved - step;
      double down = batch_loss(model, batch, labels, l2_lambda);
      p.value[i] = saved;
      double numeric = (up - down) / (2.0 * step);
      double abs_err = std::abs(ga[i] - numeric);
      // differences at the finite-difference noise floor count as agreement
      double rel_err =
          abs_err <= 1e-7 ? 0.0 : abs_err / std::max(std::abs(ga[i]) + std::abs(numeric), 1.0);
      if (rel_err > group.max_rel_error ||
          (rel_err == group.max_rel_error && abs_err > group.max_abs_error)) {
        group.max_rel_error = rel_err;
        group.max_abs_error = abs_err;
        group.worst_tensor = p.name + "[" + std::to_string(i) + "]";
        group.analytic_at_worst = ga[i];
        group.numeric_at_worst = numeric;
      }
    }
  }

  for (const std::string& name : model.params().group_names()) {
    GradGroupReport group = by_group[name];
    group.group = name;
    group.pass = group.max_rel_error <= tolerance;
    report.groups.push_back(std::move(group));
  }
  return report;
}

GradCheckReport gradient_check(Model& model, std::span<const ChangeTensor> batch,
                               std::span<const LabelVector> labels, double l2_lambda,
                               double step, double tolerance) {
  compute_batch_gradients(model, batch, labels, l2_lambda);
  std::map<std::string, std::vector<double>> analytic;
  for (const ParamTensor& p : model.params().tensors()) analytic[p.name] = p.grad;
  return compare_with_finite_differences(model, batch, labels, l2_lambda, analytic, step,
                                         tolerance);
}

std::string format_report(const GradCheckReport& report) {
  std::ostringstream out;
  for (const GradGroupReport& g : report.groups) {
    out << (g.pass ? "  ok   " : "  FAIL ") << g.group << ": max_rel_err=" << g.max_rel_error
        << " max_abs_err=" << g.max_abs_error;
    if (!g.worst_tensor.empty()) {
      out << " worst=" << g.worst_tensor << " analytic=" << g.analytic_at_worst
          << " numeric=" << g.numeric_at_worst;
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace ccvec

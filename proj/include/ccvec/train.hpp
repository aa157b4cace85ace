#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "ccvec/model.hpp"

namespace ccvec {

struct TrainConfig {
  double learning_rate = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double l2_lambda = 1e-5;
  double dropout_rate = 0.5;
  int batch_size = 32;
  int epochs = 25;
  uint64_t seed = 42;
  double grad_clip_norm = 5.0;  // <= 0 disables clipping

  ShapeConfig shape;
  ModelDims dims;
  ComparisonMask mask;
  bool shared_encoders = true;
  bool mask_pad = false;

  int code_min_count = 1;
  int msg_min_count = 1;
  int msg_max_size = 50000;

  void validate() const;  // throws ConfigError
  ModelConfig model_config() const;

  std::string to_json_string() const;
  static TrainConfig from_json_string(const std::string& text);
};

// Adam with bias correction. Moment buffers live on the tensors and are
// allocated on first use; a fresh optimizer therefore leaves parameters
// untouched when every gradient is zero.
class AdamOptimizer {
 public:
  AdamOptimizer(double learning_rate, double beta1, double beta2, double eps);
  void step(ParamStore& params);
  int64_t steps_taken() const { return steps_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  int64_t steps_ = 0;
};

// Scales all gradients by max_norm / ||g|| when the global norm exceeds
// max_norm. Returns the pre-clip norm.
double clip_gradients(ParamStore& params, double max_norm);

struct TrainResult {
  std::vector<double> epoch_loss;  // mean batch loss per epoch
  int trainable_patches = 0;
  int skipped_patches = 0;  // no in-vocabulary message word
};

// Trains in place over shuffled mini-batches. Patches whose label vector is
// all-zero are excluded from the loss. Aborts with TrainingError when the
// loss stops being finite.
TrainResult train_model(Model& model, const std::vector<PatchChange>& corpus,
                        const TrainConfig& config);

// Convenience: vocabularies + model + training in one call.
struct TrainedModel {
  Model model;
  TrainResult result;
};
TrainedModel train_from_corpus(const std::vector<PatchChange>& corpus,
                               const TrainConfig& config);

// ---- gradient verification ----

// Redraws every parameter uniform(lo, hi). Gradient-check fixtures use this
// to move off the freshly initialized point: at init scale the two side
// embeddings nearly coincide, which parks the euclidean-distance kink inside
// the finite-difference step and makes the numeric gradient meaningless.
void randomize_parameters(Model& model, uint64_t seed, double lo, double hi);

// Mean per-patch label loss over the batch plus (l2_lambda/2)*||theta||^2.
// Forward only; dropout off.
double batch_loss(const Model& model, std::span<const ChangeTensor> batch,
                  std::span<const LabelVector> labels, double l2_lambda);

// Fills ParamStore gradients for the same objective and returns its value.
double compute_batch_gradients(Model& model, std::span<const ChangeTensor> batch,
                               std::span<const LabelVector> labels, double l2_lambda);

struct GradGroupReport {
  std::string group;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::string worst_tensor;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
  bool pass = false;
};

struct GradCheckReport {
  std::vector<GradGroupReport> groups;
  double tolerance = 0.0;
  bool all_pass() const;
};

// Central finite differences (step h) against the supplied analytic
// gradients, reported per parameter group. The relative error uses
// |a - n| / max(|a| + |n|, 1), with differences below 1e-7 treated as
// noise-floor agreement.
GradCheckReport compare_with_finite_differences(
    Model& model, std::span<const ChangeTensor> batch, std::span<const LabelVector> labels,
    double l2_lambda, const std::map<std::string, std::vector<double>>& analytic,
    double step, double tolerance);

// compute_batch_gradients + compare_with_finite_differences.
GradCheckReport gradient_check(Model& model, std::span<const ChangeTensor> batch,
                               std::span<const LabelVector> labels, double l2_lambda,
                               double step = 1e-4, double tolerance = 1e-3);

std::string format_report(const GradCheckReport& report);

// ---- checkpoint container ----
// Layout: magic "CC2V", u32 version (little endian), u64 header length,
// canonical JSON header (config, both vocabularies, tensor directory with
// name/shape/offset), then the tensor payloads as little-endian float32 in
// directory order. Writes are atomic (temp file + rename).

inline constexpr uint32_t kCheckpointVersion = 1;

void save_checkpoint(const Model& model, const TrainConfig& config, const std::string& path);

struct Checkpoint {
  TrainConfig config;
  Model model;
};
Checkpoint load_checkpoint(const std::string& path);

}  // namespace ccvec

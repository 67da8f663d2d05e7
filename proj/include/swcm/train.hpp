// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "swcm/batch.hpp"
#include "swcm/model.hpp"
#include "swcm/noise.hpp"
#include "swcm/sampling.hpp"

namespace swcm {

// ---------------------------------------------------------------------------
// Configuration and schedules

enum class WarmupMode { Proportion, FirstEpoch };

std::string_view to_string(WarmupMode mode);
WarmupMode parse_warmup_mode(std::string_view text);

struct TrainConfig {
  double peak_lr = 1e-4;
  double warmup_floor_lr = 1e-5;
  double warmup_proportion = 0.1;
  WarmupMode warmup_mode = WarmupMode::Proportion;
  int epochs = 8;
  std::size_t max_steps = 0;  // 0: epochs * steps_per_epoch
  std::size_t global_batch = 8;
  std::size_t grad_accum_steps = 1;
  double grad_clip_norm = 1.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.01;
  double tf_final_ratio = 0.5;
  bool scheduled_sampling = true;  // applies to pretraining
  bool scheduled_sampling_in_finetune = false;
  double sampling_alpha = 0.3;
  bool use_dae = true;
  bool use_mt = true;
  double mt_probability = -1.0;  // < 0: proportional to available data
  std::vector<std::string> frozen_prefixes;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Linear warmup from warmup_floor_lr to peak_lr, then linear decay to 0 at
/// total_steps. Warmup length is ceil(warmup_proportion * total_steps), or
/// `steps_per_epoch` in FirstEpoch mode.
double lr_schedule(std::size_t step, std::size_t total_steps, const TrainConfig& cfg,
                   std::size_t steps_per_epoch = 0);
std::size_t warmup_steps(std::size_t total_steps, const TrainConfig& cfg,
                         std::size_t steps_per_epoch = 0);

/// 1.0 during epoch 1, then linear down to tf_final_ratio at the last epoch.
/// Epochs are 1-based.
double teacher_forcing_ratio(int epoch, int total_epochs, const TrainConfig& cfg);

// ---------------------------------------------------------------------------
// Optimizer

struct ParamMoments {
  std::string name;
  std::vector<double> m;
  std::vector<double> v;
};

struct OptimizerState {
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  std::vector<ParamMoments> moments;  // keyed by parameter name

  static OptimizerState from_config(const TrainConfig& cfg);
};

/// Bias-corrected AdamW with decoupled weight decay (rank >= 2 parameters
/// only). Gradients are read from each tensor's grad buffer. Throws
/// NumericError without touching anything if a gradient is non-finite.
void adamw_step(std::span<NamedTensor> params, OptimizerState& state, double lr);

/// Scales every gradient by max_norm / norm when the global L2 norm exceeds
/// max_norm. Returns the pre-clip norm.
double clip_gradients(std::span<NamedTensor> params, double max_norm);

double global_grad_norm(std::span<const NamedTensor> params);

/// Unique parameters not matched by any frozen prefix.
std::vector<NamedTensor> trainable_parameters(const SharedWeightModel& model,
                                              const std::vector<std::string>& frozen_prefixes);

// ---------------------------------------------------------------------------
// Data feeding

/// Pretraining pool: framed monolingual sentences per language for DAE and
/// translation pairs grouped by their non-pivot language.
struct PretrainData {
  std::vector<std::string> mono_langs;
  std::vector<std::vector<std::vector<TokenId>>> mono;
  std::vector<std::string> pair_groups;
  // Each pair stored in both directions: [forward, reverse].
  std::vector<std::vector<std::array<Example, 2>>> pairs;
  NoiseConfig noise;

  std::size_t mono_count() const;
  std::size_t pair_count() const;
};

PretrainData build_pretrain_data(const std::vector<MonolingualExample>& mono,
                                 const std::vector<ParallelExample>& parallel, const Vocab& vocab,
                                 std::size_t max_seq_len, const NoiseConfig& noise);

/// Draws one pretraining example: task (DAE or MT), then language by the
/// smoothed distribution, then a sentence uniformly.
Example draw_pretrain_example(const PretrainData& data, const TrainConfig& cfg, Rng& rng);

/// DAE examples with corruption fixed by `seed` (held-out evaluation).
std::vector<Example> make_dae_examples(const std::vector<MonolingualExample>& mono,
                                       const Vocab& vocab, std::size_t max_seq_len,
                                       const NoiseConfig& noise, std::uint64_t seed);

/// Decoder inputs for one batch: each post-frame position keeps the gold
/// token with probability `ratio`, otherwise takes the model's greedy
/// prediction from the previous position (computed without gradients).
TokenBatch scheduled_sampling_inputs(const SharedWeightModel& model, const Batch& batch,
                                     double ratio, Rng& rng);

/// Token-weighted teacher-forced loss over `examples`, no gradients.
double evaluate_loss(const SharedWeightModel& model, std::span<const Example> examples,
                     std::size_t batch_size = 16);

// ---------------------------------------------------------------------------
// Training loop

struct StepRecord {
  std::size_t step = 0;  // 1-based count of completed steps
  int epoch = 1;
  std::string task;
  std::string lang;
  double loss = 0.0;
  double lr = 0.0;
  double grad_norm = 0.0;
};

/// `step<TAB>epoch<TAB>task<TAB>lang<TAB>loss<TAB>lr<TAB>grad_norm`
std::string format_log_line(const StepRecord& record);
StepRecord parse_log_line(const std::string& line);

/// Step-driven optimization loop. Each step draws its examples from a
/// generator keyed by (seed, step), so a run restored from (parameters,
/// optimizer state, step) continues exactly as the uninterrupted run.
class Trainer {
 public:
  using ExampleSource = std::function<Example(Rng&)>;

  Trainer(SharedWeightModel& model, TrainConfig cfg, ExampleSource source,
          std::size_t dataset_size, bool scheduled_sampling);

  StepRecord step();
  /// Runs until `total_steps()` (or `until` if smaller), calling `on_step`
  /// after each step.
  std::vector<StepRecord> run(std::size_t until = 0,
                              const std::function<void(const StepRecord&)>& on_step = {});

  std::size_t steps_done() const { return steps_done_; }
  std::size_t total_steps() const { return total_steps_; }
  std::size_t steps_per_epoch() const { return steps_per_epoch_; }
  int total_epochs() const;
  int epoch_of(std::size_t step_index) const;

  OptimizerState& optimizer() { return optimizer_; }
  const OptimizerState& optimizer() const { return optimizer_; }
  void restore(std::size_t steps_done, OptimizerState optimizer);

 private:
  SharedWeightModel& model_;
  TrainConfig cfg_;
  ExampleSource source_;
  bool scheduled_sampling_;
  std::size_t steps_per_epoch_;
  std::size_t total_steps_;
  std::size_t steps_done_ = 0;
  OptimizerState optimizer_;
  std::vector<NamedTensor> trainable_;
  std::vector<NamedTensor> all_params_;
};

struct TrainResult {
  std::vector<StepRecord> log;
};

/// Multi-task DAE + MT pretraining.
TrainResult pretrain(SharedWeightModel& model, const PretrainData& data, const TrainConfig& cfg,
                     const std::function<void(const StepRecord&)>& on_step = {});

/// Single-task seq2seq finetuning on framed pairs, examples drawn uniformly.
TrainResult finetune(SharedWeightModel& model, const std::vector<Example>& examples,
                     const TrainConfig& cfg,
                     const std::function<void(const StepRecord&)>& on_step = {});

// ---------------------------------------------------------------------------
// Encoder-only masked-LM pretraining (desk-scale stand-in for a pretrained
// multilingual encoder).

struct MlmConfig {
  std::size_t steps = 500;
  std::size_t batch = 16;
  double peak_lr = 1e-3;
  double mask_prob = 0.15;
  std::uint64_t seed = 0;
};

std::vector<double> pretrain_encoder_mlm(EncoderStack& encoder, const ModelConfig& config,
                                         const std::vector<std::vector<TokenId>>& sentences,
                                         const MlmConfig& mlm);

}  // namespace swcm

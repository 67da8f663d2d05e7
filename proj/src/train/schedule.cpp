// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>

#include "swcm/error.hpp"
#include "swcm/train.hpp"

namespace swcm {

std::string_view to_string(WarmupMode mode) {
  return mode == WarmupMode::FirstEpoch ? "first_epoch" : "proportion";
}

WarmupMode parse_warmup_mode(std::string_view text) {
  if (text == "proportion") return WarmupMode::Proportion;
  if (text == "first_epoch") return WarmupMode::FirstEpoch;
  throw ConfigError("unknown warmup_mode '" + std::string(text) + "'");
}

void TrainConfig::validate() const {
  if (!(warmup_proportion > 0.0 && warmup_proportion < 1.0)) {
    throw ConfigError("warmup_proportion must lie in (0, 1)");
  }
  if (!(grad_clip_norm > 0.0)) throw ConfigError("grad_clip_norm must be positive");
  if (!(tf_final_ratio >= 0.0 && tf_final_ratio <= 1.0)) {
    throw ConfigError("tf_final_ratio must lie in [0, 1]");
  }
  if (!(peak_lr >= 0.0) || !(warmup_floor_lr >= 0.0)) {
    throw ConfigError("learning rates must be non-negative");
  }
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (global_batch < 1) throw ConfigError("global_batch must be >= 1");
  if (grad_accum_steps < 1 || global_batch % grad_accum_steps != 0) {
    throw ConfigError("global_batch must be a multiple of grad_accum_steps");
  }
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ConfigError("adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw ConfigError("adam_eps must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be non-negative");
  if (!(sampling_alpha >= 0.0)) throw ConfigError("sampling_alpha must be non-negative");
  if (mt_probability > 1.0) throw ConfigError("mt_probability must be <= 1");
  if (!use_dae && !use_mt) throw ConfigError("use_dae and use_mt cannot both be false");
}

std::size_t warmup_steps(std::size_t total_steps, const TrainConfig& cfg,
                         std::size_t steps_per_epoch) {
  if (total_steps == 0) throw ConfigError("total_steps must be positive");
  std::size_t w = 0;
  if (cfg.warmup_mode == WarmupMode::FirstEpoch && steps_per_epoch > 0) {
    w = steps_per_epoch;
  } else {
    w = static_cast<std::size_t>(
        std::ceil(cfg.warmup_proportion * static_cast<double>(total_steps) - 1e-9));
  }
  return std::clamp<std::size_t>(w, 1, total_steps);
}

double lr_schedule(std::size_t step, std::size_t total_steps, const TrainConfig& cfg,
                   std::size_t steps_per_epoch) {
  if (total_steps == 0) throw ConfigError("total_steps must be positive");
  if (step > total_steps) throw ConfigError("step beyond total_steps");
  const std::size_t w = warmup_steps(total_steps, cfg, steps_per_epoch);
  if (step <= w) {
    const double frac = static_cast<double>(step) / static_cast<double>(w);
    return cfg.warmup_floor_lr + (cfg.peak_lr - cfg.warmup_floor_lr) * frac;
  }
  return cfg.peak_lr * static_cast<double>(total_steps - step) /
         static_cast<double>(total_steps - w);
}

double teacher_forcing_ratio(int epoch, int total_epochs, const TrainConfig& cfg) {
  if (total_epochs < 1 || epoch < 1 || epoch > total_epochs) {
    throw ConfigError("epoch must lie in [1, total_epochs]");
  }
  if (epoch == 1) return 1.0;
  const double frac = static_cast<double>(epoch - 1) / static_cast<double>(total_epochs - 1);
  return 1.0 + (cfg.tf_final_ratio - 1.0) * frac;
}

}  // namespace swcm

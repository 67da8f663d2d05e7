// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "swcm/layout.hpp"
#include "swcm/model.hpp"
#include "swcm/noise.hpp"
#include "swcm/train.hpp"

namespace swcm {

/// Line-oriented `key = value` run configuration. `#` starts a comment.
/// Relative paths resolve against the directory of the config file.
struct RunConfig {
  ModelConfig model{4, 32, 4, 64, 0, 64, 3};  // vocab_size 0: size of the vocabulary file
  TrainConfig train;
  NoiseConfig noise;
  std::uint64_t seed = 0;

  bool use_weight_sharing = true;
  NormalLayerMode normal_layer_mode = NormalLayerMode::Insert;
  bool tie_grafted_weights = false;

  std::string vocab_path;
  std::string monolingual_path;   // DAE data
  std::string parallel_path;      // MT pairs (pretrain) or task pairs (finetune)
  std::string valid_path;         // held-out monolingual (pretrain) or pairs (finetune)
  std::string encoder_checkpoint; // pretrained encoder to graft from
  std::string init_checkpoint;    // full model to start from
  std::string output_dir = ".";
  std::size_t checkpoint_every = 0;  // 0: only at the end
  int eval_max_new = 64;

  /// Applies one assignment; throws ConfigError for unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  /// Every key with its current value, in documentation order.
  std::vector<std::pair<std::string, std::string>> entries() const;
  std::string to_text() const;
  void validate() const;

  static const std::vector<std::string>& keys();
  static RunConfig parse(const std::string& text, const std::string& base_dir = "");
  /// Parses the file, then applies the SWCM_SEED override if set.
  static RunConfig load(const std::string& path);
};

/// Seed from SWCM_SEED when set, else `fallback`. Throws ConfigError on a
/// malformed value.
std::uint64_t seed_override(std::uint64_t fallback);

}  // namespace swcm

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "swcm/model.hpp"
#include "swcm/tokens.hpp"

namespace swcm {

struct NoiseConfig {
  double mask_ratio = 0.35;
  double span_lambda = 3.5;
  std::uint64_t seed = 0;

  void validate() const;
};

struct NoisedExample {
  std::vector<TokenId> input;   // framed, spans collapsed to <mask>
  std::vector<TokenId> target;  // the uncorrupted framed sequence
  TokenId language = special::kUnk;
};

/// Text-infilling corruption of a framed sequence `<s> lang body </s>`.
///
/// Spans with Poisson(span_lambda) lengths (redrawn while zero) are placed at
/// uniform body positions until ceil(mask_ratio * |body|) body tokens are
/// covered; the last span is cut at that budget. Each maximal covered run
/// becomes one `<mask>`. Frame tokens are never touched.
NoisedExample dae_noise(std::span<const TokenId> framed, const NoiseConfig& cfg, Rng& rng);
/// Uses a generator seeded from cfg.seed.
NoisedExample dae_noise(std::span<const TokenId> framed, const NoiseConfig& cfg);

}  // namespace swcm

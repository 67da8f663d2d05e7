// SPDX-License-Identifier: Apache-2.0
#include "swcm/noise.hpp"

#include <cmath>

#include "swcm/error.hpp"

namespace swcm {

void NoiseConfig::validate() const {
  if (!(mask_ratio >= 0.0 && mask_ratio <= 1.0)) throw ConfigError("mask_ratio must lie in [0, 1]");
  if (!(span_lambda > 0.0)) throw ConfigError("span_lambda must be positive");
}

NoisedExample dae_noise(std::span<const TokenId> framed, const NoiseConfig& cfg, Rng& rng) {
  cfg.validate();
  if (framed.size() < 3 || framed.front() != special::kBos || framed.back() != special::kEos) {
    throw ShapeError("dae_noise expects a framed sequence");
  }
  NoisedExample ex;
  ex.target.assign(framed.begin(), framed.end());
  ex.language = framed[1];

  const std::size_t body_begin = 2;
  const std::size_t body_len = framed.size() - 3;
  std::vector<bool> covered(body_len, false);
  const auto budget = static_cast<std::size_t>(std::ceil(cfg.mask_ratio * static_cast<double>(body_len) - 1e-9));
  std::size_t count = 0;
  if (budget > 0) {
    std::poisson_distribution<long long> span_length(cfg.span_lambda);
    std::uniform_int_distribution<std::size_t> start_at(0, body_len - 1);
    while (count < budget) {
      long long len = span_length(rng);
      while (len < 1) len = span_length(rng);
      std::size_t pos = start_at(rng);
      for (long long k = 0; k < len && pos < body_len && count < budget; ++k, ++pos) {
        if (!covered[pos]) {
          covered[pos] = true;
          ++count;
        }
      }
    }
  }

  ex.input.reserve(framed.size());
  ex.input.push_back(framed[0]);
  ex.input.push_back(framed[1]);
  for (std::size_t i = 0; i < body_len; ++i) {
    if (!covered[i]) {
      ex.input.push_back(framed[body_begin + i]);
    } else if (i == 0 || !covered[i - 1]) {
      ex.input.push_back(special::kMask);
    }
  }
  ex.input.push_back(special::kEos);
  return ex;
}

NoisedExample dae_noise(std::span<const TokenId> framed, const NoiseConfig& cfg) {
  Rng rng = derive_rng(cfg.seed, "dae_noise");
  return dae_noise(framed, cfg, rng);
}

}  // namespace swcm

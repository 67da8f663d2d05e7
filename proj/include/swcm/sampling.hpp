// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "swcm/model.hpp"

namespace swcm {

/// Smoothed language distribution p_i = q_i^alpha / sum_j q_j^alpha.
struct SamplingWeights {
  std::vector<double> q;  // raw proportions, normalized
  std::vector<double> p;  // smoothed probabilities
  double alpha = 0.3;
};

/// `q` is normalized if it does not already sum to one. Throws DomainError
/// for non-positive entries or a negative alpha.
SamplingWeights sampling_weights(std::span<const double> q, double alpha = 0.3);

/// Proportions from per-language example counts.
std::vector<double> proportions(std::span<const std::size_t> counts);

/// Index of the drawn language, with probability p_i.
std::size_t sample_language(const SamplingWeights& weights, Rng& rng);

}  // namespace swcm

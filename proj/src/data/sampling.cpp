// SPDX-License-Identifier: Apache-2.0
#include "swcm/sampling.hpp"

#include <cmath>

#include "swcm/error.hpp"

namespace swcm {

SamplingWeights sampling_weights(std::span<const double> q, double alpha) {
  if (q.empty()) throw DomainError("sampling weights need at least one language");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw DomainError("alpha must be a finite value >= 0");
  double total = 0.0;
  for (double v : q) {
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("language proportions must be positive");
    total += v;
  }
  SamplingWeights w;
  w.alpha = alpha;
  w.q.reserve(q.size());
  for (double v : q) w.q.push_back(v / total);
  double z = 0.0;
  for (double v : w.q) {
    w.p.push_back(std::pow(v, alpha));
    z += w.p.back();
  }
  for (double& v : w.p) v /= z;
  return w;
}

std::vector<double> proportions(std::span<const std::size_t> counts) {
  double total = 0.0;
  for (auto c : counts) total += static_cast<double>(c);
  std::vector<double> q;
  for (auto c : counts) q.push_back(total > 0.0 ? static_cast<double>(c) / total : 0.0);
  return q;
}

std::size_t sample_language(const SamplingWeights& weights, Rng& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.p.size(); ++i) {
    acc += weights.p[i];
    if (u < acc) return i;
  }
  return weights.p.size() - 1;
}

}  // namespace swcm

// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <unordered_map>

#include "swcm/error.hpp"
#include "swcm/train.hpp"

namespace swcm {

OptimizerState OptimizerState::from_config(const TrainConfig& cfg) {
  OptimizerState s;
  s.beta1 = cfg.adam_beta1;
  s.beta2 = cfg.adam_beta2;
  s.eps = cfg.adam_eps;
  s.weight_decay = cfg.weight_decay;
  return s;
}

void adamw_step(std::span<NamedTensor> params, OptimizerState& state, double lr) {
  for (auto& p : params) {
    if (!p.tensor.has_grad()) continue;
    for (double g : p.tensor.mutable_grad()) {
      if (!std::isfinite(g)) throw NumericError("non-finite gradient in " + p.name);
    }
  }

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < state.moments.size(); ++i) index.emplace(state.moments[i].name, i);
  for (auto& p : params) {
    auto it = index.find(p.name);
    if (it == index.end()) {
      index.emplace(p.name, state.moments.size());
      state.moments.push_back({p.name, std::vector<double>(p.tensor.numel(), 0.0),
                               std::vector<double>(p.tensor.numel(), 0.0)});
    } else if (state.moments[it->second].m.size() != p.tensor.numel()) {
      throw ShapeError("optimizer moments do not match parameter " + p.name);
    }
  }

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  for (auto& p : params) {
    auto& mom = state.moments[index.at(p.name)];
    auto w = p.tensor.mutable_data();
    const bool has_grad = p.tensor.has_grad();
    std::span<double> g = has_grad ? p.tensor.mutable_grad() : std::span<double>{};
    const double decay = p.tensor.rank() >= 2 ? 1.0 - lr * state.weight_decay : 1.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = has_grad ? g[i] : 0.0;
      w[i] *= decay;
      mom.m[i] = state.beta1 * mom.m[i] + (1.0 - state.beta1) * gi;
      mom.v[i] = state.beta2 * mom.v[i] + (1.0 - state.beta2) * gi * gi;
      const double m_hat = mom.m[i] / bc1;
      const double v_hat = mom.v[i] / bc2;
      w[i] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

double global_grad_norm(std::span<const NamedTensor> params) {
  double sq = 0.0;
  for (const auto& p : params) {
    if (!p.tensor.has_grad()) continue;
    for (double g : p.tensor.grad()) sq += g * g;
  }
  return std::sqrt(sq);
}

double clip_gradients(std::span<NamedTensor> params, double max_norm) {
  const double norm = global_grad_norm(params);
  if (norm > max_norm) {
    const double factor = max_norm / norm;
    for (auto& p : params) {
      if (!p.tensor.has_grad()) continue;
      for (double& g : p.tensor.mutable_grad()) g *= factor;
    }
  }
  return norm;
}

std::vector<NamedTensor> trainable_parameters(const SharedWeightModel& model,
                                              const std::vector<std::string>& frozen_prefixes) {
  std::vector<NamedTensor> out;
  for (auto& p : unique_parameters(model)) {
    bool frozen = false;
    for (const auto& prefix : frozen_prefixes) {
      if (p.name.compare(0, prefix.size(), prefix) == 0) frozen = true;
    }
    if (!frozen) out.push_back(std::move(p));
  }
  return out;
}

}  // namespace swcm

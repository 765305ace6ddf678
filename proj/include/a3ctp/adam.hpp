#pragma once

#include <cmath>
#include <cstdint>

#include "a3ctp/tensor.hpp"

namespace a3ctp {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  bool operator==(const AdamConfig&) const = default;
};

struct AdamState {
  ParamSet first_moment;
  ParamSet second_moment;
  uint64_t step = 0;
  AdamConfig config;

  static AdamState for_params(const ParamSet& params, AdamConfig config = {}) {
    return AdamState{params.zeros_like(), params.zeros_like(), 0, config};
  }

  bool operator==(const AdamState&) const = default;
};

// One bias-corrected Adam update applied in place. Bumps params.version().
inline void adam_step(ParamSet& params, const ParamSet& grads, AdamState& state) {
  params.require_same_shape(grads, "adam_step");
  params.require_same_shape(state.first_moment, "adam_step");
  params.require_same_shape(state.second_moment, "adam_step");

  const auto& c = state.config;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);

  auto update = [&](Tensor& p, const Tensor& g, Tensor& m, Tensor& v) {
    for (size_t i = 0; i < p.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  };
  for (size_t l = 0; l < params.num_layers(); ++l) {
    Layer& p = params.layer(l);
    const Layer& g = grads.layer(l);
    update(p.weights, g.weights, state.first_moment.layer(l).weights, state.second_moment.layer(l).weights);
    update(p.bias, g.bias, state.first_moment.layer(l).bias, state.second_moment.layer(l).bias);
  }
  if (!params.all_finite()) throw NumericError("adam_step: non-finite parameter after update");
  params.bump_version();
}

// Rescales `grads` so its global L2 norm is at most `max_norm` (<= 0 disables).
// Returns the norm before clipping.
inline double clip_grad_norm(ParamSet& grads, double max_norm) {
  const double norm = std::sqrt(grads.squared_norm());
  if (!std::isfinite(norm)) throw NumericError("clip_grad_norm: non-finite gradient");
  if (max_norm > 0.0 && norm > max_norm) grads.scale(max_norm / norm);
  return norm;
}

}  // namespace a3ctp

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "a3ctp/losses.hpp"
#include "a3ctp/mlp.hpp"
#include "a3ctp/rng.hpp"
#include "a3ctp/tensor.hpp"

namespace a3ctp {

inline constexpr const char* kPolicyHead = "policy";
inline constexpr const char* kValueHead = "value";
inline constexpr const char* kTpHead = "tp";

inline std::string trunk_layer_name(size_t k) { return "trunk" + std::to_string(k); }

struct ModelConfig {
  size_t observation_size = 0;
  size_t action_count = 0;
  std::vector<size_t> hidden{128, 128};
  Activation activation = Activation::tanh;
  bool tp_head = true;

  bool operator==(const ModelConfig&) const = default;
};

struct ModelOutput {
  std::vector<double> policy;
  std::vector<double> log_policy;
  double value = 0.0;
  double tp_prediction = 0.5;
};

// Per-step learning targets. The advantage is a constant for differentiation.
struct StepTargets {
  double n_step_return = 0.0;
  double advantage = 0.0;
  double tp_target = 0.0;
  bool tp_active = false;
};

// Shared trunk feeding softmax policy, linear value and sigmoid terminal
// prediction heads, all attached to the last trunk layer. The object only
// carries the architecture; parameters are always passed in.
class ActorCritic {
 public:
  explicit ActorCritic(ModelConfig config) : config_(std::move(config)) {
    if (config_.observation_size == 0) throw std::invalid_argument("ActorCritic: observation size must be > 0");
    if (config_.action_count < 2) throw std::invalid_argument("ActorCritic: need at least 2 actions");
  }

  const ModelConfig& config() const { return config_; }
  size_t trunk_depth() const { return config_.hidden.size(); }
  size_t feature_size() const { return config_.hidden.empty() ? config_.observation_size : config_.hidden.back(); }

  // Trunk layers first, then policy, value and (optionally) tp, each drawn
  // uniformly in +-1/sqrt(fan_in). The tp head is drawn last so a model
  // without it shares every other initial value.
  ParamSet init_params(Rng& rng) const {
    ParamSet p = zero_params();
    p.init_uniform(rng);
    return p;
  }

  ParamSet zero_params() const {
    ParamSet p;
    size_t fan_in = config_.observation_size;
    for (size_t k = 0; k < config_.hidden.size(); ++k) {
      p.add_layer(trunk_layer_name(k), fan_in, config_.hidden[k]);
      fan_in = config_.hidden[k];
    }
    p.add_layer(kPolicyHead, fan_in, config_.action_count);
    p.add_layer(kValueHead, fan_in, 1);
    if (config_.tp_head) p.add_layer(kTpHead, fan_in, 1);
    return p;
  }

  bool compatible(const ParamSet& params) const {
    const size_t expected_layers = trunk_depth() + (config_.tp_head ? 3 : 2);
    if (params.num_layers() != expected_layers) return false;
    size_t fan_in = config_.observation_size;
    auto matches = [&](size_t i, const std::string& name, size_t fan_out) {
      const Layer& l = params.layer(i);
      return l.name == name && l.fan_in() == fan_in && l.fan_out() == fan_out && l.bias.size() == fan_out;
    };
    for (size_t k = 0; k < trunk_depth(); ++k) {
      if (!matches(k, trunk_layer_name(k), config_.hidden[k])) return false;
      fan_in = config_.hidden[k];
    }
    const size_t base = trunk_depth();
    return matches(base, kPolicyHead, config_.action_count) && matches(base + 1, kValueHead, 1) &&
           (!config_.tp_head || matches(base + 2, kTpHead, 1));
  }

  ModelOutput forward(const ParamSet& params, std::span<const double> obs) const {
    return run_forward(params, obs).out;
  }

  // Accumulates scale * d(loss)/d(params) into `grads` for one transition.
  // Returns the unweighted per-step loss terms.
  LossComponents backward(const ParamSet& params, std::span<const double> obs, size_t action,
                          const LossWeights& w, const StepTargets& t, ParamSet& grads, double scale = 1.0) const {
    if (action >= config_.action_count)
      throw std::out_of_range("ActorCritic::backward: invalid action index " + std::to_string(action));
    check_params(params);
    if (!params.same_shape(grads)) throw ShapeError("ActorCritic::backward: gradient buffer shape mismatch");

    const Forward f = run_forward(params, obs);
    const ModelOutput& out = f.out;
    const size_t n_actions = config_.action_count;
    const size_t base = trunk_depth();

    LossComponents loss;
    loss.policy = -out.log_policy[action] * t.advantage;
    loss.value = (t.n_step_return - out.value) * (t.n_step_return - out.value);
    double h = 0.0;
    for (size_t a = 0; a < n_actions; ++a)
      if (out.policy[a] > 0.0) h -= out.policy[a] * out.log_policy[a];
    loss.entropy = h;

    std::vector<double> feature_grad(feature_size(), 0.0);

    // policy logits: lambda_pi * A * (p - onehot) + lambda_h * p * (log p + H)
    std::vector<double> logit_grad(n_actions);
    for (size_t a = 0; a < n_actions; ++a) {
      const double p = out.policy[a];
      double g = w.lambda_pi * t.advantage * (p - (a == action ? 1.0 : 0.0));
      g += w.lambda_h * p * (out.log_policy[a] + h);
      logit_grad[a] = scale * g;
    }
    head_backward(params, base, f.features, logit_grad, grads, feature_grad);

    const double value_grad = scale * w.lambda_v * 2.0 * (out.value - t.n_step_return);
    head_backward(params, base + 1, f.features, std::span<const double>(&value_grad, 1), grads, feature_grad);

    if (config_.tp_head) {
      const double d = t.tp_target - out.tp_prediction;
      loss.tp = d * d;
      if (t.tp_active && w.lambda_tp != 0.0) {
        const double y = out.tp_prediction;
        const double tp_grad = scale * w.lambda_tp * 2.0 * (y - t.tp_target) * y * (1.0 - y);
        head_backward(params, base + 2, f.features, std::span<const double>(&tp_grad, 1), grads, feature_grad);
      }
    }

    if (base > 0) backward_mlp_accumulate(params, f.trunk, feature_grad, grads);
    return loss;
  }

  ParamSet backward(const ParamSet& params, std::span<const double> obs, size_t action, const LossWeights& w,
                    const StepTargets& t) const {
    ParamSet grads = params.zeros_like();
    backward(params, obs, action, w, t, grads);
    return grads;
  }

  static size_t greedy_action(const ModelOutput& out) {
    return static_cast<size_t>(std::max_element(out.policy.begin(), out.policy.end()) - out.policy.begin());
  }

 private:
  struct Forward {
    ModelOutput out;
    std::vector<double> features;
    MlpCache trunk;
  };

  void check_params(const ParamSet& params) const {
    if (!compatible(params)) throw ShapeError("ActorCritic: parameters do not match the model architecture");
  }

  static std::vector<double> linear(const Layer& l, std::span<const double> x) {
    std::vector<double> y(l.fan_out());
    const size_t n_in = l.fan_in();
    for (size_t o = 0; o < y.size(); ++o) {
      const double* w = l.weights.data() + o * n_in;
      double s = l.bias[o];
      for (size_t i = 0; i < n_in; ++i) s += w[i] * x[i];
      y[o] = s;
    }
    return y;
  }

  static void head_backward(const ParamSet& params, size_t index, std::span<const double> features,
                            std::span<const double> out_grad, ParamSet& grads, std::vector<double>& feature_grad) {
    const Layer& l = params.layer(index);
    Layer& g = grads.layer(index);
    const size_t n_in = l.fan_in();
    for (size_t o = 0; o < out_grad.size(); ++o) {
      const double d = out_grad[o];
      g.bias[o] += d;
      double* gw = g.weights.data() + o * n_in;
      const double* w = l.weights.data() + o * n_in;
      for (size_t i = 0; i < n_in; ++i) {
        gw[i] += d * features[i];
        feature_grad[i] += d * w[i];
      }
    }
  }

  Forward run_forward(const ParamSet& params, std::span<const double> obs) const {
    if (obs.size() != config_.observation_size)
      throw ShapeError("ActorCritic: observation has length " + std::to_string(obs.size()) + ", expected " +
                       std::to_string(config_.observation_size));
    check_params(params);
    Forward f;
    const size_t base = trunk_depth();
    if (base > 0) {
      MlpForward trunk = forward_mlp(params, obs, {config_.activation, true}, {0, base});
      f.features = std::move(trunk.output);
      f.trunk = std::move(trunk.cache);
    } else {
      f.features.assign(obs.begin(), obs.end());
    }

    const std::vector<double> logits = linear(params.layer(base), f.features);
    const double max_logit = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double z : logits) sum += std::exp(z - max_logit);
    const double log_norm = max_logit + std::log(sum);
    f.out.policy.resize(logits.size());
    f.out.log_policy.resize(logits.size());
    for (size_t a = 0; a < logits.size(); ++a) {
      f.out.log_policy[a] = logits[a] - log_norm;
      f.out.policy[a] = std::exp(f.out.log_policy[a]);
    }
    f.out.value = linear(params.layer(base + 1), f.features)[0];
    if (config_.tp_head) {
      const double z = linear(params.layer(base + 2), f.features)[0];
      const double s = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
      // saturated logits round to exactly 0 or 1; keep the output strictly inside
      f.out.tp_prediction = std::clamp(s, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
    }
    if (!std::isfinite(f.out.value) || !std::isfinite(log_norm) || !std::isfinite(f.out.tp_prediction))
      throw NumericError("ActorCritic: non-finite head output");
    return f;
  }

  ModelConfig config_;
};

}  // namespace a3ctp

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <mutex>
#include <span>
#include <stdexcept>
#include <vector>

namespace a3ctp {

// Episodes averaged by the terminal-prediction horizon N.
inline constexpr size_t kTpWindow = 100;

struct LossWeights {
  double lambda_v = 0.5;
  double lambda_pi = 1.0;
  double lambda_h = 0.01;
  double lambda_tp = 0.5;
  double gamma = 0.99;
  size_t t_max = 20;

  void validate() const {
    if (!(lambda_v >= 0 && lambda_pi >= 0 && lambda_h >= 0 && lambda_tp >= 0))
      throw std::invalid_argument("LossWeights: coefficients must be nonnegative");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("LossWeights: gamma must be in [0,1]");
    if (t_max < 1) throw std::invalid_argument("LossWeights: t_max must be >= 1");
  }

  bool operator==(const LossWeights&) const = default;
};

// R_k = r_k + gamma * R_{k+1}, seeded with the bootstrap value (0 when terminal).
inline std::vector<double> n_step_returns(std::span<const double> rewards, double bootstrap_value, double gamma,
                                          bool terminal) {
  if (rewards.empty()) throw std::invalid_argument("n_step_returns: empty reward list");
  std::vector<double> out(rewards.size());
  double running = terminal ? 0.0 : bootstrap_value;
  for (size_t k = rewards.size(); k-- > 0;) {
    running = rewards[k] + gamma * running;
    out[k] = running;
  }
  return out;
}

inline std::vector<double> advantages(std::span<const double> returns, std::span<const double> values) {
  if (returns.size() != values.size()) throw std::invalid_argument("advantages: length mismatch");
  std::vector<double> out(returns.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = returns[i] - values[i];
  return out;
}

inline double entropy(std::span<const double> policy) {
  double total = 0.0, h = 0.0;
  for (double p : policy) {
    if (!(p >= 0.0)) throw std::invalid_argument("entropy: negative probability");
    total += p;
    if (p > 0.0) h -= p * std::log(p);
  }
  if (policy.empty() || std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("entropy: distribution not normalized");
  return h;
}

// y_i = min(i / N, 1) for absolute in-episode step indices.
inline std::vector<double> tp_targets(std::span<const size_t> step_indices, double horizon) {
  if (!(horizon > 0.0)) throw std::invalid_argument("tp_targets: horizon N must be positive");
  std::vector<double> out(step_indices.size());
  for (size_t k = 0; k < out.size(); ++k)
    out[k] = std::min(static_cast<double>(step_indices[k]) / horizon, 1.0);
  return out;
}

inline double tp_loss(std::span<const double> targets, std::span<const double> predictions) {
  if (targets.size() != predictions.size()) throw std::invalid_argument("tp_loss: length mismatch");
  if (targets.empty()) return 0.0;
  double s = 0.0;
  for (size_t i = 0; i < targets.size(); ++i) {
    const double d = targets[i] - predictions[i];
    s += d * d;
  }
  return s / static_cast<double>(targets.size());
}

// Per-rollout mean loss components.
struct LossComponents {
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;
  double tp = 0.0;
};

// L = lambda_v L_v + lambda_pi L_pi - lambda_h H + lambda_tp L_tp.
inline double combined_loss(const LossComponents& c, const LossWeights& w) {
  if (!std::isfinite(c.policy) || !std::isfinite(c.value) || !std::isfinite(c.entropy) || !std::isfinite(c.tp))
    throw std::invalid_argument("combined_loss: non-finite component");
  double loss = w.lambda_v * c.value + w.lambda_pi * c.policy - w.lambda_h * c.entropy;
  if (w.lambda_tp != 0.0) loss += w.lambda_tp * c.tp;
  return loss;
}

// Running average of the most recent kTpWindow episode lengths.
class TPLabeler {
 public:
  void record_episode(size_t length) {
    if (length < 1) throw std::invalid_argument("TPLabeler: episode length must be >= 1");
    lengths_.push_back(length);
    if (lengths_.size() > kTpWindow) lengths_.pop_front();
    // summed afresh in buffer order, so N is the same however it was reached
    double s = 0.0;
    for (size_t l : lengths_) s += static_cast<double>(l);
    horizon_ = s / static_cast<double>(lengths_.size());
  }

  // 0 until the first episode is recorded.
  double horizon() const { return horizon_; }
  bool ready() const { return !lengths_.empty(); }
  size_t size() const { return lengths_.size(); }
  const std::deque<size_t>& lengths() const { return lengths_; }

 private:
  std::deque<size_t> lengths_;
  double horizon_ = 0.0;
};

// TPLabeler shared by all workers of a run.
class SharedTPLabeler {
 public:
  void record_episode(size_t length) {
    std::lock_guard lock(mutex_);
    labeler_.record_episode(length);
  }
  double horizon() const {
    std::lock_guard lock(mutex_);
    return labeler_.horizon();
  }
  TPLabeler snapshot() const {
    std::lock_guard lock(mutex_);
    return labeler_;
  }

 private:
  mutable std::mutex mutex_;
  TPLabeler labeler_;
};

}  // namespace a3ctp

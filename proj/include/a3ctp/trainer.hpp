#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <thread>
#include <variant>
#include <vector>

#include "a3ctp/adam.hpp"
#include "a3ctp/env.hpp"
#include "a3ctp/losses.hpp"
#include "a3ctp/model.hpp"
#include "a3ctp/rng.hpp"
#include "a3ctp/tensor.hpp"

namespace a3ctp {

struct Transition {
  std::vector<double> observation;
  size_t action = 0;
  double reward = 0.0;
  double value = 0.0;
  double tp_prediction = 0.0;
  size_t episode_step = 0;  // steps already taken in the episode when observed

  bool operator==(const Transition&) const = default;
};

struct Rollout {
  std::vector<Transition> steps;
  bool terminal = false;
  double bootstrap_value = 0.0;  // V(s_{t+n}); 0 when terminal
  double horizon = 0.0;          // running-average N at collection time, 0 if none yet
  std::optional<EpisodeOutcome> outcome;

  bool operator==(const Rollout&) const = default;
};

// Where a worker is inside its current episode.
struct EpisodeCursor {
  std::vector<double> observation;
  size_t step = 0;
  double reward = 0.0;
  bool needs_reset = true;
};

// Up to t_max on-policy transitions; stops early at a terminal state.
inline Rollout collect_rollout(const ActorCritic& model, const ParamSet& params, Environment& env,
                               EpisodeCursor& cursor, double horizon, size_t t_max, Rng& rng) {
  if (t_max < 1) throw std::invalid_argument("collect_rollout: t_max must be >= 1");
  if (cursor.needs_reset) {
    cursor.observation = env.reset(rng);
    cursor.step = 0;
    cursor.reward = 0.0;
    cursor.needs_reset = false;
  }
  Rollout r;
  r.horizon = horizon;
  r.steps.reserve(t_max);
  for (size_t k = 0; k < t_max; ++k) {
    const ModelOutput out = model.forward(params, cursor.observation);
    const size_t action = rng.categorical(out.policy);
    StepResult res = env.step(action, rng);
    r.steps.push_back(Transition{std::move(cursor.observation), action, res.reward, out.value, out.tp_prediction,
                                 cursor.step});
    cursor.step += 1;
    cursor.reward += res.reward;
    cursor.observation = std::move(res.observation);
    if (res.terminal) {
      r.terminal = true;
      r.outcome = res.outcome;
      cursor.needs_reset = true;
      return r;
    }
  }
  r.bootstrap_value = model.forward(params, cursor.observation).value;
  return r;
}

struct UpdateResult {
  ParamSet grads;
  LossComponents losses;  // means over the rollout
  double loss = 0.0;
  double grad_norm = 0.0;  // before clipping
  bool tp_active = false;
};

// Gradient of the combined loss averaged over the rollout, then clipped to
// `grad_clip` in global norm. The terminal-prediction term only participates
// when `use_tp` is set, the model has the head and N is known.
inline UpdateResult compute_update(const ActorCritic& model, const Rollout& rollout, const ParamSet& params,
                                   const LossWeights& weights, bool use_tp, double grad_clip) {
  if (rollout.steps.empty()) throw std::invalid_argument("compute_update: empty rollout");
  const size_t n = rollout.steps.size();
  std::vector<double> rewards(n), values(n);
  std::vector<size_t> indices(n);
  for (size_t i = 0; i < n; ++i) {
    rewards[i] = rollout.steps[i].reward;
    values[i] = rollout.steps[i].value;
    indices[i] = rollout.steps[i].episode_step;
  }
  const std::vector<double> returns = n_step_returns(rewards, rollout.bootstrap_value, weights.gamma, rollout.terminal);
  const std::vector<double> adv = advantages(returns, values);
  const bool have_targets = model.config().tp_head && rollout.horizon > 0.0;
  const std::vector<double> targets = have_targets ? tp_targets(indices, rollout.horizon) : std::vector<double>(n, 0.0);

  UpdateResult u;
  u.tp_active = use_tp && have_targets;
  LossWeights effective = weights;
  if (!u.tp_active) effective.lambda_tp = 0.0;

  u.grads = params.zeros_like();
  const double scale = 1.0 / static_cast<double>(n);
  for (size_t i = 0; i < n; ++i) {
    const Transition& t = rollout.steps[i];
    const StepTargets st{returns[i], adv[i], targets[i], u.tp_active};
    const LossComponents c = model.backward(params, t.observation, t.action, effective, st, u.grads, scale);
    u.losses.policy += c.policy * scale;
    u.losses.value += c.value * scale;
    u.losses.entropy += c.entropy * scale;
    if (have_targets) u.losses.tp += c.tp * scale;
  }
  u.loss = combined_loss(u.losses, effective);
  if (!std::isfinite(u.loss)) throw NumericError("compute_update: non-finite loss");
  u.grad_norm = clip_grad_norm(u.grads, grad_clip);
  return u;
}

// Shared parameters, optimizer state and TP labeler. Updates are serialized
// under one writer lock; snapshots take a shared lock.
class GlobalStore {
 public:
  GlobalStore(ParamSet params, AdamConfig adam)
      : params_(std::move(params)), optimizer_(AdamState::for_params(params_, adam)) {}

  ParamSet snapshot() const {
    std::shared_lock lock(mutex_);
    return params_;
  }

  std::pair<ParamSet, AdamState> snapshot_with_optimizer() const {
    std::shared_lock lock(mutex_);
    return {params_, optimizer_};
  }

  // One Adam step on the global parameters, then `local` becomes a fresh copy.
  void apply_and_sync(const ParamSet& grads, ParamSet& local) {
    std::unique_lock lock(mutex_);
    params_.require_same_shape(grads, "apply_and_sync");
    adam_step(params_, grads, optimizer_);
    ++updates_;
    local = params_;
  }

  uint64_t version() const {
    std::shared_lock lock(mutex_);
    return params_.version();
  }
  uint64_t updates() const {
    std::shared_lock lock(mutex_);
    return updates_;
  }

  SharedTPLabeler& labeler() { return labeler_; }
  const SharedTPLabeler& labeler() const { return labeler_; }

 private:
  mutable std::shared_mutex mutex_;
  ParamSet params_;
  AdamState optimizer_;
  uint64_t updates_ = 0;
  SharedTPLabeler labeler_;
};

// Unbounded FIFO between trainer workers and a single consumer.
template <class T>
class Channel {
 public:
  void push(T value) {
    {
      std::lock_guard lock(mutex_);
      if (closed_) throw std::logic_error("Channel: push after close");
      items_.push_back(std::move(value));
    }
    cv_.notify_one();
  }

  // Blocks until an item arrives; nullopt once closed and drained.
  std::optional<T> pop() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return !items_.empty() || closed_; });
    if (items_.empty()) return std::nullopt;
    T v = std::move(items_.front());
    items_.pop_front();
    return v;
  }

  void close() {
    {
      std::lock_guard lock(mutex_);
      closed_ = true;
    }
    cv_.notify_all();
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<T> items_;
  bool closed_ = false;
};

struct EpisodeRecord {
  size_t episode = 0;  // global index, 0-based, dense
  size_t worker = 0;
  size_t length = 0;
  double reward = 0.0;
  double horizon = 0.0;  // running N after this episode was recorded
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double tp_loss = 0.0;
  double entropy = 0.0;
  double wall_time = 0.0;  // seconds since training started
  std::optional<EpisodeOutcome> outcome;
};

struct CheckpointRecord {
  size_t episodes = 0;  // completed episodes at snapshot time
  ParamSet params;
  AdamState optimizer;
};

using TrainerEvent = std::variant<EpisodeRecord, CheckpointRecord>;
using EnvFactory = std::function<std::unique_ptr<Environment>()>;

struct TrainerConfig {
  ModelConfig model;
  AdamConfig adam;
  LossWeights weights;
  bool use_tp = true;
  size_t workers = 8;
  uint64_t seed = 1;
  size_t episode_budget = 0;
  size_t checkpoint_every = 0;  // episodes between checkpoint events, 0 = none
  double grad_clip = 40.0;
  EnvFactory make_env;
};

struct TrainResult {
  ParamSet params;
  AdamState optimizer;
  uint64_t updates = 0;
  uint64_t rollouts = 0;
  size_t episodes = 0;
};

inline constexpr uint64_t kInitSeedStream = 0x1417;

inline ParamSet initial_params(const TrainerConfig& cfg) {
  Rng rng(derive_seed(cfg.seed, kInitSeedStream));
  return ActorCritic(cfg.model).init_params(rng);
}

// Runs `workers` threads until `episode_budget` episodes have completed.
// Episode records (and checkpoint snapshots) are pushed to `events` in global
// episode order; the channel is closed before returning. A worker failure
// stops the run and is rethrown after the channel has been closed.
inline TrainResult train(const TrainerConfig& cfg, Channel<TrainerEvent>& events) {
  cfg.weights.validate();
  if (!cfg.make_env) {
    events.close();
    throw std::invalid_argument("train: no environment factory");
  }
  const ActorCritic model(cfg.model);
  GlobalStore store(initial_params(cfg), cfg.adam);

  std::atomic<bool> stop{cfg.episode_budget == 0};
  std::atomic<uint64_t> rollouts{0};
  std::mutex episode_mutex;
  size_t episodes_done = 0;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto start = std::chrono::steady_clock::now();

  auto worker = [&](size_t id) {
    try {
      Rng rng(derive_seed(cfg.seed, id + 1));
      std::unique_ptr<Environment> env = cfg.make_env();
      if (env->spec().observation_size != cfg.model.observation_size ||
          env->spec().action_count != cfg.model.action_count)
        throw ShapeError("train: environment does not match the model");
      ParamSet local = store.snapshot();
      EpisodeCursor cursor;
      LossComponents episode_losses;

      while (!stop.load()) {
        const double horizon = store.labeler().horizon();
        const Rollout rollout = collect_rollout(model, local, *env, cursor, horizon, cfg.weights.t_max, rng);
        const UpdateResult update = compute_update(model, rollout, local, cfg.weights, cfg.use_tp, cfg.grad_clip);
        store.apply_and_sync(update.grads, local);
        rollouts.fetch_add(1);

        const double n = static_cast<double>(rollout.steps.size());
        episode_losses.policy += update.losses.policy * n;
        episode_losses.value += update.losses.value * n;
        episode_losses.tp += update.losses.tp * n;
        episode_losses.entropy += update.losses.entropy * n;
        if (!rollout.terminal) continue;

        const size_t length = cursor.step;
        store.labeler().record_episode(length);
        const double len = static_cast<double>(length);
        EpisodeRecord rec;
        rec.worker = id;
        rec.length = length;
        rec.reward = cursor.reward;
        rec.horizon = store.labeler().horizon();
        rec.policy_loss = episode_losses.policy / len;
        rec.value_loss = episode_losses.value / len;
        rec.tp_loss = episode_losses.tp / len;
        rec.entropy = episode_losses.entropy / len;
        rec.outcome = rollout.outcome;
        episode_losses = {};

        std::lock_guard lock(episode_mutex);
        if (episodes_done >= cfg.episode_budget) {
          stop = true;
          break;
        }
        rec.episode = episodes_done++;
        rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        events.push(rec);
        if (cfg.checkpoint_every > 0 && episodes_done % cfg.checkpoint_every == 0) {
          auto [params, optimizer] = store.snapshot_with_optimizer();
          events.push(CheckpointRecord{episodes_done, std::move(params), std::move(optimizer)});
        }
        if (episodes_done >= cfg.episode_budget) stop = true;
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      stop = true;
    }
  };

  if (cfg.episode_budget > 0) {
    std::vector<std::jthread> threads;
    threads.reserve(cfg.workers);
    for (size_t w = 0; w < std::max<size_t>(cfg.workers, 1); ++w) threads.emplace_back(worker, w);
  }
  events.close();
  if (failure) std::rethrow_exception(failure);

  TrainResult result;
  std::tie(result.params, result.optimizer) = store.snapshot_with_optimizer();
  result.updates = store.updates();
  result.rollouts = rollouts.load();
  result.episodes = episodes_done;
  return result;
}

}  // namespace a3ctp

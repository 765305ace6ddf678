#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "a3ctp/bomber_env.hpp"
#include "a3ctp/checkpoint.hpp"
#include "a3ctp/config.hpp"
#include "a3ctp/grid_goal.hpp"
#include "a3ctp/model.hpp"
#include "a3ctp/pole_balance.hpp"
#include "a3ctp/trainer.hpp"

namespace a3ctp {

namespace fs = std::filesystem;

// ---- environments and models from a config

inline std::unique_ptr<Environment> make_environment(const RunConfig& config) {
  const RunConfig c = config.resolved();
  if (c.env == "gridgoal") return std::make_unique<GridGoal>(c.grid_size, c.grid_max_steps);
  if (c.env == "polebalance") return std::make_unique<PoleBalance>(c.pole_max_steps);
  if (c.env == "minibomber") return std::make_unique<MiniBomberEnv>(c.board, c.opponent);
  throw ConfigError("unknown env '" + c.env + "'");
}

inline ModelConfig model_config(const RunConfig& c, const EnvSpec& spec) {
  ModelConfig m;
  m.observation_size = spec.observation_size;
  m.action_count = spec.action_count;
  m.hidden = c.hidden;
  m.activation = c.activation;
  m.tp_head = c.algorithm == Algorithm::a3c_tp;
  return m;
}

inline TrainerConfig trainer_config(const RunConfig& config) {
  const RunConfig c = config.resolved();
  c.validate();
  TrainerConfig t;
  t.model = model_config(c, make_environment(c)->spec());
  t.adam = c.adam;
  t.weights = c.weights;
  t.use_tp = c.algorithm == Algorithm::a3c_tp;
  t.workers = c.workers;
  t.seed = c.seed;
  t.episode_budget = c.episodes;
  t.checkpoint_every = c.checkpoint_every;
  t.grad_clip = c.grad_clip;
  t.make_env = [c] { return make_environment(c); };
  return t;
}

// ---- moving average

// Trailing mean over the last min(window, i+1) points, summed oldest first.
inline std::vector<double> moving_average(const std::vector<double>& series, size_t window) {
  if (window < 1) throw std::invalid_argument("moving_average: window must be >= 1");
  if (series.empty()) throw std::invalid_argument("moving_average: empty series");
  std::vector<double> out(series.size());
  for (size_t i = 0; i < series.size(); ++i) {
    const size_t first = i + 1 >= window ? i + 1 - window : 0;
    double sum = 0.0;
    for (size_t j = first; j <= i; ++j) sum += series[j];
    out[i] = sum / static_cast<double>(i + 1 - first);
  }
  return out;
}

// Streaming form of moving_average; produces the same bits.
class TrailingMean {
 public:
  explicit TrailingMean(size_t window) : window_(window) {
    if (window < 1) throw std::invalid_argument("TrailingMean: window must be >= 1");
  }
  double push(double x) {
    values_.push_back(x);
    if (values_.size() > window_) values_.pop_front();
    double sum = 0.0;
    for (double v : values_) sum += v;
    return sum / static_cast<double>(values_.size());
  }

 private:
  size_t window_;
  std::deque<double> values_;
};

// ---- metrics CSV

inline constexpr std::array<std::string_view, 12> kMetricsColumns = {
    "episode", "worker", "length", "reward", "running_n", "policy_loss", "value_loss",
    "tp_loss", "entropy", "reward_ma", "result", "cause"};
inline constexpr std::array<std::string_view, 2> kTimingColumns = {"episode", "wall_time_s"};

struct MetricsRow {
  size_t episode = 0;
  size_t worker = 0;
  size_t length = 0;
  double reward = 0.0;
  double running_n = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double tp_loss = 0.0;
  double entropy = 0.0;
  double reward_ma = 0.0;
  std::string result;  // empty outside MiniBomber
  std::string cause;

  bool operator==(const MetricsRow&) const = default;
};

template <size_t N>
inline std::string csv_header(const std::array<std::string_view, N>& cols) {
  std::string s;
  for (size_t i = 0; i < N; ++i) {
    if (i) s += ',';
    s += cols[i];
  }
  return s;
}

inline std::string format_metrics_row(const MetricsRow& r) {
  std::string s;
  s += std::to_string(r.episode) + ',' + std::to_string(r.worker) + ',' + std::to_string(r.length) + ',';
  s += format_double(r.reward) + ',' + format_double(r.running_n) + ',' + format_double(r.policy_loss) + ',';
  s += format_double(r.value_loss) + ',' + format_double(r.tp_loss) + ',' + format_double(r.entropy) + ',';
  s += format_double(r.reward_ma) + ',' + r.result + ',' + r.cause;
  return s;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    const size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

class MetricsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::vector<MetricsRow> parse_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw MetricsError("metrics: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != csv_header(kMetricsColumns)) throw MetricsError("metrics: unexpected header '" + line + "'");
  std::vector<MetricsRow> rows;
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != kMetricsColumns.size())
      throw MetricsError("metrics line " + std::to_string(lineno) + ": expected " +
                         std::to_string(kMetricsColumns.size()) + " fields");
    MetricsRow r;
    try {
      r.episode = parse_uint(f[0]);
      r.worker = parse_uint(f[1]);
      r.length = parse_uint(f[2]);
      r.reward = parse_double(f[3]);
      r.running_n = parse_double(f[4]);
      r.policy_loss = parse_double(f[5]);
      r.value_loss = parse_double(f[6]);
      r.tp_loss = parse_double(f[7]);
      r.entropy = parse_double(f[8]);
      r.reward_ma = parse_double(f[9]);
    } catch (const std::exception& e) {
      throw MetricsError("metrics line " + std::to_string(lineno) + ": " + e.what());
    }
    r.result = f[10];
    r.cause = f[11];
    if (!rows.empty() && r.episode <= rows.back().episode)
      throw MetricsError("metrics line " + std::to_string(lineno) + ": episode index not increasing");
    rows.push_back(std::move(r));
  }
  return rows;
}

inline std::vector<MetricsRow> load_metrics(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MetricsError("cannot open " + path.string());
  return parse_metrics_csv(in);
}

// ---- run directories

inline std::string checkpoint_name(size_t episodes) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "ep_%06zu.ckpt", episodes);
  return buf;
}

inline std::map<std::string, std::string> checkpoint_meta(const RunConfig& c, const ModelConfig& m, size_t episodes) {
  std::map<std::string, std::string> meta;
  for (const auto& e : config_entries()) meta["config." + e.key] = e.get(c);
  meta["model.observation_size"] = std::to_string(m.observation_size);
  meta["model.action_count"] = std::to_string(m.action_count);
  meta["model.hidden"] = format_size_list(m.hidden);
  meta["model.activation"] = std::string(to_string(m.activation));
  meta["model.tp_head"] = m.tp_head ? "1" : "0";
  meta["episodes"] = std::to_string(episodes);
  return meta;
}

struct RunResult {
  fs::path dir;
  size_t episodes = 0;
  uint64_t updates = 0;
  uint64_t rollouts = 0;
};

// Trains one run into config.output_dir:
//   config.txt, metrics.csv, timing.csv, checkpoints/ep_NNNNNN.ckpt, checkpoints/final.ckpt
// A trainer failure is rethrown after every row received so far is on disk.
inline RunResult run_experiment(const RunConfig& config) {
  const RunConfig c = config.resolved();
  c.validate();
  const TrainerConfig tc = trainer_config(c);
  const fs::path dir = c.output_dir;
  fs::create_directories(dir / "checkpoints");
  {
    std::ofstream cfg(dir / "config.txt");
    cfg << config_to_text(c);
    if (!cfg) throw std::runtime_error("cannot write " + (dir / "config.txt").string());
  }
  std::ofstream metrics(dir / "metrics.csv");
  std::ofstream timing(dir / "timing.csv");
  if (!metrics || !timing) throw std::runtime_error("cannot write metrics in " + dir.string());
  metrics << csv_header(kMetricsColumns) << '\n';
  timing << csv_header(kTimingColumns) << '\n';

  Channel<TrainerEvent> events;
  TrainResult trained;
  std::exception_ptr failure;
  std::jthread runner([&] {
    try {
      trained = train(tc, events);
    } catch (...) {
      failure = std::current_exception();
      events.close();
    }
  });

  TrailingMean ma(c.ma_window);
  while (auto ev = events.pop()) {
    if (const auto* rec = std::get_if<EpisodeRecord>(&*ev)) {
      MetricsRow row{rec->episode, rec->worker, rec->length, rec->reward, rec->horizon, rec->policy_loss,
                     rec->value_loss, rec->tp_loss, rec->entropy, ma.push(rec->reward), "", ""};
      if (rec->outcome) {
        row.result = to_string(rec->outcome->result);
        row.cause = to_string(rec->outcome->cause);
      }
      metrics << format_metrics_row(row) << '\n';
      timing << rec->episode << ',' << format_double(rec->wall_time) << '\n';
    } else {
      const auto& ck = std::get<CheckpointRecord>(*ev);
      save_checkpoint(dir / "checkpoints" / checkpoint_name(ck.episodes), ck.params, &ck.optimizer,
                      checkpoint_meta(c, tc.model, ck.episodes));
    }
  }
  runner.join();
  metrics.flush();
  timing.flush();
  if (failure) std::rethrow_exception(failure);

  save_checkpoint(dir / "checkpoints" / "final.ckpt", trained.params, &trained.optimizer,
                  checkpoint_meta(c, tc.model, trained.episodes));
  return RunResult{dir, trained.episodes, trained.updates, trained.rollouts};
}

// ---- lambda_tp sweep

inline fs::path sweep_run_dir(const fs::path& root, double lambda_tp, uint64_t seed) {
  return root / ("lambda_tp_" + format_double(lambda_tp)) / ("seed_" + std::to_string(seed));
}

struct SweepFailure {
  double lambda_tp = 0.0;
  uint64_t seed = 0;
  fs::path dir;
  std::string message;
};

struct SweepReport {
  std::vector<fs::path> completed;
  std::vector<SweepFailure> failures;
  bool ok() const { return failures.empty(); }
};

// One a3c-tp run per (value, seed) under base.output_dir. Runs that fail are
// reported; the rest still execute.
inline SweepReport sweep_lambda_tp(const RunConfig& base, const std::vector<double>& values,
                                   const std::vector<uint64_t>& seeds) {
  if (values.empty()) throw ConfigError("sweep: no lambda_tp values");
  if (seeds.empty()) throw ConfigError("sweep: no seeds");
  if (std::set<double>(values.begin(), values.end()).size() != values.size())
    throw ConfigError("sweep: duplicate lambda_tp values");
  if (std::set<uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    throw ConfigError("sweep: duplicate seeds");
  for (double v : values) {
    LossWeights w = base.weights;
    w.lambda_tp = v;
    w.validate();
  }
  SweepReport report;
  for (double v : values)
    for (uint64_t s : seeds) {
      RunConfig c = base;
      c.algorithm = Algorithm::a3c_tp;
      c.weights.lambda_tp = v;
      c.seed = s;
      c.output_dir = sweep_run_dir(base.output_dir, v, s).string();
      try {
        run_experiment(c);
        report.completed.push_back(c.output_dir);
      } catch (const std::exception& e) {
        report.failures.push_back({v, s, c.output_dir, e.what()});
      }
    }
  return report;
}

// ---- summarize

struct RunSummary {
  fs::path dir;
  RunConfig config;
  size_t episodes = 0;
  double final_ma = NAN;
  size_t episodes_to_threshold = 0;  // episodes consumed when first reached
  bool censored = false;             // never reached; reported as the budget
};

struct GroupSummary {
  std::string env;
  std::string algorithm;
  double lambda_tp = 0.0;
  double threshold = 0.0;
  size_t ma_window = 0;
  std::vector<RunSummary> runs;  // sorted by seed, then directory
  double final_ma_mean = NAN;
  double final_ma_std = NAN;
  double ett_mean = NAN;
  double ett_std = NAN;
  size_t censored = 0;
};

struct SummaryReport {
  std::vector<GroupSummary> groups;
};

// Population mean and std (divide by n).
inline std::pair<double, double> mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {NAN, NAN};
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / static_cast<double>(xs.size());
  double sq = 0.0;
  for (double x : xs) sq += (x - mean) * (x - mean);
  return {mean, std::sqrt(sq / static_cast<double>(xs.size()))};
}

// Threshold crossing only counts once a full window of episodes exists.
inline RunSummary summarize_run(const fs::path& dir, std::optional<double> threshold = std::nullopt) {
  RunSummary s;
  s.dir = dir;
  s.config = load_config(dir / "config.txt").resolved();
  const std::vector<MetricsRow> rows = load_metrics(dir / "metrics.csv");
  s.episodes = rows.size();
  const double thr = threshold.value_or(s.config.reward_threshold);
  if (!rows.empty()) s.final_ma = rows.back().reward_ma;
  s.censored = true;
  s.episodes_to_threshold = s.config.episodes;
  for (size_t i = 0; i < rows.size(); ++i) {
    if (i + 1 < s.config.ma_window) continue;
    if (rows[i].reward_ma >= thr) {
      s.episodes_to_threshold = i + 1;
      s.censored = false;
      break;
    }
  }
  return s;
}

inline std::string comparable_config(RunConfig c) {
  c.seed = 0;
  c.output_dir.clear();
  return config_to_text(c);
}

// Groups runs by (env, algorithm, lambda_tp). Input order does not matter.
inline SummaryReport summarize(std::vector<fs::path> dirs, std::optional<double> threshold = std::nullopt) {
  if (dirs.empty()) throw std::invalid_argument("summarize: no run directories");
  std::vector<RunSummary> runs;
  for (const auto& d : dirs) runs.push_back(summarize_run(d, threshold));
  std::sort(runs.begin(), runs.end(), [](const RunSummary& a, const RunSummary& b) {
    if (a.config.seed != b.config.seed) return a.config.seed < b.config.seed;
    return a.dir.lexically_normal().string() < b.dir.lexically_normal().string();
  });
  for (size_t i = 1; i < runs.size(); ++i)
    if (fs::weakly_canonical(runs[i].dir) == fs::weakly_canonical(runs[i - 1].dir))
      throw std::invalid_argument("summarize: directory given twice: " + runs[i].dir.string());

  using Key = std::tuple<std::string, std::string, double>;
  std::map<Key, GroupSummary> groups;
  for (auto& r : runs) {
    const Key key{r.config.env, std::string(to_string(r.config.algorithm)), r.config.weights.lambda_tp};
    GroupSummary& g = groups[key];
    if (g.runs.empty()) {
      g.env = std::get<0>(key);
      g.algorithm = std::get<1>(key);
      g.lambda_tp = std::get<2>(key);
      g.threshold = threshold.value_or(r.config.reward_threshold);
      g.ma_window = r.config.ma_window;
    } else if (comparable_config(g.runs.front().config) != comparable_config(r.config)) {
      throw ConfigError("summarize: runs " + g.runs.front().dir.string() + " and " + r.dir.string() +
                        " share a group but differ in configuration");
    }
    g.runs.push_back(r);
  }

  SummaryReport report;
  for (auto& [key, g] : groups) {
    std::vector<double> finals, etts;
    for (const auto& r : g.runs) {
      finals.push_back(r.final_ma);
      etts.push_back(static_cast<double>(r.episodes_to_threshold));
      g.censored += r.censored ? 1 : 0;
    }
    std::tie(g.final_ma_mean, g.final_ma_std) = mean_std(finals);
    std::tie(g.ett_mean, g.ett_std) = mean_std(etts);
    report.groups.push_back(std::move(g));
  }
  return report;
}

inline constexpr std::array<std::string_view, 11> kSummaryColumns = {
    "env", "algorithm", "lambda_tp", "runs", "ma_window", "threshold", "final_ma_mean",
    "final_ma_std", "episodes_to_threshold_mean", "episodes_to_threshold_std", "censored"};

inline std::string summary_csv(const SummaryReport& r) {
  std::string s = csv_header(kSummaryColumns) + "\n";
  for (const auto& g : r.groups) {
    s += g.env + ',' + g.algorithm + ',' + format_double(g.lambda_tp) + ',' + std::to_string(g.runs.size()) + ',' +
         std::to_string(g.ma_window) + ',' + format_double(g.threshold) + ',' + format_double(g.final_ma_mean) + ',' +
         format_double(g.final_ma_std) + ',' + format_double(g.ett_mean) + ',' + format_double(g.ett_std) + ',' +
         std::to_string(g.censored) + '\n';
  }
  return s;
}

inline std::string summary_table(const SummaryReport& r) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-12s %-7s %9s %4s %22s %26s\n", "env", "algo", "lambda_tp", "runs",
                "final MA (mean+-std)", "episodes-to-thr (mean+-std)");
  os << line;
  for (const auto& g : r.groups) {
    char ett[64];
    std::snprintf(ett, sizeof ett, "%.1f+-%.1f%s", g.ett_mean, g.ett_std,
                  g.censored ? (" [" + std::to_string(g.censored) + " censored]").c_str() : "");
    char fin[64];
    std::snprintf(fin, sizeof fin, "%.4f+-%.4f", g.final_ma_mean, g.final_ma_std);
    std::snprintf(line, sizeof line, "%-12s %-7s %9s %4zu %22s %26s\n", g.env.c_str(), g.algorithm.c_str(),
                  format_double(g.lambda_tp).c_str(), g.runs.size(), fin, ett);
    os << line;
  }
  for (const auto& g : r.groups)
    for (const auto& run : g.runs) {
      std::snprintf(line, sizeof line, "  %s seed=%llu final_ma=%.4f episodes_to_threshold=%zu%s\n",
                    run.dir.string().c_str(), static_cast<unsigned long long>(run.config.seed), run.final_ma,
                    run.episodes_to_threshold, run.censored ? " (censored)" : "");
      os << line;
    }
  return os.str();
}

// ---- evaluate

struct EvaluationOptions {
  size_t episodes = 100;
  uint64_t seed = 1;
  bool greedy = true;
  std::optional<fs::path> replay_dir;  // MiniBomber only
};

struct EvaluationReport {
  std::string env;
  size_t episodes = 0;
  double mean_reward = 0.0;
  double mean_length = 0.0;
  size_t wins = 0, losses = 0, ties = 0;
  std::map<std::string, size_t> causes;

  bool operator==(const EvaluationReport&) const = default;
};

// The run configuration stored alongside a checkpoint.
inline RunConfig config_from_checkpoint(const Checkpoint& ck) {
  RunConfig c;
  for (const auto& [k, v] : ck.meta)
    if (k.rfind("config.", 0) == 0) set_config_value(c, k.substr(7), v);
  return c;
}

inline ModelConfig model_from_checkpoint(const Checkpoint& ck) {
  auto need = [&](const std::string& key) -> const std::string& {
    const auto it = ck.meta.find(key);
    if (it == ck.meta.end()) throw CheckpointError("checkpoint: missing meta key " + key);
    return it->second;
  };
  ModelConfig m;
  m.observation_size = parse_uint(need("model.observation_size"));
  m.action_count = parse_uint(need("model.action_count"));
  m.hidden = parse_size_list(need("model.hidden"));
  m.activation = parse_activation(need("model.activation"));
  m.tp_head = need("model.tp_head") == "1";
  return m;
}

// Episode e runs on an environment generator seeded with derive_seed(seed, e)
// (so MiniBomber replays re-simulate from that seed alone) and, when
// sampling, a separate policy generator.
inline EvaluationReport evaluate(const Checkpoint& ck, const RunConfig& env_config, const EvaluationOptions& opt) {
  const ModelConfig mc = model_from_checkpoint(ck);
  const ActorCritic model(mc);
  if (!model.compatible(ck.params)) throw ShapeError("evaluate: checkpoint parameters do not match its model");
  std::unique_ptr<Environment> env = make_environment(env_config);
  const EnvSpec& spec = env->spec();
  if (spec.observation_size != mc.observation_size || spec.action_count != mc.action_count)
    throw ShapeError("evaluate: environment " + spec.name + " does not match the checkpoint (observation " +
                     std::to_string(spec.observation_size) + " vs " + std::to_string(mc.observation_size) + ")");
  if (const auto it = ck.meta.find("config.env"); it != ck.meta.end() && it->second != spec.name)
    throw ShapeError("evaluate: checkpoint was trained on " + it->second + ", not " + spec.name);

  EvaluationReport rep;
  rep.env = spec.name;
  rep.episodes = opt.episodes;
  auto* bomber_env = dynamic_cast<MiniBomberEnv*>(env.get());
  if (opt.replay_dir && bomber_env) fs::create_directories(*opt.replay_dir);
  double total_reward = 0.0, total_length = 0.0;
  for (size_t e = 0; e < opt.episodes; ++e) {
    const uint64_t env_seed = derive_seed(opt.seed, e);
    Rng env_rng(env_seed);
    Rng policy_rng(derive_seed(env_seed, kInitSeedStream));
    std::vector<double> obs = env->reset(env_rng);
    bomber::Replay replay;
    if (bomber_env) replay = bomber::Replay{env_seed, bomber_env->options(), bomber_env->opponent(), {}};
    double reward = 0.0;
    size_t length = 0;
    std::optional<EpisodeOutcome> outcome;
    while (true) {
      const ModelOutput out = model.forward(ck.params, obs);
      const size_t action = opt.greedy ? ActorCritic::greedy_action(out) : policy_rng.categorical(out.policy);
      if (bomber_env) replay.actions.push_back(static_cast<bomber::Action>(action));
      StepResult res = env->step(action, env_rng);
      reward += res.reward;
      ++length;
      obs = std::move(res.observation);
      if (res.terminal) {
        outcome = res.outcome;
        break;
      }
    }
    total_reward += reward;
    total_length += static_cast<double>(length);
    if (outcome) {
      if (outcome->result == GameResult::win) ++rep.wins;
      else if (outcome->result == GameResult::loss) ++rep.losses;
      else ++rep.ties;
      ++rep.causes[std::string(to_string(outcome->cause))];
    }
    if (opt.replay_dir && bomber_env) {
      char name[40];
      std::snprintf(name, sizeof name, "episode_%06zu.txt", e);
      std::ofstream os(*opt.replay_dir / name);
      os << bomber::replay_to_text(replay);
    }
  }
  if (opt.episodes > 0) {
    rep.mean_reward = total_reward / static_cast<double>(opt.episodes);
    rep.mean_length = total_length / static_cast<double>(opt.episodes);
  }
  return rep;
}

inline EvaluationReport evaluate(const fs::path& checkpoint, const EvaluationOptions& opt) {
  const Checkpoint ck = load_checkpoint(checkpoint);
  return evaluate(ck, config_from_checkpoint(ck), opt);
}

inline std::string format_report(const EvaluationReport& r) {
  std::ostringstream os;
  os << "env " << r.env << "\n";
  os << "episodes " << r.episodes << "\n";
  os << "mean_reward " << format_double(r.mean_reward) << "\n";
  os << "mean_length " << format_double(r.mean_length) << "\n";
  if (r.env == "minibomber") {
    os << "wins " << r.wins << "\nlosses " << r.losses << "\nties " << r.ties << "\n";
    for (const auto& [cause, n] : r.causes) os << "cause " << cause << " " << n << "\n";
  }
  return os.str();
}

}  // namespace a3ctp

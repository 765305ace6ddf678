#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "a3ctp/adam.hpp"
#include "a3ctp/bomber.hpp"
#include "a3ctp/bomber_agents.hpp"
#include "a3ctp/losses.hpp"
#include "a3ctp/mlp.hpp"

namespace a3ctp {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw ConfigError("not a number: '" + std::string(s) + "'");
  return v;
}

inline uint64_t parse_uint(std::string_view s) {
  uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw ConfigError("not a nonnegative integer: '" + std::string(s) + "'");
  return v;
}

inline std::vector<size_t> parse_size_list(std::string_view s) {
  std::vector<size_t> out;
  if (s.empty() || s == "none") return out;
  size_t start = 0;
  while (start <= s.size()) {
    const size_t comma = s.find(',', start);
    const std::string_view part = s.substr(start, comma == std::string_view::npos ? s.npos : comma - start);
    out.push_back(parse_uint(part));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::string format_size_list(const std::vector<size_t>& v) {
  if (v.empty()) return "none";
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

enum class Algorithm { a3c, a3c_tp };

inline std::string_view to_string(Algorithm a) { return a == Algorithm::a3c ? "a3c" : "a3c-tp"; }

inline Algorithm parse_algorithm(std::string_view s) {
  if (s == "a3c") return Algorithm::a3c;
  if (s == "a3c-tp") return Algorithm::a3c_tp;
  throw ConfigError("unknown algorithm '" + std::string(s) + "'");
}

// Everything needed to reproduce one training run. Zero in `ma_window`,
// `grid_max_steps` and a NaN `reward_threshold` mean "environment default";
// resolved() fills them in.
struct RunConfig {
  std::string env = "gridgoal";
  Algorithm algorithm = Algorithm::a3c_tp;
  LossWeights weights;
  AdamConfig adam;
  double grad_clip = 40.0;
  std::vector<size_t> hidden{128, 128};
  Activation activation = Activation::tanh;
  size_t workers = 8;
  uint64_t seed = 1;
  size_t episodes = 1000;
  size_t checkpoint_every = 0;
  std::string output_dir = "runs/run";
  size_t ma_window = 0;
  double reward_threshold = NAN;
  size_t grid_size = 8;
  size_t grid_max_steps = 0;
  size_t pole_max_steps = 200;
  bomber::BoardOptions board;
  bomber::OpponentKind opponent = bomber::OpponentKind::static_agent;

  RunConfig resolved() const {
    RunConfig c = *this;
    if (c.ma_window == 0) c.ma_window = env == "minibomber" ? 5000 : 100;
    if (c.grid_max_steps == 0) c.grid_max_steps = 4 * grid_size;
    if (std::isnan(c.reward_threshold)) {
      if (env == "polebalance")
        c.reward_threshold = 0.9 * static_cast<double>(pole_max_steps);
      else if (env == "minibomber")
        c.reward_threshold = 0.0;
      else
        c.reward_threshold = 0.9;
    }
    return c;
  }

  void validate() const {
    if (env != "gridgoal" && env != "polebalance" && env != "minibomber")
      throw ConfigError("unknown env '" + env + "'");
    weights.validate();
    if (workers < 1) throw ConfigError("workers must be >= 1");
    if (!(adam.learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (board.size < 3) throw ConfigError("board_size must be >= 3");
    if (grid_size < 2) throw ConfigError("grid_size must be >= 2");
  }
};

struct ConfigEntry {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, std::string_view)> set;
};

// Every configurable key, in dump order.
inline const std::vector<ConfigEntry>& config_entries() {
  static const std::vector<ConfigEntry> entries = [] {
    std::vector<ConfigEntry> e;
    auto dbl = [&](std::string key, auto member) {
      e.push_back({std::move(key), [member](const RunConfig& c) { return format_double(member(const_cast<RunConfig&>(c))); },
                   [member](RunConfig& c, std::string_view v) { member(c) = parse_double(v); }});
    };
    auto uint = [&](std::string key, auto member) {
      e.push_back({std::move(key), [member](const RunConfig& c) { return std::to_string(member(const_cast<RunConfig&>(c))); },
                   [member](RunConfig& c, std::string_view v) { member(c) = static_cast<std::remove_reference_t<decltype(member(c))>>(parse_uint(v)); }});
    };
    e.push_back({"env", [](const RunConfig& c) { return c.env; }, [](RunConfig& c, std::string_view v) { c.env = v; }});
    e.push_back({"algorithm", [](const RunConfig& c) { return std::string(to_string(c.algorithm)); },
                 [](RunConfig& c, std::string_view v) { c.algorithm = parse_algorithm(v); }});
    dbl("lambda_v", [](RunConfig& c) -> double& { return c.weights.lambda_v; });
    dbl("lambda_pi", [](RunConfig& c) -> double& { return c.weights.lambda_pi; });
    dbl("lambda_h", [](RunConfig& c) -> double& { return c.weights.lambda_h; });
    dbl("lambda_tp", [](RunConfig& c) -> double& { return c.weights.lambda_tp; });
    dbl("gamma", [](RunConfig& c) -> double& { return c.weights.gamma; });
    uint("t_max", [](RunConfig& c) -> size_t& { return c.weights.t_max; });
    dbl("learning_rate", [](RunConfig& c) -> double& { return c.adam.learning_rate; });
    dbl("adam_beta1", [](RunConfig& c) -> double& { return c.adam.beta1; });
    dbl("adam_beta2", [](RunConfig& c) -> double& { return c.adam.beta2; });
    dbl("adam_epsilon", [](RunConfig& c) -> double& { return c.adam.epsilon; });
    dbl("grad_clip", [](RunConfig& c) -> double& { return c.grad_clip; });
    e.push_back({"hidden", [](const RunConfig& c) { return format_size_list(c.hidden); },
                 [](RunConfig& c, std::string_view v) { c.hidden = parse_size_list(v); }});
    e.push_back({"activation", [](const RunConfig& c) { return std::string(to_string(c.activation)); },
                 [](RunConfig& c, std::string_view v) { c.activation = parse_activation(v); }});
    uint("workers", [](RunConfig& c) -> size_t& { return c.workers; });
    uint("seed", [](RunConfig& c) -> uint64_t& { return c.seed; });
    uint("episodes", [](RunConfig& c) -> size_t& { return c.episodes; });
    uint("checkpoint_every", [](RunConfig& c) -> size_t& { return c.checkpoint_every; });
    e.push_back({"output_dir", [](const RunConfig& c) { return c.output_dir; },
                 [](RunConfig& c, std::string_view v) { c.output_dir = v; }});
    uint("ma_window", [](RunConfig& c) -> size_t& { return c.ma_window; });
    dbl("reward_threshold", [](RunConfig& c) -> double& { return c.reward_threshold; });
    uint("grid_size", [](RunConfig& c) -> size_t& { return c.grid_size; });
    uint("grid_max_steps", [](RunConfig& c) -> size_t& { return c.grid_max_steps; });
    uint("pole_max_steps", [](RunConfig& c) -> size_t& { return c.pole_max_steps; });
    uint("board_size", [](RunConfig& c) -> int& { return c.board.size; });
    uint("board_max_steps", [](RunConfig& c) -> int& { return c.board.max_steps; });
    dbl("rigid_density", [](RunConfig& c) -> double& { return c.board.rigid_density; });
    dbl("wood_density", [](RunConfig& c) -> double& { return c.board.wood_density; });
    dbl("powerup_probability", [](RunConfig& c) -> double& { return c.board.powerup_probability; });
    e.push_back({"opponent", [](const RunConfig& c) { return std::string(bomber::to_string(c.opponent)); },
                 [](RunConfig& c, std::string_view v) { c.opponent = bomber::parse_opponent(v); }});
    return e;
  }();
  return entries;
}

inline void set_config_value(RunConfig& c, std::string_view key, std::string_view value) {
  for (const auto& e : config_entries())
    if (e.key == key) {
      try {
        e.set(c, value);
      } catch (const std::exception& ex) {
        throw ConfigError("config key '" + std::string(key) + "': " + ex.what());
      }
      return;
    }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

inline std::string get_config_value(const RunConfig& c, std::string_view key) {
  for (const auto& e : config_entries())
    if (e.key == key) return e.get(c);
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

inline constexpr int kConfigFormatVersion = 1;
inline constexpr int kMetricsFormatVersion = 1;

// Flat "key = value" text, one line per key, every key present.
inline std::string config_to_text(const RunConfig& c) {
  std::ostringstream os;
  os << "# a3ctp run config\n";
  os << "config_format = " << kConfigFormatVersion << "\n";
  os << "metrics_format = " << kMetricsFormatVersion << "\n";
  for (const auto& e : config_entries()) os << e.key << " = " << e.get(c) << "\n";
  return os.str();
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Keys not mentioned keep the values already in `base`.
inline RunConfig config_from_text(std::string_view text, RunConfig base = {}) {
  std::istringstream in{std::string(text)};
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view l = trim(line);
    if (l.empty() || l.front() == '#') continue;
    const size_t eq = l.find('=');
    if (eq == std::string_view::npos) throw ConfigError("config line " + std::to_string(lineno) + ": missing '='");
    const std::string_view key = trim(l.substr(0, eq));
    const std::string_view value = trim(l.substr(eq + 1));
    if (key == "config_format") {
      if (value != std::to_string(kConfigFormatVersion)) throw ConfigError("unsupported config_format");
      continue;
    }
    if (key == "metrics_format") continue;
    set_config_value(base, key, value);
  }
  return base;
}

inline RunConfig load_config(const std::filesystem::path& path, RunConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_text(ss.str(), std::move(base));
}

}  // namespace a3ctp

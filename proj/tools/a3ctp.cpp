#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "a3ctp/a3ctp.hpp"

namespace {

using namespace a3ctp;

// --<key> for every config key, collected as raw strings
struct ConfigFlags {
  std::string config_file;
  std::map<std::string, std::string> values;

  void attach(CLI::App* app, const std::vector<std::string>& keys) {
    for (const auto& key : keys) app->add_option("--" + key, values[key], "config key " + key);
  }

  RunConfig build(CLI::App* app, RunConfig base = {}) const {
    if (!config_file.empty()) base = load_config(config_file, base);
    for (const auto& [key, value] : values)
      if (app->count("--" + key) > 0) set_config_value(base, key, value);
    return base;
  }
};

std::vector<std::string> all_keys() {
  std::vector<std::string> keys;
  for (const auto& e : config_entries()) keys.push_back(e.key);
  return keys;
}

const std::vector<std::string> kEnvKeys = {"env", "grid_size", "grid_max_steps", "pole_max_steps", "board_size",
                                           "board_max_steps", "rigid_density", "wood_density",
                                           "powerup_probability", "opponent"};

template <class T>
std::vector<T> parse_list(const std::string& s, T (*parse)(std::string_view)) {
  std::vector<T> out;
  size_t start = 0;
  while (true) {
    const size_t comma = s.find(',', start);
    out.push_back(parse(trim(std::string_view(s).substr(start, comma == std::string::npos ? s.npos : comma - start))));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"A3C / A3C-TP trainer and experiment harness"};
  app.require_subcommand(1);

  auto* train = app.add_subcommand("train", "train one run into --output_dir");
  ConfigFlags train_flags;
  train->add_option("--config", train_flags.config_file, "key=value config file (flags override it)");
  train_flags.attach(train, all_keys());
  bool dump_only = false;
  train->add_flag("--dump-config", dump_only, "print the resolved config and exit");

  auto* sweep = app.add_subcommand("sweep", "lambda_tp sweep, one run per value per seed");
  ConfigFlags sweep_flags;
  std::string sweep_values = "0.25,0.5,0.75,1";
  std::string sweep_seeds = "1,2,3";
  sweep->add_option("--config", sweep_flags.config_file, "key=value config file (flags override it)");
  sweep->add_option("--values", sweep_values, "comma-separated lambda_tp values")->capture_default_str();
  sweep->add_option("--seeds", sweep_seeds, "comma-separated run seeds")->capture_default_str();
  std::vector<std::string> sweep_keys;
  for (const auto& k : all_keys())
    if (k != "seed" && k != "lambda_tp" && k != "algorithm") sweep_keys.push_back(k);
  sweep_flags.attach(sweep, sweep_keys);

  auto* eval = app.add_subcommand("evaluate", "evaluate a checkpoint");
  std::string checkpoint;
  EvaluationOptions eval_opt;
  std::string replay_dir;
  bool sample = false;
  ConfigFlags eval_flags;
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  eval->add_option("--episodes", eval_opt.episodes, "episodes to play")->capture_default_str();
  eval->add_option("--seed", eval_opt.seed, "evaluation seed")->capture_default_str();
  eval->add_flag("--sample", sample, "sample actions instead of acting greedily");
  eval->add_option("--replays", replay_dir, "directory for MiniBomber replay files");
  eval_flags.attach(eval, kEnvKeys);

  auto* summ = app.add_subcommand("summarize", "aggregate run directories");
  std::vector<std::string> dirs;
  double threshold = NAN;
  std::string summary_out;
  summ->add_option("dirs", dirs, "run directories")->required();
  summ->add_option("--threshold", threshold, "reward threshold (default: from each run's config)");
  summ->add_option("--out", summary_out, "write the aggregate CSV here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      const RunConfig c = train_flags.build(train).resolved();
      c.validate();
      if (dump_only) {
        std::cout << config_to_text(c);
        return 0;
      }
      const RunResult r = run_experiment(c);
      std::cout << "run " << r.dir.string() << ": " << r.episodes << " episodes, " << r.updates << " updates\n";
    } else if (sweep->parsed()) {
      const RunConfig base = sweep_flags.build(sweep);
      const auto values = parse_list<double>(sweep_values, parse_double);
      const auto seeds = parse_list<uint64_t>(sweep_seeds, parse_uint);
      const SweepReport rep = sweep_lambda_tp(base, values, seeds);
      for (const auto& f : rep.failures)
        std::cerr << "failed: lambda_tp=" << format_double(f.lambda_tp) << " seed=" << f.seed << ": " << f.message
                  << "\n";
      if (!rep.completed.empty()) {
        std::vector<std::filesystem::path> done(rep.completed.begin(), rep.completed.end());
        const SummaryReport s = summarize(done);
        std::ofstream(std::filesystem::path(base.output_dir) / "summary.csv") << summary_csv(s);
        std::cout << summary_table(s);
      }
      return rep.ok() ? 0 : 1;
    } else if (eval->parsed()) {
      const Checkpoint ck = load_checkpoint(checkpoint);
      const RunConfig c = eval_flags.build(eval, config_from_checkpoint(ck));
      eval_opt.greedy = !sample;
      if (!replay_dir.empty()) eval_opt.replay_dir = replay_dir;
      std::cout << format_report(evaluate(ck, c, eval_opt));
    } else if (summ->parsed()) {
      std::vector<std::filesystem::path> paths(dirs.begin(), dirs.end());
      std::optional<double> thr;
      if (!std::isnan(threshold)) thr = threshold;
      const SummaryReport s = summarize(paths, thr);
      if (!summary_out.empty()) std::ofstream(summary_out) << summary_csv(s);
      std::cout << summary_table(s);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

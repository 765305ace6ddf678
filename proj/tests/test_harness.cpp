#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "a3ctp/harness.hpp"

using namespace a3ctp;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / ("a3ctp_test_" + name + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

RunConfig small_grid(const fs::path& dir, size_t episodes, uint64_t seed = 1) {
  RunConfig c;
  c.env = "gridgoal";
  c.grid_size = 4;
  c.hidden = {16};
  c.workers = 1;
  c.seed = seed;
  c.episodes = episodes;
  c.output_dir = dir.string();
  return c;
}

// A run directory written by hand: config plus a metrics file whose reward_ma
// column is given.
void fake_run(const fs::path& dir, RunConfig c, const std::vector<double>& ma) {
  fs::create_directories(dir);
  c.output_dir = dir.string();
  std::ofstream(dir / "config.txt") << config_to_text(c.resolved());
  std::ofstream m(dir / "metrics.csv");
  m << csv_header(kMetricsColumns) << '\n';
  for (size_t i = 0; i < ma.size(); ++i) {
    MetricsRow r;
    r.episode = i;
    r.length = 3;
    r.reward = ma[i];
    r.reward_ma = ma[i];
    r.result = "none";
    r.cause = "none";
    m << format_metrics_row(r) << '\n';
  }
}

}  // namespace

// ---------------------------------------------------------------- config

TEST(Config, DefaultsEchoedInDump) {
  const std::string text = config_to_text(RunConfig{}.resolved());
  for (const char* line : {"lambda_v = 0.5\n", "lambda_pi = 1\n", "lambda_h = 0.01\n", "lambda_tp = 0.5\n",
                           "gamma = 0.99\n", "t_max = 20\n", "algorithm = a3c-tp\n",
                           "ma_window = 100\n", "reward_threshold = 0.9\n"})
    EXPECT_NE(text.find(line), std::string::npos) << line;
  for (const auto& e : config_entries()) EXPECT_NE(text.find("\n" + e.key + " = "), std::string::npos) << e.key;
  EXPECT_EQ(config_from_text(text).adam.learning_rate, 1e-4);
}

TEST(Config, TextRoundTrip) {
  RunConfig c;
  c.env = "minibomber";
  c.algorithm = Algorithm::a3c;
  c.weights.lambda_tp = 0.25;
  c.adam.learning_rate = 3.3e-5;
  c.hidden = {64, 32, 7};
  c.seed = 123456789012345ull;
  c.board.size = 6;
  c.board.wood_density = 0.1 + 0.2;  // not exactly representable in short decimal
  c.opponent = bomber::OpponentKind::rule_based;
  c.output_dir = "some/dir";
  const std::string text = config_to_text(c.resolved());
  const RunConfig back = config_from_text(text);
  EXPECT_EQ(config_to_text(back), text);
  EXPECT_EQ(back.board.wood_density, c.board.wood_density);
  EXPECT_EQ(back.hidden, c.hidden);
  EXPECT_EQ(back.seed, c.seed);
}

TEST(Config, Errors) {
  RunConfig c;
  EXPECT_THROW(set_config_value(c, "no_such_key", "1"), ConfigError);
  EXPECT_THROW(set_config_value(c, "workers", "abc"), ConfigError);
  EXPECT_THROW(config_from_text("lambda_tp 0.5\n"), ConfigError);
  c.env = "pong";
  EXPECT_THROW(c.validate(), ConfigError);
  c = RunConfig{};
  c.weights.lambda_tp = -1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Config, PerEnvDefaults) {
  RunConfig c;
  c.env = "minibomber";
  EXPECT_EQ(c.resolved().ma_window, 5000u);
  EXPECT_EQ(c.resolved().reward_threshold, 0.0);
  c.env = "polebalance";
  c.pole_max_steps = 300;
  EXPECT_EQ(c.resolved().reward_threshold, 270.0);
}

// --------------------------------------------------------- moving average

TEST(MovingAverage, Examples) {
  EXPECT_EQ(moving_average({3, 3, 3, 3}, 2), (std::vector<double>{3, 3, 3, 3}));
  EXPECT_EQ(moving_average({0, 1}, 2), (std::vector<double>{0, 0.5}));
  EXPECT_THROW(moving_average({}, 3), std::invalid_argument);
  EXPECT_THROW(moving_average({1}, 0), std::invalid_argument);
}

TEST(MovingAverage, MatchesLoopOracle) {
  Rng rng(8);
  std::vector<double> xs(1000);
  for (double& x : xs) x = rng.uniform(-5, 5);
  const auto ma = moving_average(xs, 100);
  TrailingMean stream(100);
  for (size_t i = 0; i < xs.size(); ++i) {
    double sum = 0;
    size_t n = 0;
    for (size_t j = (i >= 99 ? i - 99 : 0); j <= i; ++j) sum += xs[j], ++n;
    EXPECT_NEAR(ma[i], sum / double(n), 1e-12);
    EXPECT_EQ(stream.push(xs[i]), ma[i]);
  }
}

// ----------------------------------------------------------- metrics CSV

TEST(MetricsCsv, RoundTrip) {
  std::vector<MetricsRow> rows;
  for (size_t i = 0; i < 5; ++i) {
    MetricsRow r;
    r.episode = i;
    r.worker = i % 2;
    r.length = 10 + i;
    r.reward = i * 0.1;
    r.running_n = 1.0 / 3.0;
    r.policy_loss = -0.25 * i;
    r.value_loss = 1e-300;
    r.tp_loss = 0.0;
    r.entropy = std::log(4.0);
    r.reward_ma = 0.7;
    r.result = i % 2 ? "win" : "loss";
    r.cause = "our-suicide";
    rows.push_back(r);
  }
  std::string text = csv_header(kMetricsColumns) + "\n";
  for (const auto& r : rows) text += format_metrics_row(r) + "\n";
  std::istringstream in(text);
  EXPECT_EQ(parse_metrics_csv(in), rows);
}

TEST(MetricsCsv, RejectsBadFiles) {
  std::istringstream bad_header("episode,reward\n");
  EXPECT_THROW(parse_metrics_csv(bad_header), MetricsError);
  MetricsRow r;
  r.result = r.cause = "none";
  const std::string row = format_metrics_row(r);
  std::istringstream repeated(csv_header(kMetricsColumns) + "\n" + row + "\n" + row + "\n");
  EXPECT_THROW(parse_metrics_csv(repeated), MetricsError);
  std::istringstream short_row(csv_header(kMetricsColumns) + "\n1,2,3\n");
  EXPECT_THROW(parse_metrics_csv(short_row), MetricsError);
}

// ------------------------------------------------------------ experiments

TEST(RunExperiment, ZeroBudgetWritesHeaderOnly) {
  TempDir tmp("zero");
  const RunConfig c = small_grid(tmp.path / "run", 0);
  const RunResult r = run_experiment(c);
  EXPECT_EQ(r.episodes, 0u);
  EXPECT_EQ(slurp(tmp.path / "run" / "metrics.csv"), csv_header(kMetricsColumns) + "\n");
  EXPECT_EQ(slurp(tmp.path / "run" / "config.txt"), config_to_text(c.resolved()));
  EXPECT_TRUE(fs::exists(tmp.path / "run" / "checkpoints" / "final.ckpt"));
}

TEST(RunExperiment, SameSeedSingleWorkerIsByteIdentical) {
  TempDir tmp("det");
  run_experiment(small_grid(tmp.path / "a", 150));
  run_experiment(small_grid(tmp.path / "b", 150));
  const std::string a = slurp(tmp.path / "a" / "metrics.csv");
  EXPECT_EQ(a, slurp(tmp.path / "b" / "metrics.csv"));
  EXPECT_EQ(load_metrics(tmp.path / "a" / "metrics.csv").size(), 150u);
  EXPECT_EQ(slurp(tmp.path / "a" / "checkpoints" / "final.ckpt").size(),
            slurp(tmp.path / "b" / "checkpoints" / "final.ckpt").size());
  EXPECT_EQ(load_checkpoint(tmp.path / "a" / "checkpoints" / "final.ckpt").params,
            load_checkpoint(tmp.path / "b" / "checkpoints" / "final.ckpt").params);
  // a different seed gives a different run
  run_experiment(small_grid(tmp.path / "c", 150, 2));
  EXPECT_NE(a, slurp(tmp.path / "c" / "metrics.csv"));
}

TEST(RunExperiment, RerunFromConfigFileReproduces) {
  TempDir tmp("rerun");
  run_experiment(small_grid(tmp.path / "a", 80));
  RunConfig again = load_config(tmp.path / "a" / "config.txt");
  again.output_dir = (tmp.path / "b").string();
  run_experiment(again);
  EXPECT_EQ(slurp(tmp.path / "a" / "metrics.csv"), slurp(tmp.path / "b" / "metrics.csv"));
}

TEST(RunExperiment, LambdaZeroMatchesA3cExceptTpColumn) {
  TempDir tmp("recover");
  RunConfig tp = small_grid(tmp.path / "tp", 120);
  tp.weights.lambda_tp = 0.0;
  RunConfig base = small_grid(tmp.path / "a3c", 120);
  base.algorithm = Algorithm::a3c;
  run_experiment(tp);
  run_experiment(base);
  auto a = load_metrics(tmp.path / "tp" / "metrics.csv");
  auto b = load_metrics(tmp.path / "a3c" / "metrics.csv");
  ASSERT_EQ(a.size(), b.size());
  bool tp_reported = false;
  for (size_t i = 0; i < a.size(); ++i) {
    tp_reported |= a[i].tp_loss != 0.0;
    a[i].tp_loss = b[i].tp_loss = 0.0;
    EXPECT_EQ(a[i], b[i]) << "row " << i;
  }
  EXPECT_TRUE(tp_reported);
  const auto pa = load_checkpoint(tmp.path / "tp" / "checkpoints" / "final.ckpt").params;
  const auto pb = load_checkpoint(tmp.path / "a3c" / "checkpoints" / "final.ckpt").params;
  ASSERT_EQ(pa.num_layers(), pb.num_layers() + 1);
  for (size_t l = 0; l < pb.num_layers(); ++l) {
    EXPECT_TRUE(std::ranges::equal(pa.layer(l).weights.values(), pb.layer(l).weights.values())) << l;
    EXPECT_TRUE(std::ranges::equal(pa.layer(l).bias.values(), pb.layer(l).bias.values())) << l;
  }
}

TEST(RunExperiment, CheckpointsAndMeta) {
  TempDir tmp("ckpt");
  RunConfig c = small_grid(tmp.path / "r", 30);
  c.checkpoint_every = 10;
  run_experiment(c);
  for (size_t e : {10u, 20u, 30u}) EXPECT_TRUE(fs::exists(tmp.path / "r" / "checkpoints" / checkpoint_name(e))) << e;
  const Checkpoint ck = load_checkpoint(tmp.path / "r" / "checkpoints" / "final.ckpt");
  EXPECT_TRUE(ck.optimizer.has_value());
  EXPECT_EQ(ck.meta.at("episodes"), "30");
  EXPECT_EQ(config_to_text(config_from_checkpoint(ck)), config_to_text(c.resolved()));
  EXPECT_TRUE(ActorCritic(model_from_checkpoint(ck)).compatible(ck.params));
}

TEST(RunExperiment, TrainerFailureIsPropagatedAfterFlush) {
  TempDir tmp("fail");
  RunConfig c = small_grid(tmp.path / "r", 10);
  c.adam.learning_rate = 1e300;  // explodes into non-finite parameters
  c.grad_clip = 0;
  EXPECT_THROW(run_experiment(c), std::exception);
  EXPECT_TRUE(fs::exists(tmp.path / "r" / "config.txt"));
  EXPECT_NO_THROW(load_metrics(tmp.path / "r" / "metrics.csv"));
}

// ------------------------------------------------------------------ sweep

TEST(Sweep, Validation) {
  RunConfig c = small_grid("unused", 5);
  EXPECT_THROW(sweep_lambda_tp(c, {0.5, 0.5}, {1}), ConfigError);
  EXPECT_THROW(sweep_lambda_tp(c, {}, {1}), ConfigError);
  EXPECT_THROW(sweep_lambda_tp(c, {0.5}, {}), ConfigError);
  EXPECT_THROW(sweep_lambda_tp(c, {0.5}, {1, 1}), ConfigError);
  EXPECT_THROW(sweep_lambda_tp(c, {-0.5}, {1}), std::invalid_argument);
  EXPECT_FALSE(fs::exists("unused"));
}

TEST(Sweep, SingleValueIsOneRunPerSeed) {
  TempDir tmp("sweep1");
  RunConfig c = small_grid(tmp.path, 20);
  c.algorithm = Algorithm::a3c;  // overridden: a sweep always trains a3c-tp
  const SweepReport rep = sweep_lambda_tp(c, {0.75}, {4, 5});
  ASSERT_TRUE(rep.ok());
  ASSERT_EQ(rep.completed.size(), 2u);
  for (uint64_t s : {4u, 5u}) {
    const fs::path dir = sweep_run_dir(tmp.path, 0.75, s);
    EXPECT_EQ(dir, tmp.path / "lambda_tp_0.75" / ("seed_" + std::to_string(s)));
    RunConfig direct = c;
    direct.algorithm = Algorithm::a3c_tp;
    direct.weights.lambda_tp = 0.75;
    direct.seed = s;
    direct.output_dir = (tmp.path / ("direct_" + std::to_string(s))).string();
    run_experiment(direct);
    EXPECT_EQ(slurp(dir / "metrics.csv"), slurp(fs::path(direct.output_dir) / "metrics.csv"));
  }
}

TEST(Sweep, ReportsPartialFailure) {
  TempDir tmp("sweepfail");
  RunConfig c = small_grid(tmp.path, 5);
  // a file where one run directory should go makes that run fail
  fs::create_directories(tmp.path / "lambda_tp_1");
  std::ofstream(tmp.path / "lambda_tp_1" / "seed_2") << "x";
  const SweepReport rep = sweep_lambda_tp(c, {0.5, 1.0}, {1, 2});
  EXPECT_FALSE(rep.ok());
  EXPECT_EQ(rep.completed.size(), 3u);
  ASSERT_EQ(rep.failures.size(), 1u);
  EXPECT_EQ(rep.failures[0].lambda_tp, 1.0);
  EXPECT_EQ(rep.failures[0].seed, 2u);
}

// -------------------------------------------------------------- summarize

TEST(Summarize, IdenticalRunsHaveZeroStd) {
  TempDir tmp("sum0");
  RunConfig c = small_grid(tmp.path, 4);
  c.ma_window = 2;
  for (uint64_t s : {1u, 2u, 3u}) {
    c.seed = s;
    fake_run(tmp.path / std::to_string(s), c, {0.1, 0.95, 0.5, 0.6});
  }
  const SummaryReport r = summarize({tmp.path / "1", tmp.path / "2", tmp.path / "3"});
  ASSERT_EQ(r.groups.size(), 1u);
  EXPECT_EQ(r.groups[0].final_ma_std, 0.0);
  EXPECT_EQ(r.groups[0].final_ma_mean, 0.6);
  EXPECT_EQ(r.groups[0].ett_mean, 2.0);
  EXPECT_EQ(r.groups[0].ett_std, 0.0);
  EXPECT_EQ(r.groups[0].censored, 0u);
}

TEST(Summarize, PopulationStdOfOneTwoThree) {
  TempDir tmp("sum123");
  RunConfig c = small_grid(tmp.path, 2);
  c.ma_window = 1;
  for (int s = 1; s <= 3; ++s) {
    c.seed = uint64_t(s);
    fake_run(tmp.path / std::to_string(s), c, {0.0, double(s)});
  }
  const SummaryReport r = summarize({tmp.path / "1", tmp.path / "2", tmp.path / "3"}, 100.0);
  ASSERT_EQ(r.groups.size(), 1u);
  EXPECT_DOUBLE_EQ(r.groups[0].final_ma_mean, 2.0);
  EXPECT_DOUBLE_EQ(r.groups[0].final_ma_std, std::sqrt(2.0 / 3.0));
  // threshold 100 is never reached: censored at the budget
  EXPECT_EQ(r.groups[0].censored, 3u);
  EXPECT_EQ(r.groups[0].ett_mean, 2.0);
  for (const auto& run : r.groups[0].runs) {
    EXPECT_TRUE(run.censored);
    EXPECT_EQ(run.episodes_to_threshold, 2u);
  }
  EXPECT_NE(summary_csv(r).find("gridgoal,a3c-tp,0.5,3,1,100,2,"), std::string::npos) << summary_csv(r);
  EXPECT_NE(summary_table(r).find("censored"), std::string::npos);
}

TEST(Summarize, ThresholdNeedsFullWindow) {
  TempDir tmp("window");
  RunConfig c = small_grid(tmp.path, 10);
  c.ma_window = 3;
  fake_run(tmp.path / "r", c, {0.95, 0.95, 0.95, 0.95});
  EXPECT_EQ(summarize_run(tmp.path / "r", 0.9).episodes_to_threshold, 3u);
  c.ma_window = 5;
  fake_run(tmp.path / "s", c, {0.95, 0.95, 0.95, 0.95});
  const RunSummary s = summarize_run(tmp.path / "s", 0.9);
  EXPECT_TRUE(s.censored);
  EXPECT_EQ(s.episodes_to_threshold, 10u);
}

TEST(Summarize, OrderInvariantAndGrouped) {
  TempDir tmp("order");
  std::vector<fs::path> dirs;
  for (auto algo : {Algorithm::a3c, Algorithm::a3c_tp})
    for (uint64_t s : {1u, 2u, 3u}) {
      RunConfig c = small_grid(tmp.path, 3, s);
      c.algorithm = algo;
      c.ma_window = 1;
      const fs::path d = tmp.path / (std::string(to_string(algo)) + std::to_string(s));
      fake_run(d, c, {0.1 * double(s), 0.2 * double(s), algo == Algorithm::a3c ? 0.3 : 0.9});
      dirs.push_back(d);
    }
  const std::string forward = summary_csv(summarize(dirs));
  std::reverse(dirs.begin(), dirs.end());
  EXPECT_EQ(summary_csv(summarize(dirs)), forward);
  std::swap(dirs[1], dirs[4]);
  EXPECT_EQ(summary_csv(summarize(dirs)), forward);
  EXPECT_EQ(summarize(dirs).groups.size(), 2u);
}

TEST(Summarize, Errors) {
  TempDir tmp("sumerr");
  RunConfig c = small_grid(tmp.path, 3);
  fake_run(tmp.path / "a", c, {1, 1, 1});
  c.seed = 2;
  c.weights.lambda_h = 0.02;
  fake_run(tmp.path / "b", c, {1, 1, 1});
  EXPECT_THROW(summarize({tmp.path / "a", tmp.path / "b"}), ConfigError);
  EXPECT_THROW(summarize({tmp.path / "a", tmp.path / "a"}), std::invalid_argument);
  EXPECT_THROW(summarize({}), std::invalid_argument);
  EXPECT_THROW(summarize({tmp.path / "missing"}), std::exception);
}

// --------------------------------------------------------------- evaluate

namespace {
Checkpoint random_bomber_checkpoint(const fs::path& dir) {
  RunConfig c;
  c.env = "minibomber";
  c.board.size = 6;
  c.hidden = {32};
  c.episodes = 0;
  c.workers = 1;
  c.output_dir = dir.string();
  run_experiment(c);
  return load_checkpoint(dir / "checkpoints" / "final.ckpt");
}
}  // namespace

TEST(Evaluate, ZeroEpisodesIsEmpty) {
  TempDir tmp("eval0");
  const RunResult r = run_experiment(small_grid(tmp.path / "r", 0));
  EvaluationOptions o;
  o.episodes = 0;
  const EvaluationReport rep = evaluate(r.dir / "checkpoints" / "final.ckpt", o);
  EXPECT_EQ(rep.episodes, 0u);
  EXPECT_EQ(rep.mean_reward, 0.0);
  EXPECT_EQ(rep.wins + rep.losses + rep.ties, 0u);
  EXPECT_TRUE(rep.causes.empty());
}

TEST(Evaluate, DeterministicAndSeedSensitive) {
  TempDir tmp("evaldet");
  run_experiment(small_grid(tmp.path / "r", 50));
  const fs::path ck = tmp.path / "r" / "checkpoints" / "final.ckpt";
  EvaluationOptions o;
  o.episodes = 40;
  o.greedy = false;
  const auto a = evaluate(ck, o), b = evaluate(ck, o);
  EXPECT_EQ(a, b);
  EXPECT_EQ(format_report(a), format_report(b));
  o.seed = 2;
  EXPECT_NE(evaluate(ck, o).mean_length, a.mean_length);
}

TEST(Evaluate, RandomWeightsVsStaticMostlySuicideOrTimeout) {
  TempDir tmp("evalbomb");
  const Checkpoint ck = random_bomber_checkpoint(tmp.path / "r");
  EvaluationOptions o;
  o.episodes = 100;
  o.greedy = false;
  o.replay_dir = tmp.path / "replays";
  RunConfig env = config_from_checkpoint(ck);
  const EvaluationReport rep = evaluate(ck, env, o);
  EXPECT_EQ(rep.wins + rep.losses + rep.ties, 100u);
  size_t total = 0;
  for (const auto& [cause, n] : rep.causes) total += n;
  EXPECT_EQ(total, 100u);
  const size_t dominant = rep.causes.count("our-suicide") ? rep.causes.at("our-suicide") : 0;
  const size_t timeouts = rep.causes.count("timeout") ? rep.causes.at("timeout") : 0;
  EXPECT_GT(dominant + timeouts, 50u) << format_report(rep);
  // each replay re-simulates to the recorded outcome
  size_t suicides = 0;
  for (size_t e = 0; e < 100; ++e) {
    char name[40];
    std::snprintf(name, sizeof name, "episode_%06zu.txt", e);
    const bomber::Board end = bomber::resimulate(bomber::replay_from_text(slurp(*o.replay_dir / name)));
    ASSERT_TRUE(end.terminal());
    if (bomber::classify_outcome(end, 0).cause == OutcomeCause::our_suicide) ++suicides;
  }
  EXPECT_EQ(suicides, dominant);
}

TEST(Evaluate, MismatchedEnvironmentRejected) {
  TempDir tmp("evalmis");
  const RunResult r = run_experiment(small_grid(tmp.path / "r", 0));
  const Checkpoint ck = load_checkpoint(r.dir / "checkpoints" / "final.ckpt");
  RunConfig env = config_from_checkpoint(ck);
  env.grid_size = 5;
  EXPECT_THROW(evaluate(ck, env, {}), ShapeError);
  env = config_from_checkpoint(ck);
  env.env = "polebalance";
  EXPECT_THROW(evaluate(ck, env, {}), ShapeError);
}

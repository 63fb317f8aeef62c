#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dormsim/harness/config_file.hpp"
#include "dormsim/harness/experiment.hpp"
#include "dormsim/harness/metrics.hpp"
#include "dormsim/harness/plot.hpp"

using namespace dormsim;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinRel;

namespace {

ExperimentConfig parse_text(const std::string& text) {
  std::stringstream ss(text);
  return parse_config(ss);
}

std::string write_to_string(const ExperimentConfig& cfg) {
  std::stringstream ss;
  write_config(cfg, ss);
  return ss.str();
}

std::string strip_wall_clock(const std::string& csv) {
  std::stringstream in(csv), out;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (header || line.rfind("#", 0) == 0) {
      out << line << '\n';
      header = false;
      continue;
    }
    const auto cut = line.rfind(',');
    out << line.substr(0, cut) << '\n';
  }
  return out.str();
}

}  // namespace

TEST_CASE("an empty config file means pure defaults") {
  const ExperimentConfig cfg = parse_text("");
  CHECK(cfg.system.devices_per_slice == 100);
  CHECK(cfg.system.round_duration == 20.0);
  CHECK(cfg.system.anomaly_interval == 20.0);
  CHECK(cfg.system.device_tx_power == 0.5);
  REQUIRE(cfg.system.tx_rate_override.has_value());
  CHECK(*cfg.system.tx_rate_override == 10.0);
  CHECK(cfg.system.abnormal_device_count == 10);
  CHECK(cfg.system.abnormal_device_power == 1.0);
  CHECK(cfg.system.accuracy_threshold == 0.93);
  CHECK(cfg.system.upload_power_per_block == 1.0);
  CHECK(cfg.system.unit_block_size == 100.0);
  CHECK(cfg.system.memory_size == 10000.0);
  CHECK(cfg.system.storage_threshold == 0.8);
  CHECK(cfg.agents == std::vector<std::string>{"ppo", "dqn", "ddpg", "full-monitor"});
  CHECK(cfg.seeds == std::vector<std::uint64_t>{0});
  CHECK(cfg.total_rounds == 15000);
  CHECK(cfg.rounds_per_episode == 10);
  CHECK(cfg.timeline_mode == TimelineMode::deterministic);
  CHECK_FALSE(cfg.extended_observation);
  CHECK_FALSE(cfg.penalized_reward);
}

TEST_CASE("threshold fields outside their ranges are named in the error") {
  CHECK_THROWS_WITH(parse_text("[system]\naccuracy_threshold = 1.5\n"),
                    ContainsSubstring("accuracy_threshold"));
  CHECK_THROWS_WITH(parse_text("[system]\nstorage_threshold = 0\n"),
                    ContainsSubstring("storage_threshold"));
}

TEST_CASE("config parsing pinpoints mistakes by line") {
  CHECK_THROWS_WITH(parse_text("[system]\ndevicess = 100\n"),
                    ContainsSubstring("devicess") && ContainsSubstring("line 2"));
  CHECK_THROWS_WITH(parse_text("[network]\n"), ContainsSubstring("unknown section"));
  CHECK_THROWS_WITH(parse_text("[system]\nbandwidth = 1\nbandwidth = 2\n"),
                    ContainsSubstring("duplicate key"));
  CHECK_THROWS_WITH(parse_text("[system]\nbandwidth\n"),
                    ContainsSubstring("expected 'key = value'"));
  CHECK_THROWS_WITH(parse_text("bandwidth = 1\n"), ContainsSubstring("before any section"));
  CHECK_THROWS_WITH(parse_text("[system]\nbandwidth = fast\n"),
                    ContainsSubstring("bad value"));
  CHECK_THROWS_WITH(parse_text("[experiment]\nextended_observation = yes\n"),
                    ContainsSubstring("bad value"));
  CHECK_THROWS_WITH(parse_text("[full-monitor]\nx = 1\n"), ContainsSubstring("unknown key"));
}

TEST_CASE("episodes must tile the round budget exactly") {
  CHECK_THROWS_WITH(parse_text("[experiment]\ntotal_rounds = 15\nrounds_per_episode = 10\n"),
                    ContainsSubstring("divisible"));
}

TEST_CASE("the effective config round-trips through its own syntax") {
  ExperimentConfig cfg;
  cfg.system.devices_per_slice = 3;
  cfg.system.abnormal_device_count = 2;
  cfg.system.device_tx_powers = {0.5, 0.25, 1.0};
  cfg.system.tx_rate_override.reset();
  cfg.system.bandwidth = 2.5;
  cfg.agents = {"ppo"};
  cfg.seeds = {3, 4};
  cfg.total_rounds = 600;
  cfg.timeline_mode = TimelineMode::uniform_random;
  cfg.extended_observation = true;
  cfg.run_id = "exp7";
  cfg.hyper.hidden_sizes = {32, 16};
  cfg.hyper.ppo_lr_policy = 0.015;

  const std::string once = write_to_string(cfg);
  const ExperimentConfig back = parse_text(once);
  CHECK(write_to_string(back) == once);

  CHECK_FALSE(back.system.tx_rate_override.has_value());
  CHECK(back.system.device_tx_powers == cfg.system.device_tx_powers);
  CHECK(back.timeline_mode == TimelineMode::uniform_random);
  CHECK(back.extended_observation);
  CHECK(back.hyper.hidden_sizes == cfg.hyper.hidden_sizes);

  const ExperimentConfig defaults = parse_text("");
  CHECK(write_to_string(parse_text(write_to_string(defaults))) == write_to_string(defaults));
}

TEST_CASE("override can be switched off from the file") {
  const ExperimentConfig cfg =
      parse_text("[system]\ntx_rate_override = none\nbandwidth = 1\nnoise_power = 1\n");
  CHECK_FALSE(cfg.system.tx_rate_override.has_value());
}

TEST_CASE("metrics tables survive a write and read cycle") {
  MetricsRow a;
  a.run_id = "r1";
  a.agent = "ppo";
  a.seed = 3;
  a.phase = "train";
  a.episode = 17;
  a.mean_reward = 1.0 / 3.0;
  a.mean_energy_per_min = 230.0 / 7.0;
  a.cum_energy_per_min = 11.5;
  a.e_tran = 50.0;
  a.e_deal = 170.0;
  a.e_up = 10.0;
  a.e_abnormal = 0.125;
  a.mean_t1 = 19.25;
  a.mean_sleep = 0.75;
  a.accuracy_rolling = 0.93;
  a.wall_clock_s = 1.25;
  MetricsRow b = a;
  b.phase = "eval";
  b.episode = 20;

  std::stringstream ss;
  MetricsWriter writer(ss);
  writer.write(a);
  writer.write(b);
  const std::vector<MetricsRow> rows = read_metrics_csv(ss);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].run_id == "r1");
  CHECK(rows[0].mean_reward == a.mean_reward);
  CHECK(rows[0].mean_energy_per_min == a.mean_energy_per_min);
  CHECK(rows[0].accuracy_rolling == 0.93);
  CHECK(rows[1].phase == "eval");
  CHECK(rows[1].episode == 20);
}

TEST_CASE("metrics refuse fields and files that would break the table") {
  std::stringstream ss;
  MetricsWriter writer(ss);
  MetricsRow bad;
  bad.run_id = "a,b";
  bad.agent = "ppo";
  bad.phase = "train";
  CHECK_THROWS_AS(writer.write(bad), std::invalid_argument);

  std::stringstream noheader("nope\n");
  CHECK_THROWS_AS(read_metrics_csv(noheader), std::runtime_error);

  std::stringstream short_row;
  short_row << kMetricsHeader << '\n' << kMetricsColumns << '\n' << "r,ppo,0,train,1,2,3\n";
  CHECK_THROWS_AS(read_metrics_csv(short_row), std::runtime_error);
}

TEST_CASE("exponential smoothing keeps the first point and blends the rest") {
  const std::vector<double> xs{1.0, 2.0};
  CHECK(ema_smooth(xs, 0.0) == xs);
  const std::vector<double> sm = ema_smooth(xs, 0.5);
  CHECK(sm[0] == 1.0);
  CHECK(sm[1] == 1.5);
  CHECK_THROWS_AS(ema_smooth(xs, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(ema_smooth(xs, -0.1), std::invalid_argument);
}

TEST_CASE("training summaries find the plateau and the accuracy crossing") {
  std::vector<MetricsRow> rows;
  for (int i = 1; i <= 100; ++i) {
    MetricsRow r;
    r.episode = i;
    r.mean_reward = static_cast<double>(i);
    r.accuracy_rolling = i / 100.0;
    rows.push_back(r);
  }
  const ConvergenceInfo info = summarize_training(rows, 0.93, 1);
  CHECK_THAT(info.final_reward, WithinRel(95.5, 1e-12));
  CHECK(info.convergence_episode == 91);  // first episode at 95% of the tail mean
  CHECK(info.accuracy_crossing == 93);

  std::vector<MetricsRow> flat(10);
  for (int i = 0; i < 10; ++i) {
    flat[static_cast<std::size_t>(i)].episode = i + 1;
    flat[static_cast<std::size_t>(i)].mean_reward = 4.0;
    flat[static_cast<std::size_t>(i)].accuracy_rolling = 0.5;
  }
  const ConvergenceInfo steady = summarize_training(flat, 0.93);
  CHECK(steady.convergence_episode == 1);
  CHECK(steady.accuracy_crossing == -1);

  CHECK(summarize_training({}, 0.93).convergence_episode == -1);
}

TEST_CASE("rolling accuracy tracks only the most recent events") {
  detail::RollingAccuracy acc(3);
  CHECK(acc.value() == 1.0);
  acc.add(1, 2);
  acc.add(0, 1);
  CHECK_THAT(acc.value(), WithinRel(1.0 / 3.0, 1e-12));
  acc.add(1, 1);
  CHECK_THAT(acc.value(), WithinRel(1.0 / 3.0, 1e-12));
  acc.add(3, 3);
  CHECK(acc.value() == 1.0);
}

TEST_CASE("a full-monitoring run reports flat, exact metrics") {
  ExperimentConfig cfg;
  cfg.system.devices_per_slice = 5;
  cfg.system.abnormal_device_count = 2;
  cfg.agents = {"full-monitor"};
  cfg.total_rounds = 50;
  cfg.rounds_per_episode = 5;
  cfg.eval_every = 5;
  cfg.eval_episodes = 2;
  cfg.checkpoint_every = 4;

  int periodic = 0, finals = 0;
  long final_episode = 0;
  const RunOutput out = train_single_run(
      cfg, "full-monitor", 0,
      [&](const std::string&, std::uint64_t, long episode, const Checkpoint& ck, bool is_final) {
        if (is_final) {
          ++finals;
          final_episode = episode;
          CHECK(ck.agent == "full-monitor");
        } else {
          ++periodic;
        }
      });

  // 20 minutes of monitoring on 5 devices, every round
  const double per_min = (0.5 * 20.0 * 5.0 + 1700.0 * 1000.0 / 10000.0 + 1000.0 / 100.0) / 20.0;
  int train_rows = 0, eval_rows = 0;
  long prev_episode = 0;
  for (const auto& row : out.rows) {
    if (row.phase == "train") {
      ++train_rows;
      CHECK(row.episode == prev_episode + 1);
      prev_episode = row.episode;
      CHECK_THAT(row.mean_energy_per_min, WithinRel(per_min, 1e-12));
      CHECK_THAT(row.cum_energy_per_min, WithinRel(per_min, 1e-12));
      CHECK(row.e_abnormal == 0.0);
      CHECK(row.mean_t1 == 20.0);
      CHECK(row.mean_sleep == 0.0);
      CHECK(row.accuracy_rolling == 1.0);
      CHECK(row.wall_clock_s >= 0.0);
    } else {
      REQUIRE(row.phase == "eval");
      ++eval_rows;
      CHECK_THAT(row.mean_energy_per_min, WithinRel(per_min, 1e-12));
      CHECK(row.accuracy_rolling == 1.0);
    }
  }
  CHECK(train_rows == 10);
  CHECK(eval_rows == 2);  // episodes 5 and 10
  CHECK(periodic == 2);   // episodes 4 and 8
  CHECK(finals == 1);
  CHECK(final_episode == 10);
  CHECK(out.summary.episodes == 10);
  CHECK_THAT(out.summary.final_energy_per_min, WithinRel(per_min, 1e-12));
  CHECK(out.summary.final_accuracy == 1.0);
  CHECK(out.summary.convergence_episode == 1);
}

TEST_CASE("the final episode is always evaluated") {
  ExperimentConfig cfg;
  cfg.system.devices_per_slice = 5;
  cfg.system.abnormal_device_count = 2;
  cfg.agents = {"full-monitor"};
  cfg.total_rounds = 45;
  cfg.rounds_per_episode = 5;
  cfg.eval_every = 4;
  cfg.eval_episodes = 1;

  const RunOutput out = train_single_run(cfg, "full-monitor", 0);
  std::vector<long> eval_at;
  for (const auto& row : out.rows)
    if (row.phase == "eval") eval_at.push_back(row.episode);
  CHECK(eval_at == std::vector<long>{4, 8, 9});
}

TEST_CASE("identical runs produce identical tables apart from wall time") {
  ExperimentConfig cfg;
  cfg.system.devices_per_slice = 5;
  cfg.system.abnormal_device_count = 2;
  cfg.agents = {"ppo"};
  cfg.total_rounds = 100;
  cfg.rounds_per_episode = 5;
  cfg.eval_every = 10;
  cfg.eval_episodes = 2;
  cfg.hyper.hidden_sizes = {8, 8};
  cfg.hyper.ppo_batch_episodes = 5;
  cfg.timeline_mode = TimelineMode::uniform_random;

  auto run_csv = [&cfg]() {
    const RunOutput out = train_single_run(cfg, "ppo", 1);
    std::stringstream ss;
    MetricsWriter writer(ss);
    for (const auto& row : out.rows) writer.write(row);
    return ss.str();
  };
  const std::string first = run_csv();
  const std::string second = run_csv();
  CHECK(strip_wall_clock(first) == strip_wall_clock(second));
}

TEST_CASE("a sweep covers every agent and seed pairing in order") {
  ExperimentConfig cfg;
  cfg.system.devices_per_slice = 5;
  cfg.system.abnormal_device_count = 2;
  cfg.agents = {"full-monitor"};
  cfg.seeds = {0, 1};
  cfg.total_rounds = 20;
  cfg.rounds_per_episode = 5;

  const ExperimentResult result = run_experiment(cfg);
  REQUIRE(result.runs.size() == 2);
  CHECK(result.runs[0].summary.agent == "full-monitor");
  CHECK(result.runs[0].summary.seed == 0);
  CHECK(result.runs[1].summary.seed == 1);
}

TEST_CASE("plot emission writes one data series per run and panel") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "dormsim_plot_test";
  fs::remove_all(dir);

  std::vector<MetricsRow> rows;
  for (int ep = 1; ep <= 5; ++ep) {
    MetricsRow r;
    r.run_id = "run";
    r.agent = "ppo";
    r.seed = 0;
    r.phase = "train";
    r.episode = ep;
    r.mean_reward = 0.1 * ep;
    r.mean_energy_per_min = 230.0 - ep;
    r.mean_sleep = ep;
    r.accuracy_rolling = 0.9;
    rows.push_back(r);
    r.agent = "dqn";
    rows.push_back(r);
  }
  MetricsRow ev = rows.back();
  ev.phase = "eval";
  rows.push_back(ev);  // eval rows never reach the plots

  const std::vector<std::string> scripts = write_plots(rows, dir.string(), "all", 0.0, 0.93);
  REQUIRE(scripts.size() == 4);
  for (const auto& panel : plot_panels()) {
    CHECK(fs::exists(dir / (panel + ".gp")));
    CHECK(fs::exists(dir / ("ppo_seed0_" + panel + ".dat")));
    CHECK(fs::exists(dir / ("dqn_seed0_" + panel + ".dat")));
  }

  std::ifstream reward_dat(dir / "ppo_seed0_reward.dat");
  std::string line;
  std::getline(reward_dat, line);  // smoothing header
  CHECK_THAT(line, ContainsSubstring("smoothing weight 0"));
  std::getline(reward_dat, line);  // column header
  int points = 0;
  while (std::getline(reward_dat, line)) {
    long ep;
    double y;
    std::istringstream ls(line);
    ls >> ep >> y;
    ++points;
    CHECK(y == 0.1 * ep);  // weight 0 means untouched values
  }
  CHECK(points == 5);

  std::ifstream acc_script(dir / "accuracy.gp");
  std::stringstream acc;
  acc << acc_script.rdbuf();
  CHECK_THAT(acc.str(), ContainsSubstring("0.93") && ContainsSubstring("dashtype 2") &&
                            ContainsSubstring("accuracy threshold"));

  CHECK_THROWS_AS(write_plots(rows, dir.string(), "loss", 0.0, 0.93), ConfigError);
  const std::vector<MetricsRow> none;
  CHECK_THROWS_AS(write_plots(none, dir.string(), "reward", 0.0, 0.93), std::runtime_error);
  fs::remove_all(dir);
}

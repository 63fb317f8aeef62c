#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "dormsim/dormsim.hpp"

namespace fs = std::filesystem;

namespace {

dormsim::ExperimentConfig load_config(const std::string& path) {
  if (path.empty()) {
    dormsim::ExperimentConfig cfg;
    cfg.validate();
    return cfg;
  }
  return dormsim::parse_config_file(path);
}

std::string summary_line(const dormsim::RunSummary& s) {
  std::ostringstream os;
  os << "agent=" << s.agent << " seed=" << s.seed << " episodes=" << s.episodes
     << " final_reward=" << dormsim::format_double(s.final_reward)
     << " final_energy_per_min=" << dormsim::format_double(s.final_energy_per_min)
     << " convergence_episode=" << s.convergence_episode
     << " accuracy_crossing=" << s.accuracy_crossing
     << " final_accuracy=" << dormsim::format_double(s.final_accuracy)
     << " wall_clock_s=" << dormsim::format_double(s.wall_clock_s);
  return os.str();
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            const std::vector<std::string>& agents, const std::vector<long>& seeds, long rounds,
            const std::string& run_id, bool quiet) {
  auto cfg = load_config(config_path);
  if (!agents.empty()) cfg.agents = agents;
  if (!seeds.empty()) {
    cfg.seeds.clear();
    for (long s : seeds) cfg.seeds.push_back(static_cast<std::uint64_t>(s));
  }
  if (rounds > 0) cfg.total_rounds = rounds;
  if (!run_id.empty()) cfg.run_id = run_id;
  cfg.validate();

  fs::create_directories(out_dir);
  {
    std::ofstream f(fs::path(out_dir) / "config.cfg");
    dormsim::write_config(cfg, f);
  }
  std::ofstream metrics_file(fs::path(out_dir) / "metrics.csv");
  dormsim::MetricsWriter metrics(metrics_file);
  std::ofstream summary_file(fs::path(out_dir) / "summary.txt");

  const dormsim::CheckpointSink sink = [&](const std::string& agent, std::uint64_t seed, long ep,
                                           const dormsim::Checkpoint& ck, bool is_final) {
    std::string name = agent + "_seed" + std::to_string(seed);
    if (!is_final) name += "_ep" + std::to_string(ep);
    dormsim::save_checkpoint_file(ck, (fs::path(out_dir) / (name + ".ckpt.json")).string());
  };

  std::vector<std::string> completed;
  auto write_manifest = [&](const std::string& failed, const std::string& why) {
    std::ofstream m(fs::path(out_dir) / "partial_results.txt");
    m << "aborted: " << why << '\n';
    m << "failed_run: " << failed << '\n';
    for (const auto& c : completed) m << "completed_run: " << c << '\n';
  };

  for (const auto& tag : cfg.agents) {
    for (std::uint64_t seed : cfg.seeds) {
      const std::string label = tag + "/seed" + std::to_string(seed);
      dormsim::RunOutput run;
      try {
        run = dormsim::train_single_run(cfg, tag, seed, sink, quiet ? nullptr : &std::cerr);
      } catch (const dormsim::ConfigError&) {
        throw;
      } catch (const std::exception& e) {
        write_manifest(label, e.what());
        throw std::runtime_error(std::string(e.what()) +
                                 " (completed runs listed in partial_results.txt)");
      }
      for (const auto& row : run.rows) metrics.write(row);
      metrics_file.flush();
      const std::string line = summary_line(run.summary);
      summary_file << line << '\n';
      summary_file.flush();
      if (!metrics_file || !summary_file) {
        write_manifest(label, "disk write failure");
        throw std::runtime_error(
            "disk write failure (completed runs listed in partial_results.txt)");
      }
      completed.push_back(label);
      std::cout << line << '\n';
    }
  }
  return 0;
}

int cmd_eval(const std::string& config_path, const std::string& ckpt_path, int episodes,
             std::uint64_t seed, const std::string& dump_path, bool gate) {
  auto cfg = load_config(config_path);
  const auto ck = dormsim::load_checkpoint_file(ckpt_path);
  dormsim::DormancyEnv env(cfg.system, cfg.rounds_per_episode,
                           dormsim::EnvOptions{cfg.extended_observation, cfg.penalized_reward});
  auto agent = dormsim::make_agent(ck.agent, cfg.system, cfg.hyper, env.state_dim(),
                                   cfg.total_rounds, ck.seed);
  agent->restore(ck.payload);

  const int n = episodes > 0 ? episodes : cfg.eval_episodes;
  const std::uint64_t eval_stream = dormsim::derive_seed(seed, dormsim::kEvalSalt);
  std::vector<dormsim::RoundOutcome> rounds;
  double reward_sum = 0.0, energy_sum = 0.0, t1_sum = 0.0;
  long caught = 0, total = 0, nrounds = 0;
  for (int e = 0; e < n; ++e) {
    env.set_timeline(dormsim::build_timeline(cfg.system, env.episode_horizon(), cfg.timeline_mode,
                                             dormsim::derive_seed(eval_stream,
                                                                  static_cast<std::uint64_t>(e))));
    std::vector<double> s = env.reset();
    while (!env.done()) {
      dormsim::StepResult sr = env.step(agent->act(s, false));
      rounds.push_back(sr.outcome);
      reward_sum += sr.outcome.reward;
      energy_sum += sr.outcome.energy.total;
      t1_sum += sr.outcome.t1;
      caught += sr.outcome.caught;
      total += sr.outcome.total_events;
      ++nrounds;
      s = std::move(sr.state);
    }
  }
  const double accuracy = total == 0 ? 1.0 : static_cast<double>(caught) / total;
  std::cout << "agent=" << ck.agent << " episodes=" << n
            << " mean_reward=" << dormsim::format_double(reward_sum / nrounds)
            << " mean_energy_per_min="
            << dormsim::format_double(energy_sum / (n * env.episode_horizon()))
            << " mean_t1=" << dormsim::format_double(t1_sum / nrounds)
            << " accuracy=" << dormsim::format_double(accuracy) << '\n';
  if (!dump_path.empty()) {
    std::ofstream f(dump_path);
    if (!f) throw std::runtime_error("cannot open round dump file: " + dump_path);
    dormsim::write_round_outcomes_csv(rounds, f);
  }
  if (gate && accuracy < cfg.system.accuracy_threshold) {
    std::cerr << "accuracy gate failed: " << dormsim::format_double(accuracy) << " < "
              << dormsim::format_double(cfg.system.accuracy_threshold) << '\n';
    return 3;
  }
  return 0;
}

int cmd_plot(const std::string& config_path, const std::string& metrics_path,
             const std::string& out_dir, const std::string& panel, double smoothing) {
  auto cfg = load_config(config_path);
  std::ifstream f(metrics_path);
  if (!f) throw std::runtime_error("cannot open metrics file: " + metrics_path);
  const auto rows = dormsim::read_metrics_csv(f);
  const auto scripts =
      dormsim::write_plots(rows, out_dir, panel, smoothing, cfg.system.accuracy_threshold);
  for (const auto& s : scripts) std::cout << "wrote " << s << '\n';
  return 0;
}

int cmd_verify_checkpoint(const std::string& path) {
  const auto ck = dormsim::load_checkpoint_file(path);
  std::cout << "ok agent=" << ck.agent << " seed=" << ck.seed << " episode=" << ck.episode
            << " version=" << ck.version << '\n';
  return 0;
}

int cmd_print_config(const std::string& config_path) {
  dormsim::write_config(load_config(config_path), std::cout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dynamic-dormancy monitoring simulator and schedule learner"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", run_id, ckpt_path, dump_path, metrics_path;
  std::string panel = "all";
  std::vector<std::string> agents;
  std::vector<long> seeds;
  long rounds = 0;
  int episodes = 0;
  std::uint64_t eval_seed = 0;
  double smoothing = 0.9;
  bool quiet = false, gate = false;

  auto* run = app.add_subcommand("run", "train the configured agents and record metrics");
  run->add_option("--config", config_path, "config file (defaults apply when omitted)")
      ->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "output directory (metrics, checkpoints, summary)");
  run->add_option("--agent", agents, "agent tag(s) overriding the config list");
  run->add_option("--seed", seeds, "seed(s) overriding the config list");
  run->add_option("--rounds", rounds, "override total training rounds");
  run->add_option("--run-id", run_id, "override the run id recorded in metrics");
  run->add_flag("--quiet", quiet, "suppress progress lines on stderr");

  auto* eval = app.add_subcommand("eval", "greedy evaluation of a checkpointed agent");
  eval->add_option("--config", config_path, "config file (defaults apply when omitted)")
      ->check(CLI::ExistingFile);
  eval->add_option("--checkpoint", ckpt_path, "checkpoint to evaluate")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--episodes", episodes, "episodes to evaluate (default: config eval_episodes)");
  eval->add_option("--seed", eval_seed, "evaluation timeline seed");
  eval->add_option("--dump-rounds", dump_path, "write per-round outcomes CSV here");
  eval->add_flag("--gate", gate, "exit 3 when accuracy falls below the configured threshold");

  auto* plot = app.add_subcommand("plot", "emit gnuplot data and script from a metrics CSV");
  plot->add_option("--config", config_path, "config file (defaults apply when omitted)")
      ->check(CLI::ExistingFile);
  plot->add_option("--metrics", metrics_path, "metrics CSV produced by run")
      ->required()
      ->check(CLI::ExistingFile);
  plot->add_option("--out", out_dir, "output directory for .dat files and scripts");
  plot->add_option("--panel", panel, "reward, energy, sleep, accuracy, or all");
  plot->add_option("--smoothing", smoothing, "EMA weight in [0,1); 0 disables smoothing");

  auto* verify = app.add_subcommand("verify-checkpoint", "validate a checkpoint's integrity");
  verify->add_option("checkpoint", ckpt_path, "checkpoint file")
      ->required()
      ->check(CLI::ExistingFile);

  auto* print_cfg = app.add_subcommand("print-config", "echo the effective configuration");
  print_cfg->add_option("--config", config_path, "config file (defaults apply when omitted)")
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (run->parsed())
      return cmd_run(config_path, out_dir, agents, seeds, rounds, run_id, quiet);
    if (eval->parsed())
      return cmd_eval(config_path, ckpt_path, episodes, eval_seed, dump_path, gate);
    if (plot->parsed()) return cmd_plot(config_path, metrics_path, out_dir, panel, smoothing);
    if (verify->parsed()) return cmd_verify_checkpoint(ckpt_path);
    if (print_cfg->parsed()) return cmd_print_config(config_path);
  } catch (const dormsim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <memory>
#include <vector>

#include "dormsim/agents/factory.hpp"
#include "dormsim/env.hpp"
#include "dormsim/replay.hpp"

using namespace dormsim;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

SystemConfig small_config() {
  SystemConfig cfg;
  cfg.devices_per_slice = 6;
  cfg.abnormal_device_count = 2;
  return cfg;
}

AgentHyper small_hyper() {
  AgentHyper hyper;
  hyper.hidden_sizes = {8, 8};
  return hyper;
}

DormancyEnv make_env(const SystemConfig& cfg, int rounds, std::uint64_t seed) {
  DormancyEnv env(cfg, rounds);
  env.set_timeline(build_timeline(cfg, env.episode_horizon(), TimelineMode::uniform_random, seed));
  return env;
}

void run_episode(Agent& agent, DormancyEnv& env) {
  std::vector<double> state = env.reset();
  while (!env.done()) {
    const double a = agent.act(state, true);
    const StepResult sr = env.step(a);
    agent.observe(state, a, sr.reward, sr.state, sr.done);
    state = sr.state;
  }
  agent.end_episode();
}

std::vector<double> greedy_actions(Agent& agent, const SystemConfig& cfg, std::uint64_t seed,
                                   int count) {
  Rng rng(seed);
  std::vector<double> out;
  for (int i = 0; i < count; ++i) {
    std::vector<double> state(static_cast<std::size_t>(cfg.devices_per_slice), 0.0);
    state[static_cast<std::size_t>(rng.uniform_int(0, cfg.devices_per_slice - 1))] =
        rng.uniform(0.0, 19.0);
    out.push_back(agent.act(state, false));
  }
  return out;
}

}  // namespace

TEST_CASE("the always-on baseline monitors every minute of every round") {
  SystemConfig cfg;
  FullMonitorAgent agent(cfg);
  CHECK(agent.name() == "full-monitor");
  const std::vector<double> state(100, 3.0);
  CHECK(agent.act(state, true) == 20.0);
  CHECK(agent.act(state, false) == 20.0);

  FullMonitorAgent other(cfg);
  other.restore(agent.checkpoint_payload());
  CHECK(other.act(state, false) == 20.0);

  DormancyEnv env = make_env(cfg, 10, 3);
  run_episode(agent, env);
  CHECK(env.accuracy() == 1.0);
}

TEST_CASE("every learner replays identically from the same seed") {
  const SystemConfig cfg = small_config();
  const AgentHyper hyper = small_hyper();
  for (const std::string& tag : {"ppo", "dqn", "ddpg"}) {
    auto a = make_agent(tag, cfg, hyper, cfg.devices_per_slice, 1000, 7);
    auto b = make_agent(tag, cfg, hyper, cfg.devices_per_slice, 1000, 7);
    auto c = make_agent(tag, cfg, hyper, cfg.devices_per_slice, 1000, 8);
    const std::vector<double> state(6, 0.0);
    bool differs = false;
    for (int i = 0; i < 30; ++i) {
      const double ai = a->act(state, true);
      CHECK(ai == b->act(state, true));
      if (ai != c->act(state, true)) differs = true;
    }
    CHECK(differs);
  }
}

TEST_CASE("greedy queries do not perturb the exploration stream") {
  const SystemConfig cfg = small_config();
  const AgentHyper hyper = small_hyper();
  for (const std::string& tag : {"ppo", "dqn", "ddpg"}) {
    auto a = make_agent(tag, cfg, hyper, cfg.devices_per_slice, 1000, 21);
    auto b = make_agent(tag, cfg, hyper, cfg.devices_per_slice, 1000, 21);
    const std::vector<double> state(6, 0.0);
    for (int i = 0; i < 10; ++i) {
      for (int g = 0; g < 3; ++g) b->act(state, false);
      CHECK(a->act(state, true) == b->act(state, true));
    }
  }
}

TEST_CASE("the on-policy learner requires an action before feedback") {
  const SystemConfig cfg = small_config();
  PpoAgent agent(cfg, small_hyper(), cfg.devices_per_slice, 5);
  const std::vector<double> state(6, 0.0);
  CHECK_THROWS_AS(agent.observe(state, 10.0, 0.01, state, false), std::logic_error);
}

TEST_CASE("the policy spread stays inside its hard bounds after updates") {
  const SystemConfig cfg = small_config();
  AgentHyper hyper = small_hyper();
  hyper.ppo_init_log_std = 5.0;
  hyper.ppo_batch_episodes = 1;
  PpoAgent agent(cfg, hyper, cfg.devices_per_slice, 5);
  CHECK(agent.log_std() == 5.0);
  DormancyEnv env = make_env(cfg, 5, 1);
  run_episode(agent, env);
  CHECK(agent.policy_updates() > 0);
  CHECK(agent.log_std() <= 2.0);
  CHECK(agent.log_std() >= -6.0);
}

TEST_CASE("a poisoned value net aborts the policy update without damage") {
  const SystemConfig cfg = small_config();
  AgentHyper hyper = small_hyper();
  hyper.ppo_batch_episodes = 1;
  PpoAgent agent(cfg, hyper, cfg.devices_per_slice, 5);

  nlohmann::json payload = agent.checkpoint_payload();
  auto params = payload["value"]["params"].get<std::vector<double>>();
  for (double& p : params) p = 1e308;
  payload["value"]["params"] = params;
  agent.restore(payload);

  DormancyEnv env = make_env(cfg, 5, 1);
  run_episode(agent, env);

  CHECK(agent.aborted_updates() == 1);
  CHECK(agent.policy_updates() == 0);
  CHECK(agent.checkpoint_payload() == payload);
}

TEST_CASE("pinned exploration draws discrete actions uniformly") {
  const SystemConfig cfg = small_config();
  AgentHyper hyper = small_hyper();
  hyper.dqn_epsilon_start = 1.0;
  hyper.dqn_epsilon_end = 1.0;
  DqnAgent agent(cfg, hyper, cfg.devices_per_slice, 1000000, 0);
  REQUIRE(agent.action_count() == 20);

  const std::vector<double> state(6, 0.0);
  std::vector<int> counts(20, 0);
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) {
    const double a = agent.act(state, true);
    const int idx = static_cast<int>(std::lround(a)) - 1;
    REQUIRE(idx >= 0);
    REQUIRE(idx < 20);
    ++counts[static_cast<std::size_t>(idx)];
  }
  const double expected = draws / 20.0;
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // 19 degrees of freedom at the 1% level
  CHECK(chi2 < 36.19);
}

TEST_CASE("exploration decays linearly and then holds its floor") {
  const SystemConfig cfg = small_config();
  DqnAgent agent(cfg, small_hyper(), cfg.devices_per_slice, 1000, 0);
  const std::vector<double> state(6, 0.0);
  CHECK(agent.epsilon() == 1.0);
  for (int i = 0; i < 500; ++i) agent.act(state, true);
  CHECK_THAT(agent.epsilon(), WithinRel(0.525, 1e-12));
  for (int i = 0; i < 500; ++i) agent.act(state, true);
  CHECK_THAT(agent.epsilon(), WithinRel(0.05, 1e-12));
  for (int i = 0; i < 100; ++i) agent.act(state, true);
  CHECK_THAT(agent.epsilon(), WithinRel(0.05, 1e-12));
}

TEST_CASE("greedy discrete play prefers the shortest duration on ties") {
  const SystemConfig cfg = small_config();
  const AgentHyper hyper = small_hyper();
  DqnAgent agent(cfg, hyper, cfg.devices_per_slice, 1000, 0);

  Mlp zero({6, 8, 8, 20});
  Adam fresh(zero.parameter_count(), hyper.dqn_lr);
  nlohmann::json payload{{"online", mlp_to_json(zero)},
                         {"target", mlp_to_json(zero)},
                         {"opt", adam_to_json(fresh)},
                         {"explore_steps", 0},
                         {"learn_steps", 0}};
  agent.restore(payload);
  const std::vector<double> state(6, 0.0);
  CHECK(agent.act(state, false) == 1.0);

  Mlp biased = zero;
  biased.parameters()[288 + 6] = 0.5;  // lift one output-layer bias
  payload["online"] = mlp_to_json(biased);
  agent.restore(payload);
  CHECK(agent.act(state, false) == 7.0);
}

TEST_CASE("with no lookahead the action value converges to its reward") {
  const SystemConfig cfg = small_config();
  AgentHyper hyper = small_hyper();
  hyper.gamma = 0.0;
  hyper.reward_scale = 1.0;
  hyper.dqn_batch = 1;
  hyper.dqn_lr = 3e-2;
  DqnAgent agent(cfg, hyper, cfg.devices_per_slice, 1000, 2);

  const std::vector<double> state(6, 0.0);
  std::vector<double> next(6, 0.0);
  next[0] = 1.0;
  for (int i = 0; i < 600; ++i) agent.observe(state, 3.0, 0.7, next, false);

  const nlohmann::json payload = agent.checkpoint_payload();
  Mlp online(payload["online"]["sizes"].get<std::vector<int>>());
  mlp_restore_from_json(online, payload["online"]);
  CHECK_THAT(online.forward(state)[2], WithinAbs(0.7, 0.02));
}

TEST_CASE("stored discrete actions must decode to a known duration") {
  const SystemConfig cfg = small_config();
  AgentHyper hyper = small_hyper();
  hyper.dqn_batch = 1;
  DqnAgent agent(cfg, hyper, cfg.devices_per_slice, 1000, 2);
  const std::vector<double> state(6, 0.0);
  CHECK_THROWS_AS(agent.observe(state, 99.0, 0.01, state, false), std::logic_error);
}

TEST_CASE("a silent actor is exactly its network") {
  const SystemConfig cfg = small_config();
  AgentHyper hyper = small_hyper();
  hyper.ddpg_noise_start = 0.0;
  hyper.ddpg_noise_end = 0.0;
  DdpgAgent agent(cfg, hyper, cfg.devices_per_slice, 1000, 3);
  const std::vector<double> state(6, 0.0);
  const double greedy = agent.act(state, false);
  CHECK(agent.act(state, true) == greedy);
  CHECK(agent.act(state, true) == greedy);
}

TEST_CASE("actor noise anneals over the first half of training") {
  const SystemConfig cfg = small_config();
  DdpgAgent agent(cfg, small_hyper(), cfg.devices_per_slice, 1000, 3);
  const std::vector<double> state(6, 0.0);
  CHECK_THAT(agent.noise_stddev(), WithinRel(6.0, 1e-12));
  for (int i = 0; i < 250; ++i) agent.act(state, true);
  CHECK_THAT(agent.noise_stddev(), WithinRel(3.2, 1e-12));
  for (int i = 0; i < 250; ++i) agent.act(state, true);
  CHECK_THAT(agent.noise_stddev(), WithinRel(0.4, 1e-12));
  for (int i = 0; i < 100; ++i) agent.act(state, true);
  CHECK_THAT(agent.noise_stddev(), WithinRel(0.4, 1e-12));
}

TEST_CASE("full-rate target tracking copies the online nets") {
  const SystemConfig cfg = small_config();
  AgentHyper hyper = small_hyper();
  hyper.ddpg_polyak = 1.0;
  hyper.ddpg_batch = 4;
  DdpgAgent agent(cfg, hyper, cfg.devices_per_slice, 1000, 4);

  const std::vector<double> state(6, 0.0);
  std::vector<double> next(6, 0.0);
  next[1] = 2.0;
  for (int i = 0; i < 4; ++i) agent.observe(state, 10.0 + i, 0.005, next, false);

  const nlohmann::json payload = agent.checkpoint_payload();
  CHECK(payload["actor"]["params"] == payload["actor_target"]["params"]);
  CHECK(payload["critic"]["params"] == payload["critic_target"]["params"]);
}

TEST_CASE("target nets move by exactly the tracking rate") {
  const SystemConfig cfg = small_config();
  AgentHyper hyper = small_hyper();
  hyper.ddpg_batch = 4;
  DdpgAgent agent(cfg, hyper, cfg.devices_per_slice, 1000, 4);

  const nlohmann::json before = agent.checkpoint_payload();
  const std::vector<double> state(6, 0.0);
  std::vector<double> next(6, 0.0);
  next[1] = 2.0;
  for (int i = 0; i < 4; ++i) agent.observe(state, 10.0 + i, 0.005, next, false);

  const nlohmann::json after = agent.checkpoint_payload();
  const auto t_old = before["actor_target"]["params"].get<std::vector<double>>();
  const auto t_new = after["actor_target"]["params"].get<std::vector<double>>();
  const auto o_new = after["actor"]["params"].get<std::vector<double>>();
  const double rho = hyper.ddpg_polyak;
  for (std::size_t i = 0; i < t_new.size(); i += 17)
    CHECK_THAT(t_new[i], WithinAbs(rho * o_new[i] + (1.0 - rho) * t_old[i], 1e-12));
}

TEST_CASE("a poisoned target critic cannot corrupt the actor-critic pair") {
  const SystemConfig cfg = small_config();
  AgentHyper hyper = small_hyper();
  hyper.ddpg_batch = 4;
  DdpgAgent agent(cfg, hyper, cfg.devices_per_slice, 1000, 4);

  nlohmann::json payload = agent.checkpoint_payload();
  auto params = payload["critic_target"]["params"].get<std::vector<double>>();
  for (double& p : params) p = 1e308;
  payload["critic_target"]["params"] = params;
  agent.restore(payload);

  const std::vector<double> state(6, 0.0);
  std::vector<double> next(6, 0.0);
  next[2] = 1.5;
  for (int i = 0; i < 4; ++i) agent.observe(state, 8.0 + i, 0.004, next, false);

  CHECK(agent.skipped_updates() == 1);
  CHECK(agent.checkpoint_payload() == payload);
}

TEST_CASE("the factory builds exactly the advertised lineup") {
  const SystemConfig cfg = small_config();
  const AgentHyper hyper = small_hyper();
  REQUIRE(agent_tags().size() == 4);
  for (const std::string& tag : agent_tags()) {
    auto agent = make_agent(tag, cfg, hyper, cfg.devices_per_slice, 100, 0);
    CHECK(agent->name() == tag);
  }
  CHECK_THROWS_AS(make_agent("sarsa", cfg, hyper, cfg.devices_per_slice, 100, 0), ConfigError);
}

TEST_CASE("the replay buffer recycles its oldest transitions first") {
  ReplayBuffer buf(3, 1);
  CHECK(buf.capacity() == 3);
  CHECK(buf.empty());
  for (int i = 0; i < 4; ++i) {
    StepRecord s;
    s.reward = static_cast<double>(i);
    buf.push(std::move(s));
  }
  CHECK(buf.size() == 3);
  bool saw_first = false;
  std::vector<bool> seen(4, false);
  for (int i = 0; i < 200; ++i) {
    for (const StepRecord* s : buf.sample(3)) {
      if (s->reward == 0.0) saw_first = true;
      seen[static_cast<std::size_t>(s->reward)] = true;
    }
  }
  CHECK_FALSE(saw_first);
  CHECK(seen[1]);
  CHECK(seen[2]);
  CHECK(seen[3]);

  CHECK_THROWS_AS(ReplayBuffer(0, 1), std::invalid_argument);
  CHECK_THROWS_AS(buf.sample(0), std::invalid_argument);
  ReplayBuffer starved(10, 1);
  CHECK_THROWS_AS(starved.sample(1), std::logic_error);
}

TEST_CASE("restored learners play exactly like the originals") {
  const SystemConfig cfg = small_config();
  AgentHyper hyper = small_hyper();
  hyper.ppo_batch_episodes = 2;
  hyper.dqn_batch = 8;
  hyper.ddpg_batch = 8;
  for (const std::string& tag : {"ppo", "dqn", "ddpg"}) {
    auto trained = make_agent(tag, cfg, hyper, cfg.devices_per_slice, 1000, 11);
    for (std::uint64_t ep = 0; ep < 4; ++ep) {
      DormancyEnv env = make_env(cfg, 5, 100 + ep);
      run_episode(*trained, env);
    }
    auto clone = make_agent(tag, cfg, hyper, cfg.devices_per_slice, 1000, 999);
    clone->restore(trained->checkpoint_payload());
    CHECK(greedy_actions(*trained, cfg, 5, 20) == greedy_actions(*clone, cfg, 5, 20));
  }
}

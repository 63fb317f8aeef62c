#pragma once

// Umbrella header: the whole simulator, agents, and run harness.

#include "dormsim/anomaly.hpp"
#include "dormsim/checkpoint.hpp"
#include "dormsim/config.hpp"
#include "dormsim/energy.hpp"
#include "dormsim/env.hpp"
#include "dormsim/format.hpp"
#include "dormsim/net.hpp"
#include "dormsim/replay.hpp"
#include "dormsim/rl.hpp"
#include "dormsim/rng.hpp"

#include "dormsim/agents/agent.hpp"
#include "dormsim/agents/ddpg.hpp"
#include "dormsim/agents/dqn.hpp"
#include "dormsim/agents/factory.hpp"
#include "dormsim/agents/full_monitor.hpp"
#include "dormsim/agents/ppo.hpp"

#include "dormsim/harness/config_file.hpp"
#include "dormsim/harness/experiment.hpp"
#include "dormsim/harness/metrics.hpp"
#include "dormsim/harness/plot.hpp"

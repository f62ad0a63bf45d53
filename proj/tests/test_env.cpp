#include "toica/env.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "toica/baselines.hpp"

using namespace toica;

namespace {

SimConfig small_config(int terminals, int servers, int tasks = 4) {
  SimConfig cfg;
  cfg.n_terminals = terminals;
  cfg.n_servers = servers;
  cfg.tasks_per_app = tasks;
  cfg.dag_layers = 3;
  cfg.env_seed = 42;
  cfg.agent_seed = 7;
  return cfg;
}

// Uniform random actions over {0..M}; exercises every mode.
class RandomSource : public ActionSource {
 public:
  explicit RandomSource(std::uint64_t seed) : rng_(seed) {}
  std::vector<int> choose(MecEnv& env) override {
    std::vector<int> actions(env.config().n_terminals, -1);
    std::uniform_int_distribution<int> pick(0, env.config().n_servers);
    for (int n = 0; n < env.config().n_terminals; ++n)
      if (env.active(n)) actions[n] = pick(rng_);
    return actions;
  }

 private:
  Rng rng_;
};

class FixedSource : public ActionSource {
 public:
  explicit FixedSource(std::vector<int> actions) : actions_(std::move(actions)) {}
  std::vector<int> choose(MecEnv& env) override {
    std::vector<int> actions = actions_;
    for (int n = 0; n < env.config().n_terminals; ++n)
      if (!env.active(n)) actions[n] = -1;
    return actions;
  }

 private:
  std::vector<int> actions_;
};

}  // namespace

TEST(EnvReset, DeterministicForFixedSeed) {
  const SimConfig cfg = small_config(5, 3, 15);
  MecEnv a(cfg), b(cfg);
  a.reset(3);
  b.reset(3);
  for (int n = 0; n < cfg.n_terminals; ++n) {
    EXPECT_EQ(a.dag(n).edges, b.dag(n).edges);
    EXPECT_EQ(a.priorities(n).order, b.priorities(n).order);
    EXPECT_EQ(a.terminal_state(n).position.x, b.terminal_state(n).position.x);
    EXPECT_EQ(a.terminal_state(n).cpu_freq_hz, b.terminal_state(n).cpu_freq_hz);
  }
  // A different episode produces different applications.
  b.reset(4);
  bool any_diff = false;
  for (int n = 0; n < cfg.n_terminals; ++n)
    any_diff |= a.dag(n).edges != b.dag(n).edges;
  EXPECT_TRUE(any_diff);
}

TEST(EnvReset, SmallestEnvironmentAndQueueHeads) {
  const SimConfig cfg = small_config(1, 1, 6);
  MecEnv env(cfg);
  env.reset(0);
  EXPECT_TRUE(env.any_active());
  EXPECT_EQ(env.priorities(0).order.size(), 6u);
  // The queue head is the highest-priority task, which is always an entry.
  const TaskSpec& head = env.pending_task(0);
  EXPECT_TRUE(env.dag(0).is_entry(head.id));
  // Hardware draws respect the configured ranges.
  EXPECT_GE(env.terminal_state(0).cpu_freq_hz, cfg.term_cpu_min_hz);
  EXPECT_LE(env.terminal_state(0).cpu_freq_hz, cfg.term_cpu_max_hz);
  EXPECT_LE(env.terminal_state(0).position.norm(), cfg.arena_radius_m);
}

TEST(EnvReset, ObservationIsNormalized) {
  const SimConfig cfg = small_config(3, 2);
  MecEnv env(cfg);
  env.reset(1);
  for (int n = 0; n < cfg.n_terminals; ++n) {
    const auto s = env.observe(n);
    EXPECT_LE(std::abs(s[0]), 1.0);
    EXPECT_LE(std::abs(s[1]), 1.0);
    EXPECT_GT(s[2], 0.0);
    EXPECT_LE(s[2], 1.0);
    EXPECT_GT(s[3], 0.0);
    EXPECT_LE(s[3], 1.0);
  }
}

TEST(EnvStep, AllLocalGivesZeroRewardsAndNoChannels) {
  const SimConfig cfg = small_config(4, 3);
  MecEnv env(cfg);
  env.reset(0);
  const StepOutcome out = env.step({0, 0, 0, 0});
  for (int n = 0; n < 4; ++n) EXPECT_EQ(out.rewards[n], 0.0);
  for (const TaskRecord& row : env.trace().slots[0].tasks) {
    EXPECT_EQ(row.mode, 0);
    EXPECT_EQ(row.channels, 0);
    EXPECT_EQ(row.reward, 0.0);
    EXPECT_EQ(row.cost, row.local_cost_ref);
  }
}

TEST(EnvStep, SingleOffloaderReceivesAllSubchannels) {
  const SimConfig cfg = small_config(2, 2);
  MecEnv env(cfg);
  env.reset(0);
  env.step({1, 0});
  const SlotRecord& slot = env.trace().slots[0];
  ASSERT_EQ(slot.tasks.size(), 2u);
  const TaskRecord& offloaded = slot.tasks[0];
  EXPECT_EQ(offloaded.mode, 1);
  EXPECT_EQ(offloaded.channels, cfg.radio.n_subchannels);
  EXPECT_GT(offloaded.rate_bps, 0.0);
}

TEST(EnvStep, HandRecomputationOfRealizedCostsAndRewards) {
  // Two terminals, one cell: recompute every figure in the slot record from
  // the recorded fading, positions and channel assignment.
  const SimConfig cfg = small_config(2, 1);
  MecEnv env(cfg);
  env.reset(5);
  const double b0 = env.pending_task(0).input_bits;
  const double c0 = env.pending_task(0).cycles;
  const double b1 = env.pending_task(1).input_bits;
  const double c1 = env.pending_task(1).cycles;
  env.step({1, 1});

  const SlotRecord& slot = env.trace().slots[0];
  ASSERT_EQ(slot.tasks.size(), 2u);
  const double bits[2] = {b0, b1};
  const double cycles[2] = {c0, c1};
  for (int n = 0; n < 2; ++n) {
    const TaskRecord& row = slot.tasks[n];
    const TerminalState& hw = env.terminal_state(n);
    const double dist = distance(slot.positions[n], env.servers()[0].position);
    const int z = static_cast<int>(row.channel_ids.size());
    ASSERT_EQ(z, row.channels);
    double rate = 0.0;
    for (int k : row.channel_ids) {
      const double h = slot.fading[k] * std::pow(std::max(dist, 1.0), -cfg.radio.path_loss_index);
      rate += cfg.radio.per_channel_bandwidth_hz() *
              std::log2(1.0 + (hw.tx_power_w / z) * h / cfg.radio.noise_power_w);
    }
    const double d_tr = bits[n] / rate;
    const double d_co = (cycles[n] / cfg.server_cpu_hz) * std::pow(1.2, 2 - 1);
    const double energy = hw.tx_power_w * d_tr + cfg.term_static_w * d_co;
    const double cost = 0.5 * (d_tr + d_co) + 0.5 * energy;
    const double local_cost = 0.5 * (cycles[n] / hw.cpu_freq_hz) +
                              0.5 * (cfg.kappa * cycles[n] * hw.cpu_freq_hz * hw.cpu_freq_hz);
    EXPECT_NEAR(row.rate_bps, rate, 1e-6 * rate);
    EXPECT_NEAR(row.d_tr, d_tr, 1e-12);
    EXPECT_NEAR(row.d_co, d_co, 1e-15);
    EXPECT_NEAR(row.energy, energy, 1e-12);
    EXPECT_NEAR(row.cost, cost, 1e-12);
    EXPECT_NEAR(row.local_cost_ref, local_cost, 1e-15);
    EXPECT_NEAR(row.reward, std::tanh(local_cost - cost), 1e-12);
  }
  // Both terminals together hold all K channels exactly once.
  std::set<int> seen;
  for (const TaskRecord& row : slot.tasks)
    for (int k : row.channel_ids) EXPECT_TRUE(seen.insert(k).second);
  EXPECT_EQ(static_cast<int>(seen.size()), cfg.radio.n_subchannels);
}

TEST(EnvStep, AdmissionForcesLowestPriorityLocal) {
  SimConfig cfg = small_config(3, 1);
  cfg.radio.n_subchannels = 2;  // three offloaders cannot all fit
  MecEnv env(cfg);
  env.reset(2);
  int expected_local = 0;
  for (int n = 1; n < 3; ++n)
    if (env.pending_priority(n) < env.pending_priority(expected_local)) expected_local = n;
  env.step({1, 1, 1});
  const SlotRecord& slot = env.trace().slots[0];
  int locals = 0;
  for (const TaskRecord& row : slot.tasks) {
    if (row.mode == 0) {
      ++locals;
      EXPECT_EQ(row.terminal, expected_local);
      EXPECT_FALSE(row.admitted);
      EXPECT_EQ(row.action, 1);
      EXPECT_EQ(row.reward, 0.0);
    } else {
      EXPECT_TRUE(row.admitted);
    }
  }
  EXPECT_EQ(locals, 1);
}

TEST(EnvStep, ProtocolErrors) {
  const SimConfig cfg = small_config(2, 1, 1);
  MecEnv env(cfg);
  env.reset(0);
  EXPECT_THROW(env.step({0}), std::invalid_argument);       // wrong arity
  EXPECT_THROW(env.step({-1, 0}), std::invalid_argument);   // missing action
  EXPECT_THROW(env.step({0, 99}), std::invalid_argument);   // out of range
  env.step({0, 0});
  EXPECT_FALSE(env.any_active());
  EXPECT_THROW(env.step({0, 0}), std::logic_error);         // episode over
}

TEST(EnvEpisode, SingleTaskAppsFinishInOneSlot) {
  const SimConfig cfg = small_config(3, 2, 1);
  MecEnv env(cfg);
  RandomSource source(9);
  run_episode(env, source, 0);
  EXPECT_EQ(env.trace().slots.size(), 1u);
  EXPECT_TRUE(env.trace().complete);
  EXPECT_EQ(env.trace().app_delays.size(), 3u);
}

TEST(EnvEpisode, EpisodeLengthEqualsTasksPerApp) {
  const SimConfig cfg = small_config(2, 2, 7);
  MecEnv env(cfg);
  RandomSource source(11);
  run_episode(env, source, 1);
  EXPECT_EQ(env.trace().slots.size(), 7u);
}

TEST(EnvEpisode, HundredRandomEpisodesSatisfyEveryConstraint) {
  const SimConfig cfg = small_config(5, 3, 8);
  MecEnv env(cfg);
  RandomSource source(123);
  for (int episode = 0; episode < 100; ++episode) {
    run_episode(env, source, episode);
    std::vector<AppDag> dags;
    for (int n = 0; n < cfg.n_terminals; ++n) dags.push_back(env.dag(n));
    const auto violations = validate_trace(env.trace(), dags);
    ASSERT_TRUE(violations.empty())
        << "episode " << episode << ": " << violations.front();
    for (const SlotRecord& slot : env.trace().slots)
      for (const TaskRecord& row : slot.tasks) {
        ASSERT_GT(row.reward, -1.0);
        ASSERT_LT(row.reward, 1.0);
        if (row.action == 0) ASSERT_EQ(row.reward, 0.0);
      }
  }
}

TEST(EnvEpisode, TracesAreReproducibleAcrossRuns) {
  const SimConfig cfg = small_config(4, 2, 5);
  auto run_once = [&cfg]() {
    MecEnv env(cfg);
    OnDcaSource source;
    run_episode(env, source, 7);
    std::stringstream csv;
    write_trace_csv_header(csv);
    write_trace_csv_rows(csv, env.trace());
    return csv.str();
  };
  EXPECT_EQ(run_once(), run_once());
}

TEST(EnvEpisode, MobilityKeepsTerminalsInsideArena) {
  const SimConfig cfg = small_config(3, 2, 10);
  MecEnv env(cfg);
  RandomSource source(5);
  for (int episode = 0; episode < 5; ++episode) {
    run_episode(env, source, episode);
    for (int n = 0; n < cfg.n_terminals; ++n)
      EXPECT_LE(env.terminal_state(n).position.norm(), cfg.arena_radius_m + 1e-9);
  }
}

TEST(ObjectiveTerms, HandBuiltTrace) {
  EpisodeTrace trace;
  trace.omega = 0.5;
  trace.complete = true;
  SlotRecord slot;
  slot.slot_duration = 0.14;
  TaskRecord t1;
  t1.d_total = 0.05;
  t1.energy = 0.02;
  t1.cost = 0.035;
  TaskRecord t2;
  t2.d_total = 0.14;
  t2.energy = 0.01;
  t2.cost = 0.075;
  slot.tasks = {t1, t2};
  trace.slots = {slot};
  trace.total_energy = 0.03;

  const ObjectiveTerms terms = objective_terms(trace);
  EXPECT_DOUBLE_EQ(terms.sum_slot_durations, 0.14);
  EXPECT_DOUBLE_EQ(terms.total_energy, 0.03);
  EXPECT_DOUBLE_EQ(terms.objective, 0.5 * 0.14 + 0.5 * 0.03);
  EXPECT_DOUBLE_EQ(terms.mean_task_cost, 0.055);
  EXPECT_EQ(terms.n_tasks, 2);

  trace.omega = 0.0;
  const ObjectiveTerms energy_only = objective_terms(trace);
  EXPECT_DOUBLE_EQ(energy_only.objective, 0.03);

  trace.complete = false;
  EXPECT_THROW(objective_terms(trace), std::runtime_error);
}

TEST(ObjectiveTerms, SlotDurationIsMaxOverTerminals) {
  const SimConfig cfg = small_config(2, 1);
  MecEnv env(cfg);
  env.reset(0);
  const StepOutcome out = env.step({0, 1});
  const SlotRecord& slot = env.trace().slots[0];
  double max_delay = 0.0;
  for (const TaskRecord& row : slot.tasks) max_delay = std::max(max_delay, row.d_total);
  EXPECT_EQ(out.slot_duration, max_delay);
  EXPECT_EQ(slot.slot_duration, max_delay);
}

TEST(EnvConfig, ValidationCatchesBadValues) {
  SimConfig cfg = small_config(2, 1);
  cfg.omega = 1.5;
  EXPECT_THROW(MecEnv{cfg}, std::invalid_argument);
  cfg = small_config(0, 1);
  EXPECT_THROW(MecEnv{cfg}, std::invalid_argument);
  cfg = small_config(2, 1);
  cfg.noise_dbm = -100.0;
  MecEnv env(cfg);
  EXPECT_DOUBLE_EQ(env.config().radio.noise_power_w, 1e-13);
}

#pragma once

// The slotted multi-cell MEC environment. Each slot: every terminal with a
// pending task picks a processing mode, per-cell DCA assigns subchannels,
// fading and cross-cell interference are realized, delays/energies/rewards
// are computed, queues advance and terminals move.

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "toica/cost.hpp"
#include "toica/d3qn.hpp"
#include "toica/dag.hpp"
#include "toica/dca.hpp"
#include "toica/radio.hpp"
#include "toica/schedule.hpp"
#include "toica/trace.hpp"

namespace toica {

enum class AdmissionRule { Priority, Index };
enum class AllocationMode { Dca, Random };
enum class PriorityMode { AvgCost, RandomTopo };

struct TaskGenConfig {
  double input_kb_min = 150.0;
  double input_kb_max = 400.0;
  double mcycles_min = 30.0;
  double mcycles_max = 80.0;
};

struct SimConfig {
  int n_terminals = 5;
  int n_servers = 3;
  double arena_radius_m = 500.0;
  int tasks_per_app = 15;
  int dag_layers = 5;
  double dag_edge_prob = 0.3;
  double omega = 0.5;
  int episodes = 1000;
  int eval_episodes = 200;
  std::uint64_t env_seed = 1;
  std::uint64_t agent_seed = 1;
  std::uint64_t eval_seed = 1001;
  AdmissionRule admission = AdmissionRule::Priority;
  AllocationMode allocation = AllocationMode::Dca;
  PriorityMode priority_mode = PriorityMode::AvgCost;
  bool shared_network = true;
  double speed_min_mps = 1.0;
  double speed_max_mps = 15.0;
  double noise_dbm = -100.0;
  TaskGenConfig task;
  RadioConfig radio;
  double term_cpu_min_hz = 1.0e9;
  double term_cpu_max_hz = 1.2e9;
  double term_tx_min_w = 1.0;
  double term_tx_max_w = 1.5;
  double term_static_w = 0.3;
  double kappa = 1e-27;
  double server_cpu_hz = 5e9;
  double server_degradation = 0.2;
  AgentConfig agent;

  double bits_norm() const { return task.input_kb_max * 8000.0; }
  double cycles_norm() const { return task.mcycles_max * 1e6; }

  TaskDrawRanges task_ranges() const {
    return {task.input_kb_min * 8000.0, task.input_kb_max * 8000.0, task.mcycles_min * 1e6,
            task.mcycles_max * 1e6};
  }

  // Derives watt-scale noise from the dBm knob and checks the whole bundle.
  void finalize() {
    radio.noise_power_w = dbm_to_watts(noise_dbm);
    validate();
  }

  void validate() const {
    if (n_terminals < 1 || n_servers < 1) throw std::invalid_argument("SimConfig: need terminals and servers");
    if (!(arena_radius_m > 0.0)) throw std::invalid_argument("SimConfig: arena radius must be positive");
    if (tasks_per_app < 1 || dag_layers < 1) throw std::invalid_argument("SimConfig: bad DAG shape");
    if (dag_edge_prob < 0.0 || dag_edge_prob > 1.0) throw std::invalid_argument("SimConfig: bad edge probability");
    if (omega < 0.0 || omega > 1.0) throw std::invalid_argument("SimConfig: omega must lie in [0, 1]");
    if (speed_min_mps < 0.0 || speed_max_mps < speed_min_mps)
      throw std::invalid_argument("SimConfig: bad speed range");
    if (!(task.input_kb_min > 0.0) || task.input_kb_max < task.input_kb_min ||
        !(task.mcycles_min > 0.0) || task.mcycles_max < task.mcycles_min)
      throw std::invalid_argument("SimConfig: bad task draw ranges");
    if (!(term_cpu_min_hz > 0.0) || term_cpu_max_hz < term_cpu_min_hz ||
        !(term_tx_min_w > 0.0) || term_tx_max_w < term_tx_min_w)
      throw std::invalid_argument("SimConfig: bad terminal hardware ranges");
    if (!(term_static_w >= 0.0) || !(kappa > 0.0)) throw std::invalid_argument("SimConfig: bad power constants");
    if (!(server_cpu_hz > 0.0) || server_degradation < 0.0)
      throw std::invalid_argument("SimConfig: bad server parameters");
    radio.validate();
    agent.validate();
  }
};

// Fixed server sites: a single server sits at the center, several sit
// evenly spaced on a ring of half the arena radius.
inline std::vector<ServerState> place_servers(const SimConfig& cfg) {
  std::vector<ServerState> servers(cfg.n_servers);
  for (int m = 0; m < cfg.n_servers; ++m) {
    ServerState& s = servers[m];
    if (cfg.n_servers == 1) {
      s.position = {0.0, 0.0};
    } else {
      const double angle = 2.0 * M_PI * m / cfg.n_servers;
      const double ring = cfg.arena_radius_m / 2.0;
      s.position = {ring * std::cos(angle), ring * std::sin(angle)};
    }
    s.cpu_freq_hz = cfg.server_cpu_hz;
    s.degradation = cfg.server_degradation;
  }
  return servers;
}

struct StepOutcome {
  std::vector<double> rewards;          // per terminal, 0 for inactive
  std::vector<std::uint8_t> was_active;
  std::vector<std::uint8_t> done_now;   // application finished this slot
  double slot_duration = 0.0;
};

class MecEnv {
 public:
  explicit MecEnv(const SimConfig& cfg) : cfg_(cfg) {
    cfg_.finalize();
    servers_ = place_servers(cfg_);
  }

  const SimConfig& config() const { return cfg_; }
  const std::vector<ServerState>& servers() const { return servers_; }
  int episode() const { return episode_; }
  int slot() const { return slot_; }
  int n_actions() const { return cfg_.n_servers + 1; }

  void reset(int episode) {
    episode_ = episode;
    slot_ = 0;
    Rng rng(mix_seed(cfg_.env_seed, static_cast<std::uint64_t>(episode), 0x5e5eu));
    terminals_.assign(cfg_.n_terminals, {});
    for (int n = 0; n < cfg_.n_terminals; ++n) {
      Terminal& t = terminals_[n];
      t.dag = generate_random_dag(cfg_.tasks_per_app, cfg_.dag_layers, cfg_.dag_edge_prob, rng(), n,
                                  cfg_.task_ranges());
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      const double radius = cfg_.arena_radius_m * std::sqrt(unit(rng));
      const double angle = 2.0 * M_PI * unit(rng);
      t.hw.position = {radius * std::cos(angle), radius * std::sin(angle)};
      t.hw.cpu_freq_hz =
          std::uniform_real_distribution<double>(cfg_.term_cpu_min_hz, cfg_.term_cpu_max_hz)(rng);
      t.hw.tx_power_w =
          std::uniform_real_distribution<double>(cfg_.term_tx_min_w, cfg_.term_tx_max_w)(rng);
      t.hw.static_power_w = cfg_.term_static_w;
      t.hw.switched_capacitance = cfg_.kappa;
      if (cfg_.priority_mode == PriorityMode::AvgCost) {
        // Estimation caveats apply: interference ignored, no channel
        // competition, positions frozen at reset.
        const std::vector<double> est =
            estimate_task_costs(t.dag, t.hw, servers_, cfg_.radio, cfg_.omega);
        t.prio = compute_priorities(t.dag, est);
      } else {
        t.prio.order = random_topological_order(t.dag, rng);
        t.prio.priority.assign(t.dag.n_tasks(), 0.0);
        for (int pos = 0; pos < t.dag.n_tasks(); ++pos)
          t.prio.priority[t.prio.order[pos]] = static_cast<double>(t.dag.n_tasks() - pos);
      }
      t.cursor = 0;
      t.finish_times.assign(t.dag.n_tasks(), kUnfinished);
    }
    trace_ = EpisodeTrace{};
    trace_.episode = episode;
    trace_.n_terminals = cfg_.n_terminals;
    trace_.n_servers = cfg_.n_servers;
    trace_.n_subchannels = cfg_.radio.n_subchannels;
    trace_.omega = cfg_.omega;
  }

  bool active(int n) const { return terminals_[n].cursor < terminals_[n].prio.order.size(); }

  bool any_active() const {
    for (int n = 0; n < cfg_.n_terminals; ++n)
      if (active(n)) return true;
    return false;
  }

  const AppDag& dag(int n) const { return terminals_[n].dag; }
  const TerminalState& terminal_state(int n) const { return terminals_[n].hw; }
  const PriorityTable& priorities(int n) const { return terminals_[n].prio; }

  const TaskSpec& pending_task(int n) const {
    const Terminal& t = terminals_[n];
    if (!active(n)) throw std::logic_error("pending_task: terminal has no pending task");
    return t.dag.tasks[t.prio.order[t.cursor]];
  }

  double pending_priority(int n) const { return terminals_[n].prio.priority[pending_task(n).id]; }

  // Agent observation: position scaled by the arena radius, pending task
  // volume and cycles scaled by their draw maxima. Zero task features once
  // the application finished.
  std::array<double, kStateDim> observe(int n) const {
    const Terminal& t = terminals_[n];
    std::array<double, kStateDim> s{t.hw.position.x / cfg_.arena_radius_m,
                                    t.hw.position.y / cfg_.arena_radius_m, 0.0, 0.0};
    if (active(n)) {
      const TaskSpec& task = pending_task(n);
      s[2] = task.input_bits / cfg_.bits_norm();
      s[3] = task.cycles / cfg_.cycles_norm();
    }
    return s;
  }

  EpisodeTrace& trace() { return trace_; }
  const EpisodeTrace& trace() const { return trace_; }

  StepOutcome step(const std::vector<int>& actions) {
    if (static_cast<int>(actions.size()) != cfg_.n_terminals)
      throw std::invalid_argument("step: need one action slot per terminal");
    if (!any_active()) throw std::logic_error("step: episode already complete");
    for (int n = 0; n < cfg_.n_terminals; ++n) {
      if (active(n)) {
        if (actions[n] < 0 || actions[n] > cfg_.n_servers)
          throw std::invalid_argument("step: action out of range for terminal " + std::to_string(n));
      } else if (actions[n] >= 0) {
        throw std::invalid_argument("step: action supplied for idle terminal " + std::to_string(n));
      }
    }

    Rng fading_rng(mix_seed(cfg_.env_seed, episode_, slot_, 0xfadeu));
    Rng alloc_rng(mix_seed(cfg_.env_seed, episode_, slot_, 0xa110u));
    Rng mobility_rng(mix_seed(cfg_.env_seed, episode_, slot_, 0x30b1u));

    const int K = cfg_.radio.n_subchannels;
    const ChannelRealization real = ChannelRealization::draw(slot_, K, fading_rng);

    SlotRecord rec;
    rec.episode = episode_;
    rec.slot = slot_;
    rec.fading = real.fading;
    rec.positions.resize(cfg_.n_terminals);
    for (int n = 0; n < cfg_.n_terminals; ++n) rec.positions[n] = terminals_[n].hw.position;

    // Admission: a cell can host at most K offloaders; excess terminals run
    // locally this slot, lowest admission rank dropped first.
    std::vector<int> mode(cfg_.n_terminals, -1);
    std::vector<std::uint8_t> admitted(cfg_.n_terminals, 1);
    for (int n = 0; n < cfg_.n_terminals; ++n)
      if (active(n)) mode[n] = actions[n];
    for (int m = 1; m <= cfg_.n_servers; ++m) {
      std::vector<int> members;
      for (int n = 0; n < cfg_.n_terminals; ++n)
        if (mode[n] == m) members.push_back(n);
      if (static_cast<int>(members.size()) <= K) continue;
      if (cfg_.admission == AdmissionRule::Priority) {
        std::sort(members.begin(), members.end(), [this](int a, int b) {
          const double pa = pending_priority(a), pb = pending_priority(b);
          if (pa != pb) return pa > pb;
          return a < b;
        });
      }
      for (std::size_t at = K; at < members.size(); ++at) {
        mode[members[at]] = 0;
        admitted[members[at]] = 0;
      }
    }

    // Per-cell channel allocation for the admitted offloaders.
    std::vector<CellAssignment> cells;
    std::vector<Vec2> positions(cfg_.n_terminals);
    std::vector<double> tx_power(cfg_.n_terminals);
    for (int n = 0; n < cfg_.n_terminals; ++n) {
      positions[n] = terminals_[n].hw.position;
      tx_power[n] = terminals_[n].hw.tx_power_w;
    }
    for (int m = 1; m <= cfg_.n_servers; ++m) {
      CellAssignment cell;
      cell.server = m - 1;
      for (int n = 0; n < cfg_.n_terminals; ++n)
        if (mode[n] == m) cell.terminals.push_back(n);
      if (cell.terminals.empty()) continue;
      AllocationPlan plan;
      if (cfg_.allocation == AllocationMode::Dca) {
        std::vector<OffloadDemand> demands;
        demands.reserve(cell.terminals.size());
        for (int n : cell.terminals)
          demands.push_back({pending_task(n).input_bits, tx_power[n],
                             distance(positions[n], servers_[m - 1].position)});
        plan = solve_gkp(estimate_values(demands, cfg_.radio, cfg_.omega));
      } else {
        plan.counts = random_composition(K, static_cast<int>(cell.terminals.size()), alloc_rng);
      }
      materialize(plan, K, alloc_rng);
      cell.counts = plan.counts;
      cell.matrix = std::move(plan.matrix);
      cells.push_back(std::move(cell));
    }

    // Realized costs, rewards and timing.
    StepOutcome out;
    out.rewards.assign(cfg_.n_terminals, 0.0);
    out.was_active.assign(cfg_.n_terminals, 0);
    out.done_now.assign(cfg_.n_terminals, 0);

    std::vector<double> interference(K, 0.0);
    double slot_duration = 0.0;
    for (int n = 0; n < cfg_.n_terminals; ++n) {
      if (mode[n] < 0) continue;
      out.was_active[n] = 1;
      Terminal& t = terminals_[n];
      const TaskSpec task = pending_task(n);
      const CostBreakdown local =
          local_breakdown(task.cycles, t.hw.cpu_freq_hz, t.hw.switched_capacitance, cfg_.omega);
      CostBreakdown realized = local;

      TaskRecord row;
      row.terminal = n;
      row.task = task.id;
      row.action = actions[n];
      row.mode = mode[n];
      row.admitted = admitted[n] != 0;
      row.local_cost_ref = local.cost;

      if (mode[n] > 0) {
        const int m = mode[n];
        const CellAssignment* cell = nullptr;
        std::size_t rowidx = 0;
        for (const CellAssignment& c : cells)
          if (c.server == m - 1)
            for (std::size_t i = 0; i < c.terminals.size(); ++i)
              if (c.terminals[i] == n) {
                cell = &c;
                rowidx = i;
              }
        const int occupancy = static_cast<int>(cell->terminals.size());
        for (int k = 0; k < K; ++k)
          interference[k] =
              interference_at(m - 1, k, cells, positions, tx_power, server_positions(), real, cfg_.radio);
        const double dist = distance(positions[n], servers_[m - 1].position);
        const double rate =
            uplink_rate(cell->matrix[rowidx], t.hw.tx_power_w, dist, real, interference, cfg_.radio);
        const double d_tr = comm_time(task.input_bits, rate);
        const double d_co =
            edge_compute_time(task.cycles, servers_[m - 1].cpu_freq_hz, occupancy,
                              servers_[m - 1].degradation);
        realized = edge_breakdown(m, d_tr, d_co, t.hw.tx_power_w, t.hw.static_power_w, cfg_.omega);
        row.channels = cell->counts[rowidx];
        for (int k = 0; k < K; ++k)
          if (cell->matrix[rowidx][k]) row.channel_ids.push_back(k);
        row.rate_bps = rate;
      }

      row.d_tr = realized.d_tr;
      row.d_co = realized.d_co;
      row.d_total = realized.delay;
      row.energy = realized.energy;
      row.cost = realized.cost;
      // tanh maps into the open interval (-1, 1); keep the float result
      // strictly inside it even when the argument saturates the rounding.
      row.reward = std::clamp(std::tanh(local.cost - realized.cost),
                              std::nextafter(-1.0, 0.0), std::nextafter(1.0, 0.0));
      out.rewards[n] = row.reward;

      row.ready_time = ready_time(t.dag, task.id, t.finish_times);
      row.finish_time = row.ready_time + realized.delay;
      t.finish_times[task.id] = row.finish_time;

      slot_duration = std::max(slot_duration, realized.delay);
      trace_.cumulative_reward += row.reward;
      trace_.total_energy += row.energy;
      rec.tasks.push_back(std::move(row));
    }

    // Advance queues, then mobility with the realized slot duration.
    for (int n = 0; n < cfg_.n_terminals; ++n) {
      if (mode[n] < 0) continue;
      Terminal& t = terminals_[n];
      ++t.cursor;
      if (!active(n)) out.done_now[n] = 1;
    }
    for (Terminal& t : terminals_)
      t.hw = step_mobility(t.hw, slot_duration, cfg_.arena_radius_m, cfg_.speed_min_mps,
                           cfg_.speed_max_mps, mobility_rng);

    rec.slot_duration = slot_duration;
    out.slot_duration = slot_duration;
    trace_.slots.push_back(std::move(rec));
    ++slot_;

    if (!any_active()) {
      trace_.complete = true;
      trace_.app_delays.resize(cfg_.n_terminals);
      for (int n = 0; n < cfg_.n_terminals; ++n)
        trace_.app_delays[n] = app_delay(terminals_[n].dag, terminals_[n].finish_times);
    }
    return out;
  }

 private:
  struct Terminal {
    TerminalState hw;
    AppDag dag;
    PriorityTable prio;
    std::size_t cursor = 0;
    std::vector<double> finish_times;
  };

  std::span<const Vec2> server_positions() const {
    server_pos_.resize(servers_.size());
    for (std::size_t m = 0; m < servers_.size(); ++m) server_pos_[m] = servers_[m].position;
    return server_pos_;
  }

  SimConfig cfg_;
  std::vector<ServerState> servers_;
  std::vector<Terminal> terminals_;
  EpisodeTrace trace_;
  int episode_ = -1;
  int slot_ = 0;
  mutable std::vector<Vec2> server_pos_;
};

// Something that can drive an episode: choose() returns one action per
// terminal (-1 for terminals without a pending task), observe() sees the
// outcome of the step it chose.
class ActionSource {
 public:
  virtual ~ActionSource() = default;
  virtual std::vector<int> choose(MecEnv& env) = 0;
  virtual void observe(MecEnv& env, const StepOutcome& out) { (void)env, (void)out; }
  virtual void end_episode() {}
};

// Wraps one shared agent (or one per terminal) as an action source. In
// training mode transitions are stored and a batched TD update runs each
// slot once the pool holds a batch.
class AgentSource : public ActionSource {
 public:
  AgentSource(std::span<D3qnAgent> agents, bool train, bool shared)
      : agents_(agents), train_(train), shared_(shared) {
    if (agents_.empty()) throw std::invalid_argument("AgentSource: need at least one agent");
  }

  std::vector<int> choose(MecEnv& env) override {
    const int n_terminals = env.config().n_terminals;
    pending_state_.assign(n_terminals, {});
    std::vector<int> actions(n_terminals, -1);
    for (int n = 0; n < n_terminals; ++n) {
      if (!env.active(n)) continue;
      pending_state_[n] = env.observe(n);
      actions[n] = agent_for(n).act(pending_state_[n], train_);
    }
    pending_actions_ = actions;
    return actions;
  }

  void observe(MecEnv& env, const StepOutcome& out) override {
    if (!train_) return;
    const int n_terminals = env.config().n_terminals;
    for (int n = 0; n < n_terminals; ++n) {
      if (!out.was_active[n]) continue;
      Transition tr;
      tr.state = pending_state_[n];
      tr.action = pending_actions_[n];
      tr.reward = out.rewards[n];
      tr.next_state = env.observe(n);
      tr.terminal = out.done_now[n] != 0;
      agent_for(n).remember(tr);
    }
    if (shared_) {
      D3qnAgent& agent = agents_[0];
      for (int u = 0; u < agent.config().updates_per_slot; ++u)
        if (agent.can_learn()) agent.learn();
    } else {
      for (D3qnAgent& agent : agents_)
        for (int u = 0; u < agent.config().updates_per_slot; ++u)
          if (agent.can_learn()) agent.learn();
    }
  }

  void end_episode() override {
    if (!train_) return;
    if (shared_) {
      agents_[0].end_episode();
    } else {
      for (D3qnAgent& agent : agents_) agent.end_episode();
    }
  }

 private:
  D3qnAgent& agent_for(int terminal) { return shared_ ? agents_[0] : agents_[terminal]; }

  std::span<D3qnAgent> agents_;
  bool train_;
  bool shared_;
  std::vector<std::array<double, kStateDim>> pending_state_;
  std::vector<int> pending_actions_;
};

inline double run_episode(MecEnv& env, ActionSource& source, int episode) {
  env.reset(episode);
  while (env.any_active()) {
    const std::vector<int> actions = source.choose(env);
    const StepOutcome out = env.step(actions);
    source.observe(env, out);
  }
  source.end_episode();
  return env.trace().cumulative_reward;
}

}  // namespace toica

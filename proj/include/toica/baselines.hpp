#pragma once

// Comparison policies: nearest-server offloading (ON), the single-edge
// greedy with coordinate-descent adjustment (SEG), random DAG decoupling
// and random channel allocation.

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "toica/env.hpp"

namespace toica {

enum class PolicyKind { Toica, ToicaRa, OnDca, SegDca, DtoRandomAlloc };

inline std::string to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::Toica: return "toica";
    case PolicyKind::ToicaRa: return "toica-ra";
    case PolicyKind::OnDca: return "on-dca";
    case PolicyKind::SegDca: return "seg-dca";
    case PolicyKind::DtoRandomAlloc: return "dto-random";
  }
  return "unknown";
}

inline PolicyKind parse_policy(const std::string& name) {
  if (name == "toica") return PolicyKind::Toica;
  if (name == "toica-ra") return PolicyKind::ToicaRa;
  if (name == "on-dca") return PolicyKind::OnDca;
  if (name == "seg-dca") return PolicyKind::SegDca;
  if (name == "dto-random") return PolicyKind::DtoRandomAlloc;
  throw std::invalid_argument("unknown policy '" + name + "'");
}

inline bool policy_trainable(PolicyKind kind) {
  return kind == PolicyKind::Toica || kind == PolicyKind::ToicaRa ||
         kind == PolicyKind::DtoRandomAlloc;
}

// Adjusts the environment knobs a policy variant relies on.
inline SimConfig apply_policy(SimConfig cfg, PolicyKind kind) {
  if (kind == PolicyKind::ToicaRa) cfg.priority_mode = PriorityMode::RandomTopo;
  if (kind == PolicyKind::DtoRandomAlloc) cfg.allocation = AllocationMode::Random;
  return cfg;
}

// Offloading nearby: every terminal ships its task to the closest server,
// ties to the lowest server index; never local by construction.
inline std::vector<int> on_policy_actions(const MecEnv& env) {
  const int n_terminals = env.config().n_terminals;
  std::vector<int> actions(n_terminals, -1);
  for (int n = 0; n < n_terminals; ++n) {
    if (!env.active(n)) continue;
    int best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int m = 0; m < env.config().n_servers; ++m) {
      const double d = distance(env.terminal_state(n).position, env.servers()[m].position);
      if (d < best_dist) {
        best_dist = d;
        best = m;
      }
    }
    actions[n] = best + 1;
  }
  return actions;
}

namespace detail {

// SEG's cost estimate for terminal n running in `mode` while `occupancy`
// terminals (n included) share server mode-1: an even channel split and the
// interference-free rate model.
inline double seg_estimated_cost(const MecEnv& env, int n, int mode, int occupancy) {
  const SimConfig& cfg = env.config();
  const TerminalState& hw = env.terminal_state(n);
  const TaskSpec& task = env.pending_task(n);
  if (mode == 0) return local_breakdown(task.cycles, hw.cpu_freq_hz, hw.switched_capacitance, cfg.omega).cost;
  const ServerState& server = env.servers()[mode - 1];
  const int share = std::max(1, cfg.radio.n_subchannels / std::max(1, occupancy));
  const double rate =
      estimated_rate(hw.tx_power_w, distance(hw.position, server.position), share, cfg.radio);
  const double d_tr = comm_time(task.input_bits, rate);
  const double d_co = edge_compute_time(task.cycles, server.cpu_freq_hz, occupancy, server.degradation);
  return edge_breakdown(mode, d_tr, d_co, hw.tx_power_w, hw.static_power_w, cfg.omega).cost;
}

inline double seg_total_cost(const MecEnv& env, const std::vector<int>& modes) {
  const SimConfig& cfg = env.config();
  std::vector<int> occupancy(cfg.n_servers + 1, 0);
  for (int n = 0; n < cfg.n_terminals; ++n)
    if (modes[n] > 0) ++occupancy[modes[n]];
  double total = 0.0;
  for (int n = 0; n < cfg.n_terminals; ++n) {
    if (modes[n] < 0) continue;
    total += seg_estimated_cost(env, n, modes[n], modes[n] > 0 ? occupancy[modes[n]] : 0);
  }
  return total;
}

}  // namespace detail

// Single-edge greedy: phase one picks each terminal's solo cost-minimizing
// mode; phase two sweeps the terminals round-robin, moving one whenever the
// move strictly lowers the summed estimated cost, until a pass changes
// nothing or the iteration budget runs out. pass_totals, when given,
// receives the total estimated cost after phase one and after each pass.
inline std::vector<int> seg_policy_actions(const MecEnv& env, int max_iters = 10,
                                           std::vector<double>* pass_totals = nullptr) {
  const SimConfig& cfg = env.config();
  std::vector<int> modes(cfg.n_terminals, -1);
  for (int n = 0; n < cfg.n_terminals; ++n) {
    if (!env.active(n)) continue;
    int best_mode = 0;
    double best = detail::seg_estimated_cost(env, n, 0, 0);
    for (int m = 1; m <= cfg.n_servers; ++m) {
      const double c = detail::seg_estimated_cost(env, n, m, 1);
      if (c < best) {
        best = c;
        best_mode = m;
      }
    }
    modes[n] = best_mode;
  }

  double total = detail::seg_total_cost(env, modes);
  if (pass_totals) pass_totals->push_back(total);
  for (int pass = 0; pass < max_iters; ++pass) {
    bool changed = false;
    for (int n = 0; n < cfg.n_terminals; ++n) {
      if (modes[n] < 0) continue;
      const int current = modes[n];
      int best_mode = current;
      double best = total;
      for (int m = 0; m <= cfg.n_servers; ++m) {
        if (m == current) continue;
        modes[n] = m;
        const double candidate = detail::seg_total_cost(env, modes);
        if (candidate < best) {
          best = candidate;
          best_mode = m;
        }
      }
      modes[n] = best_mode;
      if (best_mode != current) {
        total = best;
        changed = true;
      }
    }
    if (pass_totals) pass_totals->push_back(total);
    if (!changed) break;
  }
  return modes;
}

// DTO Only's allocator: a uniformly random composition of the K subchannels
// over the cell's terminals, then random channel identities.
inline AllocationPlan random_allocation(int n_terminals, int n_subchannels, Rng& rng) {
  AllocationPlan plan;
  plan.counts = random_composition(n_subchannels, n_terminals, rng);
  materialize(plan, n_subchannels, rng);
  return plan;
}

class OnDcaSource : public ActionSource {
 public:
  std::vector<int> choose(MecEnv& env) override { return on_policy_actions(env); }
};

class SegDcaSource : public ActionSource {
 public:
  explicit SegDcaSource(int max_iters = 10) : max_iters_(max_iters) {}
  std::vector<int> choose(MecEnv& env) override { return seg_policy_actions(env, max_iters_); }

 private:
  int max_iters_;
};

}  // namespace toica

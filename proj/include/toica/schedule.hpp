#pragma once

// Timing semantics over a task DAG plus the average-cost priority rule that
// flattens each application into a topological execution queue.

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "toica/cost.hpp"
#include "toica/dag.hpp"
#include "toica/radio.hpp"

namespace toica {

inline bool finish_time_known(double ft) { return !std::isnan(ft); }

constexpr double kUnfinished = std::numeric_limits<double>::quiet_NaN();

// Ready time of a task: the latest finish time among its immediate
// predecessors; entry tasks are ready at time zero.
inline double ready_time(const AppDag& dag, int task, const std::vector<double>& finish_times) {
  double rt = 0.0;
  for (int p : dag.preds[task]) {
    if (!finish_time_known(finish_times[p]))
      throw std::runtime_error("ready_time: predecessor " + std::to_string(p) + " has no finish time");
    rt = std::max(rt, finish_times[p]);
  }
  return rt;
}

// Application completion: the latest finish time over the exit set.
inline double app_delay(const AppDag& dag, const std::vector<double>& finish_times) {
  double delay = 0.0;
  for (int ex : dag.exit_tasks) {
    if (!finish_time_known(finish_times[ex]))
      throw std::runtime_error("app_delay: exit task " + std::to_string(ex) + " is unfinished");
    delay = std::max(delay, finish_times[ex]);
  }
  return delay;
}

struct PriorityTable {
  std::vector<double> avg_cost;  // summed estimated cost over all processing modes
  std::vector<double> priority;
  std::vector<int> order;        // descending priority, ties by ascending task id
};

// Exit tasks carry their own cost estimate; every other task adds its
// estimate on top of the highest-priority successor. Computed backwards
// over a topological order.
inline PriorityTable compute_priorities(const AppDag& dag, std::span<const double> est_costs) {
  const int n = dag.n_tasks();
  if (static_cast<int>(est_costs.size()) != n)
    throw std::invalid_argument("compute_priorities: cost table size mismatch");
  for (double c : est_costs)
    if (!(c > 0.0)) throw std::invalid_argument("compute_priorities: estimated costs must be positive");

  PriorityTable table;
  table.avg_cost.assign(est_costs.begin(), est_costs.end());
  table.priority.assign(n, 0.0);
  const std::vector<int> topo = topological_order(dag);  // throws on cycles
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    const int i = *it;
    double best_succ = 0.0;
    for (int s : dag.succs[i]) best_succ = std::max(best_succ, table.priority[s]);
    table.priority[i] = best_succ + table.avg_cost[i];
  }
  table.order.resize(n);
  for (int i = 0; i < n; ++i) table.order[i] = i;
  std::sort(table.order.begin(), table.order.end(), [&](int a, int b) {
    if (table.priority[a] != table.priority[b]) return table.priority[a] > table.priority[b];
    return a < b;
  });
  return table;
}

// Estimated per-task cost summed over every processing mode, used as the
// priority weight. The estimate deliberately ignores channel competition:
// unit fading, one subchannel at full power, a single VM on the server.
inline std::vector<double> estimate_task_costs(const AppDag& dag, const TerminalState& terminal,
                                               std::span<const ServerState> servers,
                                               const RadioConfig& radio, double omega) {
  std::vector<double> costs(dag.n_tasks());
  const double bw = radio.per_channel_bandwidth_hz();
  for (int i = 0; i < dag.n_tasks(); ++i) {
    const TaskSpec& task = dag.tasks[i];
    double total = local_breakdown(task.cycles, terminal.cpu_freq_hz,
                                   terminal.switched_capacitance, omega).cost;
    for (const ServerState& server : servers) {
      const double gain = path_gain(1.0, distance(terminal.position, server.position),
                                    radio.path_loss_index);
      const double rate = bw * std::log2(1.0 + terminal.tx_power_w * gain / radio.noise_power_w);
      const double d_tr = comm_time(task.input_bits, rate);
      const double d_co = task.cycles / server.cpu_freq_hz;
      total += edge_breakdown(1, d_tr, d_co, terminal.tx_power_w, terminal.static_power_w, omega).cost;
    }
    costs[i] = total;
  }
  return costs;
}

}  // namespace toica

#pragma once

// Episode traces: one record per (slot, terminal) with the realized radio
// and cost figures, plus the constraint validator and objective reduction.

#include <cmath>
#include <limits>
#include <ostream>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "toica/cost.hpp"
#include "toica/dag.hpp"
#include "toica/radio.hpp"

namespace toica {

struct TaskRecord {
  int terminal = 0;
  int task = 0;
  int action = 0;    // what the policy chose (0 local, m = server m)
  int mode = 0;      // what actually ran after admission
  bool admitted = true;
  int channels = 0;  // subchannels held, 0 for local execution
  std::vector<int> channel_ids;
  double rate_bps = 0.0;
  double d_tr = 0.0;
  double d_co = 0.0;
  double d_total = 0.0;
  double energy = 0.0;
  double cost = 0.0;
  double reward = 0.0;
  double local_cost_ref = 0.0;  // hypothetical local cost of the same task
  double ready_time = 0.0;
  double finish_time = 0.0;
};

struct SlotRecord {
  int episode = 0;
  int slot = 0;
  double slot_duration = 0.0;  // max realized processing time this slot
  std::vector<double> fading;
  std::vector<Vec2> positions;  // per terminal, at decision time
  std::vector<TaskRecord> tasks;
};

struct EpisodeTrace {
  int episode = 0;
  int n_terminals = 0;
  int n_servers = 0;
  int n_subchannels = 0;
  double omega = 0.5;
  std::vector<SlotRecord> slots;
  std::vector<double> app_delays;  // per terminal, valid once complete
  double cumulative_reward = 0.0;
  double total_energy = 0.0;
  bool complete = false;
};

struct ObjectiveTerms {
  double sum_slot_durations = 0.0;
  double total_energy = 0.0;
  double objective = 0.0;        // omega * sum D[t] + (1 - omega) * sum energy
  double mean_task_cost = 0.0;   // mean realized weighted cost per task
  double mean_task_delay = 0.0;
  double mean_task_energy = 0.0;
  long n_tasks = 0;
};

inline ObjectiveTerms objective_terms(const EpisodeTrace& trace) {
  if (!trace.complete) throw std::runtime_error("objective_terms: episode incomplete");
  ObjectiveTerms terms;
  for (const SlotRecord& slot : trace.slots) {
    terms.sum_slot_durations += slot.slot_duration;
    for (const TaskRecord& task : slot.tasks) {
      terms.total_energy += task.energy;
      terms.mean_task_cost += task.cost;
      terms.mean_task_delay += task.d_total;
      terms.mean_task_energy += task.energy;
      ++terms.n_tasks;
    }
  }
  terms.objective = trace.omega * terms.sum_slot_durations + (1.0 - trace.omega) * terms.total_energy;
  if (terms.n_tasks > 0) {
    terms.mean_task_cost /= terms.n_tasks;
    terms.mean_task_delay /= terms.n_tasks;
    terms.mean_task_energy /= terms.n_tasks;
  }
  return terms;
}

// Audits one episode against the problem constraints: single-server
// offloading, per-cell channel exclusivity / full use / minimum share,
// dependency ordering, reward bounds and energy bookkeeping. Returns
// human-readable violation messages (empty means clean).
inline std::vector<std::string> validate_trace(const EpisodeTrace& trace,
                                               std::span<const AppDag> dags) {
  std::vector<std::string> bad;
  auto note = [&bad](int slot, const std::string& what) {
    bad.push_back("slot " + std::to_string(slot) + ": " + what);
  };

  std::vector<std::vector<double>> finish(trace.n_terminals);
  for (int n = 0; n < trace.n_terminals; ++n)
    finish[n].assign(dags[n].n_tasks(), std::numeric_limits<double>::quiet_NaN());

  double energy_sum = 0.0;
  for (const SlotRecord& slot : trace.slots) {
    double max_delay = 0.0;
    std::vector<std::set<int>> used(trace.n_servers);
    std::vector<int> offloaders(trace.n_servers, 0);
    for (const TaskRecord& task : slot.tasks) {
      if (task.mode < 0 || task.mode > trace.n_servers || task.action < 0 ||
          task.action > trace.n_servers)
        note(slot.slot, "mode/action out of range");
      if (task.mode == 0) {
        if (task.channels != 0 || !task.channel_ids.empty())
          note(slot.slot, "local task holds subchannels");
        if (task.reward != 0.0 && task.action == 0)
          note(slot.slot, "local action with nonzero reward");
      } else {
        const int cell = task.mode - 1;
        ++offloaders[cell];
        if (task.channels < 1) note(slot.slot, "offloader without a subchannel");
        if (static_cast<int>(task.channel_ids.size()) != task.channels)
          note(slot.slot, "channel id list inconsistent with count");
        for (int k : task.channel_ids) {
          if (k < 0 || k >= trace.n_subchannels) note(slot.slot, "subchannel id out of range");
          if (!used[cell].insert(k).second)
            note(slot.slot, "subchannel " + std::to_string(k) + " assigned twice in cell");
        }
      }
      if (!(task.reward > -1.0 && task.reward < 1.0)) note(slot.slot, "reward outside (-1, 1)");

      const AppDag& dag = dags[task.terminal];
      for (int p : dag.preds[task.task]) {
        const double ft = finish[task.terminal][p];
        if (std::isnan(ft))
          note(slot.slot, "task scheduled before predecessor");
        else if (task.ready_time < ft)
          note(slot.slot, "ready time precedes predecessor finish time");
      }
      if (std::abs(task.finish_time - (task.ready_time + task.d_total)) >
          1e-9 * std::max(1.0, std::abs(task.finish_time)))
        note(slot.slot, "finish time != ready time + delay");
      finish[task.terminal][task.task] = task.finish_time;

      energy_sum += task.energy;
      max_delay = std::max(max_delay, task.d_total);
    }
    for (int cell = 0; cell < trace.n_servers; ++cell)
      if (offloaders[cell] > 0 && static_cast<int>(used[cell].size()) != trace.n_subchannels)
        note(slot.slot, "active cell does not use all subchannels");
    if (max_delay != slot.slot_duration) note(slot.slot, "slot duration != max task delay");
  }
  if (trace.complete && energy_sum != trace.total_energy)
    bad.push_back("episode energy total does not match per-task sum");
  return bad;
}

// CSV schema: one row per (episode, slot, terminal).
inline void write_trace_csv_header(std::ostream& os) {
  os << "episode,slot,terminal,task,action,channels_assigned,d_tr,d_co,d_total,"
        "energy,reward,cost,D_t\n";
}

inline void write_trace_csv_rows(std::ostream& os, const EpisodeTrace& trace) {
  os.precision(17);
  for (const SlotRecord& slot : trace.slots)
    for (const TaskRecord& task : slot.tasks)
      os << trace.episode << ',' << slot.slot << ',' << task.terminal << ',' << task.task << ','
         << task.action << ',' << task.channels << ',' << task.d_tr << ',' << task.d_co << ','
         << task.d_total << ',' << task.energy << ',' << task.reward << ',' << task.cost << ','
         << slot.slot_duration << '\n';
}

}  // namespace toica

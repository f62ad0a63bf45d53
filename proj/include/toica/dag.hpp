#pragma once

// Application model: a program split into tasks with precedence edges,
// each task a (input bits, CPU cycles) pair, the whole thing a DAG.

#include <algorithm>
#include <deque>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "toica/common.hpp"

namespace toica {

struct TaskSpec {
  int id = 0;
  double input_bits = 0.0;
  double cycles = 0.0;
};

struct AppDag {
  int terminal_id = 0;
  std::vector<TaskSpec> tasks;
  std::vector<std::pair<int, int>> edges;
  std::vector<std::vector<int>> preds;
  std::vector<std::vector<int>> succs;
  std::vector<int> entry_tasks;
  std::vector<int> exit_tasks;

  int n_tasks() const { return static_cast<int>(tasks.size()); }
  bool is_entry(int i) const { return preds[i].empty(); }
  bool is_exit(int i) const { return succs[i].empty(); }
};

// Kahn's algorithm; picks the smallest ready index first so the result is
// deterministic. Throws if the edge set contains a cycle.
inline std::vector<int> topological_order(const AppDag& dag) {
  const int n = dag.n_tasks();
  std::vector<int> indegree(n, 0);
  for (int i = 0; i < n; ++i) indegree[i] = static_cast<int>(dag.preds[i].size());
  std::vector<int> ready;
  for (int i = 0; i < n; ++i)
    if (indegree[i] == 0) ready.push_back(i);
  std::vector<int> order;
  order.reserve(n);
  while (!ready.empty()) {
    std::sort(ready.begin(), ready.end(), std::greater<int>());
    int u = ready.back();
    ready.pop_back();
    order.push_back(u);
    for (int v : dag.succs[u])
      if (--indegree[v] == 0) ready.push_back(v);
  }
  if (static_cast<int>(order.size()) != n)
    throw std::invalid_argument("topological_order: graph contains a cycle");
  return order;
}

inline bool is_topological_order(const AppDag& dag, const std::vector<int>& order) {
  if (static_cast<int>(order.size()) != dag.n_tasks()) return false;
  std::vector<int> pos(dag.n_tasks(), -1);
  for (int p = 0; p < static_cast<int>(order.size()); ++p) {
    int t = order[p];
    if (t < 0 || t >= dag.n_tasks() || pos[t] != -1) return false;
    pos[t] = p;
  }
  for (const auto& [u, v] : dag.edges)
    if (pos[u] >= pos[v]) return false;
  return true;
}

// Builds the derived structure (pre/succ sets, entry/exit sets) and checks
// acyclicity plus task/edge consistency.
inline AppDag make_app_dag(int terminal_id, std::vector<TaskSpec> tasks,
                           std::vector<std::pair<int, int>> edges) {
  AppDag dag;
  dag.terminal_id = terminal_id;
  dag.tasks = std::move(tasks);
  dag.edges = std::move(edges);
  const int n = dag.n_tasks();
  if (n < 1) throw std::invalid_argument("make_app_dag: need at least one task");
  for (int i = 0; i < n; ++i) {
    dag.tasks[i].id = i;
    if (!(dag.tasks[i].input_bits > 0.0) || !(dag.tasks[i].cycles > 0.0))
      throw std::invalid_argument("make_app_dag: task bits and cycles must be positive");
  }
  dag.preds.assign(n, {});
  dag.succs.assign(n, {});
  for (const auto& [u, v] : dag.edges) {
    if (u < 0 || u >= n || v < 0 || v >= n || u == v)
      throw std::invalid_argument("make_app_dag: edge endpoint out of range");
    dag.preds[v].push_back(u);
    dag.succs[u].push_back(v);
  }
  for (int i = 0; i < n; ++i) {
    std::sort(dag.preds[i].begin(), dag.preds[i].end());
    std::sort(dag.succs[i].begin(), dag.succs[i].end());
    if (std::adjacent_find(dag.preds[i].begin(), dag.preds[i].end()) != dag.preds[i].end())
      throw std::invalid_argument("make_app_dag: duplicate edge");
    if (dag.preds[i].empty()) dag.entry_tasks.push_back(i);
    if (dag.succs[i].empty()) dag.exit_tasks.push_back(i);
  }
  topological_order(dag);  // acyclicity check
  return dag;
}

struct TaskDrawRanges {
  double bits_min = 150.0 * 8000.0;  // 150 kB
  double bits_max = 400.0 * 8000.0;  // 400 kB
  double cycles_min = 30e6;
  double cycles_max = 80e6;
};

// Layered random DAG. Nodes are split over the layers, every node links to
// at least one node in the next layer and every node past the first layer
// has at least one predecessor in the previous one; extra forward edges are
// added with probability edge_prob. Node ids increase with layer index, so
// ascending id is always a valid topological order.
inline AppDag generate_random_dag(int n_tasks, int layer_count, double edge_prob,
                                  std::uint64_t seed, int terminal_id = 0,
                                  const TaskDrawRanges& ranges = {}) {
  if (n_tasks < 1) throw std::invalid_argument("generate_random_dag: n_tasks must be >= 1");
  if (layer_count < 1) throw std::invalid_argument("generate_random_dag: layer_count must be >= 1");
  if (edge_prob < 0.0 || edge_prob > 1.0)
    throw std::invalid_argument("generate_random_dag: edge_prob must lie in [0, 1]");

  Rng rng(mix_seed(seed, 0x4da6u));
  const int layers = std::min(layer_count, n_tasks);
  std::vector<int> layer_size(layers, 1);
  std::uniform_int_distribution<int> pick_layer(0, layers - 1);
  for (int extra = n_tasks - layers; extra > 0; --extra) layer_size[pick_layer(rng)]++;

  std::vector<int> layer_of(n_tasks);
  std::vector<int> first_in_layer(layers + 1, 0);
  {
    int node = 0;
    for (int l = 0; l < layers; ++l) {
      first_in_layer[l] = node;
      for (int c = 0; c < layer_size[l]; ++c) layer_of[node++] = l;
    }
    first_in_layer[layers] = node;
  }

  std::vector<std::pair<int, int>> edges;
  std::vector<char> has_pred(n_tasks, 0);
  for (int l = 0; l + 1 < layers; ++l) {
    std::uniform_int_distribution<int> pick_next(first_in_layer[l + 1], first_in_layer[l + 2] - 1);
    for (int u = first_in_layer[l]; u < first_in_layer[l + 1]; ++u) {
      int v = pick_next(rng);
      edges.emplace_back(u, v);
      has_pred[v] = 1;
    }
    std::uniform_int_distribution<int> pick_prev(first_in_layer[l], first_in_layer[l + 1] - 1);
    for (int v = first_in_layer[l + 1]; v < first_in_layer[l + 2]; ++v)
      if (!has_pred[v]) {
        edges.emplace_back(pick_prev(rng), v);
        has_pred[v] = 1;
      }
  }
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (int u = 0; u < n_tasks; ++u)
    for (int v = first_in_layer[layer_of[u] + 1]; v < n_tasks; ++v)
      if (coin(rng) < edge_prob) edges.emplace_back(u, v);

  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

  std::uniform_real_distribution<double> draw_bits(ranges.bits_min, ranges.bits_max);
  std::uniform_real_distribution<double> draw_cycles(ranges.cycles_min, ranges.cycles_max);
  std::vector<TaskSpec> tasks(n_tasks);
  for (int i = 0; i < n_tasks; ++i) tasks[i] = {i, draw_bits(rng), draw_cycles(rng)};

  return make_app_dag(terminal_id, std::move(tasks), std::move(edges));
}

// Uniformly random tie-breaking within the ready frontier; dependencies are
// still respected, only the ranking is discarded.
inline std::vector<int> random_topological_order(const AppDag& dag, Rng& rng) {
  const int n = dag.n_tasks();
  std::vector<int> indegree(n, 0);
  for (int i = 0; i < n; ++i) indegree[i] = static_cast<int>(dag.preds[i].size());
  std::vector<int> frontier;
  for (int i = 0; i < n; ++i)
    if (indegree[i] == 0) frontier.push_back(i);
  std::vector<int> order;
  order.reserve(n);
  while (!frontier.empty()) {
    std::uniform_int_distribution<std::size_t> pick(0, frontier.size() - 1);
    std::size_t at = pick(rng);
    int u = frontier[at];
    frontier[at] = frontier.back();
    frontier.pop_back();
    order.push_back(u);
    for (int v : dag.succs[u])
      if (--indegree[v] == 0) frontier.push_back(v);
  }
  if (static_cast<int>(order.size()) != n)
    throw std::invalid_argument("random_topological_order: graph contains a cycle");
  return order;
}

// --- fixture format ---------------------------------------------------------
//
//   toica-dag v1
//   terminal <id>
//   tasks <count>
//   task <id> <bits> <cycles>     (one line per task)
//   edges <count>
//   edge <from> <to>              (one line per edge)

inline void write_dag(std::ostream& os, const AppDag& dag) {
  os << "toica-dag v1\n";
  os << "terminal " << dag.terminal_id << "\n";
  os << "tasks " << dag.n_tasks() << "\n";
  os.precision(17);
  for (const auto& t : dag.tasks) os << "task " << t.id << " " << t.input_bits << " " << t.cycles << "\n";
  os << "edges " << dag.edges.size() << "\n";
  for (const auto& [u, v] : dag.edges) os << "edge " << u << " " << v << "\n";
}

inline AppDag parse_dag(std::istream& is) {
  auto fail = [](const std::string& what) -> std::runtime_error {
    return std::runtime_error("parse_dag: " + what);
  };
  std::string word, version;
  if (!(is >> word >> version) || word != "toica-dag" || version != "v1")
    throw fail("bad header, expected 'toica-dag v1'");
  int terminal_id = 0, n = 0;
  if (!(is >> word >> terminal_id) || word != "terminal") throw fail("missing terminal line");
  if (!(is >> word >> n) || word != "tasks" || n < 1) throw fail("missing tasks line");
  std::vector<TaskSpec> tasks(n);
  for (int i = 0; i < n; ++i) {
    int id;
    double bits, cycles;
    if (!(is >> word >> id >> bits >> cycles) || word != "task" || id != i)
      throw fail("bad task line " + std::to_string(i));
    tasks[i] = {id, bits, cycles};
  }
  int m = 0;
  if (!(is >> word >> m) || word != "edges" || m < 0) throw fail("missing edges line");
  std::vector<std::pair<int, int>> edges(m);
  for (int e = 0; e < m; ++e) {
    int u, v;
    if (!(is >> word >> u >> v) || word != "edge") throw fail("bad edge line " + std::to_string(e));
    edges[e] = {u, v};
  }
  return make_app_dag(terminal_id, std::move(tasks), std::move(edges));
}

}  // namespace toica

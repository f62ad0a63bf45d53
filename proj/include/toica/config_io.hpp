#pragma once

// Flat key = value configuration files with [section] headers, covering
// every simulation parameter and agent hyperparameter. Unknown keys are
// rejected so typos fail loudly.

#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "toica/env.hpp"

namespace toica {

inline std::string to_string(AdmissionRule rule) {
  return rule == AdmissionRule::Priority ? "priority" : "index";
}
inline std::string to_string(AllocationMode mode) {
  return mode == AllocationMode::Dca ? "dca" : "random";
}
inline std::string to_string(PriorityMode mode) {
  return mode == PriorityMode::AvgCost ? "avg_cost" : "random_topo";
}

inline void save_config(std::ostream& os, const SimConfig& cfg) {
  os.precision(17);
  os << "[sim]\n";
  os << "n_terminals = " << cfg.n_terminals << "\n";
  os << "n_servers = " << cfg.n_servers << "\n";
  os << "arena_radius_m = " << cfg.arena_radius_m << "\n";
  os << "tasks_per_app = " << cfg.tasks_per_app << "\n";
  os << "dag_layers = " << cfg.dag_layers << "\n";
  os << "dag_edge_prob = " << cfg.dag_edge_prob << "\n";
  os << "omega = " << cfg.omega << "\n";
  os << "episodes = " << cfg.episodes << "\n";
  os << "eval_episodes = " << cfg.eval_episodes << "\n";
  os << "env_seed = " << cfg.env_seed << "\n";
  os << "agent_seed = " << cfg.agent_seed << "\n";
  os << "eval_seed = " << cfg.eval_seed << "\n";
  os << "admission_rule = " << to_string(cfg.admission) << "\n";
  os << "allocation = " << to_string(cfg.allocation) << "\n";
  os << "priority_mode = " << to_string(cfg.priority_mode) << "\n";
  os << "shared_network = " << (cfg.shared_network ? "true" : "false") << "\n";
  os << "speed_min_mps = " << cfg.speed_min_mps << "\n";
  os << "speed_max_mps = " << cfg.speed_max_mps << "\n";
  os << "\n[task]\n";
  os << "input_kb_min = " << cfg.task.input_kb_min << "\n";
  os << "input_kb_max = " << cfg.task.input_kb_max << "\n";
  os << "mcycles_min = " << cfg.task.mcycles_min << "\n";
  os << "mcycles_max = " << cfg.task.mcycles_max << "\n";
  os << "\n[radio]\n";
  os << "total_bandwidth_hz = " << cfg.radio.total_bandwidth_hz << "\n";
  os << "n_subchannels = " << cfg.radio.n_subchannels << "\n";
  os << "noise_dbm = " << cfg.noise_dbm << "\n";
  os << "path_loss_index = " << cfg.radio.path_loss_index << "\n";
  os << "\n[terminal]\n";
  os << "cpu_hz_min = " << cfg.term_cpu_min_hz << "\n";
  os << "cpu_hz_max = " << cfg.term_cpu_max_hz << "\n";
  os << "tx_power_w_min = " << cfg.term_tx_min_w << "\n";
  os << "tx_power_w_max = " << cfg.term_tx_max_w << "\n";
  os << "static_power_w = " << cfg.term_static_w << "\n";
  os << "kappa = " << cfg.kappa << "\n";
  os << "\n[server]\n";
  os << "cpu_hz = " << cfg.server_cpu_hz << "\n";
  os << "degradation = " << cfg.server_degradation << "\n";
  os << "\n[agent]\n";
  os << "learning_rate = " << cfg.agent.learning_rate << "\n";
  os << "gamma = " << cfg.agent.gamma << "\n";
  os << "epsilon_decay = " << cfg.agent.epsilon_decay << "\n";
  os << "epsilon_min = " << cfg.agent.epsilon_min << "\n";
  os << "buffer_capacity = " << cfg.agent.buffer_capacity << "\n";
  os << "batch_size = " << cfg.agent.batch_size << "\n";
  os << "target_sync_every = " << cfg.agent.target_sync_every << "\n";
  os << "target_sync_unit = " << (cfg.agent.sync_on_episodes ? "episodes" : "steps") << "\n";
  os << "hidden_units = " << cfg.agent.hidden_units << "\n";
  os << "updates_per_slot = " << cfg.agent.updates_per_slot << "\n";
}

inline std::string config_text(const SimConfig& cfg) {
  std::ostringstream os;
  save_config(os, cfg);
  return os.str();
}

inline SimConfig load_config(std::istream& is) {
  SimConfig cfg;
  std::string line, section;
  int lineno = 0;
  auto fail = [&lineno](const std::string& what) -> std::runtime_error {
    return std::runtime_error("config line " + std::to_string(lineno) + ": " + what);
  };
  auto trim = [](std::string s) {
    const auto from = s.find_first_not_of(" \t\r");
    const auto to = s.find_last_not_of(" \t\r");
    return from == std::string::npos ? std::string() : s.substr(from, to - from + 1);
  };

  while (std::getline(is, line)) {
    ++lineno;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw fail("malformed section header");
      section = line.substr(1, line.size() - 2);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw fail("expected key = value");
    const std::string key = section + "." + trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    auto as_double = [&]() { return std::stod(value); };
    auto as_int = [&]() { return std::stoi(value); };
    auto as_u64 = [&]() { return static_cast<std::uint64_t>(std::stoull(value)); };
    auto as_bool = [&]() {
      if (value == "true" || value == "1") return true;
      if (value == "false" || value == "0") return false;
      throw fail("expected true/false");
    };

    if (key == "sim.n_terminals") cfg.n_terminals = as_int();
    else if (key == "sim.n_servers") cfg.n_servers = as_int();
    else if (key == "sim.arena_radius_m") cfg.arena_radius_m = as_double();
    else if (key == "sim.tasks_per_app") cfg.tasks_per_app = as_int();
    else if (key == "sim.dag_layers") cfg.dag_layers = as_int();
    else if (key == "sim.dag_edge_prob") cfg.dag_edge_prob = as_double();
    else if (key == "sim.omega") cfg.omega = as_double();
    else if (key == "sim.episodes") cfg.episodes = as_int();
    else if (key == "sim.eval_episodes") cfg.eval_episodes = as_int();
    else if (key == "sim.env_seed") cfg.env_seed = as_u64();
    else if (key == "sim.agent_seed") cfg.agent_seed = as_u64();
    else if (key == "sim.eval_seed") cfg.eval_seed = as_u64();
    else if (key == "sim.admission_rule") {
      if (value == "priority") cfg.admission = AdmissionRule::Priority;
      else if (value == "index") cfg.admission = AdmissionRule::Index;
      else throw fail("admission_rule must be priority|index");
    } else if (key == "sim.allocation") {
      if (value == "dca") cfg.allocation = AllocationMode::Dca;
      else if (value == "random") cfg.allocation = AllocationMode::Random;
      else throw fail("allocation must be dca|random");
    } else if (key == "sim.priority_mode") {
      if (value == "avg_cost") cfg.priority_mode = PriorityMode::AvgCost;
      else if (value == "random_topo") cfg.priority_mode = PriorityMode::RandomTopo;
      else throw fail("priority_mode must be avg_cost|random_topo");
    } else if (key == "sim.shared_network") cfg.shared_network = as_bool();
    else if (key == "sim.speed_min_mps") cfg.speed_min_mps = as_double();
    else if (key == "sim.speed_max_mps") cfg.speed_max_mps = as_double();
    else if (key == "task.input_kb_min") cfg.task.input_kb_min = as_double();
    else if (key == "task.input_kb_max") cfg.task.input_kb_max = as_double();
    else if (key == "task.mcycles_min") cfg.task.mcycles_min = as_double();
    else if (key == "task.mcycles_max") cfg.task.mcycles_max = as_double();
    else if (key == "radio.total_bandwidth_hz") cfg.radio.total_bandwidth_hz = as_double();
    else if (key == "radio.n_subchannels") cfg.radio.n_subchannels = as_int();
    else if (key == "radio.noise_dbm") cfg.noise_dbm = as_double();
    else if (key == "radio.path_loss_index") cfg.radio.path_loss_index = as_double();
    else if (key == "terminal.cpu_hz_min") cfg.term_cpu_min_hz = as_double();
    else if (key == "terminal.cpu_hz_max") cfg.term_cpu_max_hz = as_double();
    else if (key == "terminal.tx_power_w_min") cfg.term_tx_min_w = as_double();
    else if (key == "terminal.tx_power_w_max") cfg.term_tx_max_w = as_double();
    else if (key == "terminal.static_power_w") cfg.term_static_w = as_double();
    else if (key == "terminal.kappa") cfg.kappa = as_double();
    else if (key == "server.cpu_hz") cfg.server_cpu_hz = as_double();
    else if (key == "server.degradation") cfg.server_degradation = as_double();
    else if (key == "agent.learning_rate") cfg.agent.learning_rate = as_double();
    else if (key == "agent.gamma") cfg.agent.gamma = as_double();
    else if (key == "agent.epsilon_decay") cfg.agent.epsilon_decay = as_double();
    else if (key == "agent.epsilon_min") cfg.agent.epsilon_min = as_double();
    else if (key == "agent.buffer_capacity") cfg.agent.buffer_capacity = as_u64();
    else if (key == "agent.batch_size") cfg.agent.batch_size = as_int();
    else if (key == "agent.target_sync_every") cfg.agent.target_sync_every = as_int();
    else if (key == "agent.target_sync_unit") {
      if (value == "steps") cfg.agent.sync_on_episodes = false;
      else if (value == "episodes") cfg.agent.sync_on_episodes = true;
      else throw fail("target_sync_unit must be steps|episodes");
    } else if (key == "agent.hidden_units") cfg.agent.hidden_units = as_int();
    else if (key == "agent.updates_per_slot") cfg.agent.updates_per_slot = as_int();
    else throw fail("unknown key '" + key + "'");
  }
  cfg.finalize();
  return cfg;
}

}  // namespace toica

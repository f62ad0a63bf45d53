// Command-line harness: train and evaluate offloading policies, run
// parameter sweeps and the built-in self checks.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "toica/bench.hpp"
#include "toica/config_io.hpp"
#include "toica/report.hpp"

namespace fs = std::filesystem;
using namespace toica;

namespace {

SimConfig load_or_default(const std::string& config_path) {
  SimConfig cfg;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in.good()) throw std::runtime_error("cannot open config file '" + config_path + "'");
    cfg = load_config(in);
  } else {
    cfg.finalize();
  }
  return cfg;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  const auto dots = text.find("..");
  if (dots != std::string::npos) {
    const std::uint64_t from = std::stoull(text.substr(0, dots));
    const std::uint64_t to = std::stoull(text.substr(dots + 2));
    if (to < from) throw std::runtime_error("bad seed range '" + text + "'");
    for (std::uint64_t s = from; s <= to; ++s) seeds.push_back(s);
    return seeds;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) seeds.push_back(std::stoull(item));
  if (seeds.empty()) throw std::runtime_error("no seeds in '" + text + "'");
  return seeds;
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) values.push_back(std::stod(item));
  if (values.empty()) throw std::runtime_error("no values in '" + text + "'");
  return values;
}

std::vector<PolicyKind> parse_policies(const std::string& text) {
  std::vector<PolicyKind> kinds;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) kinds.push_back(parse_policy(item));
  if (kinds.empty()) throw std::runtime_error("no policies in '" + text + "'");
  return kinds;
}

std::string checkpoint_path(const std::string& base, bool shared, int terminal) {
  return shared ? base : base + "." + std::to_string(terminal);
}

void save_agents(const std::string& base, const TrainResult& result) {
  for (std::size_t i = 0; i < result.agents.size(); ++i) {
    std::ofstream out(checkpoint_path(base, result.shared, static_cast<int>(i)));
    result.agents[i].save(out);
  }
}

std::vector<D3qnAgent> load_agents(const std::string& base, const SimConfig& cfg) {
  std::vector<D3qnAgent> agents;
  const int count = cfg.shared_network ? 1 : cfg.n_terminals;
  for (int i = 0; i < count; ++i) {
    const std::string path = checkpoint_path(base, cfg.shared_network, i);
    std::ifstream in(path);
    if (!in.good()) throw std::runtime_error("cannot open checkpoint '" + path + "'");
    agents.push_back(D3qnAgent::load(in, mix_seed(cfg.agent_seed, 0xE7A1u, i)));
  }
  return agents;
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path);
  if (!out.good()) throw std::runtime_error("cannot write '" + path.string() + "'");
  body(out);
}

std::string join_args(int argc, char** argv) {
  std::string joined;
  for (int i = 0; i < argc; ++i) {
    if (i) joined += ' ';
    joined += argv[i];
  }
  return joined;
}

void print_summary(const std::string& label, const EvalSummary& s) {
  std::cout << label << ": mean_cost=" << s.mean_cost << " tanh_cost=" << s.tanh_cost
            << " objective14=" << s.objective14 << " mean_delay=" << s.mean_delay
            << " mean_energy=" << s.mean_energy << " mean_cum_reward=" << s.mean_cum_reward
            << " violations=" << s.violations << " ms_per_decision=" << s.ms_per_decision << "\n";
}

int cmd_train(const std::string& config_path, int episodes, std::uint64_t seed,
              const std::string& policy_name, const std::string& out_dir,
              const std::string& invocation) {
  SimConfig cfg = with_seed(load_or_default(config_path), seed);
  const PolicyKind kind = parse_policy(policy_name);
  if (!policy_trainable(kind))
    throw std::runtime_error("policy '" + policy_name + "' is not trainable");
  if (episodes <= 0) episodes = cfg.episodes;

  fs::create_directories(out_dir);
  std::cout << "training " << policy_name << " for " << episodes << " episodes (seed " << seed
            << ")\n";
  const TrainResult result = train_policy(cfg, kind, episodes, &std::cout);

  save_agents((fs::path(out_dir) / "checkpoint.txt").string(), result);
  write_file(fs::path(out_dir) / "rewards.csv",
             [&](std::ostream& os) { write_rewards_csv(os, seed, result.episode_rewards); });
  write_file(fs::path(out_dir) / "config.txt", [&](std::ostream& os) { save_config(os, cfg); });
  const std::vector<std::uint64_t> seeds{seed};
  write_file(fs::path(out_dir) / "manifest.txt",
             [&](std::ostream& os) { write_manifest(os, config_text(cfg), seeds, invocation); });

  ChartSeries curve;
  curve.label = policy_name;
  const int window = std::min<int>(25, episodes);
  for (int e = window; e <= static_cast<int>(result.episode_rewards.size()); e += window) {
    double mean = 0.0;
    for (int i = e - window; i < e; ++i) mean += result.episode_rewards[i];
    curve.x.push_back(e);
    curve.y.push_back(mean / window);
  }
  const std::vector<ChartSeries> series{curve};
  write_file(fs::path(out_dir) / "chart.svg", [&](std::ostream& os) {
    write_line_chart_svg(os, "Cumulative reward progression", "episode", "cumulative reward",
                         series);
  });

  double tail_mean = 0.0;
  const int tail = std::min<int>(100, episodes);
  for (int e = episodes - tail; e < episodes; ++e) tail_mean += result.episode_rewards[e];
  tail_mean /= tail;
  const double latency =
      measure_decision_latency_ms(result.agents[0].net(), cfg);
  std::cout << "done in " << result.seconds << " s; mean reward over last " << tail << " episodes "
            << tail_mean << "; decision latency " << latency << " ms/task\n";
  std::cout << "wrote " << out_dir << "/{checkpoint.txt,rewards.csv,chart.svg,config.txt,manifest.txt}\n";
  return 0;
}

int cmd_eval(const std::string& config_path, const std::string& checkpoint, int episodes,
             std::uint64_t seed, const std::string& policy_name, const std::string& out_dir,
             const std::string& invocation) {
  SimConfig cfg = with_seed(load_or_default(config_path), seed);
  const PolicyKind kind = parse_policy(policy_name);
  if (episodes <= 0) episodes = cfg.eval_episodes;

  std::vector<D3qnAgent> agents;
  if (policy_trainable(kind)) {
    if (checkpoint.empty())
      throw std::runtime_error("policy '" + policy_name + "' needs --checkpoint");
    agents = load_agents(checkpoint, cfg);
    if (agents[0].net().n_actions() != cfg.n_servers + 1)
      throw std::runtime_error("checkpoint action count does not match n_servers+1");
  }

  fs::create_directories(out_dir);
  std::ofstream trace_csv(fs::path(out_dir) / "trace.csv");
  const EvalSummary summary = evaluate_policy(cfg, kind, agents, episodes, &trace_csv);
  const std::vector<std::uint64_t> seeds{seed};
  write_file(fs::path(out_dir) / "manifest.txt",
             [&](std::ostream& os) { write_manifest(os, config_text(cfg), seeds, invocation); });
  print_summary("eval " + policy_name + " over " + std::to_string(episodes) + " episodes", summary);
  std::cout << "wrote " << out_dir << "/{trace.csv,manifest.txt}\n";
  if (summary.violations > 0) {
    std::cerr << "constraint validator reported " << summary.violations << " violations\n";
    return 3;
  }
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& preset_name,
              const std::string& param, const std::string& values_text,
              const std::string& policies_text, const std::string& seeds_text, int train_episodes,
              int eval_episodes, const std::string& out_dir, const std::string& invocation) {
  SimConfig cfg = load_or_default(config_path);
  fs::create_directories(out_dir);

  ExperimentSpec spec;
  if (!preset_name.empty()) {
    spec = preset_experiment(preset_name);
  } else {
    if (param.empty() || values_text.empty())
      throw std::runtime_error("sweep needs --preset or --param/--values");
    spec.name = param;
    spec.param = param;
    spec.values = parse_values(values_text);
    spec.policies = {PolicyKind::Toica, PolicyKind::OnDca};
    spec.seeds = {1, 2, 3};
  }
  if (!policies_text.empty()) spec.policies = parse_policies(policies_text);
  if (!seeds_text.empty()) spec.seeds = parse_seeds(seeds_text);
  if (train_episodes > 0) spec.train_episodes = train_episodes;
  if (eval_episodes > 0) spec.eval_episodes = eval_episodes;

  if (spec.param.empty()) {
    // Convergence preset: training curves instead of a parameter grid.
    std::vector<ChartSeries> series;
    std::ofstream rewards(fs::path(out_dir) / "rewards.csv");
    rewards << "episode,seed,policy,cumulative_reward\n";
    rewards.precision(17);
    for (const PolicyKind kind : spec.policies) {
      ChartSeries curve;
      curve.label = to_string(kind);
      std::vector<double> mean_curve;
      for (const std::uint64_t seed : spec.seeds) {
        const SimConfig run_cfg = with_seed(cfg, seed);
        std::cout << "training " << to_string(kind) << " seed " << seed << "\n";
        const TrainResult result = train_policy(run_cfg, kind, spec.train_episodes, &std::cout);
        for (std::size_t e = 0; e < result.episode_rewards.size(); ++e) {
          rewards << e << ',' << seed << ',' << to_string(kind) << ','
                  << result.episode_rewards[e] << '\n';
          if (mean_curve.size() <= e) mean_curve.push_back(0.0);
          mean_curve[e] += result.episode_rewards[e] / spec.seeds.size();
        }
      }
      const int window = std::min<int>(25, static_cast<int>(mean_curve.size()));
      for (int e = window; e <= static_cast<int>(mean_curve.size()); e += window) {
        double mean = 0.0;
        for (int i = e - window; i < e; ++i) mean += mean_curve[i];
        curve.x.push_back(e);
        curve.y.push_back(mean / window);
      }
      series.push_back(std::move(curve));
    }
    write_file(fs::path(out_dir) / "chart.svg", [&](std::ostream& os) {
      write_line_chart_svg(os, "Cumulative reward progression", "episode", "cumulative reward",
                           series);
    });
    write_file(fs::path(out_dir) / "manifest.txt", [&](std::ostream& os) {
      write_manifest(os, config_text(cfg), spec.seeds, invocation);
    });
    std::cout << "wrote " << out_dir << "/{rewards.csv,chart.svg,manifest.txt}\n";
    return 0;
  }

  const std::vector<SweepRow> rows =
      run_sweep(cfg, spec.policies, spec.param, spec.values, spec.seeds, spec.train_episodes,
                spec.eval_episodes, &std::cout);

  std::vector<SweepCsvRow> csv_rows;
  csv_rows.reserve(rows.size());
  for (const SweepRow& r : rows) csv_rows.push_back(to_csv_row(r));
  write_file(fs::path(out_dir) / "sweep.csv",
             [&](std::ostream& os) { write_sweep_csv(os, csv_rows); });

  std::vector<ChartSeries> series;
  for (const PolicyKind kind : spec.policies) {
    ChartSeries s;
    s.label = to_string(kind);
    for (const double value : spec.values) {
      const auto [mean, sd] =
          sweep_stat(rows, kind, value, [](const EvalSummary& e) { return e.tanh_cost; });
      s.x.push_back(value);
      s.y.push_back(mean);
      s.err.push_back(sd);
    }
    series.push_back(std::move(s));
  }
  write_file(fs::path(out_dir) / "chart.svg", [&](std::ostream& os) {
    write_line_chart_svg(os, "Cost vs " + spec.param, spec.param, "tanh-scaled mean cost", series);
  });
  write_file(fs::path(out_dir) / "manifest.txt", [&](std::ostream& os) {
    write_manifest(os, config_text(cfg), spec.seeds, invocation);
  });

  long violations = 0;
  for (const SweepRow& r : rows) violations += r.summary.violations;
  std::cout << "wrote " << out_dir << "/{sweep.csv,chart.svg,manifest.txt}; total constraint"
            << " violations " << violations << "\n";
  return violations > 0 ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint task offloading and channel allocation benchmark"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", policy = "toica", checkpoint;
  std::string preset, param, values_text, policies_text, seeds_text;
  int episodes = 0, eval_episodes = 0;
  std::uint64_t seed = 1;

  CLI::App* train = app.add_subcommand("train", "train an offloading policy");
  train->add_option("--config", config_path, "config file");
  train->add_option("--episodes", episodes, "training episodes (default from config)");
  train->add_option("--seed", seed, "base seed");
  train->add_option("--policy", policy, "toica|toica-ra|dto-random");
  train->add_option("--out", out_dir, "output directory");

  CLI::App* eval = app.add_subcommand("eval", "evaluate a policy greedily");
  eval->add_option("--config", config_path, "config file");
  eval->add_option("--checkpoint", checkpoint, "checkpoint from a train run");
  eval->add_option("--episodes", episodes, "evaluation episodes (default from config)");
  eval->add_option("--seed", seed, "base seed");
  eval->add_option("--policy", policy, "toica|toica-ra|on-dca|seg-dca|dto-random");
  eval->add_option("--out", out_dir, "output directory");

  CLI::App* sweep = app.add_subcommand("sweep", "parameter sweep over policies and seeds");
  sweep->add_option("--config", config_path, "config file");
  sweep->add_option("--preset", preset,
                    "convergence|bandwidth_sweep|fm_sweep|omega_sweep|scale_sweep");
  sweep->add_option("--param", param,
                    "bandwidth|n_subchannels|f_server|omega|n_terminals|n_servers|tasks_per_app");
  sweep->add_option("--values", values_text, "comma-separated sweep values");
  sweep->add_option("--policies", policies_text, "comma-separated policy names");
  sweep->add_option("--seeds", seeds_text, "comma list or range a..b");
  sweep->add_option("--episodes", episodes, "training episodes per grid point");
  sweep->add_option("--eval-episodes", eval_episodes, "evaluation episodes per grid point");
  sweep->add_option("--out", out_dir, "output directory");

  CLI::App* selftest = app.add_subcommand("selftest", "run the built-in oracle suites");

  CLI11_PARSE(app, argc, argv);
  const std::string invocation = join_args(argc, argv);

  try {
    if (train->parsed())
      return cmd_train(config_path, episodes, seed, policy, out_dir, invocation);
    if (eval->parsed())
      return cmd_eval(config_path, checkpoint, episodes, seed, policy, out_dir, invocation);
    if (sweep->parsed())
      return cmd_sweep(config_path, preset, param, values_text, policies_text, seeds_text,
                       episodes, eval_episodes, out_dir, invocation);
    if (selftest->parsed()) return run_selftest(std::cout) ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

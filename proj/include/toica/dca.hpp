#pragma once

// Per-cell subchannel allocation as a grouped knapsack: one item (channel
// count) per offloading terminal, weights summing exactly to K, solved by
// dynamic programming, then channel identities drawn at random.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "toica/radio.hpp"

namespace toica {

struct GkpInstance {
  int capacity = 0;                         // K subchannels
  std::vector<std::vector<double>> values;  // values[g][z-1], z in 1..K-N+1

  int n_groups() const { return static_cast<int>(values.size()); }
  int max_items() const { return capacity - n_groups() + 1; }

  void validate() const {
    const int n = n_groups();
    if (n < 1) throw std::invalid_argument("GkpInstance: need at least one group");
    if (n > capacity)
      throw std::invalid_argument("GkpInstance: more groups than subchannels is infeasible");
    for (const auto& group : values) {
      if (static_cast<int>(group.size()) != max_items())
        throw std::invalid_argument("GkpInstance: each group needs K-N+1 item values");
      for (double v : group)
        if (!std::isfinite(v)) throw std::invalid_argument("GkpInstance: values must be finite");
    }
  }
};

struct AllocationPlan {
  std::vector<int> counts;
  double total_value = 0.0;
  std::vector<std::vector<std::uint8_t>> matrix;  // filled by materialize()
};

// Exact DP over (groups, used channels). dp[n][j] is the cheapest way to
// give the first n groups exactly j channels; backtracking scans the item
// set in reverse and stops at the first reconstruction match.
inline AllocationPlan solve_gkp(const GkpInstance& instance) {
  instance.validate();
  const int n_groups = instance.n_groups();
  const int capacity = instance.capacity;
  const int max_z = instance.max_items();
  const double inf = std::numeric_limits<double>::infinity();

  std::vector<std::vector<double>> dp(n_groups + 1, std::vector<double>(capacity + 1, inf));
  dp[0][0] = 0.0;
  for (int n = 1; n <= n_groups; ++n)
    for (int j = capacity; j >= 0; --j)
      for (int z = 1; z <= max_z; ++z)
        if (j >= z && dp[n - 1][j - z] < inf)
          dp[n][j] = std::min(dp[n][j], dp[n - 1][j - z] + instance.values[n - 1][z - 1]);

  if (!(dp[n_groups][capacity] < inf))
    throw std::runtime_error("solve_gkp: no feasible allocation");

  AllocationPlan plan;
  plan.total_value = dp[n_groups][capacity];
  plan.counts.assign(n_groups, 0);
  int j = capacity;
  for (int n = n_groups; n >= 1; --n) {
    for (int z = max_z; z >= 1; --z) {
      if (j >= z && dp[n - 1][j - z] < inf &&
          dp[n][j] == dp[n - 1][j - z] + instance.values[n - 1][z - 1]) {
        plan.counts[n - 1] = z;
        j -= z;
        break;
      }
    }
  }
  return plan;
}

// Channel identities: a random permutation of 0..K-1 cut into consecutive
// blocks of the selected sizes.
inline void materialize(AllocationPlan& plan, int n_subchannels, Rng& rng) {
  const int total = std::accumulate(plan.counts.begin(), plan.counts.end(), 0);
  if (total != n_subchannels)
    throw std::invalid_argument("materialize: counts must sum to the subchannel count");
  for (int z : plan.counts)
    if (z < 1) throw std::invalid_argument("materialize: every terminal needs at least one channel");

  std::vector<int> channels(n_subchannels);
  std::iota(channels.begin(), channels.end(), 0);
  std::shuffle(channels.begin(), channels.end(), rng);

  plan.matrix.assign(plan.counts.size(), std::vector<std::uint8_t>(n_subchannels, 0));
  int at = 0;
  for (std::size_t row = 0; row < plan.counts.size(); ++row)
    for (int c = 0; c < plan.counts[row]; ++c) plan.matrix[row][channels[at++]] = 1;
}

// Uniformly random composition of `n_subchannels` into `n_groups` positive
// parts, for the random-allocation baseline.
inline std::vector<int> random_composition(int n_subchannels, int n_groups, Rng& rng) {
  if (n_groups < 1 || n_groups > n_subchannels)
    throw std::invalid_argument("random_composition: need 1 <= groups <= subchannels");
  std::vector<int> gaps(n_subchannels - 1);
  std::iota(gaps.begin(), gaps.end(), 1);
  std::vector<int> cuts;
  std::sample(gaps.begin(), gaps.end(), std::back_inserter(cuts), n_groups - 1, rng);
  cuts.push_back(n_subchannels);
  std::vector<int> parts(n_groups);
  int prev = 0;
  for (int g = 0; g < n_groups; ++g) {
    parts[g] = cuts[g] - prev;
    prev = cuts[g];
  }
  return parts;
}

struct OffloadDemand {
  double bits = 0.0;
  double tx_power_w = 0.0;
  double dist_m = 0.0;
};

// Interference-free rate estimate for a terminal holding z channels with
// its power split evenly across them.
inline double estimated_rate(double tx_power_w, double dist_m, int z, const RadioConfig& cfg) {
  const double gain = path_gain(1.0, dist_m, cfg.path_loss_index);
  return z * cfg.per_channel_bandwidth_hz() *
         std::log2(1.0 + (tx_power_w / z) * gain / cfg.noise_power_w);
}

// Item values: the omega-weighted upload delay plus transmit energy of
// pushing the terminal's pending bits through z channels. Estimation stays
// independent of the not-yet-known neighbour allocations.
inline GkpInstance estimate_values(std::span<const OffloadDemand> demands, const RadioConfig& cfg,
                                   double omega) {
  GkpInstance instance;
  instance.capacity = cfg.n_subchannels;
  const int n = static_cast<int>(demands.size());
  if (n < 1) throw std::invalid_argument("estimate_values: need at least one demand");
  if (n > cfg.n_subchannels)
    throw std::invalid_argument("estimate_values: more demands than subchannels");
  const int max_z = cfg.n_subchannels - n + 1;
  instance.values.assign(n, std::vector<double>(max_z, 0.0));
  for (int g = 0; g < n; ++g) {
    for (int z = 1; z <= max_z; ++z) {
      const double rate = estimated_rate(demands[g].tx_power_w, demands[g].dist_m, z, cfg);
      const double d_tr = demands[g].bits > 0.0 ? comm_time(demands[g].bits, rate) : 0.0;
      instance.values[g][z - 1] = omega * d_tr + (1.0 - omega) * demands[g].tx_power_w * d_tr;
    }
  }
  return instance;
}

}  // namespace toica

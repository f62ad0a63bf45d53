#pragma once

// Delay, energy and weighted-cost arithmetic for local and edge execution.

#include <cmath>
#include <stdexcept>

namespace toica {

inline double local_delay(double cycles, double cpu_hz) {
  if (!(cpu_hz > 0.0)) throw std::invalid_argument("local_delay: cpu frequency must be positive");
  return cycles / cpu_hz;
}

inline double local_energy(double cycles, double cpu_hz, double kappa) {
  if (!(kappa > 0.0)) throw std::invalid_argument("local_energy: kappa must be positive");
  return kappa * cycles * cpu_hz * cpu_hz;
}

// Parallel VMs slow each other down: the single-VM time c/f_m is stretched
// by (1+zeta)^(n_vms-1).
inline double edge_compute_time(double cycles, double server_hz, int n_vms, double zeta) {
  if (n_vms < 1) throw std::invalid_argument("edge_compute_time: occupancy must be >= 1");
  const double base = cycles / server_hz;
  return base * std::pow(1.0 + zeta, n_vms - 1);
}

inline double edge_total_time(double d_tr, double d_co) { return d_tr + d_co; }

inline double edge_energy(double tx_power_w, double d_tr, double static_power_w, double d_co) {
  return tx_power_w * d_tr + static_power_w * d_co;
}

inline double tradeoff_cost(double delay_s, double energy_j, double omega) {
  if (omega < 0.0 || omega > 1.0) throw std::invalid_argument("tradeoff_cost: omega must lie in [0, 1]");
  return omega * delay_s + (1.0 - omega) * energy_j;
}

// One realized task outcome; mode 0 is local, mode m >= 1 is edge server m.
struct CostBreakdown {
  int mode = 0;
  double d_tr = 0.0;
  double d_co = 0.0;
  double delay = 0.0;
  double energy = 0.0;
  double cost = 0.0;
};

inline CostBreakdown local_breakdown(double cycles, double cpu_hz, double kappa, double omega) {
  CostBreakdown b;
  b.mode = 0;
  b.delay = local_delay(cycles, cpu_hz);
  b.energy = local_energy(cycles, cpu_hz, kappa);
  b.cost = tradeoff_cost(b.delay, b.energy, omega);
  return b;
}

inline CostBreakdown edge_breakdown(int server_mode, double d_tr, double d_co, double tx_power_w,
                                    double static_power_w, double omega) {
  CostBreakdown b;
  b.mode = server_mode;
  b.d_tr = d_tr;
  b.d_co = d_co;
  b.delay = edge_total_time(d_tr, d_co);
  b.energy = edge_energy(tx_power_w, d_tr, static_power_w, d_co);
  b.cost = tradeoff_cost(b.delay, b.energy, omega);
  return b;
}

}  // namespace toica

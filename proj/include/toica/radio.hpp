#pragma once

// Uplink physical layer: random-direction mobility inside a disk arena,
// per-subchannel Rayleigh fading over distance-power path loss, Shannon
// rates with cross-cell co-channel interference.

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "toica/common.hpp"

namespace toica {

inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

struct RadioConfig {
  double total_bandwidth_hz = 50e6;
  int n_subchannels = 8;
  double noise_power_w = 1e-13;  // -100 dBm
  double path_loss_index = 4.0;

  double per_channel_bandwidth_hz() const { return total_bandwidth_hz / n_subchannels; }

  void validate() const {
    if (!(total_bandwidth_hz > 0.0)) throw std::invalid_argument("RadioConfig: bandwidth must be positive");
    if (n_subchannels < 1) throw std::invalid_argument("RadioConfig: need at least one subchannel");
    if (!(noise_power_w > 0.0)) throw std::invalid_argument("RadioConfig: noise power must be positive");
    if (!(path_loss_index > 0.0)) throw std::invalid_argument("RadioConfig: path loss index must be positive");
  }
};

struct TerminalState {
  Vec2 position;
  double cpu_freq_hz = 1.1e9;
  double tx_power_w = 1.25;
  double static_power_w = 0.3;
  double switched_capacitance = 1e-27;
};

struct ServerState {
  Vec2 position;
  double cpu_freq_hz = 5e9;
  double degradation = 0.2;
};

// Far-field guard: the path-loss model blows up as l -> 0.
inline double clamp_distance(double meters) { return std::max(meters, 1.0); }

inline double path_gain(double fading, double dist_m, double alpha) {
  return fading * std::pow(clamp_distance(dist_m), -alpha);
}

// Per-slot small-scale state: one unit-mean exponential draw per subchannel.
struct ChannelRealization {
  int slot = 0;
  std::vector<double> fading;

  static ChannelRealization draw(int slot, int n_subchannels, Rng& rng) {
    ChannelRealization real;
    real.slot = slot;
    real.fading.resize(n_subchannels);
    std::exponential_distribution<double> expo(1.0);
    for (double& beta : real.fading) beta = std::max(expo(rng), 1e-12);
    return real;
  }
};

// Random-direction model: fresh heading each call, speed uniform in
// [v_min, v_max], radial reflection at the arena boundary.
inline TerminalState step_mobility(TerminalState state, double dt, double arena_radius,
                                   double v_min, double v_max, Rng& rng) {
  if (!(dt > 0.0)) throw std::invalid_argument("step_mobility: dt must be positive");
  if (v_min < 0.0 || v_max < v_min) throw std::invalid_argument("step_mobility: bad speed range");
  std::uniform_real_distribution<double> heading(0.0, 2.0 * M_PI);
  std::uniform_real_distribution<double> speed(v_min, v_max);
  const double phi = heading(rng);
  const double v = speed(rng);
  state.position.x += v * dt * std::cos(phi);
  state.position.y += v * dt * std::sin(phi);
  const double r = state.position.norm();
  if (r > arena_radius) {
    const double reflected = std::max(2.0 * arena_radius - r, 0.0);
    const double scale = (r > 0.0) ? reflected / r : 0.0;
    state.position = state.position * scale;
  }
  return state;
}

struct CellAssignment {
  int server = 0;
  std::vector<int> terminals;                       // terminal ids offloading to this cell
  std::vector<int> counts;                          // channels per listed terminal
  std::vector<std::vector<std::uint8_t>> matrix;    // rows follow `terminals`
};

// Co-channel interference seen at `victim_server` on `channel`: every
// terminal in a different cell transmitting on the same subchannel
// contributes its per-channel power over the path to the victim's server.
inline double interference_at(int victim_server, int channel,
                              std::span<const CellAssignment> cells,
                              std::span<const Vec2> terminal_positions,
                              std::span<const double> terminal_tx_power,
                              std::span<const Vec2> server_positions,
                              const ChannelRealization& real, const RadioConfig& cfg) {
  double total = 0.0;
  for (const CellAssignment& cell : cells) {
    if (cell.server == victim_server) continue;
    for (std::size_t row = 0; row < cell.terminals.size(); ++row) {
      if (!cell.matrix[row][channel]) continue;
      const int tn = cell.terminals[row];
      const double p_per_channel = terminal_tx_power[tn] / cell.counts[row];
      const double dist = distance(terminal_positions[tn], server_positions[victim_server]);
      total += p_per_channel * path_gain(real.fading[channel], dist, cfg.path_loss_index);
    }
  }
  return total;
}

// Uplink rate over the assigned subchannels; the terminal's total transmit
// power is split evenly among the channels it actually holds.
inline double uplink_rate(std::span<const std::uint8_t> assignment_row, double tx_power_w,
                          double dist_m, const ChannelRealization& real,
                          std::span<const double> interference_w, const RadioConfig& cfg) {
  int assigned = 0;
  for (std::uint8_t x : assignment_row) assigned += (x != 0);
  if (assigned == 0) throw std::invalid_argument("uplink_rate: no subchannel assigned");
  const double p_per_channel = tx_power_w / assigned;
  const double bw = cfg.per_channel_bandwidth_hz();
  double rate = 0.0;
  for (std::size_t k = 0; k < assignment_row.size(); ++k) {
    if (!assignment_row[k]) continue;
    const double h = path_gain(real.fading[k], dist_m, cfg.path_loss_index);
    const double sinr = p_per_channel * h / (interference_w[k] + cfg.noise_power_w);
    rate += bw * std::log2(1.0 + sinr);
  }
  return rate;
}

inline double comm_time(double bits, double rate_bps) {
  if (!(rate_bps > 0.0)) throw std::invalid_argument("comm_time: rate must be positive");
  return bits / rate_bps;
}

}  // namespace toica

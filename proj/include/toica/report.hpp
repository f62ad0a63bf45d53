#pragma once

// Run artifacts: CSV emission and re-parsing, hand-rolled SVG line charts
// and the reproducibility manifest.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace toica {

inline constexpr const char* kVersionString = "toica-v0.1.0";

inline std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t hash = 1469598103934665603ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  return hash;
}

// --- rewards.csv -------------------------------------------------------------

inline void write_rewards_csv(std::ostream& os, std::uint64_t seed,
                              std::span<const double> rewards) {
  os << "episode,seed,cumulative_reward\n";
  os.precision(17);
  for (std::size_t e = 0; e < rewards.size(); ++e)
    os << e << ',' << seed << ',' << rewards[e] << '\n';
}

struct RewardRow {
  long episode = 0;
  std::uint64_t seed = 0;
  double cumulative_reward = 0.0;
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

inline std::vector<RewardRow> parse_rewards_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "episode,seed,cumulative_reward")
    throw std::runtime_error("parse_rewards_csv: bad header");
  std::vector<RewardRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 3) throw std::runtime_error("parse_rewards_csv: bad row");
    rows.push_back({std::stol(fields[0]), std::stoull(fields[1]), std::stod(fields[2])});
  }
  return rows;
}

// --- sweep.csv ---------------------------------------------------------------

struct SweepCsvRow {
  std::string policy;
  std::string param;
  double value = 0.0;
  std::uint64_t seed = 0;
  double mean_cost = 0.0;
  double tanh_cost = 0.0;
  double objective14 = 0.0;
  double mean_delay = 0.0;
  double mean_energy = 0.0;
};

inline constexpr const char* kSweepCsvHeader =
    "policy,param,value,seed,mean_cost,tanh_cost,objective14,mean_delay,mean_energy";

inline void write_sweep_csv(std::ostream& os, std::span<const SweepCsvRow> rows) {
  os << kSweepCsvHeader << '\n';
  os.precision(17);
  for (const SweepCsvRow& r : rows)
    os << r.policy << ',' << r.param << ',' << r.value << ',' << r.seed << ',' << r.mean_cost
       << ',' << r.tanh_cost << ',' << r.objective14 << ',' << r.mean_delay << ','
       << r.mean_energy << '\n';
}

inline std::vector<SweepCsvRow> parse_sweep_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kSweepCsvHeader)
    throw std::runtime_error("parse_sweep_csv: bad header");
  std::vector<SweepCsvRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 9) throw std::runtime_error("parse_sweep_csv: bad row");
    rows.push_back({f[0], f[1], std::stod(f[2]), std::stoull(f[3]), std::stod(f[4]),
                    std::stod(f[5]), std::stod(f[6]), std::stod(f[7]), std::stod(f[8])});
  }
  return rows;
}

// --- SVG line chart ----------------------------------------------------------

struct ChartSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> err;  // optional, +/- whiskers
};

namespace detail {

inline std::string svg_color(std::size_t index) {
  static constexpr std::array<const char*, 6> palette = {
      "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  return palette[index % palette.size()];
}

inline std::string fmt_tick(double v) {
  std::ostringstream os;
  os << std::setprecision(4) << v;
  return os.str();
}

}  // namespace detail

// Minimal polyline chart with axes, ticks, error whiskers and a legend.
// The CSV stays the authoritative output; this is a quick look.
inline void write_line_chart_svg(std::ostream& os, const std::string& title,
                                 const std::string& xlabel, const std::string& ylabel,
                                 std::span<const ChartSeries> series) {
  if (series.empty()) throw std::invalid_argument("write_line_chart_svg: no series");
  const double width = 860, height = 520;
  const double left = 80, right = 30, top = 50, bottom = 60;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const ChartSeries& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double e = i < s.err.size() ? s.err[i] : 0.0;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i] - e);
      ymax = std::max(ymax, s.y[i] + e);
    }
  if (!(xmin <= xmax) || !(ymin <= ymax))
    throw std::invalid_argument("write_line_chart_svg: empty series");
  if (xmax == xmin) xmax = xmin + 1.0;
  if (ymax == ymin) ymax = ymin + 1.0;
  const double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * (width - left - right); };
  auto py = [&](double y) { return height - bottom - (y - ymin) / (ymax - ymin) * (height - top - bottom); };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\""
     << " font-size=\"16\">" << title << "</text>\n";

  // Grid and ticks.
  for (int t = 0; t <= 5; ++t) {
    const double xv = xmin + (xmax - xmin) * t / 5.0;
    const double yv = ymin + (ymax - ymin) * t / 5.0;
    os << "<line x1=\"" << px(xv) << "\" y1=\"" << py(ymin) << "\" x2=\"" << px(xv) << "\" y2=\""
       << py(ymax) << "\" stroke=\"#dddddd\"/>\n";
    os << "<line x1=\"" << px(xmin) << "\" y1=\"" << py(yv) << "\" x2=\"" << px(xmax) << "\" y2=\""
       << py(yv) << "\" stroke=\"#dddddd\"/>\n";
    os << "<text x=\"" << px(xv) << "\" y=\"" << height - bottom + 20
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
       << detail::fmt_tick(xv) << "</text>\n";
    os << "<text x=\"" << left - 8 << "\" y=\"" << py(yv) + 4
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
       << detail::fmt_tick(yv) << "</text>\n";
  }
  os << "<line x1=\"" << left << "\" y1=\"" << py(ymin) << "\" x2=\"" << width - right
     << "\" y2=\"" << py(ymin) << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << py(ymin) << "\" x2=\"" << left << "\" y2=\"" << top
     << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"" << height - 16
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << xlabel
     << "</text>\n";
  os << "<text x=\"20\" y=\"" << height / 2
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 20 "
     << height / 2 << ")\">" << ylabel << "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const ChartSeries& s = series[si];
    const std::string color = detail::svg_color(si);
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) os << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
    os << "\"/>\n";
    for (std::size_t i = 0; i < s.x.size() && i < s.err.size(); ++i) {
      if (s.err[i] <= 0.0) continue;
      os << "<line x1=\"" << px(s.x[i]) << "\" y1=\"" << py(s.y[i] - s.err[i]) << "\" x2=\""
         << px(s.x[i]) << "\" y2=\"" << py(s.y[i] + s.err[i]) << "\" stroke=\"" << color
         << "\" stroke-width=\"1\"/>\n";
    }
    const double ly = top + 16.0 * si;
    os << "<line x1=\"" << width - right - 150 << "\" y1=\"" << ly << "\" x2=\""
       << width - right - 120 << "\" y2=\"" << ly << "\" stroke=\"" << color
       << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << width - right - 114 << "\" y=\"" << ly + 4
       << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.label << "</text>\n";
  }
  os << "</svg>\n";
}

// --- manifest ----------------------------------------------------------------

inline void write_manifest(std::ostream& os, const std::string& config_text,
                           std::span<const std::uint64_t> seeds, const std::string& invocation) {
  os << "version " << kVersionString << "\n";
  os << "config_hash " << std::hex << fnv1a64(config_text) << std::dec << "\n";
  os << "seeds";
  for (std::uint64_t s : seeds) os << ' ' << s;
  os << "\n";
  os << "invocation " << invocation << "\n";
}

}  // namespace toica

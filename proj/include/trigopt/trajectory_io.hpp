#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "trigopt/solver.hpp"

namespace trigopt {

/// Shortest decimal rendering that round-trips the exact double.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw std::invalid_argument("not a number: '" + std::string(s) + "'");
  }
  return v;
}

/// Writes via a temporary file and rename so readers never observe a partial
/// file.
inline void write_text_atomic(const std::filesystem::path& path,
                              const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open for writing: " + tmp.string());
    out << content;
    if (!out.flush()) throw Error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string_view phase_name(Phase p) {
  return p == Phase::descent ? "descent" : "hold";
}

/// One header row then one row per sample, comma separated, full double
/// precision:  k,t,x_0..x_{n-1},xdot_0..xdot_{n-1},V,phase,tau
inline std::string trajectory_csv(const Trajectory& traj) {
  std::ostringstream out;
  out << "k,t";
  for (int i = 0; i < traj.dimension; ++i) out << ",x_" << i;
  for (int i = 0; i < traj.dimension; ++i) out << ",xdot_" << i;
  out << ",V,phase,tau\n";
  for (const auto& r : traj.records) {
    out << r.index << ',' << format_double(r.t);
    for (int i = 0; i < traj.dimension; ++i) {
      out << ',' << format_double(r.x[i]);
    }
    for (int i = 0; i < traj.dimension; ++i) {
      out << ',' << format_double(r.xdot[i]);
    }
    out << ',' << format_double(r.v) << ',' << phase_name(r.phase) << ','
        << format_double(r.tau) << '\n';
  }
  return out.str();
}

inline void write_trajectory_csv(const std::filesystem::path& path,
                                 const Trajectory& traj) {
  write_text_atomic(path, trajectory_csv(traj));
}

namespace detail {
inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}
}  // namespace detail

/// Reads back a trajectory file; returns the records and sets `dimension`
/// from the header.  Values parse to the exact doubles that were written.
inline std::vector<SampleRecord> read_trajectory_csv(
    const std::filesystem::path& path, int& dimension) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error("empty trajectory file");

  const auto header = detail::split(line, ',');
  int n = 0;
  for (const auto& col : header) {
    if (col.substr(0, 2) == "x_") ++n;
  }
  if (n < 1 || header.size() != 2 * static_cast<std::size_t>(n) + 5) {
    throw Error("malformed trajectory header");
  }
  dimension = n;

  std::vector<SampleRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cols = detail::split(line, ',');
    if (cols.size() != header.size()) throw Error("malformed trajectory row");
    SampleRecord r;
    r.index = static_cast<std::size_t>(parse_double(cols[0]));
    r.t = parse_double(cols[1]);
    r.x.resize(n);
    r.xdot.resize(n);
    for (int i = 0; i < n; ++i) r.x[i] = parse_double(cols[2 + i]);
    for (int i = 0; i < n; ++i) r.xdot[i] = parse_double(cols[2 + n + i]);
    r.v = parse_double(cols[2 + 2 * n]);
    const auto phase = cols[3 + 2 * n];
    if (phase == "descent") {
      r.phase = Phase::descent;
    } else if (phase == "hold") {
      r.phase = Phase::hold;
    } else {
      throw Error("unknown phase: '" + std::string(phase) + "'");
    }
    r.tau = parse_double(cols[4 + 2 * n]);
    records.push_back(std::move(r));
  }
  if (records.empty()) throw Error("trajectory file has no samples");
  return records;
}

/// Step statistics over records read back from a file; mirrors
/// trigger_step_stats given whether the final step was horizon-clamped.
inline StepStats recompute_step_stats(const std::vector<SampleRecord>& records,
                                      bool final_step_clamped) {
  const std::size_t n = records.size() - (final_step_clamped ? 1 : 0);
  if (n == 0) return {};
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += records[i].tau;
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = records[i].tau - mean;
    ss += d * d;
  }
  return {n, mean, std::sqrt(ss / static_cast<double>(n))};
}

}  // namespace trigopt

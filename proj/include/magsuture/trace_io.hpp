#pragma once

/// @file trace_io.hpp
/// @brief CSV trace and truth-sidecar formats. Numbers use the shortest text that
/// round-trips to the same double, so files reproduce bit-exactly.

#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "magsuture/dynamics.hpp"
#include "magsuture/metrics.hpp"
#include "magsuture/pgm.hpp"

namespace magsuture {

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

inline double parse_double(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s == "nan" || s == "NaN") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw IoError("cannot parse number '" + std::string(s) + "'");
  return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

inline constexpr std::string_view kTraceHeader =
    "t_s,gt_x_mm,gt_y_mm,gt_theta_rad,est_x_mm,est_y_mm,est_theta_rad,detect_tag,flip_corrected,"
    "v_cmd,w_cmd,I1,I2,I3,I4,tip_err_mm";

inline constexpr std::string_view kTagDetected = "detected";
inline constexpr std::string_view kTagNoDetection = "no_detection";

inline void write_trace_csv(std::ostream& out, const SimTrace& trace) {
  out << kTraceHeader << '\n';
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const TraceRow& r : trace.rows) {
    const bool det = r.estimate.has_value();
    out << format_double(r.t_s) << ',' << format_double(r.truth.center_mm.x()) << ','
        << format_double(r.truth.center_mm.y()) << ',' << format_double(r.truth.theta_rad) << ','
        << format_double(det ? r.estimate->center_mm.x() : nan) << ','
        << format_double(det ? r.estimate->center_mm.y() : nan) << ','
        << format_double(det ? r.estimate->theta_rad : nan) << ',' << (det ? kTagDetected : kTagNoDetection) << ','
        << (r.flip_corrected ? 1 : 0) << ',' << format_double(r.command.v) << ',' << format_double(r.command.omega);
    for (int k = 0; k < 4; ++k) out << ',' << format_double(r.currents[k]);
    out << ',' << format_double(r.tip_err_mm) << '\n';
  }
  if (!out) throw IoError("trace: write failed");
}

/// Reads a trace back as metric records.
inline std::vector<FrameRecord> read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("trace: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceHeader) throw IoError("trace: unexpected header");
  std::vector<FrameRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != 16) throw IoError("trace: line " + std::to_string(lineno) + " has " + std::to_string(f.size()) + " fields");
    FrameRecord r;
    r.truth = NeedleState(Vec2(parse_double(f[1]), parse_double(f[2])), parse_double(f[3]));
    if (f[7] == kTagDetected) {
      r.estimate = NeedleState(Vec2(parse_double(f[4]), parse_double(f[5])), parse_double(f[6]));
    } else if (f[7] != kTagNoDetection) {
      throw IoError("trace: line " + std::to_string(lineno) + " has unknown detect_tag '" + f[7] + "'");
    }
    r.flip_corrected = f[8] == "1";
    r.tip_err_mm = parse_double(f[15]);
    out.push_back(r);
  }
  return out;
}

inline std::vector<FrameRecord> trace_records(const SimTrace& trace) {
  std::vector<FrameRecord> out;
  out.reserve(trace.rows.size());
  for (const auto& r : trace.rows) out.push_back({r.truth, r.estimate, r.flip_corrected, r.tip_err_mm});
  return out;
}

// ---------------------------------------------------------------------------
// Scene corpus sidecar

struct TruthRow {
  std::size_t frame = 0;
  NeedleState pose;
  ClassificationBits bits;  // as emitted, after error injection
  bool true_tip_visible = true;
  bool true_tail_visible = true;
  double occluded_fraction = 0.0;
};

inline constexpr std::string_view kTruthHeader =
    "frame,gt_x_mm,gt_y_mm,gt_theta_rad,angle_up,angle_left,tip_visible,tail_visible,true_tip_visible,"
    "true_tail_visible,occluded_fraction";

inline void write_truth_header(std::ostream& out) { out << kTruthHeader << '\n'; }

inline void write_truth_row(std::ostream& out, const TruthRow& r) {
  out << r.frame << ',' << format_double(r.pose.center_mm.x()) << ',' << format_double(r.pose.center_mm.y()) << ','
      << format_double(r.pose.theta_rad) << ',' << int(r.bits.angle_up) << ',' << int(r.bits.angle_left) << ','
      << int(r.bits.tip_visible) << ',' << int(r.bits.tail_visible) << ',' << int(r.true_tip_visible) << ','
      << int(r.true_tail_visible) << ',' << format_double(r.occluded_fraction) << '\n';
}

inline std::vector<TruthRow> read_truth_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("truth: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTruthHeader) throw IoError("truth: unexpected header");
  std::vector<TruthRow> out;
  std::size_t lineno = 1;
  const auto flag = [&](const std::string& s) {
    if (s == "1") return true;
    if (s == "0") return false;
    throw IoError("truth: line " + std::to_string(lineno) + " has a non-boolean flag '" + s + "'");
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != 11) throw IoError("truth: line " + std::to_string(lineno) + " has " + std::to_string(f.size()) + " fields");
    TruthRow r;
    r.frame = static_cast<std::size_t>(parse_double(f[0]));
    r.pose = NeedleState(Vec2(parse_double(f[1]), parse_double(f[2])), parse_double(f[3]));
    r.bits = {flag(f[4]), flag(f[5]), flag(f[6]), flag(f[7])};
    r.true_tip_visible = flag(f[8]);
    r.true_tail_visible = flag(f[9]);
    r.occluded_fraction = parse_double(f[10]);
    out.push_back(r);
  }
  return out;
}

}  // namespace magsuture

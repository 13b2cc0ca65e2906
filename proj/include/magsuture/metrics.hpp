#pragma once

/// @file metrics.hpp
/// @brief Localization and tracking metrics computed from per-frame records.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>

#include "magsuture/core.hpp"

namespace magsuture {

struct AlongAcross {
  double along = 0.0;
  double across = 0.0;
};

/// Error e = est - gt resolved on the true needle axis h and on S h.
inline AlongAcross decompose_error(const Vec2& est_center, const Vec2& gt_center, double gt_theta) {
  const Vec2 e = est_center - gt_center;
  const Vec2 h = heading(gt_theta);
  return {e.dot(h), e.dot(rotate90(h))};
}

enum class DetectionClass { Correct, Incorrect, NoDetection };

inline const char* to_string(DetectionClass c) {
  switch (c) {
    case DetectionClass::Correct: return "correct";
    case DetectionClass::Incorrect: return "incorrect";
    case DetectionClass::NoDetection: return "no_detection";
  }
  return "?";
}

/// Default Incorrect Detection tolerance: 1.1 x half a needle length.
inline double default_incorrect_tolerance(const NeedleSpec& spec) { return 1.1 * spec.half_length(); }

inline DetectionClass classify_detection(const std::optional<NeedleState>& estimate, const Vec2& gt_center,
                                         double tolerance_mm) {
  if (!estimate) return DetectionClass::NoDetection;
  return (estimate->center_mm - gt_center).norm() > tolerance_mm ? DetectionClass::Incorrect : DetectionClass::Correct;
}

/// One evaluated frame. tip_err_mm is only meaningful for closed-loop traces.
struct FrameRecord {
  NeedleState truth;
  std::optional<NeedleState> estimate;
  bool flip_corrected = false;
  double tip_err_mm = 0.0;
};

struct MetricsReport {
  double rms_along_mm = 0.0;
  double rms_across_mm = 0.0;
  /// Over correct detections, after removing 180 degree flips.
  double rms_orientation_deg = 0.0;
  double flip_rate = 0.0;
  double no_detection_rate = 0.0;
  double incorrect_detection_rate = 0.0;
  double tip_tracking_rms_mm = 0.0;
  std::size_t frame_count = 0;
  std::size_t detected_count = 0;
  std::size_t correct_count = 0;
  std::size_t flip_count = 0;
  double tolerance_mm = 0.0;
};

/// Signed orientation error with flips folded out; `flipped` reports whether a flip was removed.
inline double flip_corrected_orientation_error(double est_theta, double gt_theta, bool& flipped) {
  double err = normalize_angle(est_theta - gt_theta);
  flipped = std::abs(err) > kPi / 2.0;
  if (flipped) err = normalize_angle(err + kPi);
  return err;
}

/// Position and orientation statistics use only Correct frames; rates use all frames.
inline MetricsReport compute_metrics(std::span<const FrameRecord> frames, double tolerance_mm, bool with_tip = true) {
  MetricsReport m;
  m.frame_count = frames.size();
  m.tolerance_mm = tolerance_mm;
  if (frames.empty()) return m;
  std::size_t nodet = 0, incorrect = 0;
  double s_along = 0.0, s_across = 0.0, s_orient = 0.0, s_tip = 0.0;
  for (const FrameRecord& f : frames) {
    s_tip += f.tip_err_mm * f.tip_err_mm;
    switch (classify_detection(f.estimate, f.truth.center_mm, tolerance_mm)) {
      case DetectionClass::NoDetection: ++nodet; continue;
      case DetectionClass::Incorrect: ++incorrect; ++m.detected_count; continue;
      case DetectionClass::Correct: break;
    }
    ++m.detected_count;
    ++m.correct_count;
    const AlongAcross e = decompose_error(f.estimate->center_mm, f.truth.center_mm, f.truth.theta_rad);
    s_along += e.along * e.along;
    s_across += e.across * e.across;
    bool flipped = false;
    const double oe = flip_corrected_orientation_error(f.estimate->theta_rad, f.truth.theta_rad, flipped);
    m.flip_count += flipped ? 1u : 0u;
    s_orient += oe * oe;
  }
  const double n = static_cast<double>(frames.size());
  m.no_detection_rate = static_cast<double>(nodet) / n;
  m.incorrect_detection_rate = static_cast<double>(incorrect) / n;
  if (m.correct_count > 0) {
    const double c = static_cast<double>(m.correct_count);
    m.rms_along_mm = std::sqrt(s_along / c);
    m.rms_across_mm = std::sqrt(s_across / c);
    m.rms_orientation_deg = std::sqrt(s_orient / c) * 180.0 / kPi;
    m.flip_rate = static_cast<double>(m.flip_count) / c;
  }
  m.tip_tracking_rms_mm = with_tip ? std::sqrt(s_tip / n) : 0.0;
  return m;
}

}  // namespace magsuture

#pragma once

/// @file localization.hpp
/// @brief Needle pose from a segmentation mask and four classification bits.
///
/// Pipeline: debias -> DBSCAN -> RANSAC line -> cluster assembly -> endpoints ->
/// orientation / occlusion correction. Every failure exit is a NoDetection value.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "magsuture/core.hpp"
#include "magsuture/dbscan.hpp"
#include "magsuture/random.hpp"
#include "magsuture/ransac.hpp"
#include "magsuture/raster.hpp"

namespace magsuture {

// ---------------------------------------------------------------------------
// Parameters and records

struct PipelineParams {
  /// Needle width as it appears in the masks, in working pixels.
  double needle_width_px = 4.0;
  /// Minimum cluster and inlier count; 0 selects round(needle_width_px)^2.
  int n_min = 0;
  double bias_threshold = 0.1;
  double bias_alpha = 0.1;
  /// 0 selects needle_width_px + 1.
  double dbscan_eps_px = 0.0;
  int dbscan_min_pts = 4;
  int ransac_iters = 200;
  /// 0 selects needle_width_px / 2 + 0.5.
  double ransac_inlier_px = 0.0;
  double merge_factor = 1.1;
  /// Use the previous detection to undo 180 degree flips.
  bool flip_correction = true;
  std::uint64_t seed = 0;

  std::size_t min_points() const {
    if (n_min > 0) return static_cast<std::size_t>(n_min);
    const double w = std::round(needle_width_px);
    return static_cast<std::size_t>(w * w);
  }
  double eps() const { return dbscan_eps_px > 0.0 ? dbscan_eps_px : needle_width_px + 1.0; }
  double inlier_distance() const { return ransac_inlier_px > 0.0 ? ransac_inlier_px : needle_width_px / 2.0 + 0.5; }

  void validate() const {
    if (!(needle_width_px > 0.0)) throw DomainError("PipelineParams: needle_width_px must be positive");
    if (n_min < 0) throw DomainError("PipelineParams: n_min must be non-negative");
    if (!(bias_threshold > 0.0 && bias_threshold < 1.0)) throw DomainError("PipelineParams: bias_threshold must be in (0,1)");
    if (!(bias_alpha >= 0.0 && bias_alpha <= 1.0)) throw DomainError("PipelineParams: bias_alpha must be in [0,1]");
    if (dbscan_eps_px < 0.0 || ransac_inlier_px < 0.0) throw DomainError("PipelineParams: negative distance");
    if (dbscan_min_pts < 1 || ransac_iters < 1) throw DomainError("PipelineParams: counts must be positive");
    if (!(merge_factor > 0.0)) throw DomainError("PipelineParams: merge_factor must be positive");
  }
};

/// Classification outputs of the segmentation stage.
/// angle_left: the tip points toward -x (cos theta < 0).
/// angle_up:   the tip points toward +y in the world frame (sin theta > 0).
struct ClassificationBits {
  bool angle_up = false;
  bool angle_left = false;
  bool tip_visible = true;
  bool tail_visible = true;

  bool operator==(const ClassificationBits&) const = default;
};

enum class Visibility { Both, TipOnly, TailOnly, Neither };

inline const char* to_string(Visibility v) {
  switch (v) {
    case Visibility::Both: return "both";
    case Visibility::TipOnly: return "tip_only";
    case Visibility::TailOnly: return "tail_only";
    case Visibility::Neither: return "neither";
  }
  return "?";
}

inline Visibility visibility_of(const ClassificationBits& b) {
  if (b.tip_visible && b.tail_visible) return Visibility::Both;
  if (b.tip_visible) return Visibility::TipOnly;
  if (b.tail_visible) return Visibility::TailOnly;
  return Visibility::Neither;
}

struct NeedleDetection {
  Vec2 center_mm = Vec2::Zero();
  double theta_rad = 0.0;
  std::array<Vec2, 2> endpoints_px{Vec2::Zero(), Vec2::Zero()};
  Visibility visibility = Visibility::Both;
  bool flip_corrected = false;
  std::size_t inlier_count = 0;
  std::size_t needle_point_count = 0;

  NeedleState pose() const { return NeedleState(center_mm, theta_rad); }
};

/// Where localization stopped.
enum class ExitStage { Detected, NoClusters, TooFewInliers };

struct LocalizationResult {
  std::optional<NeedleDetection> detection;
  ExitStage stage = ExitStage::NoClusters;

  bool detected() const { return detection.has_value(); }

  static LocalizationResult no_detection(ExitStage why) { return {std::nullopt, why}; }
  static LocalizationResult detected_as(NeedleDetection d) { return {std::move(d), ExitStage::Detected}; }
};

inline double needle_length_px(const NeedleSpec& spec, const DishCalibration& cal) {
  return spec.length_mm * cal.px_per_mm();
}

// ---------------------------------------------------------------------------
// Pre-processing of raw camera frames

inline constexpr int kCropSize = 1024;

inline Eigen::Vector2i crop_origin(const DishCalibration& cal) {
  return {static_cast<int>(std::lround(cal.center_px.x() - kCropSize / 2.0)),
          static_cast<int>(std::lround(cal.center_px.y() - kCropSize / 2.0))};
}

/// Calibration of the 512 x 512 working image produced by preprocess().
inline DishCalibration working_calibration(const DishCalibration& raw) {
  const Eigen::Vector2i o = crop_origin(raw);
  DishCalibration w;
  w.center_px = (raw.center_px - o.cast<double>()) / 2.0;
  w.radius_px = raw.radius_px / 2.0;
  w.radius_mm = raw.radius_mm;
  return w;
}

/// Default working-image calibration: dish centered, 250 px radius.
inline DishCalibration default_working_calibration() { return working_calibration(DishCalibration{}); }

/// Crops 1024 x 1024 around the dish center, blanks everything outside the dish circle
/// and box-filters down to 512 x 512.
inline GrayFrame preprocess(const GrayFrame& frame, const DishCalibration& cal) {
  cal.validate();
  const Eigen::Vector2i o = crop_origin(cal);
  if (o.x() < 0 || o.y() < 0 || o.x() + kCropSize > frame.width() || o.y() + kCropSize > frame.height())
    throw CalibrationError("preprocess: 1024x1024 crop around the dish center exceeds the frame");
  const Vec2 c = cal.center_px;
  const double r = cal.radius_px;
  if (c.x() - r < o.x() || c.y() - r < o.y() || c.x() + r > o.x() + kCropSize || c.y() + r > o.y() + kCropSize)
    throw CalibrationError("preprocess: dish circle does not fit inside the crop");

  const double r2 = r * r;
  const auto sample = [&](int x, int y) -> unsigned {
    const Vec2 p = pixel_center(x, y);
    return (p - c).squaredNorm() <= r2 ? frame(x, y) : 0u;
  };
  GrayFrame out(kWorkingResolution, kWorkingResolution);
  for (int y = 0; y < kWorkingResolution; ++y)
    for (int x = 0; x < kWorkingResolution; ++x) {
      const int sx = o.x() + 2 * x;
      const int sy = o.y() + 2 * y;
      const unsigned sum = sample(sx, sy) + sample(sx + 1, sy) + sample(sx, sy + 1) + sample(sx + 1, sy + 1);
      out(x, y) = static_cast<std::uint8_t>((sum + 2u) / 4u);
    }
  return out;
}

// ---------------------------------------------------------------------------
// Debiasing

/// Drops mask pixels whose bias exceeds `threshold` (strictly).
inline SegMask debias(const SegMask& mask, const BiasMap& bias, double threshold) {
  if (!mask.same_shape(bias)) throw DomainError("debias: mask and bias dimensions differ");
  SegMask out = mask;
  for (std::size_t i = 0; i < out.size(); ++i)
    if (bias.data()[i] > threshold) out.data()[i] = 0;
  return out;
}

/// True when image point `p` lies inside the detected needle rectangle grown by `grow_px`
/// on every side.
inline bool in_needle_region(const Vec2& p, const Vec2& center_px, const Vec2& dir_px, double length_px,
                             double width_px, double grow_px) {
  const Vec2 d = p - center_px;
  return std::abs(d.dot(dir_px)) <= 0.5 * length_px + grow_px &&
         std::abs(cross(dir_px, d)) <= 0.5 * width_px + grow_px;
}

/// bias <- (1 - alpha) bias + alpha fp where fp marks mask pixels outside the detected
/// needle (dilated by one needle width). NoDetection leaves the bias unchanged.
inline BiasMap update_bias(const BiasMap& bias, const SegMask& mask, const LocalizationResult& result, double alpha,
                           const NeedleSpec& spec, const DishCalibration& cal, double needle_width_px) {
  if (!mask.same_shape(bias)) throw DomainError("update_bias: mask and bias dimensions differ");
  if (!result.detected()) return bias;
  const NeedleDetection& det = *result.detection;
  const Vec2 center_px = cal.mm_to_px(det.center_mm);
  const double img_theta = DishCalibration::world_to_image_angle(det.theta_rad);
  const Vec2 dir_px = heading(img_theta);
  const double len_px = needle_length_px(spec, cal);

  BiasMap out = bias;
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x) {
      double& b = out(x, y);
      const bool fp = mask(x, y) &&
                      !in_needle_region(pixel_center(x, y), center_px, dir_px, len_px, needle_width_px, needle_width_px);
      b = (1.0 - alpha) * b + alpha * (fp ? 1.0 : 0.0);
    }
  return out;
}

// ---------------------------------------------------------------------------
// Clustering, line fit, assembly

using PointCluster = std::vector<Vec2>;

/// DBSCAN over needle pixels; noise and clusters below the minimum size are dropped.
/// Returned clusters are sorted by decreasing size.
inline std::vector<PointCluster> cluster(const SegMask& mask, const PipelineParams& params) {
  const std::vector<Vec2> pts = mask_points(mask);
  if (pts.empty()) return {};
  const DbscanResult r = dbscan(pts, params.eps(), params.dbscan_min_pts);
  std::vector<PointCluster> groups = group_clusters(pts, r);
  const std::size_t n_min = params.min_points();
  std::erase_if(groups, [n_min](const PointCluster& c) { return c.size() < n_min; });
  std::stable_sort(groups.begin(), groups.end(),
                   [](const PointCluster& a, const PointCluster& b) { return a.size() > b.size(); });
  return groups;
}

inline RansacOptions ransac_options(const PipelineParams& p) {
  return {p.ransac_iters, p.inlier_distance(), p.min_points()};
}

inline std::optional<LineFit> fit_line(std::span<const Vec2> pts, const PipelineParams& params, Rng& rng) {
  return fit_line(pts, ransac_options(params), rng);
}

/// Largest distance between any point of `a` and any point of `b`.
inline double max_pairwise_distance(std::span<const Vec2> a, std::span<const Vec2> b) {
  double best = 0.0;
  for (const Vec2& p : a)
    for (const Vec2& q : b) best = std::max(best, (p - q).squaredNorm());
  return std::sqrt(best);
}

/// Final needle point set: starts from the largest cluster and appends every other
/// cluster whose farthest point pair with the current set is below
/// merge_factor * needle_length_px. Clusters must be sorted by decreasing size.
inline PointCluster assemble_needle(std::span<const PointCluster> clusters, double needle_length_px,
                                    double merge_factor) {
  if (clusters.empty()) return {};
  PointCluster needle = clusters.front();
  const double limit = merge_factor * needle_length_px;
  for (std::size_t i = 1; i < clusters.size(); ++i) {
    const PointCluster& c = clusters[i];
    if (c.empty()) continue;
    if (max_pairwise_distance(c, needle) < limit) needle.insert(needle.end(), c.begin(), c.end());
  }
  return needle;
}

/// Extreme points of `pts` along `direction`: (argmin, argmax) of the projection.
inline std::pair<Vec2, Vec2> extract_endpoints(std::span<const Vec2> pts, const Vec2& direction) {
  if (pts.empty()) throw DomainError("extract_endpoints: empty point set");
  std::size_t lo = 0, hi = 0;
  double pmin = pts[0].dot(direction), pmax = pmin;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double p = pts[i].dot(direction);
    if (p < pmin) { pmin = p; lo = i; }
    if (p > pmax) { pmax = p; hi = i; }
  }
  return {pts[lo], pts[hi]};
}

// ---------------------------------------------------------------------------
// Error correction

/// Chooses between theta_line and theta_line + pi from the classification bits: angle_left
/// decides near-horizontal lines, angle_up near-vertical ones.
inline double disambiguate_orientation(double theta_line, const ClassificationBits& bits) {
  const double line = normalize_line_angle(theta_line);
  bool keep = true;
  if (std::abs(line) <= kPi / 4.0) {
    keep = !bits.angle_left;  // cos(line) >= 0 here
  } else {
    keep = (std::sin(line) > 0.0) == bits.angle_up;
  }
  return normalize_angle(keep ? line : line + kPi);
}

/// Resolves orientation and occlusion. `theta_line` is the world-frame line angle.
///   1. orientation from the bits;
///   2. with a previous detection, a jump larger than pi/2 is treated as a flip and undone;
///   3. center from both endpoints, or from the visible one plus half a needle length.
inline NeedleDetection correct(const std::pair<Vec2, Vec2>& endpoints_px, double theta_line,
                               const ClassificationBits& bits, const std::optional<NeedleDetection>& prev,
                               const NeedleSpec& spec, const DishCalibration& cal, bool flip_correction = true) {
  NeedleDetection det;
  double theta = disambiguate_orientation(theta_line, bits);
  if (flip_correction && prev && angular_distance(theta, prev->theta_rad) > kPi / 2.0) {
    theta = normalize_angle(theta + kPi);
    det.flip_corrected = true;
  }
  det.theta_rad = theta;
  det.endpoints_px = {endpoints_px.first, endpoints_px.second};
  det.visibility = visibility_of(bits);

  const Vec2 a = cal.px_to_mm(endpoints_px.first);
  const Vec2 b = cal.px_to_mm(endpoints_px.second);
  const Vec2 h = heading(theta);
  const Vec2 tip = a.dot(h) >= b.dot(h) ? a : b;
  const Vec2 tail = a.dot(h) >= b.dot(h) ? b : a;
  switch (det.visibility) {
    case Visibility::Both:
    case Visibility::Neither: det.center_mm = 0.5 * (a + b); break;
    case Visibility::TipOnly: det.center_mm = tip - spec.half_length() * h; break;
    case Visibility::TailOnly: det.center_mm = tail + spec.half_length() * h; break;
  }
  return det;
}

// ---------------------------------------------------------------------------
// Full pipeline

struct LocalizeOutput {
  LocalizationResult result;
  BiasMap bias;
};

inline LocalizeOutput localize(const SegMask& mask, const ClassificationBits& bits, const BiasMap& bias,
                               const std::optional<NeedleDetection>& prev, const PipelineParams& params,
                               const NeedleSpec& spec, const DishCalibration& cal, std::uint64_t seed) {
  const SegMask clean = debias(mask, bias, params.bias_threshold);
  std::vector<PointCluster> clusters = cluster(clean, params);
  if (clusters.empty()) return {LocalizationResult::no_detection(ExitStage::NoClusters), bias};

  std::vector<Vec2> all;
  for (const auto& c : clusters) all.insert(all.end(), c.begin(), c.end());
  Rng rng(seed);
  const std::optional<LineFit> line = fit_line(all, params, rng);
  if (!line) return {LocalizationResult::no_detection(ExitStage::TooFewInliers), bias};

  // Drop RANSAC outliers from their clusters, then re-sort by size.
  std::size_t k = 0;
  for (auto& c : clusters) {
    PointCluster kept;
    for (const Vec2& p : c)
      if (line->inlier[k++]) kept.push_back(p);
    c = std::move(kept);
  }
  std::erase_if(clusters, [](const PointCluster& c) { return c.empty(); });
  std::stable_sort(clusters.begin(), clusters.end(),
                   [](const PointCluster& a, const PointCluster& b) { return a.size() > b.size(); });

  const PointCluster needle = assemble_needle(clusters, needle_length_px(spec, cal), params.merge_factor);
  // Raw extremes sit on the bar's end corners; snapping them onto the fitted line removes
  // the up-to-half-width lateral offset from the center estimate.
  const Vec2 dir = line->direction();
  const auto snap = [&](const Vec2& p) -> Vec2 { return line->point + (p - line->point).dot(dir) * dir; };
  const auto raw = extract_endpoints(needle, dir);
  const std::pair<Vec2, Vec2> ends{snap(raw.first), snap(raw.second)};
  const double theta_line = normalize_line_angle(DishCalibration::image_to_world_angle(line->angle));
  NeedleDetection det = correct(ends, theta_line, bits, prev, spec, cal, params.flip_correction);
  det.inlier_count = line->inlier_count;
  det.needle_point_count = needle.size();

  LocalizationResult result = LocalizationResult::detected_as(det);
  BiasMap next = update_bias(bias, mask, result, params.bias_alpha, spec, cal, params.needle_width_px);
  return {std::move(result), std::move(next)};
}

/// Tracking session: owns the bias map and the last detection.
class LocalizationSession {
 public:
  LocalizationSession(PipelineParams params, NeedleSpec spec, DishCalibration cal)
      : params_(params), spec_(spec), cal_(cal),
        bias_(kWorkingResolution, kWorkingResolution, 0.0) {
    params_.validate();
  }

  LocalizationResult process(const SegMask& mask, const ClassificationBits& bits) {
    if (!mask.same_shape(bias_)) bias_ = BiasMap(mask.width(), mask.height(), 0.0);
    LocalizeOutput out = localize(mask, bits, bias_, prev_, params_, spec_, cal_,
                                  derive_seed(params_.seed, 0x51ED, frame_++));
    bias_ = std::move(out.bias);
    if (out.result.detected()) prev_ = out.result.detection;
    return out.result;
  }

  const BiasMap& bias() const { return bias_; }
  const std::optional<NeedleDetection>& previous() const { return prev_; }
  const PipelineParams& params() const { return params_; }
  std::uint64_t frames_processed() const { return frame_; }

 private:
  PipelineParams params_;
  NeedleSpec spec_;
  DishCalibration cal_;
  BiasMap bias_;
  std::optional<NeedleDetection> prev_;
  std::uint64_t frame_ = 0;
};

}  // namespace magsuture

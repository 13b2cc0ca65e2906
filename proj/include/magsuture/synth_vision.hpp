#pragma once

/// @file synth_vision.hpp
/// @brief Ground-truth scene generator standing in for the segmentation network.
///
/// Renders the needle as a filled rectangle, hides it under occluders and blood,
/// adds persistent artifact bars and pixel noise, and emits classification bits from the
/// true pose with optional per-bit error injection.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "magsuture/core.hpp"
#include "magsuture/localization.hpp"
#include "magsuture/random.hpp"
#include "magsuture/raster.hpp"

namespace magsuture {

enum class SceneCategory { A, B, C, D };

inline char to_char(SceneCategory c) { return static_cast<char>('A' + static_cast<int>(c)); }

inline SceneCategory parse_category(const std::string& s) {
  if (s == "A" || s == "a") return SceneCategory::A;
  if (s == "B" || s == "b") return SceneCategory::B;
  if (s == "C" || s == "c") return SceneCategory::C;
  if (s == "D" || s == "d") return SceneCategory::D;
  throw DomainError("unknown scene category '" + s + "'");
}

// Occluders live in world millimetres.
struct DiscOccluder {
  Vec2 center_mm = Vec2::Zero();
  double radius_mm = 1.0;
  bool contains(const Vec2& p) const { return (p - center_mm).squaredNorm() <= radius_mm * radius_mm; }
};

struct EllipseOccluder {
  Vec2 center_mm = Vec2::Zero();
  Vec2 semi_axes_mm{1.0, 1.0};
  double angle_rad = 0.0;
  bool contains(const Vec2& p) const {
    const Vec2 d = p - center_mm;
    const Vec2 u = heading(angle_rad);
    const double a = d.dot(u) / semi_axes_mm.x();
    const double b = cross(u, d) / semi_axes_mm.y();
    return a * a + b * b <= 1.0;
  }
  double area() const { return kPi * semi_axes_mm.x() * semi_axes_mm.y(); }
};

struct PolygonOccluder {
  std::vector<Vec2> vertices_mm;
  /// Even-odd rule.
  bool contains(const Vec2& p) const {
    bool inside = false;
    const std::size_t n = vertices_mm.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      const Vec2& a = vertices_mm[i];
      const Vec2& b = vertices_mm[j];
      if ((a.y() > p.y()) != (b.y() > p.y()) && p.x() < (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x())
        inside = !inside;
    }
    return inside;
  }
};

using Occluder = std::variant<DiscOccluder, EllipseOccluder, PolygonOccluder>;

inline bool occluder_contains(const Occluder& o, const Vec2& p_mm) {
  return std::visit([&](const auto& shape) { return shape.contains(p_mm); }, o);
}

/// False-positive bar at a fixed location for the whole trial.
struct ArtifactBar {
  Vec2 center_mm = Vec2::Zero();
  double angle_rad = 0.0;
  double length_px = 80.0;
  double width_px = 4.0;
};

struct PixelNoise {
  double fp_rate = 0.0;
  double fn_rate = 0.0;
};

/// Opaque blood regions redrawn every frame; they erase mask pixels underneath.
struct BloodPatches {
  double mean_count = 0.0;
  double radius_min_mm = 4.0;
  double radius_max_mm = 10.0;
};

struct BitErrorRates {
  double angle_up = 0.0;
  double angle_left = 0.0;
  double tip_visible = 0.0;
  double tail_visible = 0.0;
};

struct SceneConfig {
  SceneCategory category = SceneCategory::A;
  std::vector<Occluder> occluders;
  std::vector<ArtifactBar> artifacts;
  PixelNoise noise;
  BloodPatches blood;
  BitErrorRates bit_errors;
  std::uint64_t rng_seed = 0;

  void validate() const {
    const auto rate = [](double r, const char* what) {
      if (!(r >= 0.0 && r <= 1.0)) throw DomainError(std::string("SceneConfig: ") + what + " must be in [0,1]");
    };
    rate(noise.fp_rate, "fp_rate");
    rate(noise.fn_rate, "fn_rate");
    rate(bit_errors.angle_up, "bit_errors.angle_up");
    rate(bit_errors.angle_left, "bit_errors.angle_left");
    rate(bit_errors.tip_visible, "bit_errors.tip_visible");
    rate(bit_errors.tail_visible, "bit_errors.tail_visible");
    if (!(blood.mean_count >= 0.0)) throw DomainError("SceneConfig: blood.mean_count must be non-negative");
    if (!(blood.radius_min_mm > 0.0 && blood.radius_min_mm <= blood.radius_max_mm))
      throw DomainError("SceneConfig: blood radii must satisfy 0 < min <= max");
    for (const auto& a : artifacts)
      if (!(a.length_px > 0.0 && a.width_px > 0.0)) throw DomainError("SceneConfig: artifact size must be positive");
  }

  /// Category presets. A: clean. B: heavy blood (speckle, erasing patches).
  /// C: tissue (central elliptical occluder, boundary artifact). D: B and C together.
  static SceneConfig preset(SceneCategory cat, double needle_length_px, double needle_width_px = 4.0) {
    SceneConfig s;
    s.category = cat;
    const bool blood = cat == SceneCategory::B || cat == SceneCategory::D;
    const bool tissue = cat == SceneCategory::C || cat == SceneCategory::D;
    if (blood) {
      s.noise = {0.01, 0.15};
      s.blood = {5.0, 10.0, 20.0};
      s.bit_errors = {0.03, 0.03, 0.03, 0.03};
    }
    if (tissue) {
      // Semi-axes 12 x 24 mm: about 16 % of the dish area.
      s.occluders.push_back(EllipseOccluder{Vec2::Zero(), Vec2(12.0, 24.0), 0.0});
      s.artifacts.push_back(ArtifactBar{Vec2(16.5, 4.0), kPi / 2.0, 0.6 * needle_length_px, needle_width_px});
      s.bit_errors = {0.03, 0.03, 0.03, 0.03};
    }
    if (blood && tissue) s.bit_errors = {0.05, 0.05, 0.05, 0.05};
    return s;
  }
};

struct FrameTruth {
  NeedleState pose;
  bool tip_visible = true;
  bool tail_visible = true;
  double occluded_fraction = 0.0;
};

struct RenderResult {
  SegMask mask;
  bool clipped = false;
  std::size_t pixel_count = 0;
};

namespace detail {

/// Sets pixels whose centers fall inside an oriented rectangle (image coordinates).
/// Returns true if part of the rectangle lies outside the image bounds or the dish circle.
inline bool fill_rect(SegMask& mask, const Vec2& center_px, const Vec2& dir_px, double length_px, double width_px,
                      const DishCalibration& cal) {
  const Vec2 n(-dir_px.y(), dir_px.x());
  const double hl = 0.5 * length_px;
  const double hw = 0.5 * width_px;
  bool clipped = false;
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (int sa : {-1, 1})
    for (int sb : {-1, 1}) {
      const Vec2 c = center_px + sa * hl * dir_px + sb * hw * n;
      x0 = std::min(x0, c.x()); x1 = std::max(x1, c.x());
      y0 = std::min(y0, c.y()); y1 = std::max(y1, c.y());
      if (c.x() < 0 || c.y() < 0 || c.x() > mask.width() || c.y() > mask.height() ||
          (c - cal.center_px).norm() > cal.radius_px)
        clipped = true;
    }
  const int ix0 = std::max(0, static_cast<int>(std::floor(x0)));
  const int ix1 = std::min(mask.width() - 1, static_cast<int>(std::ceil(x1)));
  const int iy0 = std::max(0, static_cast<int>(std::floor(y0)));
  const int iy1 = std::min(mask.height() - 1, static_cast<int>(std::ceil(y1)));
  const double r2 = cal.radius_px * cal.radius_px;
  for (int y = iy0; y <= iy1; ++y)
    for (int x = ix0; x <= ix1; ++x) {
      const Vec2 p = pixel_center(x, y);
      if (!in_needle_region(p, center_px, dir_px, length_px, width_px, 0.0)) continue;
      if ((p - cal.center_px).squaredNorm() > r2) continue;
      mask(x, y) = 1;
    }
  return clipped;
}

}  // namespace detail

/// Binary rectangle of the needle footprint in the working image.
inline RenderResult render_mask(const NeedleState& pose, const NeedleSpec& spec, const DishCalibration& cal,
                                double width_px, int resolution = kWorkingResolution) {
  RenderResult r;
  r.mask = SegMask(resolution, resolution, 0);
  const Vec2 dir = heading(DishCalibration::world_to_image_angle(pose.theta_rad));
  r.clipped = detail::fill_rect(r.mask, cal.mm_to_px(pose.center_mm), dir, needle_length_px(spec, cal), width_px, cal);
  r.pixel_count = count_nonzero(r.mask);
  return r;
}

struct OcclusionOutput {
  SegMask mask;
  FrameTruth truth;
};

/// Zeroes needle pixels under occluders and recomputes endpoint visibility: an endpoint is
/// visible while any rendered pixel of its end cap (the last 1.5 px) survives.
inline OcclusionOutput apply_occluders(const SegMask& mask, const NeedleState& pose, const NeedleSpec& spec,
                                       const DishCalibration& cal, const std::vector<Occluder>& occluders) {
  OcclusionOutput out{mask, FrameTruth{pose, true, true, 0.0}};
  const Vec2 c = cal.mm_to_px(pose.center_mm);
  const Vec2 dir = heading(DishCalibration::world_to_image_angle(pose.theta_rad));
  const double cap_start = 0.5 * needle_length_px(spec, cal) - 1.5;
  std::size_t before = 0, after = 0;
  std::size_t tip_after = 0, tail_after = 0;
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask(x, y)) continue;
      const Vec2 p = pixel_center(x, y);
      const Vec2 w = cal.px_to_mm(p);
      bool hidden = false;
      for (const auto& o : occluders)
        if (occluder_contains(o, w)) { hidden = true; break; }
      if (hidden) out.mask(x, y) = 0;
      const double along = (p - c).dot(dir);
      ++before;
      after += hidden ? 0u : 1u;
      if (along >= cap_start) tip_after += hidden ? 0u : 1u;
      if (along <= -cap_start) tail_after += hidden ? 0u : 1u;
    }
  out.truth.tip_visible = tip_after > 0;
  out.truth.tail_visible = tail_after > 0;
  out.truth.occluded_fraction = before ? 1.0 - static_cast<double>(after) / static_cast<double>(before) : 1.0;
  return out;
}

/// Applies, in order: needle false negatives, blood patches, artifact bars, background
/// false positives. Pixels outside the dish stay zero.
inline SegMask apply_noise_and_artifacts(const SegMask& mask, const SceneConfig& cfg, const DishCalibration& cal,
                                         Rng& rng) {
  SegMask out = mask;
  if (cfg.noise.fn_rate > 0.0)
    for (auto& v : out.data())
      if (v && bernoulli(rng, cfg.noise.fn_rate)) v = 0;

  if (cfg.blood.mean_count > 0.0) {
    const int n = std::poisson_distribution<int>(cfg.blood.mean_count)(rng);
    for (int i = 0; i < n; ++i) {
      const double rr = cal.radius_mm * std::sqrt(uniform01(rng));
      const double ang = kTwoPi * uniform01(rng);
      const double rad = cfg.blood.radius_min_mm + (cfg.blood.radius_max_mm - cfg.blood.radius_min_mm) * uniform01(rng);
      const Vec2 cpx = cal.mm_to_px(rr * heading(ang));
      const double rpx = rad * cal.px_per_mm();
      const int x0 = std::max(0, static_cast<int>(cpx.x() - rpx) - 1);
      const int x1 = std::min(out.width() - 1, static_cast<int>(cpx.x() + rpx) + 1);
      const int y0 = std::max(0, static_cast<int>(cpx.y() - rpx) - 1);
      const int y1 = std::min(out.height() - 1, static_cast<int>(cpx.y() + rpx) + 1);
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x)
          if ((pixel_center(x, y) - cpx).squaredNorm() <= rpx * rpx) out(x, y) = 0;
    }
  }

  for (const auto& a : cfg.artifacts) {
    detail::fill_rect(out, cal.mm_to_px(a.center_mm), heading(DishCalibration::world_to_image_angle(a.angle_rad)),
                      a.length_px, a.width_px, cal);
  }

  if (cfg.noise.fp_rate > 0.0) {
    const double r2 = cal.radius_px * cal.radius_px;
    const auto set_fp = [&](std::size_t i) {
      const int x = static_cast<int>(i % static_cast<std::size_t>(out.width()));
      const int y = static_cast<int>(i / static_cast<std::size_t>(out.width()));
      if ((pixel_center(x, y) - cal.center_px).squaredNorm() <= r2) out.data()[i] = 1;
    };
    if (cfg.noise.fp_rate >= 1.0) {
      for (std::size_t i = 0; i < out.size(); ++i)
        if (!out.data()[i]) set_fp(i);
    } else {
      // Geometric gaps give the same Bernoulli field without one draw per pixel.
      std::geometric_distribution<std::size_t> gap(cfg.noise.fp_rate);
      const SegMask before = out;
      for (std::size_t i = gap(rng); i < out.size(); i += gap(rng) + 1)
        if (!before.data()[i]) set_fp(i);
    }
  }
  return out;
}

/// Bits from the true pose, each flipped independently with its error rate.
inline ClassificationBits oracle_bits(const FrameTruth& truth, const BitErrorRates& err, Rng& rng) {
  ClassificationBits b;
  b.angle_up = std::sin(truth.pose.theta_rad) > 0.0;
  b.angle_left = std::cos(truth.pose.theta_rad) < 0.0;
  b.tip_visible = truth.tip_visible;
  b.tail_visible = truth.tail_visible;
  if (bernoulli(rng, err.angle_up)) b.angle_up = !b.angle_up;
  if (bernoulli(rng, err.angle_left)) b.angle_left = !b.angle_left;
  if (bernoulli(rng, err.tip_visible)) b.tip_visible = !b.tip_visible;
  if (bernoulli(rng, err.tail_visible)) b.tail_visible = !b.tail_visible;
  return b;
}

struct SyntheticFrame {
  SegMask mask;
  FrameTruth truth;
  ClassificationBits bits;
  bool clipped = false;
};

/// Deterministic given (config, frame index, pose).
class SceneGenerator {
 public:
  SceneGenerator(SceneConfig cfg, NeedleSpec spec, DishCalibration cal, double mask_width_px = 4.0)
      : cfg_(std::move(cfg)), spec_(spec), cal_(cal), width_px_(mask_width_px) {
    cfg_.validate();
  }

  SyntheticFrame generate(const NeedleState& pose, std::uint64_t frame_index) const {
    RenderResult r = render_mask(pose, spec_, cal_, width_px_);
    OcclusionOutput occ = apply_occluders(r.mask, pose, spec_, cal_, cfg_.occluders);
    Rng pixel_rng(derive_seed(cfg_.rng_seed, 0xB10D, frame_index));
    Rng bit_rng(derive_seed(cfg_.rng_seed, 0xB175, frame_index));
    SyntheticFrame f;
    f.mask = apply_noise_and_artifacts(occ.mask, cfg_, cal_, pixel_rng);
    f.truth = occ.truth;
    f.bits = oracle_bits(f.truth, cfg_.bit_errors, bit_rng);
    f.clipped = r.clipped;
    return f;
  }

  const SceneConfig& config() const { return cfg_; }
  const DishCalibration& calibration() const { return cal_; }
  double mask_width_px() const { return width_px_; }

 private:
  SceneConfig cfg_;
  NeedleSpec spec_;
  DishCalibration cal_;
  double width_px_;
};

}  // namespace magsuture

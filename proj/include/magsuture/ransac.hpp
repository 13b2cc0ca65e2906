#pragma once

/// @file ransac.hpp
/// @brief Two-point RANSAC line fit with a total-least-squares refit over the inliers.

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "magsuture/core.hpp"
#include "magsuture/random.hpp"

namespace magsuture {

struct RansacOptions {
  int iterations = 200;
  double inlier_distance = 2.5;
  /// Fewer inliers than this is reported as no fit.
  std::size_t min_inliers = 2;
};

struct LineFit {
  /// Line direction angle in [-pi/2, pi/2), in the same frame as the input points.
  double angle = 0.0;
  Vec2 point = Vec2::Zero();
  std::vector<bool> inlier;
  std::size_t inlier_count = 0;

  Vec2 direction() const { return heading(angle); }
};

/// Principal direction of a point set (total least squares).
inline Vec2 principal_direction(std::span<const Vec2> pts, const Vec2& centroid) {
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const Vec2& p : pts) {
    const Vec2 d = p - centroid;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
  return es.eigenvectors().col(1);  // eigenvalues ascending
}

inline double point_line_distance(const Vec2& p, const Vec2& on_line, const Vec2& unit_dir) {
  return std::abs(cross(unit_dir, p - on_line));
}

inline std::optional<LineFit> fit_line(std::span<const Vec2> pts, const RansacOptions& opt, Rng& rng) {
  const std::size_t n = pts.size();
  if (n < 2 || n < opt.min_inliers) return std::nullopt;

  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::size_t best_count = 0;
  Vec2 best_a = Vec2::Zero();
  Vec2 best_dir = Vec2::UnitX();
  for (int it = 0; it < opt.iterations; ++it) {
    const std::size_t i = pick(rng);
    std::size_t j = pick(rng);
    if (i == j) j = (j + 1) % n;
    const Vec2 ab = pts[j] - pts[i];
    const double len = ab.norm();
    if (!(len > 0.0)) continue;
    const Vec2 dir = ab / len;
    std::size_t count = 0;
    for (const Vec2& p : pts) count += point_line_distance(p, pts[i], dir) <= opt.inlier_distance ? 1u : 0u;
    if (count > best_count) {
      best_count = count;
      best_a = pts[i];
      best_dir = dir;
    }
  }
  if (best_count < opt.min_inliers || best_count < 2) return std::nullopt;

  LineFit fit;
  fit.inlier.resize(n);
  std::vector<Vec2> in;
  in.reserve(best_count);
  for (std::size_t k = 0; k < n; ++k) {
    fit.inlier[k] = point_line_distance(pts[k], best_a, best_dir) <= opt.inlier_distance;
    if (fit.inlier[k]) in.push_back(pts[k]);
  }
  fit.inlier_count = in.size();
  Vec2 centroid = Vec2::Zero();
  for (const Vec2& p : in) centroid += p;
  centroid /= static_cast<double>(in.size());
  const Vec2 dir = principal_direction(in, centroid);
  fit.point = centroid;
  fit.angle = normalize_line_angle(std::atan2(dir.y(), dir.x()));
  return fit;
}

}  // namespace magsuture

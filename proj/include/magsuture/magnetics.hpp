#pragma once

/// @file magnetics.hpp
/// @brief Point-dipole coil fields, needle wrench, the motion gain g(r, theta)
/// and pseudo-inverse current allocation.
///
/// Each coil k is a point dipole at r_k whose axis points along r_k / |r_k|:
///
///     B_k = -(m_k / delta^3) (r_hat - 3 d_hat d_hat^T r_hat) I_k,   d = r - r_k
///
/// The needle carries moment M h. Its potential energy in the field is
/// U = -M h^T B, the torque is M (h x B) and the force is -grad U.

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "magsuture/core.hpp"

namespace magsuture {

using CurrentVector = Eigen::Vector4d;
using MotionGain = Eigen::Matrix<double, 2, 4>;

/// Geometry of one coil relative to the needle center.
struct CoilGeometry {
  Vec2 d = Vec2::Zero();      // r - r_k
  double delta = 0.0;          // |d|
  Vec2 d_hat = Vec2::Zero();
  Vec2 r_hat = Vec2::Zero();   // coil axis
};

inline CoilGeometry coil_geometry(const Coil& coil, const Vec2& r) {
  CoilGeometry g;
  g.d = r - coil.center_mm;
  g.delta = g.d.norm();
  const double coil_norm = coil.center_mm.norm();
  if (!(g.delta > 1e-12 * std::max(1.0, coil_norm)))
    throw SingularityError("dipole field evaluated at a coil center");
  if (!(coil_norm > 0.0)) throw DomainError("coil placed at the dish origin has no axis");
  g.d_hat = g.d / g.delta;
  g.r_hat = coil.center_mm / coil_norm;
  return g;
}

/// B_k / I_k at r.
inline Vec2 field_per_amp(const Coil& coil, const Vec2& r) {
  const CoilGeometry g = coil_geometry(coil, r);
  const double d3 = g.delta * g.delta * g.delta;
  return -(coil.magnet_constant / d3) * (g.r_hat - 3.0 * g.d_hat * g.d_hat.dot(g.r_hat));
}

inline Vec2 total_field(const CoilArray& coils, const Vec2& r, const CurrentVector& current) {
  Vec2 b = Vec2::Zero();
  for (std::size_t k = 0; k < CoilArray::kCount; ++k) b += current[k] * field_per_amp(coils.coils[k], r);
  return b;
}

/// Needle potential energy U = -M h^T B.
inline double potential_energy(const Vec2& r, double theta, const CurrentVector& current,
                               const CoilArray& coils, const NeedleSpec& spec) {
  return -spec.magnetic_moment * heading(theta).dot(total_field(coils, r, current));
}

struct Wrench2D {
  Vec2 force = Vec2::Zero();
  double torque = 0.0;
};

/// Force (-grad U, analytic) and z-torque M (h x B) on the needle.
inline Wrench2D wrench(const Vec2& r, double theta, const CurrentVector& current, const CoilArray& coils,
                       const NeedleSpec& spec) {
  const Vec2 h = heading(theta);
  const double moment = spec.magnetic_moment;
  Wrench2D w;
  for (std::size_t k = 0; k < CoilArray::kCount; ++k) {
    const Coil& coil = coils.coils[k];
    const CoilGeometry g = coil_geometry(coil, r);
    const double d4 = std::pow(g.delta, 4);
    const double hr = h.dot(g.r_hat);
    const double hd = h.dot(g.d_hat);
    const double dr = g.d_hat.dot(g.r_hat);
    // grad of phi = (h.r_hat)/delta^3 - 3 (h.d)(d.r_hat)/delta^5, with h^T B_k = -m_k I_k phi.
    const Vec2 grad_phi = (-3.0 * hr * g.d_hat - 3.0 * dr * h - 3.0 * hd * g.r_hat + 15.0 * hd * dr * g.d_hat) / d4;
    w.force += -moment * coil.magnet_constant * current[k] * grad_phi;
    w.torque += moment * cross(h, current[k] * field_per_amp(coil, r));
  }
  return w;
}

/// g(r, theta): columns map unit coil currents to the needle's (v, omega),
/// where v = h^T F / c_t (motion along the heading) and omega = tau / c_r.
inline MotionGain motion_gain(const Vec2& r, double theta, const CoilArray& coils, const NeedleSpec& spec,
                              const DragCoefficients& drag) {
  const Vec2 h = heading(theta);
  const double moment = spec.magnetic_moment;
  MotionGain g;
  for (std::size_t k = 0; k < CoilArray::kCount; ++k) {
    const Coil& coil = coils.coils[k];
    const CoilGeometry c = coil_geometry(coil, r);
    const double hd = c.d_hat.dot(h);
    const double hr = h.dot(c.r_hat);
    const double dr = c.d_hat.dot(c.r_hat);
    const double d3 = c.delta * c.delta * c.delta;
    const double d4 = d3 * c.delta;
    const double mm = moment * coil.magnet_constant;
    g(0, static_cast<Eigen::Index>(k)) = (3.0 * mm / drag.c_t) * (2.0 * hd * hr + dr - 5.0 * hd * hd * dr) / d4;
    // h^T S v with S the +90 degree rotation.
    const double hsr = h.dot(rotate90(c.r_hat));
    const double hsd = h.dot(rotate90(c.d_hat));
    g(1, static_cast<Eigen::Index>(k)) = (mm / drag.c_r) * (hsr - 3.0 * hsd * dr) / d3;
  }
  return g;
}

struct AllocationOptions {
  double i_max = 10.0;
  /// Damping of g g^T + lambda^2 1.
  double lambda = 1e-8;
  /// cond(g g^T) above this marks the allocation degraded.
  double max_condition = 1e12;
};

struct Allocation {
  CurrentVector currents = CurrentVector::Zero();
  bool degraded = false;
  bool saturated = false;
  /// Uniform factor applied by saturation (1 when unsaturated).
  double scale = 1.0;
  double condition = 1.0;
};

/// Condition number of a symmetric positive semi-definite 2x2 matrix.
inline double spd_condition(const Eigen::Matrix2d& a) {
  const double tr = a.trace();
  const double det = a.determinant();
  const double disc = std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
  const double hi = 0.5 * tr + disc;
  const double lo = 0.5 * tr - disc;
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

/// Right pseudo-inverse of an arbitrary gain, I = g^T (g g^T + lambda^2 1)^-1 [v; omega],
/// followed by uniform scaling so that max |I_k| <= i_max.
inline Allocation allocate_currents(const MotionGain& g, double v, double omega, const AllocationOptions& opt = {}) {
  Allocation out;
  const Eigen::Vector2d cmd(v, omega);
  Eigen::Matrix2d ggt = g * g.transpose();
  out.condition = spd_condition(ggt);
  out.degraded = !(out.condition <= opt.max_condition);
  ggt.diagonal().array() += opt.lambda * opt.lambda;
  if (out.degraded && !(spd_condition(ggt) <= opt.max_condition)) {
    // Rank-deficient even after damping: minimum-norm least squares.
    out.currents = g.completeOrthogonalDecomposition().solve(cmd);
  } else {
    out.currents = g.transpose() * ggt.ldlt().solve(cmd);
  }
  const double peak = out.currents.cwiseAbs().maxCoeff();
  if (peak > opt.i_max) {
    out.saturated = true;
    out.scale = opt.i_max / peak;
    out.currents *= out.scale;
  }
  return out;
}

inline Allocation allocate_currents(const Vec2& r, double theta, double v, double omega, const CoilArray& coils,
                                    const NeedleSpec& spec, const DragCoefficients& drag,
                                    const AllocationOptions& opt = {}) {
  return allocate_currents(motion_gain(r, theta, coils, spec, drag), v, omega, opt);
}

}  // namespace magsuture

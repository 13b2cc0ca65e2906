#pragma once

// Independent reference computations for tests. Nothing here calls the analytic
// gradients under test; everything is rebuilt from the scalar dipole potential.

#include <cmath>

#include "magsuture/core.hpp"
#include "magsuture/magnetics.hpp"

namespace oracle {

using magsuture::Vec2;

/// Scalar potential of one coil per ampere: psi = m (r_hat . d) / delta^3, with B / I = -grad psi.
inline double coil_potential(const magsuture::Coil& coil, const Vec2& r) {
  const Vec2 d = r - coil.center_mm;
  const Vec2 r_hat = coil.center_mm.normalized();
  const double delta = d.norm();
  return coil.magnet_constant * r_hat.dot(d) / (delta * delta * delta);
}

inline Vec2 fd_field_per_amp(const magsuture::Coil& coil, const Vec2& r, double h = 1e-4) {
  Vec2 g;
  for (int a = 0; a < 2; ++a) {
    Vec2 e = Vec2::Zero();
    e[a] = h;
    g[a] = (coil_potential(coil, r + e) - coil_potential(coil, r - e)) / (2.0 * h);
  }
  return -g;
}

/// Field rebuilt from the dipole formula term by term.
inline Vec2 dipole_field(const magsuture::CoilArray& coils, const Vec2& r, const Eigen::Vector4d& current) {
  Vec2 b = Vec2::Zero();
  for (std::size_t k = 0; k < 4; ++k) {
    const auto& c = coils.coils[k];
    const Vec2 d = r - c.center_mm;
    const double delta = d.norm();
    const Vec2 dh = d / delta;
    const Vec2 rh = c.center_mm.normalized();
    b += -(c.magnet_constant / std::pow(delta, 3)) * (rh - 3.0 * dh * dh.dot(rh)) * current[k];
  }
  return b;
}

/// Energy of the needle moment M h in the field.
inline double energy(const magsuture::CoilArray& coils, const magsuture::NeedleSpec& spec, const Vec2& r,
                     double theta, const Eigen::Vector4d& current) {
  return -spec.magnetic_moment * magsuture::heading(theta).dot(dipole_field(coils, r, current));
}

/// Force -grad U by central differences in position.
inline Vec2 fd_force(const magsuture::CoilArray& coils, const magsuture::NeedleSpec& spec, const Vec2& r,
                     double theta, const Eigen::Vector4d& current, double h = 1e-4) {
  Vec2 f;
  for (int a = 0; a < 2; ++a) {
    Vec2 e = Vec2::Zero();
    e[a] = h;
    f[a] = -(energy(coils, spec, r + e, theta, current) - energy(coils, spec, r - e, theta, current)) / (2.0 * h);
  }
  return f;
}

/// Torque -dU/dtheta by central differences in heading.
inline double fd_torque(const magsuture::CoilArray& coils, const magsuture::NeedleSpec& spec, const Vec2& r,
                        double theta, const Eigen::Vector4d& current, double h = 1e-5) {
  return -(energy(coils, spec, r, theta + h, current) - energy(coils, spec, r, theta - h, current)) / (2.0 * h);
}

/// Motion gain rebuilt column by column from the finite-difference wrench.
inline magsuture::MotionGain fd_motion_gain(const magsuture::CoilArray& coils, const magsuture::NeedleSpec& spec,
                                            const magsuture::DragCoefficients& drag, const Vec2& r, double theta) {
  magsuture::MotionGain g;
  for (int k = 0; k < 4; ++k) {
    Eigen::Vector4d unit = Eigen::Vector4d::Zero();
    unit[k] = 1.0;
    g(0, k) = magsuture::heading(theta).dot(fd_force(coils, spec, r, theta, unit)) / drag.c_t;
    g(1, k) = fd_torque(coils, spec, r, theta, unit) / drag.c_r;
  }
  return g;
}

}  // namespace oracle

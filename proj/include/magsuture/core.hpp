#pragma once

/// @file core.hpp
/// @brief Units, planar geometry and the shared domain records.
///
/// World frame: origin at the dish center, x right, y up, millimetres.
/// Image frame: pixel (col, row) covers [col, col+1) x [row, row+1), y down.

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace magsuture {

using Vec2 = Eigen::Vector2d;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Raised when an input violates a documented precondition.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when a field is evaluated at (or numerically at) a coil center.
class SingularityError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Raised when a dish calibration does not fit the frame it describes.
class CalibrationError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Maps any finite angle onto [-pi, pi).
inline double normalize_angle(double theta) {
  if (!std::isfinite(theta)) throw DomainError("normalize_angle: non-finite angle");
  double r = theta - kTwoPi * std::floor((theta + kPi) / kTwoPi);
  // floor() can leave r == pi after rounding when theta is just below an odd multiple of pi.
  if (r >= kPi) r -= kTwoPi;
  if (r < -kPi) r += kTwoPi;
  return r;
}

/// Maps a line direction onto [-pi/2, pi/2); theta and theta + pi are the same line.
inline double normalize_line_angle(double theta) {
  if (!std::isfinite(theta)) throw DomainError("normalize_line_angle: non-finite angle");
  double r = theta - kPi * std::floor((theta + kPi / 2.0) / kPi);
  if (r >= kPi / 2.0) r -= kPi;
  if (r < -kPi / 2.0) r += kPi;
  return r;
}

/// Unsigned angular distance in [0, pi].
inline double angular_distance(double a, double b) { return std::abs(normalize_angle(a - b)); }

inline Vec2 heading(double theta) { return {std::cos(theta), std::sin(theta)}; }

/// +90 degree rotation, S = [[0, -1], [1, 0]].
inline Vec2 rotate90(const Vec2& v) { return {-v.y(), v.x()}; }

/// z-component of the planar cross product.
inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

struct NeedleSpec {
  double length_mm = 23.5;
  double width_mm = 0.7176;
  double magnetic_moment = 1.0;

  void validate() const {
    if (!(length_mm > 0.0)) throw DomainError("NeedleSpec: length_mm must be positive");
    if (!(width_mm > 0.0)) throw DomainError("NeedleSpec: width_mm must be positive");
    if (!(width_mm < length_mm)) throw DomainError("NeedleSpec: width_mm must be below length_mm");
    if (!(magnetic_moment > 0.0)) throw DomainError("NeedleSpec: magnetic_moment must be positive");
  }

  double half_length() const { return 0.5 * length_mm; }
};

/// Planar pose of the needle's center of mass. theta is kept on [-pi, pi).
struct NeedleState {
  Vec2 center_mm = Vec2::Zero();
  double theta_rad = 0.0;

  NeedleState() = default;
  NeedleState(const Vec2& center, double theta) : center_mm(center), theta_rad(normalize_angle(theta)) {}

  Vec2 heading() const { return magsuture::heading(theta_rad); }

  bool operator==(const NeedleState& o) const {
    return center_mm == o.center_mm && theta_rad == o.theta_rad;
  }
};

inline Vec2 tip_of(const NeedleState& s, const NeedleSpec& spec) {
  return s.center_mm + spec.half_length() * s.heading();
}

inline Vec2 tail_of(const NeedleState& s, const NeedleSpec& spec) {
  return s.center_mm - spec.half_length() * s.heading();
}

/// Places the needle so its tip sits at `tip` while pointing along `theta`.
inline NeedleState state_from_tip(const Vec2& tip, double theta, const NeedleSpec& spec) {
  return NeedleState(tip - spec.half_length() * magsuture::heading(theta), theta);
}

/// Circle of the Petri dish in an image, plus its physical radius.
struct DishCalibration {
  Vec2 center_px{640.0, 512.0};
  double radius_px = 500.0;
  double radius_mm = 42.5;

  void validate() const {
    if (!(radius_px > 0.0)) throw CalibrationError("DishCalibration: radius_px must be positive");
    if (!(radius_mm > 0.0)) throw CalibrationError("DishCalibration: radius_mm must be positive");
  }

  double px_per_mm() const { return radius_px / radius_mm; }

  Vec2 px_to_mm(const Vec2& p) const {
    const double s = px_per_mm();
    return {(p.x() - center_px.x()) / s, -(p.y() - center_px.y()) / s};
  }

  Vec2 mm_to_px(const Vec2& p) const {
    const double s = px_per_mm();
    return {center_px.x() + p.x() * s, center_px.y() - p.y() * s};
  }

  /// Converts a world angle to the image frame and back (y flips sign).
  static double world_to_image_angle(double theta) { return -theta; }
  static double image_to_world_angle(double theta) { return -theta; }

  bool contains_mm(const Vec2& p) const { return p.norm() <= radius_mm; }
};

inline Vec2 px_to_mm(const Vec2& p, const DishCalibration& cal) { return cal.px_to_mm(p); }
inline Vec2 mm_to_px(const Vec2& p, const DishCalibration& cal) { return cal.mm_to_px(p); }

struct Coil {
  Vec2 center_mm = Vec2::Zero();
  /// m_k; scales the dipole field per ampere.
  double magnet_constant = 1.0;
};

/// Four electromagnets around the dish.
struct CoilArray {
  static constexpr std::size_t kCount = 4;
  std::array<Coil, kCount> coils{};

  /// Default magnet constant: about 2 mm/s of needle speed per ampere at the dish center
  /// with M = c_t = 1, so the 10 A current limit is a meaningful constraint.
  static constexpr double kDefaultMagnetConstant = 2.0e7;
  static constexpr double kDefaultRadiusMm = 88.0;

  /// Coils on the +x, +y, -x, -y axes at `radius_mm`.
  static CoilArray symmetric(double radius_mm = kDefaultRadiusMm,
                             double magnet_constant = kDefaultMagnetConstant) {
    CoilArray a;
    a.coils[0] = {Vec2(radius_mm, 0.0), magnet_constant};
    a.coils[1] = {Vec2(0.0, radius_mm), magnet_constant};
    a.coils[2] = {Vec2(-radius_mm, 0.0), magnet_constant};
    a.coils[3] = {Vec2(0.0, -radius_mm), magnet_constant};
    return a;
  }

  void validate(double dish_radius_mm) const {
    for (std::size_t k = 0; k < kCount; ++k) {
      const auto& c = coils[k];
      if (!(c.magnet_constant > 0.0))
        throw DomainError("CoilArray: coil " + std::to_string(k + 1) + " magnet_constant must be positive");
      if (!(c.center_mm.norm() > dish_radius_mm))
        throw DomainError("CoilArray: coil " + std::to_string(k + 1) + " must lie outside the dish");
    }
  }
};

struct DragCoefficients {
  double c_t = 1.0;
  double c_r = 1.0;

  void validate() const {
    if (!(c_t > 0.0) || !(c_r > 0.0)) throw DomainError("DragCoefficients: c_t and c_r must be positive");
  }
};

}  // namespace magsuture

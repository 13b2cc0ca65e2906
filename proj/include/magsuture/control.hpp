#pragma once

/// @file control.hpp
/// @brief Piecewise-linear reference paths and the tip-tracking controller.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <iterator>
#include <utility>
#include <vector>

#include "magsuture/core.hpp"

namespace magsuture {

struct PathSample {
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
};

/// Waypoints q_0..q_m traversed at constant speed v_des.
class ReferencePath {
 public:
  static constexpr double kDefaultSpeed = 0.2;  // mm/s

  ReferencePath(std::vector<Vec2> waypoints, double v_des = kDefaultSpeed)
      : waypoints_(std::move(waypoints)), v_des_(v_des) {
    if (!(v_des_ > 0.0)) throw DomainError("ReferencePath: v_des must be positive");
    if (waypoints_.size() < 2) throw DomainError("ReferencePath: need at least two waypoints");
    times_.reserve(waypoints_.size());
    times_.push_back(0.0);
    for (std::size_t i = 1; i < waypoints_.size(); ++i) {
      const double len = (waypoints_[i] - waypoints_[i - 1]).norm();
      if (!(len > 0.0)) {
        std::ostringstream os;
        os << "ReferencePath: waypoints " << i - 1 << " and " << i << " coincide";
        throw DomainError(os.str());
      }
      length_ += len;
      times_.push_back(times_.back() + len / v_des_);
    }
  }

  const std::vector<Vec2>& waypoints() const { return waypoints_; }
  const std::vector<double>& knot_times() const { return times_; }
  double speed() const { return v_des_; }
  double length() const { return length_; }
  double duration() const { return times_.back(); }

  /// r_des(t) and its derivative. Segment i covers [t_{i-1}, t_i); past t_m the path
  /// holds q_m with zero velocity.
  PathSample eval(double t) const {
    if (!(t >= 0.0)) throw DomainError("ReferencePath::eval: t must be non-negative");
    if (t >= times_.back()) return {waypoints_.back(), Vec2::Zero()};
    const auto it = std::upper_bound(times_.begin(), times_.end(), t);
    const std::size_t i = static_cast<std::size_t>(std::distance(times_.begin(), it));  // t in [t_{i-1}, t_i)
    const Vec2& a = waypoints_[i - 1];
    const Vec2& b = waypoints_[i];
    const double s = (t - times_[i - 1]) / (times_[i] - times_[i - 1]);
    const Vec2 seg = b - a;
    return {a + s * seg, v_des_ * seg / seg.norm()};
  }

 private:
  std::vector<Vec2> waypoints_;
  std::vector<double> times_;
  double v_des_;
  double length_ = 0.0;
};

inline PathSample path_eval(const ReferencePath& path, double t) { return path.eval(t); }

/// Zig-zag through a vertical tissue strip centered at `tissue_center`.
/// Pass i runs horizontally at y = c_y + (i - (passes - 1) / 2) * pitch, alternating
/// left-to-right and right-to-left, entering and leaving `margin` outside the strip.
struct RunningSutureParams {
  Vec2 tissue_center = Vec2::Zero();
  double tissue_thickness_mm = 5.0;
  int passes = 3;
  double pitch_mm = 8.0;
  double margin_mm = 5.0;
  double v_des = ReferencePath::kDefaultSpeed;
};

inline std::vector<Vec2> running_suture_waypoints(const RunningSutureParams& p) {
  if (p.passes < 1) throw DomainError("running_suture_path: passes must be >= 1");
  if (!(p.tissue_thickness_mm > 0.0)) throw DomainError("running_suture_path: tissue thickness must be positive");
  if (!(p.margin_mm >= 0.0)) throw DomainError("running_suture_path: margin must be non-negative");
  if (p.passes > 1 && !(p.pitch_mm > 0.0)) throw DomainError("running_suture_path: pitch must be positive");
  const double half = 0.5 * p.tissue_thickness_mm + p.margin_mm;
  std::vector<Vec2> q;
  q.reserve(2 * static_cast<std::size_t>(p.passes));
  for (int i = 0; i < p.passes; ++i) {
    const double y = p.tissue_center.y() + (i - 0.5 * (p.passes - 1)) * p.pitch_mm;
    const double dir = (i % 2 == 0) ? 1.0 : -1.0;
    q.emplace_back(p.tissue_center.x() - dir * half, y);
    q.emplace_back(p.tissue_center.x() + dir * half, y);
  }
  return q;
}

/// Builds the running-suture path; every waypoint must satisfy |q| <= safe_radius_mm
/// (normally dish radius minus half the needle length).
inline ReferencePath running_suture_path(const RunningSutureParams& p, double safe_radius_mm) {
  std::vector<Vec2> q = running_suture_waypoints(p);
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i].norm() > safe_radius_mm) {
      std::ostringstream os;
      os << "running_suture_path: waypoint " << i << " (" << q[i].x() << ", " << q[i].y()
         << ") lies outside the safe radius " << safe_radius_mm << " mm";
      throw DomainError(os.str());
    }
  }
  return ReferencePath(std::move(q), p.v_des);
}

inline double safe_radius(const DishCalibration& dish, const NeedleSpec& spec) {
  return dish.radius_mm - spec.half_length();
}

/// r_tip_dot = k (r_des - r_tip) + r_des_dot.
inline Vec2 pd_tip_command(const Vec2& r_tip, const PathSample& ref, double k) {
  return k * (ref.position - r_tip) + ref.velocity;
}

inline Vec2 pd_tip_command(const Vec2& r_tip, double t, const ReferencePath& path, double k) {
  return pd_tip_command(r_tip, path.eval(t), k);
}

struct BodyCommand {
  double v = 0.0;      // mm/s along the heading
  double omega = 0.0;  // rad/s
};

/// Inverts r_tip_dot = h v + (l/2) S h omega.
inline BodyCommand tip_cmd_to_body(double theta, const Vec2& tip_velocity, const NeedleSpec& spec) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double inv_half = 1.0 / spec.half_length();
  return {c * tip_velocity.x() + s * tip_velocity.y(), inv_half * (-s * tip_velocity.x() + c * tip_velocity.y())};
}

inline Vec2 body_to_tip_velocity(double theta, const BodyCommand& cmd, const NeedleSpec& spec) {
  const Vec2 h = heading(theta);
  return h * cmd.v + spec.half_length() * rotate90(h) * cmd.omega;
}

/// Proportional tip feedback plus path feedforward, mapped to body commands.
struct TipController {
  double gain = 0.5;  // 1/s
  NeedleSpec spec{};

  TipController() = default;
  TipController(double k, const NeedleSpec& s) : gain(k), spec(s) {
    if (!(gain > 0.0)) throw DomainError("TipController: gain must be positive");
  }

  BodyCommand operator()(const NeedleState& estimate, const PathSample& ref) const {
    const Vec2 tip_cmd = pd_tip_command(tip_of(estimate, spec), ref, gain);
    return tip_cmd_to_body(estimate.theta_rad, tip_cmd, spec);
  }

  BodyCommand operator()(const NeedleState& estimate, double t, const ReferencePath& path) const {
    return (*this)(estimate, path.eval(t));
  }
};

}  // namespace magsuture

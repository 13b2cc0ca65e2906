#pragma once

/// @file dynamics.hpp
/// @brief First-order nonholonomic needle plant and the closed-loop scenario engine.
///
///     r_dot = h v,  theta_dot = omega,  [v; omega] = g(r, theta) I
///
/// integrated with explicit Euler at the camera/control period.

#include <cmath>
#include <cstdint>
#include <exception>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "magsuture/control.hpp"
#include "magsuture/core.hpp"
#include "magsuture/localization.hpp"
#include "magsuture/magnetics.hpp"
#include "magsuture/synth_vision.hpp"

namespace magsuture {

enum class FrictionKind { None, Coulomb };

/// Optional stick-slip model: commanded speeds below the static threshold produce no
/// translation; above it the speed is multiplied by drag_scale.
struct FrictionModel {
  FrictionKind kind = FrictionKind::None;
  double v_static_threshold_mm_s = 0.3;
  double drag_scale = 1.0;

  static FrictionModel none() { return {}; }
  static FrictionModel coulomb(double threshold, double drag_scale = 1.0) {
    return {FrictionKind::Coulomb, threshold, drag_scale};
  }
};

enum class NoDetectionPolicy { HoldCurrents, ZeroCurrents };

struct SimConfig {
  double dt_s = 0.05;
  /// 0 means "duration of the reference path".
  double duration_s = 0.0;
  FrictionModel friction;
  std::uint64_t rng_seed = 0;
  DishCalibration dish = default_working_calibration();
  CoilArray coils = CoilArray::symmetric();
  NeedleSpec spec;
  DragCoefficients drag;
  AllocationOptions allocation;
  NoDetectionPolicy no_detection = NoDetectionPolicy::HoldCurrents;

  void validate() const {
    if (!(dt_s > 0.0)) throw DomainError("SimConfig: dt_s must be positive");
    if (!(duration_s >= 0.0)) throw DomainError("SimConfig: duration_s must be non-negative");
    if (friction.kind == FrictionKind::Coulomb &&
        (!(friction.v_static_threshold_mm_s >= 0.0) || !(friction.drag_scale > 0.0)))
      throw DomainError("SimConfig: invalid friction parameters");
    if (!(allocation.i_max > 0.0)) throw DomainError("SimConfig: i_max must be positive");
    dish.validate();
    spec.validate();
    drag.validate();
    coils.validate(dish.radius_mm);
  }

  /// Largest |center| that keeps the whole needle inside the dish.
  double wall_radius() const { return dish.radius_mm - spec.half_length(); }
};

struct StepResult {
  NeedleState state;
  double v = 0.0;      // realized, after friction
  double omega = 0.0;
  bool wall_contact = false;
};

/// Euler step for given body velocities.
inline StepResult step_body(const NeedleState& s, double v, double omega, const SimConfig& cfg) {
  if (!(s.center_mm.norm() <= cfg.dish.radius_mm)) throw DomainError("step: needle center outside the dish");
  if (cfg.friction.kind == FrictionKind::Coulomb) {
    v = std::abs(v) < cfg.friction.v_static_threshold_mm_s ? 0.0 : v * cfg.friction.drag_scale;
  }
  StepResult out;
  out.v = v;
  out.omega = omega;
  Vec2 c = s.center_mm + s.heading() * (v * cfg.dt_s);
  const double wall = cfg.wall_radius();
  if (c.norm() > wall) {
    c *= wall / c.norm();
    out.wall_contact = true;
  }
  out.state = NeedleState(c, s.theta_rad + omega * cfg.dt_s);
  return out;
}

/// Euler step under coil currents, with [v; omega] = g(r, theta) I at the pre-step state.
inline StepResult step(const NeedleState& s, const CurrentVector& current, const SimConfig& cfg) {
  if (!(s.center_mm.norm() <= cfg.dish.radius_mm)) throw DomainError("step: needle center outside the dish");
  const Eigen::Vector2d vw = motion_gain(s.center_mm, s.theta_rad, cfg.coils, cfg.spec, cfg.drag) * current;
  return step_body(s, vw[0], vw[1], cfg);
}

// ---------------------------------------------------------------------------
// Vision sources for the loop

/// What the controller sees in one frame.
struct Observation {
  std::optional<NeedleState> estimate;
  bool flip_corrected = false;
};

/// Ground truth, every frame.
struct PerfectVision {
  Observation operator()(const NeedleState& truth, std::uint64_t /*frame*/) const { return {truth, false}; }
};

/// Synthetic masks and bits fed through the localization pipeline.
class SyntheticVision {
 public:
  SyntheticVision(SceneGenerator scene, LocalizationSession session)
      : scene_(std::move(scene)), session_(std::move(session)) {}

  Observation operator()(const NeedleState& truth, std::uint64_t frame) {
    const SyntheticFrame f = scene_.generate(truth, frame);
    const LocalizationResult r = session_.process(f.mask, f.bits);
    if (!r.detected()) return {};
    return {r.detection->pose(), r.detection->flip_corrected};
  }

  const LocalizationSession& session() const { return session_; }

 private:
  SceneGenerator scene_;
  LocalizationSession session_;
};

// ---------------------------------------------------------------------------
// Closed loop

struct TraceRow {
  double t_s = 0.0;
  NeedleState truth;
  std::optional<NeedleState> estimate;
  bool flip_corrected = false;
  BodyCommand command;
  CurrentVector currents = CurrentVector::Zero();
  double tip_err_mm = 0.0;
  bool wall_contact = false;
  bool degraded_allocation = false;
  bool saturated = false;
};

struct SimTrace {
  std::vector<TraceRow> rows;
  /// Set when the run stopped early; rows up to the failure are kept.
  std::optional<std::string> error;

  bool complete() const { return !error.has_value(); }
};

inline NeedleState initial_state_for(const ReferencePath& path, const NeedleSpec& spec) {
  const auto& q = path.waypoints();
  const Vec2 seg = q[1] - q[0];
  return state_from_tip(q[0], std::atan2(seg.y(), seg.x()), spec);
}

inline std::size_t step_count(double duration_s, double dt_s) {
  return static_cast<std::size_t>(std::ceil(duration_s / dt_s - 1e-9)) + 1;
}

/// Localize -> control -> allocate -> actuate, once per frame.
/// The controller is any callable BodyCommand(const NeedleState& estimate, const PathSample& ref).
/// Vision is any callable Observation(const NeedleState& truth, std::uint64_t frame).
template <typename Controller, typename Vision>
SimTrace run_closed_loop(const SimConfig& cfg, const ReferencePath& path, Controller&& controller, Vision&& vision,
                         std::optional<NeedleState> initial = std::nullopt) {
  cfg.validate();
  const double duration = cfg.duration_s > 0.0 ? cfg.duration_s : path.duration();
  const std::size_t n = step_count(duration, cfg.dt_s);
  SimTrace trace;
  trace.rows.reserve(n);
  NeedleState truth = initial ? *initial : initial_state_for(path, cfg.spec);
  CurrentVector held = CurrentVector::Zero();
  BodyCommand held_cmd;
  for (std::size_t k = 0; k < n; ++k) {
    TraceRow row;
    row.t_s = static_cast<double>(k) * cfg.dt_s;
    row.truth = truth;
    try {
      const PathSample ref = path.eval(row.t_s);
      row.tip_err_mm = (tip_of(truth, cfg.spec) - ref.position).norm();
      const Observation obs = vision(truth, static_cast<std::uint64_t>(k));
      row.estimate = obs.estimate;
      row.flip_corrected = obs.flip_corrected;
      if (obs.estimate) {
        const BodyCommand cmd = controller(*obs.estimate, ref);
        const Allocation a = allocate_currents(obs.estimate->center_mm, obs.estimate->theta_rad, cmd.v, cmd.omega,
                                               cfg.coils, cfg.spec, cfg.drag, cfg.allocation);
        held = a.currents;
        held_cmd = cmd;
        row.degraded_allocation = a.degraded;
        row.saturated = a.saturated;
      } else if (cfg.no_detection == NoDetectionPolicy::ZeroCurrents) {
        held = CurrentVector::Zero();
        held_cmd = {};
      }
      row.command = held_cmd;
      row.currents = held;
      const StepResult next = step(truth, held, cfg);
      row.wall_contact = next.wall_contact;
      trace.rows.push_back(row);
      truth = next.state;
    } catch (const std::exception& e) {
      trace.rows.push_back(row);
      trace.error = "step " + std::to_string(k) + ": " + e.what();
      break;
    }
  }
  return trace;
}

inline double tip_rms(const SimTrace& trace) {
  if (trace.rows.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : trace.rows) s += r.tip_err_mm * r.tip_err_mm;
  return std::sqrt(s / static_cast<double>(trace.rows.size()));
}

}  // namespace magsuture

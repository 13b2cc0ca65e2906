#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "magsuture/control.hpp"

using namespace magsuture;

TEST(ReferencePath, Examples) {
  const ReferencePath p({Vec2(0, 0), Vec2(10, 0)}, 0.2);
  EXPECT_DOUBLE_EQ(p.duration(), 50.0);
  PathSample s = p.eval(0.0);
  EXPECT_EQ(s.position, Vec2(0, 0));
  EXPECT_NEAR((s.velocity - Vec2(0.2, 0)).norm(), 0.0, 1e-15);
  s = p.eval(25.0);
  EXPECT_NEAR((s.position - Vec2(5, 0)).norm(), 0.0, 1e-12);
  EXPECT_NEAR((s.velocity - Vec2(0.2, 0)).norm(), 0.0, 1e-15);
  s = p.eval(50.0);
  EXPECT_EQ(s.position, Vec2(10, 0));
  EXPECT_EQ(s.velocity, Vec2::Zero());
  s = p.eval(80.0);
  EXPECT_EQ(s.position, Vec2(10, 0));
  EXPECT_EQ(s.velocity, Vec2::Zero());
  EXPECT_THROW(p.eval(-1e-9), DomainError);
}

TEST(ReferencePath, RejectsBadInput) {
  EXPECT_THROW(ReferencePath({Vec2(0, 0)}), DomainError);
  EXPECT_THROW(ReferencePath({Vec2(0, 0), Vec2(0, 0)}), DomainError);
  EXPECT_THROW(ReferencePath({Vec2(0, 0), Vec2(1, 0)}, 0.0), DomainError);
}

TEST(RunningSuture, SinglePass) {
  RunningSutureParams p;
  p.passes = 1;
  const auto q = running_suture_waypoints(p);
  ASSERT_EQ(q.size(), 2u);
  EXPECT_NEAR((q[0] - Vec2(-7.5, 0.0)).norm(), 0.0, 1e-15);
  EXPECT_NEAR((q[1] - Vec2(7.5, 0.0)).norm(), 0.0, 1e-15);
}

TEST(RunningSuture, ThreePasses) {
  const RunningSutureParams p;
  EXPECT_DOUBLE_EQ(p.tissue_thickness_mm, 5.0);
  EXPECT_DOUBLE_EQ(p.v_des, 0.2);
  const auto q = running_suture_waypoints(p);
  ASSERT_EQ(q.size(), 6u);
  for (int i = 0; i < 3; ++i) {
    const Vec2 a = q[2 * i], b = q[2 * i + 1];
    EXPECT_DOUBLE_EQ(a.y(), b.y());
    // Each crossing spans the strip plus the margin on both sides.
    EXPECT_LT(std::min(a.x(), b.x()), -2.5);
    EXPECT_GT(std::max(a.x(), b.x()), 2.5);
    EXPECT_NEAR(std::abs(a.x() - b.x()), 15.0, 1e-12);
    if (i > 0) {
      EXPECT_NEAR(a.y() - q[2 * i - 1].y(), 8.0, 1e-12);
    }
  }
  // Alternating direction.
  EXPECT_LT(q[0].x(), q[1].x());
  EXPECT_GT(q[2].x(), q[3].x());
  EXPECT_LT(q[4].x(), q[5].x());
  const ReferencePath path = running_suture_path(p, 30.0);
  EXPECT_NEAR(path.length(), 61.0, 1e-12);
  EXPECT_NEAR(path.duration(), 305.0, 1e-9);
}

TEST(RunningSuture, RejectsUnsafeWaypoint) {
  RunningSutureParams p;
  p.tissue_center = Vec2(25.0, 0.0);
  try {
    running_suture_path(p, 30.75);
    FAIL() << "expected an error";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("waypoint 1"), std::string::npos) << e.what();
  }
  p = RunningSutureParams{};
  p.passes = 0;
  EXPECT_THROW(running_suture_waypoints(p), DomainError);
}

TEST(RunningSuture, ContinuityAndSpeed) {
  const ReferencePath path = running_suture_path(RunningSutureParams{}, 30.75);
  const auto& t = path.knot_times();
  const auto& q = path.waypoints();
  for (std::size_t i = 1; i + 1 < t.size(); ++i) {
    EXPECT_NEAR((path.eval(t[i]).position - q[i]).norm(), 0.0, 1e-12);
    const double before = std::nextafter(t[i], 0.0);
    EXPECT_NEAR((path.eval(before).position - q[i]).norm(), 0.0, 1e-9);
  }
  for (std::size_t i = 1; i < t.size(); ++i)
    for (double f : {0.1, 0.5, 0.9})
      EXPECT_NEAR(path.eval(t[i - 1] + f * (t[i] - t[i - 1])).velocity.norm(), 0.2, 1e-12);
}

TEST(PdTipCommand, Examples) {
  const PathSample still{Vec2(3, 4), Vec2::Zero()};
  EXPECT_EQ(pd_tip_command(Vec2(3, 4), still, 0.5), Vec2::Zero());
  const PathSample moving{Vec2(3, 4), Vec2(0.1, -0.2)};
  EXPECT_EQ(pd_tip_command(Vec2(3, 4), moving, 0.5), moving.velocity);
  const PathSample ref{Vec2(2, 0), Vec2(0.2, 0)};
  const Vec2 cmd = pd_tip_command(Vec2(0, 0), ref, 0.5);
  EXPECT_NEAR(cmd.x(), 1.2, 1e-15);
  EXPECT_NEAR(cmd.y(), 0.0, 1e-15);
}

TEST(TipMapping, Examples) {
  NeedleSpec s;
  BodyCommand c = tip_cmd_to_body(0.0, Vec2(1, 0), s);
  EXPECT_DOUBLE_EQ(c.v, 1.0);
  EXPECT_DOUBLE_EQ(c.omega, 0.0);
  s.length_mm = 2.0;
  s.width_mm = 0.5;
  c = tip_cmd_to_body(0.0, Vec2(0, 1), s);
  EXPECT_DOUBLE_EQ(c.v, 0.0);
  EXPECT_DOUBLE_EQ(c.omega, 1.0);
}

TEST(TipMapping, RoundTrip) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const NeedleSpec s;
  for (int i = 0; i < 1000; ++i) {
    const double th = kPi * u(rng);
    const Vec2 rd(u(rng), u(rng));
    const BodyCommand c = tip_cmd_to_body(th, rd, s);
    ASSERT_LT((body_to_tip_velocity(th, c, s) - rd).norm(), 1e-12);
    // Determinant of the inverse map is 1 / (l/2).
    const BodyCommand ex = tip_cmd_to_body(th, Vec2(1, 0), s), ey = tip_cmd_to_body(th, Vec2(0, 1), s);
    ASSERT_NEAR(ex.v * ey.omega - ey.v * ex.omega, 1.0 / s.half_length(), 1e-12);
  }
}

TEST(TipController, StaticTargetContraction) {
  // Kinematic tip model: the tip moves exactly as commanded.
  const NeedleSpec s;
  const TipController ctl(0.5, s);
  NeedleState st(Vec2(0, 0), 0.3);
  const Vec2 target = tip_of(st, s) + Vec2(2.0 * std::cos(1.0), 2.0 * std::sin(1.0));
  const PathSample ref{target, Vec2::Zero()};
  const double dt = 0.001;
  double prev = (tip_of(st, s) - target).norm();
  for (double t = 0; t < 10.0 / ctl.gain; t += dt) {
    const BodyCommand c = ctl(st, ref);
    const Vec2 tip = tip_of(st, s) + body_to_tip_velocity(st.theta_rad, c, s) * dt;
    st = state_from_tip(tip, st.theta_rad + c.omega * dt, s);
    const double e = (tip - target).norm();
    ASSERT_LE(e, prev + 1e-9);
    prev = e;
  }
  EXPECT_LT(prev, 0.02);
}

TEST(TipController, RejectsNonPositiveGain) { EXPECT_THROW(TipController(0.0, NeedleSpec{}), DomainError); }

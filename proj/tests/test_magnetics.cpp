#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "magsuture/magnetics.hpp"
#include "oracles.hpp"

using namespace magsuture;

namespace {

struct Sampler {
  std::mt19937_64 rng;
  explicit Sampler(std::uint64_t seed) : rng(seed) {}
  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }
  Vec2 interior(double radius = 36.0) {
    const double r = radius * std::sqrt(uniform(0.0, 1.0));
    const double a = uniform(-kPi, kPi);
    return {r * std::cos(a), r * std::sin(a)};
  }
  CurrentVector current() { return CurrentVector(uniform(-10, 10), uniform(-10, 10), uniform(-10, 10), uniform(-10, 10)); }
};

double rel(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).norm() / b.norm(); }

}  // namespace

TEST(FieldPerAmp, CenterExample) {
  const Coil c{Vec2(100.0, 0.0), 1.0};
  const Vec2 b = field_per_amp(c, Vec2::Zero());
  EXPECT_NEAR(b.x(), 2e-6, 1e-20);
  EXPECT_NEAR(b.y(), 0.0, 1e-20);
  const Coil c2{Vec2(100.0, 0.0), 2.0};
  EXPECT_NEAR(field_per_amp(c2, Vec2::Zero()).x(), 4e-6, 1e-20);
}

TEST(FieldPerAmp, MatchesPotentialGradient) {
  Sampler s(1);
  const CoilArray coils = CoilArray::symmetric();
  for (int i = 0; i < 100; ++i) {
    const Vec2 r = s.interior();
    for (const auto& c : coils.coils) {
      const Vec2 b = field_per_amp(c, r);
      ASSERT_LT(rel(b, oracle::fd_field_per_amp(c, r)), 1e-7);
    }
  }
}

TEST(FieldPerAmp, InverseCubeDecay) {
  Sampler s(2);
  const Coil c{Vec2(88.0, 0.0), 3.0};
  for (int i = 0; i < 50; ++i) {
    const double a = s.uniform(-kPi, kPi);
    const double d = s.uniform(5.0, 60.0);
    const Vec2 dir(std::cos(a), std::sin(a));
    const double near = field_per_amp(c, c.center_mm + d * dir).norm();
    const double far = field_per_amp(c, c.center_mm + 2.0 * d * dir).norm();
    ASSERT_NEAR(far / near, 0.125, 1e-9 * 0.125);
  }
}

TEST(FieldPerAmp, SingularAtCoil) {
  const Coil c{Vec2(88.0, 0.0), 1.0};
  EXPECT_THROW(field_per_amp(c, c.center_mm), SingularityError);
}

TEST(CoilGeometry, UnitVectors) {
  Sampler s(3);
  const CoilArray coils = CoilArray::symmetric();
  for (int i = 0; i < 100; ++i) {
    const Vec2 r = s.interior();
    for (const auto& c : coils.coils) {
      const CoilGeometry g = coil_geometry(c, r);
      ASSERT_GT(g.delta, 0.0);
      ASSERT_NEAR(g.d_hat.norm(), 1.0, 1e-12);
      ASSERT_NEAR(g.r_hat.norm(), 1.0, 1e-12);
    }
  }
}

TEST(Wrench, ZeroCurrent) {
  const Wrench2D w = wrench(Vec2(3, 4), 0.3, CurrentVector::Zero(), CoilArray::symmetric(), NeedleSpec{});
  EXPECT_EQ(w.force, Vec2::Zero());
  EXPECT_EQ(w.torque, 0.0);
}

TEST(Wrench, NoTorqueWhenAlignedWithField) {
  Sampler s(4);
  const CoilArray coils = CoilArray::symmetric();
  for (int i = 0; i < 50; ++i) {
    const Vec2 r = s.interior();
    const CurrentVector I = s.current();
    const Vec2 b = total_field(coils, r, I);
    const double theta = std::atan2(b.y(), b.x());
    const Wrench2D w = wrench(r, theta, I, coils, NeedleSpec{});
    ASSERT_NEAR(w.torque, 0.0, 1e-12 * b.norm());
  }
}

TEST(Wrench, MatchesFiniteDifferenceOfEnergy) {
  Sampler s(5);
  const CoilArray coils = CoilArray::symmetric();
  const NeedleSpec spec;
  for (int i = 0; i < 100; ++i) {
    const Vec2 r = s.interior();
    const double th = s.uniform(-kPi, kPi);
    const CurrentVector I = s.current();
    const Wrench2D w = wrench(r, th, I, coils, spec);
    ASSERT_LT(rel(w.force, oracle::fd_force(coils, spec, r, th, I)), 1e-5);
    const double fd_tau = oracle::fd_torque(coils, spec, r, th, I);
    ASSERT_NEAR(w.torque, fd_tau, 1e-6 * std::abs(fd_tau) + 1e-18);
  }
}

TEST(Wrench, LinearInCurrent) {
  Sampler s(6);
  const CoilArray coils = CoilArray::symmetric();
  const NeedleSpec spec;
  for (int i = 0; i < 100; ++i) {
    const Vec2 r = s.interior();
    const double th = s.uniform(-kPi, kPi);
    const CurrentVector i1 = s.current(), i2 = s.current();
    const double a = s.uniform(-2, 2), b = s.uniform(-2, 2);
    const Wrench2D w = wrench(r, th, a * i1 + b * i2, coils, spec);
    const Wrench2D w1 = wrench(r, th, i1, coils, spec), w2 = wrench(r, th, i2, coils, spec);
    const Vec2 f = a * w1.force + b * w2.force;
    const double tau = a * w1.torque + b * w2.torque;
    const double fscale = std::abs(a) * w1.force.norm() + std::abs(b) * w2.force.norm();
    const double tscale = std::abs(a * w1.torque) + std::abs(b * w2.torque);
    ASSERT_LE((w.force - f).norm(), 1e-12 * fscale);
    ASSERT_LE(std::abs(w.torque - tau), 1e-12 * tscale);
    const MotionGain g = motion_gain(r, th, coils, spec, DragCoefficients{});
    const Eigen::Vector2d lhs = g * (a * i1 + b * i2);
    const Eigen::Vector2d rhs = a * (g * i1) + b * (g * i2);
    ASSERT_LE((lhs - rhs).norm(), 1e-12 * (std::abs(a) * (g * i1).norm() + std::abs(b) * (g * i2).norm()));
  }
}

TEST(MotionGain, ZeroCurrentGivesZeroMotion) {
  const MotionGain g = motion_gain(Vec2(1, 2), 0.5, CoilArray::symmetric(), NeedleSpec{}, DragCoefficients{});
  EXPECT_EQ(g * CurrentVector::Zero(), Eigen::Vector2d::Zero());
}

TEST(MotionGain, MatchesWrenchColumns) {
  Sampler s(7);
  const CoilArray coils = CoilArray::symmetric();
  NeedleSpec spec;
  spec.magnetic_moment = 1.7;
  const DragCoefficients drag{2.5, 0.4};
  for (int i = 0; i < 100; ++i) {
    const Vec2 r = s.interior();
    const double th = s.uniform(-kPi, kPi);
    const MotionGain g = motion_gain(r, th, coils, spec, drag);
    for (int k = 0; k < 4; ++k) {
      CurrentVector unit = CurrentVector::Zero();
      unit[k] = 1.0;
      const Wrench2D w = wrench(r, th, unit, coils, spec);
      const double v = heading(th).dot(w.force) / drag.c_t;
      const double om = w.torque / drag.c_r;
      ASSERT_NEAR(g(0, k), v, 1e-9 * std::max(std::abs(v), g.row(0).norm()));
      ASSERT_NEAR(g(1, k), om, 1e-9 * std::max(std::abs(om), g.row(1).norm()));
    }
  }
}

TEST(MotionGain, RowsMatchFiniteDifferences) {
  Sampler s(8);
  const CoilArray coils = CoilArray::symmetric();
  const NeedleSpec spec;
  const DragCoefficients drag;
  for (int i = 0; i < 100; ++i) {
    const Vec2 r = s.interior();
    const double th = s.uniform(-kPi, kPi);
    const MotionGain g = motion_gain(r, th, coils, spec, drag);
    const MotionGain fd = oracle::fd_motion_gain(coils, spec, drag, r, th);
    ASSERT_LT(rel(g.row(0).transpose(), fd.row(0).transpose()), 1e-5);
    ASSERT_LT(rel(g.row(1).transpose(), fd.row(1).transpose()), 1e-6);
  }
}

TEST(Allocation, ZeroCommand) {
  const Allocation a = allocate_currents(Vec2(2, -3), 1.0, 0.0, 0.0, CoilArray::symmetric(), NeedleSpec{},
                                         DragCoefficients{});
  EXPECT_EQ(a.currents, CurrentVector::Zero());
  EXPECT_FALSE(a.saturated);
}

TEST(Allocation, RoundTripWithoutDamping) {
  Sampler s(9);
  const CoilArray coils = CoilArray::symmetric();
  AllocationOptions opt;
  opt.lambda = 0.0;
  opt.i_max = 1e300;
  int tested = 0;
  while (tested < 1000) {
    const Vec2 r = s.interior();
    const double th = s.uniform(-kPi, kPi);
    const MotionGain g = motion_gain(r, th, coils, NeedleSpec{}, DragCoefficients{});
    if (spd_condition(g * g.transpose()) >= 1e6) continue;
    const Eigen::Vector2d cmd(s.uniform(-1, 1), s.uniform(-0.1, 0.1));
    const Allocation a = allocate_currents(g, cmd[0], cmd[1], opt);
    ASSERT_LE((g * a.currents - cmd).norm(), 1e-9 * cmd.norm());
    ++tested;
  }
}

TEST(Allocation, SaturationHalvesAndPreservesDirection) {
  const CoilArray coils = CoilArray::symmetric();
  const Vec2 r(4.0, -2.0);
  const double th = 0.4;
  const MotionGain g = motion_gain(r, th, coils, NeedleSpec{}, DragCoefficients{});
  AllocationOptions unlimited;
  unlimited.i_max = 1e300;
  const Eigen::Vector2d dir(0.3, 0.02);
  const Allocation probe = allocate_currents(g, dir[0], dir[1], unlimited);
  const double scale = 20.0 / probe.currents.cwiseAbs().maxCoeff();
  const Eigen::Vector2d cmd = scale * dir;
  const Allocation free = allocate_currents(g, cmd[0], cmd[1], unlimited);
  ASSERT_NEAR(free.currents.cwiseAbs().maxCoeff(), 20.0, 1e-9);
  const Allocation a = allocate_currents(g, cmd[0], cmd[1], AllocationOptions{});
  EXPECT_TRUE(a.saturated);
  EXPECT_NEAR(a.scale, 0.5, 1e-12);
  EXPECT_LE((a.currents - 0.5 * free.currents).norm(), 1e-12 * free.currents.norm());
  EXPECT_NEAR(a.currents.cwiseAbs().maxCoeff(), 10.0, 1e-12);
  const Eigen::Vector2d realized = g * a.currents;
  const double ang = std::atan2(realized.x() * cmd.y() - realized.y() * cmd.x(), realized.dot(cmd));
  EXPECT_LE(std::abs(ang), 1e-9);
}

TEST(Allocation, DegradedFlagOnSingularGain) {
  MotionGain g = MotionGain::Zero();
  g.row(0) << 1.0, 2.0, 3.0, 4.0;
  g.row(1) = 2.0 * g.row(0);
  const Allocation a = allocate_currents(g, 1.0, 2.0);
  EXPECT_TRUE(a.degraded);
  EXPECT_TRUE(a.currents.allFinite());
  // Consistent command on the rank-1 image is still met in the least-squares sense.
  EXPECT_LE((g * a.currents - Eigen::Vector2d(1.0, 2.0)).norm(), 1e-6);
}

TEST(Allocation, EveryCurrentWithinLimit) {
  Sampler s(10);
  const CoilArray coils = CoilArray::symmetric();
  for (int i = 0; i < 500; ++i) {
    const Allocation a = allocate_currents(s.interior(), s.uniform(-kPi, kPi), s.uniform(-50, 50), s.uniform(-5, 5),
                                           coils, NeedleSpec{}, DragCoefficients{});
    ASSERT_LE(a.currents.cwiseAbs().maxCoeff(), 10.0 + 1e-12);
  }
}

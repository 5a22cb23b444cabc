#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "morseflow/levelmap.h"
#include "morseflow/problem.h"

using namespace morseflow;

namespace {

const std::vector<std::string> X = {"x"};
const std::vector<std::string> XY = {"x", "y"};
const std::vector<std::string> XYZ = {"x", "y", "z"};

const Objective &saddle() {
  static const Objective f(parse_polynomial("x^2 - y^2", XY));
  return f;
}

SingularSpace r2(double half = 2) { return SingularSpace::ambient(XY, {{-half, half}, {-half, half}}); }

CriticalPoint origin(Eigen::Index n, PointKind kind) {
  CriticalPoint cp;
  cp.location = Vector::Zero(n);
  cp.kind = kind;
  return cp;
}

// Points on y^2 - x^2 = -level (level < 0) parametrised by s.
Vector hyperbola_point(double level, double s, double sign) {
  const double k = std::sqrt(-level);
  return Vector{{k * std::sinh(s), sign * k * std::cosh(s)}};
}

}  // namespace

TEST(LevelMap, SaddleImageFromConservedProduct) {
  const Vector src{{1e-3, std::sqrt(0.01 + 1e-6)}};
  const LevelSetMap m = level_map(saddle(), r2(), -0.01, 0.01, {src});
  ASSERT_EQ(m.pairs.size(), 1u);
  ASSERT_EQ(m.pairs[0].status, PairStatus::landed);
  const double k = src[0] * src[1];
  const double x = std::sqrt((0.01 + std::sqrt(1e-4 + 4 * k * k)) / 2);
  EXPECT_NEAR(m.pairs[0].image[0], x, 1e-8);
  EXPECT_NEAR(m.pairs[0].image[1], k / x, 1e-8);
  EXPECT_NEAR(m.pairs[0].image[0], 0.1, 1e-4);
  EXPECT_NEAR(m.pairs[0].image[1], 1e-3, 1e-5);
  EXPECT_EQ(m.trajectories.size(), 1u);
}

TEST(LevelMap, EqualLevelsIsIdentity) {
  const Vector src = hyperbola_point(-0.01, 0.4, 1);
  const LevelSetMap m = level_map(saddle(), r2(), -0.01, -0.01, {src});
  EXPECT_EQ(m.pairs[0].image, src);
  EXPECT_EQ(m.pairs[0].status, PairStatus::landed);
  EXPECT_EQ(roundtrip_error(saddle(), r2(), -0.01, -0.01, {src}), 0.0);
}

TEST(LevelMap, UnstableSetIsCapturedAtCriticalLevel) {
  const std::vector<CriticalPoint> cps = {origin(2, PointKind::saddle)};
  const LevelSetMap m =
      level_map(saddle(), r2(), -0.01, 0.0, {Vector{{0.0, 0.1}}, Vector{{0.0, -0.1}}}, &cps);
  for (const LevelPair &p : m.pairs) {
    EXPECT_EQ(p.status, PairStatus::captured);
    EXPECT_EQ(p.critical_index, 0);
    EXPECT_LT(p.image.norm(), 1e-4);
  }
}

TEST(LevelMap, RejectsSourcesOffLevel) {
  EXPECT_THROW(level_map(saddle(), r2(), -0.01, 0.01, {Vector{{0.0, 0.2}}}),
               std::invalid_argument);
}

TEST(Roundtrip, RegularBandIsReversible) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> s(-2.0, 2.0);
  std::vector<Vector> sources;
  for (int i = 0; i < 50; ++i) sources.push_back(hyperbola_point(-0.01, s(rng), i % 2 ? 1 : -1));
  EXPECT_LT(roundtrip_error(saddle(), r2(), -0.01, -0.005, sources), 1e-6);
}

TEST(Roundtrip, CriticalBandStillReports) {
  // sources near the unstable set pass close to the saddle on the way up
  const std::vector<Vector> sources = {hyperbola_point(-0.01, 1e-7, 1),
                                       hyperbola_point(-0.01, 0.5, 1)};
  const double err = roundtrip_error(saddle(), r2(), -0.01, 0.01, sources);
  EXPECT_TRUE(std::isfinite(err));
}

TEST(Slice, SaddleUnstableAxis) {
  const UnstableSlice sl = unstable_slice(saddle(), r2(), origin(2, PointKind::saddle), -0.01);
  ASSERT_EQ(sl.points.size(), 2u);
  for (const Vector &p : sl.points) {
    EXPECT_LT(std::abs(p[0]), 1e-4);
    EXPECT_NEAR(std::abs(p[1]), 0.1, 1e-6);
  }
  EXPECT_GT(sl.points[0][1] * sl.points[1][1], -1.0);
  EXPECT_LT(sl.points[0][1] * sl.points[1][1], 0.0);
  EXPECT_GT(sl.n_descending, 0);
}

TEST(Slice, ConeGenerators) {
  const Objective f(parse_polynomial("x", XYZ));
  const SingularSpace cone(PolynomialSystem(XYZ, {parse_polynomial("x^2 + y^2 - z^2", XYZ)}),
                           {{-2, 2}, {-2, 2}, {-2, 2}});
  CriticalPoint cp = origin(3, PointKind::saddle);
  cp.singular = true;
  const UnstableSlice sl = unstable_slice(f, cone, cp, -0.1);
  ASSERT_FALSE(sl.points.empty());
  // the generators (-s, 0, +-s) are flow lines: the projected gradient of x
  // at (-s, 0, s) is (1/2, 0, -1/2), tangent to the generator
  const Vector g = riemannian_grad(f, cone, Vector{{-0.05, 0.0, 0.05}});
  EXPECT_NEAR(g[0], 0.5, 1e-12);
  EXPECT_NEAR(g[2], -0.5, 1e-12);
  for (const Vector &p : sl.points) {
    EXPECT_NEAR(p[0], -0.1, 1e-9);
    EXPECT_LT(cone.residual(p), 1e-9);
    EXPECT_LT(std::abs(p[1]), 1e-3);
    EXPECT_NEAR(std::abs(p[2]), 0.1, 1e-3);
  }
}

TEST(Slice, RefusesMinimum) {
  const Objective f(parse_polynomial("x^2 + y^2", XY));
  EXPECT_THROW(unstable_slice(f, r2(), origin(2, PointKind::minimum), -0.01),
               std::invalid_argument);
}

TEST(Condition2, BenchmarksPass) {
  for (const std::string name : {"saddle", "quartic"}) {
    const ProblemSpec spec = benchmark(name);
    Condition2Options o;
    o.n_samples = 60;
    const ConditionReport r =
        check_condition2(make_objective(spec), make_space(spec), -1.0, 1.0, o);
    EXPECT_EQ(r.condition, 2);
    EXPECT_EQ(r.verdict, Verdict::pass) << name << ": " << r.message;
    EXPECT_EQ(r.witnesses.at("n_inconclusive"), 0.0);
  }
}

TEST(Condition2, EmptyBandIsVacuous) {
  const ConditionReport r = check_condition2(saddle(), r2(), 10.0, 11.0);
  EXPECT_EQ(r.verdict, Verdict::pass);
  EXPECT_NE(r.message.find("vacuous"), std::string::npos);
}

TEST(Condition2, FlowsLeavingTheBoxAreInconclusive) {
  const Objective f(parse_polynomial("x", X));
  const SingularSpace line = SingularSpace::ambient(X, {{-1, 1}});
  Condition2Options o;
  o.n_samples = 20;
  const ConditionReport r = check_condition2(f, line, -5.0, 5.0, o);
  EXPECT_EQ(r.verdict, Verdict::inconclusive);
  EXPECT_GT(r.witnesses.at("n_inconclusive"), 0.0);
}

TEST(Condition2, RejectsEmptyInterval) {
  EXPECT_THROW(check_condition2(saddle(), r2(), 1.0, 1.0), std::invalid_argument);
}

TEST(Condition4, SaddleModulusAndInvariant) {
  const CriticalPoint cp = origin(2, PointKind::saddle);
  const double eps = 0.01;
  const UnstableSlice sl = unstable_slice(saddle(), r2(), cp, -eps);
  Condition4Trace trace;
  const ConditionReport r = check_condition4(saddle(), r2(), cp, eps, sl, {}, &trace);
  EXPECT_EQ(r.verdict, Verdict::pass) << r.message;
  ASSERT_EQ(r.modulus_table.size(), 4u);
  for (std::size_t i = 1; i < 4; ++i) {
    EXPECT_LE(r.modulus_table[i].d, r.modulus_table[i - 1].d * 1.1);
  }
  ASSERT_EQ(trace.maps.size(), 4u);
  for (std::size_t i = 0; i < trace.maps.size(); ++i) {
    double worst = 0.0;
    for (const LevelPair &p : trace.maps[i].pairs) {
      if (p.status != PairStatus::landed) continue;
      EXPECT_NEAR(p.image[0] * p.image[1], p.source[0] * p.source[1], 1e-8);
      // distance to the slice point (0, +-sqrt(eps)) from xy = k on the level
      const double k = p.source[0] * p.source[1];
      const double y = std::sqrt((eps + std::sqrt(eps * eps + 4 * k * k)) / 2);
      worst = std::max(worst, std::hypot(k / y, y - std::sqrt(eps)));
    }
    EXPECT_NEAR(r.modulus_table[i].d, worst, 1e-7);
  }
}

TEST(Condition4, ConePasses) {
  const Objective f(parse_polynomial("x", XYZ));
  const SingularSpace cone(PolynomialSystem(XYZ, {parse_polynomial("x^2 + y^2 - z^2", XYZ)}),
                           {{-2, 2}, {-2, 2}, {-2, 2}});
  CriticalPoint cp = origin(3, PointKind::saddle);
  cp.singular = true;
  const UnstableSlice sl = unstable_slice(f, cone, cp, -0.01);
  const ConditionReport r = check_condition4(f, cone, cp, 0.01, sl);
  EXPECT_EQ(r.verdict, Verdict::pass) << r.message;
}

TEST(Condition4, HugeRadiusFails) {
  const CriticalPoint cp = origin(2, PointKind::saddle);
  const SingularSpace big = r2(5);
  const UnstableSlice sl = unstable_slice(saddle(), big, cp, -0.01);
  Condition4Options o;
  o.radii = {1.5};
  const ConditionReport r = check_condition4(saddle(), big, cp, 0.01, sl, o);
  EXPECT_EQ(r.verdict, Verdict::fail);
  EXPECT_GT(r.modulus_table[0].d, o.tube_rho);
}

TEST(Condition4, ArgumentChecks) {
  const CriticalPoint cp = origin(2, PointKind::saddle);
  const UnstableSlice sl = unstable_slice(saddle(), r2(), cp, -0.01);
  Condition4Options o;
  o.radii = {0.01, 0.1};
  EXPECT_THROW(check_condition4(saddle(), r2(), cp, 0.01, sl, o), std::invalid_argument);
  EXPECT_THROW(check_condition4(saddle(), r2(), cp, 0.0, sl), std::invalid_argument);
  EXPECT_THROW(check_condition4(saddle(), r2(), origin(2, PointKind::minimum), 0.01, sl),
               std::invalid_argument);
}

#include <gtest/gtest.h>

#include <cmath>

#include "morseflow/lojasiewicz.h"

using namespace morseflow;

namespace {

const std::vector<std::string> X = {"x"};
const std::vector<std::string> XY = {"x", "y"};
const std::vector<std::string> XYZ = {"x", "y", "z"};

CriticalPoint origin(Eigen::Index n, PointKind kind) {
  CriticalPoint cp;
  cp.location = Vector::Zero(n);
  cp.kind = kind;
  return cp;
}

LojasiewiczFit make_fit(double C, double theta, double delta) {
  LojasiewiczFit fit;
  fit.constant_C = C;
  fit.theta = theta;
  fit.radius_delta = delta;
  return fit;
}

}  // namespace

TEST(SampleNear, PointsInBallOnZOffLevel) {
  const Objective f(parse_polynomial("x", XYZ));
  const SingularSpace cone(PolynomialSystem(XYZ, {parse_polynomial("x^2 + y^2 - z^2", XYZ)}),
                           {{-2, 2}, {-2, 2}, {-2, 2}});
  const CriticalPoint cp = origin(3, PointKind::saddle);
  const auto pts = sample_near(f, cone, cp, 0.3, 500, 17);
  EXPECT_EQ(pts.size(), 500u);
  for (const Vector &p : pts) {
    EXPECT_LT(p.norm(), 0.3);
    EXPECT_TRUE(cone.is_member(p));
    EXPECT_GT(std::abs(f.value(p)), 1e-14);
  }
  EXPECT_EQ(sample_near(f, cone, cp, 0.3, 50, 17), sample_near(f, cone, cp, 0.3, 50, 17));
}

// |grad f| = 2 |f|^(1/2) exactly for f = x^2 + y^2.
TEST(EstimateFit, ParaboloidRecoversClosedForm) {
  const Objective f(parse_polynomial("x^2 + y^2", XY));
  const SingularSpace s = SingularSpace::ambient(XY, {{-2, 2}, {-2, 2}});
  const CriticalPoint cp = origin(2, PointKind::minimum);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    FitOptions o;
    o.seed = seed;
    const LojasiewiczFit fit = estimate_fit(f, s, cp, o);
    EXPECT_NEAR(fit.theta, 0.5, 1e-6);
    EXPECT_NEAR(fit.constant_C, 2.0, 1e-5);
    EXPECT_LT(fit.envelope_slack, 0.05);
    EXPECT_GE(fit.n_samples, o.min_samples);
    EXPECT_NEAR(holdout_pass_fraction(f, s, cp, fit, 500, seed + 100), 1.0, 1e-12);
  }
}

// |f'| = 4 |x|^3 = 4 |f|^(3/4) for f = x^4.
TEST(EstimateFit, QuarticRecoversClosedForm) {
  const Objective f(parse_polynomial("x^4", X));
  const SingularSpace s = SingularSpace::ambient(X, {{-2, 2}});
  FitOptions o;
  o.seed = 3;
  const LojasiewiczFit fit = estimate_fit(f, s, origin(1, PointKind::minimum), o);
  EXPECT_NEAR(fit.theta, 0.25, 1e-6);
  EXPECT_NEAR(fit.constant_C, 4.0, 1e-4);
}

// On the saddle 4(x^2 + y^2) >= 4|x^2 - y^2|, so |grad f| >= 2 |f|^(1/2) with
// equality on the axes; the lower envelope is theta = 1/2, C = 2.
TEST(EstimateFit, SaddleEnvelope) {
  const Objective f(parse_polynomial("x^2 - y^2", XY));
  const SingularSpace s = SingularSpace::ambient(XY, {{-2, 2}, {-2, 2}});
  const CriticalPoint cp = origin(2, PointKind::saddle);
  FitOptions o;
  o.radius = 0.3;
  o.seed = 5;
  const LojasiewiczFit fit = estimate_fit(f, s, cp, o);
  EXPECT_NEAR(fit.theta, 0.5, 0.02);
  EXPECT_NEAR(fit.constant_C, 2.0, 0.1);
  EXPECT_LT(fit.envelope_slack, 0.05);
  for (const Vector &y : sample_near(f, s, cp, 0.3, 300, 9)) {
    EXPECT_GE(f.gradient(y).norm(), 2 * std::sqrt(std::abs(f.value(y))) * (1 - 1e-12));
  }
}

// On the cone the projected gradient of x has norm in [1/sqrt 2, 1], so the
// exponent is 1 and outside the accepted range.
TEST(EstimateFit, ConeVertexExponentIsOne) {
  const Objective f(parse_polynomial("x", XYZ));
  const SingularSpace cone(PolynomialSystem(XYZ, {parse_polynomial("x^2 + y^2 - z^2", XYZ)}),
                           {{-2, 2}, {-2, 2}, {-2, 2}});
  const CriticalPoint cp = origin(3, PointKind::saddle);
  for (const Vector &y : sample_near(f, cone, cp, 0.5, 200, 4)) {
    const double g = riemannian_grad(f, cone, y).norm();
    EXPECT_GE(g, std::sqrt(0.5) - 1e-9);
    EXPECT_LE(g, 1.0 + 1e-9);
  }
  EXPECT_THROW(estimate_fit(f, cone, cp), FitError);
}

TEST(EstimateFit, TooFewSamples) {
  const Objective f(parse_polynomial("x^2 + y^2", XY));
  const SingularSpace s = SingularSpace::ambient(XY, {{-2, 2}, {-2, 2}});
  FitOptions o;
  o.n_samples = 20;
  EXPECT_THROW(estimate_fit(f, s, origin(2, PointKind::minimum), o), FitError);
}

TEST(ChooseEpsilon, Examples) {
  EXPECT_NEAR(choose_epsilon(make_fit(2, 0.5, 0.2), 1.0), 0.01, 1e-15);
  EXPECT_EQ(choose_epsilon(make_fit(2, 0.5, 0.2), 0.0), 0.0);
  EXPECT_NEAR(choose_epsilon(make_fit(3, 1.0, 0.2), 0.4), 0.4 * 3 * 0.2 / 2, 1e-15);
  EXPECT_THROW(choose_epsilon(make_fit(2, 0.5, 0.2), 1.0, 0.005), std::domain_error);
  EXPECT_THROW(choose_epsilon(make_fit(2, 0.5, 0.2), 1.5), std::invalid_argument);
}

TEST(LengthBound, Examples) {
  EXPECT_NEAR(length_bound(make_fit(2, 0.5, 0.2), 0.01), 0.1, 1e-15);
  EXPECT_NEAR(length_bound(make_fit(4, 0.25, 0.2), 1e-4), 0.1, 1e-15);
  EXPECT_EQ(length_bound(make_fit(2, 0.5, 0.2), 0.0), 0.0);
  // the epsilon rule keeps the bound at half the radius when safety is 1
  for (double theta : {0.2, 0.5, 0.8}) {
    const LojasiewiczFit fit = make_fit(1.7, theta, 0.3);
    EXPECT_NEAR(length_bound(fit, choose_epsilon(fit, 1.0)), 0.15, 1e-12);
  }
}

TEST(DefaultDelta, HalfDistanceAndCaps) {
  const SingularSpace s = SingularSpace::ambient(XY, {{-2, 2}, {-2, 2}});
  CriticalPoint a = origin(2, PointKind::saddle), b = a;
  b.location = Vector{{0.6, 0.0}};
  EXPECT_DOUBLE_EQ(default_delta(s, a, {a, b}), 0.3);
  EXPECT_DOUBLE_EQ(default_delta(s, a, {a}), 0.5);
  EXPECT_DOUBLE_EQ(default_delta(s, a, {a}, 2.5), 2.0);
}

TEST(VerifyFlow, SaddleDiagonalStarts) {
  const Objective f(parse_polynomial("x^2 - y^2", XY));
  const SingularSpace s = SingularSpace::ambient(XY, {{-2, 2}, {-2, 2}});
  const CriticalPoint cp = origin(2, PointKind::saddle);
  const LojasiewiczFit fit = make_fit(2.0, 0.5, 0.2);
  const double eps = choose_epsilon(fit, 0.5);
  const double a = 0.01 / std::sqrt(2.0);
  const std::vector<Vector> starts = {Vector{{a, a}}, Vector{{-a, a}}, Vector{{a, -a}},
                                      Vector{{-a, -a}}};
  const FlowEstimateReport r = verify_flow_estimates(f, s, cp, fit, eps, starts);
  EXPECT_EQ(r.n_landed, 4);
  EXPECT_GT(r.interior_samples, 0);
  EXPECT_EQ(r.check_i_fraction, 1.0);
  EXPECT_EQ(r.check_ii_fraction, 1.0);
  EXPECT_EQ(r.check_iii_fraction, 1.0);
  EXPECT_TRUE(r.total_arc_within_bound);
  EXPECT_NEAR(r.length_bound, std::sqrt(0.005), 1e-12);
  // Closed form along xy = k: y^2 - x^2 grows to eps, so the landing point
  // solves xy = a^2, y^2 - x^2 = eps.
  const double y2 = (eps + std::sqrt(eps * eps + 4 * a * a * a * a)) / 2;
  for (const FlowTrajectory &t : r.trajectories) {
    EXPECT_NEAR(std::abs(t.back().y[1]), std::sqrt(y2), 1e-8);
  }
}

TEST(VerifyFlow, RefusesMinimaAndBadStarts) {
  const Objective q(parse_polynomial("x^4", X));
  const SingularSpace line = SingularSpace::ambient(X, {{-2, 2}});
  EXPECT_THROW(verify_flow_estimates(q, line, origin(1, PointKind::minimum),
                                     make_fit(4, 0.25, 0.5), 1e-4, {}),
               std::invalid_argument);
  const Objective f(parse_polynomial("x^2 - y^2", XY));
  const SingularSpace s = SingularSpace::ambient(XY, {{-2, 2}, {-2, 2}});
  const CriticalPoint cp = origin(2, PointKind::saddle);
  EXPECT_THROW(verify_flow_estimates(f, s, cp, make_fit(2, 0.5, 0.2), 0.01, {Vector::Zero(2)}),
               std::invalid_argument);
  EXPECT_THROW(verify_flow_estimates(f, s, cp, make_fit(2, 0.5, 0.2), 0.01,
                                     {Vector{{0.1, 0.0}}}),
               std::invalid_argument);
}

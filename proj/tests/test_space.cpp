#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "morseflow/space.h"

using namespace morseflow;

namespace {

const std::vector<std::string> XY = {"x", "y"};
const std::vector<std::string> XYZ = {"x", "y", "z"};

SingularSpace planes() {
  return SingularSpace(PolynomialSystem(XY, {parse_polynomial("x*y", XY)}),
                       {{-2, 2}, {-2, 2}});
}

SingularSpace cone(double half = 10) {
  return SingularSpace(
      PolynomialSystem(XYZ, {parse_polynomial("x^2 + y^2 - z^2", XYZ)}),
      {{-half, half}, {-half, half}, {-half, half}});
}

SingularSpace plane_r2() { return SingularSpace::ambient(XY, {{-2, 2}, {-2, 2}}); }

}  // namespace

TEST(Residual, Examples) {
  EXPECT_EQ(planes().residual(Vector{{1.0, 0.0}}), 0.0);
  EXPECT_DOUBLE_EQ(planes().residual(Vector{{1.0, 1.0}}), 1.0);
  EXPECT_EQ(plane_r2().residual(Vector{{0.3, -1.0}}), 0.0);
}

TEST(Membership, Examples) {
  const SingularSpace c = cone();
  EXPECT_TRUE(c.is_member(Vector{{3.0, 4.0, 5.0}}, 1e-9));
  EXPECT_FALSE(c.is_member(Vector{{1.0, 1.0, 1.0}}, 1e-9));
  EXPECT_FALSE(cone(2).is_member(Vector{{3.0, 4.0, 5.0}}, 1e-9));
  EXPECT_FALSE(plane_r2().is_member(Vector{{2.5, 0.0}}));
}

TEST(TangentProject, Examples) {
  const Vector v{{0.7, -1.9}};
  const Vector p = planes().tangent_project(Vector{{1.0, 0.0}}, v);
  EXPECT_NEAR(p[0], 0.7, 1e-15);
  EXPECT_NEAR(p[1], 0.0, 1e-15);
  EXPECT_EQ(plane_r2().tangent_project(Vector{{1.0, 0.0}}, v), v);
  const Vector w{{0.3, -0.2, 1.1}};
  EXPECT_LT((cone().tangent_project(Vector::Zero(3), w) - w).norm(), 1e-15);
}

TEST(TangentProject, IdempotentAndOrthogonal) {
  const SingularSpace c = cone();
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01;
  for (int k = 0; k < 200; ++k) {
    // point on the cone: (r cos t, r sin t, +-r)
    const double r = 0.1 + std::abs(n01(rng)), t = n01(rng);
    const Vector x{{r * std::cos(t), r * std::sin(t), (k % 2 ? r : -r)}};
    const Vector v{{n01(rng), n01(rng), n01(rng)}};
    const Vector p = c.tangent_project(x, v);
    EXPECT_LT((c.tangent_project(x, p) - p).norm(), 1e-12);
    // closed-form projector I - n n^T / |n|^2 with n = (2x, 2y, -2z)
    const Vector nrm{{2 * x[0], 2 * x[1], -2 * x[2]}};
    const Vector oracle = v - nrm * (nrm.dot(v) / nrm.squaredNorm());
    EXPECT_LT((p - oracle).norm(), 1e-12);
    EXPECT_LT(std::abs(nrm.dot(p)), 1e-12 * nrm.norm());
  }
}

TEST(Rank, ConeAndPlanes) {
  const SingularSpace c = cone();
  EXPECT_EQ(c.generic_rank(), 1);
  EXPECT_EQ(c.jacobian_rank(Vector{{3.0, 4.0, 5.0}}), 1);
  EXPECT_EQ(c.jacobian_rank(Vector::Zero(3)), 0);
  EXPECT_EQ(planes().jacobian_rank(Vector::Zero(2)), 0);
  EXPECT_EQ(plane_r2().generic_rank(), 0);
  const Matrix B = c.normal_basis(Vector{{3.0, 4.0, 5.0}});
  ASSERT_EQ(B.cols(), 1);
  EXPECT_NEAR(B.col(0).norm(), 1.0, 1e-14);
}

TEST(SingularPoints, LocatedAtOrigins) {
  for (const SingularSpace &s : {planes(), cone(2)}) {
    ASSERT_EQ(s.singular_points().size(), 1u);
    EXPECT_LT(s.singular_points()[0].norm(), 1e-8);
  }
  EXPECT_TRUE(plane_r2().singular_points().empty());
}

TEST(Retract, FixedPointsAndIdentity) {
  const Vector on{{3.0, 4.0, 5.0}};
  EXPECT_LT((cone().retract(on) - on).norm(), 1e-15);
  const Vector q{{0.4, -1.3}};
  EXPECT_EQ(plane_r2().retract(q), q);
}

TEST(Retract, ConeMatchesIndependentGaussNewton) {
  const SingularSpace c = cone();
  const Vector x0{{3.0, 4.0, 5.0 + 1e-6}};
  const Vector r = c.retract(x0);
  EXPECT_LT(c.residual(r), 1e-12);
  EXPECT_LT((r - x0).norm(), 1e-5);
  // minimum-norm Gauss-Newton on the single constraint, written out by hand
  Vector y = x0;
  for (int it = 0; it < 20; ++it) {
    const double g = y[0] * y[0] + y[1] * y[1] - y[2] * y[2];
    const Vector n{{2 * y[0], 2 * y[1], -2 * y[2]}};
    y -= n * (g / n.squaredNorm());
  }
  EXPECT_LT((r - y).norm(), 1e-12);
}

TEST(Retract, OutsideCaptureThrows) {
  EXPECT_THROW(cone().retract(Vector{{0.0, 0.0, 5.0}}), RetractionError);
}

TEST(RiemannianGrad, Examples) {
  const Objective f(parse_polynomial("x^2 - y^2", XY));
  const Vector g = riemannian_grad(f, plane_r2(), Vector{{1.0, 1.0}});
  EXPECT_NEAR(g[0], 2.0, 1e-15);
  EXPECT_NEAR(g[1], -2.0, 1e-15);
  const Vector h = riemannian_grad(f, planes(), Vector{{0.0, 0.5}});
  EXPECT_NEAR(h[0], 0.0, 1e-15);
  EXPECT_NEAR(h[1], -1.0, 1e-15);
  EXPECT_LT(riemannian_grad(f, plane_r2(), Vector::Zero(2)).norm(), 1e-15);
}

TEST(ProjectToLevel, SaddleLandsOnDiagonal) {
  const Objective f(parse_polynomial("x^2 - y^2", XY));
  const Vector p = plane_r2().project_to_level_set(f, Vector{{1.0, 1.01}}, 0.0);
  EXPECT_LT(std::abs(f.value(p)), 1e-10);
  EXPECT_NEAR(std::abs(p[0]), std::abs(p[1]), 1e-10);
  EXPECT_LT((p - Vector{{1.0, 1.01}}).norm(), 0.02);
  const Vector q{{1.0, 1.0}};
  EXPECT_LT((plane_r2().project_to_level_set(f, q, 0.0) - q).norm(), 1e-15);
}

TEST(ProjectToLevel, ConeWithLinearObjective) {
  const Objective f(parse_polynomial("x", XYZ));
  const SingularSpace c = cone();
  const Vector p = c.project_to_level_set(f, Vector{{1.0, 0.0, 1.001}}, 1.0);
  EXPECT_NEAR(p[0], 1.0, 1e-10);
  EXPECT_LT(c.residual(p), 1e-10);
  // the nearest such point has y = 0, |z| = 1
  EXPECT_NEAR(std::abs(p[2]), std::sqrt(1.0 + p[1] * p[1]), 1e-9);
}

TEST(Box, GridAndMargins) {
  const auto grid = box_grid({{-1, 1}, {0, 2}}, 3);
  ASSERT_EQ(grid.size(), 9u);
  EXPECT_EQ(grid.front(), (Vector{{-1.0, 0.0}}));
  EXPECT_EQ(grid.back(), (Vector{{1.0, 2.0}}));
  const SingularSpace s = plane_r2();
  EXPECT_DOUBLE_EQ(s.box_diameter(), std::sqrt(32.0));
  EXPECT_DOUBLE_EQ(s.box_margin(Vector{{1.5, 0.0}}), 0.5);
  EXPECT_EQ(s.box_margin(Vector{{2.5, 0.0}}), 0.0);
}

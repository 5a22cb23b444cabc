#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "morseflow/polynomial.h"

using namespace morseflow;

namespace {

const std::vector<std::string> XY = {"x", "y"};
const std::vector<std::string> XYZ = {"x", "y", "z"};

Polynomial random_poly(std::mt19937_64 &rng, const std::vector<std::string> &vars) {
  std::uniform_int_distribution<int> nterms(1, 6), expo(0, 4);
  std::uniform_real_distribution<double> coef(-3.0, 3.0);
  std::vector<Monomial> terms;
  const int n = nterms(rng);
  for (int k = 0; k < n; ++k) {
    Monomial m;
    m.coefficient = coef(rng);
    for (std::size_t i = 0; i < vars.size(); ++i) m.exponents.push_back(expo(rng));
    terms.push_back(m);
  }
  return Polynomial(vars, terms);
}

Vector random_point(std::mt19937_64 &rng, std::size_t n) {
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  Vector x(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = u(rng);
  return x;
}

}  // namespace

TEST(Parse, SaddleTerms) {
  const Polynomial p = parse_polynomial("x^2 - y^2", XY);
  ASSERT_EQ(p.terms().size(), 2u);
  EXPECT_EQ(p.terms()[0], (Monomial{1.0, {2, 0}}));
  EXPECT_EQ(p.terms()[1], (Monomial{-1.0, {0, 2}}));
}

TEST(Parse, ZeroIsEmpty) {
  EXPECT_TRUE(parse_polynomial("0", {"x"}).terms().empty());
  EXPECT_TRUE(parse_polynomial("x - x", {"x"}).is_zero());
}

TEST(Parse, CollectsLikeTerms) {
  const Polynomial p = parse_polynomial("x*y + y*x", XY);
  ASSERT_EQ(p.terms().size(), 1u);
  EXPECT_EQ(p.terms()[0], (Monomial{2.0, {1, 1}}));
}

TEST(Parse, ExpandsProducts) {
  // (x + y)^3 expanded by hand
  const Polynomial p = parse_polynomial("(x + y)^3", XY);
  const Polynomial q = parse_polynomial("x^3 + 3*x^2*y + 3*x*y^2 + y^3", XY);
  EXPECT_EQ(p, q);
}

TEST(Parse, UnaryMinusBindsTighterThanPower) {
  EXPECT_EQ(parse_polynomial("-x^2", {"x"}), parse_polynomial("x^2", {"x"}));
  EXPECT_EQ(parse_polynomial("-(x^2)", {"x"}), parse_polynomial("0 - x^2", {"x"}));
}

TEST(Parse, ScientificLiterals) {
  const Polynomial p = parse_polynomial("1.5e-3*x + 2E2", {"x"});
  EXPECT_DOUBLE_EQ(p.evaluate(Vector::Constant(1, 2.0)), 1.5e-3 * 2 + 200);
}

TEST(Parse, UndeclaredVariableIsNamed) {
  try {
    parse_polynomial("x + z", XY);
    FAIL() << "expected ParseError";
  } catch (const ParseError &e) {
    EXPECT_NE(std::string(e.what()).find('z'), std::string::npos);
    EXPECT_EQ(e.position(), 4u);
  }
}

TEST(Parse, Malformed) {
  EXPECT_THROW(parse_polynomial("x +", XY), ParseError);
  EXPECT_THROW(parse_polynomial("(x", XY), ParseError);
  EXPECT_THROW(parse_polynomial("x^y", XY), ParseError);
  EXPECT_THROW(parse_polynomial("x / y", XY), ParseError);
  EXPECT_THROW(parse_polynomial("", XY), ParseError);
}

TEST(Parse, PrintParseIsIdentity) {
  std::mt19937_64 rng(7);
  for (int k = 0; k < 200; ++k) {
    const Polynomial p = random_poly(rng, XYZ);
    const Polynomial q = parse_polynomial(p.to_string(), XYZ);
    EXPECT_EQ(p, q) << p.to_string();
    EXPECT_EQ(q.to_string(), p.to_string());
  }
  const Polynomial neg = parse_polynomial("0 - x^2 + y", XY);
  EXPECT_EQ(parse_polynomial(neg.to_string(), XY), neg) << neg.to_string();
}

TEST(Canonical, UniqueExponentsAndSorted) {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 50; ++k) {
    const Polynomial p = random_poly(rng, XYZ) * random_poly(rng, XYZ);
    for (std::size_t i = 0; i + 1 < p.terms().size(); ++i) {
      EXPECT_GT(p.terms()[i].exponents, p.terms()[i + 1].exponents);
    }
    for (const Monomial &m : p.terms()) {
      EXPECT_EQ(m.exponents.size(), 3u);
      EXPECT_NE(m.coefficient, 0.0);
    }
  }
}

TEST(Evaluate, HandValues) {
  const Polynomial s = parse_polynomial("x^2 - y^2", XY);
  EXPECT_DOUBLE_EQ(s.evaluate(Vector{{1.0, 2.0}}), -3.0);
  EXPECT_DOUBLE_EQ(parse_polynomial("x^4", {"x"}).evaluate(Vector::Constant(1, 0.5)), 0.0625);
  EXPECT_DOUBLE_EQ(parse_polynomial("3*x*y + 7 - y", XY).evaluate(Vector::Zero(2)), 7.0);
}

TEST(Evaluate, DimensionMismatchThrows) {
  EXPECT_THROW(parse_polynomial("x", XY).evaluate(Vector::Zero(3)), DimensionError);
}

TEST(Arithmetic, AdditiveAndMultiplicativeUnderEvaluation) {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 100; ++k) {
    const Polynomial p = random_poly(rng, XY);
    const Polynomial q = random_poly(rng, XY);
    const Vector x = random_point(rng, 2);
    const double fp = p.evaluate(x), fq = q.evaluate(x);
    EXPECT_NEAR((p + q).evaluate(x), fp + fq, 1e-12 * (1 + std::abs(fp) + std::abs(fq)));
    EXPECT_NEAR((p - q).evaluate(x), fp - fq, 1e-12 * (1 + std::abs(fp) + std::abs(fq)));
    EXPECT_NEAR((p * q).evaluate(x), fp * fq, 1e-11 * (1 + std::abs(fp * fq)));
    EXPECT_NEAR(p.pow(3).evaluate(x), fp * fp * fp, 1e-10 * (1 + std::abs(fp * fp * fp)));
  }
}

TEST(Arithmetic, MismatchedVariablesThrow) {
  EXPECT_ANY_THROW(parse_polynomial("x", {"x"}) + parse_polynomial("x", XY));
}

TEST(Gradient, PowerRule) {
  const PolynomialSystem g = gradient(parse_polynomial("x^2 - y^2", XY));
  ASSERT_EQ(g.size(), 2u);
  EXPECT_EQ(g[0], parse_polynomial("2*x", XY));
  EXPECT_EQ(g[1], parse_polynomial("-2*y", XY));
  EXPECT_EQ(gradient(parse_polynomial("x^4", {"x"}))[0], parse_polynomial("4*x^3", {"x"}));
  for (const Polynomial &c : gradient(Polynomial::constant(XY, 5.0)).components()) {
    EXPECT_TRUE(c.is_zero());
  }
}

TEST(Gradient, MatchesFiniteDifferences) {
  std::mt19937_64 rng(2024);
  const double h = 1e-5;
  for (int k = 0; k < 100; ++k) {
    const Polynomial p = random_poly(rng, XYZ);
    const Objective f(p);
    const Vector x = random_point(rng, 3);
    const Vector g = f.gradient(x);
    for (Eigen::Index i = 0; i < 3; ++i) {
      Vector xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      const double fd = (p.evaluate(xp) - p.evaluate(xm)) / (2 * h);
      EXPECT_LT(std::abs(fd - g[i]) / std::max(1.0, std::abs(g[i])), 1e-6)
          << p.to_string() << " component " << i;
    }
  }
}

TEST(Hessian, MatchesFiniteDifferencesOfGradient) {
  std::mt19937_64 rng(99);
  const double h = 1e-5;
  for (int k = 0; k < 30; ++k) {
    const Objective f(random_poly(rng, XYZ));
    const Vector x = random_point(rng, 3);
    const Matrix H = f.hessian(x);
    EXPECT_LT((H - H.transpose()).norm(), 1e-12);
    for (Eigen::Index j = 0; j < 3; ++j) {
      Vector xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      const Vector col = (f.gradient(xp) - f.gradient(xm)) / (2 * h);
      EXPECT_LT((col - H.col(j)).norm() / std::max(1.0, H.col(j).norm()), 1e-6);
    }
  }
}

TEST(Jacobian, Examples) {
  const PolynomialMatrix J = jacobian(PolynomialSystem(XY, {parse_polynomial("x*y", XY)}));
  ASSERT_EQ(J.size(), 1u);
  EXPECT_EQ(J[0][0], parse_polynomial("y", XY));
  EXPECT_EQ(J[0][1], parse_polynomial("x", XY));

  const PolynomialMatrix K =
      jacobian(PolynomialSystem(XYZ, {parse_polynomial("x^2 + y^2 - z^2", XYZ)}));
  EXPECT_EQ(K[0][0], parse_polynomial("2*x", XYZ));
  EXPECT_EQ(K[0][1], parse_polynomial("2*y", XYZ));
  EXPECT_EQ(K[0][2], parse_polynomial("-2*z", XYZ));
  const Matrix v = evaluate(K, 3, Vector{{3.0, 4.0, 5.0}});
  EXPECT_EQ(v.rows(), 1);
  EXPECT_DOUBLE_EQ(v(0, 2), -10.0);

  EXPECT_TRUE(jacobian(PolynomialSystem(XY)).empty());
}

TEST(Determinant, TwoByTwo) {
  const PolynomialMatrix m = {{parse_polynomial("x", XY), parse_polynomial("y", XY)},
                              {parse_polynomial("2", XY), parse_polynomial("x", XY)}};
  EXPECT_EQ(determinant(m, XY), parse_polynomial("x^2 - 2*y", XY));
}

TEST(Evaluate, Deterministic) {
  const Polynomial p = parse_polynomial("0.1*x^3*y - 0.3333 + x*y^5", XY);
  const Vector x{{0.7, -1.3}};
  const double a = p.evaluate(x);
  for (int k = 0; k < 10; ++k) EXPECT_EQ(p.evaluate(x), a);
}

#include "morseflow/polynomial.h"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <map>
#include <utility>

namespace morseflow {

namespace {

double ipow(double base, unsigned e) {
  double result = 1.0;
  while (e != 0) {
    if (e & 1u) result *= base;
    e >>= 1u;
    if (e != 0) base *= base;
  }
  return result;
}

std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw std::runtime_error("cannot format coefficient");
  return std::string(buf.data(), end);
}

}  // namespace

// ---------------------------------------------------------------------------
// Polynomial

Polynomial::Polynomial(std::vector<std::string> variables)
    : variables_(std::move(variables)) {}

Polynomial::Polynomial(std::vector<std::string> variables,
                       std::vector<Monomial> terms)
    : variables_(std::move(variables)), terms_(std::move(terms)) {
  for (const auto &t : terms_) {
    check_dimension(variables_.size(), t.exponents.size(), "Monomial");
  }
  canonicalize();
}

Polynomial Polynomial::constant(std::vector<std::string> variables, double c) {
  const std::size_t n = variables.size();
  return Polynomial(std::move(variables),
                    {Monomial{c, std::vector<unsigned>(n, 0u)}});
}

Polynomial Polynomial::variable(std::vector<std::string> variables,
                                std::size_t index) {
  const std::size_t n = variables.size();
  if (index >= n) throw std::out_of_range("Polynomial::variable index");
  std::vector<unsigned> e(n, 0u);
  e[index] = 1;
  return Polynomial(std::move(variables), {Monomial{1.0, std::move(e)}});
}

void Polynomial::canonicalize() {
  std::sort(terms_.begin(), terms_.end(),
            [](const Monomial &a, const Monomial &b) {
              return a.exponents > b.exponents;
            });
  std::vector<Monomial> merged;
  merged.reserve(terms_.size());
  for (auto &t : terms_) {
    if (!merged.empty() && merged.back().exponents == t.exponents) {
      merged.back().coefficient += t.coefficient;
    } else {
      merged.push_back(std::move(t));
    }
  }
  std::erase_if(merged, [](const Monomial &m) { return m.coefficient == 0.0; });
  terms_ = std::move(merged);
}

void Polynomial::require_same_variables(const Polynomial &other) const {
  if (variables_ != other.variables_) {
    throw std::invalid_argument("polynomials over different variable lists");
  }
}

unsigned Polynomial::degree() const {
  unsigned d = 0;
  for (const auto &t : terms_) {
    unsigned s = 0;
    for (unsigned e : t.exponents) s += e;
    d = std::max(d, s);
  }
  return d;
}

double Polynomial::evaluate(std::span<const double> point) const {
  check_dimension(variables_.size(), point.size(), "Polynomial::evaluate");
  double sum = 0.0;
  for (const auto &t : terms_) {
    double prod = t.coefficient;
    for (std::size_t j = 0; j < t.exponents.size(); ++j) {
      if (t.exponents[j] != 0) prod *= ipow(point[j], t.exponents[j]);
    }
    sum += prod;
  }
  return sum;
}

Polynomial Polynomial::derivative(std::size_t index) const {
  if (index >= variables_.size()) {
    throw std::out_of_range("Polynomial::derivative index");
  }
  std::vector<Monomial> out;
  for (const auto &t : terms_) {
    const unsigned e = t.exponents[index];
    if (e == 0) continue;
    Monomial m = t;
    m.coefficient *= static_cast<double>(e);
    m.exponents[index] = e - 1;
    out.push_back(std::move(m));
  }
  return Polynomial(variables_, std::move(out));
}

std::string Polynomial::to_string() const {
  if (terms_.empty()) return "0";
  std::string out;
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    const auto &t = terms_[i];
    std::string mono;
    for (std::size_t j = 0; j < t.exponents.size(); ++j) {
      if (t.exponents[j] == 0) continue;
      if (!mono.empty()) mono += '*';
      mono += variables_[j];
      if (t.exponents[j] > 1) mono += '^' + std::to_string(t.exponents[j]);
    }
    const double mag = std::abs(t.coefficient);
    const bool negative = t.coefficient < 0.0;
    if (i == 0) {
      if (negative) out += '-';
    } else {
      out += negative ? " - " : " + ";
    }
    // A leading "-x^2" would parse as (-x)^2, so the magnitude is spelled out
    // whenever a leading term is negative.
    const bool explicit_coeff = mono.empty() || mag != 1.0 || (i == 0 && negative);
    if (explicit_coeff) {
      out += format_number(mag);
      if (!mono.empty()) out += '*';
    }
    out += mono;
  }
  return out;
}

Polynomial Polynomial::operator-() const {
  Polynomial r = *this;
  for (auto &t : r.terms_) t.coefficient = -t.coefficient;
  return r;
}

Polynomial &Polynomial::operator+=(const Polynomial &rhs) {
  require_same_variables(rhs);
  terms_.insert(terms_.end(), rhs.terms_.begin(), rhs.terms_.end());
  canonicalize();
  return *this;
}

Polynomial &Polynomial::operator-=(const Polynomial &rhs) {
  return *this += -rhs;
}

Polynomial &Polynomial::operator*=(double s) {
  for (auto &t : terms_) t.coefficient *= s;
  canonicalize();
  return *this;
}

Polynomial operator*(const Polynomial &lhs, const Polynomial &rhs) {
  lhs.require_same_variables(rhs);
  std::map<std::vector<unsigned>, double> acc;
  const std::size_t n = lhs.variables_.size();
  std::vector<unsigned> e(n);
  for (const auto &a : lhs.terms_) {
    for (const auto &b : rhs.terms_) {
      for (std::size_t j = 0; j < n; ++j) e[j] = a.exponents[j] + b.exponents[j];
      acc[e] += a.coefficient * b.coefficient;
    }
  }
  std::vector<Monomial> terms;
  terms.reserve(acc.size());
  for (auto &[exps, c] : acc) terms.push_back(Monomial{c, exps});
  return Polynomial(lhs.variables_, std::move(terms));
}

Polynomial Polynomial::pow(unsigned exponent) const {
  Polynomial result = constant(variables_, 1.0);
  Polynomial base = *this;
  while (exponent != 0) {
    if (exponent & 1u) result = result * base;
    exponent >>= 1u;
    if (exponent != 0) base = base * base;
  }
  return result;
}

// ---------------------------------------------------------------------------
// PolynomialSystem

PolynomialSystem::PolynomialSystem(std::vector<std::string> variables)
    : variables_(std::move(variables)) {}

PolynomialSystem::PolynomialSystem(std::vector<std::string> variables,
                                   std::vector<Polynomial> components)
    : variables_(std::move(variables)) {
  for (auto &c : components) push_back(std::move(c));
}

void PolynomialSystem::push_back(Polynomial p) {
  if (p.variables() != variables_) {
    throw std::invalid_argument(
        "PolynomialSystem: component over a different variable list");
  }
  components_.push_back(std::move(p));
}

Vector PolynomialSystem::evaluate(const Vector &point) const {
  Vector out(static_cast<Eigen::Index>(components_.size()));
  for (std::size_t i = 0; i < components_.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = components_[i].evaluate(point);
  }
  return out;
}

PolynomialSystem gradient(const Polynomial &p) {
  PolynomialSystem g(p.variables());
  for (std::size_t i = 0; i < p.num_variables(); ++i) {
    g.push_back(p.derivative(i));
  }
  return g;
}

PolynomialMatrix jacobian(const PolynomialSystem &s) {
  PolynomialMatrix out;
  out.reserve(s.size());
  for (const auto &c : s.components()) {
    std::vector<Polynomial> row;
    row.reserve(s.num_variables());
    for (std::size_t j = 0; j < s.num_variables(); ++j) {
      row.push_back(c.derivative(j));
    }
    out.push_back(std::move(row));
  }
  return out;
}

Matrix evaluate(const PolynomialMatrix &m, std::size_t cols, const Vector &x) {
  Matrix out(static_cast<Eigen::Index>(m.size()),
             static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < m.size(); ++i) {
    check_dimension(cols, m[i].size(), "PolynomialMatrix row");
    for (std::size_t j = 0; j < cols; ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          m[i][j].evaluate(x);
    }
  }
  return out;
}

Polynomial determinant(const PolynomialMatrix &m,
                       const std::vector<std::string> &variables) {
  const std::size_t k = m.size();
  if (k == 0) return Polynomial::constant(variables, 1.0);
  for (const auto &row : m) check_dimension(k, row.size(), "determinant");
  if (k == 1) return m[0][0];
  Polynomial det(variables);
  for (std::size_t col = 0; col < k; ++col) {
    PolynomialMatrix minor;
    for (std::size_t i = 1; i < k; ++i) {
      std::vector<Polynomial> row;
      for (std::size_t j = 0; j < k; ++j) {
        if (j != col) row.push_back(m[i][j]);
      }
      minor.push_back(std::move(row));
    }
    Polynomial term = m[0][col] * determinant(minor, variables);
    if (col % 2 == 0) {
      det += term;
    } else {
      det -= term;
    }
  }
  return det;
}

// ---------------------------------------------------------------------------
// Objective

Objective::Objective(Polynomial f)
    : f_(std::move(f)), gradient_(morseflow::gradient(f_)),
      hessian_(jacobian(gradient_)) {}

Matrix Objective::hessian(const Vector &x) const {
  return morseflow::evaluate(hessian_, dim(), x);
}

}  // namespace morseflow

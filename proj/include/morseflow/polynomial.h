#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "morseflow/types.h"

namespace morseflow {

struct Monomial {
  double coefficient = 0.0;
  std::vector<unsigned> exponents;

  friend bool operator==(const Monomial &, const Monomial &) = default;
};

/// Sparse multivariate polynomial with real coefficients.
///
/// Terms are kept in canonical form: one term per exponent vector, zero
/// coefficients removed, sorted by exponent vector in descending
/// lexicographic order. Two polynomials over the same variables are equal
/// iff their canonical term lists are equal.
class Polynomial {
 public:
  Polynomial() = default;
  /// The zero polynomial over `variables`.
  explicit Polynomial(std::vector<std::string> variables);
  Polynomial(std::vector<std::string> variables, std::vector<Monomial> terms);

  static Polynomial constant(std::vector<std::string> variables, double c);
  static Polynomial variable(std::vector<std::string> variables,
                             std::size_t index);

  const std::vector<std::string> &variables() const { return variables_; }
  std::size_t num_variables() const { return variables_.size(); }
  const std::vector<Monomial> &terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  unsigned degree() const;

  double evaluate(std::span<const double> point) const;
  double evaluate(const Vector &point) const {
    return evaluate(std::span<const double>(point.data(), point.size()));
  }

  /// Exact partial derivative with respect to variable `index`.
  Polynomial derivative(std::size_t index) const;

  /// Canonical text, re-parseable by parse_polynomial.
  std::string to_string() const;

  Polynomial operator-() const;
  Polynomial &operator+=(const Polynomial &rhs);
  Polynomial &operator-=(const Polynomial &rhs);
  Polynomial &operator*=(double s);
  friend Polynomial operator+(Polynomial lhs, const Polynomial &rhs) {
    return lhs += rhs;
  }
  friend Polynomial operator-(Polynomial lhs, const Polynomial &rhs) {
    return lhs -= rhs;
  }
  friend Polynomial operator*(const Polynomial &lhs, const Polynomial &rhs);
  friend Polynomial operator*(Polynomial p, double s) { return p *= s; }
  friend Polynomial operator*(double s, Polynomial p) { return p *= s; }
  Polynomial pow(unsigned exponent) const;

  friend bool operator==(const Polynomial &, const Polynomial &) = default;

 private:
  void canonicalize();
  void require_same_variables(const Polynomial &other) const;

  std::vector<std::string> variables_;
  std::vector<Monomial> terms_;
};

/// Ordered list of polynomials over a shared variable list.
class PolynomialSystem {
 public:
  PolynomialSystem() = default;
  explicit PolynomialSystem(std::vector<std::string> variables);
  PolynomialSystem(std::vector<std::string> variables,
                   std::vector<Polynomial> components);

  const std::vector<std::string> &variables() const { return variables_; }
  std::size_t num_variables() const { return variables_.size(); }
  std::size_t size() const { return components_.size(); }
  bool empty() const { return components_.empty(); }
  const std::vector<Polynomial> &components() const { return components_; }
  const Polynomial &operator[](std::size_t i) const { return components_[i]; }
  void push_back(Polynomial p);

  Vector evaluate(const Vector &point) const;

  friend bool operator==(const PolynomialSystem &,
                         const PolynomialSystem &) = default;

 private:
  std::vector<std::string> variables_;
  std::vector<Polynomial> components_;
};

/// Row-major matrix of polynomials; entry (i, j) is d s_i / d x_j.
using PolynomialMatrix = std::vector<std::vector<Polynomial>>;

PolynomialSystem gradient(const Polynomial &p);
PolynomialMatrix jacobian(const PolynomialSystem &s);
/// Numeric value of a polynomial matrix with `cols` columns.
Matrix evaluate(const PolynomialMatrix &m, std::size_t cols, const Vector &x);

/// Determinant by cofactor expansion; intended for small square matrices.
Polynomial determinant(const PolynomialMatrix &m,
                       const std::vector<std::string> &variables);

/// Error raised by parse_polynomial; `position` is a byte offset into the
/// input text.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string &message, std::size_t position);
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

/// Parses the polynomial grammar
///
///   expr   := term (('+'|'-') term)*
///   term   := factor ('*' factor)*
///   factor := base ('^' uint)?
///   base   := number | ident | '(' expr ')' | '-' base
///
/// Note that unary minus binds tighter than '^', so "-x^2" is (-x)^2.
Polynomial parse_polynomial(std::string_view text,
                            const std::vector<std::string> &variables);

/// A polynomial objective with its gradient and Hessian precomputed.
class Objective {
 public:
  explicit Objective(Polynomial f);

  const Polynomial &polynomial() const { return f_; }
  std::size_t dim() const { return f_.num_variables(); }
  double value(const Vector &x) const { return f_.evaluate(x); }
  Vector gradient(const Vector &x) const { return gradient_.evaluate(x); }
  Matrix hessian(const Vector &x) const;
  const PolynomialSystem &gradient_system() const { return gradient_; }

 private:
  Polynomial f_;
  PolynomialSystem gradient_;
  PolynomialMatrix hessian_;
};

}  // namespace morseflow

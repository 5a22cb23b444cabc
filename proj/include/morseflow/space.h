#pragma once

#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "morseflow/polynomial.h"
#include "morseflow/types.h"

namespace morseflow {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  friend bool operator==(const Interval &, const Interval &) = default;
};

struct SpaceTolerances {
  double rank_tol = 1e-8;      // relative singular-value cutoff for Dg
  double retract_tol = 1e-10;  // residual target of retract()
  double level_tol = 1e-10;    // |f - c| target of project_to_level_set()
  double member_tol = 1e-8;    // default residual bound for is_member()
  double capture_radius = 0.1; // largest residual retract() will accept
  int max_iter = 100;
  int singular_seed_density = 5;  // grid seeds per axis for singular search

  friend bool operator==(const SpaceTolerances &,
                         const SpaceTolerances &) = default;
};

/// Raised when retract() or project_to_level_set() fails to converge, or the
/// input lies outside the capture radius.
class RetractionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The closed set Z = {g = 0} inside a bounded working box of R^n.
///
/// An empty constraint system means Z is the whole ambient space. On
/// construction the space locates its rank-transition (singular) points, the
/// places where the constraint Jacobian drops below its generic rank, by
/// damped Newton from a seed grid; the flow integrator treats these points
/// specially.
class SingularSpace {
 public:
  SingularSpace(PolynomialSystem constraints, std::vector<Interval> box,
                SpaceTolerances tol = {});
  static SingularSpace ambient(std::vector<std::string> variables,
                               std::vector<Interval> box,
                               SpaceTolerances tol = {});

  std::size_t ambient_dim() const { return box_.size(); }
  const std::vector<std::string> &variables() const {
    return constraints_.variables();
  }
  const PolynomialSystem &constraints() const { return constraints_; }
  bool has_constraints() const { return !constraints_.empty(); }
  const std::vector<Interval> &box() const { return box_; }
  const SpaceTolerances &tolerances() const { return tol_; }

  Vector constraint_values(const Vector &x) const;
  Matrix constraint_jacobian(const Vector &x) const;
  /// Euclidean norm of g(x).
  double residual(const Vector &x) const;
  bool in_box(const Vector &x) const;
  bool is_member(const Vector &x, double tol) const;
  bool is_member(const Vector &x) const { return is_member(x, tol_.member_tol); }

  /// Effective rank of Dg(x). Singular values at or below
  /// rank_tol * max(sigma_max, jacobian_scale()) count as zero, so points
  /// numerically on a rank-transition locus report the dropped rank.
  int jacobian_rank(const Vector &x) const;
  /// Orthonormal basis (columns) of the row space of Dg(x).
  Matrix normal_basis(const Vector &x) const;
  /// Orthogonal projection of v onto the null space of Dg(x).
  Vector tangent_project(const Vector &x, const Vector &v) const;

  /// Gauss-Newton projection onto Z. Throws RetractionError when the
  /// residual exceeds the capture radius or the iteration stalls.
  Vector retract(const Vector &x) const { return retract(x, tol_.capture_radius); }
  Vector retract(const Vector &x, double capture_radius) const;

  /// Newton projection onto {g = 0, f = c}. Throws RetractionError.
  Vector project_to_level_set(const Objective &f, const Vector &x,
                              double c) const;

  double box_diameter() const;
  Vector box_center() const;
  /// Distance from x to the complement of the box (0 when outside).
  double box_margin(const Vector &x) const;

  /// Largest Jacobian rank seen on Z; the rank of its smooth strata.
  int generic_rank() const { return generic_rank_; }
  /// Largest Jacobian norm seen over the singular-search seeds.
  double jacobian_scale() const { return jacobian_scale_; }
  /// Points of Z where the Jacobian rank drops below generic_rank().
  const std::vector<Vector> &singular_points() const { return singular_; }

 private:
  void locate_singular_points();

  PolynomialSystem constraints_;
  PolynomialMatrix jacobian_;
  std::vector<Interval> box_;
  SpaceTolerances tol_;
  int generic_rank_ = 0;
  double jacobian_scale_ = 0.0;
  std::vector<Vector> singular_;
};

/// The gradient of f on Z: the ambient gradient projected onto the tangent
/// space of the stratum through x.
Vector riemannian_grad(const Objective &f, const SingularSpace &space,
                       const Vector &x);

/// Uniform grid of `density` points per axis over the box, in lexicographic
/// order.
std::vector<Vector> box_grid(const std::vector<Interval> &box, int density);

}  // namespace morseflow

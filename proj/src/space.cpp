#include "morseflow/space.h"

#include <algorithm>
#include <cmath>

#include "least_squares.h"

namespace morseflow {

namespace {

// Singular value decomposition of Dg(x) restricted to its effective rank.
struct RankedSvd {
  Matrix U;
  Vector sigma;
  Matrix V;
  int rank = 0;
};

// Singular values at or below rank_tol * max(sigma_max, scale) count as zero.
RankedSvd ranked_svd(const Matrix &J, double rank_tol, double scale,
                     bool full_v) {
  RankedSvd out;
  if (J.rows() == 0) {
    out.V = Matrix::Identity(J.cols(), J.cols());
    return out;
  }
  const unsigned flags =
      Eigen::ComputeThinU | (full_v ? Eigen::ComputeFullV : Eigen::ComputeThinV);
  Eigen::JacobiSVD<Matrix> svd(J, flags);
  out.U = svd.matrixU();
  out.sigma = svd.singularValues();
  out.V = svd.matrixV();
  const double smax = out.sigma.size() > 0 ? out.sigma[0] : 0.0;
  const double cutoff = rank_tol * std::max(smax, scale);
  if (smax > 0.0) {
    for (Eigen::Index i = 0; i < out.sigma.size(); ++i) {
      if (out.sigma[i] > cutoff) ++out.rank;
    }
  }
  return out;
}

// Minimum-norm least-squares solution of J d = -r under the rank cutoff.
Vector pinv_step(const Matrix &J, const Vector &r, double rank_tol,
                 double scale) {
  const RankedSvd s = ranked_svd(J, rank_tol, scale, false);
  Vector d = Vector::Zero(J.cols());
  for (int i = 0; i < s.rank; ++i) {
    d -= s.V.col(i) * (s.U.col(i).dot(r) / s.sigma[i]);
  }
  return d;
}

void combinations(std::size_t n, std::size_t k, std::vector<std::size_t> &cur,
                  std::size_t start, std::vector<std::vector<std::size_t>> &out) {
  if (cur.size() == k) {
    out.push_back(cur);
    return;
  }
  for (std::size_t i = start; i < n; ++i) {
    cur.push_back(i);
    combinations(n, k, cur, i + 1, out);
    cur.pop_back();
  }
}

std::vector<std::vector<std::size_t>> combinations(std::size_t n,
                                                   std::size_t k) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> cur;
  combinations(n, k, cur, 0, out);
  return out;
}

// Cap on seeds used by the singular-point search in high dimension.
constexpr std::size_t kMaxSingularSeeds = 4096;

}  // namespace

SingularSpace::SingularSpace(PolynomialSystem constraints,
                             std::vector<Interval> box, SpaceTolerances tol)
    : constraints_(std::move(constraints)),
      jacobian_(jacobian(constraints_)),
      box_(std::move(box)),
      tol_(tol) {
  if (box_.empty()) throw std::invalid_argument("SingularSpace: empty box");
  check_dimension(box_.size(), constraints_.num_variables(),
                  "SingularSpace box");
  for (const auto &iv : box_) {
    if (!(std::isfinite(iv.lo) && std::isfinite(iv.hi) && iv.lo < iv.hi)) {
      throw std::invalid_argument(
          "SingularSpace: box intervals must be finite with lo < hi");
    }
  }
  if (!(tol_.rank_tol > 0.0 && tol_.retract_tol > 0.0 && tol_.level_tol > 0.0 &&
        tol_.member_tol > 0.0 && tol_.capture_radius > 0.0)) {
    throw std::invalid_argument("SingularSpace: tolerances must be positive");
  }
  if (has_constraints()) locate_singular_points();
}

SingularSpace SingularSpace::ambient(std::vector<std::string> variables,
                                     std::vector<Interval> box,
                                     SpaceTolerances tol) {
  return SingularSpace(PolynomialSystem(std::move(variables)), std::move(box),
                       tol);
}

Vector SingularSpace::constraint_values(const Vector &x) const {
  check_dimension(ambient_dim(), static_cast<std::size_t>(x.size()),
                  "SingularSpace point");
  return constraints_.evaluate(x);
}

Matrix SingularSpace::constraint_jacobian(const Vector &x) const {
  check_dimension(ambient_dim(), static_cast<std::size_t>(x.size()),
                  "SingularSpace point");
  return evaluate(jacobian_, ambient_dim(), x);
}

double SingularSpace::residual(const Vector &x) const {
  if (!has_constraints()) {
    check_dimension(ambient_dim(), static_cast<std::size_t>(x.size()),
                    "SingularSpace point");
    return 0.0;
  }
  return constraint_values(x).norm();
}

bool SingularSpace::in_box(const Vector &x) const {
  check_dimension(ambient_dim(), static_cast<std::size_t>(x.size()),
                  "SingularSpace point");
  for (std::size_t i = 0; i < box_.size(); ++i) {
    const double v = x[static_cast<Eigen::Index>(i)];
    if (!(v >= box_[i].lo && v <= box_[i].hi)) return false;
  }
  return true;
}

bool SingularSpace::is_member(const Vector &x, double tol) const {
  return in_box(x) && residual(x) <= tol;
}

int SingularSpace::jacobian_rank(const Vector &x) const {
  if (!has_constraints()) return 0;
  return ranked_svd(constraint_jacobian(x), tol_.rank_tol, jacobian_scale_, false).rank;
}

Matrix SingularSpace::normal_basis(const Vector &x) const {
  if (!has_constraints()) return Matrix(ambient_dim(), 0);
  const RankedSvd s = ranked_svd(constraint_jacobian(x), tol_.rank_tol, jacobian_scale_, true);
  return s.V.leftCols(s.rank);
}

Vector SingularSpace::tangent_project(const Vector &x, const Vector &v) const {
  check_dimension(ambient_dim(), static_cast<std::size_t>(v.size()),
                  "tangent_project vector");
  if (!has_constraints()) return v;
  const Matrix N = normal_basis(x);
  return v - N * (N.transpose() * v);
}

Vector SingularSpace::retract(const Vector &x, double capture_radius) const {
  if (!has_constraints()) {
    check_dimension(ambient_dim(), static_cast<std::size_t>(x.size()),
                    "SingularSpace point");
    return x;
  }
  double r = residual(x);
  if (!std::isfinite(r) || r > capture_radius) {
    throw RetractionError("retract: residual " + std::to_string(r) +
                          " outside capture radius");
  }
  Vector y = x;
  // One polishing iteration is allowed after reaching retract_tol.
  bool polishing = false;
  for (int it = 0; it < tol_.max_iter; ++it) {
    if (r == 0.0) break;
    if (r < tol_.retract_tol) {
      if (polishing) break;
      polishing = true;
    }
    const Vector d = pinv_step(constraint_jacobian(y), constraint_values(y),
                               tol_.rank_tol, 0.0);
    double alpha = 1.0;
    bool improved = false;
    for (int k = 0; k < 30; ++k, alpha *= 0.5) {
      const Vector cand = y + alpha * d;
      const double rc = residual(cand);
      if (rc < r) {
        y = cand;
        r = rc;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  if (!(r < tol_.retract_tol)) {
    throw RetractionError("retract: no convergence (residual " +
                          std::to_string(r) + ")");
  }
  return y;
}

Vector SingularSpace::project_to_level_set(const Objective &f, const Vector &x,
                                           double c) const {
  check_dimension(ambient_dim(), static_cast<std::size_t>(x.size()),
                  "project_to_level_set point");
  const auto m = static_cast<Eigen::Index>(constraints_.size());
  const auto n = static_cast<Eigen::Index>(ambient_dim());
  auto system = [&](const Vector &y) {
    Vector G(m + 1);
    if (m > 0) G.head(m) = constraints_.evaluate(y);
    G[m] = f.value(y) - c;
    return G;
  };
  auto done = [&](const Vector &G) {
    return (m == 0 || G.head(m).norm() < tol_.retract_tol) &&
           std::abs(G[m]) < tol_.level_tol;
  };
  Vector y = x;
  Vector G = system(y);
  if (!G.allFinite()) throw RetractionError("project_to_level_set: non-finite");
  bool polishing = false;
  for (int it = 0; it < tol_.max_iter; ++it) {
    if (done(G)) {
      if (polishing) break;
      polishing = true;
    }
    Matrix J(m + 1, n);
    if (m > 0) J.topRows(m) = evaluate(jacobian_, ambient_dim(), y);
    J.row(m) = f.gradient(y).transpose();
    const Vector d = pinv_step(J, G, tol_.rank_tol, 0.0);
    double alpha = 1.0;
    bool improved = false;
    for (int k = 0; k < 30; ++k, alpha *= 0.5) {
      const Vector cand = y + alpha * d;
      const Vector Gc = system(cand);
      if (Gc.allFinite() && Gc.norm() < G.norm()) {
        y = cand;
        G = Gc;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  if (!done(G)) {
    throw RetractionError("project_to_level_set: no convergence");
  }
  return y;
}

double SingularSpace::box_diameter() const {
  double s = 0.0;
  for (const auto &iv : box_) s += (iv.hi - iv.lo) * (iv.hi - iv.lo);
  return std::sqrt(s);
}

Vector SingularSpace::box_center() const {
  Vector c(static_cast<Eigen::Index>(box_.size()));
  for (std::size_t i = 0; i < box_.size(); ++i) {
    c[static_cast<Eigen::Index>(i)] = 0.5 * (box_[i].lo + box_[i].hi);
  }
  return c;
}

double SingularSpace::box_margin(const Vector &x) const {
  if (!in_box(x)) return 0.0;
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < box_.size(); ++i) {
    const double v = x[static_cast<Eigen::Index>(i)];
    m = std::min({m, v - box_[i].lo, box_[i].hi - v});
  }
  return m;
}

void SingularSpace::locate_singular_points() {
  int density = std::max(2, tol_.singular_seed_density);
  while (density > 2 &&
         std::pow(static_cast<double>(density),
                  static_cast<double>(ambient_dim())) >
             static_cast<double>(kMaxSingularSeeds)) {
    --density;
  }
  std::vector<Vector> seeds;
  for (const Vector &s : box_grid(box_, density)) {
    try {
      seeds.push_back(retract(s, std::numeric_limits<double>::infinity()));
    } catch (const RetractionError &) {
    }
  }
  for (const Vector &s : seeds) {
    const Matrix J = constraint_jacobian(s);
    if (J.size() > 0) {
      jacobian_scale_ = std::max(
          jacobian_scale_, Eigen::JacobiSVD<Matrix>(J).singularValues()[0]);
    }
  }
  for (const Vector &s : seeds) {
    generic_rank_ = std::max(generic_rank_, jacobian_rank(s));
  }
  if (generic_rank_ == 0) return;

  // Rank < r iff every r x r minor of Dg vanishes.
  const auto r = static_cast<std::size_t>(generic_rank_);
  PolynomialSystem locus = constraints_;
  for (const auto &rows : combinations(constraints_.size(), r)) {
    for (const auto &cols : combinations(ambient_dim(), r)) {
      PolynomialMatrix sub;
      for (std::size_t i : rows) {
        std::vector<Polynomial> row;
        for (std::size_t j : cols) row.push_back(jacobian_[i][j]);
        sub.push_back(std::move(row));
      }
      Polynomial minor = determinant(sub, constraints_.variables());
      if (!minor.is_zero()) locus.push_back(std::move(minor));
    }
  }
  const PolynomialMatrix locus_jac = jacobian(locus);
  auto F = [&](const Vector &y) { return locus.evaluate(y); };
  auto J = [&](const Vector &y) {
    return evaluate(locus_jac, ambient_dim(), y);
  };
  constexpr double kLocusTol = 1e-10;
  constexpr double kClusterTol = 1e-6;
  for (const Vector &s : seeds) {
    const detail::LmResult res = detail::levenberg_marquardt(F, J, s);
    if (res.diverged || !(res.residual_norm <= kLocusTol) || !in_box(res.x)) {
      continue;
    }
    const bool known = std::any_of(
        singular_.begin(), singular_.end(),
        [&](const Vector &p) { return (p - res.x).norm() < kClusterTol; });
    if (!known) singular_.push_back(res.x);
  }
  std::sort(singular_.begin(), singular_.end(),
            [](const Vector &a, const Vector &b) {
              return std::lexicographical_compare(a.data(), a.data() + a.size(),
                                                  b.data(), b.data() + b.size());
            });
}

Vector riemannian_grad(const Objective &f, const SingularSpace &space,
                       const Vector &x) {
  return space.tangent_project(x, f.gradient(x));
}

std::vector<Vector> box_grid(const std::vector<Interval> &box, int density) {
  if (density < 2) throw std::invalid_argument("box_grid: density must be >= 2");
  const std::size_t n = box.size();
  std::vector<Vector> out;
  std::vector<int> idx(n, 0);
  for (;;) {
    Vector p(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      p[static_cast<Eigen::Index>(i)] =
          box[i].lo + (box[i].hi - box[i].lo) * idx[i] / (density - 1);
    }
    out.push_back(std::move(p));
    std::size_t k = n;
    for (;;) {
      if (k == 0) return out;
      --k;
      if (++idx[k] < density) break;
      idx[k] = 0;
    }
  }
}

}  // namespace morseflow

#include "morseflow/critical.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "least_squares.h"
#include "morseflow/random.h"

namespace morseflow {

std::string_view to_string(PointKind k) {
  switch (k) {
    case PointKind::minimum:
      return "minimum";
    case PointKind::maximum:
      return "maximum";
    case PointKind::saddle:
      return "saddle";
    case PointKind::degenerate:
      return "degenerate";
    case PointKind::unresolved:
      return "unresolved";
  }
  return "unresolved";
}

PointKind point_kind_from_string(std::string_view s) {
  for (PointKind k : {PointKind::minimum, PointKind::maximum, PointKind::saddle,
                      PointKind::degenerate, PointKind::unresolved}) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown critical point kind '" + std::string(s) +
                              "'");
}

namespace {

bool lex_less(const Vector &a, const Vector &b) {
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(),
                                      b.data() + b.size());
}

// Lagrange system in (x, lambda): [grad f - Dg^T lambda; g].
class LagrangeSystem {
 public:
  LagrangeSystem(const Objective &f, const SingularSpace &space)
      : f_(f), space_(space) {
    for (const Polynomial &g : space.constraints().components()) {
      constraints_.emplace_back(g);
    }
  }

  Eigen::Index n() const { return static_cast<Eigen::Index>(space_.ambient_dim()); }
  Eigen::Index m() const { return static_cast<Eigen::Index>(constraints_.size()); }

  Vector initial_multipliers(const Vector &x) const {
    if (m() == 0) return Vector(0);
    const Matrix J = space_.constraint_jacobian(x);
    return J.transpose().completeOrthogonalDecomposition().solve(f_.gradient(x));
  }

  Vector residual(const Vector &z) const {
    const Vector x = z.head(n());
    Vector out(n() + m());
    out.head(n()) = f_.gradient(x);
    if (m() > 0) {
      const Vector lambda = z.tail(m());
      out.head(n()) -= space_.constraint_jacobian(x).transpose() * lambda;
      out.tail(m()) = space_.constraint_values(x);
    }
    return out;
  }

  Matrix jacobian(const Vector &z) const {
    const Vector x = z.head(n());
    Matrix out = Matrix::Zero(n() + m(), n() + m());
    out.topLeftCorner(n(), n()) = f_.hessian(x);
    if (m() > 0) {
      const Vector lambda = z.tail(m());
      const Matrix J = space_.constraint_jacobian(x);
      for (Eigen::Index i = 0; i < m(); ++i) {
        out.topLeftCorner(n(), n()) -=
            lambda[i] * constraints_[static_cast<std::size_t>(i)].hessian(x);
      }
      out.topRightCorner(n(), m()) = -J.transpose();
      out.bottomLeftCorner(m(), n()) = J;
    }
    return out;
  }

 private:
  const Objective &f_;
  const SingularSpace &space_;
  std::vector<Objective> constraints_;
};

}  // namespace

CriticalSearchResult find_critical_points(const Objective &f,
                                          const SingularSpace &space,
                                          const CriticalSearchOptions &opt) {
  if (opt.grid_density < 2) {
    throw std::invalid_argument("find_critical_points: grid_density must be >= 2");
  }
  check_dimension(space.ambient_dim(), f.dim(), "objective");
  CriticalSearchResult result;

  // Fixed points among the rank-transition points of Z.
  std::vector<CriticalPoint> singular;
  for (const Vector &p : space.singular_points()) {
    const double ambient = f.gradient(p).norm();
    CriticalPoint cp;
    cp.location = p;
    cp.value = f.value(p);
    cp.singular = true;
    if (ambient < opt.crit_tol) {
      cp.grad_norm = riemannian_grad(f, space, p).norm();
    } else if (is_stationary_point(f, space, p, 1e-4, opt.crit_tol)) {
      // The realized flow does not move; its speed there is zero.
      cp.grad_norm = 0.0;
    } else {
      continue;
    }
    singular.push_back(std::move(cp));
  }

  const LagrangeSystem sys(f, space);
  const auto n = sys.n();
  detail::LmOptions lm;
  lm.max_iter = opt.max_iter;
  std::vector<CriticalPoint> candidates;
  for (const Vector &seed : box_grid(space.box(), opt.grid_density)) {
    ++result.n_seeds;
    Vector x;
    try {
      x = space.retract(seed, std::numeric_limits<double>::infinity());
    } catch (const RetractionError &) {
      ++result.n_discarded;
      continue;
    }
    Vector z(n + sys.m());
    z.head(n) = x;
    if (sys.m() > 0) z.tail(sys.m()) = sys.initial_multipliers(x);
    const detail::LmResult res = detail::levenberg_marquardt(
        [&](const Vector &v) { return sys.residual(v); },
        [&](const Vector &v) { return sys.jacobian(v); }, z, lm);
    if (res.diverged) {
      ++result.n_discarded;
      continue;
    }
    const Vector loc = res.x.head(n);
    if (!loc.allFinite() || !space.is_member(loc)) {
      ++result.n_discarded;
      continue;
    }
    const double gn = riemannian_grad(f, space, loc).norm();
    if (!(gn < opt.crit_tol)) {
      ++result.n_discarded;
      continue;
    }
    const bool absorbed = std::any_of(
        singular.begin(), singular.end(), [&](const CriticalPoint &s) {
          return (s.location - loc).norm() < opt.singular_absorb_radius;
        });
    if (absorbed) continue;
    CriticalPoint cp;
    cp.location = loc;
    cp.value = f.value(loc);
    cp.grad_norm = gn;
    candidates.push_back(std::move(cp));
  }

  candidates.insert(candidates.end(), singular.begin(), singular.end());
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const CriticalPoint &a, const CriticalPoint &b) {
                     return lex_less(a.location, b.location);
                   });
  // Singular points take precedence as cluster representatives.
  std::stable_partition(candidates.begin(), candidates.end(),
                        [](const CriticalPoint &c) { return c.singular; });
  for (CriticalPoint &c : candidates) {
    auto it = std::find_if(result.points.begin(), result.points.end(),
                           [&](const CriticalPoint &p) {
                             return (p.location - c.location).norm() <
                                    opt.cluster_tol;
                           });
    if (it == result.points.end()) {
      result.points.push_back(std::move(c));
    } else {
      it->cluster_radius =
          std::max(it->cluster_radius, (it->location - c.location).norm());
    }
  }
  std::sort(result.points.begin(), result.points.end(),
            [](const CriticalPoint &a, const CriticalPoint &b) {
              return lex_less(a.location, b.location);
            });
  return result;
}

PointKind classify(const Objective &f, const SingularSpace &space,
                   const CriticalPoint &cp, const ClassifyOptions &opt) {
  if (!is_stationary_point(f, space, cp.location, 1e-4, 1e-6)) {
    throw std::invalid_argument("classify: point is not critical");
  }
  const double r = opt.probe_radius;
  Rng rng(opt.seed);
  std::vector<Vector> below;
  int n_above = 0;
  int n_valid = 0;
  for (int i = 0; i < opt.n_probes; ++i) {
    const Vector u = unit_vector(rng, cp.location.size());
    Vector q;
    try {
      q = space.retract(cp.location + r * u,
                        std::numeric_limits<double>::infinity());
    } catch (const RetractionError &) {
      continue;
    }
    const double dist = (q - cp.location).norm();
    if (!space.is_member(q) || dist < 0.25 * r || dist > 2.0 * r) continue;
    ++n_valid;
    const double diff = f.value(q) - cp.value;
    if (diff > opt.probe_tol) {
      ++n_above;
    } else if (diff < -opt.probe_tol) {
      below.push_back(std::move(q));
    }
  }
  if (n_valid < opt.min_probes) return PointKind::unresolved;
  if (below.empty()) return n_above > 0 ? PointKind::minimum : PointKind::degenerate;
  if (n_above == 0) return PointKind::maximum;

  std::sort(below.begin(), below.end(), [&](const Vector &a, const Vector &b) {
    return f.value(a) < f.value(b);
  });
  LevelFlowOptions flow;
  flow.arc_budget = 10.0 * space.box_diameter();

  // A below probe whose descent moves on without returning to cp.
  bool leaves = false;
  for (const Vector &q : below) {
    const double fq = f.value(q);
    try {
      const FlowTrajectory t =
          descend_to_level(f, space, q, fq - (cp.value - fq), flow);
      const bool back =
          captured(t) && (t.back().y - cp.location).norm() <= r;
      if (t.ok() && !back) {
        leaves = true;
        break;
      }
    } catch (const std::exception &) {
    }
  }
  // The deepest below probe lies closest to the unstable set; its ascent
  // must return to cp.
  bool returns = false;
  try {
    const FlowTrajectory t = ascend_to_level(f, space, below.front(), cp.value, flow);
    returns = t.ok() && t.termination != Termination::left_box &&
              (t.back().y - cp.location).norm() <= r;
  } catch (const std::exception &) {
  }
  return leaves && returns ? PointKind::saddle : PointKind::degenerate;
}

std::vector<CriticalLevelSet> group_by_value(std::vector<CriticalPoint> cps,
                                             double value_merge_tol) {
  std::stable_sort(cps.begin(), cps.end(),
                   [](const CriticalPoint &a, const CriticalPoint &b) {
                     return a.value < b.value;
                   });
  std::vector<CriticalLevelSet> out;
  for (CriticalPoint &cp : cps) {
    if (out.empty() ||
        cp.value - out.back().points.back().value > value_merge_tol) {
      out.push_back({cp.value, {}});
    }
    out.back().points.push_back(std::move(cp));
  }
  for (CriticalLevelSet &ls : out) {
    double sum = 0.0;
    for (const CriticalPoint &p : ls.points) sum += p.value;
    ls.value = sum / static_cast<double>(ls.points.size());
  }
  return out;
}

ConditionReport check_condition1(const std::vector<CriticalPoint> &cps,
                                 double gap_tol, double value_merge_tol) {
  ConditionReport rep;
  rep.condition = 1;
  const auto levels = group_by_value(cps, value_merge_tol);
  std::vector<double> values;
  for (const auto &ls : levels) values.push_back(ls.value);
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < values.size(); ++i) {
    gap = std::min(gap, values[i] - values[i - 1]);
  }
  rep.series["critical_values"] = values;
  rep.witnesses["min_gap"] = gap;
  rep.witnesses["gap_tol"] = gap_tol;
  rep.witnesses["n_critical_points"] = static_cast<double>(cps.size());
  rep.verdict = gap > gap_tol ? Verdict::pass : Verdict::fail;
  if (cps.empty()) rep.message = "no critical points found";
  return rep;
}

}  // namespace morseflow

#include "morseflow/flow.h"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>

namespace morseflow {

std::string_view to_string(Direction d) {
  return d == Direction::descend ? "descend" : "ascend";
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::reach_level:
      return "reach_level";
    case Termination::converged:
      return "converged";
    case Termination::arc_budget:
      return "arc_budget";
    case Termination::time_budget:
      return "time_budget";
    case Termination::left_box:
      return "left_box";
    case Termination::step_budget:
      return "step_budget";
    case Termination::retraction_failure:
      return "retraction_failure";
    case Termination::step_underflow:
      return "step_underflow";
  }
  return "unknown";
}

std::string_view to_string(LimitStatus s) {
  switch (s) {
    case LimitStatus::converged:
      return "converged";
    case LimitStatus::exited:
      return "exited";
    case LimitStatus::inconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) return "nan";
  return std::string(buf.data(), end);
}

namespace {

// Dormand-Prince 5(4) coefficients.
constexpr std::array<double, 7> kC = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5,
                                      8.0 / 9, 1.0, 1.0};
constexpr double kA[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176,
     -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
};
constexpr std::array<double, 7> kB = {35.0 / 384,     0.0,        500.0 / 1113,
                                      125.0 / 192,    -2187.0 / 6784,
                                      11.0 / 84,      0.0};
// Fifth- minus fourth-order weights.
constexpr std::array<double, 7> kE = {71.0 / 57600,     0.0,
                                      -71.0 / 16695,    71.0 / 1920,
                                      -17253.0 / 339200, 22.0 / 525,
                                      -1.0 / 40};

class Field {
 public:
  Field(const Objective &f, const SingularSpace &space, Direction dir)
      : f_(f), space_(space), sign_(dir == Direction::descend ? -1.0 : 1.0) {}

  Vector velocity(const Vector &y) const {
    return sign_ * riemannian_grad(f_, space_, y);
  }
  const SingularSpace &space() const { return space_; }
  const Objective &objective() const { return f_; }

 private:
  const Objective &f_;
  const SingularSpace &space_;
  double sign_;
};

struct Step {
  bool ok = false;
  Vector y;      // retracted endpoint
  Vector k_end;  // velocity at the endpoint
  double err = 0.0;
  double arc = 0.0;
};

Step rk_step(const Field &field, const Vector &y, const Vector &k1, double h,
             const StepControl &ctl) {
  Step out;
  std::array<Vector, 7> k;
  k[0] = k1;
  try {
    for (int s = 1; s < 6; ++s) {
      Vector Y = y;
      for (int j = 0; j < s; ++j) {
        if (kA[s][j] != 0.0) Y.noalias() += (h * kA[s][j]) * k[j];
      }
      k[s] = field.velocity(field.space().retract(Y));
    }
    Vector y5 = y;
    for (int j = 0; j < 6; ++j) {
      if (kB[j] != 0.0) y5.noalias() += (h * kB[j]) * k[j];
    }
    out.y = field.space().retract(y5);
    k[6] = field.velocity(out.y);
    Vector e = Vector::Zero(y.size());
    for (int j = 0; j < 7; ++j) {
      if (kE[j] != 0.0) e.noalias() += (h * kE[j]) * k[j];
    }
    double err = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double scale =
          ctl.abs_tol + ctl.rel_tol * std::max(std::abs(y[i]), std::abs(y5[i]));
      err = std::max(err, std::abs(e[i]) / scale);
    }
    double arc = 0.0;
    for (int j = 0; j < 7; ++j) arc += kB[j] * k[j].norm();
    out.arc = h * arc;
    out.err = err;
    out.k_end = std::move(k[6]);
    out.ok = out.y.allFinite() && out.k_end.allFinite() && std::isfinite(err);
  } catch (const RetractionError &) {
    out.ok = false;
  }
  return out;
}

struct Criteria {
  std::optional<double> level;
  double level_tol = 0.0;
  std::optional<double> grad_tol;
  std::optional<double> arc_budget;
  std::optional<double> time_budget;
  bool left_box = false;
};

Criteria collect(std::span<const StopCriterion> stop) {
  Criteria c;
  for (const auto &s : stop) {
    std::visit(
        [&](const auto &v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, ReachLevel>) {
            c.level = v.level;
            c.level_tol = v.tol;
          } else if constexpr (std::is_same_v<T, Converged>) {
            c.grad_tol = v.grad_tol;
          } else if constexpr (std::is_same_v<T, ArcBudget>) {
            c.arc_budget = v.length;
          } else if constexpr (std::is_same_v<T, TimeBudget>) {
            c.time_budget = v.time;
          } else {
            c.left_box = true;
          }
        },
        s);
  }
  if (!c.arc_budget && !c.time_budget) {
    throw std::invalid_argument(
        "integrate: an arc or time budget criterion is required");
  }
  return c;
}

std::vector<Vector> stationary_singular_points(const Objective &f,
                                               const SingularSpace &space) {
  std::vector<Vector> out;
  for (const Vector &p : space.singular_points()) {
    if (is_stationary_point(f, space, p)) out.push_back(p);
  }
  return out;
}

}  // namespace

bool is_stationary_point(const Objective &f, const SingularSpace &space,
                         const Vector &p, double probe_radius,
                         double crit_tol) {
  if (riemannian_grad(f, space, p).norm() < crit_tol) return true;
  for (double sign : {-1.0, 1.0}) {
    Vector x = p;
    for (int i = 0; i < 10; ++i) {
      const Vector v = riemannian_grad(f, space, x);
      const double vn = v.norm();
      if (vn < crit_tol) break;
      try {
        x = space.retract(x + sign * probe_radius * v / vn,
                          std::numeric_limits<double>::infinity());
      } catch (const RetractionError &) {
        return false;
      }
      if ((x - p).norm() >= probe_radius) return false;
    }
  }
  return true;
}

FlowTrajectory integrate(const Objective &f, const SingularSpace &space,
                         const Vector &x0, Direction direction,
                         std::span<const StopCriterion> stop,
                         const StepControl &ctl) {
  const Criteria crit = collect(stop);
  if (!space.is_member(x0)) {
    throw std::invalid_argument("integrate: initial point is not on Z");
  }
  const Field field(f, space, direction);
  const double sign = direction == Direction::descend ? -1.0 : 1.0;
  const double level_tol =
      crit.level_tol > 0.0 ? crit.level_tol : space.tolerances().level_tol;
  const double h_max = ctl.max_step > 0.0 ? ctl.max_step
                                          : 0.1 * space.box_diameter();
  const std::vector<Vector> stationary = stationary_singular_points(f, space);

  FlowTrajectory traj;
  traj.direction = direction;

  Vector y = x0;
  Vector k1 = field.velocity(y);
  double t = 0.0;
  double arc = 0.0;
  double fy = f.value(y);
  traj.samples.push_back({t, y, fy, k1.norm(), arc});

  auto finish = [&](Termination why, std::string msg = {}) {
    traj.termination = why;
    traj.message = std::move(msg);
    return traj;
  };
  auto nearest_stationary = [&](const Vector &x) -> std::pair<double, const Vector *> {
    double best = std::numeric_limits<double>::infinity();
    const Vector *which = nullptr;
    for (const Vector &p : stationary) {
      const double d = (x - p).norm();
      if (d < best) {
        best = d;
        which = &p;
      }
    }
    return {best, which};
  };
  // Snaps onto a stationary singular point; returns true when it happened.
  auto try_snap = [&]() {
    const auto [d, p] = nearest_stationary(y);
    if (p == nullptr) return false;
    // Inside the rank-drop region around the point the projected field is
    // no longer the stratum's field, so that region also counts as arrival.
    const bool arrived =
        d < ctl.singular_snap_radius ||
        (d < ctl.singular_rank_snap_radius &&
         space.jacobian_rank(y) < space.generic_rank());
    if (!arrived) return false;
    if (d > 0.0) {
      arc += d;
      y = *p;
      traj.samples.push_back({t, y, f.value(y), 0.0, arc});
    } else {
      traj.samples.back().grad_norm = 0.0;
    }
    return true;
  };

  if (try_snap()) return finish(Termination::converged, "stationary singular point");
  if (crit.grad_tol && k1.norm() < *crit.grad_tol) {
    return finish(Termination::converged);
  }
  if (crit.level) {
    const double gap = fy - *crit.level;
    if (std::abs(gap) < level_tol) return finish(Termination::reach_level);
    if (sign * gap > 0.0) {
      throw std::invalid_argument("integrate: start is already past the target level");
    }
  }

  double h = std::min(ctl.initial_step, h_max);
  int streak = 0;
  for (long n = 0;; ++n) {
    if (n >= ctl.max_steps) return finish(Termination::step_budget);
    h = std::min(h, h_max);
    if (!stationary.empty()) {
      const auto [d, p] = nearest_stationary(y);
      const double speed = k1.norm();
      if (speed > 0.0) h = std::min(h, 0.5 * d / speed);
    }
    bool to_budget = false;
    if (crit.time_budget) {
      const double remaining = *crit.time_budget - t;
      if (remaining <= ctl.min_step) return finish(Termination::time_budget);
      if (h >= remaining) {
        h = remaining;
        to_budget = true;
      }
    }
    if (h < ctl.min_step) return finish(Termination::step_underflow);

    Step st = rk_step(field, y, k1, h, ctl);
    if (!st.ok) {
      h *= 0.5;
      if (h < ctl.min_step) {
        return finish(Termination::retraction_failure,
                      "retraction failed after step halving");
      }
      continue;
    }
    if (st.err > 1.0) {
      h *= std::max(0.2, 0.9 * std::pow(st.err, -0.2));
      continue;
    }
    const double growth =
        st.err > 0.0 ? std::min(5.0, std::max(0.2, 0.9 * std::pow(st.err, -0.2)))
                     : 5.0;
    double f_new = f.value(st.y);

    bool landed = false;
    if (crit.level) {
      const double c = *crit.level;
      if (std::abs(f_new - c) < level_tol) {
        landed = true;
      } else if (sign * (f_new - c) > 0.0) {
        // Crossed the level inside this step: bisect the step length.
        double lo = 0.0;
        double hi = h;
        Step best;
        for (int it = 0; it < 200; ++it) {
          const double mid = 0.5 * (lo + hi);
          Step s = rk_step(field, y, k1, mid, ctl);
          if (!s.ok) {
            hi = mid;
            continue;
          }
          const double fm = f.value(s.y);
          best = std::move(s);
          h = mid;
          f_new = fm;
          if (std::abs(fm - c) < level_tol) break;
          if (sign * (fm - c) > 0.0) {
            hi = mid;
          } else {
            lo = mid;
          }
          if (hi - lo <= 1e-15 * h) break;
        }
        if (!best.ok) {
          return finish(Termination::retraction_failure,
                        "retraction failed while locating the level crossing");
        }
        st = std::move(best);
        if (std::abs(f_new - c) >= level_tol) {
          try {
            st.y = space.project_to_level_set(f, st.y, c);
            st.k_end = field.velocity(st.y);
            f_new = f.value(st.y);
          } catch (const RetractionError &e) {
            return finish(Termination::retraction_failure, e.what());
          }
        }
        landed = true;
      }
    }

    if (crit.left_box && !space.in_box(st.y)) {
      return finish(Termination::left_box);
    }

    t = to_budget && !landed ? *crit.time_budget : t + h;
    arc += st.arc;
    y = std::move(st.y);
    k1 = std::move(st.k_end);
    fy = f_new;
    const double gn = k1.norm();
    traj.samples.push_back({t, y, fy, gn, arc});

    if (landed) return finish(Termination::reach_level);
    if (try_snap()) return finish(Termination::converged, "stationary singular point");
    if (crit.grad_tol) {
      streak = gn < *crit.grad_tol ? streak + 1 : 0;
      if (streak >= ctl.converged_streak) return finish(Termination::converged);
    }
    if (crit.arc_budget && arc >= *crit.arc_budget) {
      return finish(Termination::arc_budget);
    }
    if (crit.time_budget && t >= *crit.time_budget) {
      return finish(Termination::time_budget);
    }
    h *= growth;
  }
}

namespace {

FlowTrajectory flow_to_level(const Objective &f, const SingularSpace &space,
                             const Vector &x0, double c, Direction dir,
                             const LevelFlowOptions &opt) {
  const double f0 = f.value(x0);
  const bool wrong_side = dir == Direction::descend ? c > f0 : c < f0;
  const double tol =
      opt.level_tol > 0.0 ? opt.level_tol : space.tolerances().level_tol;
  if (wrong_side && std::abs(f0 - c) >= tol) {
    throw std::invalid_argument(
        std::string(to_string(dir)) + "_to_level: target level is on the wrong side");
  }
  std::vector<StopCriterion> stop = {
      ReachLevel{c, opt.level_tol}, Converged{opt.grad_tol},
      ArcBudget{opt.arc_budget > 0.0 ? opt.arc_budget
                                     : 100.0 * space.box_diameter()},
      TimeBudget{opt.time_budget}};
  if (opt.stop_on_box_exit) stop.emplace_back(LeftBox{});
  return integrate(f, space, x0, dir, stop, opt.step);
}

}  // namespace

FlowTrajectory descend_to_level(const Objective &f, const SingularSpace &space,
                                const Vector &x0, double c,
                                const LevelFlowOptions &opt) {
  return flow_to_level(f, space, x0, c, Direction::descend, opt);
}

FlowTrajectory ascend_to_level(const Objective &f, const SingularSpace &space,
                               const Vector &x0, double c,
                               const LevelFlowOptions &opt) {
  return flow_to_level(f, space, x0, c, Direction::ascend, opt);
}

FlowLimit flow_limit(const Objective &f, const SingularSpace &space,
                     const Vector &x0, Direction direction,
                     const LevelFlowOptions &opt) {
  std::vector<StopCriterion> stop = {
      Converged{opt.grad_tol},
      ArcBudget{opt.arc_budget > 0.0 ? opt.arc_budget
                                     : 100.0 * space.box_diameter()},
      TimeBudget{opt.time_budget}};
  if (opt.stop_on_box_exit) stop.emplace_back(LeftBox{});
  FlowLimit out;
  out.trajectory = integrate(f, space, x0, direction, stop, opt.step);
  out.point = out.trajectory.back().y;
  switch (out.trajectory.termination) {
    case Termination::converged:
      out.status = LimitStatus::converged;
      break;
    case Termination::left_box:
      out.status = LimitStatus::exited;
      break;
    default:
      out.status = LimitStatus::inconclusive;
      break;
  }
  return out;
}

double arc_length(const FlowTrajectory &traj, double up_to_t) {
  const auto &s = traj.samples;
  if (s.empty() || up_to_t <= s.front().t) return 0.0;
  const double base = s.front().arc_len;
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (up_to_t < s[i].t) {
      // Share of the interval's arc under a linear model of |grad f|.
      const double dt = s[i].t - s[i - 1].t;
      const double tau = up_to_t - s[i - 1].t;
      const double g0 = s[i - 1].grad_norm;
      const double g = g0 + (s[i].grad_norm - g0) * tau / dt;
      const double whole = 0.5 * (g0 + s[i].grad_norm) * dt;
      const double part = 0.5 * (g0 + g) * tau;
      const double share = whole > 0.0 ? part / whole : tau / dt;
      return s[i - 1].arc_len - base + share * (s[i].arc_len - s[i - 1].arc_len);
    }
  }
  return s.back().arc_len - base;
}

void write_trajectory_csv(std::ostream &os, const FlowTrajectory &traj) {
  const Eigen::Index n = traj.samples.empty() ? 0 : traj.samples.front().y.size();
  os << "t";
  for (Eigen::Index i = 0; i < n; ++i) os << ",y_" << (i + 1);
  os << ",f,grad_norm,arc_len\n";
  for (const auto &s : traj.samples) {
    os << format_double(s.t);
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << format_double(s.y[i]);
    os << ',' << format_double(s.f) << ',' << format_double(s.grad_norm) << ','
       << format_double(s.arc_len) << '\n';
  }
}

}  // namespace morseflow

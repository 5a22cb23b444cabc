#include "morseflow/lojasiewicz.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "morseflow/random.h"

namespace morseflow {

namespace {

constexpr double kMinLevelGap = 1e-14;

double fitted_rhs(const LojasiewiczFit &fit, double f) {
  return fit.constant_C *
         std::pow(std::abs(fit.critical_value - f), 1.0 - fit.theta);
}

}  // namespace

std::vector<Vector> sample_near(const Objective &f, const SingularSpace &space,
                                const CriticalPoint &cp, double radius, int n,
                                std::uint64_t seed,
                                int max_attempts_per_sample) {
  if (!(radius > 0.0)) throw std::invalid_argument("sample_near: radius must be positive");
  Rng rng(seed);
  std::uniform_real_distribution<double> scale(-4.0, 0.0);
  std::vector<Vector> out;
  const long max_attempts = static_cast<long>(n) * max_attempts_per_sample;
  for (long a = 0; a < max_attempts && static_cast<int>(out.size()) < n; ++a) {
    const double sigma = radius * std::pow(10.0, scale(rng));
    const Vector proposal =
        cp.location + sigma * gaussian_vector(rng, cp.location.size());
    Vector y;
    try {
      y = space.retract(proposal, std::numeric_limits<double>::infinity());
    } catch (const RetractionError &) {
      continue;
    }
    if ((y - cp.location).norm() > radius || !space.is_member(y)) continue;
    if (std::abs(f.value(y) - cp.value) <= kMinLevelGap) continue;
    if (!(riemannian_grad(f, space, y).norm() > 0.0)) continue;
    out.push_back(std::move(y));
  }
  return out;
}

LojasiewiczFit estimate_fit(const Objective &f, const SingularSpace &space,
                            const CriticalPoint &cp, const FitOptions &opt) {
  if (opt.n_bins < 2) throw std::invalid_argument("estimate_fit: need at least 2 bins");
  const std::vector<Vector> pts = sample_near(
      f, space, cp, opt.radius, opt.n_samples, opt.seed, opt.max_attempts_per_sample);
  if (static_cast<int>(pts.size()) < opt.min_samples) {
    throw FitError("estimate_fit: only " + std::to_string(pts.size()) +
                   " samples on Z near the critical point");
  }
  std::vector<std::pair<double, double>> uv;
  std::vector<double> grads;
  uv.reserve(pts.size());
  for (const Vector &y : pts) {
    const double g = riemannian_grad(f, space, y).norm();
    grads.push_back(g);
    uv.emplace_back(std::log(std::abs(cp.value - f.value(y))), std::log(g));
  }
  std::vector<std::pair<double, double>> sorted = uv;
  std::sort(sorted.begin(), sorted.end());

  // Per-bin minima over equal-count bins in u.
  const std::size_t m = sorted.size();
  const auto bins = static_cast<std::size_t>(opt.n_bins);
  std::vector<double> bu;
  std::vector<double> bv;
  for (std::size_t b = 0; b < bins; ++b) {
    const std::size_t lo = b * m / bins;
    const std::size_t hi = (b + 1) * m / bins;
    if (lo >= hi) continue;
    auto it = std::min_element(
        sorted.begin() + static_cast<long>(lo), sorted.begin() + static_cast<long>(hi),
        [](const auto &a, const auto &c) { return a.second < c.second; });
    bu.push_back(it->first);
    bv.push_back(it->second);
  }
  if (bu.size() < 2) throw FitError("estimate_fit: too few populated bins");
  Matrix A(static_cast<Eigen::Index>(bu.size()), 2);
  Vector rhs(static_cast<Eigen::Index>(bu.size()));
  for (std::size_t i = 0; i < bu.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    A(k, 0) = bu[i];
    A(k, 1) = 1.0;
    rhs[k] = bv[i];
  }
  const Vector coef = A.colPivHouseholderQr().solve(rhs);
  const double slope = coef[0];
  LojasiewiczFit fit;
  fit.theta = 1.0 - slope;
  fit.constant_C = std::exp(coef[1]);
  fit.radius_delta = opt.radius;
  fit.critical_value = cp.value;
  fit.n_samples = static_cast<int>(pts.size());
  if (!std::isfinite(fit.theta) || fit.theta < opt.theta_min ||
      fit.theta > opt.theta_max) {
    throw FitError("estimate_fit: fitted theta " + format_double(fit.theta) +
                   " outside [" + format_double(opt.theta_min) + ", " +
                   format_double(opt.theta_max) + "]");
  }
  double slack = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double rhs_i = fitted_rhs(fit, f.value(pts[i]));
    slack = std::max(slack, std::max(0.0, rhs_i - grads[i]) / grads[i]);
  }
  fit.envelope_slack = slack;
  return fit;
}

double holdout_pass_fraction(const Objective &f, const SingularSpace &space,
                             const CriticalPoint &cp, const LojasiewiczFit &fit,
                             int n_samples, std::uint64_t seed, double slack) {
  const std::vector<Vector> pts =
      sample_near(f, space, cp, fit.radius_delta, n_samples, seed);
  if (pts.empty()) return std::numeric_limits<double>::quiet_NaN();
  int pass = 0;
  for (const Vector &y : pts) {
    const double g = riemannian_grad(f, space, y).norm();
    if (g >= fitted_rhs(fit, f.value(y)) * (1.0 - slack)) ++pass;
  }
  return static_cast<double>(pass) / static_cast<double>(pts.size());
}

double default_delta(const SingularSpace &space, const CriticalPoint &cp,
                     const std::vector<CriticalPoint> &all, double cap) {
  double delta = std::min(cap, space.box_margin(cp.location));
  for (const CriticalPoint &other : all) {
    const double d = (other.location - cp.location).norm();
    if (d > 0.0) delta = std::min(delta, 0.5 * d);
  }
  return delta;
}

double choose_epsilon(const LojasiewiczFit &fit, double safety,
                      double value_gap) {
  if (!(safety >= 0.0 && safety <= 1.0)) {
    throw std::invalid_argument("choose_epsilon: safety must lie in [0, 1]");
  }
  const double eps =
      safety * std::pow(fit.constant_C * fit.theta * fit.radius_delta / 2.0,
                        1.0 / fit.theta);
  if (!(eps < value_gap)) {
    throw std::domain_error("choose_epsilon: eps " + format_double(eps) +
                            " reaches the next critical value (gap " +
                            format_double(value_gap) + "); shrink delta");
  }
  return eps;
}

double length_bound(const LojasiewiczFit &fit, double eps) {
  return std::pow(eps, fit.theta) / (fit.constant_C * fit.theta);
}

FlowEstimateReport verify_flow_estimates(const Objective &f,
                                         const SingularSpace &space,
                                         const CriticalPoint &cp,
                                         const LojasiewiczFit &fit, double eps,
                                         const std::vector<Vector> &starts,
                                         double check_slack) {
  if (cp.kind == PointKind::minimum) {
    throw std::invalid_argument(
        "verify_flow_estimates: a minimum has nothing below it to flow to");
  }
  if (!(eps > 0.0)) throw std::invalid_argument("verify_flow_estimates: eps must be positive");
  const double c = cp.value;
  const double theta = fit.theta;
  const double ct = fit.constant_C * theta;
  const double level_tol = space.tolerances().level_tol;
  for (const Vector &s : starts) {
    if (!space.is_member(s) || std::abs(f.value(s) - c) >= level_tol) {
      throw std::invalid_argument(
          "verify_flow_estimates: every start must lie on Z at the critical level");
    }
    if ((s - cp.location).norm() <= 1e-12) {
      throw std::invalid_argument(
          "verify_flow_estimates: a start coincides with the critical point");
    }
  }

  FlowEstimateReport rep;
  rep.n_starts = static_cast<int>(starts.size());
  rep.length_bound = length_bound(fit, eps);
  int arc_ok = 0;
  int conf_ok = 0;
  auto phi = [&](double fv) { return std::pow(std::max(0.0, c - fv), theta); };
  for (const Vector &s : starts) {
    FlowTrajectory traj = descend_to_level(f, space, s, c - eps);
    if (captured(traj)) {
      ++rep.n_captured;
      rep.trajectories.push_back(std::move(traj));
      continue;
    }
    if (traj.termination != Termination::reach_level) {
      ++rep.n_failed;
      rep.trajectories.push_back(std::move(traj));
      continue;
    }
    ++rep.n_landed;
    const auto &smp = traj.samples;
    for (std::size_t k = 1; k + 1 < smp.size(); ++k) {
      const double dt = smp[k + 1].t - smp[k - 1].t;
      if (!(dt > 0.0)) continue;
      const double rate = (phi(smp[k + 1].f) - phi(smp[k - 1].f)) / dt;
      ++rep.interior_samples;
      if (rate >= ct * smp[k].grad_norm * (1.0 - check_slack)) ++rep.interior_pass;
    }
    bool arc_pass = true;
    for (const FlowSample &p : smp) {
      if (p.arc_len > phi(p.f) / ct * (1.0 + check_slack)) arc_pass = false;
    }
    if (arc_pass) ++arc_ok;
    const double total = smp.back().arc_len;
    rep.max_total_arc = std::max(rep.max_total_arc, total);
    if (total >= rep.length_bound * (1.0 + check_slack)) {
      rep.total_arc_within_bound = false;
    }
    const double dist = (smp.back().y - cp.location).norm();
    rep.max_final_distance = std::max(rep.max_final_distance, dist);
    if (dist < fit.radius_delta) ++conf_ok;
    rep.trajectories.push_back(std::move(traj));
  }
  auto frac = [](int a, int b) {
    return b > 0 ? static_cast<double>(a) / static_cast<double>(b)
                 : std::numeric_limits<double>::quiet_NaN();
  };
  rep.check_i_fraction = frac(rep.interior_pass, rep.interior_samples);
  rep.check_ii_fraction = frac(arc_ok, rep.n_landed);
  rep.check_iii_fraction = frac(conf_ok, rep.n_landed);
  return rep;
}

}  // namespace morseflow

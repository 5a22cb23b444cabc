#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "morseflow/critical.h"
#include "morseflow/flow.h"

namespace morseflow {

/// Fitted gradient inequality ||grad f(y)|| >= C |c - f(y)|^(1 - theta) on
/// the ball of radius radius_delta about a critical point with value c.
struct LojasiewiczFit {
  double theta = 0.5;
  double constant_C = 1.0;
  double radius_delta = 0.0;
  double critical_value = 0.0;
  int n_samples = 0;
  // max over samples of max(0, fitted - actual) / actual, where actual is
  // the gradient norm and fitted the right-hand side of the inequality.
  double envelope_slack = 0.0;
  double holdout_pass_fraction = std::numeric_limits<double>::quiet_NaN();

  friend bool operator==(const LojasiewiczFit &a, const LojasiewiczFit &b) {
    auto same = [](double x, double y) {
      return x == y || (std::isnan(x) && std::isnan(y));
    };
    return a.theta == b.theta && a.constant_C == b.constant_C &&
           a.radius_delta == b.radius_delta &&
           a.critical_value == b.critical_value && a.n_samples == b.n_samples &&
           same(a.envelope_slack, b.envelope_slack) &&
           same(a.holdout_pass_fraction, b.holdout_pass_fraction);
  }
};

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FitOptions {
  double radius = 0.5;
  int n_samples = 2000;
  std::uint64_t seed = 0;
  int n_bins = 30;
  int min_samples = 100;
  double theta_min = 0.05;
  double theta_max = 0.95;
  int max_attempts_per_sample = 50;
};

/// Draws points on Z within `radius` of the critical point (Gaussian
/// proposals over many scales, retracted onto Z) and returns those with
/// |f - c| above 1e-14.
std::vector<Vector> sample_near(const Objective &f, const SingularSpace &space,
                                const CriticalPoint &cp, double radius, int n,
                                std::uint64_t seed,
                                int max_attempts_per_sample = 50);

/// Lower-envelope fit: quantile bins on log|c - f|, per-bin minima of
/// log ||grad f||, least squares through the minima. Throws FitError when
/// fewer than min_samples points are obtained or theta leaves
/// [theta_min, theta_max].
LojasiewiczFit estimate_fit(const Objective &f, const SingularSpace &space,
                            const CriticalPoint &cp, const FitOptions &opt = {});

/// Fraction of fresh samples satisfying the fitted inequality with slack.
double holdout_pass_fraction(const Objective &f, const SingularSpace &space,
                             const CriticalPoint &cp, const LojasiewiczFit &fit,
                             int n_samples, std::uint64_t seed,
                             double slack = 0.05);

/// Half the distance to the nearest other critical point, capped by the
/// box margin of cp and by `cap`.
double default_delta(const SingularSpace &space, const CriticalPoint &cp,
                     const std::vector<CriticalPoint> &all, double cap = 0.5);

/// eps = safety * (C theta delta / 2)^(1 / theta). Throws std::domain_error
/// if eps is not below `value_gap`, the distance to the nearest other
/// critical value.
double choose_epsilon(const LojasiewiczFit &fit, double safety,
                      double value_gap = std::numeric_limits<double>::infinity());

/// (1 / (C theta)) eps^theta.
double length_bound(const LojasiewiczFit &fit, double eps);

struct FlowEstimateReport {
  int n_starts = 0;
  int n_landed = 0;
  int n_captured = 0;  // stable-set evidence; excluded from the checks
  int n_failed = 0;    // flows that ended without landing or capture
  // (i) differential inequality at interior samples
  int interior_samples = 0;
  int interior_pass = 0;
  double check_i_fraction = 0.0;
  // (ii) arc length bounded at every sample of a trajectory
  double check_ii_fraction = 0.0;
  double max_total_arc = 0.0;
  double length_bound = 0.0;
  bool total_arc_within_bound = true;
  // (iii) final point within delta of cp
  double check_iii_fraction = 0.0;
  double max_final_distance = 0.0;
  std::vector<FlowTrajectory> trajectories;
};

/// Descends each start from level c to c - eps and checks the three
/// estimates along the way with relative slack. Refuses minima and
/// starts that coincide with the critical point.
FlowEstimateReport verify_flow_estimates(const Objective &f,
                                         const SingularSpace &space,
                                         const CriticalPoint &cp,
                                         const LojasiewiczFit &fit, double eps,
                                         const std::vector<Vector> &starts,
                                         double check_slack = 0.05);

}  // namespace morseflow

#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "morseflow/polynomial.h"
#include "morseflow/space.h"
#include "morseflow/types.h"

namespace morseflow {

enum class Direction { descend, ascend };

// Stop criteria. integrate() terminates at the first one satisfied.
struct ReachLevel {
  double level = 0.0;
  double tol = 0.0;  // 0 selects the space's level_tol
};
struct Converged {
  double grad_tol = 1e-8;
};
struct ArcBudget {
  double length = 0.0;
};
struct TimeBudget {
  double time = 0.0;
};
struct LeftBox {};

using StopCriterion =
    std::variant<ReachLevel, Converged, ArcBudget, TimeBudget, LeftBox>;

enum class Termination {
  reach_level,
  converged,
  arc_budget,
  time_budget,
  left_box,
  step_budget,
  retraction_failure,
  step_underflow,
};

std::string_view to_string(Direction d);
std::string_view to_string(Termination t);

struct StepControl {
  double abs_tol = 1e-9;
  double rel_tol = 1e-9;
  double max_step = 0.0;  // 0 selects 0.1 * box diameter
  double initial_step = 1e-3;
  double min_step = 1e-14;
  long max_steps = 5'000'000;
  int converged_streak = 3;  // accepted steps below grad_tol to converge
  // A trajectory this close to a stationary rank-transition point of Z is
  // snapped onto it and declared converged.
  double singular_snap_radius = 1e-9;
  // Within this radius, reaching the rank-drop region also snaps.
  double singular_rank_snap_radius = 1e-6;
};

struct FlowSample {
  double t = 0.0;
  Vector y;
  double f = 0.0;
  double grad_norm = 0.0;
  double arc_len = 0.0;
};

/// Time-stamped samples of a flow line together with the reason it stopped.
struct FlowTrajectory {
  std::vector<FlowSample> samples;
  Direction direction = Direction::descend;
  Termination termination = Termination::time_budget;
  std::string message;

  const FlowSample &front() const { return samples.front(); }
  const FlowSample &back() const { return samples.back(); }
  /// Terminated normally (not by a numerical failure).
  bool ok() const {
    return termination != Termination::retraction_failure &&
           termination != Termination::step_underflow;
  }
};

/// Adaptive embedded Runge-Kutta (Dormand-Prince 5(4)) integration of
/// -grad f (descend) or +grad f (ascend) on Z, retracting every stage onto Z.
///
/// At least one of ArcBudget or TimeBudget must be present. A ReachLevel
/// crossing is located by bisection on the final step so the endpoint
/// satisfies |f - level| < level_tol. Numerical failures do not throw; they
/// are reported through the termination field with the last good sample.
FlowTrajectory integrate(const Objective &f, const SingularSpace &space,
                         const Vector &x0, Direction direction,
                         std::span<const StopCriterion> stop,
                         const StepControl &step = {});

struct LevelFlowOptions {
  double grad_tol = 1e-8;
  double level_tol = 0.0;     // 0 selects the space's level_tol
  double arc_budget = 0.0;    // 0 selects 100 * box diameter
  double time_budget = 1e7;
  bool stop_on_box_exit = true;
  StepControl step;
};

/// Flow to level c; if the flow converges first the trajectory is captured by
/// a critical point (evidence of stable/unstable set membership).
FlowTrajectory descend_to_level(const Objective &f, const SingularSpace &space,
                                const Vector &x0, double c,
                                const LevelFlowOptions &opt = {});
FlowTrajectory ascend_to_level(const Objective &f, const SingularSpace &space,
                               const Vector &x0, double c,
                               const LevelFlowOptions &opt = {});

inline bool captured(const FlowTrajectory &t) {
  return t.termination == Termination::converged;
}

enum class LimitStatus { converged, exited, inconclusive };
std::string_view to_string(LimitStatus s);

struct FlowLimit {
  LimitStatus status = LimitStatus::inconclusive;
  Vector point;  // final point; the critical point candidate when converged
  FlowTrajectory trajectory;
};

/// Runs the flow until it converges, leaves the box or exhausts a budget.
/// Budget exhaustion is reported as inconclusive, never as convergence.
FlowLimit flow_limit(const Objective &f, const SingularSpace &space,
                     const Vector &x0, Direction direction,
                     const LevelFlowOptions &opt = {});

/// Arc length up to time t: the recorded arc_len at samples (the
/// integrator's own quadrature), interpolated inside an interval with a
/// linear model of the gradient norm. Clamped to the sample range.
double arc_length(const FlowTrajectory &traj, double up_to_t);

/// Whether p is a fixed point of the realized flow. Points with vanishing
/// projected gradient are fixed. Otherwise a probe walks from p in steps of
/// probe_radius along -/+ the projected gradient, retracting onto Z after
/// each; p is fixed if after a nominal arc of 10 * probe_radius the probe is
/// still inside the probe_radius ball in both directions.
bool is_stationary_point(const Objective &f, const SingularSpace &space,
                         const Vector &p, double probe_radius = 1e-4,
                         double crit_tol = 1e-9);

/// Writes the trajectory as CSV with header t,y_1..y_n,f,grad_norm,arc_len.
void write_trajectory_csv(std::ostream &os, const FlowTrajectory &traj);

/// Shortest round-trip decimal text for a double.
std::string format_double(double v);

}  // namespace morseflow

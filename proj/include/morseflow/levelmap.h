#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "morseflow/critical.h"
#include "morseflow/flow.h"

namespace morseflow {

enum class PairStatus { landed, captured, inconclusive };
std::string_view to_string(PairStatus s);

struct LevelPair {
  Vector source;
  Vector image;  // landing point, or the limit point when captured
  double arc_length = 0.0;
  PairStatus status = PairStatus::inconclusive;
  Termination termination = Termination::reach_level;
  int critical_index = -1;  // index into the critical point list when captured
};

/// Flow-line map from f^{-1}(level_from) to f^{-1}(level_to).
struct LevelSetMap {
  double level_from = 0.0;
  double level_to = 0.0;
  std::vector<LevelPair> pairs;
  std::vector<FlowTrajectory> trajectories;  // one per pair, same order
};

/// Flows each source to level b, ascending when b > a. Sources must lie on
/// Z at level a. When `cps` is given, captured pairs are matched to the
/// nearest critical point within `match_radius`, and a landing within
/// `match_radius` of a critical point whose value is b also counts as
/// captured.
LevelSetMap level_map(const Objective &f, const SingularSpace &space, double a,
                      double b, const std::vector<Vector> &sources,
                      const std::vector<CriticalPoint> *cps = nullptr,
                      const LevelFlowOptions &opt = {},
                      double match_radius = 1e-4);

/// max ||L_b^a(L_a^b(s)) - s|| over pairs that land both ways; 0 if a = b.
double roundtrip_error(const Objective &f, const SingularSpace &space, double a,
                       double b, const std::vector<Vector> &sources,
                       const LevelFlowOptions &opt = {});

struct UnstableSlice {
  CriticalPoint critical_point;
  double level = 0.0;
  std::vector<Vector> points;
  int n_probes = 0;      // on-Z probes drawn around the critical point
  int n_descending = 0;  // probes below the curvature margin
  int n_rejected = 0;    // representatives failing the ascent check
};

struct SliceOptions {
  int n_points = 64;
  double probe_radius = 1e-6;
  double curvature_margin = 0.1;
  double cluster_tol = 1e-6;
  std::uint64_t seed = 0;
};

/// Approximates W^-_x at the given level: probes just below cp, descends
/// them, clusters the landing points at 10 * cluster_tol and keeps the
/// representatives whose ascent returns to cp. Throws std::invalid_argument
/// when no probe lies below cp.
UnstableSlice unstable_slice(const Objective &f, const SingularSpace &space,
                             const CriticalPoint &cp, double level,
                             const SliceOptions &opt = {});

struct Condition2Options {
  int n_samples = 200;
  std::uint64_t seed = 0;
  // Samples are drawn from the box scaled by this factor about its centre.
  double sample_fraction = 0.5;
  int max_attempts_per_sample = 200;
  double value_merge_tol = 1e-8;
  LevelFlowOptions flow;
};

/// Condition 2 on the band (a, b): every sampled point must reach a level
/// bound or converge to a limit inside the band, in both directions.
ConditionReport check_condition2(const Objective &f, const SingularSpace &space,
                                 double a, double b,
                                 const Condition2Options &opt = {});

struct Condition4Options {
  std::vector<double> radii = {0.1, 0.03, 0.01, 0.003};
  int n_per_radius = 20;
  double tube_rho = 0.05;
  double monotone_slack = 0.1;
  // Distances below this are integration noise for the monotonicity test.
  double noise_floor = 1e-8;
  std::uint64_t seed = 0;
  LevelFlowOptions flow;
};

/// Per-radius level maps recorded by check_condition4.
struct Condition4Trace {
  std::vector<LevelSetMap> maps;
};

/// Tube probe around a non-minimal critical point: for each radius,
/// flow ball samples to cp.value - eps and record the worst distance d(r)
/// from a landing point to the slice. Captured flows are stable-set
/// exclusions.
ConditionReport check_condition4(const Objective &f, const SingularSpace &space,
                                 const CriticalPoint &cp, double eps,
                                 const UnstableSlice &slice,
                                 const Condition4Options &opt = {},
                                 Condition4Trace *trace = nullptr);

}  // namespace morseflow

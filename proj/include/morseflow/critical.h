#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "morseflow/flow.h"
#include "morseflow/polynomial.h"
#include "morseflow/space.h"
#include "morseflow/types.h"

namespace morseflow {

enum class PointKind { minimum, maximum, saddle, degenerate, unresolved };

std::string_view to_string(PointKind k);
PointKind point_kind_from_string(std::string_view s);

struct CriticalPoint {
  Vector location;
  double value = 0.0;
  double grad_norm = 0.0;
  PointKind kind = PointKind::unresolved;
  double cluster_radius = 0.0;
  // Located as a rank-transition point of Z rather than by the Lagrange solve.
  bool singular = false;
};

struct CriticalLevelSet {
  double value = 0.0;
  std::vector<CriticalPoint> points;
};

struct CriticalSearchOptions {
  int grid_density = 9;
  double crit_tol = 1e-9;
  double cluster_tol = 1e-6;
  // Regular candidates this close to a stationary singular point are the
  // same fixed point seen through an unstable Lagrange system.
  double singular_absorb_radius = 1e-4;
  int max_iter = 200;
};

struct CriticalSearchResult {
  std::vector<CriticalPoint> points;  // sorted lexicographically by location
  int n_seeds = 0;
  int n_discarded = 0;  // seeds that did not converge to an accepted point
};

/// Grid-seeded damped Newton on the Lagrange system {grad f = Dg^T lambda,
/// g = 0}, plus the fixed points among the rank-transition points of Z.
/// Points are returned unclassified.
CriticalSearchResult find_critical_points(const Objective &f,
                                          const SingularSpace &space,
                                          const CriticalSearchOptions &opt = {});

struct ClassifyOptions {
  double probe_radius = 1e-2;
  int n_probes = 64;
  double probe_tol = 1e-12;
  int min_probes = 8;
  std::uint64_t seed = 0;
};

/// Probe-based classification. A saddle verdict also needs two flow
/// witnesses: a below probe that descends away, and a below probe whose
/// ascent returns to the critical point. Without them the point is reported
/// as degenerate.
PointKind classify(const Objective &f, const SingularSpace &space,
                   const CriticalPoint &cp, const ClassifyOptions &opt = {});

/// Groups points whose values agree within value_merge_tol (single linkage
/// on sorted values).
std::vector<CriticalLevelSet> group_by_value(std::vector<CriticalPoint> cps,
                                             double value_merge_tol = 1e-8);

struct ModulusRow {
  double r = 0.0;
  double d = 0.0;
  int n_landed = 0;
  int n_captured = 0;

  friend bool operator==(const ModulusRow &, const ModulusRow &) = default;
};

/// Verdict and numerical witnesses for one condition. Non-finite witness
/// values are legal (an infinite gap, say).
struct ConditionReport {
  int condition = 0;
  Verdict verdict = Verdict::inconclusive;
  std::string message;
  std::map<std::string, double> witnesses;
  std::map<std::string, std::vector<double>> series;
  std::vector<ModulusRow> modulus_table;

  friend bool operator==(const ConditionReport &,
                         const ConditionReport &) = default;
};

/// Condition 1: merged critical values are separated by more than gap_tol.
ConditionReport check_condition1(const std::vector<CriticalPoint> &cps,
                                 double gap_tol = 1e-4,
                                 double value_merge_tol = 1e-8);

}  // namespace morseflow

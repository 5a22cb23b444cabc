#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "morseflow/polynomial.h"
#include "morseflow/space.h"

namespace morseflow {

/// Raised for malformed or invalid problem files. The message names the
/// offending field.
class ProblemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ProblemTolerances {
  SpaceTolerances space;
  double crit_tol = 1e-9;
  double cluster_tol = 1e-6;
  double value_merge_tol = 1e-8;
  double gap_tol = 1e-4;
  double grad_tol = 1e-8;
  double check_slack = 0.05;

  friend bool operator==(const ProblemTolerances &,
                         const ProblemTolerances &) = default;
};

/// Run parameters that are not tolerances. Every field has a default, so a
/// problem file only lists what it changes.
struct ProblemSettings {
  int grid_density = 9;
  double classify_probe_radius = 1e-2;
  int fit_samples = 2000;
  double fit_radius = 0.0;  // 0 selects the default delta of each point
  double delta_cap = 0.5;
  double safety = 0.5;
  int verify_starts = 50;
  std::vector<Interval> bands = {{-1.0, 1.0}};
  int cond2_samples = 200;
  double cond2_sample_fraction = 0.5;
  std::vector<double> radii = {0.1, 0.03, 0.01, 0.003};
  int cond4_per_radius = 20;
  double tube_rho = 0.05;
  double slice_probe_radius = 1e-6;
  int max_recorded_trajectories = 8;

  friend bool operator==(const ProblemSettings &,
                         const ProblemSettings &) = default;
};

struct ProblemSpec {
  std::string name;
  std::vector<std::string> variables;
  std::string objective;
  std::vector<std::string> constraints;
  std::vector<Interval> box;
  bool proper_on_box = false;
  ProblemTolerances tolerances;
  ProblemSettings settings;
  std::uint64_t seed = 0;

  friend bool operator==(const ProblemSpec &, const ProblemSpec &) = default;
};

/// Checks the invariants: polynomials parse over the declared variables,
/// box intervals have lo < hi, settings are in range. Throws ProblemError.
void validate(const ProblemSpec &spec);

ProblemSpec parse_problem(std::string_view json_text);
ProblemSpec load_problem(const std::filesystem::path &path);
std::string problem_to_json(const ProblemSpec &spec);

Objective make_objective(const ProblemSpec &spec);
SingularSpace make_space(const ProblemSpec &spec);

/// Names of the built-in benchmarks, sorted.
std::vector<std::string> benchmark_names();
/// Throws ProblemError for an unknown name.
ProblemSpec benchmark(std::string_view name);

}  // namespace morseflow

#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "morseflow/critical.h"
#include "morseflow/flow.h"
#include "morseflow/lojasiewicz.h"
#include "morseflow/problem.h"

namespace morseflow {

enum class Stage { critical, loja, cond1, cond2, cond4 };

std::string_view to_string(Stage s);
/// Parses a comma separated stage list such as "critical,loja,cond1".
std::vector<Stage> parse_stages(std::string_view text);
std::vector<Stage> all_stages();

/// A requested stage whose prerequisite stage was not requested.
class StageDependencyError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct FitEntry {
  int critical_index = -1;
  std::optional<LojasiewiczFit> fit;
  std::string error;  // set when the fit was refused

  friend bool operator==(const FitEntry &, const FitEntry &) = default;
};

struct RecordedTrajectory {
  std::string label;
  FlowTrajectory trajectory;
};

struct ExperimentReport {
  ProblemSpec problem;
  std::vector<Stage> stages;
  std::vector<CriticalPoint> critical_points;
  int critical_seeds = 0;
  int critical_discarded = 0;
  std::vector<FitEntry> lojasiewicz_fits;
  std::vector<ConditionReport> conditions;
  Verdict corollary_verdict = Verdict::inconclusive;
  std::map<std::string, std::string> stage_errors;  // stage name -> message
  std::vector<RecordedTrajectory> trajectories;
};

bool operator==(const ExperimentReport &a, const ExperimentReport &b);

/// Runs the requested stages in pipeline order. Throws StageDependencyError
/// when loja, cond1 or cond4 are requested without critical, or cond4
/// without loja. Errors inside a stage become inconclusive entries.
ExperimentReport run_experiment(const ProblemSpec &spec,
                                const std::vector<Stage> &stages);

/// Pass only when Conditions 1, 2 and 4 were all checked and passed and the
/// problem asserts proper_on_box; fail if any of them failed.
Verdict corollary_verdict(const std::vector<ConditionReport> &conditions,
                          bool proper_on_box);

/// 0 all requested verdicts pass, 1 any fail, 2 any inconclusive.
int exit_code(const ExperimentReport &report);

}  // namespace morseflow

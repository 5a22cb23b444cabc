#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "morseflow/critical.h"
#include "morseflow/experiment.h"
#include "morseflow/lojasiewicz.h"

namespace morseflow {

enum class ReportFormat { json, csv_bundle };
ReportFormat report_format_from_string(std::string_view s);

/// JSON array of {location, value, grad_norm, kind, cluster_radius, singular}.
std::string critical_points_to_json(const std::vector<CriticalPoint> &cps);
/// {theta, C, delta, critical_value, n_samples, envelope_slack,
///  holdout_pass_fraction}.
std::string fit_to_json(const LojasiewiczFit &fit);
/// {condition, verdict, message, witnesses, series, modulus_table}.
std::string condition_to_json(const ConditionReport &rep);

/// Full report. Keys are sorted and numbers use shortest round-trip text,
/// so identical reports give identical bytes.
std::string report_to_json(const ExperimentReport &report);
ExperimentReport report_from_json(std::string_view text);

/// Writes the report into out_dir (created if missing) and returns the
/// written paths, sorted. json writes report.json; csv-bundle writes the
/// summary tables plus one CSV per recorded trajectory.
std::vector<std::filesystem::path> emit_report(const ExperimentReport &report,
                                               ReportFormat format,
                                               const std::filesystem::path &out_dir);

}  // namespace morseflow

#pragma once

// JSON helpers shared by the problem and report code.

#include <json.hpp>

#include "morseflow/problem.h"

namespace morseflow::detail {

using nlohmann::json;

// Non-finite doubles are written as the strings "Infinity", "-Infinity" and
// "NaN" so every value survives a round trip.
json number_to_json(double v);
double number_from_json(const json &j, const std::string &field);

json problem_to_json_value(const ProblemSpec &spec);
ProblemSpec problem_from_json_value(const json &j);

}  // namespace morseflow::detail

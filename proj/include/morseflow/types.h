#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <string_view>

namespace morseflow {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Outcome of an empirical check.
enum class Verdict { pass, fail, inconclusive };

std::string_view to_string(Verdict v);
Verdict verdict_from_string(std::string_view s);

/// Thrown when an argument has the wrong dimension.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void check_dimension(std::size_t expected, std::size_t actual,
                            const char *what) {
  if (expected != actual) {
    throw DimensionError(std::string(what) + ": expected dimension " +
                         std::to_string(expected) + ", got " +
                         std::to_string(actual));
  }
}

}  // namespace morseflow

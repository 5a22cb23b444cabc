#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "morseflow/types.h"

namespace morseflow {

using Rng = std::mt19937_64;

/// Child seed for a named substream, e.g. derive_seed(spec.seed, "cond2").
std::uint64_t derive_seed(std::uint64_t base, std::string_view name);
/// Child seed for the i-th task of a stream.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

/// Standard normal vector of length n.
Vector gaussian_vector(Rng &rng, Eigen::Index n);
/// Uniformly distributed unit vector in R^n.
Vector unit_vector(Rng &rng, Eigen::Index n);

}  // namespace morseflow

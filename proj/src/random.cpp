#include "morseflow/random.h"

namespace morseflow {

namespace {

// splitmix64 finalizer
std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::string_view name) {
  // FNV-1a over the stream name, then mixed with the parent seed.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return mix(base ^ mix(h));
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  return mix(mix(base) + index);
}

Vector gaussian_vector(Rng &rng, Eigen::Index n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

Vector unit_vector(Rng &rng, Eigen::Index n) {
  for (;;) {
    Vector v = gaussian_vector(rng, n);
    const double norm = v.norm();
    if (norm > 1e-12) return v / norm;
  }
}

}  // namespace morseflow

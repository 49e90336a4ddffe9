#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include <Eigen/Core>

namespace cmcm {

/// Mixes any number of integers into one 64-bit seed (splitmix64 chaining).
std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts);

/// Seeded generator with platform-independent real-valued draws.
///
/// std::mt19937_64 is fully specified by the standard, but the std::
/// distributions are not, so the conversions to doubles live here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform();
  /// Uniform on (0, 1].
  double uniform_open_zero() { return 1.0 - uniform(); }
  double normal();
  std::uint64_t next_u64() { return engine_(); }
  /// Uniform integer on [0, n).
  std::uint64_t below(std::uint64_t n);

  Eigen::VectorXd normal_vector(Eigen::Index n);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace cmcm

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "lmc/types.hpp"

namespace lmc {

/// xoshiro256** seeded through splitmix64. Bit-exact across platforms,
/// unlike the standard distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept;

  std::uint64_t next() noexcept;
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Standard normal (Box-Muller, second value cached).
  double normal() noexcept;

 private:
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// `size` bytes from a seeded Rng.
Bytes random_bytes(std::size_t size, std::uint64_t seed);

/// Per-element random walk with a geometrically decaying step scale:
/// initial weights uniform in [-init_range, init_range]; the move from step k
/// to k+1 adds N(0, sigma0 * gamma^k) to float32 master weights, which are
/// then stored in the target element type.
struct TrajectoryConfig {
  std::size_t element_count = 1 << 20;
  ElementType element_type = ElementType::BF16;  // BF16 or FP32
  double init_range = 0.005;
  double sigma0 = 0.005;
  double gamma = 0.9;
  std::uint64_t seed = 1;
};

class SyntheticTrajectory {
 public:
  explicit SyntheticTrajectory(const TrajectoryConfig& config);

  std::size_t step() const noexcept { return step_; }
  const TensorBuffer& current() const noexcept { return current_; }
  double step_scale(std::size_t step) const noexcept;

  void advance();

 private:
  void store();

  TrajectoryConfig config_;
  Rng rng_;
  std::vector<float> master_;
  TensorBuffer current_;
  std::size_t step_ = 0;
};

/// Steps 0..steps-1 of a trajectory.
std::vector<TensorBuffer> generate_trajectory(const TrajectoryConfig& config, std::size_t steps);

/// A bf16 checkpoint delta of about `size_bytes`: the XOR of steps
/// `step - 1` and `step` of a default trajectory.
TensorBuffer synthetic_delta_corpus(std::size_t size_bytes, std::uint64_t seed, std::size_t step = 3);

}  // namespace lmc

#include "lmc/synthetic.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numbers>

#include "lmc/delta.hpp"
#include "lmc/error.hpp"

namespace lmc {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed) noexcept {
  for (auto& s : s_) s = splitmix64(seed);
}

std::uint64_t Rng::next() noexcept {
  const std::uint64_t result = std::rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = std::rotl(s_[3], 45);
  return result;
}

double Rng::uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Rng::normal() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

Bytes random_bytes(std::size_t size, std::uint64_t seed) {
  Rng rng(seed);
  Bytes out(size);
  std::size_t i = 0;
  for (; i + 8 <= size; i += 8) {
    const std::uint64_t v = rng.next();
    std::memcpy(out.data() + i, &v, 8);
  }
  if (i < size) {
    const std::uint64_t v = rng.next();
    std::memcpy(out.data() + i, &v, size - i);
  }
  return out;
}

SyntheticTrajectory::SyntheticTrajectory(const TrajectoryConfig& config) : config_(config), rng_(config.seed) {
  if (config.element_type != ElementType::BF16 && config.element_type != ElementType::FP32) {
    throw Error(ErrorKind::Input, "synthetic trajectories support bf16 and fp32 only");
  }
  if (!(config.sigma0 >= 0.0) || !(config.gamma >= 0.0) || !(config.init_range >= 0.0)) {
    throw Error(ErrorKind::Input, "trajectory scales must be non-negative");
  }
  master_.resize(config.element_count);
  for (auto& w : master_) w = static_cast<float>((2.0 * rng_.uniform() - 1.0) * config.init_range);
  current_.element_type = config.element_type;
  current_.bytes.resize(config.element_count * width(config.element_type));
  store();
}

double SyntheticTrajectory::step_scale(std::size_t step) const noexcept {
  return config_.sigma0 * std::pow(config_.gamma, static_cast<double>(step));
}

void SyntheticTrajectory::advance() {
  const double sigma = step_scale(step_);
  for (auto& w : master_) w = static_cast<float>(w + sigma * rng_.normal());
  ++step_;
  store();
}

void SyntheticTrajectory::store() {
  Byte* out = current_.bytes.data();
  if (config_.element_type == ElementType::BF16) {
    for (std::size_t i = 0; i < master_.size(); ++i) {
      const std::uint16_t v = float_to_bf16(master_[i]);
      out[2 * i] = static_cast<Byte>(v);
      out[2 * i + 1] = static_cast<Byte>(v >> 8);
    }
  } else {
    for (std::size_t i = 0; i < master_.size(); ++i) {
      const auto v = std::bit_cast<std::uint32_t>(master_[i]);
      for (int b = 0; b < 4; ++b) out[4 * i + b] = static_cast<Byte>(v >> (8 * b));
    }
  }
}

std::vector<TensorBuffer> generate_trajectory(const TrajectoryConfig& config, std::size_t steps) {
  std::vector<TensorBuffer> out;
  out.reserve(steps);
  SyntheticTrajectory trajectory(config);
  for (std::size_t k = 0; k < steps; ++k) {
    if (k > 0) trajectory.advance();
    out.push_back(trajectory.current());
  }
  return out;
}

TensorBuffer synthetic_delta_corpus(std::size_t size_bytes, std::uint64_t seed, std::size_t step) {
  TrajectoryConfig config;
  config.element_type = ElementType::BF16;
  config.element_count = size_bytes / 2;
  config.seed = seed;
  SyntheticTrajectory trajectory(config);
  for (std::size_t k = 1; k < std::max<std::size_t>(step, 1); ++k) trajectory.advance();
  TensorBuffer prev = trajectory.current();
  trajectory.advance();
  xor_into(prev.bytes, trajectory.current().bytes);
  return prev;
}

}  // namespace lmc

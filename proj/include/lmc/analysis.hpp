#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lmc/external_codec.hpp"
#include "lmc/types.hpp"

namespace lmc {

/// Fraction of elements with each bit set; index 0 is the least significant bit.
struct BitStats {
  std::uint64_t step = 0;
  std::vector<double> set_ratio;
};

/// Requires a 2- or 4-byte element type.
BitStats bit_set_ratios(const TensorBuffer& shard, std::uint64_t step = 0);

/// bit_set_ratios of the XOR delta; the per-bit flip rate between two steps.
BitStats xor_flip_ratios(const TensorBuffer& prev, const TensorBuffer& next, std::uint64_t step = 0);

/// `step,bit,ratio` with a header line.
std::string bitstats_csv(std::span<const BitStats> stats);

struct RatioPoint {
  std::uint64_t step = 0;  // the later step of the delta
  std::string codec;
  double ratio = 0.0;
  double encode_s = 0.0;
  double decode_s = 0.0;
};

using RatioSeries = std::vector<RatioPoint>;

/// Compresses the XOR delta of every consecutive pair with the named codec.
/// Needs at least two steps.
RatioSeries ratio_over_time(std::span<const TensorBuffer> steps, std::string_view codec,
                            const CodecParams& params = {});

/// Multi-shard variant: steps[k] holds every shard of step k in a fixed
/// order; the ratio of a step is total compressed over total original.
RatioSeries ratio_over_time(std::span<const std::vector<TensorBuffer>> steps, std::string_view codec,
                            const CodecParams& params = {});

/// `step,codec,ratio,encode_s,decode_s` with a header line.
std::string ratio_series_csv(const RatioSeries& series);

/// Which bf16 bits change between encode(v) and encode(v + step) for
/// v = lo, lo + step, ... while v < hi. A zero step yields one all-false row.
struct FlipMap {
  std::vector<double> values;
  std::vector<std::array<bool, 16>> flips;

  double flip_frequency(unsigned bit) const noexcept;
};

FlipMap increment_bitflip_map(double lo, double hi, double step);

/// Order-0 entropy bound next to the achieved LMC ratios, with and without
/// byte grouping.
struct EntropyComparison {
  double entropy_ratio = 0.0;
  double bg_entropy_ratio = 0.0;
  double lmc_ratio = 0.0;
  double bg_lmc_ratio = 0.0;
};

EntropyComparison compare_entropy(const TensorBuffer& data, std::size_t block_size);

}  // namespace lmc

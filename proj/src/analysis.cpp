#include "lmc/analysis.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>

#include "lmc/byte_group.hpp"
#include "lmc/delta.hpp"
#include "lmc/entropy.hpp"
#include "lmc/error.hpp"
#include "lmc/stream.hpp"

namespace lmc {

namespace {

template <class Word>
std::vector<double> count_set_bits(std::span<const Byte> bytes) {
  constexpr unsigned kBits = sizeof(Word) * 8;
  std::array<std::uint64_t, kBits> counts{};
  const std::size_t n = bytes.size() / sizeof(Word);
  for (std::size_t i = 0; i < n; ++i) {
    Word v = 0;
    for (std::size_t b = 0; b < sizeof(Word); ++b) v |= static_cast<Word>(Word{bytes[i * sizeof(Word) + b]} << (8 * b));
    while (v != 0) {
      ++counts[std::countr_zero(v)];
      v &= static_cast<Word>(v - 1);
    }
  }
  std::vector<double> ratios(kBits, 0.0);
  if (n == 0) return ratios;
  for (unsigned b = 0; b < kBits; ++b) ratios[b] = static_cast<double>(counts[b]) / static_cast<double>(n);
  return ratios;
}

}  // namespace

BitStats bit_set_ratios(const TensorBuffer& shard, std::uint64_t step) {
  shard.check_aligned();
  BitStats stats;
  stats.step = step;
  switch (width(shard.element_type)) {
    case 2: stats.set_ratio = count_set_bits<std::uint16_t>(shard.bytes); break;
    case 4: stats.set_ratio = count_set_bits<std::uint32_t>(shard.bytes); break;
    default:
      throw Error(ErrorKind::Input, "bit statistics need a 16- or 32-bit element type, not " +
                                        std::string(name(shard.element_type)));
  }
  return stats;
}

BitStats xor_flip_ratios(const TensorBuffer& prev, const TensorBuffer& next, std::uint64_t step) {
  const DeltaBuffer delta = xor_delta(prev, next);
  return bit_set_ratios(TensorBuffer{delta.bytes, delta.element_type}, step);
}

std::string bitstats_csv(std::span<const BitStats> stats) {
  std::string out = "step,bit,ratio\n";
  char line[96];
  for (const auto& s : stats) {
    for (std::size_t b = 0; b < s.set_ratio.size(); ++b) {
      std::snprintf(line, sizeof(line), "%llu,%zu,%.6f\n", static_cast<unsigned long long>(s.step), b,
                    s.set_ratio[b]);
      out += line;
    }
  }
  return out;
}

RatioSeries ratio_over_time(std::span<const std::vector<TensorBuffer>> steps, std::string_view codec_name,
                            const CodecParams& params) {
  const auto codec = make_codec(codec_name, params);
  if (steps.size() < 2) throw Error(ErrorKind::Input, "a ratio series needs at least two steps");
  RatioSeries series;
  for (std::size_t k = 1; k < steps.size(); ++k) {
    if (steps[k].size() != steps[k - 1].size()) {
      throw Error(ErrorKind::Shape, "step " + std::to_string(k) + " has a different shard count");
    }
    std::size_t original = 0;
    std::size_t compressed = 0;
    RatioPoint point;
    point.step = k;
    point.codec = codec->name();
    for (std::size_t s = 0; s < steps[k].size(); ++s) {
      const DeltaBuffer delta = xor_delta(steps[k - 1][s], steps[k][s], k - 1);
      const CodecMeasurement m = codec->measure(TensorBuffer{delta.bytes, delta.element_type});
      original += m.original_size;
      compressed += m.compressed_size;
      point.encode_s += m.encode_s;
      point.decode_s += m.decode_s;
    }
    if (original == 0) throw Error(ErrorKind::EmptyInput, "step " + std::to_string(k) + " has no data");
    point.ratio = compression_ratio(compressed, original);
    series.push_back(point);
  }
  return series;
}

RatioSeries ratio_over_time(std::span<const TensorBuffer> steps, std::string_view codec, const CodecParams& params) {
  std::vector<std::vector<TensorBuffer>> wrapped;
  wrapped.reserve(steps.size());
  for (const auto& s : steps) wrapped.push_back({s});
  return ratio_over_time(std::span<const std::vector<TensorBuffer>>(wrapped), codec, params);
}

std::string ratio_series_csv(const RatioSeries& series) {
  std::string out = "step,codec,ratio,encode_s,decode_s\n";
  char line[160];
  for (const auto& p : series) {
    std::snprintf(line, sizeof(line), "%llu,%s,%.6f,%.6f,%.6f\n", static_cast<unsigned long long>(p.step),
                  p.codec.c_str(), p.ratio, p.encode_s, p.decode_s);
    out += line;
  }
  return out;
}

double FlipMap::flip_frequency(unsigned bit) const noexcept {
  if (flips.empty() || bit >= 16) return 0.0;
  std::size_t n = 0;
  for (const auto& row : flips) n += row[bit] ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(flips.size());
}

FlipMap increment_bitflip_map(double lo, double hi, double step) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !std::isfinite(step)) {
    throw Error(ErrorKind::Input, "sweep bounds and step must be finite");
  }
  if (!(lo < hi)) throw Error(ErrorKind::Input, "sweep needs lo < hi");
  if (step < 0.0) throw Error(ErrorKind::Input, "sweep step must not be negative");

  FlipMap map;
  // Values are lo + k * step (not accumulated) so rounding does not drift.
  const std::size_t count =
      step == 0.0 ? 1 : static_cast<std::size_t>(std::ceil((hi - lo) / step - 1e-9));
  map.values.reserve(count);
  map.flips.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double v = lo + static_cast<double>(k) * step;
    const std::uint16_t a = float_to_bf16(static_cast<float>(v));
    const std::uint16_t b = float_to_bf16(static_cast<float>(v + step));
    const std::uint16_t diff = a ^ b;
    std::array<bool, 16> row{};
    for (unsigned bit = 0; bit < 16; ++bit) row[bit] = ((diff >> bit) & 1u) != 0;
    map.values.push_back(v);
    map.flips.push_back(row);
  }
  return map;
}

EntropyComparison compare_entropy(const TensorBuffer& data, std::size_t block_size) {
  check_block_size(block_size);
  const GroupedBuffer grouped = byte_group(data);
  EntropyComparison c;
  c.entropy_ratio = estimate_file_entropy_ratio(data.bytes, block_size);
  c.bg_entropy_ratio = estimate_file_entropy_ratio(grouped.bytes, block_size);
  c.lmc_ratio = compression_ratio(lmc_compress(data, {false, block_size, false}).size(), data.size());
  c.bg_lmc_ratio = compression_ratio(lmc_compress(data, {true, block_size, false}).size(), data.size());
  return c;
}

}  // namespace lmc

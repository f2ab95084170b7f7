#include "lmc/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lmc/error.hpp"

namespace lmc {

void check_block_size(std::size_t size) {
  if (!is_valid_block_size(size)) {
    throw Error(ErrorKind::Input,
                "block size " + std::to_string(size) + " must be a power of two in [4096, 1048576]");
  }
}

std::size_t ByteHistogram::distinct_symbols() const noexcept {
  return static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(), [](auto c) { return c != 0; }));
}

ByteHistogram count_bytes(std::span<const Byte> data) noexcept {
  // Four interleaved tables break the store-to-load dependency on runs.
  std::array<std::array<std::uint32_t, 256>, 4> partial{};
  const std::size_t n = data.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    ++partial[0][data[i]];
    ++partial[1][data[i + 1]];
    ++partial[2][data[i + 2]];
    ++partial[3][data[i + 3]];
  }
  for (; i < n; ++i) ++partial[0][data[i]];

  ByteHistogram h;
  for (std::size_t s = 0; s < 256; ++s) {
    h.counts[s] = std::uint64_t{partial[0][s]} + partial[1][s] + partial[2][s] + partial[3][s];
  }
  h.total = n;
  return h;
}

ByteHistogram histogram(std::span<const Byte> block, std::size_t limit) {
  if (block.empty()) throw Error(ErrorKind::EmptyInput, "histogram of an empty block");
  if (block.size() > limit) {
    throw Error(ErrorKind::Input,
                "block of " + std::to_string(block.size()) + " bytes exceeds limit " + std::to_string(limit));
  }
  return count_bytes(block);
}

BlockEntropy entropy(const ByteHistogram& h) {
  if (h.total == 0) throw Error(ErrorKind::EmptyInput, "entropy of an empty histogram");
  const double total = static_cast<double>(h.total);
  double bits = 0.0;
  for (const auto c : h.counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / total;
    bits -= p * std::log2(p);
  }
  return {std::clamp(bits, 0.0, 8.0)};
}

double estimate_file_entropy_ratio(std::span<const Byte> data, std::size_t block_size) {
  if (block_size == 0) throw Error(ErrorKind::Input, "block size must be positive");
  if (data.empty()) throw Error(ErrorKind::EmptyInput, "entropy ratio of empty data");
  double bits = 0.0;
  for (std::size_t off = 0; off < data.size(); off += block_size) {
    const auto block = data.subspan(off, std::min(block_size, data.size() - off));
    bits += entropy(count_bytes(block)).bits_per_byte * static_cast<double>(block.size());
  }
  return bits / 8.0 / static_cast<double>(data.size());
}

}  // namespace lmc

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

#include "lmc/types.hpp"

namespace lmc {

inline constexpr std::size_t kDefaultBlockSize = 64 * KiB;
inline constexpr std::size_t kMinBlockSize = 4 * KiB;
inline constexpr std::size_t kMaxBlockSize = 1 * MiB;

/// Power of two in [4 KiB, 1 MiB].
constexpr bool is_valid_block_size(std::size_t size) noexcept {
  return size >= kMinBlockSize && size <= kMaxBlockSize && (size & (size - 1)) == 0;
}

/// Throws an input error unless is_valid_block_size(size).
void check_block_size(std::size_t size);

struct ByteHistogram {
  std::array<std::uint64_t, 256> counts{};
  std::uint64_t total = 0;

  std::size_t distinct_symbols() const noexcept;
};

struct BlockEntropy {
  double bits_per_byte = 0.0;  // in [0, 8]
};

/// Occurrence counts of one block. Throws on an empty block or one longer
/// than `limit`.
ByteHistogram histogram(std::span<const Byte> block, std::size_t limit = kMaxBlockSize);

/// Unchecked counting kernel; accepts any length including zero.
ByteHistogram count_bytes(std::span<const Byte> data) noexcept;

/// H = -sum p_i log2 p_i over present symbols, p_i = counts[i] / total.
BlockEntropy entropy(const ByteHistogram& h);

/// Ideal compressed/original ratio when every block's bytes cost exactly its
/// own order-0 entropy: sum(H_block * len_block / 8) / total_length.
double estimate_file_entropy_ratio(std::span<const Byte> data, std::size_t block_size = kDefaultBlockSize);

}  // namespace lmc

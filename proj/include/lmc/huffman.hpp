#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

#include "lmc/entropy.hpp"
#include "lmc/types.hpp"

namespace lmc {

inline constexpr unsigned kMaxCodeLength = 15;

/// Size of the serialized codebook: 256 lengths, 4 bits each.
inline constexpr std::size_t kCodebookWireSize = 128;

/// Per-symbol code lengths of one block; 0 means the symbol is absent.
struct BlockCodebook {
  static constexpr unsigned max_length = kMaxCodeLength;
  std::array<std::uint8_t, 256> lengths{};

  std::size_t symbol_count() const noexcept;

  friend bool operator==(const BlockCodebook&, const BlockCodebook&) = default;
};

struct CanonicalCodes {
  std::array<std::uint16_t, 256> codes{};
  std::array<std::uint8_t, 256> lengths{};

  friend bool operator==(const CanonicalCodes&, const CanonicalCodes&) = default;
};

/// Optimal length-limited code lengths (package-merge, limit 15). A lone
/// symbol gets length 1. Throws on an empty histogram.
BlockCodebook build_codebook(const ByteHistogram& h);

/// Throws a malformed-codebook error when a length exceeds 15, no symbol is
/// present, or the Kraft sum exceeds 1.
void validate_codebook(const BlockCodebook& cb);

/// Codes assigned in (length, symbol) order, DEFLATE style.
CanonicalCodes assign_canonical(const BlockCodebook& cb);

/// sum(counts[i] * lengths[i]); the Huffman payload size in bits.
std::uint64_t encoded_bit_length(const ByteHistogram& h, const BlockCodebook& cb) noexcept;

/// Codebook wire form: two lengths per byte, even symbol in the low nibble.
std::array<Byte, kCodebookWireSize> pack_lengths(const BlockCodebook& cb) noexcept;
BlockCodebook unpack_lengths(std::span<const Byte, kCodebookWireSize> wire) noexcept;

struct EncodedBits {
  Bytes bytes;  // MSB-first, final byte zero-padded
  std::uint64_t bit_count = 0;
};

/// Throws a malformed-input error if a byte of `block` has no code.
EncodedBits encode_block(std::span<const Byte> block, const CanonicalCodes& codes);

/// Appends the packed bits of `block` to `out`; returns the bit count.
/// Every symbol in the block must have a code (checked by the caller).
std::uint64_t encode_block_append(std::span<const Byte> block, const CanonicalCodes& codes, Bytes& out);

/// Decodes exactly out.size() symbols from at most `bit_count` bits of
/// `bits`. Returns the number of bits consumed. Throws a corrupt-stream error
/// on an invalid prefix or if the symbols run past `bit_count`.
std::uint64_t decode_block_into(std::span<const Byte> bits, std::uint64_t bit_count, const BlockCodebook& cb,
                                std::span<Byte> out);

Bytes decode_block(const EncodedBits& bits, const BlockCodebook& cb, std::size_t out_len);

}  // namespace lmc

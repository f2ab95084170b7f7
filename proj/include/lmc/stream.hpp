#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lmc/entropy.hpp"
#include "lmc/types.hpp"

namespace lmc {

// CodeStream layout, all integers little-endian:
//
//   header (28 bytes)
//     0  magic "LMC1"
//     4  version            u8  (= 1)
//     5  flags              u8  bit0 byte-grouped, bit1 delta-applied
//     6  element type code  u8
//     7  reserved           u8  (= 0)
//     8  original length    u64
//    16  block size         u32
//    20  segment count      u32
//    24  crc32 (IEEE) of the uncompressed payload  u32
//
//   then, until the original length is covered, one window each:
//     segment table: segment_count x { original length u64, compressed length u64 }
//     the segments' block records, concatenated in table order
//
//   block record: mode u8, original block length u32, payload
//     mode 0 Huffman: 128-byte codebook, payload bit count u32, MSB-first bits
//     mode 1 RLE:     the repeated symbol (1 byte)
//     mode 2 stored:  the raw bytes
//
// Groups are emitted least significant first; windows are grouped
// independently. Any change here must bump kFormatVersion.

inline constexpr std::array<Byte, 4> kMagic{'L', 'M', 'C', '1'};
inline constexpr std::uint8_t kFormatVersion = 1;
inline constexpr std::size_t kHeaderSize = 28;
inline constexpr std::size_t kSegmentEntrySize = 16;
inline constexpr std::size_t kBlockRecordHeaderSize = 5;
inline constexpr std::size_t kHuffmanOverhead = 128 + 4;

namespace stream_flags {
inline constexpr std::uint8_t kByteGrouped = 0x01;
inline constexpr std::uint8_t kDeltaApplied = 0x02;
inline constexpr std::uint8_t kKnown = kByteGrouped | kDeltaApplied;
}  // namespace stream_flags

enum class BlockMode : std::uint8_t { Huffman = 0, Rle = 1, Stored = 2 };

struct CodeStreamHeader {
  std::uint8_t version = kFormatVersion;
  std::uint8_t flags = 0;
  ElementType element_type = ElementType::Raw8;
  std::uint64_t original_length = 0;
  std::uint32_t block_size = static_cast<std::uint32_t>(kDefaultBlockSize);
  std::uint32_t segment_count = 1;
  std::uint32_t crc32 = 0;

  bool byte_grouped() const noexcept { return (flags & stream_flags::kByteGrouped) != 0; }
  bool delta_applied() const noexcept { return (flags & stream_flags::kDeltaApplied) != 0; }

  std::array<Byte, kHeaderSize> serialize() const noexcept;

  friend bool operator==(const CodeStreamHeader&, const CodeStreamHeader&) = default;
};

/// Parses and validates a header. Bad magic or version is an
/// unsupported-format error; anything else out of range is corrupt-stream.
CodeStreamHeader read_header(std::span<const Byte> stream);

/// Description of one serialized block record.
struct BlockInfo {
  BlockMode mode = BlockMode::Stored;
  std::uint32_t length = 0;        // original bytes covered
  std::uint64_t payload_bits = 0;  // Huffman only
  std::size_t record_size = 0;     // serialized bytes, record header included
};

/// Encodes `data` as consecutive block records, each block the cheapest of
/// Huffman, RLE (monosymbolic blocks only) and stored. Ties prefer the lower
/// mode number.
Bytes compress_buffer(std::span<const Byte> data, std::size_t block_size = kDefaultBlockSize);
void compress_buffer_append(std::span<const Byte> data, std::size_t block_size, Bytes& out);

/// Decodes records that must cover exactly `expected_length` bytes and must
/// be fully consumed.
Bytes decompress_buffer(std::span<const Byte> records, std::size_t expected_length);
void decompress_buffer_into(std::span<const Byte> records, std::span<Byte> out);

/// Walks the records without decoding payloads.
std::vector<BlockInfo> inspect_records(std::span<const Byte> records);

struct LmcOptions {
  bool byte_group = true;
  std::size_t block_size = kDefaultBlockSize;
  bool delta_applied = false;  // recorded in the header only
};

/// Serial compressor: one window covering the whole input, one segment.
Bytes lmc_compress(const TensorBuffer& input, const LmcOptions& options = {});

/// Decodes any CodeStream on the calling thread and verifies the CRC.
TensorBuffer lmc_decompress(std::span<const Byte> stream);

/// Compressed size over original size; 0 for an empty original.
double compression_ratio(std::size_t compressed, std::size_t original) noexcept;

/// IEEE CRC-32.
std::uint32_t crc32(std::span<const Byte> data) noexcept;

}  // namespace lmc

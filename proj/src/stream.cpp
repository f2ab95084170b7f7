#include "lmc/stream.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstring>
#include <limits>
#include <string>

#include "container.hpp"
#include "lmc/byte_group.hpp"
#include "lmc/error.hpp"
#include "lmc/huffman.hpp"
#include "parallel.hpp"

namespace lmc {

namespace {

template <class T>
void put_le(Byte* p, T value) noexcept {
  for (std::size_t i = 0; i < sizeof(T); ++i) p[i] = static_cast<Byte>(value >> (8 * i));
}

template <class T>
T get_le(const Byte* p) noexcept {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(T{p[i]} << (8 * i));
  return value;
}

template <class T>
void append_le(Bytes& out, T value) {
  const std::size_t at = out.size();
  out.resize(at + sizeof(T));
  put_le(out.data() + at, value);
}

[[noreturn]] void corrupt(const std::string& what) { throw Error(ErrorKind::CorruptStream, what); }

std::uint32_t crc32_update(std::uint32_t crc, std::span<const Byte> data) noexcept {
  return static_cast<std::uint32_t>(::crc32_z(crc, data.data(), data.size()));
}

std::uint32_t crc32_join(std::uint32_t a, std::uint32_t b, std::size_t b_length) noexcept {
  return static_cast<std::uint32_t>(::crc32_combine(a, b, static_cast<z_off_t>(b_length)));
}

// CRC of `data` computed in `workers` chunks and combined.
std::uint32_t parallel_crc32(std::span<const Byte> data, unsigned workers) {
  const std::size_t chunks = std::max<std::size_t>(1, std::min<std::size_t>(workers, data.size() / MiB + 1));
  const std::size_t chunk = (data.size() + chunks - 1) / std::max<std::size_t>(chunks, 1);
  std::vector<std::uint32_t> part(chunks, 0);
  detail::parallel_for(chunks, workers, [&](std::size_t i) {
    const std::size_t begin = std::min(data.size(), i * chunk);
    const std::size_t end = std::min(data.size(), begin + chunk);
    part[i] = crc32_update(0, data.subspan(begin, end - begin));
  });
  std::uint32_t crc = 0;
  for (std::size_t i = 0; i < chunks; ++i) {
    const std::size_t begin = std::min(data.size(), i * chunk);
    const std::size_t end = std::min(data.size(), begin + chunk);
    crc = crc32_join(crc, part[i], end - begin);
  }
  return crc;
}

}  // namespace

std::uint32_t crc32(std::span<const Byte> data) noexcept { return crc32_update(0, data); }

double compression_ratio(std::size_t compressed, std::size_t original) noexcept {
  return original == 0 ? 0.0 : static_cast<double>(compressed) / static_cast<double>(original);
}

std::array<Byte, kHeaderSize> CodeStreamHeader::serialize() const noexcept {
  std::array<Byte, kHeaderSize> out{};
  std::copy(kMagic.begin(), kMagic.end(), out.begin());
  out[4] = version;
  out[5] = flags;
  out[6] = static_cast<Byte>(element_type);
  out[7] = 0;
  put_le(out.data() + 8, original_length);
  put_le(out.data() + 16, block_size);
  put_le(out.data() + 20, segment_count);
  put_le(out.data() + 24, crc32);
  return out;
}

CodeStreamHeader read_header(std::span<const Byte> stream) {
  if (stream.size() < kMagic.size() || !std::equal(kMagic.begin(), kMagic.end(), stream.begin())) {
    throw Error(ErrorKind::UnsupportedFormat, "not a CodeStream (bad magic)");
  }
  if (stream.size() < kHeaderSize) corrupt("truncated header");
  CodeStreamHeader h;
  h.version = stream[4];
  if (h.version != kFormatVersion) {
    throw Error(ErrorKind::UnsupportedFormat, "unsupported CodeStream version " + std::to_string(h.version));
  }
  h.flags = stream[5];
  if ((h.flags & ~stream_flags::kKnown) != 0) corrupt("unknown header flags");
  const auto type = element_type_from_code(stream[6]);
  if (!type) corrupt("unknown element type code " + std::to_string(stream[6]));
  h.element_type = *type;
  if (stream[7] != 0) corrupt("reserved header byte is not zero");
  h.original_length = get_le<std::uint64_t>(stream.data() + 8);
  h.block_size = get_le<std::uint32_t>(stream.data() + 16);
  h.segment_count = get_le<std::uint32_t>(stream.data() + 20);
  h.crc32 = get_le<std::uint32_t>(stream.data() + 24);
  if (!is_valid_block_size(h.block_size)) corrupt("invalid block size " + std::to_string(h.block_size));
  if (h.segment_count == 0) corrupt("segment count is zero");
  if (h.original_length % width(h.element_type) != 0) corrupt("original length is not a whole number of elements");
  return h;
}

void compress_buffer_append(std::span<const Byte> data, std::size_t block_size, Bytes& out) {
  check_block_size(block_size);
  for (std::size_t off = 0; off < data.size(); off += block_size) {
    const auto block = data.subspan(off, std::min(block_size, data.size() - off));
    const auto len = static_cast<std::uint32_t>(block.size());
    const ByteHistogram h = count_bytes(block);

    if (h.distinct_symbols() == 1) {
      out.push_back(static_cast<Byte>(BlockMode::Rle));
      append_le(out, len);
      out.push_back(block[0]);
      continue;
    }

    const BlockCodebook cb = build_codebook(h);
    const std::uint64_t bits = encoded_bit_length(h, cb);
    const std::size_t huffman_size = kBlockRecordHeaderSize + kHuffmanOverhead + static_cast<std::size_t>((bits + 7) / 8);
    const std::size_t stored_size = kBlockRecordHeaderSize + block.size();
    if (huffman_size <= stored_size) {
      out.push_back(static_cast<Byte>(BlockMode::Huffman));
      append_le(out, len);
      const auto wire = pack_lengths(cb);
      out.insert(out.end(), wire.begin(), wire.end());
      append_le(out, static_cast<std::uint32_t>(bits));
      encode_block_append(block, assign_canonical(cb), out);
    } else {
      out.push_back(static_cast<Byte>(BlockMode::Stored));
      append_le(out, len);
      out.insert(out.end(), block.begin(), block.end());
    }
  }
}

Bytes compress_buffer(std::span<const Byte> data, std::size_t block_size) {
  Bytes out;
  out.reserve(data.size() / 2 + 64);
  compress_buffer_append(data, block_size, out);
  return out;
}

namespace {

// Visits each record; `on_block` receives the info, the payload span and the
// output offset. Structural checks live here so decode and inspect agree.
template <class OnBlock>
void walk_records(std::span<const Byte> records, std::size_t expected_length, bool bounded, OnBlock&& on_block) {
  std::size_t pos = 0;
  std::size_t produced = 0;
  while (bounded ? produced < expected_length : pos < records.size()) {
    if (records.size() - pos < kBlockRecordHeaderSize) corrupt("truncated block record header");
    BlockInfo info;
    const Byte mode = records[pos];
    info.length = get_le<std::uint32_t>(records.data() + pos + 1);
    if (info.length == 0) corrupt("zero-length block record");
    if (bounded && info.length > expected_length - produced) corrupt("block record overruns the expected length");
    pos += kBlockRecordHeaderSize;
    std::size_t payload_size = 0;
    switch (mode) {
      case static_cast<Byte>(BlockMode::Huffman): {
        info.mode = BlockMode::Huffman;
        if (records.size() - pos < kHuffmanOverhead) corrupt("truncated Huffman block header");
        info.payload_bits = get_le<std::uint32_t>(records.data() + pos + kCodebookWireSize);
        payload_size = kHuffmanOverhead + static_cast<std::size_t>((info.payload_bits + 7) / 8);
        break;
      }
      case static_cast<Byte>(BlockMode::Rle):
        info.mode = BlockMode::Rle;
        payload_size = 1;
        break;
      case static_cast<Byte>(BlockMode::Stored):
        info.mode = BlockMode::Stored;
        payload_size = info.length;
        break;
      default:
        corrupt("unknown block mode " + std::to_string(mode));
    }
    if (records.size() - pos < payload_size) corrupt("truncated block payload");
    info.record_size = kBlockRecordHeaderSize + payload_size;
    on_block(info, records.subspan(pos, payload_size), produced);
    pos += payload_size;
    produced += info.length;
  }
  if (pos != records.size()) corrupt("trailing bytes after the last block record");
}

}  // namespace

void decompress_buffer_into(std::span<const Byte> records, std::span<Byte> out) {
  walk_records(records, out.size(), true, [&](const BlockInfo& info, std::span<const Byte> payload, std::size_t at) {
    auto dst = out.subspan(at, info.length);
    switch (info.mode) {
      case BlockMode::Huffman: {
        const BlockCodebook cb = unpack_lengths(payload.first<kCodebookWireSize>());
        const auto bits = payload.subspan(kHuffmanOverhead);
        std::uint64_t consumed = 0;
        try {
          consumed = decode_block_into(bits, info.payload_bits, cb, dst);
        } catch (const Error& e) {
          if (e.kind() == ErrorKind::MalformedCodebook) corrupt(e.what());
          throw;
        }
        if (consumed != info.payload_bits) corrupt("Huffman payload has unused bits");
        const unsigned pad = static_cast<unsigned>((8 - info.payload_bits % 8) % 8);
        if (pad != 0 && (bits.back() & ((1u << pad) - 1)) != 0) corrupt("nonzero Huffman padding bits");
        break;
      }
      case BlockMode::Rle:
        std::memset(dst.data(), payload[0], dst.size());
        break;
      case BlockMode::Stored:
        std::memcpy(dst.data(), payload.data(), dst.size());
        break;
    }
  });
}

Bytes decompress_buffer(std::span<const Byte> records, std::size_t expected_length) {
  Bytes out(expected_length);
  decompress_buffer_into(records, out);
  return out;
}

std::vector<BlockInfo> inspect_records(std::span<const Byte> records) {
  std::vector<BlockInfo> blocks;
  walk_records(records, 0, false,
               [&](const BlockInfo& info, std::span<const Byte>, std::size_t) { blocks.push_back(info); });
  return blocks;
}

namespace detail {

std::vector<SegmentRange> plan_segments(std::size_t window_length, std::size_t block_size, std::uint32_t segments) {
  const std::size_t blocks = (window_length + block_size - 1) / block_size;
  const std::size_t base = blocks / segments;
  const std::size_t extra = blocks % segments;
  std::vector<SegmentRange> ranges(segments);
  std::size_t block = 0;
  for (std::uint32_t s = 0; s < segments; ++s) {
    const std::size_t count = base + (s < extra ? 1 : 0);
    ranges[s].begin = std::min(window_length, block * block_size);
    block += count;
    ranges[s].end = std::min(window_length, block * block_size);
  }
  return ranges;
}

Bytes encode_container(const TensorBuffer& input, const LmcOptions& options, const ContainerLayout& layout,
                       unsigned workers) {
  input.check_aligned();
  check_block_size(options.block_size);
  const std::size_t w = width(input.element_type);
  if (layout.segment_count == 0) throw Error(ErrorKind::Input, "segment count must be at least 1");
  if (layout.window_size == 0 || layout.window_size % w != 0) {
    throw Error(ErrorKind::Input, "window size must be a positive multiple of the element width");
  }
  const bool grouped = options.byte_group && w > 1;

  CodeStreamHeader header;
  header.flags = static_cast<std::uint8_t>((options.byte_group ? stream_flags::kByteGrouped : 0) |
                                           (options.delta_applied ? stream_flags::kDeltaApplied : 0));
  header.element_type = input.element_type;
  header.original_length = input.size();
  header.block_size = static_cast<std::uint32_t>(options.block_size);
  header.segment_count = layout.segment_count;

  Bytes out(kHeaderSize);
  out.reserve(input.size() / 2 + kHeaderSize + 64);
  const std::span<const Byte> data(input.bytes);
  std::uint32_t crc = 0;

  std::vector<Bytes> encoded(layout.segment_count);
  std::vector<std::uint32_t> segment_crc(layout.segment_count);
  for (std::size_t win = 0; win < data.size(); win += layout.window_size) {
    const auto window = data.subspan(win, std::min(layout.window_size, data.size() - win));
    const auto ranges = plan_segments(window.size(), options.block_size, layout.segment_count);

    parallel_for(ranges.size(), workers, [&](std::size_t s) {
      const auto [begin, end] = ranges[s];
      encoded[s].clear();
      segment_crc[s] = crc32_update(0, window.subspan(begin, end - begin));
      if (begin == end) return;
      if (grouped) {
        Bytes scratch(end - begin);
        group_range(window, w, begin, scratch);
        compress_buffer_append(scratch, options.block_size, encoded[s]);
      } else {
        compress_buffer_append(window.subspan(begin, end - begin), options.block_size, encoded[s]);
      }
    });

    for (std::size_t s = 0; s < ranges.size(); ++s) {
      append_le(out, static_cast<std::uint64_t>(ranges[s].end - ranges[s].begin));
      append_le(out, static_cast<std::uint64_t>(encoded[s].size()));
    }
    for (std::size_t s = 0; s < ranges.size(); ++s) {
      out.insert(out.end(), encoded[s].begin(), encoded[s].end());
      crc = crc32_join(crc, segment_crc[s], ranges[s].end - ranges[s].begin);
      Bytes().swap(encoded[s]);
    }
  }

  header.crc32 = crc;
  const auto head = header.serialize();
  std::copy(head.begin(), head.end(), out.begin());
  return out;
}

// An RLE record: mode, length and one symbol.
constexpr std::size_t kMinRecordSize = kBlockRecordHeaderSize + 1;

TensorBuffer decode_container(std::span<const Byte> stream, unsigned workers) {
  const CodeStreamHeader header = read_header(stream);
  const std::size_t w = width(header.element_type);
  const bool grouped = header.byte_grouped() && w > 1;
  const std::uint32_t segments = header.segment_count;

  // Every block costs at least an RLE record, which bounds the length a
  // stream of this size can describe; checked before anything is allocated.
  const std::uint64_t block = header.block_size;
  const std::uint64_t max_blocks = (stream.size() - kHeaderSize) / kMinRecordSize;
  if (header.original_length / block > max_blocks) corrupt("original length exceeds what the stream can hold");
  const std::size_t total = static_cast<std::size_t>(header.original_length);

  if (total > 0 && (stream.size() - kHeaderSize) / kSegmentEntrySize < segments) corrupt("truncated segment table");

  TensorBuffer out{Bytes(), header.element_type};
  std::size_t pos = kHeaderSize;
  std::size_t produced = 0;
  Bytes scratch;

  struct Entry {
    std::size_t original = 0;
    std::size_t compressed = 0;
    std::size_t out_offset = 0;
    std::size_t in_offset = 0;
  };
  std::vector<Entry> table(total > 0 ? segments : 0);

  while (produced < total) {
    if ((stream.size() - pos) / kSegmentEntrySize < segments) corrupt("truncated segment table");
    const std::size_t remaining = total - produced;
    std::size_t window_length = 0;
    std::size_t payload_length = 0;
    const std::size_t payload_start = pos + std::size_t{segments} * kSegmentEntrySize;
    for (std::uint32_t s = 0; s < segments; ++s) {
      const Byte* entry = stream.data() + pos + s * kSegmentEntrySize;
      const auto original = get_le<std::uint64_t>(entry);
      const auto compressed = get_le<std::uint64_t>(entry + 8);
      if (original > remaining - window_length) corrupt("segment table overruns the original length");
      if (compressed > stream.size() - payload_start - payload_length) corrupt("segment compressed length exceeds the stream");
      if ((original + block - 1) / block > compressed / kMinRecordSize) corrupt("segment too short for its length");
      table[s] = {static_cast<std::size_t>(original), static_cast<std::size_t>(compressed), window_length,
                  payload_start + payload_length};
      window_length += table[s].original;
      payload_length += table[s].compressed;
    }
    if (window_length == 0) corrupt("empty window");
    if (window_length % w != 0) corrupt("window is not a whole number of elements");

    out.bytes.resize(produced + window_length);
    const std::span<Byte> window(out.bytes.data() + produced, window_length);
    std::span<Byte> target = window;
    if (grouped) {
      scratch.resize(window_length);
      target = scratch;
    }
    parallel_for(segments, workers, [&](std::size_t s) {
      const Entry& e = table[s];
      decompress_buffer_into(stream.subspan(e.in_offset, e.compressed), target.subspan(e.out_offset, e.original));
    });
    if (grouped) {
      const std::size_t n = window_length / w;
      const std::size_t chunks = std::max<std::size_t>(1, std::min<std::size_t>(workers, n / 65536 + 1));
      const std::size_t per = (n + chunks - 1) / chunks;
      parallel_for(chunks, workers, [&](std::size_t c) {
        const std::size_t first = std::min(n, c * per);
        const std::size_t last = std::min(n, first + per);
        ungroup_elements(scratch, w, first, last - first, window);
      });
    }
    pos = payload_start + payload_length;
    produced += window_length;
  }
  if (pos != stream.size()) corrupt("trailing bytes after the last window");

  if (parallel_crc32(out.bytes, workers) != header.crc32) {
    throw Error(ErrorKind::Integrity, "CRC mismatch on the decompressed payload");
  }
  return out;
}

}  // namespace detail

Bytes lmc_compress(const TensorBuffer& input, const LmcOptions& options) {
  input.check_aligned();
  detail::ContainerLayout layout;
  layout.window_size = std::max(input.size(), width(input.element_type));
  layout.segment_count = 1;
  return detail::encode_container(input, options, layout, 1);
}

TensorBuffer lmc_decompress(std::span<const Byte> stream) { return detail::decode_container(stream, 1); }

}  // namespace lmc

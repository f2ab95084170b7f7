#include "lmc/huffman.hpp"

#include <algorithm>
#include <cstring>
#include <string>
#include <vector>

#include "lmc/error.hpp"

namespace lmc {

namespace {

constexpr unsigned kPrimaryBits = 11;
constexpr std::uint16_t kNoEntry = 0;

struct PackageItem {
  std::uint64_t weight;
  int symbol;  // -1 for a package
};

std::uint64_t load_be64(const Byte* p) noexcept {
  std::uint64_t v;
  std::memcpy(&v, p, 8);
  return __builtin_bswap64(v);
}

void store_be32(Byte* p, std::uint32_t v) noexcept {
  v = __builtin_bswap32(v);
  std::memcpy(p, &v, 4);
}

// Canonical decoding tables for one codebook. Primary entries hold
// symbol | (length << 8) for codes of at most kPrimaryBits; zero sends the
// decoder to the per-length search for the longer codes.
struct DecodeTable {
  std::array<std::uint16_t, 1u << kPrimaryBits> primary{};
  std::array<std::uint32_t, kMaxCodeLength + 2> first_code{};
  std::array<std::uint32_t, kMaxCodeLength + 2> count{};
  std::array<std::uint32_t, kMaxCodeLength + 2> offset{};
  std::array<Byte, 256> sorted{};

  explicit DecodeTable(const BlockCodebook& cb) {
    for (unsigned s = 0; s < 256; ++s) ++count[cb.lengths[s]];
    count[0] = 0;
    std::uint32_t code = 0;
    std::uint32_t index = 0;
    for (unsigned len = 1; len <= kMaxCodeLength; ++len) {
      code = (code + count[len - 1]) << 1;
      first_code[len] = code;
      offset[len] = index;
      index += count[len];
    }
    std::array<std::uint32_t, kMaxCodeLength + 2> next = offset;
    for (unsigned s = 0; s < 256; ++s) {
      const unsigned len = cb.lengths[s];
      if (len != 0) sorted[next[len]++] = static_cast<Byte>(s);
    }
    for (unsigned len = 1; len <= kPrimaryBits; ++len) {
      for (std::uint32_t k = 0; k < count[len]; ++k) {
        const std::uint32_t c = first_code[len] + k;
        const std::uint16_t entry = static_cast<std::uint16_t>(sorted[offset[len] + k] | (len << 8));
        const unsigned shift = kPrimaryBits - len;
        const std::uint32_t base = c << shift;
        std::fill_n(primary.begin() + base, std::size_t{1} << shift, entry);
      }
    }
  }

  // `window` holds the next kMaxCodeLength bits, MSB-aligned in the low 15.
  bool lookup(std::uint32_t window, unsigned& symbol, unsigned& length) const noexcept {
    const std::uint16_t e = primary[window >> (kMaxCodeLength - kPrimaryBits)];
    if (e != kNoEntry) {
      symbol = e & 0xFF;
      length = e >> 8;
      return true;
    }
    for (unsigned len = kPrimaryBits + 1; len <= kMaxCodeLength; ++len) {
      const std::uint32_t c = window >> (kMaxCodeLength - len);
      if (c >= first_code[len] && c - first_code[len] < count[len]) {
        symbol = sorted[offset[len] + c - first_code[len]];
        length = len;
        return true;
      }
    }
    return false;
  }
};

}  // namespace

std::size_t BlockCodebook::symbol_count() const noexcept {
  return static_cast<std::size_t>(std::count_if(lengths.begin(), lengths.end(), [](auto l) { return l != 0; }));
}

BlockCodebook build_codebook(const ByteHistogram& h) {
  std::vector<PackageItem> leaves;
  leaves.reserve(256);
  for (int s = 0; s < 256; ++s) {
    if (h.counts[s] != 0) leaves.push_back({h.counts[s], s});
  }
  if (leaves.empty()) throw Error(ErrorKind::EmptyInput, "codebook for an empty histogram");

  BlockCodebook cb;
  if (leaves.size() == 1) {
    cb.lengths[leaves.front().symbol] = 1;
    return cb;
  }
  std::stable_sort(leaves.begin(), leaves.end(),
                   [](const PackageItem& a, const PackageItem& b) { return a.weight < b.weight; });

  // Package-merge: lists[0] is the deepest denomination (2^-15), lists[L-1]
  // the shallowest. Each list merges the leaves with pairwise packages of
  // the previous list; leaves win ties so the result is deterministic.
  const std::size_t n = leaves.size();
  std::vector<std::vector<PackageItem>> lists(kMaxCodeLength);
  lists[0] = leaves;
  for (unsigned level = 1; level < kMaxCodeLength; ++level) {
    const auto& prev = lists[level - 1];
    auto& cur = lists[level];
    cur.reserve(n + prev.size() / 2);
    std::size_t li = 0;
    std::size_t pi = 0;
    while (li < n || pi + 1 < prev.size()) {
      const bool have_pkg = pi + 1 < prev.size();
      const std::uint64_t pkg_weight = have_pkg ? prev[pi].weight + prev[pi + 1].weight : 0;
      if (li < n && (!have_pkg || leaves[li].weight <= pkg_weight)) {
        cur.push_back(leaves[li++]);
      } else {
        cur.push_back({pkg_weight, -1});
        pi += 2;
      }
    }
  }

  // Select the 2n-2 cheapest items of the shallowest list and walk the
  // package structure back down: a package selected at one level selects
  // two items at the level below, and every selected leaf adds one bit.
  std::size_t take = 2 * n - 2;
  for (unsigned level = kMaxCodeLength; level-- > 0;) {
    const auto& list = lists[level];
    std::size_t packages = 0;
    for (std::size_t i = 0; i < take; ++i) {
      if (list[i].symbol < 0) {
        ++packages;
      } else {
        ++cb.lengths[list[i].symbol];
      }
    }
    take = 2 * packages;
  }
  return cb;
}

void validate_codebook(const BlockCodebook& cb) {
  std::uint64_t kraft = 0;
  std::size_t present = 0;
  for (unsigned s = 0; s < 256; ++s) {
    const unsigned len = cb.lengths[s];
    if (len == 0) continue;
    if (len > kMaxCodeLength) {
      throw Error(ErrorKind::MalformedCodebook, "code length " + std::to_string(len) + " exceeds 15");
    }
    kraft += std::uint64_t{1} << (kMaxCodeLength - len);
    ++present;
  }
  if (present == 0) throw Error(ErrorKind::MalformedCodebook, "codebook has no symbols");
  if (kraft > (std::uint64_t{1} << kMaxCodeLength)) {
    throw Error(ErrorKind::MalformedCodebook, "code lengths violate the Kraft inequality");
  }
}

CanonicalCodes assign_canonical(const BlockCodebook& cb) {
  validate_codebook(cb);
  std::array<std::uint32_t, kMaxCodeLength + 1> count{};
  for (const auto len : cb.lengths) ++count[len];
  count[0] = 0;
  std::array<std::uint32_t, kMaxCodeLength + 1> next{};
  std::uint32_t code = 0;
  for (unsigned len = 1; len <= kMaxCodeLength; ++len) {
    code = (code + count[len - 1]) << 1;
    next[len] = code;
  }
  CanonicalCodes out;
  out.lengths = cb.lengths;
  for (unsigned s = 0; s < 256; ++s) {
    const unsigned len = cb.lengths[s];
    if (len != 0) out.codes[s] = static_cast<std::uint16_t>(next[len]++);
  }
  return out;
}

std::uint64_t encoded_bit_length(const ByteHistogram& h, const BlockCodebook& cb) noexcept {
  std::uint64_t bits = 0;
  for (unsigned s = 0; s < 256; ++s) bits += h.counts[s] * cb.lengths[s];
  return bits;
}

std::array<Byte, kCodebookWireSize> pack_lengths(const BlockCodebook& cb) noexcept {
  std::array<Byte, kCodebookWireSize> wire{};
  for (std::size_t i = 0; i < kCodebookWireSize; ++i) {
    wire[i] = static_cast<Byte>((cb.lengths[2 * i] & 0x0F) | ((cb.lengths[2 * i + 1] & 0x0F) << 4));
  }
  return wire;
}

BlockCodebook unpack_lengths(std::span<const Byte, kCodebookWireSize> wire) noexcept {
  BlockCodebook cb;
  for (std::size_t i = 0; i < kCodebookWireSize; ++i) {
    cb.lengths[2 * i] = wire[i] & 0x0F;
    cb.lengths[2 * i + 1] = wire[i] >> 4;
  }
  return cb;
}

std::uint64_t encode_block_append(std::span<const Byte> block, const CanonicalCodes& codes, Bytes& out) {
  std::uint64_t bit_count = 0;
  for (const Byte b : block) bit_count += codes.lengths[b];
  const std::size_t start = out.size();
  const std::size_t nbytes = static_cast<std::size_t>((bit_count + 7) / 8);
  out.resize(start + nbytes + 8);
  Byte* dst = out.data() + start;

  std::uint64_t acc = 0;
  unsigned nbits = 0;
  for (const Byte b : block) {
    acc = (acc << codes.lengths[b]) | codes.codes[b];
    nbits += codes.lengths[b];
    if (nbits >= 32) {
      nbits -= 32;
      store_be32(dst, static_cast<std::uint32_t>(acc >> nbits));
      dst += 4;
    }
  }
  while (nbits >= 8) {
    nbits -= 8;
    *dst++ = static_cast<Byte>(acc >> nbits);
  }
  if (nbits > 0) *dst++ = static_cast<Byte>(acc << (8 - nbits));
  out.resize(start + nbytes);
  return bit_count;
}

EncodedBits encode_block(std::span<const Byte> block, const CanonicalCodes& codes) {
  for (const Byte b : block) {
    if (codes.lengths[b] == 0) {
      throw Error(ErrorKind::MalformedInput, "symbol " + std::to_string(b) + " has no code in this codebook");
    }
  }
  EncodedBits out;
  out.bit_count = encode_block_append(block, codes, out.bytes);
  return out;
}

std::uint64_t decode_block_into(std::span<const Byte> bits, std::uint64_t bit_count, const BlockCodebook& cb,
                                std::span<Byte> out) {
  if (out.empty()) return 0;
  if (bit_count > std::uint64_t{bits.size()} * 8) {
    throw Error(ErrorKind::CorruptStream, "payload bit count exceeds the available bytes");
  }
  validate_codebook(cb);
  const DecodeTable table(cb);

  const Byte* src = bits.data();
  const std::size_t size = bits.size();
  std::size_t pos = 0;
  std::uint64_t acc = 0;  // MSB-aligned
  int nbits = 0;
  std::uint64_t consumed = 0;

  for (std::size_t i = 0; i < out.size(); ++i) {
    if (nbits < static_cast<int>(kMaxCodeLength)) {
      if (pos + 8 <= size) {
        acc |= load_be64(src + pos) >> nbits;
        pos += static_cast<std::size_t>((63 - nbits) >> 3);
        nbits |= 56;
      } else {
        while (nbits <= 56 && pos < size) {
          acc |= std::uint64_t{src[pos++]} << (56 - nbits);
          nbits += 8;
        }
      }
    }
    unsigned symbol = 0;
    unsigned length = 0;
    if (!table.lookup(static_cast<std::uint32_t>(acc >> (64 - kMaxCodeLength)), symbol, length)) {
      throw Error(ErrorKind::CorruptStream, "invalid Huffman prefix at symbol " + std::to_string(i));
    }
    out[i] = static_cast<Byte>(symbol);
    acc <<= length;
    nbits -= static_cast<int>(length);
    consumed += length;
    if (consumed > bit_count) {
      throw Error(ErrorKind::CorruptStream, "Huffman payload exhausted after " + std::to_string(i) + " of " +
                                                std::to_string(out.size()) + " symbols");
    }
  }
  return consumed;
}

Bytes decode_block(const EncodedBits& bits, const BlockCodebook& cb, std::size_t out_len) {
  Bytes out(out_len);
  decode_block_into(bits.bytes, bits.bit_count, cb, out);
  return out;
}

}  // namespace lmc

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace lmc {

using Byte = std::uint8_t;
using Bytes = std::vector<Byte>;

inline constexpr std::size_t KiB = 1024;
inline constexpr std::size_t MiB = 1024 * KiB;

/// Element encodings understood by the codec. The numeric value is the
/// element-type code written into stream headers.
enum class ElementType : std::uint8_t {
  Raw8 = 0,  // no element structure
  BF16 = 1,
  FP16 = 2,
  FP32 = 3,
};

constexpr std::size_t width(ElementType type) noexcept {
  switch (type) {
    case ElementType::Raw8: return 1;
    case ElementType::BF16: return 2;
    case ElementType::FP16: return 2;
    case ElementType::FP32: return 4;
  }
  return 1;
}

std::string_view name(ElementType type) noexcept;

/// Accepts the CLI spellings: raw, bf16, fp16, fp32.
std::optional<ElementType> parse_element_type(std::string_view text) noexcept;

std::optional<ElementType> element_type_from_code(std::uint8_t code) noexcept;

// Bit layouts, bit 0 = least significant bit of the little-endian element.
namespace bf16_layout {
inline constexpr unsigned kBits = 16;
inline constexpr unsigned kMantissaBits = 7;   // bits 0..6
inline constexpr unsigned kExponentBits = 8;   // bits 7..14
inline constexpr unsigned kExponentShift = 7;
inline constexpr unsigned kSignBit = 15;
inline constexpr unsigned kExponentMsb = 14;
}  // namespace bf16_layout

namespace fp16_layout {
inline constexpr unsigned kBits = 16;
inline constexpr unsigned kMantissaBits = 10;
inline constexpr unsigned kExponentBits = 5;
inline constexpr unsigned kSignBit = 15;
}  // namespace fp16_layout

namespace fp32_layout {
inline constexpr unsigned kBits = 32;
inline constexpr unsigned kMantissaBits = 23;
inline constexpr unsigned kExponentBits = 8;
inline constexpr unsigned kSignBit = 31;
}  // namespace fp32_layout

/// Round-to-nearest-even conversion, the same rounding used when training
/// frameworks down-cast float32 master weights. NaNs stay quiet NaNs.
std::uint16_t float_to_bf16(float value) noexcept;
float bf16_to_float(std::uint16_t bits) noexcept;

/// Raw little-endian tensor bytes for one shard at one step.
struct TensorBuffer {
  Bytes bytes;
  ElementType element_type = ElementType::Raw8;

  std::size_t size() const noexcept { return bytes.size(); }
  std::size_t element_count() const noexcept { return bytes.size() / width(element_type); }
  bool aligned() const noexcept { return bytes.size() % width(element_type) == 0; }

  /// Throws an alignment error when the length is not a whole number of elements.
  void check_aligned() const;

  friend bool operator==(const TensorBuffer&, const TensorBuffer&) = default;
};

/// Bytes rearranged so that byte g of every element is stored contiguously:
/// group g occupies [g * element_count, (g + 1) * element_count).
struct GroupedBuffer {
  Bytes bytes;
  ElementType element_type = ElementType::Raw8;
  std::size_t element_count = 0;

  std::span<const Byte> group(std::size_t g) const noexcept {
    return std::span<const Byte>(bytes).subspan(g * element_count, element_count);
  }

  friend bool operator==(const GroupedBuffer&, const GroupedBuffer&) = default;
};

}  // namespace lmc

#include "lmc/types.hpp"

#include <bit>
#include <string>

#include "lmc/error.hpp"

namespace lmc {

std::string_view name(ElementType type) noexcept {
  switch (type) {
    case ElementType::Raw8: return "raw";
    case ElementType::BF16: return "bf16";
    case ElementType::FP16: return "fp16";
    case ElementType::FP32: return "fp32";
  }
  return "raw";
}

std::optional<ElementType> parse_element_type(std::string_view text) noexcept {
  if (text == "raw" || text == "raw8" || text == "u8") return ElementType::Raw8;
  if (text == "bf16" || text == "bfloat16") return ElementType::BF16;
  if (text == "fp16" || text == "float16" || text == "f16") return ElementType::FP16;
  if (text == "fp32" || text == "float32" || text == "f32") return ElementType::FP32;
  return std::nullopt;
}

std::optional<ElementType> element_type_from_code(std::uint8_t code) noexcept {
  if (code > static_cast<std::uint8_t>(ElementType::FP32)) return std::nullopt;
  return static_cast<ElementType>(code);
}

std::uint16_t float_to_bf16(float value) noexcept {
  const auto bits = std::bit_cast<std::uint32_t>(value);
  if ((bits & 0x7F800000u) == 0x7F800000u && (bits & 0x007FFFFFu) != 0) {
    return static_cast<std::uint16_t>((bits >> 16) | 0x0040u);
  }
  const std::uint32_t bias = 0x7FFFu + ((bits >> 16) & 1u);
  return static_cast<std::uint16_t>((bits + bias) >> 16);
}

float bf16_to_float(std::uint16_t bits) noexcept {
  return std::bit_cast<float>(static_cast<std::uint32_t>(bits) << 16);
}

void TensorBuffer::check_aligned() const {
  if (!aligned()) {
    throw Error(ErrorKind::Alignment, "length " + std::to_string(bytes.size()) +
                                          " is not a multiple of the " + std::string(name(element_type)) +
                                          " element width " + std::to_string(width(element_type)));
  }
}

}  // namespace lmc

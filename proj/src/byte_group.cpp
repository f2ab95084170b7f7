#include "lmc/byte_group.hpp"

#include <algorithm>
#include <cstring>
#include <string>

#include "lmc/error.hpp"

namespace lmc {

void group_range(std::span<const Byte> elements, std::size_t width, std::size_t first, std::span<Byte> out) {
  if (width == 1) {
    std::memcpy(out.data(), elements.data() + first, out.size());
    return;
  }
  const std::size_t n = elements.size() / width;
  std::size_t pos = first;
  std::size_t written = 0;
  while (written < out.size()) {
    const std::size_t g = pos / n;
    const std::size_t j0 = pos % n;
    const std::size_t take = std::min(n - j0, out.size() - written);
    const Byte* src = elements.data() + j0 * width + g;
    Byte* dst = out.data() + written;
    for (std::size_t j = 0; j < take; ++j) dst[j] = src[j * width];
    pos += take;
    written += take;
  }
}

void ungroup_elements(std::span<const Byte> grouped, std::size_t width, std::size_t first_element,
                      std::size_t count, std::span<Byte> out) {
  if (width == 1) {
    std::memcpy(out.data() + first_element, grouped.data() + first_element, count);
    return;
  }
  const std::size_t n = grouped.size() / width;
  const std::size_t last = first_element + count;
  if (width == 2) {
    const Byte* lo = grouped.data();
    const Byte* hi = grouped.data() + n;
    for (std::size_t j = first_element; j < last; ++j) {
      out[2 * j] = lo[j];
      out[2 * j + 1] = hi[j];
    }
    return;
  }
  if (width == 4) {
    const Byte* g0 = grouped.data();
    const Byte* g1 = g0 + n;
    const Byte* g2 = g1 + n;
    const Byte* g3 = g2 + n;
    for (std::size_t j = first_element; j < last; ++j) {
      Byte* e = out.data() + 4 * j;
      e[0] = g0[j];
      e[1] = g1[j];
      e[2] = g2[j];
      e[3] = g3[j];
    }
    return;
  }
  for (std::size_t g = 0; g < width; ++g) {
    const Byte* src = grouped.data() + g * n;
    for (std::size_t j = first_element; j < last; ++j) out[j * width + g] = src[j];
  }
}

GroupedBuffer byte_group(const TensorBuffer& input) {
  input.check_aligned();
  GroupedBuffer out{Bytes(input.bytes.size()), input.element_type, input.element_count()};
  group_range(input.bytes, width(input.element_type), 0, out.bytes);
  return out;
}

TensorBuffer byte_ungroup(const GroupedBuffer& input) {
  const std::size_t w = width(input.element_type);
  if (input.bytes.size() % w != 0 || input.bytes.size() / w != input.element_count) {
    throw Error(ErrorKind::Alignment, "grouped length " + std::to_string(input.bytes.size()) +
                                          " does not match " + std::to_string(input.element_count) +
                                          " elements of width " + std::to_string(w));
  }
  TensorBuffer out{Bytes(input.bytes.size()), input.element_type};
  ungroup_elements(input.bytes, w, 0, input.element_count, out.bytes);
  return out;
}

}  // namespace lmc

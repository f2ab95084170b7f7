#pragma once

#include <cstddef>
#include <span>

#include "lmc/types.hpp"

namespace lmc {

/// Rearranges element bytes into contiguous per-significance groups, least
/// significant group first. Identity for Raw8.
GroupedBuffer byte_group(const TensorBuffer& input);

/// Inverse of byte_group.
TensorBuffer byte_ungroup(const GroupedBuffer& input);

// Span kernels shared with the container code, which groups windows and
// segments in place rather than whole buffers.

/// Writes grouped positions [first, first + out.size()) of `elements`
/// (a whole number of `width`-byte elements) into `out`.
void group_range(std::span<const Byte> elements, std::size_t width, std::size_t first, std::span<Byte> out);

/// Scatters elements [first_element, first_element + count) of a grouped
/// window back into element order. `grouped` and `out` both cover the window.
void ungroup_elements(std::span<const Byte> grouped, std::size_t width, std::size_t first_element,
                      std::size_t count, std::span<Byte> out);

}  // namespace lmc

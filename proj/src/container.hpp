#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lmc/stream.hpp"

namespace lmc::detail {

struct ContainerLayout {
  std::size_t window_size = 0;  // multiple of the element width
  std::uint32_t segment_count = 1;
};

struct SegmentRange {
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Splits a window into `segments` contiguous, block-aligned ranges whose
/// block counts differ by at most one. Trailing segments may be empty.
std::vector<SegmentRange> plan_segments(std::size_t window_length, std::size_t block_size, std::uint32_t segments);

Bytes encode_container(const TensorBuffer& input, const LmcOptions& options, const ContainerLayout& layout,
                       unsigned workers);

TensorBuffer decode_container(std::span<const Byte> stream, unsigned workers);

}  // namespace lmc::detail

#pragma once

#include <cstdint>
#include <span>

#include "lmc/types.hpp"

namespace lmc {

/// Byte-wise XOR of two consecutive steps of the same shard.
struct DeltaBuffer {
  Bytes bytes;
  ElementType element_type = ElementType::Raw8;
  std::uint64_t step_from = 0;
  std::uint64_t step_to = 1;

  friend bool operator==(const DeltaBuffer&, const DeltaBuffer&) = default;
};

/// Throws a shape error on length mismatch, a type error on element-type mismatch.
DeltaBuffer xor_delta(const TensorBuffer& prev, const TensorBuffer& next, std::uint64_t step_from = 0);

/// Reconstructs the next step. Throws a shape error on length mismatch.
TensorBuffer xor_apply(const TensorBuffer& prev, const DeltaBuffer& delta);

/// dst ^= src; sizes must match.
void xor_into(std::span<Byte> dst, std::span<const Byte> src);

}  // namespace lmc

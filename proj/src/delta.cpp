#include "lmc/delta.hpp"

#include <cstring>
#include <string>

#include "lmc/error.hpp"

namespace lmc {

namespace {

void check_same_length(std::size_t a, std::size_t b) {
  if (a != b) {
    throw Error(ErrorKind::Shape, "buffer lengths differ: " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

}  // namespace

void xor_into(std::span<Byte> dst, std::span<const Byte> src) {
  check_same_length(dst.size(), src.size());
  std::size_t i = 0;
  for (; i + 8 <= dst.size(); i += 8) {
    std::uint64_t a;
    std::uint64_t b;
    std::memcpy(&a, dst.data() + i, 8);
    std::memcpy(&b, src.data() + i, 8);
    a ^= b;
    std::memcpy(dst.data() + i, &a, 8);
  }
  for (; i < dst.size(); ++i) dst[i] ^= src[i];
}

DeltaBuffer xor_delta(const TensorBuffer& prev, const TensorBuffer& next, std::uint64_t step_from) {
  check_same_length(prev.size(), next.size());
  if (prev.element_type != next.element_type) {
    throw Error(ErrorKind::Type, std::string("element types differ: ") + std::string(name(prev.element_type)) +
                                     " vs " + std::string(name(next.element_type)));
  }
  DeltaBuffer out{next.bytes, next.element_type, step_from, step_from + 1};
  xor_into(out.bytes, prev.bytes);
  return out;
}

TensorBuffer xor_apply(const TensorBuffer& prev, const DeltaBuffer& delta) {
  check_same_length(prev.size(), delta.bytes.size());
  TensorBuffer out{prev.bytes, prev.element_type};
  xor_into(out.bytes, delta.bytes);
  return out;
}

}  // namespace lmc

#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "lmc/entropy.hpp"
#include "lmc/types.hpp"

namespace lmc {

struct CodecMeasurement {
  std::size_t original_size = 0;
  std::size_t compressed_size = 0;
  double encode_s = 0.0;
  double decode_s = 0.0;
};

/// A named compressor configuration that can be timed on a buffer. Every
/// measurement includes a round trip and fails loudly on a mismatch.
class Codec {
 public:
  virtual ~Codec() = default;
  virtual std::string name() const = 0;
  virtual CodecMeasurement measure(const TensorBuffer& input) const = 0;
};

struct CodecParams {
  std::size_t block_size = kDefaultBlockSize;
};

/// Known names: lmc, bg-lmc, and, when the host binary is on PATH, bz2,
/// gzip, lz4 with optional "bg-" prefix. Unknown names and missing binaries
/// are configuration errors.
std::unique_ptr<Codec> make_codec(std::string_view name, const CodecParams& params = {});

std::vector<std::string> known_codec_names();

/// True when `program` resolves through PATH.
bool program_available(std::string_view program);

}  // namespace lmc

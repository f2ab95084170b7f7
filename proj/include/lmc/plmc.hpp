#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lmc/entropy.hpp"
#include "lmc/stream.hpp"
#include "lmc/types.hpp"

namespace lmc {

inline constexpr std::size_t kDefaultBufferSize = 128 * MiB;

struct PlmcOptions {
  bool byte_group = true;
  std::size_t block_size = kDefaultBlockSize;
  std::uint32_t segment_count = 1;
  std::size_t buffer_size = kDefaultBufferSize;  // multiple of block_size
  bool delta_applied = false;
  unsigned worker_count = 0;  // 0: one worker per segment
};

/// Data-parallel compressor. The input is processed in buffer_size windows;
/// each window is byte-grouped, split into segment_count block-aligned
/// segments, and the segments are coded concurrently. The stream depends
/// only on the input and the options, never on worker_count.
Bytes plmc_compress(const TensorBuffer& input, const PlmcOptions& options);

/// Decodes any CodeStream with up to `worker_count` threads.
TensorBuffer plmc_decompress(std::span<const Byte> stream, unsigned worker_count);

/// Detected hardware threads, at least 1.
unsigned default_thread_count() noexcept;

struct BenchOptions {
  bool byte_group = true;
  std::size_t block_size = kDefaultBlockSize;
  std::size_t buffer_size = kDefaultBufferSize;
  unsigned repetitions = 3;  // timed runs after one warm-up; the median is reported
};

struct BenchRow {
  unsigned threads = 1;
  double compress_mib_s = 0.0;
  double decompress_mib_s = 0.0;
  double ratio = 0.0;
};

/// In-memory throughput per thread count, with segment_count = threads.
std::vector<BenchRow> throughput_bench(const TensorBuffer& corpus, std::span<const unsigned> thread_counts,
                                       const BenchOptions& options = {});

/// `threads,compress_mib_s,decompress_mib_s,ratio` with a header line.
std::string bench_csv(std::span<const BenchRow> rows);

}  // namespace lmc

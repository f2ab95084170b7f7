#include "lmc/plmc.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <string>
#include <thread>

#include "container.hpp"
#include "lmc/error.hpp"

namespace lmc {

Bytes plmc_compress(const TensorBuffer& input, const PlmcOptions& options) {
  check_block_size(options.block_size);
  if (options.segment_count == 0) throw Error(ErrorKind::Input, "segment count must be at least 1");
  if (options.buffer_size < options.block_size || options.buffer_size % options.block_size != 0) {
    throw Error(ErrorKind::Input, "buffer size " + std::to_string(options.buffer_size) +
                                      " must be a positive multiple of the block size " +
                                      std::to_string(options.block_size));
  }
  const LmcOptions lmc{options.byte_group, options.block_size, options.delta_applied};
  const detail::ContainerLayout layout{options.buffer_size, options.segment_count};
  const unsigned workers = options.worker_count == 0 ? options.segment_count : options.worker_count;
  return detail::encode_container(input, lmc, layout, workers);
}

TensorBuffer plmc_decompress(std::span<const Byte> stream, unsigned worker_count) {
  return detail::decode_container(stream, std::max(1u, worker_count));
}

unsigned default_thread_count() noexcept { return std::max(1u, std::thread::hardware_concurrency()); }

namespace {

template <class Fn>
double median_seconds(unsigned repetitions, Fn&& fn) {
  fn();  // warm-up
  std::vector<double> samples;
  for (unsigned r = 0; r < std::max(1u, repetitions); ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    samples.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  std::nth_element(samples.begin(), samples.begin() + samples.size() / 2, samples.end());
  return samples[samples.size() / 2];
}

}  // namespace

std::vector<BenchRow> throughput_bench(const TensorBuffer& corpus, std::span<const unsigned> thread_counts,
                                       const BenchOptions& options) {
  std::vector<BenchRow> rows;
  const double mib = static_cast<double>(corpus.size()) / static_cast<double>(MiB);
  for (const unsigned threads : thread_counts) {
    PlmcOptions opts;
    opts.byte_group = options.byte_group;
    opts.block_size = options.block_size;
    opts.buffer_size = options.buffer_size;
    opts.segment_count = std::max(1u, threads);
    opts.worker_count = std::max(1u, threads);

    Bytes stream;
    const double compress_s = median_seconds(options.repetitions, [&] { stream = plmc_compress(corpus, opts); });
    TensorBuffer restored;
    const double decompress_s =
        median_seconds(options.repetitions, [&] { restored = plmc_decompress(stream, opts.worker_count); });
    if (restored.bytes != corpus.bytes) throw Error(ErrorKind::Integrity, "bench round trip mismatch");

    BenchRow row;
    row.threads = opts.segment_count;
    row.compress_mib_s = compress_s > 0 ? mib / compress_s : 0.0;
    row.decompress_mib_s = decompress_s > 0 ? mib / decompress_s : 0.0;
    row.ratio = compression_ratio(stream.size(), corpus.size());
    rows.push_back(row);
  }
  return rows;
}

std::string bench_csv(std::span<const BenchRow> rows) {
  std::string out = "threads,compress_mib_s,decompress_mib_s,ratio\n";
  char line[128];
  for (const auto& r : rows) {
    std::snprintf(line, sizeof(line), "%u,%.3f,%.3f,%.6f\n", r.threads, r.compress_mib_s, r.decompress_mib_s,
                  r.ratio);
    out += line;
  }
  return out;
}

}  // namespace lmc

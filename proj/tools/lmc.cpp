// lmc: command-line front end for the checkpoint codec.
//
// Exit codes: 0 ok, 2 input, 3 integrity, 4 shape, 5 missing, 6 config.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lmc/analysis.hpp"
#include "lmc/chain.hpp"
#include "lmc/delta.hpp"
#include "lmc/error.hpp"
#include "lmc/io.hpp"
#include "lmc/plmc.hpp"
#include "lmc/stream.hpp"
#include "lmc/synthetic.hpp"

namespace fs = std::filesystem;

namespace {

enum ExitCode : int {
  kOk = 0,
  kInput = 2,
  kIntegrity = 3,
  kShape = 4,
  kMissing = 5,
  kConfig = 6,
};

int exit_code_for(lmc::ErrorKind kind) {
  using lmc::ErrorKind;
  switch (kind) {
    case ErrorKind::CorruptStream:
    case ErrorKind::UnsupportedFormat:
    case ErrorKind::Integrity:
    case ErrorKind::MalformedCodebook:
      return kIntegrity;
    case ErrorKind::Shape:
    case ErrorKind::Type:
      return kShape;
    case ErrorKind::Missing:
      return kMissing;
    case ErrorKind::Config:
      return kConfig;
    default:
      return kInput;
  }
}

lmc::ElementType dtype_of(const std::string& text) {
  const auto type = lmc::parse_element_type(text);
  if (!type) throw lmc::Error(lmc::ErrorKind::Input, "unknown --dtype '" + text + "' (bf16, fp16, fp32, raw)");
  return *type;
}

void write_text(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  lmc::write_file_atomic(path, std::span(reinterpret_cast<const lmc::Byte*>(text.data()), text.size()));
}

unsigned default_threads() {
  if (const char* env = std::getenv("LMC_THREADS")) {
    try {
      const int v = std::stoi(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
  }
  return lmc::default_thread_count();
}

// Options shared by every command that writes CodeStreams.
struct CodecFlags {
  std::string dtype = "raw";
  std::size_t block_size = lmc::kDefaultBlockSize;
  std::size_t buffer_size = lmc::kDefaultBufferSize;
  unsigned threads = default_threads();
  bool no_bytegroup = false;

  void attach(CLI::App& app) {
    app.add_option("--dtype", dtype, "Element type: bf16, fp16, fp32, raw")->capture_default_str();
    app.add_option("--block-size", block_size, "Block size in bytes (power of two, 4K..1M)")
        ->transform(CLI::AsSizeValue(false))
        ->capture_default_str();
    app.add_option("--buffer-size", buffer_size, "Window size in bytes (multiple of the block size)")
        ->transform(CLI::AsSizeValue(false))
        ->capture_default_str();
    app.add_option("--threads", threads, "Segments and workers (default: $LMC_THREADS or core count)")
        ->check(CLI::PositiveNumber);
    app.add_flag("--no-bytegroup", no_bytegroup, "Disable byte grouping");
  }

  lmc::PlmcOptions plmc(bool delta) const {
    lmc::PlmcOptions o;
    o.byte_group = !no_bytegroup;
    o.block_size = block_size;
    o.buffer_size = std::max(buffer_size, block_size);
    o.segment_count = threads;
    o.worker_count = threads;
    o.delta_applied = delta;
    return o;
  }
};

int cmd_compress(const CodecFlags& flags, const std::string& input, const std::string& output,
                 const std::string& delta_base) {
  lmc::TensorBuffer data{lmc::read_file(input), dtype_of(flags.dtype)};
  data.check_aligned();
  const bool delta = !delta_base.empty();
  if (delta) {
    const lmc::TensorBuffer prev{lmc::read_file(delta_base), data.element_type};
    data.bytes = lmc::xor_delta(prev, data).bytes;
  }
  const auto t0 = std::chrono::steady_clock::now();
  const lmc::Bytes stream = lmc::plmc_compress(data, flags.plmc(delta));
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  lmc::write_file_atomic(output, stream);
  const double mib = static_cast<double>(data.size()) / static_cast<double>(lmc::MiB);
  std::fprintf(stderr, "ratio=%.6f MiB/s=%.2f\n", lmc::compression_ratio(stream.size(), data.size()),
               seconds > 0 ? mib / seconds : 0.0);
  return kOk;
}

int cmd_decompress(unsigned threads, const std::string& input, const std::string& output,
                   const std::string& delta_base) {
  const lmc::Bytes stream = lmc::read_file(input);
  const lmc::CodeStreamHeader header = lmc::read_header(stream);
  if (header.delta_applied() && delta_base.empty()) {
    throw lmc::Error(lmc::ErrorKind::Input, input + " holds an XOR delta; pass --delta <previous step>");
  }
  if (!header.delta_applied() && !delta_base.empty()) {
    throw lmc::Error(lmc::ErrorKind::Input, input + " is not a delta stream");
  }
  lmc::TensorBuffer data = lmc::plmc_decompress(stream, threads);
  if (!delta_base.empty()) {
    const lmc::TensorBuffer prev{lmc::read_file(delta_base), data.element_type};
    const lmc::DeltaBuffer delta{std::move(data.bytes), data.element_type, 0, 1};
    data = lmc::xor_apply(prev, delta);
  }
  lmc::write_file_atomic(output, data.bytes);
  return kOk;
}

lmc::ChainOptions chain_options(const CodecFlags& flags) {
  lmc::ChainOptions o;
  o.byte_group = !flags.no_bytegroup;
  o.block_size = flags.block_size;
  o.buffer_size = std::max(flags.buffer_size, flags.block_size);
  o.segment_count = flags.threads;
  o.worker_count = flags.threads;
  return o;
}

int cmd_checkpoint_add(const CodecFlags& flags, const std::string& chain_dir, const std::vector<std::string>& files,
                       const std::string& shard_list, std::optional<std::uint64_t> step) {
  std::vector<lmc::ShardInput> shards;
  if (!shard_list.empty()) shards = lmc::load_shards(lmc::read_shard_list(shard_list));
  for (const auto& f : files) {
    shards.push_back({fs::path(f).filename().string(), lmc::TensorBuffer{lmc::read_file(f), dtype_of(flags.dtype)}});
  }
  if (shards.empty()) throw lmc::Error(lmc::ErrorKind::Input, "no shard files given");
  lmc::CheckpointChain chain(chain_dir);
  const auto added = chain.add_step(shards, chain_options(flags), step);
  std::fprintf(stderr, "added step %llu (%zu shards)\n", static_cast<unsigned long long>(added), shards.size());
  return kOk;
}

int cmd_checkpoint_restore(unsigned threads, const std::string& chain_dir, std::uint64_t step,
                           const std::string& out_dir) {
  if (!fs::exists(fs::path(chain_dir) / lmc::CheckpointChain::kManifestName)) {
    throw lmc::Error(lmc::ErrorKind::Missing, "no checkpoint chain at " + chain_dir);
  }
  const lmc::CheckpointChain chain(chain_dir);
  const auto shards = chain.restore(step, threads);
  fs::create_directories(out_dir);
  for (const auto& s : shards) {
    std::string file = s.name;
    std::replace(file.begin(), file.end(), '/', '_');
    lmc::write_file_atomic(fs::path(out_dir) / file, s.data.bytes);
  }
  return kOk;
}

// Steps for the ratio series: a checkpoint chain, or a directory of raw
// step files taken in name order.
std::vector<std::vector<lmc::TensorBuffer>> load_steps(const std::string& path, const std::string& dtype,
                                                       unsigned threads) {
  std::vector<std::vector<lmc::TensorBuffer>> steps;
  if (fs::exists(fs::path(path) / lmc::CheckpointChain::kManifestName)) {
    const lmc::CheckpointChain chain(path);
    for (auto& shards : chain.restore_all(threads)) {
      std::vector<lmc::TensorBuffer> step;
      for (auto& s : shards) step.push_back(std::move(s.data));
      steps.push_back(std::move(step));
    }
    return steps;
  }
  if (!fs::is_directory(path)) throw lmc::Error(lmc::ErrorKind::Missing, "no such directory: " + path);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(path)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  const auto type = dtype_of(dtype);
  for (const auto& f : files) {
    lmc::TensorBuffer b{lmc::read_file(f), type};
    b.check_aligned();
    steps.push_back({std::move(b)});
  }
  return steps;
}

std::vector<unsigned> parse_thread_list(const std::string& text) {
  std::vector<unsigned> out;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || v <= 0) throw lmc::Error(lmc::ErrorKind::Input, "bad --threads entry '" + item + "'");
    out.push_back(static_cast<unsigned>(v));
  }
  if (out.empty()) throw lmc::Error(lmc::ErrorKind::Input, "--threads needs at least one count");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lmc: lossless compression for LLM checkpoint tensors"};
  app.require_subcommand(1);

  // compress
  CodecFlags compress_flags;
  std::string compress_in;
  std::string compress_out;
  std::string compress_delta;
  auto* compress = app.add_subcommand("compress", "Compress a raw tensor file into a CodeStream");
  compress_flags.attach(*compress);
  compress->add_option("--delta", compress_delta, "Previous step; compress the XOR delta against it");
  compress->add_option("input", compress_in)->required();
  compress->add_option("output", compress_out)->required();

  // decompress
  unsigned decompress_threads = default_threads();
  std::string decompress_in;
  std::string decompress_out;
  std::string decompress_delta;
  auto* decompress = app.add_subcommand("decompress", "Restore the raw bytes of a CodeStream");
  decompress->add_option("--threads", decompress_threads)->check(CLI::PositiveNumber);
  decompress->add_option("--delta", decompress_delta, "Previous step for delta streams");
  decompress->add_option("input", decompress_in)->required();
  decompress->add_option("output", decompress_out)->required();

  // checkpoint add|restore
  auto* checkpoint = app.add_subcommand("checkpoint", "Incremental checkpoint chains");
  checkpoint->require_subcommand(1);
  CodecFlags add_flags;
  std::string add_chain;
  std::vector<std::string> add_files;
  std::string add_manifest;
  std::optional<std::uint64_t> add_step;
  auto* add = checkpoint->add_subcommand("add", "Append the next step (shard files) to a chain");
  add_flags.attach(*add);
  add->add_option("--manifest", add_manifest, "JSON-lines shard list: name, dtype, shape, path");
  add->add_option("--step", add_step, "Expected step index; rejects duplicates");
  add->add_option("chain", add_chain)->required();
  add->add_option("files", add_files);

  unsigned restore_threads = default_threads();
  std::string restore_chain;
  std::uint64_t restore_step = 0;
  std::string restore_out;
  auto* restore = checkpoint->add_subcommand("restore", "Write the shards of one step");
  restore->add_option("--threads", restore_threads)->check(CLI::PositiveNumber);
  restore->add_option("chain", restore_chain)->required();
  restore->add_option("step", restore_step)->required();
  restore->add_option("output_dir", restore_out)->required();

  // analyze bits|flips|ratio-series|entropy|sweep
  auto* analyze = app.add_subcommand("analyze", "Bit statistics, ratio series and entropy estimates");
  analyze->require_subcommand(1);
  std::string an_dtype = "bf16";
  std::string an_output;
  std::uint64_t an_step = 0;
  std::size_t an_block = lmc::kDefaultBlockSize;
  unsigned an_threads = default_threads();

  std::string bits_file;
  auto* bits = analyze->add_subcommand("bits", "Per-bit set ratios of one shard (CSV step,bit,ratio)");
  bits->add_option("--dtype", an_dtype)->capture_default_str();
  bits->add_option("--step", an_step, "Step label for the rows");
  bits->add_option("-o,--output", an_output);
  bits->add_option("shard", bits_file)->required();

  std::string flips_prev;
  std::string flips_next;
  auto* flips = analyze->add_subcommand("flips", "Per-bit XOR flip ratios between two steps (CSV step,bit,ratio)");
  flips->add_option("--dtype", an_dtype)->capture_default_str();
  flips->add_option("--step", an_step, "Step label for the rows");
  flips->add_option("-o,--output", an_output);
  flips->add_option("prev", flips_prev)->required();
  flips->add_option("next", flips_next)->required();

  std::string series_codec;
  std::string series_path;
  auto* series = analyze->add_subcommand("ratio-series", "Delta compression ratio per step (CSV)");
  series->add_option("--codec", series_codec, "lmc, bg-lmc, bz2, bg-bz2, gzip, bg-gzip, lz4, bg-lz4")->required();
  series->add_option("--dtype", an_dtype, "Element type of raw step files")->capture_default_str();
  series->add_option("--block-size", an_block)->transform(CLI::AsSizeValue(false));
  series->add_option("--threads", an_threads)->check(CLI::PositiveNumber);
  series->add_option("-o,--output", an_output);
  series->add_option("steps", series_path, "Checkpoint chain or directory of step files")->required();

  std::string entropy_file;
  auto* entropy = analyze->add_subcommand("entropy", "Order-0 entropy bound vs achieved ratios (JSON)");
  entropy->add_option("--dtype", an_dtype)->capture_default_str();
  entropy->add_option("--block-size", an_block)->transform(CLI::AsSizeValue(false));
  entropy->add_option("-o,--output", an_output);
  entropy->add_option("file", entropy_file)->required();

  double sweep_lo = -0.25;
  double sweep_hi = 0.25;
  double sweep_step = 0.005;
  auto* sweep = analyze->add_subcommand("sweep", "bf16 bit flips across a value sweep (CSV value,bit,flip)");
  sweep->add_option("--lo", sweep_lo)->capture_default_str();
  sweep->add_option("--hi", sweep_hi)->capture_default_str();
  sweep->add_option("--increment", sweep_step)->capture_default_str();
  sweep->add_option("-o,--output", an_output);

  // bench scale
  auto* bench = app.add_subcommand("bench", "Throughput benchmarks");
  bench->require_subcommand(1);
  std::string bench_threads = "1,2,4,8";
  std::string bench_corpus;
  std::string bench_dtype = "bf16";
  std::size_t bench_block = lmc::kDefaultBlockSize;
  std::size_t bench_buffer = lmc::kDefaultBufferSize;
  std::size_t bench_synthetic_mib = 256;
  std::uint64_t bench_seed = 1;
  bool bench_no_bytegroup = false;
  auto* scale = bench->add_subcommand("scale", "Compress/decompress MiB/s per thread count (CSV)");
  scale->add_option("--threads", bench_threads, "Comma-separated thread counts")->capture_default_str();
  scale->add_option("--dtype", bench_dtype)->capture_default_str();
  scale->add_option("--block-size", bench_block)->transform(CLI::AsSizeValue(false));
  scale->add_option("--buffer-size", bench_buffer)->transform(CLI::AsSizeValue(false));
  scale->add_option("--synthetic-mib", bench_synthetic_mib, "Size of the generated corpus when none is given")
      ->capture_default_str();
  scale->add_option("--seed", bench_seed)->capture_default_str();
  scale->add_flag("--no-bytegroup", bench_no_bytegroup);
  scale->add_option("-o,--output", an_output);
  scale->add_option("corpus", bench_corpus, "Raw corpus file (default: synthetic bf16 checkpoint delta)");

  // synth
  lmc::TrajectoryConfig synth_config;
  std::string synth_dtype = "bf16";
  std::size_t synth_steps = 10;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Write a synthetic converging trajectory, one raw file per step");
  synth->add_option("--dtype", synth_dtype)->capture_default_str();
  synth->add_option("--elements", synth_config.element_count)->capture_default_str();
  synth->add_option("--steps", synth_steps)->capture_default_str();
  synth->add_option("--sigma0", synth_config.sigma0)->capture_default_str();
  synth->add_option("--gamma", synth_config.gamma)->capture_default_str();
  synth->add_option("--seed", synth_config.seed)->capture_default_str();
  synth->add_option("output_dir", synth_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInput;
  }

  try {
    if (*compress) return cmd_compress(compress_flags, compress_in, compress_out, compress_delta);
    if (*decompress) return cmd_decompress(decompress_threads, decompress_in, decompress_out, decompress_delta);
    if (*add) return cmd_checkpoint_add(add_flags, add_chain, add_files, add_manifest, add_step);
    if (*restore) return cmd_checkpoint_restore(restore_threads, restore_chain, restore_step, restore_out);

    if (*bits) {
      lmc::TensorBuffer shard{lmc::read_file(bits_file), dtype_of(an_dtype)};
      const lmc::BitStats stats = lmc::bit_set_ratios(shard, an_step);
      write_text(lmc::bitstats_csv(std::span(&stats, 1)), an_output);
      return kOk;
    }
    if (*flips) {
      const auto type = dtype_of(an_dtype);
      const lmc::TensorBuffer prev{lmc::read_file(flips_prev), type};
      const lmc::TensorBuffer next{lmc::read_file(flips_next), type};
      prev.check_aligned();
      next.check_aligned();
      const lmc::BitStats stats = lmc::xor_flip_ratios(prev, next, an_step);
      write_text(lmc::bitstats_csv(std::span(&stats, 1)), an_output);
      return kOk;
    }
    if (*series) {
      const auto codec = lmc::make_codec(series_codec, {an_block});  // fail fast on unknown names
      const auto steps = load_steps(series_path, an_dtype, an_threads);
      const auto result =
          lmc::ratio_over_time(std::span<const std::vector<lmc::TensorBuffer>>(steps), series_codec, {an_block});
      write_text(lmc::ratio_series_csv(result), an_output);
      return kOk;
    }
    if (*entropy) {
      lmc::TensorBuffer data{lmc::read_file(entropy_file), dtype_of(an_dtype)};
      data.check_aligned();
      const auto c = lmc::compare_entropy(data, an_block);
      const nlohmann::json j = {
          {"file", entropy_file},       {"dtype", lmc::name(data.element_type)}, {"bytes", data.size()},
          {"block_size", an_block},     {"entropy_ratio", c.entropy_ratio},      {"bg_entropy_ratio", c.bg_entropy_ratio},
          {"lmc_ratio", c.lmc_ratio},   {"bg_lmc_ratio", c.bg_lmc_ratio},
      };
      write_text(j.dump(2) + "\n", an_output);
      return kOk;
    }
    if (*sweep) {
      const auto map = lmc::increment_bitflip_map(sweep_lo, sweep_hi, sweep_step);
      std::string csv = "value,bit,flip\n";
      char line[96];
      for (std::size_t i = 0; i < map.values.size(); ++i) {
        for (unsigned b = 0; b < 16; ++b) {
          std::snprintf(line, sizeof(line), "%.6f,%u,%d\n", map.values[i], b, map.flips[i][b] ? 1 : 0);
          csv += line;
        }
      }
      write_text(csv, an_output);
      return kOk;
    }
    if (*scale) {
      lmc::TensorBuffer corpus;
      if (bench_corpus.empty()) {
        corpus = lmc::synthetic_delta_corpus(bench_synthetic_mib * lmc::MiB, bench_seed);
      } else {
        corpus = lmc::TensorBuffer{lmc::read_file(bench_corpus), dtype_of(bench_dtype)};
        corpus.check_aligned();
      }
      lmc::BenchOptions opts;
      opts.byte_group = !bench_no_bytegroup;
      opts.block_size = bench_block;
      opts.buffer_size = bench_buffer;
      const auto threads = parse_thread_list(bench_threads);
      const auto rows = lmc::throughput_bench(corpus, threads, opts);
      write_text(lmc::bench_csv(rows), an_output);
      return kOk;
    }
    if (*synth) {
      synth_config.element_type = dtype_of(synth_dtype);
      lmc::SyntheticTrajectory trajectory(synth_config);
      fs::create_directories(synth_out);
      for (std::size_t k = 0; k < synth_steps; ++k) {
        if (k > 0) trajectory.advance();
        char file[32];
        std::snprintf(file, sizeof(file), "step-%06zu.bin", k);
        lmc::write_file_atomic(fs::path(synth_out) / file, trajectory.current().bytes);
      }
      return kOk;
    }
  } catch (const lmc::Error& e) {
    std::fprintf(stderr, "lmc: %s\n", e.what());
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "lmc: %s\n", e.what());
    return kInput;
  }
  return kOk;
}

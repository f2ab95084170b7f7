#include "lmc/external_codec.hpp"

#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "lmc/byte_group.hpp"
#include "lmc/error.hpp"
#include "lmc/stream.hpp"

namespace lmc {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

class LmcCodec final : public Codec {
 public:
  LmcCodec(bool byte_group, std::size_t block_size) : byte_group_(byte_group), block_size_(block_size) {}

  std::string name() const override { return byte_group_ ? "bg-lmc" : "lmc"; }

  CodecMeasurement measure(const TensorBuffer& input) const override {
    CodecMeasurement m;
    m.original_size = input.size();
    auto t0 = Clock::now();
    const Bytes stream = lmc_compress(input, {byte_group_, block_size_, false});
    m.encode_s = seconds_since(t0);
    t0 = Clock::now();
    const TensorBuffer restored = lmc_decompress(stream);
    m.decode_s = seconds_since(t0);
    if (restored.bytes != input.bytes) throw Error(ErrorKind::Integrity, name() + " round trip mismatch");
    m.compressed_size = stream.size();
    return m;
  }

 private:
  bool byte_group_;
  std::size_t block_size_;
};

struct TempDir {
  fs::path path;
  TempDir() {
    static std::atomic<unsigned> counter{0};
    path = fs::temp_directory_path() /
           ("lmc-codec-" + std::to_string(::getpid()) + "-" + std::to_string(counter.fetch_add(1)));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

Bytes read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), {});
}

void write_all(const fs::path& path, std::span<const Byte> data) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
}

std::string quoted(const fs::path& p) { return "'" + p.string() + "'"; }

// Runs a host compressor through the shell with stdin/stdout redirection.
class ExternalCodec final : public Codec {
 public:
  ExternalCodec(std::string label, std::string program, std::string level, bool byte_group)
      : label_(std::move(label)), program_(std::move(program)), level_(std::move(level)), byte_group_(byte_group) {}

  std::string name() const override { return (byte_group_ ? "bg-" : "") + label_; }

  CodecMeasurement measure(const TensorBuffer& input) const override {
    TempDir dir;
    const fs::path raw = dir.path / "in.bin";
    const fs::path packed = dir.path / "in.z";
    const fs::path unpacked = dir.path / "out.bin";
    const Bytes payload = byte_group_ ? byte_group(input).bytes : input.bytes;
    write_all(raw, payload);

    CodecMeasurement m;
    m.original_size = input.size();
    auto t0 = Clock::now();
    run(program_ + " -c " + level_ + " < " + quoted(raw) + " > " + quoted(packed));
    m.encode_s = seconds_since(t0);
    t0 = Clock::now();
    run(program_ + " -d -c < " + quoted(packed) + " > " + quoted(unpacked));
    m.decode_s = seconds_since(t0);
    if (read_all(unpacked) != payload) throw Error(ErrorKind::Integrity, name() + " round trip mismatch");
    m.compressed_size = static_cast<std::size_t>(fs::file_size(packed));
    return m;
  }

 private:
  void run(const std::string& command) const {
    if (std::system(command.c_str()) != 0) throw Error(ErrorKind::Io, "command failed: " + command);
  }

  std::string label_;
  std::string program_;
  std::string level_;
  bool byte_group_;
};

struct ExternalSpec {
  std::string_view label;
  std::string_view program;
  std::string_view level;
};

constexpr ExternalSpec kExternal[] = {
    {"bz2", "bzip2", "-9"},
    {"gzip", "gzip", "-9"},
    {"lz4", "lz4", "-1"},
};

}  // namespace

bool program_available(std::string_view program) {
  const char* path = std::getenv("PATH");
  if (path == nullptr) return false;
  std::stringstream dirs(path);
  std::string dir;
  while (std::getline(dirs, dir, ':')) {
    if (dir.empty()) continue;
    const fs::path candidate = fs::path(dir) / program;
    if (::access(candidate.c_str(), X_OK) == 0) return true;
  }
  return false;
}

std::vector<std::string> known_codec_names() {
  std::vector<std::string> names{"lmc", "bg-lmc"};
  for (const auto& e : kExternal) {
    names.emplace_back(e.label);
    names.push_back("bg-" + std::string(e.label));
  }
  return names;
}

std::unique_ptr<Codec> make_codec(std::string_view name, const CodecParams& params) {
  check_block_size(params.block_size);
  if (name == "lmc") return std::make_unique<LmcCodec>(false, params.block_size);
  if (name == "bg-lmc") return std::make_unique<LmcCodec>(true, params.block_size);
  const bool bg = name.starts_with("bg-");
  const std::string_view base = bg ? name.substr(3) : name;
  for (const auto& e : kExternal) {
    if (base != e.label) continue;
    if (!program_available(e.program)) {
      throw Error(ErrorKind::Config, "codec " + std::string(name) + " needs '" + std::string(e.program) +
                                         "' on PATH");
    }
    return std::make_unique<ExternalCodec>(std::string(e.label), std::string(e.program), std::string(e.level), bg);
  }
  throw Error(ErrorKind::Config, "unknown codec '" + std::string(name) + "'");
}

}  // namespace lmc

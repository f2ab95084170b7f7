#include "lmc/chain.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "lmc/delta.hpp"
#include "lmc/error.hpp"
#include "lmc/io.hpp"
#include "lmc/stream.hpp"

namespace lmc {

namespace fs = std::filesystem;
using nlohmann::json;

// flock-based writer/reader lock on <chain>/.lock.
class ChainLock {
 public:
  ChainLock(const fs::path& dir, bool exclusive) {
    const fs::path path = dir / CheckpointChain::kLockName;
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) throw Error(ErrorKind::Io, "cannot open lock file " + path.string());
    if (::flock(fd_, (exclusive ? LOCK_EX : LOCK_SH) | LOCK_NB) != 0) {
      ::close(fd_);
      throw Error(ErrorKind::Input, "chain " + dir.string() + " is locked by another process");
    }
  }
  ChainLock(const ChainLock&) = delete;
  ChainLock& operator=(const ChainLock&) = delete;
  ~ChainLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }

 private:
  int fd_ = -1;
};

PendingStep::PendingStep(PendingStep&&) noexcept = default;
PendingStep& PendingStep::operator=(PendingStep&&) noexcept = default;
PendingStep::~PendingStep() = default;

namespace {

std::string_view role_name(ChainRole role) { return role == ChainRole::Base ? "base" : "delta"; }

std::string new_chain_id() {
  std::random_device rd;
  const std::uint64_t v = (std::uint64_t{rd()} << 32) | rd();
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string file_safe(std::string_view name) {
  std::string out(name);
  for (auto& c : out) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' ||
                    c == '_' || c == '-';
    if (!ok) c = '_';
  }
  return out;
}

std::string stream_name(std::uint64_t step, std::string_view shard) {
  char prefix[32];
  std::snprintf(prefix, sizeof(prefix), "step-%06llu.", static_cast<unsigned long long>(step));
  return prefix + file_safe(shard) + ".lmc";
}

ElementType parse_dtype(const std::string& text) {
  const auto type = parse_element_type(text);
  if (!type) throw Error(ErrorKind::Input, "unknown dtype '" + text + "'");
  return *type;
}

}  // namespace

std::uint64_t DeltaManifest::step_count() const noexcept {
  std::uint64_t n = 0;
  for (const auto& e : entries) n = std::max(n, e.step + 1);
  return n;
}

std::vector<ManifestEntry> DeltaManifest::step_entries(std::uint64_t step) const {
  std::vector<ManifestEntry> out;
  for (const auto& e : entries) {
    if (e.step == step) out.push_back(e);
  }
  return out;
}

void DeltaManifest::validate() const {
  const std::uint64_t steps = step_count();
  std::map<std::string, std::pair<ElementType, std::uint64_t>> shape;
  for (const auto& e : step_entries(0)) {
    if (e.role != ChainRole::Base) throw Error(ErrorKind::CorruptStream, "step 0 entry is not a base");
    if (!shape.emplace(e.shard, std::pair{e.element_type, e.original_length}).second) {
      throw Error(ErrorKind::CorruptStream, "shard " + e.shard + " has two base entries");
    }
  }
  for (std::uint64_t s = 1; s < steps; ++s) {
    const auto step = step_entries(s);
    if (step.size() != shape.size()) {
      throw Error(ErrorKind::CorruptStream, "step " + std::to_string(s) + " does not hold every shard");
    }
    std::set<std::string> seen;
    for (const auto& e : step) {
      const auto it = shape.find(e.shard);
      if (e.role != ChainRole::Delta || it == shape.end() || !seen.insert(e.shard).second ||
          it->second != std::pair{e.element_type, e.original_length}) {
        throw Error(ErrorKind::CorruptStream, "inconsistent entry for shard " + e.shard + " at step " +
                                                  std::to_string(s));
      }
    }
  }
  for (const auto& e : entries) {
    if (e.chain_id != chain_id) throw Error(ErrorKind::CorruptStream, "entry from a different chain");
  }
}

std::string DeltaManifest::to_jsonl() const {
  std::string out;
  for (const auto& e : entries) {
    const json line = {
        {"chain_id", e.chain_id},
        {"step", e.step},
        {"role", role_name(e.role)},
        {"shard", e.shard},
        {"dtype", name(e.element_type)},
        {"original_length", e.original_length},
        {"stream", e.stream},
        {"crc32", e.crc32},
    };
    out += line.dump();
    out += '\n';
  }
  return out;
}

DeltaManifest DeltaManifest::parse_jsonl(std::string_view text) {
  DeltaManifest m;
  std::istringstream lines{std::string(text)};
  std::string line;
  std::size_t number = 0;
  while (std::getline(lines, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      ManifestEntry e;
      e.chain_id = j.at("chain_id").get<std::string>();
      e.step = j.at("step").get<std::uint64_t>();
      const auto role = j.at("role").get<std::string>();
      if (role != "base" && role != "delta") throw Error(ErrorKind::CorruptStream, "unknown role " + role);
      e.role = role == "base" ? ChainRole::Base : ChainRole::Delta;
      e.shard = j.at("shard").get<std::string>();
      e.element_type = parse_dtype(j.at("dtype").get<std::string>());
      e.original_length = j.at("original_length").get<std::uint64_t>();
      e.stream = j.at("stream").get<std::string>();
      e.crc32 = j.at("crc32").get<std::uint32_t>();
      if (m.entries.empty()) m.chain_id = e.chain_id;
      m.entries.push_back(std::move(e));
    } catch (const json::exception& ex) {
      throw Error(ErrorKind::CorruptStream, "manifest line " + std::to_string(number) + ": " + ex.what());
    }
  }
  return m;
}

std::vector<ShardSpec> read_shard_list(const fs::path& jsonl) {
  const Bytes raw = read_file(jsonl);
  std::istringstream lines{std::string(raw.begin(), raw.end())};
  std::vector<ShardSpec> specs;
  std::string line;
  std::size_t number = 0;
  while (std::getline(lines, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      ShardSpec spec;
      spec.name = j.at("name").get<std::string>();
      spec.element_type = parse_dtype(j.at("dtype").get<std::string>());
      if (j.contains("shape")) spec.shape = j.at("shape").get<std::vector<std::uint64_t>>();
      spec.path = j.at("path").get<std::string>();
      if (spec.path.is_relative()) spec.path = jsonl.parent_path() / spec.path;
      specs.push_back(std::move(spec));
    } catch (const json::exception& ex) {
      throw Error(ErrorKind::Input, jsonl.string() + " line " + std::to_string(number) + ": " + ex.what());
    }
  }
  return specs;
}

std::vector<ShardInput> load_shards(const std::vector<ShardSpec>& specs) {
  std::vector<ShardInput> shards;
  for (const auto& spec : specs) {
    ShardInput shard{spec.name, TensorBuffer{read_file(spec.path), spec.element_type}};
    shard.data.check_aligned();
    if (!spec.shape.empty()) {
      std::uint64_t elements = 1;
      for (const auto d : spec.shape) elements *= d;
      if (elements != shard.data.element_count()) {
        throw Error(ErrorKind::Shape, "shard " + spec.name + " holds " + std::to_string(shard.data.element_count()) +
                                          " elements but its shape says " + std::to_string(elements));
      }
    }
    shards.push_back(std::move(shard));
  }
  return shards;
}

CheckpointChain::CheckpointChain(fs::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create chain directory " + dir_.string() + ": " + ec.message());
  reload();
}

void CheckpointChain::reload() {
  const fs::path path = dir_ / kManifestName;
  if (fs::exists(path)) {
    const Bytes raw = read_file(path);
    manifest_ = DeltaManifest::parse_jsonl(std::string_view(reinterpret_cast<const char*>(raw.data()), raw.size()));
    manifest_.validate();
  } else {
    manifest_ = DeltaManifest{};
  }
}

PendingStep CheckpointChain::stage_step(const std::vector<ShardInput>& shards, const ChainOptions& options,
                                        std::optional<std::uint64_t> step) {
  auto lock = std::make_unique<ChainLock>(dir_, true);
  reload();

  const std::uint64_t next = manifest_.step_count();
  if (step && *step < next) throw Error(ErrorKind::Input, "step " + std::to_string(*step) + " already exists");
  if (step && *step > next) {
    throw Error(ErrorKind::Input, "step " + std::to_string(*step) + " skips ahead; the next step is " +
                                      std::to_string(next));
  }
  if (shards.empty()) throw Error(ErrorKind::Input, "a step needs at least one shard");
  std::set<std::string> names;
  for (const auto& s : shards) {
    s.data.check_aligned();
    if (!names.insert(s.name).second) throw Error(ErrorKind::Input, "duplicate shard name " + s.name);
  }
  if (manifest_.chain_id.empty()) manifest_.chain_id = new_chain_id();

  std::vector<ShardInput> previous;
  if (next > 0) {
    const auto prior = manifest_.step_entries(next - 1);
    if (prior.size() != shards.size()) {
      throw Error(ErrorKind::Shape, "step has " + std::to_string(shards.size()) + " shards, the chain has " +
                                        std::to_string(prior.size()));
    }
    for (const auto& s : shards) {
      const auto it = std::find_if(prior.begin(), prior.end(), [&](const auto& e) { return e.shard == s.name; });
      if (it == prior.end()) throw Error(ErrorKind::Shape, "shard " + s.name + " is not in the chain");
      if (it->element_type != s.data.element_type || it->original_length != s.data.size()) {
        throw Error(ErrorKind::Shape, "shard " + s.name + " changed shape: " + std::to_string(it->original_length) +
                                          " bytes " + std::string(name(it->element_type)) + " -> " +
                                          std::to_string(s.data.size()) + " bytes " +
                                          std::string(name(s.data.element_type)));
      }
    }
    previous = restore(next - 1, options.worker_count);
  }

  PlmcOptions plmc;
  plmc.byte_group = options.byte_group;
  plmc.block_size = options.block_size;
  plmc.buffer_size = options.buffer_size;
  plmc.segment_count = options.segment_count;
  plmc.worker_count = options.worker_count;
  plmc.delta_applied = next > 0;

  DeltaManifest updated = manifest_;
  for (const auto& s : shards) {
    TensorBuffer payload = s.data;
    if (next > 0) {
      const auto it = std::find_if(previous.begin(), previous.end(), [&](const auto& p) { return p.name == s.name; });
      xor_into(payload.bytes, it->data.bytes);
    }
    const Bytes stream = plmc_compress(payload, plmc);
    ManifestEntry entry;
    entry.chain_id = manifest_.chain_id;
    entry.step = next;
    entry.role = next == 0 ? ChainRole::Base : ChainRole::Delta;
    entry.shard = s.name;
    entry.element_type = s.data.element_type;
    entry.original_length = s.data.size();
    entry.stream = stream_name(next, s.name);
    entry.crc32 = read_header(stream).crc32;
    write_file_atomic(dir_ / entry.stream, stream);
    updated.entries.push_back(std::move(entry));
  }

  PendingStep pending;
  pending.lock_ = std::move(lock);
  pending.manifest_path_ = dir_ / kManifestName;
  const std::string text = updated.to_jsonl();
  pending.manifest_tmp_ =
      write_temp_file(pending.manifest_path_, std::span(reinterpret_cast<const Byte*>(text.data()), text.size()));
  pending.step_ = next;
  return pending;
}

void CheckpointChain::commit(PendingStep pending) {
  std::error_code ec;
  fs::rename(pending.manifest_tmp_, pending.manifest_path_, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot publish manifest: " + ec.message());
  reload();
}

std::uint64_t CheckpointChain::add_step(const std::vector<ShardInput>& shards, const ChainOptions& options,
                                        std::optional<std::uint64_t> step) {
  PendingStep pending = stage_step(shards, options, step);
  const std::uint64_t added = pending.step();
  commit(std::move(pending));
  return added;
}

namespace {

TensorBuffer load_entry(const fs::path& dir, const ManifestEntry& e, unsigned workers) {
  const Bytes stream = read_file(dir / e.stream);
  const CodeStreamHeader header = read_header(stream);
  if (header.crc32 != e.crc32 || header.original_length != e.original_length ||
      header.element_type != e.element_type) {
    throw Error(ErrorKind::Integrity, "stream " + e.stream + " does not match its manifest entry");
  }
  return plmc_decompress(stream, workers);
}

// Calls visit(step, shards) for steps 0..last, applying one delta per step.
template <class Visit>
void replay(const fs::path& dir, const DeltaManifest& manifest, std::uint64_t last, unsigned workers, Visit&& visit) {
  if (last >= manifest.step_count()) {
    throw Error(ErrorKind::Missing, "step " + std::to_string(last) + " is not in the chain (" +
                                        std::to_string(manifest.step_count()) + " steps)");
  }
  std::vector<ShardInput> shards;
  for (const auto& e : manifest.step_entries(0)) shards.push_back({e.shard, load_entry(dir, e, workers)});
  visit(std::uint64_t{0}, shards);
  for (std::uint64_t s = 1; s <= last; ++s) {
    for (const auto& e : manifest.step_entries(s)) {
      const auto it = std::find_if(shards.begin(), shards.end(), [&](const auto& x) { return x.name == e.shard; });
      const TensorBuffer delta = load_entry(dir, e, workers);
      xor_into(it->data.bytes, delta.bytes);
    }
    visit(s, shards);
  }
}

}  // namespace

std::vector<ShardInput> CheckpointChain::restore(std::uint64_t step, unsigned workers) const {
  std::vector<ShardInput> out;
  replay(dir_, manifest_, step, workers, [&](std::uint64_t s, const std::vector<ShardInput>& shards) {
    if (s == step) out = shards;
  });
  return out;
}

std::vector<std::vector<ShardInput>> CheckpointChain::restore_all(unsigned workers) const {
  std::vector<std::vector<ShardInput>> steps;
  if (manifest_.step_count() == 0) return steps;
  replay(dir_, manifest_, manifest_.step_count() - 1, workers,
         [&](std::uint64_t, const std::vector<ShardInput>& shards) { steps.push_back(shards); });
  return steps;
}

}  // namespace lmc

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lmc/entropy.hpp"
#include "lmc/plmc.hpp"
#include "lmc/types.hpp"

namespace lmc {

enum class ChainRole { Base, Delta };

/// One stored shard of one step. Step 0 holds the raw shard (base); step
/// N > 0 holds the XOR delta against step N-1.
struct ManifestEntry {
  std::string chain_id;
  std::uint64_t step = 0;
  ChainRole role = ChainRole::Base;
  std::string shard;
  ElementType element_type = ElementType::Raw8;
  std::uint64_t original_length = 0;
  std::string stream;  // file name relative to the chain directory
  std::uint32_t crc32 = 0;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

/// JSON-lines record of a checkpoint chain, one entry per line.
struct DeltaManifest {
  std::string chain_id;
  std::vector<ManifestEntry> entries;

  /// Number of steps stored (0 for an empty chain).
  std::uint64_t step_count() const noexcept;
  std::vector<ManifestEntry> step_entries(std::uint64_t step) const;

  /// Checks the structural invariants: a single base per shard at step 0,
  /// consecutive steps, the same shard set and lengths at every step.
  void validate() const;

  std::string to_jsonl() const;
  static DeltaManifest parse_jsonl(std::string_view text);
};

struct ShardInput {
  std::string name;
  TensorBuffer data;
};

/// A line of a multi-shard input manifest:
/// {"name": ..., "dtype": "bf16", "shape": [..], "path": ...}.
struct ShardSpec {
  std::string name;
  ElementType element_type = ElementType::Raw8;
  std::vector<std::uint64_t> shape;
  std::filesystem::path path;
};

/// Relative paths are resolved against the manifest's directory.
std::vector<ShardSpec> read_shard_list(const std::filesystem::path& jsonl);

/// Loads the files of a shard list, checking each against its shape.
std::vector<ShardInput> load_shards(const std::vector<ShardSpec>& specs);

struct ChainOptions {
  bool byte_group = true;
  std::size_t block_size = kDefaultBlockSize;
  std::size_t buffer_size = kDefaultBufferSize;
  std::uint32_t segment_count = 1;
  unsigned worker_count = 1;
};

class ChainLock;

/// A step whose streams and manifest are written to disk but not yet
/// published. Dropping it without commit() leaves the manifest untouched.
class PendingStep {
 public:
  PendingStep(PendingStep&&) noexcept;
  PendingStep& operator=(PendingStep&&) noexcept;
  ~PendingStep();

  std::uint64_t step() const noexcept { return step_; }

 private:
  friend class CheckpointChain;
  PendingStep() = default;

  std::unique_ptr<ChainLock> lock_;
  std::filesystem::path manifest_tmp_;
  std::filesystem::path manifest_path_;
  std::uint64_t step_ = 0;
};

/// A directory holding a manifest.jsonl and one CodeStream per shard per
/// step. Writers are serialized through an advisory lock file.
class CheckpointChain {
 public:
  static constexpr std::string_view kManifestName = "manifest.jsonl";
  static constexpr std::string_view kLockName = ".lock";

  /// Opens an existing chain directory or creates an empty one.
  explicit CheckpointChain(std::filesystem::path dir);

  const std::filesystem::path& dir() const noexcept { return dir_; }
  const DeltaManifest& manifest() const noexcept { return manifest_; }

  /// Appends the next step. `step`, when given, must equal the next index;
  /// an existing index is rejected as a duplicate.
  std::uint64_t add_step(const std::vector<ShardInput>& shards, const ChainOptions& options = {},
                         std::optional<std::uint64_t> step = std::nullopt);

  /// First half of add_step: writes the step's streams and a temporary
  /// manifest, holding the writer lock until commit or destruction.
  PendingStep stage_step(const std::vector<ShardInput>& shards, const ChainOptions& options = {},
                         std::optional<std::uint64_t> step = std::nullopt);
  void commit(PendingStep pending);

  /// Reconstructs every shard of `step`: base XOR deltas 1..step.
  std::vector<ShardInput> restore(std::uint64_t step, unsigned workers = 1) const;

  /// Every step in order, reconstructed incrementally.
  std::vector<std::vector<ShardInput>> restore_all(unsigned workers = 1) const;

  void reload();

 private:
  std::filesystem::path dir_;
  DeltaManifest manifest_;
};

}  // namespace lmc

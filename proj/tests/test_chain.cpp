#include <filesystem>
#include <fstream>
#include <functional>

#include "doctest.h"
#include "lmc/chain.hpp"
#include "lmc/error.hpp"
#include "lmc/io.hpp"
#include "lmc/stream.hpp"
#include "lmc/synthetic.hpp"
#include "oracles.hpp"

using namespace lmc;
namespace fs = std::filesystem;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::Io;
}

std::vector<std::vector<ShardInput>> two_shard_trajectory(std::size_t steps) {
  TrajectoryConfig wa;
  wa.element_count = 30'000;
  TrajectoryConfig wb;
  wb.element_count = 5'000;
  wb.element_type = ElementType::FP32;
  wb.seed = 9;
  const auto a = generate_trajectory(wa, steps);
  const auto b = generate_trajectory(wb, steps);
  std::vector<std::vector<ShardInput>> out;
  for (std::size_t k = 0; k < steps; ++k) out.push_back({{"layer0.weight", a[k]}, {"layer1/bias", b[k]}});
  return out;
}

bool same(const std::vector<ShardInput>& x, const std::vector<ShardInput>& y) {
  if (x.size() != y.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].name != y[i].name || !(x[i].data == y[i].data)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("chain of six steps restores every step exactly") {
  testing::TempDir dir;
  const auto steps = two_shard_trajectory(6);
  {
    CheckpointChain chain(dir.path());
    for (std::size_t k = 0; k < steps.size(); ++k) CHECK(chain.add_step(steps[k]) == k);
  }
  CheckpointChain reopened(dir.path());
  CHECK(reopened.manifest().step_count() == 6);
  for (std::size_t k = 0; k < steps.size(); ++k) CHECK(same(reopened.restore(k, 2), steps[k]));
  const auto all = reopened.restore_all();
  REQUIRE(all.size() == 6);
  for (std::size_t k = 0; k < steps.size(); ++k) CHECK(same(all[k], steps[k]));

  const auto& entries = reopened.manifest().entries;
  CHECK(entries.size() == 12);
  for (const auto& e : entries) {
    CHECK((e.role == ChainRole::Base) == (e.step == 0));
    CHECK(fs::exists(dir.path() / e.stream));
    const CodeStreamHeader h = read_header(read_file(dir.path() / e.stream));
    CHECK(h.crc32 == e.crc32);
    CHECK(h.byte_grouped());
    CHECK(h.delta_applied() == (e.step > 0));
  }
}

TEST_CASE("manifest JSON lines round trip") {
  DeltaManifest m{"c1",
                  {{"c1", 0, ChainRole::Base, "w", ElementType::BF16, 8, "step-000000.w.lmc", 0xDEADBEEF},
                   {"c1", 1, ChainRole::Delta, "w", ElementType::BF16, 8, "step-000001.w.lmc", 7}}};
  CHECK_NOTHROW(m.validate());
  const DeltaManifest back = DeltaManifest::parse_jsonl(m.to_jsonl());
  CHECK(back.chain_id == "c1");
  CHECK(back.entries == m.entries);
  CHECK(kind_of([] { DeltaManifest::parse_jsonl("{not json"); }) == ErrorKind::CorruptStream);

  DeltaManifest gap = m;
  gap.entries[1].step = 2;
  CHECK_THROWS_AS(gap.validate(), Error);
  DeltaManifest two_bases = m;
  two_bases.entries[1].role = ChainRole::Base;
  CHECK_THROWS_AS(two_bases.validate(), Error);
}

TEST_CASE("shape changes and duplicate steps are rejected") {
  testing::TempDir dir;
  const auto steps = two_shard_trajectory(3);
  CheckpointChain chain(dir.path());
  chain.add_step(steps[0]);
  chain.add_step(steps[1], {}, 1);
  CHECK(kind_of([&] { chain.add_step(steps[2], {}, 1); }) == ErrorKind::Input);
  CHECK(kind_of([&] { chain.add_step(steps[2], {}, 5); }) == ErrorKind::Input);

  auto shorter = steps[2];
  shorter[0].data.bytes.resize(shorter[0].data.bytes.size() - 2);
  CHECK(kind_of([&] { chain.add_step(shorter); }) == ErrorKind::Shape);
  auto renamed = steps[2];
  renamed[1].name = "other";
  CHECK(kind_of([&] { chain.add_step(renamed); }) == ErrorKind::Shape);
  CHECK(chain.manifest().step_count() == 2);
  CHECK(chain.add_step(steps[2], {}, 2) == 2);
  CHECK(same(chain.restore(2), steps[2]));
}

TEST_CASE("an uncommitted step leaves the manifest unchanged") {
  testing::TempDir dir;
  const auto steps = two_shard_trajectory(3);
  CheckpointChain chain(dir.path());
  chain.add_step(steps[0]);
  chain.add_step(steps[1]);
  const std::string before = std::string(
      reinterpret_cast<const char*>(read_file(dir.path() / "manifest.jsonl").data()),
      fs::file_size(dir.path() / "manifest.jsonl"));
  {
    PendingStep pending = chain.stage_step(steps[2]);
    CHECK(pending.step() == 2);
  }
  const Bytes after = read_file(dir.path() / "manifest.jsonl");
  CHECK(std::string(after.begin(), after.end()) == before);
  CheckpointChain reopened(dir.path());
  CHECK(reopened.manifest().step_count() == 2);
  CHECK(same(reopened.restore(1), steps[1]));
  CHECK(reopened.add_step(steps[2]) == 2);
  CHECK(same(reopened.restore(2), steps[2]));
}

TEST_CASE("staged then committed step is published") {
  testing::TempDir dir;
  const auto steps = two_shard_trajectory(2);
  CheckpointChain chain(dir.path());
  chain.add_step(steps[0]);
  chain.commit(chain.stage_step(steps[1]));
  CHECK(chain.manifest().step_count() == 2);
  CHECK(same(CheckpointChain(dir.path()).restore(1), steps[1]));
}

TEST_CASE("missing and damaged stream files fail loudly") {
  testing::TempDir dir;
  const auto steps = two_shard_trajectory(4);
  CheckpointChain chain(dir.path());
  for (const auto& s : steps) chain.add_step(s);
  const auto victim = chain.manifest().step_entries(2).front();
  const Bytes saved = read_file(dir.path() / victim.stream);

  fs::remove(dir.path() / victim.stream);
  CHECK(same(chain.restore(1), steps[1]));
  CHECK(kind_of([&] { chain.restore(2); }) == ErrorKind::Missing);
  CHECK(kind_of([&] { chain.restore(3); }) == ErrorKind::Missing);
  CHECK(kind_of([&] { chain.restore(9); }) == ErrorKind::Missing);

  Bytes damaged = saved;
  damaged[24] ^= 0xFF;
  write_file_atomic(dir.path() / victim.stream, damaged);
  CHECK(kind_of([&] { chain.restore(3); }) == ErrorKind::Integrity);

  write_file_atomic(dir.path() / victim.stream, saved);
  CHECK(same(chain.restore(3), steps[3]));
}

TEST_CASE("shard lists load files against their shapes") {
  testing::TempDir dir;
  const Bytes w = random_bytes(24, 1);
  write_file_atomic(dir / "w.bin", w);
  {
    std::ofstream list(dir / "shards.jsonl");
    list << R"({"name": "w", "dtype": "bf16", "shape": [3, 4], "path": "w.bin"})" << "\n";
  }
  const auto specs = read_shard_list(dir / "shards.jsonl");
  REQUIRE(specs.size() == 1);
  CHECK(specs[0].element_type == ElementType::BF16);
  const auto shards = load_shards(specs);
  CHECK(shards[0].data.bytes == w);

  {
    std::ofstream list(dir / "bad.jsonl");
    list << R"({"name": "w", "dtype": "fp32", "shape": [3, 4], "path": "w.bin"})" << "\n";
  }
  CHECK(kind_of([&] { load_shards(read_shard_list(dir / "bad.jsonl")); }) == ErrorKind::Shape);
}

#include <filesystem>
#include <fstream>
#include <string>

#include "asp/checkpoint.hpp"
#include "asp/errors.hpp"
#include "doctest.h"

using namespace asp;

namespace {

RunConfig TinyRun() {
  RunConfig c;
  c.seed = 4;
  c.grid.max_objects = 2;
  c.game.max_objects = 2;
  c.game.alice_turn_steps = 8;
  c.game.bob_max_steps_per_object = 10;
  c.game.max_goals_per_episode = 2;
  c.network.object_embed_widths = {8};
  c.network.trunk_widths = {8};
  c.ppo.minibatch_size = 64;
  c.pool.snapshot_interval = 3;
  c.training.episodes_per_round = 4;
  return c;
}

Checkpoint SelfPlayCheckpoint(int rounds) {
  const RunConfig c = TinyRun();
  SelfPlayTrainer t(c.ToTrainerConfig());
  for (int r = 0; r < rounds; ++r) t.Step();
  return Checkpoint{CheckpointKind::kSelfPlay, c, t.state(), std::nullopt};
}

Checkpoint BaselineCheckpoint(int rounds) {
  RunConfig c = TinyRun();
  c.baseline.variant = BaselineVariant::kFull;
  BaselineTrainer t(c.ToBaselineConfig());
  for (int r = 0; r < rounds; ++r) t.Step();
  return Checkpoint{CheckpointKind::kBaseline, c, std::nullopt, t.state()};
}

std::filesystem::path FreshDir(const char* name) {
  const auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("self-play checkpoints round-trip bit for bit") {
  const Checkpoint c = SelfPlayCheckpoint(3);
  const std::string bytes = EncodeCheckpoint(c);
  const Checkpoint d = DecodeCheckpoint(bytes);
  CHECK(d.kind == CheckpointKind::kSelfPlay);
  CHECK(d.config == c.config);
  REQUIRE(d.selfplay.has_value());
  CHECK(d.selfplay->alice == c.selfplay->alice);
  CHECK(d.selfplay->bob == c.selfplay->bob);
  CHECK(d.selfplay->bob_adam == c.selfplay->bob_adam);
  CHECK(d.selfplay->alice_pool.size() == c.selfplay->alice_pool.size());
  CHECK(d.round() == 3);
  CHECK(EncodeCheckpoint(d) == bytes);
  CHECK(d.alice() == c.selfplay->alice);
  CHECK(d.solver() == c.selfplay->bob);
}

TEST_CASE("a restored self-play state continues exactly") {
  const Checkpoint c = SelfPlayCheckpoint(2);
  const Checkpoint d = DecodeCheckpoint(EncodeCheckpoint(c));
  SelfPlayTrainer a(c.config.ToTrainerConfig(), *c.selfplay);
  SelfPlayTrainer b(d.config.ToTrainerConfig(), *d.selfplay);
  a.Step();
  b.Step();
  CHECK(a.state().bob == b.state().bob);
  CHECK(a.state().alice == b.state().alice);
}

TEST_CASE("baseline checkpoints round-trip") {
  const Checkpoint c = BaselineCheckpoint(2);
  const std::string bytes = EncodeCheckpoint(c);
  const Checkpoint d = DecodeCheckpoint(bytes);
  REQUIRE(d.baseline.has_value());
  CHECK(d.baseline->policy == c.baseline->policy);
  CHECK(d.baseline->adr == c.baseline->adr);
  CHECK(d.solver() == c.baseline->policy);
  CHECK_THROWS_AS(d.alice(), ValidationError);
  CHECK(EncodeCheckpoint(d) == bytes);
}

TEST_CASE("corruption is detected") {
  const std::string bytes = EncodeCheckpoint(SelfPlayCheckpoint(1));
  CHECK_THROWS_AS(DecodeCheckpoint(""), FormatError);
  CHECK_THROWS_AS(DecodeCheckpoint("not a checkpoint at all"), FormatError);
  CHECK_THROWS_AS(DecodeCheckpoint(bytes.substr(0, bytes.size() / 2)), FormatError);
  for (std::size_t pos : {std::size_t{8}, std::size_t{40}, bytes.size() / 2,
                          bytes.size() - 1}) {
    std::string bad = bytes;
    bad[pos] = static_cast<char>(bad[pos] ^ 0x10);
    CHECK_THROWS_AS(DecodeCheckpoint(bad), FormatError);
  }
  Checkpoint mismatched = SelfPlayCheckpoint(0);
  mismatched.kind = CheckpointKind::kBaseline;
  CHECK_THROWS_AS(EncodeCheckpoint(mismatched), ValidationError);
}

TEST_CASE("files, manifest and latest lookup") {
  const auto dir = FreshDir("asp_test_ckpt");
  CHECK_FALSE(LatestCheckpoint(dir).has_value());
  const Checkpoint c1 = SelfPlayCheckpoint(1);
  const Checkpoint c2 = SelfPlayCheckpoint(2);
  WriteCheckpoint(dir, c2);
  const CheckpointFiles f1 = WriteCheckpoint(dir, c1);
  CHECK(f1.data.filename() == "ckpt-00000001.bin");
  REQUIRE(LatestCheckpoint(dir).has_value());
  CHECK(LatestCheckpoint(dir)->filename() == "ckpt-00000002.bin");
  CHECK(ReadCheckpoint(f1.data).selfplay->bob == c1.selfplay->bob);

  std::ifstream in(f1.manifest);
  const std::string manifest((std::istreambuf_iterator<char>(in)), {});
  CHECK(manifest.find("kind selfplay\n") != std::string::npos);
  CHECK(manifest.find("step 1\n") != std::string::npos);
  CHECK(manifest.find("seed 4\n") != std::string::npos);
  CHECK(std::filesystem::exists(f1.data));
  CHECK_FALSE(std::filesystem::exists(f1.data.string() + ".tmp"));

  // Same run twice gives identical files.
  const auto other = FreshDir("asp_test_ckpt_b");
  const CheckpointFiles g1 = WriteCheckpoint(other, SelfPlayCheckpoint(1));
  std::ifstream a(f1.data, std::ios::binary), b(g1.data, std::ios::binary);
  CHECK(std::string(std::istreambuf_iterator<char>(a), {}) ==
        std::string(std::istreambuf_iterator<char>(b), {}));
  std::filesystem::remove_all(dir);
  std::filesystem::remove_all(other);
}

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "asp/config.hpp"
#include "asp/curricula.hpp"
#include "asp/trainer.hpp"

namespace asp {

enum class CheckpointKind : std::uint8_t { kSelfPlay = 1, kBaseline = 2 };
std::string_view ToString(CheckpointKind kind);

// Training state plus the run configuration it belongs to. Exactly one of
// `selfplay` and `baseline` is set, matching `kind`.
struct Checkpoint {
  CheckpointKind kind = CheckpointKind::kSelfPlay;
  RunConfig config;
  std::optional<TrainingState> selfplay;
  std::optional<BaselineState> baseline;

  std::uint64_t round() const;
  // The goal-conditioned policy: Bob, or the baseline policy.
  const ParamVector& solver() const;
  // Throws ValidationError for a baseline checkpoint.
  const ParamVector& alice() const;
};

// Versioned little-endian container ending in an FNV-1a checksum. Doubles are
// stored bit for bit.
std::string EncodeCheckpoint(const Checkpoint& checkpoint);
// Throws FormatError on a bad magic, version, checksum or truncation.
Checkpoint DecodeCheckpoint(std::string_view bytes);

struct CheckpointFiles {
  std::filesystem::path data;
  std::filesystem::path manifest;
};

// Writes <dir>/ckpt-<round>.bin and its text manifest (kind, step, seed,
// config hash, checksum). Files are written to a temporary name and renamed.
CheckpointFiles WriteCheckpoint(const std::filesystem::path& dir,
                                const Checkpoint& checkpoint);
Checkpoint ReadCheckpoint(const std::filesystem::path& path);

// Highest-round checkpoint in `dir`, if any.
std::optional<std::filesystem::path> LatestCheckpoint(
    const std::filesystem::path& dir);

}  // namespace asp

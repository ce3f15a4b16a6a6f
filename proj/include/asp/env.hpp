#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "asp/random.hpp"

namespace asp {

inline constexpr int kNumOrientations = 4;  // quarter turns: 0, 90, 180, 270

// Axis-aligned block of cells [x0, x0 + width) x [y0, y0 + height).
struct CellRect {
  int x0 = 0;
  int y0 = 0;
  int width = 5;
  int height = 5;

  bool Contains(int x, int y) const {
    return x >= x0 && x < x0 + width && y >= y0 && y < y0 + height;
  }
  int Area() const { return width * height; }
  bool operator==(const CellRect&) const = default;
};

struct GridConfig {
  int width = 5;
  int height = 5;
  double cell_size = 0.05;  // meters
  int max_objects = 2;
  CellRect placement_area{0, 0, 5, 5};
  int max_stack_height = 3;

  // Throws ConfigError when the invariants do not hold.
  void Validate() const;
  bool InBounds(int x, int y) const {
    return x >= 0 && x < width && y >= 0 && y < height;
  }
  bool operator==(const GridConfig&) const = default;
};

enum class Move : std::uint8_t { kNorth, kEast, kSouth, kWest, kStay };
enum class VerticalGrip : std::uint8_t { kRaise, kLower, kToggleGrip, kNone };
enum class Rotate : std::uint8_t { kCw, kCcw, kNone };

inline constexpr int kNumActionFactors = 3;
inline constexpr std::array<int, kNumActionFactors> kActionFactorSizes = {5, 4,
                                                                          3};
inline constexpr int kNumActions = 5 * 4 * 3;

// Factored discrete action. Every combination is a legal input; effects that
// cannot apply in the current state are no-ops.
struct Action {
  Move move = Move::kStay;
  VerticalGrip grip = VerticalGrip::kNone;
  Rotate rotate = Rotate::kNone;

  std::array<int, kNumActionFactors> FactorIndices() const {
    return {static_cast<int>(move), static_cast<int>(grip),
            static_cast<int>(rotate)};
  }
  // Throws ValidationError for an index outside its factor's range.
  static Action FromFactorIndices(const std::array<int, kNumActionFactors>& idx);
  // Flat index in [0, 60), move-major.
  int Index() const;
  static Action FromIndex(int index);

  bool operator==(const Action&) const = default;
};

std::string ToString(const Action& action);

struct ObjectState {
  int x = 0;
  int y = 0;
  int level = 0;        // 0 on the table; a held object carries the gripper z
  int orientation = 0;  // quarter turns in [0, 4)
  bool operator==(const ObjectState&) const = default;
};

struct GripperState {
  int x = 0;
  int y = 0;
  int z = 1;  // 0 lowered, 1 raised
  std::optional<int> holding;
  bool operator==(const GripperState&) const = default;
};

struct WorldState {
  GripperState gripper;
  std::vector<ObjectState> objects;
  int step_count = 0;

  int NumObjects() const { return static_cast<int>(objects.size()); }
  bool IsHeld(int object) const {
    return gripper.holding && *gripper.holding == object;
  }
  bool operator==(const WorldState&) const = default;
};

// Throws ValidationError describing the first violated invariant.
void ValidateState(const GridConfig& config, const WorldState& state);

// Number of resting (non-held) objects stacked at a cell.
int StackHeight(const WorldState& state, int x, int y);
// Index of the highest resting object at a cell, if any.
std::optional<int> TopObjectAt(const WorldState& state, int x, int y);

// Objects on distinct uniformly drawn placement cells at level 0 with uniform
// orientation; gripper raised and empty at a uniform grid cell.
WorldState SampleInitialState(const GridConfig& config, int n_objects, Rng& rng);

// Deterministic transition. Order within a step: move, vertical/grip, rotate.
WorldState Step(const GridConfig& config, const WorldState& state,
                const Action& action);

// Canonical versioned text form, e.g.
//   ws1 step=3 grip=2,1,0,-1 obj=1,2,0,3;4,4,0,0
std::string SerializeState(const WorldState& state);
// Throws FormatError on malformed input.
WorldState ParseState(std::string_view text);

// Single-owner resettable environment wrapping the pure functions above.
class GridTableEnv {
 public:
  explicit GridTableEnv(GridConfig config);

  const WorldState& Reset(std::uint64_t seed, int n_objects);
  // Throws ValidationError when `state` breaks an invariant.
  const WorldState& ResetTo(const WorldState& state);
  const WorldState& Step(const Action& action);

  const WorldState& state() const { return state_; }
  const GridConfig& config() const { return config_; }

 private:
  GridConfig config_;
  WorldState state_;
};

}  // namespace asp

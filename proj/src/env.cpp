#include "asp/env.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <sstream>

#include "asp/errors.hpp"

namespace asp {

namespace {

constexpr std::string_view kStateVersion = "ws1";

std::string Where(int object) { return "object " + std::to_string(object); }

}  // namespace

void GridConfig::Validate() const {
  if (width < 3 || height < 3) {
    throw ConfigError("grid width and height must be >= 3");
  }
  if (!(cell_size > 0.0)) throw ConfigError("cell_size must be positive");
  if (max_objects < 1) throw ConfigError("max_objects must be >= 1");
  if (max_stack_height < 1) throw ConfigError("max_stack_height must be >= 1");
  const CellRect& p = placement_area;
  if (p.width < 1 || p.height < 1 || p.x0 < 0 || p.y0 < 0 ||
      p.x0 + p.width > width || p.y0 + p.height > height) {
    throw ConfigError("placement_area must be a nonempty subset of the grid");
  }
}

Action Action::FromFactorIndices(
    const std::array<int, kNumActionFactors>& idx) {
  for (int f = 0; f < kNumActionFactors; ++f) {
    if (idx[f] < 0 || idx[f] >= kActionFactorSizes[f]) {
      throw ValidationError("action factor " + std::to_string(f) +
                            " index out of range: " + std::to_string(idx[f]));
    }
  }
  return Action{static_cast<Move>(idx[0]), static_cast<VerticalGrip>(idx[1]),
                static_cast<Rotate>(idx[2])};
}

int Action::Index() const {
  const auto idx = FactorIndices();
  return (idx[0] * kActionFactorSizes[1] + idx[1]) * kActionFactorSizes[2] +
         idx[2];
}

Action Action::FromIndex(int index) {
  if (index < 0 || index >= kNumActions) {
    throw ValidationError("action index out of range: " +
                          std::to_string(index));
  }
  const int r = index % kActionFactorSizes[2];
  const int g = (index / kActionFactorSizes[2]) % kActionFactorSizes[1];
  const int m = index / (kActionFactorSizes[2] * kActionFactorSizes[1]);
  return FromFactorIndices({m, g, r});
}

std::string ToString(const Action& action) {
  static constexpr const char* kMoves[] = {"north", "east", "south", "west",
                                           "stay"};
  static constexpr const char* kGrips[] = {"raise", "lower", "toggle", "none"};
  static constexpr const char* kRots[] = {"cw", "ccw", "none"};
  const auto idx = action.FactorIndices();
  return std::string(kMoves[idx[0]]) + "/" + kGrips[idx[1]] + "/" +
         kRots[idx[2]];
}

int StackHeight(const WorldState& state, int x, int y) {
  int height = 0;
  for (int i = 0; i < state.NumObjects(); ++i) {
    const ObjectState& o = state.objects[i];
    if (!state.IsHeld(i) && o.x == x && o.y == y) ++height;
  }
  return height;
}

std::optional<int> TopObjectAt(const WorldState& state, int x, int y) {
  std::optional<int> top;
  for (int i = 0; i < state.NumObjects(); ++i) {
    const ObjectState& o = state.objects[i];
    if (state.IsHeld(i) || o.x != x || o.y != y) continue;
    if (!top || o.level > state.objects[*top].level) top = i;
  }
  return top;
}

void ValidateState(const GridConfig& config, const WorldState& state) {
  const GripperState& g = state.gripper;
  if (!config.InBounds(g.x, g.y)) {
    throw ValidationError("gripper outside grid");
  }
  if (g.z != 0 && g.z != 1) throw ValidationError("gripper z must be 0 or 1");
  const int n = state.NumObjects();
  if (n < 1 || n > config.max_objects) {
    throw ValidationError("object count " + std::to_string(n) +
                          " outside [1, max_objects]");
  }
  if (g.holding && (*g.holding < 0 || *g.holding >= n)) {
    throw ValidationError("gripper holds a nonexistent object");
  }
  if (state.step_count < 0) throw ValidationError("negative step_count");
  for (int i = 0; i < n; ++i) {
    const ObjectState& o = state.objects[i];
    if (!config.InBounds(o.x, o.y)) {
      throw ValidationError(Where(i) + " outside grid");
    }
    if (o.orientation < 0 || o.orientation >= kNumOrientations) {
      throw ValidationError(Where(i) + " has invalid orientation");
    }
    if (state.IsHeld(i)) {
      if (o.x != g.x || o.y != g.y) {
        throw ValidationError(Where(i) + " is held away from the gripper");
      }
      if (o.level != g.z) {
        throw ValidationError(Where(i) + " is held at a level != gripper z");
      }
      continue;
    }
    if (o.level < 0 || o.level >= config.max_stack_height) {
      throw ValidationError(Where(i) + " has level outside the stack range");
    }
    bool supported = o.level == 0;
    for (int j = 0; j < n; ++j) {
      if (j == i || state.IsHeld(j)) continue;
      const ObjectState& p = state.objects[j];
      if (p.x != o.x || p.y != o.y) continue;
      if (p.level == o.level) {
        throw ValidationError(Where(i) + " shares a cell and level with " +
                              Where(j));
      }
      if (p.level == o.level - 1) supported = true;
    }
    if (!supported) {
      throw ValidationError(Where(i) + " floats with nothing beneath it");
    }
  }
}

WorldState SampleInitialState(const GridConfig& config, int n_objects,
                              Rng& rng) {
  config.Validate();
  if (n_objects < 1 || n_objects > config.max_objects) {
    throw ConfigError("n_objects must be in [1, max_objects]");
  }
  const CellRect& area = config.placement_area;
  if (n_objects > area.Area()) {
    throw ConfigError("n_objects exceeds the free placement cells");
  }
  std::vector<int> cells(area.Area());
  std::iota(cells.begin(), cells.end(), 0);
  WorldState state;
  state.objects.resize(n_objects);
  // Partial Fisher-Yates: the first n_objects entries are a uniform draw
  // without replacement.
  for (int i = 0; i < n_objects; ++i) {
    const int j = i + UniformInt(rng, area.Area() - i);
    std::swap(cells[i], cells[j]);
    ObjectState& o = state.objects[i];
    o.x = area.x0 + cells[i] % area.width;
    o.y = area.y0 + cells[i] / area.width;
    o.level = 0;
    o.orientation = UniformInt(rng, kNumOrientations);
  }
  const int cell = UniformInt(rng, config.width * config.height);
  state.gripper.x = cell % config.width;
  state.gripper.y = cell / config.width;
  state.gripper.z = 1;
  state.gripper.holding.reset();
  state.step_count = 0;
  return state;
}

WorldState Step(const GridConfig& config, const WorldState& state,
                const Action& action) {
  WorldState next = state;
  GripperState& g = next.gripper;

  int dx = 0, dy = 0;
  switch (action.move) {
    case Move::kNorth: dy = 1; break;
    case Move::kEast: dx = 1; break;
    case Move::kSouth: dy = -1; break;
    case Move::kWest: dx = -1; break;
    case Move::kStay: break;
  }
  g.x = std::clamp(g.x + dx, 0, config.width - 1);
  g.y = std::clamp(g.y + dy, 0, config.height - 1);
  if (g.holding) {
    next.objects[*g.holding].x = g.x;
    next.objects[*g.holding].y = g.y;
  }

  switch (action.grip) {
    case VerticalGrip::kRaise:
      g.z = 1;
      break;
    case VerticalGrip::kLower:
      g.z = 0;
      break;
    case VerticalGrip::kToggleGrip:
      if (g.holding) {
        const int height = StackHeight(next, g.x, g.y);
        if (height < config.max_stack_height) {
          next.objects[*g.holding].level = height;
          g.holding.reset();
        }
      } else if (g.z == 0) {
        if (auto top = TopObjectAt(next, g.x, g.y)) g.holding = *top;
      }
      break;
    case VerticalGrip::kNone:
      break;
  }
  if (g.holding) next.objects[*g.holding].level = g.z;

  if (g.holding && action.rotate != Rotate::kNone) {
    int& o = next.objects[*g.holding].orientation;
    o = (o + (action.rotate == Rotate::kCcw ? 1 : kNumOrientations - 1)) %
        kNumOrientations;
  }
  ++next.step_count;
  return next;
}

std::string SerializeState(const WorldState& state) {
  std::ostringstream out;
  const GripperState& g = state.gripper;
  out << kStateVersion << " step=" << state.step_count << " grip=" << g.x << ','
      << g.y << ',' << g.z << ',' << (g.holding ? *g.holding : -1) << " obj=";
  for (int i = 0; i < state.NumObjects(); ++i) {
    const ObjectState& o = state.objects[i];
    if (i > 0) out << ';';
    out << o.x << ',' << o.y << ',' << o.level << ',' << o.orientation;
  }
  return out.str();
}

namespace {

// Parses comma-separated integers; throws FormatError on anything else.
std::vector<int> ParseInts(std::string_view text) {
  std::vector<int> values;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find(',', pos), text.size());
    int v = 0;
    const auto field = text.substr(pos, end - pos);
    auto [ptr, ec] =
        std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
      throw FormatError("bad integer field '" + std::string(field) + "'");
    }
    values.push_back(v);
    pos = end + 1;
  }
  return values;
}

std::string_view ExpectField(std::string_view token, std::string_view key) {
  if (token.substr(0, key.size()) != key) {
    throw FormatError("expected field '" + std::string(key) + "'");
  }
  return token.substr(key.size());
}

}  // namespace

WorldState ParseState(std::string_view text) {
  std::vector<std::string_view> tokens;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t end = std::min(text.find(' ', pos), text.size());
    if (end > pos) tokens.push_back(text.substr(pos, end - pos));
    pos = end + 1;
  }
  if (tokens.size() != 4 || tokens[0] != kStateVersion) {
    throw FormatError("unsupported state record: " + std::string(text));
  }
  WorldState state;
  const auto step = ParseInts(ExpectField(tokens[1], "step="));
  if (step.size() != 1) throw FormatError("step field needs one value");
  state.step_count = step[0];
  const auto grip = ParseInts(ExpectField(tokens[2], "grip="));
  if (grip.size() != 4) throw FormatError("grip field needs four values");
  state.gripper = {grip[0], grip[1], grip[2], std::nullopt};
  if (grip[3] >= 0) state.gripper.holding = grip[3];
  std::string_view objs = ExpectField(tokens[3], "obj=");
  pos = 0;
  while (pos <= objs.size()) {
    const std::size_t end = std::min(objs.find(';', pos), objs.size());
    const auto v = ParseInts(objs.substr(pos, end - pos));
    if (v.size() != 4) throw FormatError("object field needs four values");
    state.objects.push_back({v[0], v[1], v[2], v[3]});
    pos = end + 1;
  }
  return state;
}

GridTableEnv::GridTableEnv(GridConfig config) : config_(std::move(config)) {
  config_.Validate();
}

const WorldState& GridTableEnv::Reset(std::uint64_t seed, int n_objects) {
  Rng rng = MakeRng(seed);
  state_ = SampleInitialState(config_, n_objects, rng);
  return state_;
}

const WorldState& GridTableEnv::ResetTo(const WorldState& state) {
  ValidateState(config_, state);
  state_ = state;
  return state_;
}

const WorldState& GridTableEnv::Step(const Action& action) {
  state_ = asp::Step(config_, state_, action);
  return state_;
}

}  // namespace asp

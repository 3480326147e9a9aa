#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "swarmgrid/rng.hpp"

namespace swarmgrid {

using AgentId = uint32_t;
using TypeId = uint32_t;
using GroupId = uint32_t;
using ActionIndex = uint32_t;

struct Position {
  int32_t x = 0;
  int32_t y = 0;
  bool operator==(const Position&) const = default;
};

/// Cell delta. In the egocentric frame (0, -1) is "forward".
struct Offset {
  int32_t dx = 0;
  int32_t dy = 0;
  bool operator==(const Offset&) const = default;
};

enum class Direction : uint8_t { North = 0, East = 1, South = 2, West = 3 };

inline Direction turn_left(Direction d) { return static_cast<Direction>((static_cast<int>(d) + 3) % 4); }
inline Direction turn_right(Direction d) { return static_cast<Direction>((static_cast<int>(d) + 1) % 4); }
const char* direction_name(Direction d);

struct AgentTypeSpec {
  std::string name;
  int32_t body_w = 1;
  int32_t body_h = 1;
  int32_t speed = 1;
  int32_t view_range = 3;
  int32_t attack_range = 1;
  double damage = 1.0;
  double max_hp = 10.0;
  double step_recover = 0.0;

  /// Throws Error(kInvalidConfig) naming the first violated bound.
  void validate() const;
  bool operator==(const AgentTypeSpec&) const = default;
};

struct Agent {
  AgentId id = 0;
  GroupId group = 0;
  Position pos;
  Direction dir = Direction::North;
  double hp = 0.0;
  ActionIndex last_action = 0;
  double last_reward = 0.0;
  bool operator==(const Agent&) const = default;
};

struct Group {
  std::string name;
  TypeId type = 0;
  bool operator==(const Group&) const = default;
};

struct Placement {
  Position pos;
  Direction dir = Direction::North;
};
struct ExplicitPositions {
  std::vector<Placement> placements;
};
struct RandomCount {
  uint32_t n = 0;
};
using SpawnRequest = std::variant<ExplicitPositions, RandomCount>;

/// Occupancy slot values. Anything else is the id of the occupying agent.
inline constexpr uint32_t kEmptyCell = std::numeric_limits<uint32_t>::max();
inline constexpr uint32_t kWallCell = std::numeric_limits<uint32_t>::max() - 1;
inline constexpr AgentId kMaxAgentId = kWallCell - 1;

/// The single mutable simulation state: map, walls, agent types, groups, the
/// agent registry and a dense width*height occupancy index.
///
/// Living agents are kept in ascending id order, which is the canonical
/// iteration order everywhere. Ids are never reused.
class World {
 public:
  World(int32_t width, int32_t height, uint64_t seed);

  int32_t width() const { return width_; }
  int32_t height() const { return height_; }
  uint64_t seed() const { return seed_; }
  uint64_t step_count() const { return step_count_; }

  bool in_bounds(int32_t x, int32_t y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
  uint32_t cell(int32_t x, int32_t y) const { return occupancy_[index(x, y)]; }
  bool is_wall(int32_t x, int32_t y) const { return cell(x, y) == kWallCell; }
  std::span<const uint32_t> occupancy() const { return occupancy_; }
  std::vector<Position> wall_cells() const;

  void set_walls(std::span<const Position> cells);
  TypeId register_agent_type(const AgentTypeSpec& spec);
  GroupId create_group(TypeId type, std::string name = {});
  std::vector<AgentId> spawn(GroupId group, const SpawnRequest& request);

  /// Ids of agents with any body cell in the inclusive rectangle, ascending.
  /// Coordinates are clamped; an inverted rectangle is empty.
  std::vector<AgentId> query_rect(int32_t x0, int32_t y0, int32_t x1, int32_t y1) const;

  std::span<const AgentTypeSpec> types() const { return types_; }
  std::span<const Group> groups() const { return groups_; }
  const AgentTypeSpec& type_of(GroupId g) const { return types_.at(groups_.at(g).type); }
  const AgentTypeSpec& type_of(const Agent& a) const { return types_[groups_[a.group].type]; }
  /// Group lookup by name; throws Error(kLookup).
  GroupId group_by_name(std::string_view name) const;

  std::span<const Agent> agents() const { return agents_; }
  size_t population() const { return agents_.size(); }
  std::span<const AgentId> members(GroupId g) const { return members_.at(g); }
  const Agent* find(AgentId id) const;
  /// Throws Error(kLookup) for dead or unknown ids.
  const Agent& agent(AgentId id) const;
  bool alive(AgentId id) const { return find(id) != nullptr; }
  AgentId next_id() const { return next_id_; }

  Rng& rng() { return rng_; }

  // Mutation hooks for the step engine and live-session commands.
  Agent& mutable_agent(AgentId id);
  /// Caller guarantees the destination body cells are free (or owned by id).
  void relocate(AgentId id, Position to);
  void remove_agents(std::span<const AgentId> ids);
  void advance_step() { ++step_count_; }

  /// First cell that blocks placing a body of the given size at pos, ignoring
  /// cells owned by `self`. Returns kEmptyCell when the placement fits;
  /// out-of-bounds reports as kWallCell.
  uint32_t blocker(Position pos, int32_t body_w, int32_t body_h, AgentId self = kEmptyCell) const;

  /// Occupancy rebuilt from scratch from walls and the registry.
  std::vector<uint32_t> rebuild_occupancy() const;

  bool operator==(const World&) const = default;

 private:
  size_t index(int32_t x, int32_t y) const { return static_cast<size_t>(y) * width_ + x; }
  void stamp(const Agent& a, uint32_t value);
  AgentId create_agent(GroupId group, Position pos, Direction dir);
  void reindex();

  int32_t width_;
  int32_t height_;
  uint64_t seed_;
  uint64_t step_count_ = 0;
  AgentId next_id_ = 0;
  std::vector<uint8_t> walls_;
  std::vector<uint32_t> occupancy_;
  std::vector<AgentTypeSpec> types_;
  std::vector<Group> groups_;
  std::vector<Agent> agents_;
  std::vector<std::vector<AgentId>> members_;
  // id -> index into agents_, or kEmptyCell when dead
  std::vector<uint32_t> slot_of_;
  Rng rng_;
};

}  // namespace swarmgrid

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "swarmgrid/world.hpp"

namespace swarmgrid {

enum class ActionKind : uint8_t { DoNothing, TurnLeft, TurnRight, Move, Attack };

struct Action {
  ActionKind kind = ActionKind::DoNothing;
  Offset offset;  // egocentric; zero unless Move/Attack
  bool operator==(const Action&) const = default;
};

inline constexpr ActionIndex kNoOp = 0;

/// Canonical action list for a type: DoNothing, TurnLeft, TurnRight, then Move
/// offsets over the (2*speed+1)^2 window in row-major order skipping the
/// centre, then Attack offsets over the attack window likewise.
std::vector<Action> action_space(const AgentTypeSpec& spec);
size_t action_count(const AgentTypeSpec& spec);

/// Egocentric offset to world frame. North is the identity; East, South and
/// West rotate 90, 180 and 270 degrees clockwise (y grows downward).
Offset rotate_offset(Offset offset, Direction dir);

enum class EventKind : uint8_t { Attack, Kill, Die, Collide };

struct Event {
  EventKind kind = EventKind::Attack;
  AgentId actor = 0;
  /// Attack/Kill: victim. Collide: blocking agent or kWallCell. Die: unused.
  uint32_t target = 0;
  bool operator==(const Event&) const = default;
};

using EventLog = std::vector<Event>;

const char* event_kind_name(EventKind k);

struct AgentAction {
  AgentId agent = 0;
  ActionIndex action = kNoOp;
};

struct StepOutcome {
  EventLog events;
  /// Agents removed this step, with their state at the moment of death.
  std::vector<Agent> fallen;
};

/// Advances the world one tick. Phases run in order: attack, turn, move,
/// recovery, death. Agents absent from `actions` do nothing.
///
/// Damage from the attack phase is committed before turning; an agent whose HP
/// drops to zero or below neither turns nor moves but keeps its cells until the
/// death phase. Movers are visited in a permutation drawn from the world RNG.
/// Throws Error(kInvalidAction) before mutating anything if an id is unknown,
/// repeated, or an action index is out of range.
StepOutcome step(World& world, std::span<const AgentAction> actions);

}  // namespace swarmgrid

#include "swarmgrid/engine.hpp"

#include <algorithm>
#include <string>

#include "swarmgrid/error.hpp"

namespace swarmgrid {

namespace {

void append_window(std::vector<Action>& out, ActionKind kind, int32_t range) {
  for (int32_t dy = -range; dy <= range; ++dy) {
    for (int32_t dx = -range; dx <= range; ++dx) {
      if (dx == 0 && dy == 0) continue;
      out.push_back({kind, {dx, dy}});
    }
  }
}

}  // namespace

std::vector<Action> action_space(const AgentTypeSpec& spec) {
  std::vector<Action> out;
  out.reserve(action_count(spec));
  out.push_back({ActionKind::DoNothing, {}});
  out.push_back({ActionKind::TurnLeft, {}});
  out.push_back({ActionKind::TurnRight, {}});
  append_window(out, ActionKind::Move, spec.speed);
  append_window(out, ActionKind::Attack, spec.attack_range);
  return out;
}

size_t action_count(const AgentTypeSpec& spec) {
  auto window = [](int64_t r) { return static_cast<size_t>((2 * r + 1) * (2 * r + 1) - 1); };
  return 3 + window(spec.speed) + window(spec.attack_range);
}

Offset rotate_offset(Offset o, Direction dir) {
  switch (dir) {
    case Direction::North: return o;
    case Direction::East: return {-o.dy, o.dx};
    case Direction::South: return {-o.dx, -o.dy};
    case Direction::West: return {o.dy, -o.dx};
  }
  return o;
}

const char* event_kind_name(EventKind k) {
  switch (k) {
    case EventKind::Attack: return "attack";
    case EventKind::Kill: return "kill";
    case EventKind::Die: return "die";
    case EventKind::Collide: return "collide";
  }
  return "?";
}

StepOutcome step(World& world, std::span<const AgentAction> actions) {
  const auto agents = world.agents();
  const size_t n = agents.size();

  std::vector<std::vector<Action>> tables;
  tables.reserve(world.types().size());
  for (const auto& t : world.types()) tables.push_back(action_space(t));

  // Per living agent, aligned with world.agents() (ascending id).
  std::vector<ActionIndex> chosen(n, kNoOp);
  std::vector<uint8_t> seen(n, 0);
  auto slot_of = [&](AgentId id) { return static_cast<size_t>(world.find(id) - agents.data()); };
  for (const AgentAction& aa : actions) {
    const Agent* a = world.find(aa.agent);
    if (!a) fail(ErrorCode::kInvalidAction, "action for unknown or dead agent " + std::to_string(aa.agent));
    size_t slot = slot_of(aa.agent);
    if (seen[slot]) fail(ErrorCode::kInvalidAction, "duplicate action for agent " + std::to_string(aa.agent));
    seen[slot] = 1;
    const auto& table = tables[world.groups()[a->group].type];
    if (aa.action >= table.size()) {
      fail(ErrorCode::kInvalidAction, "action index " + std::to_string(aa.action) + " out of range for agent " +
                                          std::to_string(aa.agent) + " (" + std::to_string(table.size()) + " actions)");
    }
    chosen[slot] = aa.action;
  }

  StepOutcome out;
  auto& events = out.events;
  auto action_of = [&](size_t slot) -> const Action& {
    return tables[world.groups()[agents[slot].group].type][chosen[slot]];
  };

  // (1) attack, resolved from pre-step positions and facings
  std::vector<double> damage(n, 0.0);
  std::vector<uint32_t> first_hitter(n, kEmptyCell);
  for (size_t i = 0; i < n; ++i) {
    const Action& act = action_of(i);
    if (act.kind != ActionKind::Attack) continue;
    const Agent& a = agents[i];
    Offset d = rotate_offset(act.offset, a.dir);
    int32_t tx = a.pos.x + d.dx;
    int32_t ty = a.pos.y + d.dy;
    if (!world.in_bounds(tx, ty)) continue;
    uint32_t occ = world.cell(tx, ty);
    if (occ == kEmptyCell || occ == kWallCell || occ == a.id) continue;
    size_t t = slot_of(occ);
    damage[t] += world.type_of(a).damage;
    if (first_hitter[t] == kEmptyCell) first_hitter[t] = a.id;
    events.push_back({EventKind::Attack, a.id, occ});
  }
  std::vector<uint8_t> doomed(n, 0);
  for (size_t i = 0; i < n; ++i) {
    if (first_hitter[i] == kEmptyCell) continue;
    Agent& a = world.mutable_agent(agents[i].id);
    a.hp -= damage[i];
    doomed[i] = a.hp <= 0.0;
  }

  // (2) turn
  for (size_t i = 0; i < n; ++i) {
    if (doomed[i]) continue;
    const Action& act = action_of(i);
    if (act.kind == ActionKind::TurnLeft) {
      Agent& a = world.mutable_agent(agents[i].id);
      a.dir = turn_left(a.dir);
    } else if (act.kind == ActionKind::TurnRight) {
      Agent& a = world.mutable_agent(agents[i].id);
      a.dir = turn_right(a.dir);
    }
  }

  // (3) move, sequential under a seeded permutation
  std::vector<uint32_t> movers;
  for (size_t i = 0; i < n; ++i) {
    if (!doomed[i] && action_of(i).kind == ActionKind::Move) movers.push_back(static_cast<uint32_t>(i));
  }
  world.rng().shuffle(std::span<uint32_t>(movers));
  for (uint32_t i : movers) {
    const Agent& a = agents[i];
    const auto& t = world.type_of(a);
    Offset d = rotate_offset(action_of(i).offset, a.dir);
    Position to{a.pos.x + d.dx, a.pos.y + d.dy};
    uint32_t b = world.blocker(to, t.body_w, t.body_h, a.id);
    if (b == kEmptyCell) {
      world.relocate(a.id, to);
    } else {
      events.push_back({EventKind::Collide, a.id, b});
    }
  }

  // (4) recovery for agents not hit this step
  for (size_t i = 0; i < n; ++i) {
    if (first_hitter[i] != kEmptyCell) continue;
    Agent& a = world.mutable_agent(agents[i].id);
    const auto& t = world.type_of(a);
    a.hp = std::min(t.max_hp, a.hp + t.step_recover);
  }

  // (5) death
  std::vector<AgentId> dead;
  for (size_t i = 0; i < n; ++i) {
    if (!doomed[i]) continue;
    dead.push_back(agents[i].id);
    out.fallen.push_back(agents[i]);
    events.push_back({EventKind::Die, agents[i].id, 0});
    events.push_back({EventKind::Kill, first_hitter[i], agents[i].id});
  }
  for (size_t i = 0; i < n; ++i) world.mutable_agent(agents[i].id).last_action = chosen[i];
  for (Agent& f : out.fallen) f.last_action = chosen[slot_of(f.id)];
  world.remove_agents(dead);
  world.advance_step();
  return out;
}

}  // namespace swarmgrid

#include "swarmgrid/world.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "swarmgrid/error.hpp"

namespace swarmgrid {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidConfig: return "invalid-config";
    case ErrorCode::kPlacement: return "placement";
    case ErrorCode::kCapacity: return "capacity";
    case ErrorCode::kLookup: return "lookup";
    case ErrorCode::kInvalidAction: return "invalid-action";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kValidation: return "validation";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kUnsupportedVersion: return "unsupported-version";
    case ErrorCode::kDivergence: return "training-divergence";
    case ErrorCode::kContract: return "contract";
    case ErrorCode::kOracleTooLarge: return "oracle-too-large";
    case ErrorCode::kState: return "state";
  }
  return "unknown";
}

const char* direction_name(Direction d) {
  switch (d) {
    case Direction::North: return "N";
    case Direction::East: return "E";
    case Direction::South: return "S";
    case Direction::West: return "W";
  }
  return "?";
}

namespace {

std::string cell_str(Position p) { return "(" + std::to_string(p.x) + "," + std::to_string(p.y) + ")"; }

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

}  // namespace

void AgentTypeSpec::validate() const {
  auto bad = [&](const std::string& what) {
    fail(ErrorCode::kInvalidConfig, "agent type '" + name + "': " + what);
  };
  if (name.empty()) bad("name must be non-empty");
  if (body_w < 1 || body_h < 1) bad("body dimensions must be >= 1");
  if (speed < 0) bad("speed must be >= 0");
  if (view_range < 0) bad("view_range must be >= 0");
  if (attack_range < 0) bad("attack_range must be >= 0");
  if (!finite_nonneg(damage)) bad("damage must be finite and >= 0");
  if (!std::isfinite(max_hp) || max_hp <= 0.0) bad("max_hp must be finite and > 0");
  if (!finite_nonneg(step_recover)) bad("step_recover must be finite and >= 0");
  // Keeps the action space and view tensors at sane sizes.
  if (speed > 16 || attack_range > 16 || view_range > 64) bad("range exceeds supported maximum");
}

World::World(int32_t width, int32_t height, uint64_t seed) : width_(width), height_(height), seed_(seed), rng_(seed) {
  if (width < 1 || height < 1) {
    fail(ErrorCode::kInvalidConfig,
         "world dimensions must be >= 1, got " + std::to_string(width) + "x" + std::to_string(height));
  }
  if (static_cast<uint64_t>(width) * static_cast<uint64_t>(height) > (1ULL << 31)) {
    fail(ErrorCode::kInvalidConfig, "world too large");
  }
  size_t cells = static_cast<size_t>(width) * height;
  walls_.assign(cells, 0);
  occupancy_.assign(cells, kEmptyCell);
}

std::vector<Position> World::wall_cells() const {
  std::vector<Position> out;
  for (int32_t y = 0; y < height_; ++y) {
    for (int32_t x = 0; x < width_; ++x) {
      if (walls_[index(x, y)]) out.push_back({x, y});
    }
  }
  return out;
}

void World::set_walls(std::span<const Position> cells) {
  for (const Position& p : cells) {
    if (!in_bounds(p.x, p.y)) fail(ErrorCode::kPlacement, "wall cell " + cell_str(p) + " is out of bounds");
    uint32_t slot = cell(p.x, p.y);
    if (slot != kEmptyCell && slot != kWallCell) {
      fail(ErrorCode::kPlacement, "wall cell " + cell_str(p) + " is occupied by agent " + std::to_string(slot));
    }
  }
  for (const Position& p : cells) {
    walls_[index(p.x, p.y)] = 1;
    occupancy_[index(p.x, p.y)] = kWallCell;
  }
}

TypeId World::register_agent_type(const AgentTypeSpec& spec) {
  spec.validate();
  for (const auto& t : types_) {
    if (t.name == spec.name) fail(ErrorCode::kInvalidConfig, "duplicate agent type name '" + spec.name + "'");
  }
  types_.push_back(spec);
  return static_cast<TypeId>(types_.size() - 1);
}

GroupId World::create_group(TypeId type, std::string name) {
  if (type >= types_.size()) fail(ErrorCode::kLookup, "unknown agent type id " + std::to_string(type));
  if (name.empty()) name = "group" + std::to_string(groups_.size());
  for (const auto& g : groups_) {
    if (g.name == name) fail(ErrorCode::kInvalidConfig, "duplicate group name '" + name + "'");
  }
  groups_.push_back({std::move(name), type});
  members_.emplace_back();
  return static_cast<GroupId>(groups_.size() - 1);
}

GroupId World::group_by_name(std::string_view name) const {
  for (size_t i = 0; i < groups_.size(); ++i) {
    if (groups_[i].name == name) return static_cast<GroupId>(i);
  }
  fail(ErrorCode::kLookup, "unknown group '" + std::string(name) + "'");
}

uint32_t World::blocker(Position pos, int32_t body_w, int32_t body_h, AgentId self) const {
  for (int32_t dy = 0; dy < body_h; ++dy) {
    for (int32_t dx = 0; dx < body_w; ++dx) {
      int32_t x = pos.x + dx;
      int32_t y = pos.y + dy;
      if (!in_bounds(x, y)) return kWallCell;
      uint32_t slot = cell(x, y);
      if (slot != kEmptyCell && slot != self) return slot;
    }
  }
  return kEmptyCell;
}

void World::stamp(const Agent& a, uint32_t value) {
  const auto& t = type_of(a);
  for (int32_t dy = 0; dy < t.body_h; ++dy) {
    for (int32_t dx = 0; dx < t.body_w; ++dx) occupancy_[index(a.pos.x + dx, a.pos.y + dy)] = value;
  }
}

AgentId World::create_agent(GroupId group, Position pos, Direction dir) {
  if (next_id_ > kMaxAgentId) fail(ErrorCode::kCapacity, "agent id space exhausted");
  Agent a;
  a.id = next_id_++;
  a.group = group;
  a.pos = pos;
  a.dir = dir;
  a.hp = type_of(group).max_hp;
  a.last_action = 0;
  a.last_reward = 0.0;
  stamp(a, a.id);
  slot_of_.push_back(static_cast<uint32_t>(agents_.size()));
  agents_.push_back(a);
  members_[group].push_back(a.id);
  return a.id;
}

std::vector<AgentId> World::spawn(GroupId group, const SpawnRequest& request) {
  if (group >= groups_.size()) fail(ErrorCode::kLookup, "unknown group id " + std::to_string(group));
  const AgentTypeSpec& t = type_of(group);
  std::vector<AgentId> ids;

  if (const auto* explicit_req = std::get_if<ExplicitPositions>(&request)) {
    // Validate the whole batch first so a failure leaves the world unchanged.
    std::vector<uint8_t> claimed(occupancy_.size(), 0);
    for (const Placement& pl : explicit_req->placements) {
      uint32_t b = blocker(pl.pos, t.body_w, t.body_h);
      if (b != kEmptyCell) {
        fail(ErrorCode::kPlacement, "cannot place agent at " + cell_str(pl.pos) +
                                        (b == kWallCell ? ": wall or out of bounds" : ": occupied by agent " + std::to_string(b)));
      }
      for (int32_t dy = 0; dy < t.body_h; ++dy) {
        for (int32_t dx = 0; dx < t.body_w; ++dx) {
          uint8_t& c = claimed[index(pl.pos.x + dx, pl.pos.y + dy)];
          if (c) fail(ErrorCode::kPlacement, "cannot place agent at " + cell_str(pl.pos) + ": cell claimed twice");
          c = 1;
        }
      }
    }
    for (const Placement& pl : explicit_req->placements) ids.push_back(create_agent(group, pl.pos, pl.dir));
    return ids;
  }

  uint32_t n = std::get<RandomCount>(request).n;
  if (n == 0) return ids;
  size_t free_cells = static_cast<size_t>(std::count(occupancy_.begin(), occupancy_.end(), kEmptyCell));
  size_t area = static_cast<size_t>(t.body_w) * t.body_h;
  if (t.body_w > width_ || t.body_h > height_ || static_cast<size_t>(n) * area > free_cells) {
    fail(ErrorCode::kCapacity, "cannot spawn " + std::to_string(n) + " agents of type '" + t.name + "': only " +
                                   std::to_string(free_cells) + " free cells");
  }
  uint64_t budget = static_cast<uint64_t>(width_) * height_ * 10;
  uint64_t span_x = static_cast<uint64_t>(width_ - t.body_w + 1);
  uint64_t span_y = static_cast<uint64_t>(height_ - t.body_h + 1);
  uint64_t draws = 0;
  while (ids.size() < n) {
    if (draws++ >= budget) {
      remove_agents(ids);
      fail(ErrorCode::kCapacity, "random spawn of " + std::to_string(n) + " agents failed after " +
                                     std::to_string(budget) + " draws");
    }
    Position p{static_cast<int32_t>(rng_.below(span_x)), static_cast<int32_t>(rng_.below(span_y))};
    if (blocker(p, t.body_w, t.body_h) != kEmptyCell) continue;
    auto dir = static_cast<Direction>(rng_.below(4));
    ids.push_back(create_agent(group, p, dir));
  }
  return ids;
}

std::vector<AgentId> World::query_rect(int32_t x0, int32_t y0, int32_t x1, int32_t y1) const {
  std::vector<AgentId> out;
  x0 = std::max(x0, 0);
  y0 = std::max(y0, 0);
  x1 = std::min(x1, width_ - 1);
  y1 = std::min(y1, height_ - 1);
  if (x0 > x1 || y0 > y1) return out;
  uint64_t area = static_cast<uint64_t>(x1 - x0 + 1) * static_cast<uint64_t>(y1 - y0 + 1);
  if (area <= agents_.size()) {
    for (int32_t y = y0; y <= y1; ++y) {
      for (int32_t x = x0; x <= x1; ++x) {
        uint32_t slot = cell(x, y);
        if (slot != kEmptyCell && slot != kWallCell) out.push_back(slot);
      }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
  for (const Agent& a : agents_) {
    const auto& t = type_of(a);
    if (a.pos.x <= x1 && a.pos.x + t.body_w - 1 >= x0 && a.pos.y <= y1 && a.pos.y + t.body_h - 1 >= y0) {
      out.push_back(a.id);
    }
  }
  return out;
}

const Agent* World::find(AgentId id) const {
  if (id >= slot_of_.size()) return nullptr;
  uint32_t slot = slot_of_[id];
  return slot == kEmptyCell ? nullptr : &agents_[slot];
}

const Agent& World::agent(AgentId id) const {
  const Agent* a = find(id);
  if (!a) fail(ErrorCode::kLookup, "no living agent with id " + std::to_string(id));
  return *a;
}

Agent& World::mutable_agent(AgentId id) { return const_cast<Agent&>(agent(id)); }

void World::relocate(AgentId id, Position to) {
  Agent& a = mutable_agent(id);
  stamp(a, kEmptyCell);
  a.pos = to;
  stamp(a, a.id);
}

void World::remove_agents(std::span<const AgentId> ids) {
  if (ids.empty()) return;
  for (AgentId id : ids) {
    const Agent& a = agent(id);
    stamp(a, kEmptyCell);
    slot_of_[id] = kEmptyCell;
  }
  std::erase_if(agents_, [&](const Agent& a) { return slot_of_[a.id] == kEmptyCell; });
  for (auto& m : members_) {
    std::erase_if(m, [&](AgentId id) { return slot_of_[id] == kEmptyCell; });
  }
  reindex();
}

void World::reindex() {
  for (size_t i = 0; i < agents_.size(); ++i) slot_of_[agents_[i].id] = static_cast<uint32_t>(i);
}

std::vector<uint32_t> World::rebuild_occupancy() const {
  std::vector<uint32_t> occ(occupancy_.size(), kEmptyCell);
  for (size_t i = 0; i < walls_.size(); ++i) {
    if (walls_[i]) occ[i] = kWallCell;
  }
  for (const Agent& a : agents_) {
    const auto& t = type_of(a);
    for (int32_t dy = 0; dy < t.body_h; ++dy) {
      for (int32_t dx = 0; dx < t.body_w; ++dx) {
        if (!in_bounds(a.pos.x + dx, a.pos.y + dy)) continue;
        uint32_t& slot = occ[index(a.pos.x + dx, a.pos.y + dy)];
        // A double claim shows up as a mismatch against the live index.
        slot = slot == kEmptyCell ? a.id : kWallCell;
      }
    }
  }
  return occ;
}

}  // namespace swarmgrid

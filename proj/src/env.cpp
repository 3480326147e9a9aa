#include "swarmgrid/env.hpp"

#include <algorithm>
#include <map>

#include "json.hpp"

namespace swarmgrid {

using nlohmann::json;

namespace {

std::string join_problems(const std::vector<std::string>& problems) {
  std::string out;
  for (size_t i = 0; i < problems.size(); ++i) {
    if (i) out += '\n';
    out += problems[i];
  }
  return out;
}

Direction parse_direction(const std::string& s, bool& ok) {
  ok = true;
  if (s == "N") return Direction::North;
  if (s == "E") return Direction::East;
  if (s == "S") return Direction::South;
  if (s == "W") return Direction::West;
  ok = false;
  return Direction::North;
}

class Reader {
 public:
  void problem(ErrorCode code, const std::string& path, const std::string& msg) {
    if (!code_) code_ = code;
    problems_.push_back(path + ": " + msg);
  }
  void problem(const std::string& path, const std::string& msg) { problem(ErrorCode::kInvalidConfig, path, msg); }
  bool ok() const { return problems_.empty(); }
  [[noreturn]] void raise() { throw ConfigError(code_.value_or(ErrorCode::kInvalidConfig), problems_); }

  template <typename T>
  bool read_int(const json& obj, const std::string& path, const char* key, T& out, bool required) {
    if (!obj.contains(key)) {
      if (required) problem(path, std::string("missing required key '") + key + "'");
      return false;
    }
    const json& v = obj.at(key);
    if (!v.is_number_integer()) {
      problem(path + "." + key, "expected integer");
      return false;
    }
    if constexpr (std::is_unsigned_v<T>) {
      if (v.get<int64_t>() < 0 && !v.is_number_unsigned()) {
        problem(path + "." + key, "expected non-negative integer");
        return false;
      }
    }
    out = v.get<T>();
    return true;
  }

  bool read_real(const json& obj, const std::string& path, const char* key, double& out, bool required) {
    if (!obj.contains(key)) {
      if (required) problem(path, std::string("missing required key '") + key + "'");
      return false;
    }
    const json& v = obj.at(key);
    if (!v.is_number()) {
      problem(path + "." + key, "expected number");
      return false;
    }
    out = v.get<double>();
    return true;
  }

  bool read_string(const json& obj, const std::string& path, const char* key, std::string& out, bool required) {
    if (!obj.contains(key)) {
      if (required) problem(path, std::string("missing required key '") + key + "'");
      return false;
    }
    const json& v = obj.at(key);
    if (!v.is_string()) {
      problem(path + "." + key, "expected string");
      return false;
    }
    out = v.get<std::string>();
    return true;
  }

  bool read_bool(const json& obj, const std::string& path, const char* key, bool& out) {
    if (!obj.contains(key)) return false;
    const json& v = obj.at(key);
    if (!v.is_boolean()) {
      problem(path + "." + key, "expected boolean");
      return false;
    }
    out = v.get<bool>();
    return true;
  }

  void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> known) {
    for (const auto& [k, _] : obj.items()) {
      if (std::none_of(known.begin(), known.end(), [&](const char* n) { return k == n; })) {
        problem(path, "unknown key '" + k + "'");
      }
    }
  }

 private:
  std::vector<std::string> problems_;
  std::optional<ErrorCode> code_;
};

bool read_position(Reader& r, const json& v, const std::string& path, Position& out) {
  if (!v.is_array() || v.size() < 2 || !v[0].is_number_integer() || !v[1].is_number_integer()) {
    r.problem(path, "expected [x, y]");
    return false;
  }
  out = {v[0].get<int32_t>(), v[1].get<int32_t>()};
  return true;
}

void read_map(Reader& r, const json& doc, ScenarioConfig& cfg) {
  if (!doc.contains("map") || !doc["map"].is_object()) {
    r.problem("$", "missing object 'map'");
    return;
  }
  const json& m = doc["map"];
  r.reject_unknown(m, "$.map", {"width", "height", "walls"});
  r.read_int(m, "$.map", "width", cfg.width, true);
  r.read_int(m, "$.map", "height", cfg.height, true);
  if (cfg.width < 1 || cfg.height < 1) r.problem("$.map", "width and height must be >= 1");
  if (!m.contains("walls")) return;
  const json& w = m["walls"];
  if (w.is_string()) {
    auto s = w.get<std::string>();
    if (s == "none") {
      cfg.walls = WallLayout::None;
    } else if (s == "border") {
      cfg.walls = WallLayout::Border;
    } else {
      r.problem("$.map.walls", "expected \"none\", \"border\" or a list of [x, y]");
    }
  } else if (w.is_array()) {
    cfg.walls = WallLayout::Explicit;
    for (size_t i = 0; i < w.size(); ++i) {
      Position p;
      if (read_position(r, w[i], "$.map.walls[" + std::to_string(i) + "]", p)) cfg.wall_cells.push_back(p);
    }
  } else {
    r.problem("$.map.walls", "expected \"none\", \"border\" or a list of [x, y]");
  }
}

void read_types(Reader& r, const json& doc, ScenarioConfig& cfg) {
  if (!doc.contains("types") || !doc["types"].is_array() || doc["types"].empty()) {
    r.problem("$", "missing non-empty array 'types'");
    return;
  }
  const json& types = doc["types"];
  for (size_t i = 0; i < types.size(); ++i) {
    const std::string path = "$.types[" + std::to_string(i) + "]";
    const json& t = types[i];
    if (!t.is_object()) {
      r.problem(path, "expected object");
      continue;
    }
    r.reject_unknown(t, path,
                     {"name", "body_w", "body_h", "speed", "view_range", "attack_range", "damage", "max_hp",
                      "step_recover"});
    AgentTypeSpec spec;
    r.read_string(t, path, "name", spec.name, true);
    r.read_int(t, path, "body_w", spec.body_w, false);
    r.read_int(t, path, "body_h", spec.body_h, false);
    r.read_int(t, path, "speed", spec.speed, false);
    r.read_int(t, path, "view_range", spec.view_range, false);
    r.read_int(t, path, "attack_range", spec.attack_range, false);
    r.read_real(t, path, "damage", spec.damage, false);
    r.read_real(t, path, "max_hp", spec.max_hp, false);
    r.read_real(t, path, "step_recover", spec.step_recover, false);
    try {
      spec.validate();
    } catch (const Error& e) {
      r.problem(path, e.what());
    }
    for (const auto& prev : cfg.types) {
      if (prev.name == spec.name) r.problem(path, "duplicate type name '" + spec.name + "'");
    }
    cfg.types.push_back(spec);
  }
}

void read_groups(Reader& r, const json& doc, ScenarioConfig& cfg) {
  if (!doc.contains("groups") || !doc["groups"].is_array() || doc["groups"].empty()) {
    r.problem("$", "missing non-empty array 'groups'");
    return;
  }
  const json& groups = doc["groups"];
  for (size_t i = 0; i < groups.size(); ++i) {
    const std::string path = "$.groups[" + std::to_string(i) + "]";
    const json& g = groups[i];
    if (!g.is_object()) {
      r.problem(path, "expected object");
      continue;
    }
    r.reject_unknown(g, path, {"name", "type", "spawn"});
    GroupConfig gc;
    r.read_string(g, path, "name", gc.name, true);
    r.read_string(g, path, "type", gc.type, true);
    if (std::none_of(cfg.types.begin(), cfg.types.end(), [&](const AgentTypeSpec& t) { return t.name == gc.type; })) {
      r.problem(path + ".type", "unknown type '" + gc.type + "'");
    }
    for (const auto& prev : cfg.groups) {
      if (prev.name == gc.name) r.problem(path, "duplicate group name '" + gc.name + "'");
    }
    if (!g.contains("spawn") || !g["spawn"].is_object()) {
      r.problem(path, "missing object 'spawn'");
    } else {
      const json& s = g["spawn"];
      const std::string sp = path + ".spawn";
      if (s.contains("count") == s.contains("positions")) {
        r.problem(sp, "exactly one of 'count' or 'positions' is required");
      } else if (s.contains("count")) {
        uint32_t n = 0;
        r.read_int(s, sp, "count", n, true);
        gc.spawn = n;
      } else if (!s["positions"].is_array()) {
        r.problem(sp + ".positions", "expected array of [x, y, dir]");
      } else {
        std::vector<Placement> placements;
        const json& ps = s["positions"];
        for (size_t k = 0; k < ps.size(); ++k) {
          const std::string pp = sp + ".positions[" + std::to_string(k) + "]";
          Placement pl;
          if (!read_position(r, ps[k], pp, pl.pos)) continue;
          if (ps[k].size() >= 3) {
            bool ok = ps[k][2].is_string();
            if (ok) pl.dir = parse_direction(ps[k][2].get<std::string>(), ok);
            if (!ok) r.problem(pp, "direction must be one of \"N\", \"E\", \"S\", \"W\"");
          }
          placements.push_back(pl);
        }
        gc.spawn = std::move(placements);
      }
    }
    cfg.groups.push_back(std::move(gc));
  }
}

void read_termination(Reader& r, const json& doc, ScenarioConfig& cfg) {
  if (!doc.contains("termination")) return;
  const json& t = doc["termination"];
  if (!t.is_object()) {
    r.problem("$.termination", "expected object");
    return;
  }
  r.reject_unknown(t, "$.termination", {"max_steps", "done_when", "extinct"});
  r.read_int(t, "$.termination", "max_steps", cfg.termination.max_steps, false);
  std::string when;
  if (r.read_string(t, "$.termination", "done_when", when, false)) {
    if (when == "max_steps") {
      cfg.termination.done_when = DoneWhen::MaxSteps;
    } else if (when == "group_extinct") {
      cfg.termination.done_when = DoneWhen::GroupExtinct;
    } else if (when == "either") {
      cfg.termination.done_when = DoneWhen::Either;
    } else {
      r.problem("$.termination.done_when", "expected \"max_steps\", \"group_extinct\" or \"either\"");
    }
  }
  if (t.contains("extinct")) {
    const json& e = t["extinct"];
    if (!e.is_array()) {
      r.problem("$.termination.extinct", "expected array of group names");
    } else {
      for (size_t i = 0; i < e.size(); ++i) {
        const std::string path = "$.termination.extinct[" + std::to_string(i) + "]";
        if (!e[i].is_string()) {
          r.problem(path, "expected string");
          continue;
        }
        auto name = e[i].get<std::string>();
        if (std::none_of(cfg.groups.begin(), cfg.groups.end(), [&](const GroupConfig& g) { return g.name == name; })) {
          r.problem(path, "unknown group '" + name + "'");
        }
        cfg.termination.extinct.push_back(name);
      }
    }
  }
  if (cfg.termination.done_when != DoneWhen::MaxSteps && cfg.termination.extinct.empty()) {
    r.problem("$.termination", "done_when requires a non-empty 'extinct' list");
  }
}

void read_observation(Reader& r, const json& doc, ScenarioConfig& cfg) {
  if (!doc.contains("observation")) return;
  const json& o = doc["observation"];
  if (!o.is_object()) {
    r.problem("$.observation", "expected object");
    return;
  }
  r.reject_unknown(o, "$.observation", {"id_bits", "minimap", "minimap_bins"});
  r.read_int(o, "$.observation", "id_bits", cfg.observation.id_bits, false);
  r.read_bool(o, "$.observation", "minimap", cfg.observation.minimap);
  r.read_int(o, "$.observation", "minimap_bins", cfg.observation.minimap_bins, false);
  if (cfg.observation.id_bits < 1 || cfg.observation.id_bits > 63) r.problem("$.observation.id_bits", "must be in [1, 63]");
  if (cfg.observation.minimap_bins < 1) r.problem("$.observation.minimap_bins", "must be >= 1");
}

std::vector<Position> border_cells(int32_t w, int32_t h) {
  std::vector<Position> out;
  for (int32_t y = 0; y < h; ++y) {
    for (int32_t x = 0; x < w; ++x) {
      if (x == 0 || y == 0 || x == w - 1 || y == h - 1) out.push_back({x, y});
    }
  }
  return out;
}

World build_world(const ScenarioConfig& cfg, uint64_t seed) {
  World w(cfg.width, cfg.height, seed);
  if (cfg.walls == WallLayout::Border) {
    auto cells = border_cells(cfg.width, cfg.height);
    w.set_walls(cells);
  } else if (cfg.walls == WallLayout::Explicit) {
    w.set_walls(cfg.wall_cells);
  }
  std::map<std::string, TypeId> type_ids;
  for (const auto& t : cfg.types) type_ids[t.name] = w.register_agent_type(t);
  std::vector<GroupId> gids;
  for (const auto& g : cfg.groups) gids.push_back(w.create_group(type_ids.at(g.type), g.name));
  for (size_t i = 0; i < cfg.groups.size(); ++i) {
    const auto& spawn = cfg.groups[i].spawn;
    if (const auto* n = std::get_if<uint32_t>(&spawn)) {
      w.spawn(gids[i], RandomCount{*n});
    } else {
      w.spawn(gids[i], ExplicitPositions{std::get<std::vector<Placement>>(spawn)});
    }
  }
  return w;
}

}  // namespace

ConfigError::ConfigError(ErrorCode code, std::vector<std::string> problems)
    : Error(code, join_problems(problems)), problems_(std::move(problems)) {}

ScenarioConfig parse_scenario(std::string_view json_text) {
  Reader r;
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    r.problem("$", std::string("malformed JSON: ") + e.what());
    r.raise();
  }
  if (!doc.is_object()) {
    r.problem("$", "expected a JSON object");
    r.raise();
  }
  r.reject_unknown(doc, "$",
                   {"name", "map", "types", "groups", "reward_program", "termination", "observation", "seed"});
  ScenarioConfig cfg;
  r.read_string(doc, "$", "name", cfg.name, false);
  read_map(r, doc, cfg);
  read_types(r, doc, cfg);
  read_groups(r, doc, cfg);
  r.read_string(doc, "$", "reward_program", cfg.reward_program, false);
  read_termination(r, doc, cfg);
  read_observation(r, doc, cfg);
  r.read_int(doc, "$", "seed", cfg.seed, false);
  if (!r.ok()) r.raise();

  try {
    auto program = reward::parse_program(cfg.reward_program);
    reward::Schema schema;
    for (const auto& g : cfg.groups) schema.groups.push_back(g.name);
    schema.width = cfg.width;
    schema.height = cfg.height;
    reward::validate(program, schema);
  } catch (const reward::DslError& e) {
    for (const auto& d : e.diagnostics()) {
      r.problem(e.code(), "$.reward_program:" + std::to_string(d.loc.line) + ":" + std::to_string(d.loc.column),
                d.message);
    }
  }
  try {
    build_world(cfg, cfg.seed);
  } catch (const Error& e) {
    r.problem(e.code(), "$.groups", e.what());
  }
  if (!r.ok()) r.raise();
  return cfg;
}

std::string scenario_to_json(const ScenarioConfig& cfg) {
  json doc;
  doc["name"] = cfg.name;
  json map = {{"width", cfg.width}, {"height", cfg.height}};
  switch (cfg.walls) {
    case WallLayout::None: map["walls"] = "none"; break;
    case WallLayout::Border: map["walls"] = "border"; break;
    case WallLayout::Explicit: {
      json cells = json::array();
      for (const auto& p : cfg.wall_cells) cells.push_back({p.x, p.y});
      map["walls"] = cells;
      break;
    }
  }
  doc["map"] = map;
  json types = json::array();
  for (const auto& t : cfg.types) {
    types.push_back({{"name", t.name},
                     {"body_w", t.body_w},
                     {"body_h", t.body_h},
                     {"speed", t.speed},
                     {"view_range", t.view_range},
                     {"attack_range", t.attack_range},
                     {"damage", t.damage},
                     {"max_hp", t.max_hp},
                     {"step_recover", t.step_recover}});
  }
  doc["types"] = types;
  json groups = json::array();
  for (const auto& g : cfg.groups) {
    json spawn;
    if (const auto* n = std::get_if<uint32_t>(&g.spawn)) {
      spawn["count"] = *n;
    } else {
      json ps = json::array();
      for (const auto& pl : std::get<std::vector<Placement>>(g.spawn)) {
        ps.push_back({pl.pos.x, pl.pos.y, direction_name(pl.dir)});
      }
      spawn["positions"] = ps;
    }
    groups.push_back({{"name", g.name}, {"type", g.type}, {"spawn", spawn}});
  }
  doc["groups"] = groups;
  doc["reward_program"] = cfg.reward_program;
  const char* when = cfg.termination.done_when == DoneWhen::MaxSteps       ? "max_steps"
                     : cfg.termination.done_when == DoneWhen::GroupExtinct ? "group_extinct"
                                                                           : "either";
  doc["termination"] = {{"max_steps", cfg.termination.max_steps}, {"done_when", when},
                        {"extinct", cfg.termination.extinct}};
  doc["observation"] = {{"id_bits", cfg.observation.id_bits},
                        {"minimap", cfg.observation.minimap},
                        {"minimap_bins", cfg.observation.minimap_bins}};
  doc["seed"] = cfg.seed;
  return doc.dump(2);
}

Environment::Environment(ScenarioConfig config) : config_(std::move(config)) {
  program_ = reward::parse_program(config_.reward_program);
  reward::Schema schema;
  for (const auto& g : config_.groups) schema.groups.push_back(g.name);
  schema.width = config_.width;
  schema.height = config_.height;
  reward::validate(program_, schema);
  seed_ = config_.seed;
}

const World& Environment::world() const {
  if (!world_) fail(ErrorCode::kState, "environment has not been reset");
  return *world_;
}

World& Environment::mutable_world() {
  if (!world_) fail(ErrorCode::kState, "environment has not been reset");
  return *world_;
}

GroupId Environment::group_by_name(std::string_view name) const {
  for (size_t i = 0; i < config_.groups.size(); ++i) {
    if (config_.groups[i].name == name) return static_cast<GroupId>(i);
  }
  fail(ErrorCode::kLookup, "unknown group '" + std::string(name) + "'");
}

ObservationShape Environment::shape(GroupId g) const { return observation_shape(world(), g, config_.observation); }

std::vector<ObservationBatch> Environment::reset(uint64_t seed) {
  world_.emplace(build_world(config_, seed));
  seed_ = seed;
  done_ = false;
  return observe();
}

std::vector<ObservationBatch> Environment::observe() const {
  std::vector<ObservationBatch> out;
  for (size_t g = 0; g < config_.groups.size(); ++g) {
    out.push_back(observe_group(world(), static_cast<GroupId>(g), config_.observation));
  }
  return out;
}

StepResult Environment::step(std::span<const std::vector<ActionIndex>> actions) {
  const World& w = world();
  if (actions.size() != config_.groups.size()) {
    fail(ErrorCode::kInvalidAction, "expected action arrays for " + std::to_string(config_.groups.size()) +
                                        " groups, got " + std::to_string(actions.size()));
  }
  std::vector<AgentAction> flat;
  flat.reserve(w.population());
  for (size_t g = 0; g < actions.size(); ++g) {
    auto members = w.members(static_cast<GroupId>(g));
    if (actions[g].size() != members.size()) {
      fail(ErrorCode::kInvalidAction, "group '" + config_.groups[g].name + "' has " + std::to_string(members.size()) +
                                          " living agents but " + std::to_string(actions[g].size()) +
                                          " actions were given");
    }
    for (size_t i = 0; i < members.size(); ++i) flat.push_back({members[i], actions[g][i]});
  }
  return step_agents(flat);
}

StepResult Environment::step_agents(std::span<const AgentAction> actions) {
  if (done_) fail(ErrorCode::kState, "episode is done; call reset");
  World& w = mutable_world();
  auto snapshot = reward::Snapshot::begin(w);
  StepOutcome outcome = swarmgrid::step(w, actions);
  snapshot.finish(w, outcome.fallen);

  StepResult result;
  result.rewards = reward::evaluate(program_, outcome.events, snapshot);
  for (const Agent& a : w.agents()) {
    auto it = result.rewards.find(a.id);
    w.mutable_agent(a.id).last_reward = it == result.rewards.end() ? 0.0 : it->second;
  }

  done_ = check_done();
  auto reward_of = [&](AgentId id) {
    auto it = result.rewards.find(id);
    return it == result.rewards.end() ? 0.0 : it->second;
  };
  for (size_t g = 0; g < config_.groups.size(); ++g) {
    GroupStep gs;
    gs.obs = observe_group(w, static_cast<GroupId>(g), config_.observation);
    for (AgentId id : gs.obs.ids) gs.rewards.push_back(reward_of(id));
    for (const Agent& f : outcome.fallen) {
      if (f.group != g) continue;
      gs.fallen.push_back(f.id);
      gs.fallen_rewards.push_back(reward_of(f.id));
    }
    result.groups.push_back(std::move(gs));
  }
  result.done = done_;
  result.info.step_count = w.step_count();
  for (size_t g = 0; g < config_.groups.size(); ++g) result.info.populations.push_back(w.members(static_cast<GroupId>(g)).size());
  for (const Event& e : outcome.events) {
    switch (e.kind) {
      case EventKind::Attack: ++result.info.attacks; break;
      case EventKind::Kill: ++result.info.kills; break;
      case EventKind::Die: ++result.info.deaths; break;
      case EventKind::Collide: ++result.info.collisions; break;
    }
  }
  result.events = std::move(outcome.events);
  return result;
}

bool Environment::check_done() const {
  const World& w = world();
  bool by_steps = w.step_count() >= config_.termination.max_steps;
  bool by_extinction = false;
  for (const auto& name : config_.termination.extinct) {
    if (w.members(group_by_name(name)).empty()) by_extinction = true;
  }
  switch (config_.termination.done_when) {
    case DoneWhen::MaxSteps: return by_steps;
    case DoneWhen::GroupExtinct: return by_extinction;
    case DoneWhen::Either: return by_steps || by_extinction;
  }
  return by_steps;
}

AgentId Environment::spawn_agent(GroupId group, Position pos, Direction dir) {
  World& w = mutable_world();
  auto ids = w.spawn(group, ExplicitPositions{{Placement{pos, dir}}});
  return ids.front();
}

void Environment::kill_agent(AgentId id) {
  World& w = mutable_world();
  w.agent(id);
  AgentId ids[] = {id};
  w.remove_agents(ids);
}

}  // namespace swarmgrid

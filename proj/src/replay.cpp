#include "swarmgrid/replay.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "swarmgrid/error.hpp"

namespace swarmgrid::replay {

using json = nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& msg) { fail(ErrorCode::kFormat, msg); }

const json& field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) bad(std::string("missing field '") + key + "'");
  return *it;
}

template <typename T>
T get(const json& j, const char* key) {
  try {
    return field(j, key).get<T>();
  } catch (const json::exception&) {
    bad(std::string("field '") + key + "' has the wrong type");
  }
}

Direction direction_from(const json& j) {
  if (!j.is_string()) bad("direction must be a string");
  const auto s = j.get<std::string>();
  for (Direction d : {Direction::North, Direction::East, Direction::South, Direction::West}) {
    if (s == direction_name(d)) return d;
  }
  bad("unknown direction '" + s + "'");
}

EventKind event_kind_from(const std::string& s) {
  for (EventKind k : {EventKind::Attack, EventKind::Kill, EventKind::Die, EventKind::Collide}) {
    if (s == event_kind_name(k)) return k;
  }
  bad("unknown event kind '" + s + "'");
}

const char* action_kind_name(ActionKind k) {
  switch (k) {
    case ActionKind::DoNothing: return "noop";
    case ActionKind::TurnLeft: return "turn_left";
    case ActionKind::TurnRight: return "turn_right";
    case ActionKind::Move: return "move";
    case ActionKind::Attack: return "attack";
  }
  return "?";
}

}  // namespace

ReplayHeader make_header(const Environment& env) {
  const World& w = env.world();
  ReplayHeader h;
  h.width = w.width();
  h.height = w.height();
  h.walls = w.wall_cells();
  h.types.assign(w.types().begin(), w.types().end());
  for (const Group& g : w.groups()) h.groups.push_back({g.name, w.types()[g.type].name});
  h.scenario = env.config().name;
  h.seed = env.episode_seed();
  return h;
}

Frame make_frame(const World& world, const StepResult* result) {
  Frame f;
  f.step = world.step_count();
  f.agents.reserve(world.population());
  for (const Agent& a : world.agents()) f.agents.push_back({a.id, a.group, a.pos.x, a.pos.y, a.dir, a.hp});
  for (size_t g = 0; g < world.groups().size(); ++g) {
    f.populations.push_back(static_cast<uint32_t>(world.members(static_cast<GroupId>(g)).size()));
  }
  if (result) {
    f.events = result->events;
    f.rewards.assign(result->rewards.begin(), result->rewards.end());
  }
  return f;
}

json header_to_json(const ReplayHeader& h) {
  json walls = json::array();
  for (Position p : h.walls) walls.push_back({p.x, p.y});
  json types = json::array();
  for (const AgentTypeSpec& t : h.types) {
    json actions = json::array();
    for (const Action& a : action_space(t)) actions.push_back({action_kind_name(a.kind), a.offset.dx, a.offset.dy});
    types.push_back({{"name", t.name},
                     {"body_w", t.body_w},
                     {"body_h", t.body_h},
                     {"speed", t.speed},
                     {"view_range", t.view_range},
                     {"attack_range", t.attack_range},
                     {"damage", t.damage},
                     {"max_hp", t.max_hp},
                     {"step_recover", t.step_recover},
                     {"actions", std::move(actions)}});
  }
  json groups = json::array();
  for (const GroupInfo& g : h.groups) groups.push_back({{"name", g.name}, {"type", g.type}});
  return {{"t", "header"}, {"version", h.version}, {"scenario", h.scenario}, {"seed", h.seed},
          {"width", h.width}, {"height", h.height}, {"walls", std::move(walls)}, {"types", std::move(types)},
          {"groups", std::move(groups)}};
}

json frame_to_json(const Frame& f) {
  json agents = json::array();
  for (const AgentState& a : f.agents) agents.push_back({a.id, a.group, a.x, a.y, direction_name(a.dir), a.hp});
  json events = json::array();
  for (const Event& e : f.events) {
    json row = {event_kind_name(e.kind), e.actor};
    if (e.kind == EventKind::Collide && e.target == kWallCell) {
      row.push_back(nullptr);
    } else if (e.kind != EventKind::Die) {
      row.push_back(e.target);
    }
    events.push_back(std::move(row));
  }
  json rewards = json::array();
  for (const auto& [id, r] : f.rewards) rewards.push_back({id, r});
  return {{"t", "frame"}, {"step", f.step}, {"agents", std::move(agents)}, {"events", std::move(events)},
          {"rewards", std::move(rewards)}, {"populations", f.populations}};
}

ReplayHeader header_from_json(const json& j) {
  if (!j.is_object() || j.value("t", "") != "header") bad("first line is not a header record");
  ReplayHeader h;
  h.version = get<int>(j, "version");
  if (h.version != kFormatVersion) {
    fail(ErrorCode::kUnsupportedVersion, "unsupported replay format version " + std::to_string(h.version) +
                                             " (this build reads version " + std::to_string(kFormatVersion) + ")");
  }
  h.scenario = get<std::string>(j, "scenario");
  h.seed = get<uint64_t>(j, "seed");
  h.width = get<int32_t>(j, "width");
  h.height = get<int32_t>(j, "height");
  try {
    for (const json& w : field(j, "walls")) h.walls.push_back({w.at(0).get<int32_t>(), w.at(1).get<int32_t>()});
    for (const json& t : field(j, "types")) {
      AgentTypeSpec s;
      s.name = t.at("name").get<std::string>();
      s.body_w = t.at("body_w").get<int32_t>();
      s.body_h = t.at("body_h").get<int32_t>();
      s.speed = t.at("speed").get<int32_t>();
      s.view_range = t.at("view_range").get<int32_t>();
      s.attack_range = t.at("attack_range").get<int32_t>();
      s.damage = t.at("damage").get<double>();
      s.max_hp = t.at("max_hp").get<double>();
      s.step_recover = t.at("step_recover").get<double>();
      h.types.push_back(std::move(s));
    }
    for (const json& g : field(j, "groups")) h.groups.push_back({g.at("name").get<std::string>(), g.at("type").get<std::string>()});
  } catch (const json::exception& e) {
    bad(std::string("malformed header: ") + e.what());
  }
  return h;
}

Frame frame_from_json(const json& j) {
  if (!j.is_object() || j.value("t", "") != "frame") bad("record is not a frame");
  Frame f;
  f.step = get<uint64_t>(j, "step");
  try {
    for (const json& a : field(j, "agents")) {
      if (a.size() != 6) bad("agent rows have 6 entries");
      f.agents.push_back({a[0].get<AgentId>(), a[1].get<GroupId>(), a[2].get<int32_t>(), a[3].get<int32_t>(),
                          direction_from(a[4]), a[5].get<double>()});
    }
    for (const json& e : field(j, "events")) {
      Event ev;
      ev.kind = event_kind_from(e.at(0).get<std::string>());
      ev.actor = e.at(1).get<AgentId>();
      if (ev.kind != EventKind::Die) ev.target = e.at(2).is_null() ? kWallCell : e.at(2).get<uint32_t>();
      f.events.push_back(ev);
    }
    for (const json& r : field(j, "rewards")) f.rewards.emplace_back(r.at(0).get<AgentId>(), r.at(1).get<double>());
    f.populations = field(j, "populations").get<std::vector<uint32_t>>();
  } catch (const json::exception& e) {
    bad(std::string("malformed frame: ") + e.what());
  }
  for (size_t i = 1; i < f.agents.size(); ++i) {
    if (f.agents[i].id <= f.agents[i - 1].id) bad("agent ids must be unique and ascending within a frame");
  }
  return f;
}

std::optional<ActionIndex> key_action(const json& actions, std::string_view key) {
  struct Binding {
    std::string_view key;
    ActionKind kind;
    Offset offset;
  };
  static constexpr Binding kBindings[] = {
      {"ArrowUp", ActionKind::Move, {0, -1}},    {"ArrowDown", ActionKind::Move, {0, 1}},
      {"ArrowLeft", ActionKind::Move, {-1, 0}},  {"ArrowRight", ActionKind::Move, {1, 0}},
      {" ", ActionKind::Attack, {0, -1}},        {"q", ActionKind::TurnLeft, {}},
      {"e", ActionKind::TurnRight, {}},          {".", ActionKind::DoNothing, {}},
  };
  if (!actions.is_array()) return std::nullopt;
  for (const Binding& b : kBindings) {
    if (b.key != key) continue;
    const json want = {action_kind_name(b.kind), b.offset.dx, b.offset.dy};
    for (size_t i = 0; i < actions.size(); ++i) {
      if (actions[i] == want) return static_cast<ActionIndex>(i);
    }
    return std::nullopt;
  }
  return std::nullopt;
}

std::string encode_line(const json& j) {
  auto dump = [](const json& v) { return v.dump(-1, ' ', false, json::error_handler_t::replace); };
  if (!j.is_object() || !j.contains("t")) return dump(j);
  // Record tag first, remaining keys sorted.
  json rest = j;
  rest.erase("t");
  std::string body = dump(rest);
  return "{\"t\":" + dump(j["t"]) + (rest.empty() ? "}" : "," + body.substr(1));
}

// ---------------------------------------------------------------- recorder

Recorder::Recorder(std::ostream& sink, const ReplayHeader& header) : sink_(&sink) {
  put(encode_line(header_to_json(header)));
}

void Recorder::put(const std::string& line) {
  sink_->write(line.data(), static_cast<std::streamsize>(line.size()));
  sink_->put('\n');
  if (!*sink_) fail(ErrorCode::kIo, "replay sink write failed");
}

void Recorder::frame(const Frame& f) {
  if (last_step_ && f.step <= *last_step_) fail(ErrorCode::kContract, "replay frame steps must increase");
  put(encode_line(frame_to_json(f)));
  last_step_ = f.step;
  ++frames_;
}

void Recorder::flush() {
  sink_->flush();
  if (!*sink_) fail(ErrorCode::kIo, "replay sink flush failed");
}

// ---------------------------------------------------------------- reader

Reader::Reader(std::istream& in) : in_(&in) {
  std::string line;
  if (!std::getline(in, line) || line.empty()) bad("empty replay file (no header line)");
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded()) bad("replay header line is not valid JSON");
  header_ = header_from_json(j);
}

bool Reader::next(Frame& out) {
  if (truncated_) return false;
  std::string line;
  if (!std::getline(*in_, line)) return false;
  ++line_;
  auto stop = [&](const std::string& why) {
    truncated_ = true;
    error_ = "line " + std::to_string(line_) + ": " + why + "; " + std::to_string(frames_) +
             " complete frame(s) before it";
    return false;
  };
  if (line.empty()) return in_->peek() == std::char_traits<char>::eof() ? false : stop("blank line");
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded()) return stop("incomplete or malformed record");
  try {
    Frame f = frame_from_json(j);
    if (last_step_ && f.step <= *last_step_) return stop("step " + std::to_string(f.step) + " does not increase");
    last_step_ = f.step;
    out = std::move(f);
  } catch (const Error& e) {
    return stop(e.what());
  }
  ++frames_;
  return true;
}

Summary summarize_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open replay '" + path + "'");
  Reader reader(in);
  Summary s;
  s.header = reader.header();
  Frame f;
  while (reader.next(f)) {
    if (s.frames == 0) s.first_step = f.step;
    s.last_step = f.step;
    s.final_populations = f.populations;
    ++s.frames;
  }
  s.truncated = reader.truncated();
  s.error = reader.error();
  return s;
}

json summary_to_json(const Summary& s) {
  json groups = json::array();
  for (size_t g = 0; g < s.header.groups.size(); ++g) {
    json entry = {{"name", s.header.groups[g].name}};
    entry["final_population"] = g < s.final_populations.size() ? json(s.final_populations[g]) : json(nullptr);
    groups.push_back(std::move(entry));
  }
  json j = {{"scenario", s.header.scenario}, {"seed", s.header.seed}, {"frames", s.frames},
            {"first_step", s.first_step}, {"last_step", s.last_step}, {"groups", std::move(groups)},
            {"truncated", s.truncated}};
  if (s.truncated) j["error"] = s.error;
  return j;
}

}  // namespace swarmgrid::replay

#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "doctest.h"
#include "helpers.hpp"
#include "swarmgrid/replay.hpp"
#include "swarmgrid/runner.hpp"
#include "swarmgrid/serve.hpp"
#include "ws_client.hpp"

using namespace swarmgrid;
using namespace swarmgrid::serve;
using sgtest::WsClient;
using nlohmann::json;

namespace {

// Pursuit on 8x8: predator 0 at (3,4) facing north, prey 1 right above it.
std::unique_ptr<Runner> face_off_runner() {
  ScenarioConfig c = builtin_scenario("pursuit", {8, {}, 0});
  c.groups[0].spawn = std::vector<Placement>{{{3, 4}, Direction::North}};
  c.groups[1].spawn = std::vector<Placement>{{{3, 3}, Direction::South}, {{6, 6}, Direction::South}};
  Environment env(c);
  auto policies = policies_for(env, {}, "noop");
  return std::make_unique<Runner>(std::move(env), std::move(policies), 0);
}

std::unique_ptr<Server> paused_live() {
  ServeOptions o;
  o.start_paused = true;
  return Server::live(face_off_runner(), o);
}

bool is_ack(const json& m, const std::string& cmd) { return m.value("t", "") == "ack" && m.value("cmd", "") == cmd; }

std::optional<json> reply(WsClient& c) {
  return c.read_until([](const json& m) { return m["t"] == "ack" || m["t"] == "error"; });
}

std::string write_replay(uint64_t steps) {
  Environment env(builtin_scenario("pursuit", {10, {3, 3}, 0}));
  Runner runner(env, policies_for(env, {}), 5);
  auto path = (std::filesystem::temp_directory_path() / "swarmgrid_serve_test.jsonl").string();
  std::ofstream out(path);
  run_episode(runner, steps, &out);
  return path;
}

}  // namespace

TEST_CASE("live: header then the current frame") {
  auto server = paused_live();
  WsClient c(server->port());
  auto header = c.read();
  REQUIRE(header);
  CHECK((*header)["t"] == "header");
  CHECK((*header)["source"] == "live");
  CHECK((*header)["width"] == 8);
  auto frame = c.read();
  REQUIRE(frame);
  CHECK((*frame)["t"] == "frame");
  CHECK((*frame)["step"] == 0);
  CHECK((*frame)["events"].empty());
}

TEST_CASE("live: take control and attack") {
  auto server = paused_live();
  WsClient c(server->port());
  auto header = c.read_type("header");
  REQUIRE(header);
  const json& actions = (*header)["types"][0]["actions"];
  auto attack = replay::key_action(actions, " ");
  REQUIRE(attack);

  c.control("take", {{"agent", 0}});
  auto r = reply(c);
  REQUIRE(r);
  CHECK(is_ack(*r, "take"));
  c.control("act", {{"agent", 0}, {"action", 1}});
  c.control("act", {{"agent", 0}, {"action", *attack}});  // latest wins
  c.control("step");
  auto frame = c.read_until([](const json& m) { return m["t"] == "frame" && m["step"] == 1; });
  REQUIRE(frame);
  CHECK((*frame)["events"] == json::parse(R"([["attack",0,1]])"));
  CHECK((*frame)["rewards"] == json::parse(R"([[0,1.0],[1,-1.0]])"));

  // Without a fresh action the controlled agent does nothing.
  c.control("step");
  frame = c.read_until([](const json& m) { return m["t"] == "frame" && m["step"] == 2; });
  REQUIRE(frame);
  CHECK((*frame)["events"].empty());
}

TEST_CASE("live: rejected commands leave the session running") {
  auto server = paused_live();
  WsClient c(server->port());
  c.read_type("frame");

  c.send_text("{oops");
  auto r = reply(c);
  REQUIRE(r);
  CHECK((*r)["t"] == "error");

  c.control("spawn", {{"group", "prey"}, {"x", 0}, {"y", 0}});
  r = reply(c);
  REQUIRE(r);
  CHECK((*r)["t"] == "error");
  CHECK((*r)["cmd"] == "spawn");

  c.control("act", {{"agent", 0}, {"action", 0}});
  r = reply(c);
  CHECK((*r)["t"] == "error");
  c.control("speed", {{"steps_per_second", 0}});
  CHECK((*reply(c))["t"] == "error");
  c.control("warp");
  CHECK((*reply(c))["t"] == "error");

  c.control("spawn", {{"group", "prey"}, {"x", 5}, {"y", 2}, {"dir", "E"}});
  r = reply(c);
  REQUIRE(r);
  CHECK(is_ack(*r, "spawn"));
  CHECK((*r)["agent"] == 3);

  c.control("kill", {{"agent", 3}});
  CHECK(is_ack(*reply(c), "kill"));
  c.control("kill", {{"agent", 3}});
  CHECK((*reply(c))["t"] == "error");

  c.control("step");
  auto frame = c.read_until([](const json& m) { return m["t"] == "frame" && m["step"] == 1; });
  REQUIRE(frame);
  CHECK((*frame)["populations"] == json::array({1, 2}));
}

TEST_CASE("live: control is per client") {
  auto server = paused_live();
  WsClient a(server->port()), b(server->port());
  a.read_type("frame");
  b.read_type("frame");
  a.control("take", {{"agent", 0}});
  CHECK(is_ack(*reply(a), "take"));
  b.control("take", {{"agent", 0}});
  CHECK((*reply(b))["t"] == "error");
  b.control("release", {{"agent", 0}});
  CHECK((*reply(b))["t"] == "error");
  a.control("release", {{"agent", 0}});
  CHECK(is_ack(*reply(a), "release"));
  b.control("take", {{"agent", 0}});
  CHECK(is_ack(*reply(b), "take"));
}

TEST_CASE("live: viewport culls frames") {
  auto server = paused_live();
  WsClient c(server->port());
  c.read_type("frame");
  c.control("viewport", {{"x0", 5}, {"y0", 5}, {"x1", 7}, {"y1", 7}});
  auto ack = c.read_type("ack");
  REQUIRE(ack);
  CHECK((*ack)["rect"] == json::array({5, 5, 7, 7}));
  auto frame = c.read_type("frame");
  REQUIRE(frame);
  CHECK((*frame)["viewport"] == json::array({5, 5, 7, 7}));
  REQUIRE((*frame)["agents"].size() == 1);
  CHECK((*frame)["agents"][0][0] == 2);
  CHECK((*frame)["populations"] == json::array({1, 2}));

  c.control("viewport");
  c.read_type("ack");
  frame = c.read_type("frame");
  CHECK((*frame)["agents"].size() == 3);
  CHECK_FALSE(frame->contains("viewport"));
}

TEST_CASE("live: pause, resume and speed") {
  ServeOptions o;
  o.steps_per_second = 200;
  o.max_steps = 30;
  auto server = Server::live(face_off_runner(), o);
  WsClient c(server->port());
  c.control("pause");
  auto r = reply(c);
  REQUIRE(r);
  CHECK(is_ack(*r, "pause"));
  // Drain whatever was in flight, then check nothing moves while paused.
  auto last = server->summary()["steps"].get<uint64_t>();
  std::this_thread::sleep_for(std::chrono::milliseconds(100));
  CHECK(server->summary()["steps"].get<uint64_t>() == last);
  c.control("step");
  CHECK(is_ack(*reply(c), "step"));
  auto f = c.read_until([&](const json& m) { return m["t"] == "frame" && m["step"] == last + 1; });
  CHECK(f);
  c.control("speed", {{"steps_per_second", 1000}});
  CHECK((*reply(c))["steps_per_second"] == 1000);
  c.control("resume");
  CHECK(server->wait_finished(std::chrono::seconds(10)));
  CHECK(server->summary()["steps"] == 30);
}

TEST_CASE("replay: header and every frame in order") {
  std::string path = write_replay(25);
  ServeOptions o;
  o.start_paused = true;
  o.steps_per_second = 1000;
  auto server = Server::replay(path, o);
  WsClient c(server->port());
  auto header = c.read();
  REQUIRE(header);
  CHECK((*header)["source"] == "replay");

  c.control("take", {{"agent", 0}});
  auto r = reply(c);
  REQUIRE(r);
  CHECK((*r)["t"] == "error");
  c.control("spawn", {{"group", 0}, {"x", 2}, {"y", 2}});
  CHECK((*reply(c))["t"] == "error");

  c.control("resume");
  std::ifstream in(path);
  replay::Reader reader(in);
  replay::Frame expect;
  int n = 0;
  while (reader.next(expect)) {
    auto f = c.read_type("frame");
    REQUIRE(f);
    CHECK(replay::frame_from_json(*f) == expect);
    ++n;
  }
  CHECK(n == 25);
  CHECK(server->wait_finished(std::chrono::seconds(5)));
  CHECK(server->summary()["frames"] == 25);
  server.reset();
  std::filesystem::remove(path);
}

TEST_CASE("live recording matches the replay file format") {
  std::ostringstream rec;
  ServeOptions o;
  o.steps_per_second = 1000;
  o.max_steps = 12;
  o.record = &rec;
  auto server = Server::live(face_off_runner(), o);
  REQUIRE(server->wait_finished(std::chrono::seconds(10)));
  server->stop();
  std::istringstream in(rec.str());
  replay::Reader reader(in);
  replay::Frame f;
  int n = 0;
  while (reader.next(f)) ++n;
  CHECK(n == 12);
  CHECK_FALSE(reader.truncated());
}

TEST_CASE("key bindings follow the canonical action table") {
  AgentTypeSpec t = sgtest::unit_type();
  Environment env(builtin_scenario("pursuit", {8, {1, 1}, 0}));
  env.reset(0);
  json header = replay::header_to_json(replay::make_header(env));
  const json& predator = header["types"][0]["actions"];
  const json& prey = header["types"][1]["actions"];
  using sgtest::action_index;
  CHECK(replay::key_action(predator, "ArrowUp") == action_index(t, ActionKind::Move, {0, -1}));
  CHECK(replay::key_action(predator, "ArrowUp") == 4u);
  CHECK(replay::key_action(predator, "ArrowDown") == action_index(t, ActionKind::Move, {0, 1}));
  CHECK(replay::key_action(predator, "ArrowLeft") == action_index(t, ActionKind::Move, {-1, 0}));
  CHECK(replay::key_action(predator, "ArrowRight") == action_index(t, ActionKind::Move, {1, 0}));
  CHECK(replay::key_action(predator, " ") == action_index(t, ActionKind::Attack, {0, -1}));
  CHECK(replay::key_action(predator, "q") == 1u);
  CHECK(replay::key_action(predator, "e") == 2u);
  CHECK(replay::key_action(predator, ".") == 0u);
  CHECK_FALSE(replay::key_action(prey, " ").has_value());  // prey cannot attack
  CHECK_FALSE(replay::key_action(predator, "x").has_value());
}

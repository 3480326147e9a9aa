#include <numeric>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"
#include "swarmgrid/env.hpp"

using namespace swarmgrid;
using sgtest::action_index;
using sgtest::error_of;

namespace {

std::vector<std::vector<ActionIndex>> idle(const Environment& env) {
  std::vector<std::vector<ActionIndex>> acts;
  for (GroupId g = 0; g < env.group_count(); ++g) acts.emplace_back(env.world().members(g).size(), kNoOp);
  return acts;
}

// Pursuit on an 8x8 map: one predator at (3,4) facing north, one prey above it.
ScenarioConfig face_off() {
  ScenarioScale s;
  s.map_size = 8;
  ScenarioConfig c = builtin_scenario("pursuit", s);
  c.groups[0].spawn = std::vector<Placement>{{{3, 4}, Direction::North}};
  c.groups[1].spawn = std::vector<Placement>{{{3, 3}, Direction::South}};
  return c;
}

std::optional<ErrorCode> load_error(const std::string& text) {
  return error_of([&] { Environment::load(text); });
}

}  // namespace

TEST_CASE("built-in scenarios") {
  ScenarioScale s{16, {4, 2}, 0};
  ScenarioConfig pursuit = builtin_scenario("pursuit", s);
  Environment env(pursuit);
  CHECK(env.group_count() == 2);
  CHECK(reward::same_structure(
      env.program(),
      reward::parse_program("symbol a: predator[any]\nsymbol b: prey[any]\nrule on attack(a,b) receiver a,b value 1,-1")));
  env.reset(1);
  CHECK(env.world().members(0).size() == 4);
  CHECK(env.world().members(1).size() == 2);

  ScenarioConfig battle = builtin_scenario("battle");
  CHECK(battle.groups.size() == 2);
  CHECK(battle.types.size() == 1);
  CHECK(battle.groups[0].type == battle.groups[1].type);

  ScenarioConfig gathering = builtin_scenario("gathering");
  REQUIRE(gathering.groups.size() == 2);
  CHECK(gathering.groups[0].name == "agents");
  CHECK(gathering.groups[1].name == "food");
  CHECK(gathering.types[1].speed == 0);

  CHECK(error_of([] { builtin_scenario("hide-and-seek"); }) == ErrorCode::kLookup);
  for (const auto& name : builtin_scenario_names()) {
    ScenarioConfig c = builtin_scenario(name);
    CHECK(scenario_to_json(parse_scenario(scenario_to_json(c))) == scenario_to_json(c));
  }
}

TEST_CASE("scenario errors") {
  auto doc = nlohmann::json::parse(scenario_to_json(builtin_scenario("pursuit", {8, {2, 2}, 0})));
  CHECK_FALSE(load_error(doc.dump()).has_value());

  auto bad_dsl = doc;
  bad_dsl["reward_program"] = "symbol a: wolves[any]\nrule on die(a) receiver a value 1";
  CHECK(load_error(bad_dsl.dump()) == ErrorCode::kValidation);

  auto crowded = doc;
  crowded["groups"][0]["spawn"]["count"] = 100;
  CHECK(load_error(crowded.dump()) == ErrorCode::kCapacity);

  auto several = doc;
  several["map"]["width"] = -1;
  several["types"][0]["max_hp"] = 0;
  several["bogus"] = 1;
  try {
    Environment::load(several.dump());
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(e.problems().size() >= 3);
    CHECK(e.problems()[0].rfind("$", 0) == 0);
  }
  CHECK(load_error("{not json").has_value());
}

TEST_CASE("reset determinism") {
  Environment env(builtin_scenario("pursuit", {16, {4, 2}, 0}));
  auto a = env.reset(7);
  auto b = env.reset(7);
  for (size_t g = 0; g < a.size(); ++g) {
    CHECK(a[g].ids == b[g].ids);
    CHECK(a[g].views == b[g].views);
    CHECK(a[g].features == b[g].features);
  }
  std::set<std::vector<float>> layouts;
  for (uint64_t seed = 0; seed < 10; ++seed) layouts.insert(env.reset(seed)[0].views);
  CHECK(layouts.size() == 10);
}

TEST_CASE("idle pursuit pays nothing") {
  Environment env(builtin_scenario("pursuit", {16, {4, 2}, 50}));
  env.reset(3);
  for (int s = 0; s < 10; ++s) {
    StepResult r = env.step(idle(env));
    CHECK_FALSE(r.done);
    for (const auto& g : r.groups)
      for (double v : g.rewards) CHECK(v == 0.0);
  }
}

TEST_CASE("predator attacking adjacent prey: +1 and -1") {
  Environment env(face_off());
  env.reset(0);
  auto acts = idle(env);
  acts[0][0] = action_index(env.world().type_of(0), ActionKind::Attack, {0, -1});
  StepResult r = env.step(acts);
  CHECK(r.groups[0].rewards == std::vector<double>{1.0});
  CHECK(r.groups[1].rewards == std::vector<double>{-1.0});
  CHECK(r.info.attacks == 1);
  CHECK(env.world().agent(0).last_reward == 1.0);
  CHECK(env.world().agent(0).last_action == acts[0][0]);
}

TEST_CASE("battle ends when an army is gone; done latches") {
  ScenarioConfig c = builtin_scenario("battle", {8, {1, 1}, 0});
  c.types[0].damage = 10.0;
  c.groups[0].spawn = std::vector<Placement>{{{3, 3}, Direction::East}};
  c.groups[1].spawn = std::vector<Placement>{{{4, 3}, Direction::West}};
  Environment env(c);
  env.reset(0);
  auto acts = idle(env);
  acts[0][0] = action_index(c.types[0], ActionKind::Attack, {0, -1});
  StepResult r = env.step(acts);
  CHECK(r.done);
  CHECK(r.info.populations == std::vector<size_t>{1, 0});
  CHECK(r.groups[1].obs.size() == 0);
  CHECK(r.groups[1].fallen == std::vector<AgentId>{1});
  CHECK(r.groups[1].fallen_rewards == std::vector<double>{-1.0});
  CHECK(r.groups[0].rewards == std::vector<double>{5.2});
  CHECK(error_of([&] { env.step(idle(env)); }) == ErrorCode::kState);
  env.reset(0);
  CHECK_FALSE(env.done());
}

TEST_CASE("bad action arrays leave the environment unchanged") {
  Environment env(builtin_scenario("pursuit", {12, {3, 3}, 0}));
  env.reset(5);
  World before = env.world();
  auto acts = idle(env);
  acts[0].pop_back();
  CHECK(error_of([&] { env.step(acts); }) == ErrorCode::kInvalidAction);
  acts = idle(env);
  acts[1][0] = 999;
  CHECK(error_of([&] { env.step(acts); }) == ErrorCode::kInvalidAction);
  CHECK(env.world() == before);
}

TEST_CASE("rewards equal the reward program output and align with ids") {
  Environment env(builtin_scenario("battle", {16, {12, 12}, 60}));
  env.reset(11);
  Rng pick(4);
  while (!env.done()) {
    auto before = env.observe();
    auto acts = idle(env);
    for (GroupId g = 0; g < acts.size(); ++g)
      for (auto& a : acts[g]) a = static_cast<ActionIndex>(pick.below(19));
    StepResult r = env.step(acts);
    double paid = 0.0, expect = 0.0;
    for (auto [id, v] : r.rewards) expect += v;
    for (GroupId g = 0; g < r.groups.size(); ++g) {
      const GroupStep& gs = r.groups[g];
      paid += std::accumulate(gs.rewards.begin(), gs.rewards.end(), 0.0);
      paid += std::accumulate(gs.fallen_rewards.begin(), gs.fallen_rewards.end(), 0.0);
      // survivors plus the fallen are exactly the previous rows
      std::vector<AgentId> ids = gs.obs.ids;
      ids.insert(ids.end(), gs.fallen.begin(), gs.fallen.end());
      std::sort(ids.begin(), ids.end());
      CHECK(ids == before[g].ids);
      for (size_t i = 0; i < gs.obs.size(); ++i) {
        auto it = r.rewards.find(gs.obs.ids[i]);
        CHECK(gs.rewards[i] == (it == r.rewards.end() ? 0.0 : it->second));
      }
    }
    CHECK(paid == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("episode determinism") {
  auto run = [] {
    Environment env(builtin_scenario("gathering", {12, {6, 20}, 40}));
    env.reset(9);
    Rng pick(1);
    std::vector<double> trace;
    while (!env.done()) {
      auto acts = idle(env);
      for (GroupId g = 0; g < acts.size(); ++g) {
        size_t n = action_count(env.world().type_of(g));
        for (auto& a : acts[g]) a = static_cast<ActionIndex>(pick.below(n));
      }
      StepResult r = env.step(acts);
      for (auto [id, v] : r.rewards) trace.push_back(id + v);
      trace.push_back(static_cast<double>(r.events.size()));
    }
    return std::make_pair(trace, env.world());
  };
  auto a = run(), b = run();
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
}

TEST_CASE("live edits") {
  Environment env(face_off());
  env.reset(0);
  AgentId id = env.spawn_agent(0, {5, 5}, Direction::West);
  CHECK(env.world().agent(id).group == 0);
  CHECK(error_of([&] { env.spawn_agent(0, {0, 0}, Direction::North); }) == ErrorCode::kPlacement);
  env.kill_agent(id);
  CHECK_FALSE(env.world().alive(id));
  CHECK(error_of([&] { env.kill_agent(id); }) == ErrorCode::kLookup);
}

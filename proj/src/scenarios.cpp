#include <string>

#include "swarmgrid/env.hpp"

namespace swarmgrid {

const char* const kPursuitProgram =
    "symbol a: predator[any]\n"
    "symbol b: prey[any]\n"
    "rule on attack(a, b) receiver a, b value 1, -1\n";

namespace {

const char* const kGatheringProgram =
    "symbol a: agents[any]\n"
    "symbol a2: agents[any]\n"
    "symbol f: food[any]\n"
    "# eating\n"
    "rule on attack(a, f) receiver a value 0.5\n"
    "rule on kill(a, f) receiver a value 5\n"
    "# fighting over the food\n"
    "rule on attack(a, a2) receiver a, a2 value 1, -5\n";

const char* const kBattleProgram =
    "symbol x: a[any]\n"
    "symbol y: b[any]\n"
    "rule on attack(x, y) receiver x value 0.2\n"
    "rule on attack(y, x) receiver y value 0.2\n"
    "rule on kill(x, y) receiver x value 5\n"
    "rule on kill(y, x) receiver y value 5\n"
    "rule on die(x) receiver x value -1\n"
    "rule on die(y) receiver y value -1\n";

uint32_t population(const ScenarioScale& scale, size_t i, uint32_t fallback) {
  return i < scale.populations.size() ? scale.populations[i] : fallback;
}

void check_populations(const ScenarioScale& scale, size_t groups, std::string_view name) {
  if (scale.populations.size() > groups) {
    fail(ErrorCode::kInvalidConfig, std::string(name) + " has " + std::to_string(groups) + " groups, got " +
                                        std::to_string(scale.populations.size()) + " populations");
  }
}

ScenarioConfig pursuit(const ScenarioScale& scale) {
  check_populations(scale, 2, "pursuit");
  ScenarioConfig c;
  c.name = "pursuit";
  c.width = c.height = scale.map_size > 0 ? scale.map_size : 32;
  c.walls = WallLayout::Border;
  AgentTypeSpec predator{"predator", 1, 1, 1, 4, 1, 2.0, 10.0, 0.0};
  AgentTypeSpec prey{"prey", 1, 1, 1, 4, 0, 0.0, 10.0, 0.5};
  c.types = {predator, prey};
  c.groups = {{"predator", "predator", population(scale, 0, 16)}, {"prey", "prey", population(scale, 1, 32)}};
  c.reward_program = kPursuitProgram;
  c.termination = {scale.max_steps > 0 ? scale.max_steps : 200, DoneWhen::Either, {"prey"}};
  return c;
}

ScenarioConfig gathering(const ScenarioScale& scale) {
  check_populations(scale, 2, "gathering");
  ScenarioConfig c;
  c.name = "gathering";
  c.width = c.height = scale.map_size > 0 ? scale.map_size : 32;
  c.walls = WallLayout::Border;
  AgentTypeSpec agent{"agent", 1, 1, 1, 4, 1, 3.0, 10.0, 0.0};
  AgentTypeSpec food{"food", 1, 1, 0, 0, 0, 0.0, 3.0, 0.0};
  c.types = {agent, food};
  c.groups = {{"agents", "agent", population(scale, 0, 20)}, {"food", "food", population(scale, 1, 80)}};
  c.reward_program = kGatheringProgram;
  c.termination = {scale.max_steps > 0 ? scale.max_steps : 200, DoneWhen::Either, {"agents", "food"}};
  return c;
}

// Two facing blocks of soldiers, one per side of the map.
std::vector<Placement> army(int32_t size, uint32_t n, bool left) {
  std::vector<Placement> out;
  const int32_t interior = size - 2;
  const int32_t rows = std::max(1, interior - 2);
  const int32_t cols = static_cast<int32_t>((n + rows - 1) / rows);
  const int32_t used_rows = static_cast<int32_t>((n + cols - 1) / std::max(cols, 1));
  const int32_t y0 = 1 + (interior - used_rows) / 2;
  const int32_t gap = 2;
  const int32_t mid = size / 2;
  for (uint32_t k = 0; k < n; ++k) {
    int32_t col = static_cast<int32_t>(k) / used_rows;
    int32_t row = static_cast<int32_t>(k) % used_rows;
    int32_t x = left ? mid - gap - 1 - col : mid + gap + col;
    out.push_back({{x, y0 + row}, left ? Direction::East : Direction::West});
  }
  return out;
}

ScenarioConfig battle(const ScenarioScale& scale) {
  check_populations(scale, 2, "battle");
  ScenarioConfig c;
  c.name = "battle";
  c.width = c.height = scale.map_size > 0 ? scale.map_size : 40;
  c.walls = WallLayout::Border;
  c.types = {AgentTypeSpec{"soldier", 1, 1, 1, 4, 1, 2.0, 10.0, 0.1}};
  uint32_t na = population(scale, 0, 64);
  uint32_t nb = population(scale, 1, 64);
  int32_t rows = std::max(1, c.height - 4);
  int32_t half_width = c.width / 2 - 3;
  if (static_cast<int64_t>(std::max(na, nb)) > static_cast<int64_t>(rows) * std::max(half_width, 0)) {
    fail(ErrorCode::kCapacity, "battle map of size " + std::to_string(c.width) + " cannot hold armies of " +
                                   std::to_string(na) + " and " + std::to_string(nb));
  }
  c.groups = {{"a", "soldier", army(c.width, na, true)}, {"b", "soldier", army(c.width, nb, false)}};
  c.reward_program = kBattleProgram;
  c.termination = {scale.max_steps > 0 ? scale.max_steps : 300, DoneWhen::Either, {"a", "b"}};
  return c;
}

}  // namespace

std::vector<std::string> builtin_scenario_names() { return {"pursuit", "gathering", "battle"}; }

ScenarioConfig builtin_scenario(std::string_view name, const ScenarioScale& scale) {
  if (name == "pursuit") return pursuit(scale);
  if (name == "gathering") return gathering(scale);
  if (name == "battle") return battle(scale);
  fail(ErrorCode::kLookup, "unknown built-in scenario '" + std::string(name) + "'");
}

}  // namespace swarmgrid

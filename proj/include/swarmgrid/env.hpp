#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "swarmgrid/engine.hpp"
#include "swarmgrid/observation.hpp"
#include "swarmgrid/reward_lang.hpp"
#include "swarmgrid/world.hpp"

namespace swarmgrid {

enum class WallLayout : uint8_t { None, Border, Explicit };
enum class DoneWhen : uint8_t { MaxSteps, GroupExtinct, Either };

struct GroupConfig {
  std::string name;
  std::string type;
  // Random count, or explicit placements.
  std::variant<uint32_t, std::vector<Placement>> spawn = uint32_t{0};
};

struct Termination {
  uint64_t max_steps = 200;
  DoneWhen done_when = DoneWhen::MaxSteps;
  std::vector<std::string> extinct;  // any of these groups empty ends the episode
};

struct ScenarioConfig {
  std::string name = "custom";
  int32_t width = 0;
  int32_t height = 0;
  WallLayout walls = WallLayout::None;
  std::vector<Position> wall_cells;  // Explicit only
  std::vector<AgentTypeSpec> types;
  std::vector<GroupConfig> groups;
  std::string reward_program;
  Termination termination;
  ObservationConfig observation;
  uint64_t seed = 0;
};

/// Config failure with one entry per problem, each prefixed by a JSON path.
class ConfigError : public Error {
 public:
  ConfigError(ErrorCode code, std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// Parses and cross-validates a scenario document, including the embedded
/// reward program and spawn feasibility.
ScenarioConfig parse_scenario(std::string_view json_text);
std::string scenario_to_json(const ScenarioConfig& config);

struct ScenarioScale {
  int32_t map_size = 0;               // 0: scenario default
  std::vector<uint32_t> populations;  // per group in scenario order; empty: defaults
  uint64_t max_steps = 0;             // 0: scenario default
};

/// "pursuit", "gathering" or "battle". Throws Error(kLookup) for other names.
ScenarioConfig builtin_scenario(std::string_view name, const ScenarioScale& scale = {});
std::vector<std::string> builtin_scenario_names();

/// Exact reward program of the pursuit scenario.
extern const char* const kPursuitProgram;

struct GroupStep {
  ObservationBatch obs;
  std::vector<double> rewards;  // aligned with obs.ids
  std::vector<AgentId> fallen;  // died this step; no observation row
  std::vector<double> fallen_rewards;
};

struct StepInfo {
  uint64_t step_count = 0;
  std::vector<size_t> populations;
  size_t attacks = 0;
  size_t kills = 0;
  size_t deaths = 0;
  size_t collisions = 0;
};

struct StepResult {
  std::vector<GroupStep> groups;
  bool done = false;
  StepInfo info;
  EventLog events;
  reward::Rewards rewards;  // raw reward-program output
};

/// One episode-level environment over one world.
class Environment {
 public:
  explicit Environment(ScenarioConfig config);
  static Environment load(std::string_view json_text) { return Environment(parse_scenario(json_text)); }

  const ScenarioConfig& config() const { return config_; }
  const reward::Program& program() const { return program_; }
  bool has_world() const { return world_.has_value(); }
  const World& world() const;
  size_t group_count() const { return config_.groups.size(); }
  GroupId group_by_name(std::string_view name) const;
  ObservationShape shape(GroupId g) const;

  std::vector<ObservationBatch> reset(uint64_t seed);
  std::vector<ObservationBatch> observe() const;

  /// actions[g][i] addresses the i-th living member (ascending id) of group g.
  /// Throws Error(kInvalidAction) on mismatch, Error(kState) once done; the
  /// environment is unchanged on error.
  StepResult step(std::span<const std::vector<ActionIndex>> actions);
  /// Same as step() with an explicit per-agent action list.
  StepResult step_agents(std::span<const AgentAction> actions);

  bool done() const { return done_; }
  uint64_t episode_seed() const { return seed_; }

  // Between-step manipulation for live sessions.
  AgentId spawn_agent(GroupId group, Position pos, Direction dir);
  void kill_agent(AgentId id);

 private:
  World& mutable_world();
  bool check_done() const;

  ScenarioConfig config_;
  reward::Program program_;
  std::optional<World> world_;
  uint64_t seed_ = 0;
  bool done_ = false;
};

}  // namespace swarmgrid

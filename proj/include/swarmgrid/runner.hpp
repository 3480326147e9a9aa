#pragma once

#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "swarmgrid/baselines.hpp"
#include "swarmgrid/env.hpp"

namespace swarmgrid {

/// Resolves a built-in scenario name ("pursuit", "gathering", "battle",
/// "tiny-pursuit") or a path to a scenario JSON file.
ScenarioConfig resolve_scenario(const std::string& name_or_path);

/// One policy per group from "group=spec" assignments; unassigned groups get
/// `fallback`. Throws Error(kLookup) for unknown groups and Error(kContract)
/// when a checkpoint does not fit its group's observation.
std::vector<std::unique_ptr<dqn::Policy>> policies_for(const Environment& env,
                                                       const std::map<std::string, std::string>& specs,
                                                       const std::string& fallback = "random");

/// Drives one episode: every group acts through its policy, and agents listed
/// in the override map act as told instead.
class Runner {
 public:
  Runner(Environment env, std::vector<std::unique_ptr<dqn::Policy>> policies, uint64_t seed);

  const Environment& env() const { return env_; }
  bool done() const { return env_.done(); }
  uint64_t steps() const { return steps_; }

  StepResult advance(const std::map<AgentId, ActionIndex>& overrides = {});

  AgentId spawn(GroupId group, Position pos, Direction dir);
  void kill(AgentId id);

  /// scenario, seed, steps, done and per group: policy, start/final
  /// population, total reward and mean reward per starting member.
  nlohmann::json summary() const;

 private:
  Environment env_;
  std::vector<std::unique_ptr<dqn::Policy>> policies_;
  Rng rng_;
  std::vector<ObservationBatch> obs_;
  bool stale_ = false;
  uint64_t seed_;
  uint64_t steps_ = 0;
  std::vector<size_t> start_population_;
  std::vector<double> totals_;
};

/// Runs until the episode ends or `max_steps` steps (0 = no cap), recording
/// to `record` when given. Returns the summary.
nlohmann::json run_episode(Runner& runner, uint64_t max_steps, std::ostream* record);

}  // namespace swarmgrid

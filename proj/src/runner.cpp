#include "swarmgrid/runner.hpp"

#include <fstream>
#include <sstream>

#include "swarmgrid/error.hpp"
#include "swarmgrid/replay.hpp"

namespace swarmgrid {

ScenarioConfig resolve_scenario(const std::string& name_or_path) {
  if (name_or_path == "tiny-pursuit") return dqn::tiny_pursuit_scenario();
  for (const auto& n : builtin_scenario_names()) {
    if (n == name_or_path) return builtin_scenario(n, {});
  }
  std::ifstream in(name_or_path, std::ios::binary);
  if (!in) {
    fail(ErrorCode::kLookup, "'" + name_or_path + "' is neither a built-in scenario nor a readable file");
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::vector<std::unique_ptr<dqn::Policy>> policies_for(const Environment& env,
                                                       const std::map<std::string, std::string>& specs,
                                                       const std::string& fallback) {
  for (const auto& [group, spec] : specs) env.group_by_name(group);
  std::vector<std::unique_ptr<dqn::Policy>> out;
  for (size_t g = 0; g < env.group_count(); ++g) {
    const std::string& name = env.config().groups[g].name;
    auto it = specs.find(name);
    auto policy = dqn::make_policy(it == specs.end() ? fallback : it->second);
    if (auto* q = dynamic_cast<dqn::QPolicy*>(policy.get())) {
      ObservationShape s = env.shape(static_cast<GroupId>(g));
      const auto& net = *q->network();
      if (static_cast<int64_t>(s.input_size()) != net.input_size() || s.n_actions != net.action_count()) {
        fail(ErrorCode::kContract, "checkpoint '" + it->second + "' expects input " +
                                       std::to_string(net.input_size()) + " and " +
                                       std::to_string(net.action_count()) + " actions; group '" + name + "' has " +
                                       std::to_string(s.input_size()) + " and " + std::to_string(s.n_actions));
      }
    }
    out.push_back(std::move(policy));
  }
  return out;
}

Runner::Runner(Environment env, std::vector<std::unique_ptr<dqn::Policy>> policies, uint64_t seed)
    : env_(std::move(env)), policies_(std::move(policies)), rng_(Rng(seed ^ 0x9e3779b97f4a7c15ULL).split()),
      seed_(seed) {
  if (policies_.size() != env_.group_count()) {
    fail(ErrorCode::kContract, "need one policy per group (" + std::to_string(env_.group_count()) + "), got " +
                                   std::to_string(policies_.size()));
  }
  obs_ = env_.reset(seed);
  for (size_t g = 0; g < env_.group_count(); ++g) {
    start_population_.push_back(env_.world().members(static_cast<GroupId>(g)).size());
  }
  totals_.assign(env_.group_count(), 0.0);
}

StepResult Runner::advance(const std::map<AgentId, ActionIndex>& overrides) {
  if (stale_) {
    obs_ = env_.observe();
    stale_ = false;
  }
  const World& w = env_.world();
  std::vector<AgentAction> actions;
  actions.reserve(w.population());
  for (size_t g = 0; g < env_.group_count(); ++g) {
    auto gid = static_cast<GroupId>(g);
    auto chosen = policies_[g]->act(w, gid, obs_[g], rng_);
    auto members = w.members(gid);
    for (size_t i = 0; i < members.size(); ++i) {
      auto o = overrides.find(members[i]);
      actions.push_back({members[i], o != overrides.end() ? o->second : chosen[i]});
    }
  }
  StepResult res = env_.step_agents(actions);
  ++steps_;
  for (size_t g = 0; g < res.groups.size(); ++g) {
    for (double r : res.groups[g].rewards) totals_[g] += r;
    for (double r : res.groups[g].fallen_rewards) totals_[g] += r;
  }
  obs_.clear();
  for (const auto& gs : res.groups) obs_.push_back(gs.obs);
  return res;
}

AgentId Runner::spawn(GroupId group, Position pos, Direction dir) {
  AgentId id = env_.spawn_agent(group, pos, dir);
  stale_ = true;
  return id;
}

void Runner::kill(AgentId id) {
  env_.kill_agent(id);
  stale_ = true;
}

nlohmann::json Runner::summary() const {
  nlohmann::json groups = nlohmann::json::array();
  for (size_t g = 0; g < env_.group_count(); ++g) {
    const size_t start = start_population_[g];
    groups.push_back({{"name", env_.config().groups[g].name},
                      {"policy", policies_[g]->name()},
                      {"start_population", start},
                      {"final_population", env_.world().members(static_cast<GroupId>(g)).size()},
                      {"total_reward", totals_[g]},
                      {"mean_reward", start ? totals_[g] / static_cast<double>(start) : 0.0}});
  }
  return {{"scenario", env_.config().name}, {"seed", seed_}, {"steps", steps_}, {"done", env_.done()},
          {"groups", std::move(groups)}};
}

nlohmann::json run_episode(Runner& runner, uint64_t max_steps, std::ostream* record) {
  std::unique_ptr<replay::Recorder> rec;
  if (record) rec = std::make_unique<replay::Recorder>(*record, replay::make_header(runner.env()));
  while (!runner.done() && (max_steps == 0 || runner.steps() < max_steps)) {
    StepResult res = runner.advance();
    if (rec) rec->frame(replay::make_frame(runner.env().world(), &res));
  }
  if (rec) rec->flush();
  return runner.summary();
}

}  // namespace swarmgrid

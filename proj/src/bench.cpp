#include "swarmgrid/bench.hpp"

#include <sys/resource.h>

#include <chrono>

#include "swarmgrid/engine.hpp"
#include "swarmgrid/error.hpp"
#include "swarmgrid/observation.hpp"

namespace swarmgrid {

uint64_t peak_rss_bytes() {
  rusage u{};
  getrusage(RUSAGE_SELF, &u);
  return static_cast<uint64_t>(u.ru_maxrss) * 1024;  // Linux reports KiB
}

BenchResult run_bench(const BenchOptions& opts) {
  using clock = std::chrono::steady_clock;
  if (opts.map < 1) fail(ErrorCode::kInvalidConfig, "bench map size must be positive");
  const uint64_t cells = static_cast<uint64_t>(opts.map) * static_cast<uint64_t>(opts.map);
  if (opts.agents > cells) {
    fail(ErrorCode::kCapacity, std::to_string(opts.agents) + " agents cannot fit on a " + std::to_string(opts.map) +
                                   "x" + std::to_string(opts.map) + " map (" + std::to_string(cells) + " cells)");
  }
  BenchResult r;
  auto t0 = clock::now();
  World world(opts.map, opts.map, opts.seed);
  AgentTypeSpec spec;
  spec.name = "unit";
  spec.view_range = opts.view_range;
  spec.step_recover = 0.1;
  TypeId t = world.register_agent_type(spec);
  GroupId red = world.create_group(t, "red");
  GroupId blue = world.create_group(t, "blue");
  world.spawn(red, RandomCount{opts.agents - opts.agents / 2});
  world.spawn(blue, RandomCount{opts.agents / 2});
  r.agents = opts.agents;
  r.spawn_seconds = std::chrono::duration<double>(clock::now() - t0).count();

  const auto n_actions = static_cast<uint64_t>(action_count(spec));
  Rng policy_rng = Rng(opts.seed).split();
  ObservationConfig ocfg;
  std::vector<AgentAction> actions;
  size_t sink = 0;
  auto t1 = clock::now();
  for (uint64_t s = 0; s < opts.steps; ++s) {
    if (opts.observe) {
      for (GroupId g : {red, blue}) sink += observe_group(world, g, ocfg).views.size();
    }
    actions.clear();
    for (const Agent& a : world.agents()) {
      actions.push_back({a.id, static_cast<ActionIndex>(policy_rng.below(n_actions))});
    }
    step(world, actions);
  }
  r.seconds = std::chrono::duration<double>(clock::now() - t1).count();
  r.steps = opts.steps;
  r.steps_per_second = r.seconds > 0.0 ? static_cast<double>(opts.steps) / r.seconds : 0.0;
  r.peak_rss_bytes = peak_rss_bytes();
  (void)sink;
  return r;
}

nlohmann::json bench_to_json(const BenchOptions& opts, const BenchResult& r) {
  return {{"agents", r.agents},
          {"map", opts.map},
          {"steps", r.steps},
          {"seed", opts.seed},
          {"observe", opts.observe},
          {"spawn_seconds", r.spawn_seconds},
          {"seconds", r.seconds},
          {"steps_per_second", r.steps_per_second},
          {"peak_rss_bytes", r.peak_rss_bytes}};
}

}  // namespace swarmgrid

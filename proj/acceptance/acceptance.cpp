// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "../tests/dsl_fuzz.hpp"
#include "../tests/grad_check.hpp"
#include "swarmgrid/baselines.hpp"
#include "swarmgrid/bench.hpp"
#include "swarmgrid/engine.hpp"
#include "swarmgrid/env.hpp"
#include "swarmgrid/observation.hpp"

using namespace swarmgrid;

namespace {

// Thresholds.
constexpr uint32_t kBenchAgents = 100'000;
constexpr int32_t kBenchMap = 1024;
constexpr uint64_t kBenchSteps = 50;
constexpr double kMinStepsPerSecond = 10.0;
constexpr double kMinStepsPerSecondObs = 2.0;
constexpr uint64_t kMaxPeakBytes = 1ull << 30;
constexpr int kFuzzCases = 1000;
constexpr int kGradTrials = 100;
constexpr double kGradTolerance = 1e-4;
constexpr double kLearningRatio = 3.0;
constexpr uint32_t kEvalEpisodes = 100;
constexpr int kInvariantSteps = 10'000;
constexpr double kHpTolerance = 1e-9;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// ------------------------------------------------------------ 1 throughput

Verdict throughput() {
  BenchOptions o;
  o.agents = kBenchAgents;
  o.map = kBenchMap;
  o.steps = kBenchSteps;
  o.seed = 1;
  BenchResult plain = run_bench(o);
  o.observe = true;
  o.view_range = 3;
  BenchResult obs = run_bench(o);
  uint64_t peak = std::max(plain.peak_rss_bytes, obs.peak_rss_bytes);
  bool ok = plain.steps_per_second >= kMinStepsPerSecond && obs.steps_per_second >= kMinStepsPerSecondObs &&
            peak < kMaxPeakBytes;
  return {ok, fmt("%.1f steps/s without obs, %.2f steps/s with obs, peak %.0f MiB", plain.steps_per_second,
                  obs.steps_per_second, static_cast<double>(peak) / (1 << 20))};
}

// ------------------------------------------------------------ 2 replay determinism

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Verdict replay_determinism() {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / ("swarmgrid_accept_" + std::to_string(getpid()));
  fs::create_directories(dir);
  std::string files[2];
  for (int i = 0; i < 2; ++i) {
    fs::path out = dir / ("run" + std::to_string(i) + ".jsonl");
    std::string cmd = "'" SWARMGRID_CLI "' run pursuit --seed 7 --steps 200 --record '" + out.string() + "' >/dev/null";
    int status = std::system(cmd.c_str());
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
      fs::remove_all(dir);
      return {false, "cli run failed"};
    }
    files[i] = slurp(out);
  }
  fs::remove_all(dir);
  size_t lines = std::count(files[0].begin(), files[0].end(), '\n');
  bool ok = !files[0].empty() && files[0] == files[1];
  return {ok, fmt("%.0f bytes, %.0f lines, identical=%.0f", static_cast<double>(files[0].size()),
                  static_cast<double>(lines), ok ? 1 : 0)};
}

// ------------------------------------------------------------ 3 reward oracle

Verdict reward_oracle() {
  Rng rng(2024);
  int equal = 0;
  for (int i = 0; i < kFuzzCases; ++i) {
    auto fc = sgtest::fuzz_case(rng);
    if (reward::evaluate(fc.program, fc.log, fc.snapshot) ==
        reward::brute_force_evaluate(fc.program, fc.log, fc.snapshot))
      ++equal;
  }
  return {equal == kFuzzCases, fmt("%.0f/%.0f programs equal to brute force", equal, kFuzzCases)};
}

// ------------------------------------------------------------ 4 pursuit rewards

ActionIndex action_index(const AgentTypeSpec& spec, ActionKind kind, Offset off = {}) {
  auto acts = action_space(spec);
  for (size_t i = 0; i < acts.size(); ++i)
    if (acts[i].kind == kind && acts[i].offset == off) return static_cast<ActionIndex>(i);
  return kNoOp;
}

struct PursuitCase {
  const char* name;
  std::vector<Placement> predators;
  std::vector<Placement> prey;
  std::vector<ActionIndex> predator_actions;
  std::vector<double> predator_rewards;
  std::vector<double> prey_rewards;
};

Verdict pursuit_rewards() {
  ScenarioScale scale;
  scale.map_size = 10;
  const AgentTypeSpec predator = builtin_scenario("pursuit", scale).types[0];
  auto attack = [&](Offset o) { return action_index(predator, ActionKind::Attack, o); };
  auto move = [&](Offset o) { return action_index(predator, ActionKind::Move, o); };
  using D = Direction;
  const std::vector<PursuitCase> cases = {
      {"ahead, facing north", {{{4, 4}, D::North}}, {{{4, 3}, D::North}}, {attack({0, -1})}, {1}, {-1}},
      {"ahead, facing east", {{{4, 4}, D::East}}, {{{5, 4}, D::North}}, {attack({0, -1})}, {1}, {-1}},
      {"ahead, facing south", {{{4, 4}, D::South}}, {{{4, 5}, D::North}}, {attack({0, -1})}, {1}, {-1}},
      {"ahead, facing west", {{{4, 4}, D::West}}, {{{3, 4}, D::North}}, {attack({0, -1})}, {1}, {-1}},
      {"diagonal", {{{4, 4}, D::North}}, {{{5, 5}, D::North}}, {attack({1, 1})}, {1}, {-1}},
      {"adjacent but idle", {{{4, 4}, D::North}}, {{{4, 3}, D::North}}, {kNoOp}, {0}, {0}},
      {"attack into empty cell", {{{4, 4}, D::North}}, {{{4, 3}, D::North}}, {attack({0, 1})}, {0}, {0}},
      {"move next to prey", {{{4, 5}, D::North}}, {{{4, 3}, D::North}}, {move({0, -1})}, {0}, {0}},
      {"two predators, one prey",
       {{{4, 4}, D::North}, {{5, 3}, D::West}},
       {{{4, 3}, D::North}},
       {attack({0, -1}), attack({0, -1})},
       {1, 1},
       {-2}},
      {"one predator, one of two prey hit",
       {{{4, 4}, D::North}},
       {{{4, 3}, D::North}, {{3, 4}, D::North}},
       {attack({-1, 0})},
       {1},
       {0, -1}},
  };
  int good = 0;
  std::string failed;
  for (const auto& pc : cases) {
    ScenarioConfig cfg = builtin_scenario("pursuit", scale);
    cfg.groups[0].spawn = pc.predators;
    cfg.groups[1].spawn = pc.prey;
    Environment env(cfg);
    env.reset(0);
    std::vector<std::vector<ActionIndex>> acts = {pc.predator_actions, std::vector<ActionIndex>(pc.prey.size(), kNoOp)};
    StepResult r = env.step(acts);
    if (r.groups[0].rewards == pc.predator_rewards && r.groups[1].rewards == pc.prey_rewards) {
      ++good;
    } else {
      failed += std::string(failed.empty() ? "; failed: " : ", ") + pc.name;
    }
  }
  return {good == static_cast<int>(cases.size()),
          fmt("%.0f/%.0f crafted cases exact", good, static_cast<double>(cases.size())) + failed};
}

// ------------------------------------------------------------ 5 gradients

Verdict gradients() {
  double worst = 0.0;
  for (int seed = 0; seed < kGradTrials; ++seed) worst = std::max(worst, sgtest::gradient_check_trial(seed));
  return {worst <= kGradTolerance, fmt("worst relative error %.2e over %.0f trials", worst, kGradTrials)};
}

// ------------------------------------------------------------ 6 learning

Verdict learning() {
  const ScenarioConfig cfg = dqn::tiny_pursuit_scenario();
  Environment env(cfg);
  bool ok = true;
  std::string detail;
  for (uint64_t seed = 1; seed <= 3; ++seed) {
    dqn::TrainConfig tc = dqn::tiny_pursuit_train_config(seed);
    dqn::TrainResult res = dqn::train(env, 0, tc);
    auto opponent = dqn::scripted_policy(tc.opponent);
    auto random = dqn::scripted_policy("random");
    dqn::QPolicy learner(std::make_shared<const dqn::QNetwork>(res.params), tc.eval_epsilon);
    const uint64_t eval_seed = 1'000'000 + seed;
    double base = dqn::evaluate_policy(env, 0, *random, *opponent, kEvalEpisodes, eval_seed);
    double trained = dqn::evaluate_policy(env, 0, learner, *opponent, kEvalEpisodes, eval_seed);
    bool seed_ok = !res.diverged && trained >= kLearningRatio * base && trained > 0.0;
    ok = ok && seed_ok;
    detail += std::string(detail.empty() ? "" : ", ") + fmt("seed %.0f: random %.3f", static_cast<double>(seed), base) +
              fmt(" trained %.3f", trained);
  }
  return {ok, detail};
}

// ------------------------------------------------------------ 7 observation goldens

using Grid = std::vector<std::vector<float>>;

Grid channel(const Observation& o, int ch) {
  Grid g(o.shape.height, std::vector<float>(o.shape.width));
  for (int r = 0; r < o.shape.height; ++r)
    for (int c = 0; c < o.shape.width; ++c)
      g[r][c] = o.view[(static_cast<size_t>(ch) * o.shape.height + r) * o.shape.width + c];
  return g;
}

AgentTypeSpec golden_type(int32_t view_range) {
  AgentTypeSpec t;
  t.name = "unit";
  t.view_range = view_range;
  t.damage = 1.0;
  t.max_hp = 10.0;
  return t;
}

bool expect(const Observation& o, const std::vector<Grid>& want) {
  if (o.shape.channels != static_cast<int32_t>(want.size())) return false;
  for (size_t ch = 0; ch < want.size(); ++ch)
    if (channel(o, static_cast<int>(ch)) != want[ch]) return false;
  return true;
}

// Facing east: wall ahead, enemy two cells to the left at half hp.
bool golden_rotation() {
  World w(9, 9, 1);
  w.create_group(w.register_agent_type(golden_type(2)), "a");
  w.create_group(0, "b");
  std::vector<Position> wall{{5, 4}};
  w.set_walls(wall);
  AgentId me = w.spawn(0, ExplicitPositions{{{{4, 4}, Direction::East}}}).front();
  AgentId foe = w.spawn(1, ExplicitPositions{{{{4, 2}, Direction::South}}}).front();
  w.mutable_agent(foe).hp = 5.0;
  const Grid z(5, std::vector<float>(5, 0.0f));
  Grid walls = z, own = z, enemy = z, enemy_hp = z;
  walls[1][2] = 1;
  own[2][2] = 1;
  enemy[2][0] = 1;
  enemy_hp[2][0] = 0.5f;
  return expect(observe_agent(w, me, {}), {walls, own, own, enemy, enemy_hp});
}

// Corner agent: everything off the map reads as wall.
bool golden_boundary() {
  World w(8, 8, 1);
  w.create_group(w.register_agent_type(golden_type(2)), "a");
  w.create_group(0, "b");
  AgentId me = w.spawn(0, ExplicitPositions{{{{0, 0}, Direction::North}}}).front();
  const Grid z(5, std::vector<float>(5, 0.0f));
  Grid walls = {{1, 1, 1, 1, 1}, {1, 1, 1, 1, 1}, {1, 1, 0, 0, 0}, {1, 1, 0, 0, 0}, {1, 1, 0, 0, 0}};
  Grid own = z;
  own[2][2] = 1;
  return expect(observe_agent(w, me, {}), {walls, own, own, z, z});
}

// Three groups, facing west: ally to the right, group b ahead at quarter hp,
// group c behind-left, wall ahead-left.
bool golden_multi_group() {
  World w(7, 7, 1);
  w.create_group(w.register_agent_type(golden_type(1)), "a");
  w.create_group(0, "b");
  w.create_group(0, "c");
  std::vector<Position> wall{{2, 4}};
  w.set_walls(wall);
  AgentId me = w.spawn(0, ExplicitPositions{{{{3, 3}, Direction::West}, {{3, 2}, Direction::North}}}).front();
  AgentId b = w.spawn(1, ExplicitPositions{{{{2, 3}, Direction::East}}}).front();
  w.spawn(2, ExplicitPositions{{{{4, 4}, Direction::North}}});
  w.mutable_agent(b).hp = 2.5;
  const Grid walls = {{1, 0, 0}, {0, 0, 0}, {0, 0, 0}};
  const Grid a = {{0, 0, 0}, {0, 1, 1}, {0, 0, 0}};
  const Grid bp = {{0, 1, 0}, {0, 0, 0}, {0, 0, 0}};
  const Grid bh = {{0, 0.25f, 0}, {0, 0, 0}, {0, 0, 0}};
  const Grid c = {{0, 0, 0}, {0, 0, 0}, {1, 0, 0}};
  return expect(observe_agent(w, me, {}), {walls, a, a, bp, bh, c, c});
}

Verdict observation_goldens() {
  bool r = golden_rotation(), b = golden_boundary(), m = golden_multi_group();
  return {r && b && m, fmt("rotation=%.0f boundary=%.0f multi-group=%.0f", r, b, m)};
}

// ------------------------------------------------------------ 8 engine invariants

int chebyshev(Position a, Position b) { return std::max(std::abs(a.x - b.x), std::abs(a.y - b.y)); }

struct Tally {
  long occupancy = 0, hp = 0, locality = 0, order = 0;
  long attacks = 0, deaths = 0;
  long total() const { return occupancy + hp + locality + order; }
};

void check_step(const World& before, const World& after, const StepOutcome& out, Tally& bad) {
  auto occ = after.occupancy();
  if (std::vector<uint32_t>(occ.begin(), occ.end()) != after.rebuild_occupancy()) ++bad.occupancy;

  // Phase order in the log: attacks, then collisions, then deaths with kills.
  int phase = 0;
  for (const Event& e : out.events) {
    int p = e.kind == EventKind::Attack ? 0 : e.kind == EventKind::Collide ? 1 : 2;
    if (p < phase) ++bad.order;
    phase = std::max(phase, p);
  }

  std::map<AgentId, double> damage;
  for (const Event& e : out.events) {
    if (e.kind != EventKind::Attack) continue;
    const Agent& actor = before.agent(e.actor);
    const Agent& target = before.agent(e.target);
    ++bad.attacks;
    if (chebyshev(actor.pos, target.pos) > before.type_of(actor.group).attack_range) ++bad.locality;
    damage[e.target] += before.type_of(actor.group).damage;
  }

  for (const Agent& a : before.agents()) {
    const AgentTypeSpec& t = before.type_of(a.group);
    auto hit = damage.find(a.id);
    double dmg = hit == damage.end() ? 0.0 : hit->second;
    const Agent* now = after.find(a.id);
    if (a.hp - dmg <= 0.0) {
      // Killed in the attack phase: gone, and removed where it stood.
      auto f = std::find_if(out.fallen.begin(), out.fallen.end(), [&](const Agent& x) { return x.id == a.id; });
      ++bad.deaths;
      if (now || f == out.fallen.end() || f->pos != a.pos || f->dir != a.dir) ++bad.order;
      continue;
    }
    if (!now) {
      ++bad.order;
      continue;
    }
    double want = dmg > 0.0 ? a.hp - dmg : std::min(t.max_hp, a.hp + t.step_recover);
    if (std::abs(now->hp - want) > kHpTolerance || now->hp <= 0.0 || now->hp > t.max_hp) ++bad.hp;
  }
}

Verdict engine_invariants() {
  Tally bad;
  int steps = 0;
  Rng pick(77);
  for (uint64_t episode = 0; steps < kInvariantSteps; ++episode) {
    World w(16, 16, episode);
    AgentTypeSpec fast{"fast", 1, 1, 2, 2, 1, 2.0, 6.0, 0.25};
    AgentTypeSpec heavy{"heavy", 1, 1, 1, 2, 2, 3.0, 9.0, 0.5};
    w.create_group(w.register_agent_type(fast), "a");
    w.create_group(w.register_agent_type(heavy), "b");
    std::vector<Position> walls;
    for (int i = 0; i < 12; ++i)
      walls.push_back({static_cast<int32_t>(pick.below(16)), static_cast<int32_t>(pick.below(16))});
    w.set_walls(walls);
    w.spawn(0, RandomCount{30});
    w.spawn(1, RandomCount{30});
    for (int s = 0; s < 250 && steps < kInvariantSteps && w.population() > 0; ++s, ++steps) {
      World before = w;
      std::vector<AgentAction> acts;
      for (const Agent& a : w.agents())
        acts.push_back({a.id, static_cast<ActionIndex>(pick.below(action_count(w.type_of(a.group))))});
      StepOutcome out = step(w, acts);
      check_step(before, w, out, bad);
    }
  }
  return {bad.total() == 0 && bad.attacks > 0 && bad.deaths > 0,
          fmt("%.0f steps, %.0f attacks, %.0f deaths", steps, static_cast<double>(bad.attacks),
              static_cast<double>(bad.deaths)) + fmt("; violations: occupancy %.0f, hp %.0f",
                                static_cast<double>(bad.occupancy), static_cast<double>(bad.hp)) +
                                fmt(", locality %.0f, phase order %.0f", static_cast<double>(bad.locality),
                                    static_cast<double>(bad.order))};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria = {
      {"throughput", throughput},
      {"replay determinism", replay_determinism},
      {"reward oracle", reward_oracle},
      {"pursuit rewards", pursuit_rewards},
      {"gradient check", gradients},
      {"learning sanity", learning},
      {"observation goldens", observation_goldens},
      {"engine invariants", engine_invariants},
  };
  int failures = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!v.pass) ++failures;
    std::printf("%s %zu %s: %s (%.1f s)\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].name, v.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}

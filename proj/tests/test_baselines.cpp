#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "swarmgrid/baselines.hpp"

using namespace swarmgrid;
using namespace swarmgrid::dqn;
using sgtest::action_index;
using sgtest::error_of;

namespace {

World skirmish() {
  World w(10, 10, 3);
  w.create_group(w.register_agent_type(sgtest::unit_type()), "hunters");
  w.create_group(0, "quarry");
  return w;
}

TrainConfig quick(uint64_t seed) {
  TrainConfig c = tiny_pursuit_train_config(seed);
  c.total_steps = 1'200;
  c.learning_starts = 200;
  c.eval_interval = 400;
  c.eval_episodes = 2;
  c.batch_size = 16;
  c.hidden = 16;
  c.target_sync_interval = 100;
  return c;
}

}  // namespace

TEST_CASE("chase_nearest") {
  SUBCASE("adjacent enemy is attacked") {
    World w = skirmish();
    w.spawn(0, ExplicitPositions{{{{4, 4}, Direction::East}}});
    w.spawn(1, ExplicitPositions{{{{5, 5}, Direction::North}}});
    auto acts = chase_nearest_actions(w, 0);
    auto space = action_space(w.type_of(0));
    REQUIRE(acts.size() == 1);
    CHECK(space[acts[0]].kind == ActionKind::Attack);
    Offset world = rotate_offset(space[acts[0]].offset, Direction::East);
    CHECK(world == Offset{1, 1});
  }
  SUBCASE("distant enemy is approached") {
    World w = skirmish();
    w.spawn(0, ExplicitPositions{{{{1, 1}, Direction::North}}});
    w.spawn(1, ExplicitPositions{{{{7, 1}, Direction::North}}});
    auto space = action_space(w.type_of(0));
    ActionIndex a = chase_nearest_actions(w, 0)[0];
    CHECK(space[a].kind == ActionKind::Move);
    CHECK(rotate_offset(space[a].offset, Direction::North).dx == 1);
  }
  SUBCASE("no enemies: do nothing") {
    World w = skirmish();
    w.spawn(0, RandomCount{3});
    CHECK(chase_nearest_actions(w, 0) == std::vector<ActionIndex>(3, kNoOp));
  }
}

TEST_CASE("random policy is near-uniform") {
  World w = skirmish();
  w.spawn(0, RandomCount{50});
  Rng rng(8);
  std::vector<int> hist(19, 0);
  for (int i = 0; i < 200; ++i)
    for (ActionIndex a : random_actions(w, 0, rng)) ++hist.at(a);
  const double n = 10'000, p = 1.0 / 19.0;
  for (int c : hist) CHECK(std::abs(c - n * p) <= 3 * std::sqrt(n * p * (1 - p)));
  CHECK(error_of([] { scripted_policy("telepathy"); }) == ErrorCode::kLookup);
  CHECK(scripted_policy("noop")->name() == "noop");
}

TEST_CASE("one parameter set per group") {
  auto net = std::make_shared<const QNetwork>(init_network(4, 19, 8, 1));
  QPolicy p(net, 0.0);
  CHECK(p.network().get() == net.get());
}

TEST_CASE("train config validation") {
  CHECK_FALSE(error_of([] { TrainConfig{}.validate(); }).has_value());
  TrainConfig c;
  c.gamma = 1.0;
  CHECK(error_of([&] { c.validate(); }) == ErrorCode::kInvalidConfig);
  c = {};
  c.epsilon_end = 0.5;
  c.epsilon_start = 0.2;
  CHECK(error_of([&] { c.validate(); }) == ErrorCode::kInvalidConfig);
  c = {};
  c.opponent = "mirror";
  CHECK(error_of([&] { c.validate(); }) == ErrorCode::kInvalidConfig);

  c = {};
  c.epsilon_decay_steps = 100;
  CHECK(epsilon_at(c, 0) == 1.0);
  CHECK(epsilon_at(c, 50) == doctest::Approx(0.525));
  CHECK(epsilon_at(c, 500) == 0.05);
}

TEST_CASE("train with zero steps returns the initial network") {
  Environment env(tiny_pursuit_scenario());
  TrainConfig c = quick(4);
  c.total_steps = 0;
  TrainResult r = train(env, 0, c);
  CHECK(r.curve.empty());
  CHECK_FALSE(r.diverged);
  env.reset(0);
  ObservationShape s = env.shape(0);
  CHECK(r.params.input_size() == static_cast<int64_t>(s.input_size()));
  CHECK(r.params.action_count() == s.n_actions);
}

TEST_CASE("train is seed-deterministic") {
  Environment env(tiny_pursuit_scenario());
  TrainResult a = train(env, 0, quick(21));
  TrainResult b = train(env, 0, quick(21));
  REQUIRE(a.curve.size() == 3);
  for (size_t i = 0; i < a.curve.size(); ++i) {
    CHECK(a.curve[i].step == b.curve[i].step);
    CHECK(a.curve[i].mean_reward == b.curve[i].mean_reward);
    CHECK(a.curve[i].epsilon == b.curve[i].epsilon);
  }
  CHECK(a.params == b.params);
  CHECK_FALSE(a.params == train(env, 0, quick(22)).params);
}

TEST_CASE("divergence stops training") {
  Environment env(tiny_pursuit_scenario());
  TrainConfig c = quick(1);
  c.learning_rate = 1e300;
  TrainResult r = train(env, 0, c);
  CHECK(r.diverged);
  CHECK_FALSE(r.divergence_message.empty());
}

TEST_CASE("checkpoint round trip and damage") {
  Checkpoint ck;
  ck.params = init_network(12, 5, 6, 9);
  ck.params.b2[3] = -0.125;
  ck.shape = {1, 1, 1, 11, 5};
  ck.config = tiny_pursuit_train_config(77);
  ck.config.opponent = "chase_nearest";
  std::stringstream ss;
  write_checkpoint(ss, ck);
  const std::string bytes = ss.str();

  std::istringstream in(bytes);
  Checkpoint back = read_checkpoint(in);
  CHECK(back.params == ck.params);
  CHECK(back.shape == ck.shape);
  CHECK(back.config.seed == 77);
  CHECK(back.config.opponent == "chase_nearest");
  CHECK(back.config.learning_rate == ck.config.learning_rate);

  auto read = [](std::string b) {
    return error_of([&] {
      std::istringstream is(b);
      read_checkpoint(is);
    });
  };
  CHECK(read("") == ErrorCode::kFormat);
  CHECK(read("NOPE" + bytes.substr(4)) == ErrorCode::kFormat);
  CHECK(read(bytes.substr(0, bytes.size() - 9)) == ErrorCode::kFormat);
  std::string flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x5a;
  CHECK(read(flipped) == ErrorCode::kFormat);
  std::string v2 = bytes;
  v2[4] = 2;
  CHECK(read(v2) == ErrorCode::kUnsupportedVersion);

  auto path = std::filesystem::temp_directory_path() / "swarmgrid_ckpt_test.bin";
  save_checkpoint(path.string(), ck);
  CHECK(load_checkpoint(path.string()).params == ck.params);
  CHECK(make_policy(path.string())->name() == "dqn");
  std::filesystem::remove(path);
  CHECK(error_of([] { load_checkpoint("/nonexistent/ckpt.bin"); }) == ErrorCode::kIo);
}

#include <cmath>

#include "doctest.h"
#include "grad_check.hpp"
#include "helpers.hpp"

using namespace swarmgrid;
using namespace swarmgrid::dqn;
using sgtest::error_of;

namespace {

QNetwork hand_net() {
  QNetwork n;
  n.w1 = Matrix(2, 2);
  n.w1 << 1, -1, 0.5, 2;
  n.b1 = Vector(2);
  n.b1 << 0, -1;
  n.w2 = Matrix(2, 2);
  n.w2 << 1, 2, -1, 0.5;
  n.b2 = Vector(2);
  n.b2 << 0.1, -0.2;
  return n;
}

TransitionBatch one(double reward, bool done) {
  TransitionBatch b;
  b.obs = Matrix(1, 2);
  b.obs << 2, 1;
  b.next_obs = Matrix(1, 2);
  b.next_obs << 2, 1;
  b.actions = {0};
  b.rewards = {reward};
  b.done = {static_cast<uint8_t>(done)};
  return b;
}

}  // namespace

TEST_CASE("init_network") {
  QNetwork a = init_network(100, 19, 64, 3);
  CHECK(a == init_network(100, 19, 64, 3));
  CHECK_FALSE(a == init_network(100, 19, 64, 4));
  CHECK(a.w2.rows() == 19);
  CHECK(a.w2.cols() == 64);
  CHECK(a.b1.isZero());
  CHECK(a.w1.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(100.0));
  CHECK(error_of([] { init_network(100, 19, 0, 1); }) == ErrorCode::kInvalidConfig);
}

TEST_CASE("q_forward by hand") {
  Matrix x(2, 2);
  x << 2, 1, -1, 1;
  Matrix q = q_forward(hand_net(), x);
  CHECK(q(0, 0) == doctest::Approx(5.1));
  CHECK(q(0, 1) == doctest::Approx(-0.2));
  CHECK(q(1, 0) == doctest::Approx(1.1));
  CHECK(q(1, 1) == doctest::Approx(0.05));

  Matrix dup(3, 2);
  dup << 0.3, -0.7, 0.3, -0.7, 0.3, -0.7;
  Matrix qd = q_forward(init_network(2, 5, 8, 1), dup);
  CHECK(qd.row(0) == qd.row(1));
  CHECK(qd.row(1) == qd.row(2));

  QNetwork zero = init_network(2, 2, 2, 1);
  zero.w1.setZero();
  zero.w2.setZero();
  CHECK(q_forward(zero, x).isZero());

  CHECK(error_of([&] { q_forward(hand_net(), Matrix(1, 3)); }) == ErrorCode::kContract);
}

TEST_CASE("td targets") {
  QNetwork t = hand_net();
  CHECK(td_targets(t, one(1.0, false), 0.0)[0] == 1.0);
  CHECK(td_targets(t, one(0.5, true), 0.9)[0] == 0.5);
  CHECK(td_targets(t, one(0.5, false), 0.9)[0] == doctest::Approx(0.5 + 0.9 * 5.1));
}

TEST_CASE("td_update lowers the loss") {
  QNetwork net = hand_net();
  TransitionBatch b = one(1.0, true);
  auto y = td_targets(net, b, 0.9);
  double before = td_loss(net, b, y);
  TdUpdate u = td_update(net, net, b, 0.9, 0.01);
  CHECK(u.loss == doctest::Approx(before));
  CHECK(u.loss >= 0.0);
  CHECK(td_loss(u.params, b, y) < before);

  TransitionBatch bad = one(std::nan(""), true);
  CHECK(error_of([&] { td_update(net, net, bad, 0.9, 0.01); }) == ErrorCode::kDivergence);
  TransitionBatch empty;
  empty.obs = Matrix(0, 2);
  empty.next_obs = Matrix(0, 2);
  CHECK(error_of([&] { td_update(net, net, empty, 0.9, 0.01); }) == ErrorCode::kContract);
}

TEST_CASE("gradients match finite differences") {
  for (uint64_t seed = 0; seed < 100; ++seed) CHECK(sgtest::gradient_check_trial(seed) <= 1e-4);
}

TEST_CASE("epsilon-greedy") {
  Matrix q(3, 4);
  q << 0, 3, 1, 2, 5, 5, 1, 0, -1, -2, -3, -0.5;
  CHECK(greedy_actions(q) == std::vector<ActionIndex>{1, 0, 3});

  QNetwork net = init_network(2, 19, 4, 7);
  Matrix x = Matrix::Constant(10'000, 2, 0.25);
  Rng rng(1);
  auto greedy = act_epsilon_greedy(net, x, 0.0, rng);
  CHECK(std::all_of(greedy.begin(), greedy.end(), [&](ActionIndex a) { return a == greedy[0]; }));

  auto acts = act_epsilon_greedy(net, x, 1.0, rng);
  std::vector<int> hist(19, 0);
  for (ActionIndex a : acts) ++hist.at(a);
  const double p = 1.0 / 19.0, mean = 10'000 * p, sigma = std::sqrt(10'000 * p * (1 - p));
  for (int c : hist) CHECK(std::abs(c - mean) <= 3 * sigma);

  Rng r1(5), r2(5);
  CHECK(act_epsilon_greedy(net, x, 0.3, r1) == act_epsilon_greedy(net, x, 0.3, r2));
}

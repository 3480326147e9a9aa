#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "swarmgrid/runner.hpp"

using namespace swarmgrid;
using sgtest::error_of;

TEST_CASE("scenario resolution") {
  CHECK(resolve_scenario("battle").name == "battle");
  CHECK(resolve_scenario("tiny-pursuit").width == 8);
  CHECK(error_of([] { resolve_scenario("/nonexistent/scenario.json"); }) == ErrorCode::kLookup);
}

TEST_CASE("policy assignment") {
  Environment env(builtin_scenario("pursuit", {10, {2, 2}, 0}));
  env.reset(0);
  auto ps = policies_for(env, {{"prey", "chase_nearest"}}, "noop");
  REQUIRE(ps.size() == 2);
  CHECK(ps[0]->name() == "noop");
  CHECK(ps[1]->name() == "chase_nearest");
  CHECK(error_of([&] { policies_for(env, {{"wolves", "random"}}); }) == ErrorCode::kLookup);
  CHECK(error_of([&] { policies_for(env, {{"prey", "sleepwalk"}}); }).has_value());
}

TEST_CASE("episodes are reproducible and summarized") {
  auto run = [](uint64_t seed) {
    Environment env(builtin_scenario("pursuit", {12, {4, 4}, 40}));
    Runner r(env, policies_for(env, {{"predator", "chase_nearest"}}), seed);
    std::ostringstream out;
    nlohmann::json summary = run_episode(r, 0, &out);
    return std::make_pair(summary, out.str());
  };
  auto a = run(7), b = run(7), c = run(8);
  CHECK(a.second == b.second);
  CHECK(a.first == b.first);
  CHECK(a.second != c.second);
  const auto& s = a.first;
  CHECK(s["steps"].get<int>() <= 40);
  CHECK(s["done"] == true);
  CHECK(s["groups"][0]["policy"] == "chase_nearest");
  CHECK(s["groups"][1]["start_population"] == 4);
  double total = s["groups"][0]["total_reward"];
  CHECK(s["groups"][0]["mean_reward"].get<double>() == doctest::Approx(total / 4));
}

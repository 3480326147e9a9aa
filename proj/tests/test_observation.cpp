#include <array>

#include "doctest.h"
#include "helpers.hpp"
#include "swarmgrid/observation.hpp"

using namespace swarmgrid;
using sgtest::error_of;
using sgtest::unit_type;

namespace {

using Plane = std::array<std::array<float, 5>, 5>;

Plane plane(const Observation& o, int ch) {
  Plane p{};
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 5; ++c) p[r][c] = o.view[static_cast<size_t>(ch) * 25 + r * 5 + c];
  return p;
}

World two_groups(int32_t size, uint64_t seed, int32_t view_range = 2) {
  World w(size, size, seed);
  AgentTypeSpec t = unit_type();
  t.view_range = view_range;
  w.create_group(w.register_agent_type(t), "a");
  w.create_group(0, "b");
  return w;
}

}  // namespace

TEST_CASE("id_embedding") {
  CHECK(id_embedding(0, 10) == std::vector<float>(10, 0.0f));
  CHECK(id_embedding(5, 4) == std::vector<float>{1, 0, 1, 0});
  CHECK(id_embedding(16, 4) == std::vector<float>{0, 0, 0, 0});
}

TEST_CASE("lone agent facing north") {
  World w = two_groups(8, 1, 1);
  AgentId id = w.spawn(0, ExplicitPositions{{{{4, 4}, Direction::North}}}).front();
  Observation o = observe_agent(w, id, {});
  CHECK(o.shape.height == 3);
  CHECK(o.shape.channels == 5);
  for (int i = 0; i < 9; ++i) {
    CHECK(o.view[i] == 0.0f);
    CHECK(o.view[9 + i] == (i == 4 ? 1.0f : 0.0f));
  }
}

TEST_CASE("golden: facing east, wall ahead, enemy to the left") {
  World w = two_groups(9, 1);
  std::vector<Position> wall{{5, 4}};
  w.set_walls(wall);
  AgentId me = w.spawn(0, ExplicitPositions{{{{4, 4}, Direction::East}}}).front();
  AgentId foe = w.spawn(1, ExplicitPositions{{{{4, 2}, Direction::South}}}).front();
  w.mutable_agent(foe).hp = 5.0;
  Observation o = observe_agent(w, me, {});

  const Plane walls = {{{0, 0, 0, 0, 0}, {0, 0, 1, 0, 0}, {0, 0, 0, 0, 0}, {0, 0, 0, 0, 0}, {0, 0, 0, 0, 0}}};
  const Plane own = {{{0, 0, 0, 0, 0}, {0, 0, 0, 0, 0}, {0, 0, 1, 0, 0}, {0, 0, 0, 0, 0}, {0, 0, 0, 0, 0}}};
  const Plane enemy = {{{0, 0, 0, 0, 0}, {0, 0, 0, 0, 0}, {1, 0, 0, 0, 0}, {0, 0, 0, 0, 0}, {0, 0, 0, 0, 0}}};
  const Plane enemy_hp = {{{0, 0, 0, 0, 0}, {0, 0, 0, 0, 0}, {0.5f, 0, 0, 0, 0}, {0, 0, 0, 0, 0}, {0, 0, 0, 0, 0}}};
  CHECK(plane(o, 0) == walls);
  CHECK(plane(o, 1) == own);
  CHECK(plane(o, 2) == own);  // full hp
  CHECK(plane(o, 3) == enemy);
  CHECK(plane(o, 4) == enemy_hp);
}

TEST_CASE("golden: corner agent sees the map edge as wall") {
  World w = two_groups(8, 1);
  AgentId me = w.spawn(0, ExplicitPositions{{{{0, 0}, Direction::North}}}).front();
  Observation o = observe_agent(w, me, {});
  const Plane walls = {{{1, 1, 1, 1, 1}, {1, 1, 1, 1, 1}, {1, 1, 0, 0, 0}, {1, 1, 0, 0, 0}, {1, 1, 0, 0, 0}}};
  CHECK(plane(o, 0) == walls);
  for (int ch = 3; ch < 5; ++ch) CHECK(plane(o, ch) == Plane{});
}

TEST_CASE("features layout") {
  World w = two_groups(8, 1);
  AgentId id = w.spawn(0, ExplicitPositions{{{{2, 6}, Direction::North}}}).front();
  w.mutable_agent(id).last_action = 4;
  w.mutable_agent(id).last_reward = -1.5;
  ObservationConfig cfg;
  cfg.id_bits = 4;
  Observation o = observe_agent(w, id, cfg);
  REQUIRE(o.features.size() == static_cast<size_t>(4 + 19 + 3));
  CHECK(o.features[4 + 4] == 1.0f);
  CHECK(o.features[4 + 19] == -1.5f);
  CHECK(o.features[4 + 20] == 2.0f / 8.0f);
  CHECK(o.features[4 + 21] == 6.0f / 8.0f);
}

TEST_CASE("observe_group rows equal observe_agent") {
  World w = two_groups(10, 4);
  w.spawn(0, RandomCount{3});
  w.spawn(1, RandomCount{4});
  ObservationConfig cfg;
  cfg.minimap = true;
  cfg.minimap_bins = 2;
  for (GroupId g = 0; g < 2; ++g) {
    ObservationBatch b = observe_group(w, g, cfg);
    REQUIRE(b.size() == w.members(g).size());
    for (size_t i = 0; i < b.size(); ++i) {
      Observation o = observe_agent(w, b.ids[i], cfg);
      CHECK(std::equal(o.view.begin(), o.view.end(), b.views.begin() + i * o.view.size()));
      CHECK(std::equal(o.features.begin(), o.features.end(), b.features.begin() + i * o.features.size()));
    }
  }
  AgentId gone = w.members(0)[1];
  std::vector<AgentId> dead{gone};
  w.remove_agents(dead);
  ObservationBatch b = observe_group(w, 0, cfg);
  CHECK(b.size() == 2);
  CHECK(std::find(b.ids.begin(), b.ids.end(), gone) == b.ids.end());

  World empty = two_groups(6, 1);
  ObservationBatch e = observe_group(empty, 1, {});
  CHECK(e.size() == 0);
  CHECK(e.shape.channels == 5);
  CHECK(e.shape.features == 10 + 19 + 3);
  CHECK(error_of([&] { observe_group(empty, 7, {}); }) == ErrorCode::kLookup);
  CHECK(error_of([&] { observe_agent(empty, 0, {}); }) == ErrorCode::kLookup);
}

TEST_CASE("global_minimap") {
  World w = two_groups(8, 1);
  w.spawn(0, ExplicitPositions{{{{1, 1}, Direction::North}}});
  CHECK(global_minimap(w, 1) == std::vector<float>{1.0f, 0.0f});

  World q = two_groups(8, 1);
  q.spawn(0, ExplicitPositions{{{{1, 1}, Direction::North},
                                 {{6, 1}, Direction::North},
                                 {{1, 6}, Direction::North},
                                 {{6, 6}, Direction::North}}});
  auto m = global_minimap(q, 2);
  CHECK(std::vector<float>(m.begin(), m.begin() + 4) == std::vector<float>(4, 0.25f));
  CHECK(std::vector<float>(m.begin() + 4, m.end()) == std::vector<float>(4, 0.0f));
}

TEST_CASE("rotating the world and the facing leaves the view unchanged") {
  const int32_t n = 9;
  for (uint64_t seed = 0; seed < 25; ++seed) {
    World w = two_groups(n, seed);
    Rng r(seed);
    std::vector<Position> walls;
    for (int i = 0; i < 8; ++i) walls.push_back({static_cast<int32_t>(r.below(n)), static_cast<int32_t>(r.below(n))});
    std::sort(walls.begin(), walls.end(), [](Position a, Position b) { return a.y != b.y ? a.y < b.y : a.x < b.x; });
    walls.erase(std::unique(walls.begin(), walls.end()), walls.end());
    w.set_walls(walls);
    w.spawn(0, RandomCount{6});
    w.spawn(1, RandomCount{6});
    for (const Agent& a : w.agents()) w.mutable_agent(a.id).hp = 1.0 + static_cast<double>(r.below(9));

    // 90 degrees clockwise: (x, y) -> (n-1-y, x)
    World rot = two_groups(n, seed);
    std::vector<Position> rwalls;
    for (Position p : walls) rwalls.push_back({n - 1 - p.y, p.x});
    rot.set_walls(rwalls);
    for (const Agent& a : w.agents()) {
      AgentId id = rot.spawn(a.group, ExplicitPositions{{{{n - 1 - a.pos.y, a.pos.x}, turn_right(a.dir)}}}).front();
      REQUIRE(id == a.id);
      rot.mutable_agent(id).hp = a.hp;
    }
    for (const Agent& a : w.agents()) CHECK(observe_agent(w, a.id, {}).view == observe_agent(rot, a.id, {}).view);
  }
}

TEST_CASE("cells outside the window do not affect the view") {
  World w = two_groups(12, 3);
  AgentId me = w.spawn(0, ExplicitPositions{{{{3, 3}, Direction::West}}}).front();
  auto before = observe_agent(w, me, {}).view;
  w.spawn(1, ExplicitPositions{{{{6, 3}, Direction::North}, {{3, 6}, Direction::North}, {{10, 10}, Direction::North}}});
  std::vector<Position> far{{0, 11}, {11, 0}};
  w.set_walls(far);
  CHECK(observe_agent(w, me, {}).view == before);
  w.spawn(1, ExplicitPositions{{{{5, 5}, Direction::North}}});
  CHECK(observe_agent(w, me, {}).view != before);
}

TEST_CASE("view values are bounded") {
  World w = two_groups(10, 8);
  w.spawn(0, RandomCount{15});
  w.spawn(1, RandomCount{15});
  for (const Agent& a : w.agents()) w.mutable_agent(a.id).hp = 0.5 + (a.id % 10);
  for (const Agent& a : w.agents()) {
    auto o = observe_agent(w, a.id, {});
    for (float v : o.view) {
      CHECK(v >= 0.0f);
      CHECK(v <= 1.0f);
    }
    CHECK(o.view[25 * (1 + 2 * a.group) + 12] == 1.0f);
    CHECK(o.view[25 * (2 + 2 * a.group) + 12] == static_cast<float>(a.hp / 10.0));
  }
}

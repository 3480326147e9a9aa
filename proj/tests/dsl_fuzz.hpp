#pragma once

// Random reward programs, event logs and snapshots over three predators and
// two preys, for comparing the indexed evaluator with the brute-force one.

#include <string>
#include <vector>

#include "swarmgrid/reward_lang.hpp"
#include "swarmgrid/rng.hpp"

namespace sgtest {

using namespace swarmgrid;

struct FuzzCase {
  std::string source;
  reward::Program program;
  EventLog log;
  reward::Snapshot snapshot;
};

inline reward::Schema fuzz_schema() { return {{"predator", "prey"}, 8, 8, false}; }

inline reward::Snapshot fuzz_snapshot(Rng& rng) {
  reward::Snapshot s;
  s.group_names = {"predator", "prey"};
  // ids 0..5, one of them already gone before this step
  std::vector<AgentId> ids{0, 1, 2, 3, 4, 5};
  rng.shuffle(std::span<AgentId>(ids));
  s.members = {{ids[0], ids[1], ids[2]}, {ids[3], ids[4]}};
  for (auto& m : s.members) std::sort(m.begin(), m.end());
  s.group_of.assign(6, kEmptyCell);
  s.position.assign(6, Position{});
  for (GroupId g = 0; g < 2; ++g)
    for (AgentId id : s.members[g]) s.group_of[id] = g;
  for (auto& p : s.position) p = {static_cast<int32_t>(rng.below(8)), static_cast<int32_t>(rng.below(8))};
  return s;
}

// Only agents alive at step start appear in a log.
inline EventLog fuzz_log(Rng& rng, const reward::Snapshot& snap) {
  std::vector<AgentId> alive;
  for (const auto& m : snap.members) alive.insert(alive.end(), m.begin(), m.end());
  auto pick = [&] { return alive[rng.below(alive.size())]; };
  EventLog log;
  size_t n = rng.below(9);
  for (size_t i = 0; i < n; ++i) {
    Event e;
    e.kind = static_cast<EventKind>(rng.below(4));
    e.actor = pick();
    e.target = e.kind == EventKind::Die ? 0 : pick();
    if (e.kind == EventKind::Collide && rng.below(4) == 0) e.target = kWallCell;
    log.push_back(e);
  }
  return log;
}

inline std::string fuzz_expr(Rng& rng, const std::vector<std::string>& syms, int depth) {
  auto sym = [&] { return syms[rng.below(syms.size())]; };
  if (depth == 0 || rng.below(3) == 0) {
    switch (rng.below(5)) {
      case 0: return "attack(" + sym() + ", " + sym() + ")";
      case 1: return "kill(" + sym() + ", " + sym() + ")";
      case 2: return "collide(" + sym() + ", " + sym() + ")";
      case 3: return "die(" + sym() + ")";
      default: {
        int x0 = static_cast<int>(rng.below(8)), y0 = static_cast<int>(rng.below(8));
        int x1 = x0 + static_cast<int>(rng.below(8 - x0)), y1 = y0 + static_cast<int>(rng.below(8 - y0));
        return "in(" + sym() + ", " + std::to_string(x0) + ", " + std::to_string(y0) + ", " + std::to_string(x1) +
               ", " + std::to_string(y1) + ")";
      }
    }
  }
  switch (rng.below(3)) {
    case 0: return "(" + fuzz_expr(rng, syms, depth - 1) + " and " + fuzz_expr(rng, syms, depth - 1) + ")";
    case 1: return "(" + fuzz_expr(rng, syms, depth - 1) + " or " + fuzz_expr(rng, syms, depth - 1) + ")";
    default: return "not " + fuzz_expr(rng, syms, depth - 1);
  }
}

// Draws until the program validates.
inline FuzzCase fuzz_case(Rng& rng) {
  static const char* decls =
      "symbol a: predator[any]\n"
      "symbol b: prey[any]\n"
      "symbol c: predator[any]\n"
      "symbol d: prey[all]\n"
      "symbol e: predator[1]\n"
      "symbol f: prey[all]\n";
  const std::vector<std::string> syms{"a", "b", "c", "d", "e", "f"};
  FuzzCase fc;
  for (;;) {
    std::string text = decls;
    size_t rules = 1 + rng.below(3);
    for (size_t r = 0; r < rules; ++r) {
      text += "rule on " + fuzz_expr(rng, syms, 3) + " receiver ";
      size_t n = 1 + rng.below(2);
      std::string values;
      for (size_t i = 0; i < n; ++i) {
        text += (i ? ", " : "") + syms[rng.below(syms.size())];
        values += (i ? ", " : "") + std::to_string(static_cast<int>(rng.below(7)) - 3);
      }
      text += " value " + values + "\n";
    }
    try {
      fc.program = reward::parse_program(text);
      reward::validate(fc.program, fuzz_schema());
    } catch (const reward::DslError&) {
      continue;
    }
    fc.source = std::move(text);
    break;
  }
  fc.snapshot = fuzz_snapshot(rng);
  fc.log = fuzz_log(rng, fc.snapshot);
  return fc;
}

}  // namespace sgtest

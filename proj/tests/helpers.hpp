#pragma once

#include <string>
#include <vector>

#include "swarmgrid/engine.hpp"
#include "swarmgrid/world.hpp"

namespace sgtest {

using namespace swarmgrid;

inline AgentTypeSpec unit_type(std::string name = "unit", double damage = 1.0, double max_hp = 10.0,
                               double recover = 0.0) {
  AgentTypeSpec t;
  t.name = std::move(name);
  t.damage = damage;
  t.max_hp = max_hp;
  t.step_recover = recover;
  return t;
}

// Index of the first canonical action matching kind and egocentric offset.
inline ActionIndex action_index(const AgentTypeSpec& spec, ActionKind kind, Offset off = {}) {
  auto acts = action_space(spec);
  for (size_t i = 0; i < acts.size(); ++i)
    if (acts[i].kind == kind && acts[i].offset == off) return static_cast<ActionIndex>(i);
  return static_cast<ActionIndex>(acts.size());
}

inline int chebyshev(Position a, Position b) {
  int dx = a.x > b.x ? a.x - b.x : b.x - a.x;
  int dy = a.y > b.y ? a.y - b.y : b.y - a.y;
  return dx > dy ? dx : dy;
}

}  // namespace sgtest

#include <optional>

#include "swarmgrid/error.hpp"

namespace sgtest {

// Code of the swarmgrid::Error thrown by fn, or nullopt when it returns.
template <typename F>
std::optional<swarmgrid::ErrorCode> error_of(F&& fn) {
  try {
    fn();
  } catch (const swarmgrid::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace sgtest

#include <map>
#include <sstream>

#include "doctest.h"

namespace doctest {

template <>
struct StringMaker<swarmgrid::Event> {
  static String convert(const swarmgrid::Event& e) {
    std::ostringstream os;
    os << swarmgrid::event_kind_name(e.kind) << "{" << e.actor << "," << e.target << "}";
    return os.str().c_str();
  }
};

template <>
struct StringMaker<swarmgrid::Position> {
  static String convert(const swarmgrid::Position& p) {
    return ("(" + std::to_string(p.x) + "," + std::to_string(p.y) + ")").c_str();
  }
};

template <typename T>
struct StringMaker<std::vector<T>> {
  static String convert(const std::vector<T>& v) {
    String s = "[";
    for (size_t i = 0; i < v.size(); ++i) s += (i ? String(", ") : String("")) + StringMaker<T>::convert(v[i]);
    return s + "]";
  }
};

template <typename K, typename V>
struct StringMaker<std::map<K, V>> {
  static String convert(const std::map<K, V>& m) {
    std::ostringstream os;
    os << "{";
    for (const auto& [k, v] : m) os << k << ":" << v << " ";
    os << "}";
    return os.str().c_str();
  }
};

}  // namespace doctest

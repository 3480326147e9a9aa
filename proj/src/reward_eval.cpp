#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

#include "swarmgrid/reward_lang.hpp"

namespace swarmgrid::reward {

Schema schema_of(const World& world) {
  Schema s;
  for (const auto& g : world.groups()) s.groups.push_back(g.name);
  s.width = world.width();
  s.height = world.height();
  return s;
}

namespace {

void collect_symbols(const Expr& e, bool negated, std::vector<std::pair<const Expr*, bool>>& out) {
  switch (e.op) {
    case Expr::Op::Atom: out.emplace_back(&e, negated); break;
    case Expr::Op::Not: collect_symbols(*e.lhs, !negated, out); break;
    case Expr::Op::And:
    case Expr::Op::Or:
      collect_symbols(*e.lhs, negated, out);
      collect_symbols(*e.rhs, negated, out);
      break;
  }
}

}  // namespace

void validate(const Program& program, const Schema& schema) {
  std::vector<Diagnostic> diags;
  auto report = [&](SourceLoc loc, std::string msg) { diags.push_back({loc, std::move(msg)}); };

  std::map<std::string, const SymbolDecl*> symbols;
  for (const auto& s : program.symbols) {
    if (!symbols.emplace(s.name, &s).second) report(s.loc, "duplicate symbol '" + s.name + "'");
    if (!schema.open && std::find(schema.groups.begin(), schema.groups.end(), s.group) == schema.groups.end()) {
      report(s.loc, "symbol '" + s.name + "' refers to unknown group '" + s.group + "'");
    }
    if (s.index == IndexKind::Concrete && s.member < 0) {
      report(s.loc, "symbol '" + s.name + "' has negative member index " + std::to_string(s.member));
    }
  }

  for (size_t ri = 0; ri < program.rules.size(); ++ri) {
    const RewardRule& r = program.rules[ri];
    const std::string where = "rule " + std::to_string(ri + 1);
    std::vector<std::pair<const Expr*, bool>> atoms;
    collect_symbols(*r.trigger, false, atoms);

    std::set<std::string> positive;
    std::set<std::string> referenced;
    for (const auto& [atom, negated] : atoms) {
      for (const auto& name : atom->args) {
        if (!symbols.contains(name)) {
          report(atom->loc, where + ": undefined symbol '" + name + "'");
          continue;
        }
        referenced.insert(name);
        if (!negated) positive.insert(name);
      }
      if (atom->atom == AtomKind::In) {
        const int64_t* q = atom->rect;
        bool ok = q[0] >= 0 && q[1] >= 0 && q[0] <= q[2] && q[1] <= q[3];
        if (!schema.open) ok = ok && q[2] < schema.width && q[3] < schema.height;
        if (!ok && schema.open) {
          report(atom->loc, where + ": in() rectangle (" + std::to_string(q[0]) + "," + std::to_string(q[1]) + ")-(" +
                                std::to_string(q[2]) + "," + std::to_string(q[3]) +
                                ") must satisfy 0 <= x0 <= x1 and 0 <= y0 <= y1");
        } else if (!ok) {
          report(atom->loc, where + ": in() rectangle (" + std::to_string(q[0]) + "," + std::to_string(q[1]) + ")-(" +
                                std::to_string(q[2]) + "," + std::to_string(q[3]) + ") must satisfy 0 <= x0 <= x1 < " +
                                std::to_string(schema.width) + " and 0 <= y0 <= y1 < " +
                                std::to_string(schema.height));
        }
      }
    }
    for (const auto& name : r.receivers) {
      if (!symbols.contains(name)) {
        report(r.loc, where + ": undefined receiver symbol '" + name + "'");
        continue;
      }
      referenced.insert(name);
    }
    if (r.receivers.size() != r.values.size()) {
      report(r.loc, where + ": " + std::to_string(r.receivers.size()) + " receiver(s) but " +
                        std::to_string(r.values.size()) + " value(s)");
    }
    for (double v : r.values) {
      if (!std::isfinite(v)) report(r.loc, where + ": non-finite reward value");
    }
    for (const auto& name : referenced) {
      if (symbols.at(name)->index == IndexKind::Any && !positive.contains(name)) {
        report(r.loc, where + ": unsafe negation, symbol '" + name +
                          "' (any) must occur in at least one event outside 'not'");
      }
    }
  }
  if (!diags.empty()) throw DslError(ErrorCode::kValidation, std::move(diags));
}

Snapshot Snapshot::begin(const World& world) {
  Snapshot s;
  const auto n_groups = world.groups().size();
  s.members.resize(n_groups);
  for (const auto& g : world.groups()) s.group_names.push_back(g.name);
  s.group_of.assign(world.next_id(), kEmptyCell);
  s.position.assign(world.next_id(), Position{});
  for (size_t g = 0; g < n_groups; ++g) {
    auto m = world.members(static_cast<GroupId>(g));
    s.members[g].assign(m.begin(), m.end());
  }
  for (const Agent& a : world.agents()) s.group_of[a.id] = a.group;
  return s;
}

void Snapshot::finish(const World& world, std::span<const Agent> fallen) {
  for (const Agent& a : world.agents()) {
    if (a.id < position.size()) position[a.id] = a.pos;
  }
  for (const Agent& a : fallen) {
    if (a.id < position.size()) position[a.id] = a.pos;
  }
}

namespace {

constexpr int64_t kWild = -1;
using Binding = std::vector<int64_t>;  // per rule variable, agent id or kWild

struct ResolvedSymbol {
  IndexKind kind = IndexKind::Any;
  uint32_t group = 0;
  AgentId concrete = 0;
  bool usable = true;  // false for Concrete past the group size or unknown group
};

uint64_t pair_key(AgentId a, uint32_t b) { return (static_cast<uint64_t>(a) << 32) | b; }

struct EventIndex {
  std::unordered_set<uint64_t> attack, kill, collide;
  std::unordered_set<AgentId> die;
  std::vector<std::pair<AgentId, uint32_t>> attack_list, kill_list, collide_list;
  std::vector<AgentId> die_list;

  explicit EventIndex(const EventLog& log) {
    for (const Event& e : log) {
      switch (e.kind) {
        case EventKind::Attack:
          attack.insert(pair_key(e.actor, e.target));
          attack_list.emplace_back(e.actor, e.target);
          break;
        case EventKind::Kill:
          kill.insert(pair_key(e.actor, e.target));
          kill_list.emplace_back(e.actor, e.target);
          break;
        case EventKind::Collide:
          collide.insert(pair_key(e.actor, e.target));
          collide_list.emplace_back(e.actor, e.target);
          break;
        case EventKind::Die:
          die.insert(e.actor);
          die_list.push_back(e.actor);
          break;
      }
    }
  }
};

// Expression tree with symbol names resolved to declaration indices.
struct Node {
  Expr::Op op = Expr::Op::Atom;
  AtomKind atom = AtomKind::Attack;
  std::vector<size_t> args;
  int64_t rect[4] = {};
  int lhs = -1;
  int rhs = -1;
};

class RuleEvaluator {
 public:
  RuleEvaluator(const Program& program, const RewardRule& rule, const std::vector<ResolvedSymbol>& symbols,
                const EventIndex& events, const Snapshot& snapshot)
      : symbols_(symbols), events_(events), snap_(snapshot) {
    std::map<std::string, size_t> by_name;
    for (size_t i = 0; i < program.symbols.size(); ++i) by_name.emplace(program.symbols[i].name, i);
    root_ = compile(*rule.trigger, by_name);
    for (const auto& name : rule.receivers) receivers_.push_back(by_name.at(name));
    values_ = rule.values;

    std::set<size_t> used(receivers_.begin(), receivers_.end());
    std::set<size_t> in_trigger;
    for (const Node& n : nodes_) {
      used.insert(n.args.begin(), n.args.end());
      in_trigger.insert(n.args.begin(), n.args.end());
    }
    var_of_.assign(symbols.size(), -1);
    for (size_t s : used) {
      if (!symbols[s].usable) skip_ = true;
      if (symbols[s].kind == IndexKind::Any) {
        var_of_[s] = static_cast<int>(vars_.size());
        vars_.push_back(s);
      }
    }
    for (size_t s : in_trigger) {
      if (symbols[s].kind == IndexKind::All) {
        alls_.push_back(s);
        if (symbols[s].usable && domain(s).empty()) skip_ = true;
      }
    }
  }

  void run(Rewards& out) {
    if (skip_) return;
    for (size_t v : vars_) {
      if (domain(v).empty()) return;
    }
    std::vector<Binding> cover = cover_of(root_);
    std::vector<Binding> full;
    for (const Binding& b : cover) expand(b, 0, full);
    std::sort(full.begin(), full.end());
    full.erase(std::unique(full.begin(), full.end()), full.end());

    value_.assign(symbols_.size(), 0);
    for (size_t s = 0; s < symbols_.size(); ++s) {
      if (symbols_[s].kind == IndexKind::Concrete) value_[s] = symbols_[s].concrete;
    }
    for (const Binding& b : full) {
      for (size_t i = 0; i < vars_.size(); ++i) value_[vars_[i]] = static_cast<AgentId>(b[i]);
      if (!holds_for_all(0)) continue;
      for (size_t i = 0; i < receivers_.size(); ++i) {
        size_t s = receivers_[i];
        if (symbols_[s].kind == IndexKind::All) {
          for (AgentId id : domain(s)) out[id] += values_[i];
        } else {
          out[value_[s]] += values_[i];
        }
      }
    }
  }

 private:
  int compile(const Expr& e, const std::map<std::string, size_t>& by_name) {
    Node n;
    n.op = e.op;
    n.atom = e.atom;
    if (e.op == Expr::Op::Atom) {
      for (const auto& a : e.args) n.args.push_back(by_name.at(a));
      std::copy(std::begin(e.rect), std::end(e.rect), n.rect);
    } else {
      n.lhs = compile(*e.lhs, by_name);
      if (e.rhs) n.rhs = compile(*e.rhs, by_name);
    }
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size() - 1);
  }

  const std::vector<AgentId>& domain(size_t sym) const { return snap_.members[symbols_[sym].group]; }

  bool member_of(AgentId id, size_t sym) const {
    return id < snap_.group_of.size() && snap_.group_of[id] == symbols_[sym].group;
  }

  // Superset of the satisfying bindings, as partial bindings with wildcards.
  std::vector<Binding> cover_of(int idx) const {
    const Node& n = nodes_[idx];
    const Binding wild(vars_.size(), kWild);
    switch (n.op) {
      case Expr::Op::Not: return {wild};
      case Expr::Op::Or: {
        auto l = cover_of(n.lhs);
        auto r = cover_of(n.rhs);
        l.insert(l.end(), r.begin(), r.end());
        return dedupe(std::move(l));
      }
      case Expr::Op::And: {
        auto l = cover_of(n.lhs);
        auto r = cover_of(n.rhs);
        if (r.size() == 1 && r[0] == wild) return l;
        if (l.size() == 1 && l[0] == wild) return r;
        std::vector<Binding> out;
        for (const Binding& x : l) {
          for (const Binding& y : r) {
            Binding m(vars_.size());
            bool ok = true;
            for (size_t i = 0; i < m.size() && ok; ++i) {
              if (x[i] == kWild) {
                m[i] = y[i];
              } else if (y[i] == kWild || y[i] == x[i]) {
                m[i] = x[i];
              } else {
                ok = false;
              }
            }
            if (ok) out.push_back(std::move(m));
          }
        }
        return dedupe(std::move(out));
      }
      case Expr::Op::Atom: break;
    }

    std::vector<Binding> out;
    auto try_bind = [&](Binding& b, size_t sym, AgentId agent) {
      if (!member_of(agent, sym)) return false;
      const auto& rs = symbols_[sym];
      if (rs.kind == IndexKind::Concrete) return rs.concrete == agent;
      if (rs.kind == IndexKind::All) return true;
      int64_t& slot = b[var_of_[sym]];
      if (slot != kWild && slot != agent) return false;
      slot = agent;
      return true;
    };
    auto from_pairs = [&](const std::vector<std::pair<AgentId, uint32_t>>& pairs) {
      for (const auto& [actor, target] : pairs) {
        if (target == kWallCell || target == kEmptyCell) continue;
        Binding b = wild;
        if (try_bind(b, n.args[0], actor) && try_bind(b, n.args[1], target)) out.push_back(std::move(b));
      }
    };
    switch (n.atom) {
      case AtomKind::Attack: from_pairs(events_.attack_list); break;
      case AtomKind::Kill: from_pairs(events_.kill_list); break;
      case AtomKind::Collide: from_pairs(events_.collide_list); break;
      case AtomKind::Die:
        for (AgentId id : events_.die_list) {
          Binding b = wild;
          if (try_bind(b, n.args[0], id)) out.push_back(std::move(b));
        }
        break;
      case AtomKind::In: {
        size_t sym = n.args[0];
        if (symbols_[sym].kind != IndexKind::Any) return {wild};
        for (AgentId id : domain(sym)) {
          if (in_rect(id, n.rect)) {
            Binding b = wild;
            b[var_of_[sym]] = id;
            out.push_back(std::move(b));
          }
        }
        break;
      }
    }
    return dedupe(std::move(out));
  }

  static std::vector<Binding> dedupe(std::vector<Binding> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  }

  void expand(const Binding& partial, size_t i, std::vector<Binding>& out) const {
    if (i == partial.size()) {
      out.push_back(partial);
      return;
    }
    if (partial[i] != kWild) {
      expand(partial, i + 1, out);
      return;
    }
    Binding b = partial;
    for (AgentId id : domain(vars_[i])) {
      b[i] = id;
      expand(b, i + 1, out);
    }
  }

  bool in_rect(AgentId id, const int64_t* q) const {
    const Position& p = snap_.position[id];
    return p.x >= q[0] && p.x <= q[2] && p.y >= q[1] && p.y <= q[3];
  }

  bool holds_for_all(size_t k) {
    if (k == alls_.size()) return truth(root_);
    for (AgentId id : domain(alls_[k])) {
      value_[alls_[k]] = id;
      if (!holds_for_all(k + 1)) return false;
    }
    return true;
  }

  bool truth(int idx) const {
    const Node& n = nodes_[idx];
    switch (n.op) {
      case Expr::Op::Not: return !truth(n.lhs);
      case Expr::Op::And: return truth(n.lhs) && truth(n.rhs);
      case Expr::Op::Or: return truth(n.lhs) || truth(n.rhs);
      case Expr::Op::Atom: break;
    }
    AgentId a = value_[n.args[0]];
    switch (n.atom) {
      case AtomKind::Attack: return events_.attack.contains(pair_key(a, value_[n.args[1]]));
      case AtomKind::Kill: return events_.kill.contains(pair_key(a, value_[n.args[1]]));
      case AtomKind::Collide: return events_.collide.contains(pair_key(a, value_[n.args[1]]));
      case AtomKind::Die: return events_.die.contains(a);
      case AtomKind::In: return in_rect(a, n.rect);
    }
    return false;
  }

  const std::vector<ResolvedSymbol>& symbols_;
  const EventIndex& events_;
  const Snapshot& snap_;
  std::vector<Node> nodes_;
  int root_ = -1;
  std::vector<size_t> receivers_;
  std::vector<double> values_;
  std::vector<size_t> vars_;
  std::vector<int> var_of_;
  std::vector<size_t> alls_;
  std::vector<AgentId> value_;
  bool skip_ = false;
};

std::vector<ResolvedSymbol> resolve(const Program& program, const Snapshot& snapshot,
                                    const std::vector<std::string>& group_names) {
  std::vector<ResolvedSymbol> out;
  for (const auto& s : program.symbols) {
    ResolvedSymbol r;
    r.kind = s.index;
    auto it = std::find(group_names.begin(), group_names.end(), s.group);
    if (it == group_names.end() || static_cast<size_t>(it - group_names.begin()) >= snapshot.members.size()) {
      r.usable = false;
    } else {
      r.group = static_cast<uint32_t>(it - group_names.begin());
      if (s.index == IndexKind::Concrete) {
        const auto& m = snapshot.members[r.group];
        if (s.member < 0 || static_cast<size_t>(s.member) >= m.size()) {
          r.usable = false;
        } else {
          r.concrete = m[static_cast<size_t>(s.member)];
        }
      }
    }
    out.push_back(r);
  }
  return out;
}

}  // namespace

Rewards evaluate(const Program& program, const EventLog& log, const Snapshot& snapshot) {
  Rewards out;
  if (program.rules.empty()) return out;
  auto symbols = resolve(program, snapshot, snapshot.group_names);
  EventIndex index(log);
  for (const auto& rule : program.rules) RuleEvaluator(program, rule, symbols, index, snapshot).run(out);
  return out;
}

}  // namespace swarmgrid::reward

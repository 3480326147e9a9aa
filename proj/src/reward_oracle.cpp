// Reference evaluator: walks the full cross-product of candidate agents for
// every rule and answers each atom by scanning the event log. Shares nothing
// with the indexed evaluator beyond the AST types.

#include <algorithm>

#include "swarmgrid/reward_lang.hpp"

namespace swarmgrid::reward {

namespace {

struct OracleSymbol {
  const SymbolDecl* decl = nullptr;
  const std::vector<AgentId>* members = nullptr;  // null when the group is unknown
};

using Assignment = std::map<std::string, AgentId>;

bool scan_pair(const EventLog& log, EventKind kind, AgentId a, AgentId b) {
  return std::any_of(log.begin(), log.end(),
                     [&](const Event& e) { return e.kind == kind && e.actor == a && e.target == b; });
}

bool scan_die(const EventLog& log, AgentId a) {
  return std::any_of(log.begin(), log.end(), [&](const Event& e) { return e.kind == EventKind::Die && e.actor == a; });
}

bool eval(const Expr& e, const Assignment& as, const EventLog& log, const Snapshot& snap) {
  switch (e.op) {
    case Expr::Op::Not: return !eval(*e.lhs, as, log, snap);
    case Expr::Op::And: return eval(*e.lhs, as, log, snap) && eval(*e.rhs, as, log, snap);
    case Expr::Op::Or: return eval(*e.lhs, as, log, snap) || eval(*e.rhs, as, log, snap);
    case Expr::Op::Atom: break;
  }
  AgentId a = as.at(e.args[0]);
  switch (e.atom) {
    case AtomKind::Attack: return scan_pair(log, EventKind::Attack, a, as.at(e.args[1]));
    case AtomKind::Kill: return scan_pair(log, EventKind::Kill, a, as.at(e.args[1]));
    case AtomKind::Collide: return scan_pair(log, EventKind::Collide, a, as.at(e.args[1]));
    case AtomKind::Die: return scan_die(log, a);
    case AtomKind::In: {
      const Position& p = snap.position.at(a);
      return p.x >= e.rect[0] && p.x <= e.rect[2] && p.y >= e.rect[1] && p.y <= e.rect[3];
    }
  }
  return false;
}

void trigger_symbols(const Expr& e, std::vector<std::string>& out) {
  if (e.op == Expr::Op::Atom) {
    out.insert(out.end(), e.args.begin(), e.args.end());
    return;
  }
  trigger_symbols(*e.lhs, out);
  if (e.rhs) trigger_symbols(*e.rhs, out);
}

// Odometer over the given symbols; visit() returns false to stop early.
template <typename Visit>
bool enumerate(const std::vector<const OracleSymbol*>& syms, Assignment& as, size_t k, Visit&& visit) {
  if (k == syms.size()) return visit();
  for (AgentId id : *syms[k]->members) {
    as[syms[k]->decl->name] = id;
    if (!enumerate(syms, as, k + 1, visit)) return false;
  }
  return true;
}

}  // namespace

Rewards brute_force_evaluate(const Program& program, const EventLog& log, const Snapshot& snapshot,
                             uint64_t max_bindings) {
  std::map<std::string, OracleSymbol> table;
  for (const auto& s : program.symbols) {
    OracleSymbol o;
    o.decl = &s;
    for (size_t g = 0; g < snapshot.group_names.size(); ++g) {
      if (snapshot.group_names[g] == s.group) o.members = &snapshot.members[g];
    }
    table[s.name] = o;
  }

  // Size guard first, over every rule.
  uint64_t total = 0;
  for (const auto& rule : program.rules) {
    std::vector<std::string> names;
    trigger_symbols(*rule.trigger, names);
    names.insert(names.end(), rule.receivers.begin(), rule.receivers.end());
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    uint64_t count = 1;
    for (const auto& n : names) {
      const OracleSymbol& o = table.at(n);
      if (o.decl->index == IndexKind::Concrete || !o.members) continue;
      count *= std::max<uint64_t>(o.members->size(), 1);
      if (count > max_bindings) break;
    }
    total += count;
    if (total > max_bindings) {
      fail(ErrorCode::kOracleTooLarge, "oracle would enumerate more than " + std::to_string(max_bindings) + " bindings");
    }
  }

  Rewards out;
  for (const auto& rule : program.rules) {
    std::vector<std::string> in_trigger;
    trigger_symbols(*rule.trigger, in_trigger);
    std::vector<std::string> used = in_trigger;
    used.insert(used.end(), rule.receivers.begin(), rule.receivers.end());

    Assignment fixed;
    std::vector<const OracleSymbol*> anys;
    std::vector<const OracleSymbol*> alls;
    bool skip = false;
    // Declaration order so that enumeration order matches sorted bindings.
    for (const auto& s : program.symbols) {
      bool is_used = std::find(used.begin(), used.end(), s.name) != used.end();
      if (!is_used) continue;
      const OracleSymbol& o = table.at(s.name);
      if (!o.members) {
        skip = true;
        break;
      }
      switch (s.index) {
        case IndexKind::Concrete:
          if (s.member < 0 || static_cast<size_t>(s.member) >= o.members->size()) {
            skip = true;
          } else {
            fixed[s.name] = (*o.members)[static_cast<size_t>(s.member)];
          }
          break;
        case IndexKind::Any: anys.push_back(&o); break;
        case IndexKind::All:
          if (std::find(in_trigger.begin(), in_trigger.end(), s.name) != in_trigger.end()) {
            if (o.members->empty()) skip = true;
            alls.push_back(&o);
          }
          break;
      }
    }
    if (skip) continue;

    Assignment as = fixed;
    enumerate(anys, as, 0, [&] {
      bool all_hold = true;
      Assignment inner = as;
      enumerate(alls, inner, 0, [&] {
        if (!eval(*rule.trigger, inner, log, snapshot)) all_hold = false;
        return all_hold;
      });
      if (!all_hold) return true;
      for (size_t i = 0; i < rule.receivers.size(); ++i) {
        const OracleSymbol& o = table.at(rule.receivers[i]);
        if (o.decl->index == IndexKind::All) {
          for (AgentId id : *o.members) out[id] += rule.values[i];
        } else {
          out[as.at(rule.receivers[i])] += rule.values[i];
        }
      }
      return true;
    });
  }
  return out;
}

}  // namespace swarmgrid::reward

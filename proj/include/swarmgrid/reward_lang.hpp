#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "swarmgrid/engine.hpp"
#include "swarmgrid/error.hpp"
#include "swarmgrid/world.hpp"

// Reward description language.
//
//   symbol a: predator[any]
//   symbol b: prey[any]
//   rule on attack(a, b) receiver a, b value 1, -1
//
// A rule fires once per distinct binding of its `any` symbols that makes the
// trigger true, paying values[i] to receivers[i]. `all` symbols quantify
// universally over the group; an integer index names the k-th member (by
// ascending id) at step start.

namespace swarmgrid::reward {

struct SourceLoc {
  int32_t line = 1;
  int32_t column = 1;
  bool operator==(const SourceLoc&) const = default;
};

struct Diagnostic {
  SourceLoc loc;
  std::string message;
};

/// Parse and validation failures. what() is the formatted list of diagnostics.
class DslError : public Error {
 public:
  DslError(ErrorCode code, std::vector<Diagnostic> diagnostics);
  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

enum class IndexKind : uint8_t { Any, All, Concrete };

struct SymbolDecl {
  std::string name;
  std::string group;
  IndexKind index = IndexKind::Any;
  int64_t member = 0;  // Concrete only
  SourceLoc loc;
};

enum class AtomKind : uint8_t { Attack, Kill, Collide, Die, In };

const char* atom_name(AtomKind k);
size_t atom_arity(AtomKind k);

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  enum class Op : uint8_t { Atom, And, Or, Not };
  Op op = Op::Atom;
  // Atom
  AtomKind atom = AtomKind::Attack;
  std::vector<std::string> args;
  int64_t rect[4] = {0, 0, 0, 0};  // in(): x0, y0, x1, y1
  // And/Or use both; Not uses lhs
  ExprPtr lhs;
  ExprPtr rhs;
  SourceLoc loc;
};

/// Structural equality, ignoring source locations.
bool same_structure(const Expr& a, const Expr& b);

struct RewardRule {
  ExprPtr trigger;
  std::vector<std::string> receivers;
  std::vector<double> values;
  SourceLoc loc;
};

struct Program {
  std::vector<SymbolDecl> symbols;
  std::vector<RewardRule> rules;
};

bool same_structure(const Program& a, const Program& b);

/// Throws DslError(kParse) at the first lexical or syntax error.
Program parse_program(std::string_view text);

/// Canonical text form; parse_program(print_program(p)) is structurally equal to p.
std::string print_program(const Program& program);

struct Schema {
  std::vector<std::string> groups;
  int32_t width = 0;
  int32_t height = 0;
  /// No world to check against: group names and map bounds are not checked.
  bool open = false;
};

Schema schema_of(const World& world);

/// Static checks. Collects every violation, then throws DslError(kValidation).
void validate(const Program& program, const Schema& schema);

/// What the evaluator may look at besides the event log: membership at step
/// start, and each of those agents' anchor at step end (or at death).
struct Snapshot {
  std::vector<std::string> group_names;
  std::vector<std::vector<AgentId>> members;  // per group, ascending, at step start
  std::vector<uint32_t> group_of;             // indexed by id; kEmptyCell if never a member
  std::vector<Position> position;             // indexed by id

  /// Capture start-of-step membership. Positions are filled by finish().
  static Snapshot begin(const World& world);
  /// Record end-of-step positions from the post-step world and the fallen.
  void finish(const World& world, std::span<const Agent> fallen);
};

using Rewards = std::map<AgentId, double>;

/// Event-indexed evaluation.
Rewards evaluate(const Program& program, const EventLog& log, const Snapshot& snapshot);

/// Exhaustive enumeration over the full cross-product of candidates, scanning
/// the log for every atom. Throws Error(kOracleTooLarge) past max_bindings.
Rewards brute_force_evaluate(const Program& program, const EventLog& log, const Snapshot& snapshot,
                             uint64_t max_bindings = 1'000'000);

}  // namespace swarmgrid::reward

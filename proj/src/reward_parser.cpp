#include <charconv>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "swarmgrid/reward_lang.hpp"

namespace swarmgrid::reward {

namespace {

std::string format_diagnostics(const std::vector<Diagnostic>& diags) {
  std::string out;
  for (size_t i = 0; i < diags.size(); ++i) {
    if (i) out += '\n';
    out += std::to_string(diags[i].loc.line) + ":" + std::to_string(diags[i].loc.column) + ": " + diags[i].message;
  }
  return out;
}

enum class Tok : uint8_t { Ident, Number, Colon, LBracket, RBracket, LParen, RParen, Comma, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  SourceLoc loc;
};

const char* tok_name(Tok t) {
  switch (t) {
    case Tok::Ident: return "identifier";
    case Tok::Number: return "number";
    case Tok::Colon: return "':'";
    case Tok::LBracket: return "'['";
    case Tok::RBracket: return "']'";
    case Tok::LParen: return "'('";
    case Tok::RParen: return "')'";
    case Tok::Comma: return "','";
    case Tok::End: return "end of input";
  }
  return "?";
}

const std::unordered_set<std::string_view>& keywords() {
  static const std::unordered_set<std::string_view> kw = {"symbol",  "rule", "on",     "receiver", "value",
                                                          "any",     "all",  "and",    "or",       "not",
                                                          "attack",  "kill", "collide", "die",     "in"};
  return kw;
}

[[noreturn]] void parse_fail(SourceLoc loc, std::string msg) {
  throw DslError(ErrorCode::kParse, {Diagnostic{loc, std::move(msg)}});
}

bool ident_start(char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_'; }
bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }
bool digit(char c) { return c >= '0' && c <= '9'; }

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  size_t i = 0;
  SourceLoc loc;
  auto advance = [&](size_t n) {
    for (size_t k = 0; k < n; ++k) {
      if (src[i] == '\n') {
        ++loc.line;
        loc.column = 1;
      } else {
        ++loc.column;
      }
      ++i;
    }
  };
  while (i < src.size()) {
    char c = src[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      advance(1);
      continue;
    }
    if (c == '#') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    Token t;
    t.loc = loc;
    if (ident_start(c)) {
      size_t j = i;
      while (j < src.size() && ident_char(src[j])) ++j;
      t.kind = Tok::Ident;
      t.text = std::string(src.substr(i, j - i));
      advance(j - i);
      out.push_back(std::move(t));
      continue;
    }
    if (digit(c) || ((c == '-' || c == '+') && i + 1 < src.size() && digit(src[i + 1]))) {
      size_t j = i + 1;
      while (j < src.size() && digit(src[j])) ++j;
      if (j < src.size() && src[j] == '.') {
        size_t k = j + 1;
        if (k >= src.size() || !digit(src[k])) {
          parse_fail({loc.line, loc.column + static_cast<int32_t>(k - i)}, "expected digit after '.'");
        }
        while (k < src.size() && digit(src[k])) ++k;
        j = k;
      }
      t.kind = Tok::Number;
      t.text = std::string(src.substr(i, j - i));
      advance(j - i);
      out.push_back(std::move(t));
      continue;
    }
    switch (c) {
      case ':': t.kind = Tok::Colon; break;
      case '[': t.kind = Tok::LBracket; break;
      case ']': t.kind = Tok::RBracket; break;
      case '(': t.kind = Tok::LParen; break;
      case ')': t.kind = Tok::RParen; break;
      case ',': t.kind = Tok::Comma; break;
      default: {
        std::string shown = (static_cast<unsigned char>(c) < 0x20 || static_cast<unsigned char>(c) >= 0x7f)
                                ? "byte 0x" + [&] {
                                    std::ostringstream os;
                                    os << std::hex << static_cast<int>(static_cast<unsigned char>(c));
                                    return os.str();
                                  }()
                                : std::string("'") + c + "'";
        parse_fail(loc, "unexpected character " + shown);
      }
    }
    t.text = std::string(1, c);
    advance(1);
    out.push_back(std::move(t));
  }
  Token end;
  end.kind = Tok::End;
  end.loc = loc;
  out.push_back(end);
  return out;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Program program() {
    Program p;
    while (peek().kind != Tok::End) {
      if (is_kw("symbol")) {
        p.symbols.push_back(symbol_decl());
      } else if (is_kw("rule")) {
        p.rules.push_back(rule_decl());
      } else {
        unexpected("'symbol' or 'rule'");
      }
    }
    return p;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& next() { return toks_[pos_++]; }
  bool is_kw(std::string_view kw) const { return peek().kind == Tok::Ident && peek().text == kw; }

  [[noreturn]] void unexpected(const std::string& expected) const {
    const Token& t = peek();
    std::string got = t.kind == Tok::End ? "end of input" : "'" + t.text + "'";
    parse_fail(t.loc, "expected " + expected + ", got " + got);
  }

  void expect_kw(std::string_view kw) {
    if (!is_kw(kw)) unexpected("'" + std::string(kw) + "'");
    ++pos_;
  }
  const Token& expect(Tok kind) {
    if (peek().kind != kind) unexpected(tok_name(kind));
    return next();
  }
  std::string ident() {
    if (peek().kind != Tok::Ident) unexpected("identifier");
    if (keywords().contains(peek().text)) unexpected("identifier (keyword '" + peek().text + "' is reserved)");
    return next().text;
  }
  int64_t integer() {
    const Token& t = peek();
    if (t.kind != Tok::Number || t.text.find('.') != std::string::npos) unexpected("integer");
    std::string_view s = t.text;
    if (!s.empty() && s[0] == '+') s.remove_prefix(1);
    int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) parse_fail(t.loc, "integer out of range: " + t.text);
    ++pos_;
    return v;
  }
  double number() {
    const Token& t = peek();
    if (t.kind != Tok::Number) unexpected("number");
    std::string_view s = t.text;
    if (!s.empty() && s[0] == '+') s.remove_prefix(1);
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
      parse_fail(t.loc, "number out of range: " + t.text);
    }
    ++pos_;
    return v;
  }

  SymbolDecl symbol_decl() {
    SymbolDecl d;
    d.loc = peek().loc;
    expect_kw("symbol");
    d.name = ident();
    expect(Tok::Colon);
    d.group = ident();
    expect(Tok::LBracket);
    if (is_kw("any")) {
      ++pos_;
      d.index = IndexKind::Any;
    } else if (is_kw("all")) {
      ++pos_;
      d.index = IndexKind::All;
    } else if (peek().kind == Tok::Number) {
      d.index = IndexKind::Concrete;
      d.member = integer();
    } else {
      unexpected("'any', 'all' or integer");
    }
    expect(Tok::RBracket);
    return d;
  }

  RewardRule rule_decl() {
    RewardRule r;
    r.loc = peek().loc;
    expect_kw("rule");
    expect_kw("on");
    r.trigger = expr();
    expect_kw("receiver");
    r.receivers.push_back(ident());
    while (peek().kind == Tok::Comma) {
      ++pos_;
      r.receivers.push_back(ident());
    }
    expect_kw("value");
    r.values.push_back(number());
    while (peek().kind == Tok::Comma) {
      ++pos_;
      r.values.push_back(number());
    }
    return r;
  }

  ExprPtr expr() {
    ExprPtr lhs = and_expr();
    while (is_kw("or")) {
      SourceLoc loc = next().loc;
      lhs = binary(Expr::Op::Or, lhs, and_expr(), loc);
    }
    return lhs;
  }
  ExprPtr and_expr() {
    ExprPtr lhs = unary();
    while (is_kw("and")) {
      SourceLoc loc = next().loc;
      lhs = binary(Expr::Op::And, lhs, unary(), loc);
    }
    return lhs;
  }
  ExprPtr unary() {
    if (is_kw("not")) {
      auto e = std::make_shared<Expr>();
      e->op = Expr::Op::Not;
      e->loc = next().loc;
      e->lhs = atom();
      return e;
    }
    return atom();
  }
  ExprPtr atom() {
    if (peek().kind == Tok::LParen) {
      ++pos_;
      ExprPtr e = expr();
      expect(Tok::RParen);
      return e;
    }
    auto e = std::make_shared<Expr>();
    e->op = Expr::Op::Atom;
    e->loc = peek().loc;
    if (is_kw("attack")) {
      e->atom = AtomKind::Attack;
    } else if (is_kw("kill")) {
      e->atom = AtomKind::Kill;
    } else if (is_kw("collide")) {
      e->atom = AtomKind::Collide;
    } else if (is_kw("die")) {
      e->atom = AtomKind::Die;
    } else if (is_kw("in")) {
      e->atom = AtomKind::In;
    } else {
      unexpected("event ('attack', 'kill', 'collide', 'die', 'in') or '('");
    }
    std::string name = next().text;
    expect(Tok::LParen);
    e->args.push_back(ident());
    if (e->atom == AtomKind::In) {
      for (int64_t& v : e->rect) {
        if (peek().kind != Tok::Comma) {
          parse_fail(peek().loc, "arity error: in() expects a symbol and 4 integer coordinates");
        }
        ++pos_;
        v = integer();
      }
    } else {
      while (peek().kind == Tok::Comma) {
        ++pos_;
        e->args.push_back(ident());
      }
      if (e->args.size() != atom_arity(e->atom)) {
        parse_fail(e->loc, "arity error: " + name + "() expects " + std::to_string(atom_arity(e->atom)) +
                               " argument(s), got " + std::to_string(e->args.size()));
      }
    }
    expect(Tok::RParen);
    return e;
  }

  static ExprPtr binary(Expr::Op op, ExprPtr l, ExprPtr r, SourceLoc loc) {
    auto e = std::make_shared<Expr>();
    e->op = op;
    e->lhs = std::move(l);
    e->rhs = std::move(r);
    e->loc = loc;
    return e;
  }

  std::vector<Token> toks_;
  size_t pos_ = 0;
};

std::string fmt_number(double v) {
  char buf[512];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed);
  if (ec != std::errc()) return "0";
  return std::string(buf, ptr);
}

void print_expr(std::ostream& os, const Expr& e) {
  auto child = [&](const Expr& c) {
    bool wrap = c.op == Expr::Op::And || c.op == Expr::Op::Or;
    if (wrap) os << '(';
    print_expr(os, c);
    if (wrap) os << ')';
  };
  switch (e.op) {
    case Expr::Op::Atom:
      os << atom_name(e.atom) << '(';
      for (size_t i = 0; i < e.args.size(); ++i) os << (i ? ", " : "") << e.args[i];
      if (e.atom == AtomKind::In) {
        for (int64_t v : e.rect) os << ", " << v;
      }
      os << ')';
      break;
    case Expr::Op::Not:
      os << "not ";
      child(*e.lhs);
      break;
    case Expr::Op::And:
    case Expr::Op::Or:
      child(*e.lhs);
      os << (e.op == Expr::Op::And ? " and " : " or ");
      child(*e.rhs);
      break;
  }
}

}  // namespace

DslError::DslError(ErrorCode code, std::vector<Diagnostic> diagnostics)
    : Error(code, format_diagnostics(diagnostics)), diagnostics_(std::move(diagnostics)) {}

const char* atom_name(AtomKind k) {
  switch (k) {
    case AtomKind::Attack: return "attack";
    case AtomKind::Kill: return "kill";
    case AtomKind::Collide: return "collide";
    case AtomKind::Die: return "die";
    case AtomKind::In: return "in";
  }
  return "?";
}

size_t atom_arity(AtomKind k) {
  switch (k) {
    case AtomKind::Attack:
    case AtomKind::Kill:
    case AtomKind::Collide: return 2;
    case AtomKind::Die:
    case AtomKind::In: return 1;
  }
  return 0;
}

bool same_structure(const Expr& a, const Expr& b) {
  if (a.op != b.op) return false;
  switch (a.op) {
    case Expr::Op::Atom:
      return a.atom == b.atom && a.args == b.args &&
             (a.atom != AtomKind::In || std::equal(std::begin(a.rect), std::end(a.rect), std::begin(b.rect)));
    case Expr::Op::Not: return same_structure(*a.lhs, *b.lhs);
    case Expr::Op::And:
    case Expr::Op::Or: return same_structure(*a.lhs, *b.lhs) && same_structure(*a.rhs, *b.rhs);
  }
  return false;
}

bool same_structure(const Program& a, const Program& b) {
  if (a.symbols.size() != b.symbols.size() || a.rules.size() != b.rules.size()) return false;
  for (size_t i = 0; i < a.symbols.size(); ++i) {
    const auto& x = a.symbols[i];
    const auto& y = b.symbols[i];
    if (x.name != y.name || x.group != y.group || x.index != y.index) return false;
    if (x.index == IndexKind::Concrete && x.member != y.member) return false;
  }
  for (size_t i = 0; i < a.rules.size(); ++i) {
    const auto& x = a.rules[i];
    const auto& y = b.rules[i];
    if (x.receivers != y.receivers || x.values != y.values || !same_structure(*x.trigger, *y.trigger)) return false;
  }
  return true;
}

Program parse_program(std::string_view text) { return Parser(lex(text)).program(); }

std::string print_program(const Program& program) {
  std::ostringstream os;
  for (const auto& s : program.symbols) {
    os << "symbol " << s.name << ": " << s.group << '[';
    switch (s.index) {
      case IndexKind::Any: os << "any"; break;
      case IndexKind::All: os << "all"; break;
      case IndexKind::Concrete: os << s.member; break;
    }
    os << "]\n";
  }
  for (const auto& r : program.rules) {
    os << "rule on ";
    print_expr(os, *r.trigger);
    os << " receiver ";
    for (size_t i = 0; i < r.receivers.size(); ++i) os << (i ? ", " : "") << r.receivers[i];
    os << " value ";
    for (size_t i = 0; i < r.values.size(); ++i) os << (i ? ", " : "") << fmt_number(r.values[i]);
    os << '\n';
  }
  return os.str();
}

}  // namespace swarmgrid::reward

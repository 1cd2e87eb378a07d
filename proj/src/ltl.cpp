#include "smdpsynth/ltl.hpp"

#include <algorithm>
#include <cctype>
#include <optional>

#include "smdpsynth/errors.hpp"

namespace smdpsynth::ltl {

int arity(Kind kind) noexcept {
  switch (kind) {
    case Kind::True:
    case Kind::False:
    case Kind::Atom:
      return 0;
    case Kind::Not:
    case Kind::Next:
    case Kind::Eventually:
    case Kind::Globally:
      return 1;
    default:
      return 2;
  }
}

Formula Formula::constant(bool value) {
  return Formula(std::make_shared<const Node>(Node{value ? Kind::True : Kind::False, {}, {}}));
}

Formula Formula::atom(std::string name) {
  return Formula(std::make_shared<const Node>(Node{Kind::Atom, std::move(name), {}}));
}

Formula Formula::unary(Kind kind, Formula operand) {
  if (arity(kind) != 1) throw Error("unary(): operator is not unary");
  return Formula(std::make_shared<const Node>(Node{kind, {}, {std::move(operand)}}));
}

Formula Formula::binary(Kind kind, Formula lhs, Formula rhs) {
  if (arity(kind) != 2) throw Error("binary(): operator is not binary");
  return Formula(std::make_shared<const Node>(Node{kind, {}, {std::move(lhs), std::move(rhs)}}));
}

bool Formula::is_literal() const noexcept {
  return kind() == Kind::Atom || (kind() == Kind::Not && lhs().kind() == Kind::Atom);
}

std::size_t Formula::depth() const noexcept {
  std::size_t d = 0;
  for (const auto& c : node_->children) d = std::max(d, c.depth());
  return d + (node_->children.empty() ? 0 : 1);
}

bool operator==(const Formula& a, const Formula& b) {
  if (a.node_ == b.node_) return true;
  if (a.kind() != b.kind() || a.name() != b.name() || a.num_children() != b.num_children())
    return false;
  for (std::size_t i = 0; i < a.num_children(); ++i)
    if (a.child(i) != b.child(i)) return false;
  return true;
}

Formula tt() { return Formula::constant(true); }
Formula ff() { return Formula::constant(false); }
Formula ap(std::string name) { return Formula::atom(std::move(name)); }
Formula neg(Formula f) { return Formula::unary(Kind::Not, std::move(f)); }
Formula conj(Formula a, Formula b) { return Formula::binary(Kind::And, std::move(a), std::move(b)); }
Formula disj(Formula a, Formula b) { return Formula::binary(Kind::Or, std::move(a), std::move(b)); }
Formula implies(Formula a, Formula b) {
  return Formula::binary(Kind::Implies, std::move(a), std::move(b));
}
Formula next(Formula f) { return Formula::unary(Kind::Next, std::move(f)); }
Formula until(Formula a, Formula b) { return Formula::binary(Kind::Until, std::move(a), std::move(b)); }
Formula release(Formula a, Formula b) {
  return Formula::binary(Kind::Release, std::move(a), std::move(b));
}
Formula eventually(Formula f) { return Formula::unary(Kind::Eventually, std::move(f)); }
Formula globally(Formula f) { return Formula::unary(Kind::Globally, std::move(f)); }

namespace {

enum class Tok { Atom, True, False, Not, Next, Eventually, Globally, Until, Release, And, Or, Implies, LParen, RParen, End };

struct Token {
  Tok type;
  std::size_t offset;
  std::string text;
};

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const std::size_t at = i;
    if (c >= 'a' && c <= 'z') {
      std::size_t j = i + 1;
      while (j < s.size() && ((s[j] >= 'a' && s[j] <= 'z') || (s[j] >= '0' && s[j] <= '9') || s[j] == '_'))
        ++j;
      std::string word(s.substr(i, j - i));
      Tok t = Tok::Atom;
      if (word == "true") t = Tok::True;
      if (word == "false") t = Tok::False;
      out.push_back({t, at, std::move(word)});
      i = j;
      continue;
    }
    switch (c) {
      case '!': out.push_back({Tok::Not, at, "!"}); break;
      case 'X': out.push_back({Tok::Next, at, "X"}); break;
      case 'F': out.push_back({Tok::Eventually, at, "F"}); break;
      case 'G': out.push_back({Tok::Globally, at, "G"}); break;
      case 'U': out.push_back({Tok::Until, at, "U"}); break;
      case 'R': out.push_back({Tok::Release, at, "R"}); break;
      case '&': out.push_back({Tok::And, at, "&"}); break;
      case '|': out.push_back({Tok::Or, at, "|"}); break;
      case '(': out.push_back({Tok::LParen, at, "("}); break;
      case ')': out.push_back({Tok::RParen, at, ")"}); break;
      case '-':
        if (i + 1 < s.size() && s[i + 1] == '>') {
          out.push_back({Tok::Implies, at, "->"});
          ++i;
          break;
        }
        [[fallthrough]];
      default:
        throw UnknownToken(std::string("unknown token '") + c + "'", at);
    }
    ++i;
  }
  out.push_back({Tok::End, s.size(), ""});
  return out;
}

// Precedence climbing; levels from loosest to tightest.
class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Formula parse_all() {
    Formula f = parse_implies();
    if (peek().type != Tok::End) throw SyntaxError("unexpected '" + peek().text + "'", peek().offset);
    return f;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& take() { return toks_[pos_++]; }

  Formula parse_implies() {
    Formula lhs = parse_or();
    if (peek().type == Tok::Implies) {
      take();
      return implies(std::move(lhs), parse_implies());
    }
    return lhs;
  }

  Formula parse_or() {
    Formula lhs = parse_and();
    while (peek().type == Tok::Or) {
      take();
      lhs = disj(std::move(lhs), parse_and());
    }
    return lhs;
  }

  Formula parse_and() {
    Formula lhs = parse_until();
    while (peek().type == Tok::And) {
      take();
      lhs = conj(std::move(lhs), parse_until());
    }
    return lhs;
  }

  Formula parse_until() {
    Formula lhs = parse_unary();
    if (peek().type == Tok::Until || peek().type == Tok::Release) {
      const Kind k = take().type == Tok::Until ? Kind::Until : Kind::Release;
      return Formula::binary(k, std::move(lhs), parse_until());
    }
    return lhs;
  }

  Formula parse_unary() {
    const Token& t = take();
    switch (t.type) {
      case Tok::Not: return neg(parse_unary());
      case Tok::Next: return next(parse_unary());
      case Tok::Eventually: return eventually(parse_unary());
      case Tok::Globally: return globally(parse_unary());
      case Tok::Atom: return ap(t.text);
      case Tok::True: return tt();
      case Tok::False: return ff();
      case Tok::LParen: {
        Formula inner = parse_implies();
        if (peek().type != Tok::RParen) throw SyntaxError("expected ')'", peek().offset);
        take();
        return inner;
      }
      case Tok::End: throw SyntaxError("unexpected end of input", t.offset);
      default: throw SyntaxError("unexpected '" + t.text + "'", t.offset);
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

const char* symbol(Kind k) {
  switch (k) {
    case Kind::Not: return "!";
    case Kind::Next: return "X";
    case Kind::Eventually: return "F";
    case Kind::Globally: return "G";
    case Kind::And: return "&";
    case Kind::Or: return "|";
    case Kind::Implies: return "->";
    case Kind::Until: return "U";
    case Kind::Release: return "R";
    default: return "?";
  }
}

void print(const Formula& f, std::string& out) {
  switch (f.kind()) {
    case Kind::True: out += "true"; return;
    case Kind::False: out += "false"; return;
    case Kind::Atom: out += f.name(); return;
    case Kind::Not:
      out += '!';
      print(f.lhs(), out);
      return;
    case Kind::Next:
    case Kind::Eventually:
    case Kind::Globally:
      out += symbol(f.kind());
      out += ' ';
      print(f.lhs(), out);
      return;
    default:
      out += '(';
      print(f.lhs(), out);
      out += ' ';
      out += symbol(f.kind());
      out += ' ';
      print(f.rhs(), out);
      out += ')';
  }
}

Formula nnf(const Formula& f, bool negated) {
  switch (f.kind()) {
    case Kind::True: return Formula::constant(!negated);
    case Kind::False: return Formula::constant(negated);
    case Kind::Atom: return negated ? neg(f) : f;
    case Kind::Not: return nnf(f.lhs(), !negated);
    case Kind::And:
      return negated ? disj(nnf(f.lhs(), true), nnf(f.rhs(), true))
                     : conj(nnf(f.lhs(), false), nnf(f.rhs(), false));
    case Kind::Or:
      return negated ? conj(nnf(f.lhs(), true), nnf(f.rhs(), true))
                     : disj(nnf(f.lhs(), false), nnf(f.rhs(), false));
    case Kind::Implies:
      return negated ? conj(nnf(f.lhs(), false), nnf(f.rhs(), true))
                     : disj(nnf(f.lhs(), true), nnf(f.rhs(), false));
    case Kind::Next: return next(nnf(f.lhs(), negated));
    case Kind::Until:
      return negated ? release(nnf(f.lhs(), true), nnf(f.rhs(), true))
                     : until(nnf(f.lhs(), false), nnf(f.rhs(), false));
    case Kind::Release:
      return negated ? until(nnf(f.lhs(), true), nnf(f.rhs(), true))
                     : release(nnf(f.lhs(), false), nnf(f.rhs(), false));
    case Kind::Eventually:
      // F p = true U p ; !F p = false R !p
      return negated ? release(ff(), nnf(f.lhs(), true)) : until(tt(), nnf(f.lhs(), false));
    case Kind::Globally:
      // G p = false R p ; !G p = true U !p
      return negated ? until(tt(), nnf(f.lhs(), true)) : release(ff(), nnf(f.lhs(), false));
  }
  return f;
}

void collect_atoms(const Formula& f, std::vector<std::string>& out) {
  if (f.kind() == Kind::Atom) {
    if (std::find(out.begin(), out.end(), f.name()) == out.end()) out.push_back(f.name());
    return;
  }
  for (std::size_t i = 0; i < f.num_children(); ++i) collect_atoms(f.child(i), out);
}

}  // namespace

Formula parse(std::string_view text) { return Parser(tokenize(text)).parse_all(); }

std::string to_string(const Formula& f) {
  std::string out;
  print(f, out);
  return out;
}

Formula to_nnf(const Formula& f) { return nnf(f, false); }

std::vector<std::string> atoms(const Formula& f) {
  std::vector<std::string> out;
  collect_atoms(f, out);
  return out;
}

}  // namespace smdpsynth::ltl

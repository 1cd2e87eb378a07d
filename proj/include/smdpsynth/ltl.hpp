#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace smdpsynth::ltl {

enum class Kind {
  True,
  False,
  Atom,
  Not,
  And,
  Or,
  Implies,
  Next,
  Until,
  Release,  // dual of Until; produced by to_nnf, also accepted by the parser
  Eventually,
  Globally,
};

int arity(Kind kind) noexcept;

/// Immutable LTL syntax tree with value semantics. Copies share nodes.
class Formula {
 public:
  static Formula constant(bool value);
  static Formula atom(std::string name);
  static Formula unary(Kind kind, Formula operand);
  static Formula binary(Kind kind, Formula lhs, Formula rhs);

  Kind kind() const noexcept { return node_->kind; }
  const std::string& name() const noexcept { return node_->name; }
  const Formula& child(std::size_t i) const { return node_->children.at(i); }
  const Formula& lhs() const { return child(0); }
  const Formula& rhs() const { return child(1); }
  std::size_t num_children() const noexcept { return node_->children.size(); }

  bool is_literal() const noexcept;
  std::size_t depth() const noexcept;

  friend bool operator==(const Formula& a, const Formula& b);
  friend bool operator!=(const Formula& a, const Formula& b) { return !(a == b); }

 private:
  struct Node {
    Kind kind;
    std::string name;
    std::vector<Formula> children;
  };
  explicit Formula(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

// Convenience builders, mostly for tests and fixtures.
Formula tt();
Formula ff();
Formula ap(std::string name);
Formula neg(Formula f);
Formula conj(Formula a, Formula b);
Formula disj(Formula a, Formula b);
Formula implies(Formula a, Formula b);
Formula next(Formula f);
Formula until(Formula a, Formula b);
Formula release(Formula a, Formula b);
Formula eventually(Formula f);
Formula globally(Formula f);

/// Parses the ASCII grammar
///   formula := binary
///   binary  := unary (("U"|"R"|"&"|"|"|"->") unary)*
///   unary   := ("!"|"X"|"F"|"G") unary | atom | "true" | "false" | "(" formula ")"
/// Precedence: unary > U,R > & > | > ->. U, R and -> associate to the right.
/// Throws UnknownToken on illegal characters and SyntaxError otherwise.
Formula parse(std::string_view text);

/// Canonical printer; parse(to_string(f)) == f for every formula.
std::string to_string(const Formula& f);

/// Negation normal form over {true,false,atom,!atom,&,|,X,U,R}.
Formula to_nnf(const Formula& f);

/// Atom names in order of first appearance (left to right).
std::vector<std::string> atoms(const Formula& f);

}  // namespace smdpsynth::ltl

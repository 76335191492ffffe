#pragma once

// Piecewise semi-algebraic scalar expressions: AST, DSL parser/printer and
// point / interval evaluation.
//
// Grammar (whitespace-insensitive):
//
//   expr   := term (("+"|"-") term)*
//   term   := unary (("*"|"/") unary)*
//   unary  := "-" unary | factor
//   factor := atom ["^" ["-"] integer]
//   atom   := number | "x" integer | "(" expr ")"
//           | ("sqrt"|"root4"|"abs"|"sign") "(" expr ")"
//           | ("min"|"max") "(" expr "," expr ")"
//           | "piecewise" "{" (guard ":" expr ";")+ "_" ":" expr "}"
//   guard  := conj ("||" conj)* ;  conj := gatom ("&&" gatom)*
//   gatom  := "!" gatom | "(" guard ")" | expr ("<"|"<="|"=="|">="|">") expr
//
// Number literals are integers or ratios written without spaces ("1/2").
// A minus sign directly in front of a literal folds into the constant.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cadtopo/interval.hpp"

namespace cadtopo {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : std::runtime_error(what + " at position " + std::to_string(position)), position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

class ArityError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Exact rational constant, always stored reduced with a positive denominator.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static Rational make(std::int64_t num, std::int64_t den);
  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }
  Interval enclosure() const;
  std::string to_string() const;
  bool operator==(const Rational&) const = default;
};

enum class ExprOp { Var, Const, Neg, Add, Sub, Mul, Div, Pow, Sqrt, Root4, Abs, Sign, Min, Max, Piecewise };
enum class GuardOp { Lt, Le, Eq, Ge, Gt, And, Or, Not };

/// Three-valued truth for guards evaluated over boxes.
enum class Tri { False, True, Unknown };

struct ExprNode;
struct GuardNode;
using ExprNodePtr = std::shared_ptr<const ExprNode>;
using GuardNodePtr = std::shared_ptr<const GuardNode>;

struct Branch {
  GuardNodePtr guard;
  ExprNodePtr value;
};

struct ExprNode {
  ExprOp op = ExprOp::Const;
  int var = 0;           // Var: 1-based index
  Rational value;        // Const
  int exponent = 0;      // Pow
  std::vector<ExprNodePtr> args;   // operands; Piecewise: args[0] is the default branch
  std::vector<Branch> branches;    // Piecewise only
  int max_var = 0;
};

struct GuardNode {
  GuardOp op = GuardOp::Lt;
  ExprNodePtr lhs, rhs;               // comparisons
  std::vector<GuardNodePtr> kids;     // And / Or / Not
  int max_var = 0;
};

class Guard;

/// Immutable expression handle: a shared AST plus its declared arity.
class Expr {
 public:
  Expr() = default;
  Expr(ExprNodePtr node, int arity);

  static Expr var(int index, int arity);
  static Expr constant(Rational r, int arity = 0);
  static Expr integer(std::int64_t v, int arity = 0) { return constant(Rational::make(v, 1), arity); }

  const ExprNode& node() const { return *node_; }
  const ExprNodePtr& node_ptr() const { return node_; }
  int arity() const { return arity_; }
  explicit operator bool() const { return static_cast<bool>(node_); }

  /// Same tree, different declared arity (must still cover every variable).
  Expr with_arity(int arity) const { return Expr(node_, arity); }

 private:
  ExprNodePtr node_;
  int arity_ = 0;
};

class Guard {
 public:
  Guard() = default;
  Guard(GuardNodePtr node, int arity);

  const GuardNode& node() const { return *node_; }
  const GuardNodePtr& node_ptr() const { return node_; }
  int arity() const { return arity_; }
  explicit operator bool() const { return static_cast<bool>(node_); }

 private:
  GuardNodePtr node_;
  int arity_ = 0;
};

// -- construction helpers (arity of the result is the max of the operands) --
Expr make_unary(ExprOp op, const Expr& a);
Expr make_binary(ExprOp op, const Expr& a, const Expr& b);
Expr make_pow(const Expr& a, int exponent);
Expr make_piecewise(const std::vector<std::pair<Guard, Expr>>& branches, const Expr& fallback);
Guard make_compare(GuardOp op, const Expr& a, const Expr& b);
Guard make_logic(GuardOp op, const std::vector<Guard>& kids);

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);

// -- DSL --
Expr parse_expr(std::string_view text, int arity);
Guard parse_guard(std::string_view text, int arity);
std::string to_string(const Expr& e);
std::string to_string(const Guard& g);

bool structurally_equal(const Expr& a, const Expr& b);
bool structurally_equal(const Guard& a, const Guard& b);

/// Replace variable x_i by replacements[i-1]; the result has the replacements' arity.
Expr substitute(const Expr& e, std::span<const Expr> replacements);
Guard substitute(const Guard& g, std::span<const Expr> replacements);

// -- evaluation --

/// Floating evaluation; nullopt where a square root of a negative number,
/// a division by zero or an exhausted piecewise occurs.
std::optional<double> eval_point(const Expr& e, std::span<const double> p);

/// Two-valued guard at a point; a comparison with an undefined side is false.
bool eval_guard_point(const Guard& g, std::span<const double> p);

/// Guard at a point where "==" holds within tol and "<=", ">=" are relaxed by tol.
bool eval_guard_tolerant(const Guard& g, std::span<const double> p, double tol);

/// Union-of-intervals enclosure of e over the box.
Enclosure eval_enclosure(const Expr& e, std::span<const Interval> box);

/// Hull enclosure; nullopt when e is undefined on the whole box.
std::optional<Interval> eval_interval(const Expr& e, std::span<const Interval> box);

Tri eval_guard(const Guard& g, std::span<const Interval> box);

/// Enclosure at a single point (tight, a few ulps wide at most).
Enclosure eval_enclosure_at(const Expr& e, std::span<const double> p);

}  // namespace cadtopo

#include "cadtopo/expr.hpp"

#include <cctype>
#include <charconv>
#include <numeric>
#include <sstream>

namespace cadtopo {

// ---------------------------------------------------------------------------
// Rational

Rational Rational::make(std::int64_t num, std::int64_t den) {
  if (den == 0) throw std::invalid_argument("rational with zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  std::int64_t g = std::gcd(num < 0 ? -num : num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
  return {num, den};
}

Interval Rational::enclosure() const {
  double n = static_cast<double>(num);
  double d = static_cast<double>(den);
  double q = n / d;
  constexpr double kExactInt = 9007199254740992.0;  // 2^53
  bool exact_inputs = std::fabs(n) < kExactInt && d < kExactInt;
  if (exact_inputs && std::fma(-q, d, n) == 0) return Interval::point(q);
  if (exact_inputs) return {rnd::down(q), rnd::up(q)};
  return {rnd::down(rnd::down(q)), rnd::up(rnd::up(q))};
}

std::string Rational::to_string() const {
  if (den == 1) return std::to_string(num);
  return std::to_string(num) + "/" + std::to_string(den);
}

// ---------------------------------------------------------------------------
// Construction

namespace {

int max_var_of(const std::vector<ExprNodePtr>& args) {
  int m = 0;
  for (const auto& a : args) m = std::max(m, a->max_var);
  return m;
}

ExprNodePtr node_unary(ExprOp op, ExprNodePtr a) {
  auto n = std::make_shared<ExprNode>();
  n->op = op;
  n->args = {std::move(a)};
  n->max_var = n->args[0]->max_var;
  return n;
}

ExprNodePtr node_binary(ExprOp op, ExprNodePtr a, ExprNodePtr b) {
  auto n = std::make_shared<ExprNode>();
  n->op = op;
  n->args = {std::move(a), std::move(b)};
  n->max_var = max_var_of(n->args);
  return n;
}

ExprNodePtr node_pow(ExprNodePtr a, int exponent) {
  auto n = std::make_shared<ExprNode>();
  n->op = ExprOp::Pow;
  n->exponent = exponent;
  n->args = {std::move(a)};
  n->max_var = n->args[0]->max_var;
  return n;
}

ExprNodePtr node_const(Rational r) {
  auto n = std::make_shared<ExprNode>();
  n->op = ExprOp::Const;
  n->value = r;
  return n;
}

ExprNodePtr node_var(int index) {
  auto n = std::make_shared<ExprNode>();
  n->op = ExprOp::Var;
  n->var = index;
  n->max_var = index;
  return n;
}

ExprNodePtr node_piecewise(std::vector<Branch> branches, ExprNodePtr fallback) {
  auto n = std::make_shared<ExprNode>();
  n->op = ExprOp::Piecewise;
  n->args = {std::move(fallback)};
  n->branches = std::move(branches);
  int m = n->args[0]->max_var;
  for (const auto& b : n->branches) m = std::max({m, b.guard->max_var, b.value->max_var});
  n->max_var = m;
  return n;
}

GuardNodePtr gnode_compare(GuardOp op, ExprNodePtr a, ExprNodePtr b) {
  auto n = std::make_shared<GuardNode>();
  n->op = op;
  n->max_var = std::max(a->max_var, b->max_var);
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  return n;
}

GuardNodePtr gnode_logic(GuardOp op, std::vector<GuardNodePtr> kids) {
  auto n = std::make_shared<GuardNode>();
  n->op = op;
  int m = 0;
  for (const auto& k : kids) m = std::max(m, k->max_var);
  n->max_var = m;
  n->kids = std::move(kids);
  return n;
}

bool is_compare(GuardOp op) {
  return op == GuardOp::Lt || op == GuardOp::Le || op == GuardOp::Eq || op == GuardOp::Ge || op == GuardOp::Gt;
}

}  // namespace

Expr::Expr(ExprNodePtr node, int arity) : node_(std::move(node)), arity_(arity) {
  if (node_ && node_->max_var > arity_)
    throw ArityError("expression references x" + std::to_string(node_->max_var) + " but arity is " +
                     std::to_string(arity_));
}

Guard::Guard(GuardNodePtr node, int arity) : node_(std::move(node)), arity_(arity) {
  if (node_ && node_->max_var > arity_)
    throw ArityError("guard references x" + std::to_string(node_->max_var) + " but arity is " +
                     std::to_string(arity_));
}

Expr Expr::var(int index, int arity) {
  if (index < 1) throw ArityError("variable index must be >= 1");
  return Expr(node_var(index), arity);
}

Expr Expr::constant(Rational r, int arity) { return Expr(node_const(r), arity); }

Expr make_unary(ExprOp op, const Expr& a) { return Expr(node_unary(op, a.node_ptr()), a.arity()); }

Expr make_binary(ExprOp op, const Expr& a, const Expr& b) {
  return Expr(node_binary(op, a.node_ptr(), b.node_ptr()), std::max(a.arity(), b.arity()));
}

Expr make_pow(const Expr& a, int exponent) { return Expr(node_pow(a.node_ptr(), exponent), a.arity()); }

Expr make_piecewise(const std::vector<std::pair<Guard, Expr>>& branches, const Expr& fallback) {
  std::vector<Branch> bs;
  int arity = fallback.arity();
  for (const auto& [g, v] : branches) {
    bs.push_back({g.node_ptr(), v.node_ptr()});
    arity = std::max({arity, g.arity(), v.arity()});
  }
  return Expr(node_piecewise(std::move(bs), fallback.node_ptr()), arity);
}

Guard make_compare(GuardOp op, const Expr& a, const Expr& b) {
  if (!is_compare(op)) throw std::invalid_argument("make_compare needs a comparison operator");
  return Guard(gnode_compare(op, a.node_ptr(), b.node_ptr()), std::max(a.arity(), b.arity()));
}

Guard make_logic(GuardOp op, const std::vector<Guard>& kids) {
  if (is_compare(op)) throw std::invalid_argument("make_logic needs a logical operator");
  if (op == GuardOp::Not && kids.size() != 1) throw std::invalid_argument("negation takes one operand");
  if (kids.empty()) throw std::invalid_argument("empty logical combination");
  if (kids.size() == 1 && op != GuardOp::Not) return kids[0];
  std::vector<GuardNodePtr> ks;
  int arity = 0;
  for (const auto& k : kids) {
    ks.push_back(k.node_ptr());
    arity = std::max(arity, k.arity());
  }
  return Guard(gnode_logic(op, std::move(ks)), arity);
}

Expr operator+(const Expr& a, const Expr& b) { return make_binary(ExprOp::Add, a, b); }
Expr operator-(const Expr& a, const Expr& b) { return make_binary(ExprOp::Sub, a, b); }
Expr operator*(const Expr& a, const Expr& b) { return make_binary(ExprOp::Mul, a, b); }
Expr operator/(const Expr& a, const Expr& b) { return make_binary(ExprOp::Div, a, b); }
Expr operator-(const Expr& a) { return make_unary(ExprOp::Neg, a); }

// ---------------------------------------------------------------------------
// Lexer / parser

namespace {

enum class Tok { Number, Var, Ident, Sym, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  std::size_t pos = 0;
  Rational number;
  int var = 0;
};

std::int64_t parse_int(std::string_view digits, std::size_t pos) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
  if (ec != std::errc() || ptr != digits.data() + digits.size()) throw ParseError("integer literal out of range", pos);
  return v;
}

std::vector<Token> lex(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  auto is_digit = [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; };
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    Token t;
    t.pos = i;
    if (is_digit(c)) {
      std::size_t j = i;
      while (j < s.size() && is_digit(s[j])) ++j;
      if (j < s.size() && s[j] == '.') throw ParseError("decimal literals are not allowed; use a ratio", j);
      std::int64_t num = parse_int(s.substr(i, j - i), i);
      std::int64_t den = 1;
      if (j + 1 < s.size() && s[j] == '/' && is_digit(s[j + 1])) {
        std::size_t k = j + 1;
        while (k < s.size() && is_digit(s[k])) ++k;
        den = parse_int(s.substr(j + 1, k - j - 1), j + 1);
        if (den == 0) throw ParseError("zero denominator in literal", j + 1);
        j = k;
      }
      t.kind = Tok::Number;
      t.number = Rational::make(num, den);
      t.text = std::string(s.substr(i, j - i));
      i = j;
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
      t.text = std::string(s.substr(i, j - i));
      if (t.text.size() > 1 && t.text[0] == 'x' &&
          std::all_of(t.text.begin() + 1, t.text.end(), [&](char ch) { return is_digit(ch); })) {
        t.kind = Tok::Var;
        t.var = static_cast<int>(parse_int(std::string_view(t.text).substr(1), i + 1));
      } else if (t.text == "_") {
        t.kind = Tok::Sym;
      } else {
        t.kind = Tok::Ident;
      }
      i = j;
    } else {
      static const char* two[] = {"<=", ">=", "==", "&&", "||"};
      bool matched = false;
      for (const char* op : two) {
        if (s.substr(i, 2) == op) {
          t.kind = Tok::Sym;
          t.text = op;
          i += 2;
          matched = true;
          break;
        }
      }
      if (!matched) {
        if (std::string_view("+-*/^(){},:;<>!").find(c) == std::string_view::npos)
          throw ParseError(std::string("unexpected character '") + c + "'", i);
        t.kind = Tok::Sym;
        t.text = std::string(1, c);
        ++i;
      }
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.kind = Tok::End;
  end.pos = s.size();
  out.push_back(end);
  return out;
}

class Parser {
 public:
  Parser(std::string_view text, int arity) : tokens_(lex(text)), arity_(arity) {}

  ExprNodePtr parse_top_expr() {
    auto e = expr();
    if (peek().kind != Tok::End) fail("unexpected trailing input '" + peek().text + "'");
    return e;
  }

  GuardNodePtr parse_top_guard() {
    auto g = guard();
    if (peek().kind != Tok::End) fail("unexpected trailing input '" + peek().text + "'");
    return g;
  }

 private:
  std::vector<Token> tokens_;
  std::size_t at_ = 0;
  int arity_;

  const Token& peek(std::size_t ahead = 0) const { return tokens_[std::min(at_ + ahead, tokens_.size() - 1)]; }
  bool is_sym(const char* s, std::size_t ahead = 0) const {
    const Token& t = peek(ahead);
    return t.kind == Tok::Sym && t.text == s;
  }
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, peek().pos); }
  void expect(const char* s) {
    if (!is_sym(s)) fail(std::string("expected '") + s + "'");
    ++at_;
  }

  ExprNodePtr expr() {
    auto lhs = term();
    while (is_sym("+") || is_sym("-")) {
      ExprOp op = is_sym("+") ? ExprOp::Add : ExprOp::Sub;
      ++at_;
      lhs = node_binary(op, lhs, term());
    }
    return lhs;
  }

  ExprNodePtr term() {
    auto lhs = unary();
    while (is_sym("*") || is_sym("/")) {
      ExprOp op = is_sym("*") ? ExprOp::Mul : ExprOp::Div;
      ++at_;
      lhs = node_binary(op, lhs, unary());
    }
    return lhs;
  }

  ExprNodePtr unary() {
    if (is_sym("-")) {
      if (peek(1).kind == Tok::Number && !is_sym("^", 2)) {
        Rational r = peek(1).number;
        at_ += 2;
        return node_const(Rational::make(-r.num, r.den));
      }
      ++at_;
      return node_unary(ExprOp::Neg, unary());
    }
    return factor();
  }

  ExprNodePtr factor() {
    auto base = atom();
    if (is_sym("^")) {
      ++at_;
      bool neg = false;
      if (is_sym("-")) {
        neg = true;
        ++at_;
      }
      if (peek().kind != Tok::Number || peek().number.den != 1) fail("exponent must be an integer literal");
      auto e = peek().number.num;
      ++at_;
      if (e > 64) fail("exponent too large");
      return node_pow(base, static_cast<int>(neg ? -e : e));
    }
    return base;
  }

  ExprNodePtr atom() {
    const Token& t = peek();
    if (t.kind == Tok::Number) {
      ++at_;
      return node_const(t.number);
    }
    if (t.kind == Tok::Var) {
      if (t.var < 1 || t.var > arity_)
        throw ArityError("variable x" + std::to_string(t.var) + " out of arity " + std::to_string(arity_) +
                         " at position " + std::to_string(t.pos));
      ++at_;
      return node_var(t.var);
    }
    if (is_sym("(")) {
      ++at_;
      auto e = expr();
      expect(")");
      return e;
    }
    if (t.kind == Tok::Ident) {
      const std::string name = t.text;
      ++at_;
      if (name == "sqrt" || name == "root4" || name == "abs" || name == "sign") {
        expect("(");
        auto a = expr();
        expect(")");
        ExprOp op = name == "sqrt" ? ExprOp::Sqrt : name == "root4" ? ExprOp::Root4 : name == "abs" ? ExprOp::Abs : ExprOp::Sign;
        return node_unary(op, a);
      }
      if (name == "min" || name == "max") {
        expect("(");
        auto a = expr();
        expect(",");
        auto b = expr();
        expect(")");
        return node_binary(name == "min" ? ExprOp::Min : ExprOp::Max, a, b);
      }
      if (name == "piecewise") return piecewise();
      --at_;
      fail("unknown identifier '" + name + "'");
    }
    fail(t.kind == Tok::End ? std::string("unexpected end of input") : "unexpected token '" + t.text + "'");
  }

  ExprNodePtr piecewise() {
    expect("{");
    std::vector<Branch> branches;
    while (!is_sym("_")) {
      if (peek().kind == Tok::End) fail("unterminated piecewise");
      auto g = guard();
      expect(":");
      auto v = expr();
      expect(";");
      branches.push_back({g, v});
    }
    if (branches.empty()) fail("piecewise needs at least one guarded branch");
    ++at_;
    expect(":");
    auto fallback = expr();
    if (is_sym(";")) ++at_;
    expect("}");
    return node_piecewise(std::move(branches), fallback);
  }

  GuardNodePtr guard() {
    std::vector<GuardNodePtr> kids{conj()};
    while (is_sym("||")) {
      ++at_;
      kids.push_back(conj());
    }
    return kids.size() == 1 ? kids[0] : gnode_logic(GuardOp::Or, std::move(kids));
  }

  GuardNodePtr conj() {
    std::vector<GuardNodePtr> kids{gatom()};
    while (is_sym("&&")) {
      ++at_;
      kids.push_back(gatom());
    }
    return kids.size() == 1 ? kids[0] : gnode_logic(GuardOp::And, std::move(kids));
  }

  bool at_compare_or_arith() const {
    for (const char* s : {"<", "<=", "==", ">=", ">", "+", "-", "*", "/", "^"})
      if (is_sym(s)) return true;
    return false;
  }

  GuardNodePtr gatom() {
    if (is_sym("!")) {
      ++at_;
      return gnode_logic(GuardOp::Not, {gatom()});
    }
    if (is_sym("(")) {
      std::size_t saved = at_;
      try {
        ++at_;
        auto g = guard();
        expect(")");
        if (at_compare_or_arith()) fail("parenthesised expression");
        return g;
      } catch (const ParseError&) {
        at_ = saved;
      }
    }
    auto lhs = expr();
    GuardOp op;
    if (is_sym("<"))
      op = GuardOp::Lt;
    else if (is_sym("<="))
      op = GuardOp::Le;
    else if (is_sym("=="))
      op = GuardOp::Eq;
    else if (is_sym(">="))
      op = GuardOp::Ge;
    else if (is_sym(">"))
      op = GuardOp::Gt;
    else
      fail("expected comparison operator");
    ++at_;
    auto rhs = expr();
    return gnode_compare(op, lhs, rhs);
  }
};

}  // namespace

Expr parse_expr(std::string_view text, int arity) {
  Parser p(text, arity);
  return Expr(p.parse_top_expr(), arity);
}

Guard parse_guard(std::string_view text, int arity) {
  Parser p(text, arity);
  return Guard(p.parse_top_guard(), arity);
}

// ---------------------------------------------------------------------------
// Printer

namespace {

void print_node(std::ostream& os, const ExprNode& n);
void print_guard(std::ostream& os, const GuardNode& g);

const char* binary_symbol(ExprOp op) {
  switch (op) {
    case ExprOp::Add: return " + ";
    case ExprOp::Sub: return " - ";
    case ExprOp::Mul: return " * ";
    case ExprOp::Div: return " / ";
    default: return "?";
  }
}

const char* compare_symbol(GuardOp op) {
  switch (op) {
    case GuardOp::Lt: return " < ";
    case GuardOp::Le: return " <= ";
    case GuardOp::Eq: return " == ";
    case GuardOp::Ge: return " >= ";
    case GuardOp::Gt: return " > ";
    default: return "?";
  }
}

void print_node(std::ostream& os, const ExprNode& n) {
  switch (n.op) {
    case ExprOp::Var: os << 'x' << n.var; return;
    case ExprOp::Const: os << n.value.to_string(); return;
    case ExprOp::Neg:
      os << "-(";
      print_node(os, *n.args[0]);
      os << ')';
      return;
    case ExprOp::Add:
    case ExprOp::Sub:
    case ExprOp::Mul:
    case ExprOp::Div:
      os << '(';
      print_node(os, *n.args[0]);
      os << binary_symbol(n.op);
      print_node(os, *n.args[1]);
      os << ')';
      return;
    case ExprOp::Pow: {
      const ExprNode& b = *n.args[0];
      bool wrap = b.op == ExprOp::Neg || b.op == ExprOp::Pow || (b.op == ExprOp::Const && b.value.num < 0);
      if (wrap) os << '(';
      print_node(os, b);
      if (wrap) os << ')';
      os << '^' << n.exponent;
      return;
    }
    case ExprOp::Sqrt:
    case ExprOp::Root4:
    case ExprOp::Abs:
    case ExprOp::Sign:
      os << (n.op == ExprOp::Sqrt ? "sqrt(" : n.op == ExprOp::Root4 ? "root4(" : n.op == ExprOp::Abs ? "abs(" : "sign(");
      print_node(os, *n.args[0]);
      os << ')';
      return;
    case ExprOp::Min:
    case ExprOp::Max:
      os << (n.op == ExprOp::Min ? "min(" : "max(");
      print_node(os, *n.args[0]);
      os << ", ";
      print_node(os, *n.args[1]);
      os << ')';
      return;
    case ExprOp::Piecewise:
      os << "piecewise{ ";
      for (const auto& b : n.branches) {
        print_guard(os, *b.guard);
        os << " : ";
        print_node(os, *b.value);
        os << " ; ";
      }
      os << "_ : ";
      print_node(os, *n.args[0]);
      os << " }";
      return;
  }
}

void print_guard(std::ostream& os, const GuardNode& g) {
  if (is_compare(g.op)) {
    print_node(os, *g.lhs);
    os << compare_symbol(g.op);
    print_node(os, *g.rhs);
    return;
  }
  if (g.op == GuardOp::Not) {
    os << "!(";
    print_guard(os, *g.kids[0]);
    os << ')';
    return;
  }
  os << '(';
  for (std::size_t i = 0; i < g.kids.size(); ++i) {
    if (i) os << (g.op == GuardOp::And ? " && " : " || ");
    print_guard(os, *g.kids[i]);
  }
  os << ')';
}

}  // namespace

std::string to_string(const Expr& e) {
  std::ostringstream os;
  print_node(os, e.node());
  return os.str();
}

std::string to_string(const Guard& g) {
  std::ostringstream os;
  print_guard(os, g.node());
  return os.str();
}

// ---------------------------------------------------------------------------
// Structural equality and substitution

namespace {

bool equal_nodes(const ExprNode& a, const ExprNode& b);

bool equal_guards(const GuardNode& a, const GuardNode& b) {
  if (a.op != b.op) return false;
  if (is_compare(a.op)) return equal_nodes(*a.lhs, *b.lhs) && equal_nodes(*a.rhs, *b.rhs);
  if (a.kids.size() != b.kids.size()) return false;
  for (std::size_t i = 0; i < a.kids.size(); ++i)
    if (!equal_guards(*a.kids[i], *b.kids[i])) return false;
  return true;
}

bool equal_nodes(const ExprNode& a, const ExprNode& b) {
  if (&a == &b) return true;
  if (a.op != b.op || a.var != b.var || !(a.value == b.value) || a.exponent != b.exponent) return false;
  if (a.args.size() != b.args.size() || a.branches.size() != b.branches.size()) return false;
  for (std::size_t i = 0; i < a.args.size(); ++i)
    if (!equal_nodes(*a.args[i], *b.args[i])) return false;
  for (std::size_t i = 0; i < a.branches.size(); ++i)
    if (!equal_guards(*a.branches[i].guard, *b.branches[i].guard) ||
        !equal_nodes(*a.branches[i].value, *b.branches[i].value))
      return false;
  return true;
}

GuardNodePtr subst_guard(const GuardNodePtr& g, std::span<const Expr> repl);

ExprNodePtr subst_node(const ExprNodePtr& n, std::span<const Expr> repl) {
  switch (n->op) {
    case ExprOp::Var:
      if (n->var > static_cast<int>(repl.size()))
        throw ArityError("substitution misses a replacement for x" + std::to_string(n->var));
      return repl[n->var - 1].node_ptr();
    case ExprOp::Const: return n;
    case ExprOp::Pow: return node_pow(subst_node(n->args[0], repl), n->exponent);
    case ExprOp::Piecewise: {
      std::vector<Branch> bs;
      for (const auto& b : n->branches) bs.push_back({subst_guard(b.guard, repl), subst_node(b.value, repl)});
      return node_piecewise(std::move(bs), subst_node(n->args[0], repl));
    }
    default: break;
  }
  if (n->args.size() == 1) return node_unary(n->op, subst_node(n->args[0], repl));
  return node_binary(n->op, subst_node(n->args[0], repl), subst_node(n->args[1], repl));
}

GuardNodePtr subst_guard(const GuardNodePtr& g, std::span<const Expr> repl) {
  if (is_compare(g->op)) return gnode_compare(g->op, subst_node(g->lhs, repl), subst_node(g->rhs, repl));
  std::vector<GuardNodePtr> kids;
  for (const auto& k : g->kids) kids.push_back(subst_guard(k, repl));
  return gnode_logic(g->op, std::move(kids));
}

int common_arity(std::span<const Expr> repl) {
  int a = 0;
  for (const auto& r : repl) a = std::max(a, r.arity());
  return a;
}

}  // namespace

bool structurally_equal(const Expr& a, const Expr& b) {
  return a.arity() == b.arity() && equal_nodes(a.node(), b.node());
}

bool structurally_equal(const Guard& a, const Guard& b) {
  return a.arity() == b.arity() && equal_guards(a.node(), b.node());
}

Expr substitute(const Expr& e, std::span<const Expr> replacements) {
  return Expr(subst_node(e.node_ptr(), replacements), common_arity(replacements));
}

Guard substitute(const Guard& g, std::span<const Expr> replacements) {
  return Guard(subst_guard(g.node_ptr(), replacements), common_arity(replacements));
}

// ---------------------------------------------------------------------------
// Point evaluation

namespace {

std::optional<double> eval_node(const ExprNode& n, std::span<const double> p);

std::optional<bool> compare_point(GuardOp op, double a, double b, double tol) {
  switch (op) {
    case GuardOp::Lt: return a < b + tol;
    case GuardOp::Le: return a <= b + tol;
    case GuardOp::Eq: return std::fabs(a - b) <= tol;
    case GuardOp::Ge: return a + tol >= b;
    case GuardOp::Gt: return a + tol > b;
    default: return std::nullopt;
  }
}

bool guard_point(const GuardNode& g, std::span<const double> p, double tol) {
  switch (g.op) {
    case GuardOp::And:
      for (const auto& k : g.kids)
        if (!guard_point(*k, p, tol)) return false;
      return true;
    case GuardOp::Or:
      for (const auto& k : g.kids)
        if (guard_point(*k, p, tol)) return true;
      return false;
    case GuardOp::Not: return !guard_point(*g.kids[0], p, tol);
    default: break;
  }
  auto a = eval_node(*g.lhs, p);
  auto b = eval_node(*g.rhs, p);
  if (!a || !b) return false;
  return *compare_point(g.op, *a, *b, tol);
}

double ipow(double x, int n) {
  double r = 1;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

std::optional<double> eval_node(const ExprNode& n, std::span<const double> p) {
  switch (n.op) {
    case ExprOp::Var: return p[static_cast<std::size_t>(n.var - 1)];
    case ExprOp::Const: return n.value.to_double();
    case ExprOp::Piecewise:
      for (const auto& b : n.branches)
        if (guard_point(*b.guard, p, 0.0)) return eval_node(*b.value, p);
      return eval_node(*n.args[0], p);
    default: break;
  }
  auto a = eval_node(*n.args[0], p);
  if (!a) return std::nullopt;
  double x = *a;
  switch (n.op) {
    case ExprOp::Neg: return -x;
    case ExprOp::Pow:
      if (n.exponent >= 0) return ipow(x, n.exponent);
      if (x == 0) return std::nullopt;
      return 1.0 / ipow(x, -n.exponent);
    case ExprOp::Sqrt:
      if (x < 0) return std::nullopt;
      return std::sqrt(x);
    case ExprOp::Root4:
      if (x < 0) return std::nullopt;
      return std::sqrt(std::sqrt(x));
    case ExprOp::Abs: return std::fabs(x);
    case ExprOp::Sign: return static_cast<double>((x > 0) - (x < 0));
    default: break;
  }
  auto b = eval_node(*n.args[1], p);
  if (!b) return std::nullopt;
  double y = *b;
  switch (n.op) {
    case ExprOp::Add: return x + y;
    case ExprOp::Sub: return x - y;
    case ExprOp::Mul: return x * y;
    case ExprOp::Div:
      if (y == 0) return std::nullopt;
      return x / y;
    case ExprOp::Min: return std::min(x, y);
    case ExprOp::Max: return std::max(x, y);
    default: return std::nullopt;
  }
}

}  // namespace

std::optional<double> eval_point(const Expr& e, std::span<const double> p) {
  if (static_cast<int>(p.size()) != e.arity())
    throw ArityError("point has " + std::to_string(p.size()) + " coordinates, expression arity is " +
                     std::to_string(e.arity()));
  return eval_node(e.node(), p);
}

bool eval_guard_point(const Guard& g, std::span<const double> p) {
  if (static_cast<int>(p.size()) != g.arity()) throw ArityError("guard arity mismatch");
  return guard_point(g.node(), p, 0.0);
}

bool eval_guard_tolerant(const Guard& g, std::span<const double> p, double tol) {
  if (static_cast<int>(p.size()) != g.arity()) throw ArityError("guard arity mismatch");
  return guard_point(g.node(), p, tol);
}

// ---------------------------------------------------------------------------
// Interval evaluation

namespace {

Enclosure enc_node(const ExprNode& n, std::span<const Interval> box);
Tri guard_box(const GuardNode& g, std::span<const Interval> box);

template <typename F>
Enclosure map_unary(const Enclosure& a, F&& f) {
  Enclosure out;
  out.set_partial(a.partial());
  for (const auto& p : a.pieces()) f(p, out);
  out.normalize();
  return out;
}

template <typename F>
Enclosure map_binary(const Enclosure& a, const Enclosure& b, F&& f) {
  Enclosure out;
  out.set_partial(a.partial() || b.partial());
  if (a.empty() || b.empty()) {
    if (!a.empty() || !b.empty()) out.set_partial();
    return out;
  }
  for (const auto& p : a.pieces())
    for (const auto& q : b.pieces()) f(p, q, out);
  out.normalize();
  return out;
}

void sqrt_piece(const Interval& p, Enclosure& out) {
  if (p.hi < 0) {
    out.set_partial();
    return;
  }
  if (p.lo < 0) out.set_partial();
  out.add({rnd::sqrt_down(std::max(p.lo, 0.0)), rnd::sqrt_up(p.hi)});
}

void divide_piece(const Interval& p, const Interval& q, Enclosure& out) {
  if (q.lo > 0 || q.hi < 0) {
    out.add(p * recip_nonstraddling(q));
    return;
  }
  out.set_partial();
  if (q.lo < 0) out.add(p * recip_nonstraddling({q.lo, 0.0}));
  if (q.hi > 0) out.add(p * recip_nonstraddling({0.0, q.hi}));
}

Interval pow_piece_positive(const Interval& p, int n) {
  if (p.lo >= 0) return pow_nonneg(p, n);
  if (p.hi <= 0) {
    Interval m = pow_nonneg(-p, n);
    return n % 2 == 0 ? m : -m;
  }
  double mag = std::max(-p.lo, p.hi);
  if (n % 2 == 0) return {0.0, pow_nonneg({mag, mag}, n).hi};
  return {-pow_nonneg({-p.lo, -p.lo}, n).hi, pow_nonneg({p.hi, p.hi}, n).hi};
}

Enclosure enc_node(const ExprNode& n, std::span<const Interval> box) {
  switch (n.op) {
    case ExprOp::Var: return Enclosure(box[static_cast<std::size_t>(n.var - 1)]);
    case ExprOp::Const: return Enclosure(n.value.enclosure());
    case ExprOp::Piecewise: {
      Enclosure out;
      bool decided = false;
      for (const auto& b : n.branches) {
        Tri t = guard_box(*b.guard, box);
        if (t == Tri::False) continue;
        out.merge_from(enc_node(*b.value, box));
        if (t == Tri::True) {
          decided = true;
          break;
        }
      }
      if (!decided) out.merge_from(enc_node(*n.args[0], box));
      out.normalize();
      return out;
    }
    default: break;
  }
  Enclosure a = enc_node(*n.args[0], box);
  switch (n.op) {
    case ExprOp::Neg:
      return map_unary(a, [](const Interval& p, Enclosure& out) { out.add(-p); });
    case ExprOp::Pow: {
      int e = n.exponent;
      if (e == 0) return map_unary(a, [](const Interval&, Enclosure& out) { out.add(Interval::point(1)); });
      if (e > 0) return map_unary(a, [e](const Interval& p, Enclosure& out) { out.add(pow_piece_positive(p, e)); });
      return map_unary(a, [e](const Interval& p, Enclosure& out) {
        divide_piece(Interval::point(1), pow_piece_positive(p, -e), out);
      });
    }
    case ExprOp::Sqrt: return map_unary(a, sqrt_piece);
    case ExprOp::Root4: return map_unary(map_unary(a, sqrt_piece), sqrt_piece);
    case ExprOp::Abs:
      return map_unary(a, [](const Interval& p, Enclosure& out) {
        if (p.lo >= 0)
          out.add(p);
        else if (p.hi <= 0)
          out.add(-p);
        else
          out.add({0.0, std::max(-p.lo, p.hi)});
      });
    case ExprOp::Sign:
      return map_unary(a, [](const Interval& p, Enclosure& out) {
        if (p.lo < 0) out.add(Interval::point(-1));
        if (p.lo <= 0 && p.hi >= 0) out.add(Interval::point(0));
        if (p.hi > 0) out.add(Interval::point(1));
      });
    default: break;
  }
  Enclosure b = enc_node(*n.args[1], box);
  switch (n.op) {
    case ExprOp::Add:
      return map_binary(a, b, [](const Interval& p, const Interval& q, Enclosure& out) { out.add(p + q); });
    case ExprOp::Sub:
      return map_binary(a, b, [](const Interval& p, const Interval& q, Enclosure& out) { out.add(p - q); });
    case ExprOp::Mul:
      return map_binary(a, b, [](const Interval& p, const Interval& q, Enclosure& out) { out.add(p * q); });
    case ExprOp::Div: return map_binary(a, b, divide_piece);
    case ExprOp::Min:
      return map_binary(a, b, [](const Interval& p, const Interval& q, Enclosure& out) {
        out.add({std::min(p.lo, q.lo), std::min(p.hi, q.hi)});
      });
    case ExprOp::Max:
      return map_binary(a, b, [](const Interval& p, const Interval& q, Enclosure& out) {
        out.add({std::max(p.lo, q.lo), std::max(p.hi, q.hi)});
      });
    default: return {};
  }
}

Tri tri_not(Tri t) { return t == Tri::True ? Tri::False : t == Tri::False ? Tri::True : Tri::Unknown; }

Tri compare_box(GuardOp op, const Enclosure& a, const Enclosure& b) {
  if (a.empty() || b.empty()) return Tri::False;
  bool partial = a.partial() || b.partial();
  auto yes = [partial] { return partial ? Tri::Unknown : Tri::True; };
  switch (op) {
    case GuardOp::Lt:
      if (a.max() < b.min()) return yes();
      if (a.min() >= b.max()) return Tri::False;
      return Tri::Unknown;
    case GuardOp::Le:
      if (a.max() <= b.min()) return yes();
      if (a.min() > b.max()) return Tri::False;
      return Tri::Unknown;
    case GuardOp::Gt: return compare_box(GuardOp::Lt, b, a);
    case GuardOp::Ge: return compare_box(GuardOp::Le, b, a);
    case GuardOp::Eq: {
      const auto& pa = a.pieces();
      const auto& pb = b.pieces();
      if (pa.size() == 1 && pb.size() == 1 && pa[0].is_point() && pa[0] == pb[0]) return yes();
      for (const auto& x : pa)
        for (const auto& y : pb)
          if (overlaps(x, y)) return Tri::Unknown;
      return Tri::False;
    }
    default: return Tri::Unknown;
  }
}

Tri guard_box(const GuardNode& g, std::span<const Interval> box) {
  switch (g.op) {
    case GuardOp::And: {
      Tri acc = Tri::True;
      for (const auto& k : g.kids) {
        Tri t = guard_box(*k, box);
        if (t == Tri::False) return Tri::False;
        if (t == Tri::Unknown) acc = Tri::Unknown;
      }
      return acc;
    }
    case GuardOp::Or: {
      Tri acc = Tri::False;
      for (const auto& k : g.kids) {
        Tri t = guard_box(*k, box);
        if (t == Tri::True) return Tri::True;
        if (t == Tri::Unknown) acc = Tri::Unknown;
      }
      return acc;
    }
    case GuardOp::Not: return tri_not(guard_box(*g.kids[0], box));
    default: return compare_box(g.op, enc_node(*g.lhs, box), enc_node(*g.rhs, box));
  }
}

}  // namespace

Enclosure eval_enclosure(const Expr& e, std::span<const Interval> box) {
  if (static_cast<int>(box.size()) != e.arity())
    throw ArityError("box has " + std::to_string(box.size()) + " coordinates, expression arity is " +
                     std::to_string(e.arity()));
  return enc_node(e.node(), box);
}

std::optional<Interval> eval_interval(const Expr& e, std::span<const Interval> box) {
  Enclosure enc = eval_enclosure(e, box);
  if (enc.empty()) return std::nullopt;
  return enc.hull();
}

Tri eval_guard(const Guard& g, std::span<const Interval> box) {
  if (static_cast<int>(box.size()) != g.arity()) throw ArityError("guard arity mismatch");
  return guard_box(g.node(), box);
}

Enclosure eval_enclosure_at(const Expr& e, std::span<const double> p) {
  std::vector<Interval> box;
  box.reserve(p.size());
  for (double v : p) box.push_back(Interval::point(v));
  return eval_enclosure(e, box);
}

}  // namespace cadtopo

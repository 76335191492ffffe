#include <doctest.h>

#include <cmath>
#include <random>

#include "cadtopo/expr.hpp"
#include "cadtopo/rng.hpp"

using namespace cadtopo;

namespace {

double at(const Expr& e, std::initializer_list<double> p) {
  std::vector<double> v(p);
  auto r = eval_point(e, v);
  REQUIRE(r.has_value());
  return *r;
}

}  // namespace

TEST_CASE("parse and evaluate polynomials") {
  auto e = parse_expr("x1^2 - 2*x1*x2 + 1", 2);
  CHECK(at(e, {3, 1}) == doctest::Approx(4));
  CHECK(at(parse_expr("-(x2^2+x3^2)/x1", 3), {2, 1, 1}) == doctest::Approx(-1));
  CHECK(at(parse_expr("root4(16)", 0), {}) == doctest::Approx(2));
  CHECK(at(parse_expr("abs(-3) + min(1, 2) + max(1, 2)", 0), {}) == doctest::Approx(6));
}

TEST_CASE("sign of zero is zero") {
  auto s = parse_expr("sign(x1)", 1);
  CHECK(at(s, {0.0}) == 0.0);
  CHECK(at(s, {-0.0}) == 0.0);
  CHECK(at(s, {-2}) == -1.0);
  CHECK(at(s, {1e-300}) == 1.0);
  Interval z = Interval::point(0);
  auto enc = eval_enclosure(s, std::span<const Interval>(&z, 1));
  CHECK(enc.hull().lo == 0.0);
  CHECK(enc.hull().hi == 0.0);
}

TEST_CASE("undefined points") {
  CHECK_FALSE(eval_point(parse_expr("sqrt(x1)", 1), std::vector<double>{-1}).has_value());
  CHECK_FALSE(eval_point(parse_expr("1/x1", 1), std::vector<double>{0}).has_value());
  Interval b{-1, 1};
  auto enc = eval_enclosure(parse_expr("sqrt(x1)", 1), std::span<const Interval>(&b, 1));
  CHECK(enc.partial());
  CHECK(enc.hull().lo == 0.0);
}

TEST_CASE("division by an interval through zero splits") {
  Interval b{-1, 2};
  auto enc = eval_enclosure(parse_expr("1/x1", 1), std::span<const Interval>(&b, 1));
  REQUIRE(enc.pieces().size() == 2);
  CHECK(enc.pieces()[0].hi <= -1.0);
  CHECK(enc.pieces()[1].lo <= 0.5);
  CHECK_FALSE(enc.contains(0.25));
}

TEST_CASE("rational constants are enclosed") {
  auto e = parse_expr("1/3", 0);
  auto enc = eval_enclosure(e, {});
  CHECK(enc.hull().lo <= 1.0 / 3.0);
  CHECK(enc.hull().hi >= 1.0 / 3.0);
  CHECK(enc.hull().width() < 1e-15);
}

TEST_CASE("enclosures contain sampled values") {
  const char* srcs[] = {
      "x1^2 - 2*x1*x2 + x2^3",
      "sqrt(x1^2 + x2^2) - x1",
      "sign(x2)*sqrt((sqrt(x1^2+x2^2)-x1)/2) + 2*root4(x1^2+x2^2)",
      "(x1 - x2)/(1 + x1^2)",
      "piecewise{ x1 < 0 && x2 < 0 : x1 ; _ : 0 }",
      "abs(x1 - 1/3) * min(x1, x2) - max(x2, 1/7)",
  };
  Rng rng(42);
  for (const char* src : srcs) {
    auto e = parse_expr(src, 2);
    for (int trial = 0; trial < 200; ++trial) {
      double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2);
      double wa = rng.uniform(0, 1) * std::exp2(-30 * rng.uniform());
      double wb = rng.uniform(0, 1) * std::exp2(-30 * rng.uniform());
      std::vector<Interval> box{{a, a + wa}, {b, b + wb}};
      auto enc = eval_enclosure(e, box);
      for (int k = 0; k < 20; ++k) {
        std::vector<double> p{rng.uniform(a, a + wa), rng.uniform(b, b + wb)};
        auto v = eval_point(e, p);
        if (!v) continue;
        INFO(src << " at " << p[0] << ", " << p[1]);
        CHECK(enc.contains(*v));
      }
    }
  }
}

TEST_CASE("three-valued guards") {
  auto g = parse_guard("x1 < 0", 1);
  std::vector<Interval> neg{{-1, -0.5}}, mixed{{-1, 1}}, pos{{0.5, 1}};
  CHECK(eval_guard(g, neg) == Tri::True);
  CHECK(eval_guard(g, mixed) == Tri::Unknown);
  CHECK(eval_guard(g, pos) == Tri::False);
  auto slit = parse_guard("x1^2+x2^2 < 1 && !(x2 == 0 && x1 <= 0)", 2);
  CHECK(eval_guard_point(slit, std::vector<double>{0.5, 0}));
  CHECK_FALSE(eval_guard_point(slit, std::vector<double>{-0.5, 0}));
  CHECK(eval_guard_point(slit, std::vector<double>{-0.5, 1e-12}));
}

TEST_CASE("printing round-trips") {
  const char* srcs[] = {"x1^2 - 2*x1*x2 + 1", "sign(x2)*sqrt(1/4-(x1+1/2)^2)",
                        "piecewise{ -1 < x1 && x1 < 0 : x2 ; _ : 0 }", "-(x2^2+x3^2)/x1 + 1/2"};
  for (const char* src : srcs) {
    auto e = parse_expr(src, 3);
    auto back = parse_expr(to_string(e), 3);
    INFO(src << " printed as " << to_string(e));
    CHECK(structurally_equal(e, back));
  }
}

TEST_CASE("substitution composes") {
  auto f = parse_expr("x1*x2", 2);
  std::vector<Expr> with{parse_expr("x1+x2", 2), parse_expr("x1-x2", 2)};
  auto g = substitute(f, with);
  CHECK(at(g, {3, 1}) == doctest::Approx(8));
}

TEST_CASE("parse errors") {
  CHECK_THROWS_AS(parse_expr("x1 +", 1), ParseError);
  CHECK_THROWS_AS(parse_expr("foo(x1)", 1), ParseError);
  CHECK_THROWS_AS(parse_expr("(x1", 1), ParseError);
  CHECK_THROWS_AS(parse_expr("x3", 2), ArityError);
  CHECK_THROWS_AS(parse_guard("x1 <", 1), ParseError);
  CHECK_THROWS_AS(eval_point(parse_expr("x1", 1), std::vector<double>{1, 2}), ArityError);
}

#include <doctest.h>

#include <cmath>

#include "cadtopo/oracles.hpp"

using namespace cadtopo;

namespace {

CellPtr unit_disk() {
  Curve upper{{parse_expr("x1", 1), parse_expr("sqrt(1 - x1^2)", 1)}, -1, 1};
  Curve lower{{parse_expr("x1", 1), parse_expr("-sqrt(1 - x1^2)", 1)}, -1, 1};
  return make_region(2, parse_guard("x1^2 + x2^2 < 1", 2), {{-1, 1}, {-1, 1}}, {upper, lower}, "disk");
}

// Open disk minus the slit {x2 = 0, x1 <= 0}.
CellPtr slit_disk() {
  return make_region(2, parse_guard("x1^2+x2^2 < 1 && !(x2 == 0 && x1 <= 0)", 2), {{-1, 1}, {-1, 1}}, {}, "Ds");
}

ClosureKind closure(const CellPtr& c, std::vector<double> p, std::uint64_t seed = 1) {
  Rng rng(seed);
  return closure_contains(*c, p, OracleConfig{}, rng).kind;
}

}  // namespace

TEST_CASE("closure of an open disk") {
  auto d = unit_disk();
  CHECK(closure(d, {0.2, 0.1}) == ClosureKind::Yes);
  CHECK(closure(d, {1, 0}) == ClosureKind::Yes);
  CHECK(closure(d, {0.6, -0.8}) == ClosureKind::Yes);
  CHECK(closure(d, {1.5, 0}) == ClosureKind::No);
  CHECK(closure(d, {1 + 1e-3, 0}) == ClosureKind::No);
  Rng rng(2);
  std::vector<double> far{2, 0};
  auto v = closure_contains(*d, far, OracleConfig{}, rng, true);
  REQUIRE(v.kind == ClosureKind::No);
  CHECK(v.separation <= 1.0);
  CHECK(v.separation > 0.99);
}

TEST_CASE("witness chains shrink") {
  auto d = unit_disk();
  Rng rng(5);
  std::vector<double> p{0, 1};
  auto v = closure_contains(*d, p, OracleConfig{}, rng);
  REQUIRE(v.kind == ClosureKind::Yes);
  for (const auto& [eps, w] : v.witnesses) {
    CHECK(distance(w, p) <= eps);
    CHECK(contains(*d, w) == Membership::In);
  }
}

TEST_CASE("ball certificates") {
  auto d = unit_disk();
  std::vector<double> p{1.5, 0};
  CHECK(certify_ball_empty(*d, p, 0.4, 4000));
  CHECK_FALSE(certify_ball_empty(*d, p, 0.6, 4000));
}

TEST_CASE("closure of a graph with a jump across the slit") {
  auto sec = make_section(slit_disk(), parse_expr("sign(x2)", 2));
  CHECK(closure(sec, {-0.5, 0, 1}) == ClosureKind::Yes);
  CHECK(closure(sec, {-0.5, 0, -1}) == ClosureKind::Yes);
  CHECK(closure(sec, {0.5, 0, 0}) == ClosureKind::Yes);
  CHECK(closure(sec, {-0.5, 0, 0.5}) == ClosureKind::No);
}

TEST_CASE("boundary samples are closure points outside the cell") {
  auto sector = make_sector(unit_disk(), parse_expr("x1", 2), parse_expr("x1 + 1", 2));
  Rng rng(11);
  OracleConfig oc;
  auto bs = boundary_sample(*sector, 60, oc, rng);
  CHECK(bs.size() > 30);
  for (const auto& p : bs) {
    CHECK(contains(*sector, p) != Membership::In);
    Rng r2(3);
    CHECK(closure_contains(*sector, p, oc, r2).kind == ClosureKind::Yes);
  }
}

TEST_CASE("fiber of a sector closure over a base boundary point") {
  auto half = make_interval(parse_expr("0", 0), parse_expr("1", 0));
  auto sec = make_sector(half, parse_expr("0", 1), parse_expr("1 + x1", 1));
  Rng rng(4);
  std::vector<double> x{0};
  auto f = fiber(*sec, x, OracleConfig{}, rng);
  REQUIRE(f.segments.size() == 1);
  CHECK(f.isolated.empty());
  CHECK(f.segments[0].lo == doctest::Approx(0).epsilon(1e-6));
  CHECK(f.segments[0].hi == doctest::Approx(1).epsilon(1e-6));
}

TEST_CASE("fiber of a jumping graph is two points") {
  auto sec = make_section(slit_disk(), parse_expr("sign(x2)", 2));
  Rng rng(6);
  std::vector<double> x{-0.5, 0};
  auto f = fiber(*sec, x, OracleConfig{}, rng);
  CHECK(f.segments.empty());
  REQUIRE(f.isolated.size() == 2);
  CHECK(std::fabs(f.isolated[0] + 1) < 1e-6);
  CHECK(std::fabs(f.isolated[1] - 1) < 1e-6);
}

TEST_CASE("fiber requires a base closure point") {
  auto sec = make_section(unit_disk(), parse_expr("0", 2));
  Rng rng(1);
  std::vector<double> x{3, 0};
  CHECK_THROWS_AS(fiber(*sec, x, OracleConfig{}, rng), std::invalid_argument);
}

TEST_CASE("local boundary connectedness at the slit") {
  auto ds = slit_disk();
  Rng rng(8);
  std::vector<double> slit{-0.5, 0}, rim{1, 0};
  auto bad = locally_boundary_connected_at(*ds, slit, OracleConfig{}, rng);
  CHECK(bad.fails);
  CHECK_FALSE(bad.witness_pairs.empty());
  auto good = locally_boundary_connected_at(*unit_disk(), rim, OracleConfig{}, rng);
  CHECK_FALSE(good.fails);
}

#include <doctest.h>

#include "cadtopo/cell.hpp"
#include "cadtopo/rng.hpp"

using namespace cadtopo;

namespace {

CellPtr unit_disk() {
  return make_region(2, parse_guard("x1^2 + x2^2 < 1", 2), {{-1, 1}, {-1, 1}}, {}, "disk");
}

Membership at(const CellPtr& c, std::vector<double> p) { return contains(*c, p); }

}  // namespace

TEST_CASE("level one cells") {
  auto cells = build_level1({parse_expr("0", 0), parse_expr("1", 0)});
  REQUIRE(cells.size() == 5);
  CHECK(at(cells[0], {-1}) == Membership::In);
  CHECK(at(cells[0], {0}) == Membership::Out);
  CHECK(at(cells[1], {0}) == Membership::In);
  CHECK(at(cells[2], {0.5}) == Membership::In);
  CHECK(at(cells[3], {1}) == Membership::In);
  CHECK(at(cells[4], {1}) == Membership::Out);
  CHECK(dimension(*cells[1]) == 0);
  CHECK(dimension(*cells[2]) == 1);
}

TEST_CASE("stacks over a region") {
  auto disk = unit_disk();
  auto s = stack(disk, {parse_expr("x1^2 + x2^2 - 1", 2), parse_expr("0", 2)});
  REQUIRE(s.size() == 5);
  CHECK(at(s[0], {0, 0, -2}) == Membership::In);
  CHECK(at(s[1], {0, 0, -1}) == Membership::In);
  CHECK(at(s[2], {0, 0, -0.5}) == Membership::In);
  CHECK(at(s[3], {0.5, 0.5, 0}) == Membership::In);
  CHECK(at(s[4], {0.5, 0.5, 0.1}) == Membership::In);
  CHECK(at(s[4], {2, 0, 0.1}) == Membership::Out);
  CHECK(dimension(*s[1]) == 2);
  CHECK(dimension(*s[2]) == 3);
  CHECK(free_axes(*s[3]) == std::vector<int>{0, 1});
}

TEST_CASE("misordered bounds are rejected") {
  Rng rng(1);
  CHECK_THROWS_AS(stack(unit_disk(), {parse_expr("1", 2), parse_expr("0", 2)}, &rng), std::invalid_argument);
}

TEST_CASE("index words") {
  CHECK(parse_index("3112") == std::vector<int>{3, 1, 1, 2});
  CHECK(parse_index("3,1,12") == std::vector<int>{3, 1, 12});
  std::vector<int> w{2, 2, 2, 1};
  CHECK(dimension_of_index(w) == 1);
  CHECK(index_string(w) == "2221");
}

TEST_CASE("membership near a zero bound stays resolvable") {
  auto half = make_interval(parse_expr("0", 0), std::nullopt);
  auto sec = make_section(half, parse_expr("0", 1));
  auto above = make_sector(half, parse_expr("0", 1), std::nullopt);
  CHECK(at(sec, {1e-200, 0}) == Membership::In);
  CHECK(at(above, {1e-200, 1e-300}) == Membership::In);
  CHECK(at(sec, {1e-200, 1e-300}) == Membership::Out);
}

TEST_CASE("lift recomputes bound coordinates") {
  auto sec = make_section(unit_disk(), parse_expr("x1 + x2", 2));
  std::vector<double> p{0.25, 0.5, 99};
  REQUIRE(lift(*sec, p));
  CHECK(p[2] == doctest::Approx(0.75));
  CHECK(at(sec, p) == Membership::In);
}

TEST_CASE("certificates agree with sampled membership") {
  auto disk = unit_disk();
  auto sec = make_section(disk, parse_expr("sign(x2)*sqrt(1 - x1^2 - x2^2)", 2));
  auto sect = make_sector(disk, parse_expr("x1^2", 2), parse_expr("1 + x2", 2));
  Rng rng(7);
  for (const auto& c : {disk, sec, sect}) {
    const std::size_t d = static_cast<std::size_t>(c->ambient);
    int out_boxes = 0;
    for (int trial = 0; trial < 400; ++trial) {
      Box box(d);
      for (auto& iv : box) {
        double a = rng.uniform(-1.5, 1.5), w = rng.uniform(0, 0.4);
        iv = {a, a + w};
      }
      if (certify_out(*c, box)) {
        ++out_boxes;
        for (int k = 0; k < 50; ++k) {
          std::vector<double> p(d);
          for (std::size_t i = 0; i < d; ++i) p[i] = rng.uniform(box[i].lo, box[i].hi);
          if (!lift(*c, p)) continue;
          bool inside = true;
          for (std::size_t i = 0; i < d; ++i) inside = inside && p[i] >= box[i].lo && p[i] <= box[i].hi;
          if (inside) CHECK(contains(*c, p) != Membership::In);
        }
      }
      Box copy = box;
      if (certify_in(*c, copy)) {
        for (int k = 0; k < 50; ++k) {
          std::vector<double> p(d);
          for (std::size_t i = 0; i < d; ++i) p[i] = rng.uniform(box[i].lo, box[i].hi);
          REQUIRE(lift(*c, p));
          CHECK(contains(*c, p) != Membership::Out);
        }
      }
    }
    CHECK(out_boxes > 0);
  }
}

TEST_CASE("sampling lands in the cell") {
  auto sect = make_sector(unit_disk(), parse_expr("x1^2", 2), parse_expr("1 + x2", 2));
  Rng rng(3);
  auto dom = default_domain(3);
  int got = 0;
  for (int i = 0; i < 200; ++i)
    if (auto p = sample(*sect, rng, dom)) {
      ++got;
      CHECK(contains(*sect, *p) == Membership::In);
    }
  CHECK(got > 150);
}

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "cadtopo/catalog.hpp"

using namespace cadtopo;

namespace {

const Catalog& catalog() {
  static const Catalog cat(default_catalog_dir());
  return cat;
}

int sgn(double v) { return (v > 0) - (v < 0); }

// Independent description of the level-4 cells over the seven-cell CAD of R^3:
// the sign of x1, then x2 and x3 where the earlier coordinates vanish, then
// the position of x4 against whichever bound is stacked over the base cell.
struct Oracle {
  bool over_origin;  // a section at x4 = r over x1 = x2 = x3 = 0
  double r;
  bool over_positive;  // a section at x4 = g + s over x1 > 0
  double s;

  std::vector<int> key(const Point& p) const {
    std::vector<int> k{sgn(p[0])};
    if (p[0] == 0) {
      k.push_back(sgn(p[1]));
      if (p[1] == 0) k.push_back(sgn(p[2]));
    }
    if (p[0] == 0 && p[1] == 0 && p[2] == 0 && over_origin) k.push_back(sgn(p[3] - r));
    if (p[0] > 0 && over_positive) k.push_back(sgn(p[3] - bound(p)));
    return k;
  }
  double bound(const Point& p) const { return -(p[1] * p[1] + p[2] * p[2]) / p[0] + s; }
};

// Random points, many of them on the lower-dimensional strata and bounds.
std::vector<Point> strata_points(const Oracle& o, int n, Rng& rng) {
  std::vector<Point> out;
  auto coord = [&] {
    switch (rng.below(3)) {
      case 0: return 0.0;
      case 1: return rng.uniform(0.05, 3.0);
      default: return -rng.uniform(0.05, 3.0);
    }
  };
  for (int i = 0; i < n; ++i) {
    Point p{coord(), coord(), coord(), rng.uniform(-4, 4)};
    if (p[0] == 0 && p[1] != 0) p[2] = rng.uniform(-3, 3);
    if (p[0] != 0) {
      p[1] = rng.uniform(-3, 3);
      p[2] = rng.uniform(-3, 3);
    }
    int mode = static_cast<int>(rng.below(3));
    if (p[0] > 0 && o.over_positive && mode == 0) p[3] = o.bound(p);
    if (p[0] == 0 && p[1] == 0 && p[2] == 0 && o.over_origin && mode == 0) p[3] = o.r;
    if (mode == 1) p[3] += rng.sign() * 0.25;
    out.push_back(p);
  }
  return out;
}

// Counts distinct oracle classes and checks that the library's cells
// partition the sample consistently with them.
int brute_force_cells(const Entry& e, const Oracle& o, std::uint64_t seed) {
  const auto& cells = e.cad("C4").level(4);
  Rng rng(seed);
  std::map<std::vector<int>, std::string> seen;
  for (const auto& p : strata_points(o, 6000, rng)) {
    std::vector<std::string> hits;
    for (const auto& c : cells)
      if (contains(*c, p) == Membership::In) hits.push_back(c->label);
    INFO("point " << p[0] << " " << p[1] << " " << p[2] << " " << p[3]);
    REQUIRE(hits.size() == 1);
    auto [it, fresh] = seen.emplace(o.key(p), hits[0]);
    if (!fresh) CHECK(it->second == hits[0]);
  }
  std::set<std::string> labels;
  for (const auto& [k, v] : seen) labels.insert(v);
  CHECK(labels.size() == seen.size());
  return static_cast<int>(seen.size());
}

}  // namespace

TEST_CASE("every entry loads") {
  const auto ids = catalog().ids();
  CHECK(ids.size() >= 8);
  for (const auto& id : ids) {
    INFO(id);
    Entry e = catalog().load(id);
    CHECK(e.id == id);
    CHECK_FALSE(e.anchor.empty());
    for (const auto& f : e.facts) {
      CHECK_FALSE(f.suites.empty());
      CHECK((f.expect == "pass" || f.expect == "fail"));
    }
  }
}

TEST_CASE("cell counts of the seven-cell CAD and its lifts") {
  Entry c3 = catalog().load("c3");
  CHECK(c3.cad("C3").level(1).size() == 3);
  CHECK(c3.cad("C3").level(2).size() == 5);
  CHECK(c3.cad("C3").level(3).size() == 7);
  CHECK(catalog().load("w-family").cad("C4").level(4).size() == 11);
  CHECK(catalog().load("lazard").cad("C4").level(4).size() == 11);
  CHECK(catalog().load("non-cf-variant").cad("C4").level(4).size() == 9);
}

TEST_CASE("brute-force cell classes match the catalog CADs") {
  // frozen from the brute-force enumeration below
  constexpr int kNonCfCells = 9;
  constexpr int kFamilyCells = 11;

  Entry ncf = catalog().load("non-cf-variant");
  CHECK(brute_force_cells(ncf, {false, 0, true, 0}, 1) == kNonCfCells);
  for (const char* s : {"-1", "0", "1/2", "2"}) {
    Entry w = catalog().load("w-family", {{"s", s}});
    double sv = w.constant(s);
    INFO("s = " << s);
    CHECK(brute_force_cells(w, {true, sv, true, sv}, 2) == kFamilyCells);
  }
  // the cell-count facts agree with the brute force
  for (const auto& f : ncf.facts)
    if (f.kind == "cell_count") CHECK(f.body.at("count").get<int>() == kNonCfCells);
  for (const auto& f : catalog().load("w-family").facts)
    if (f.kind == "cell_count") CHECK(f.body.at("count").get<int>() == kFamilyCells);
}

TEST_CASE("parameter overrides and references") {
  Entry w = catalog().load("w-family", {{"s", "1/2"}});
  CHECK(w.params.at("s") == "1/2");
  std::vector<double> p{1, 1, 0};
  CHECK(*eval_point(w.expr("f"), p) == doctest::Approx(-0.5));
  CHECK(w.constant("$s * 4") == doctest::Approx(2));
  CHECK_THROWS(catalog().load("w-family", {{"s", "1/"}}));
  std::map<std::string, std::string> params{{"a", "2"}};
  std::map<std::string, Expr> exprs{{"e", parse_expr("x1+1", 1)}};
  CHECK(expand_references("$a*@e", params, exprs) == "(2)*(" + to_string(exprs.at("e")) + ")");
  CHECK_THROWS_AS(expand_references("$b", params, exprs), CatalogError);
}

TEST_CASE("cell references") {
  Entry e = catalog().load("w-family");
  CHECK(e.cell("C4:3112")->label.find("3112") != std::string::npos);
  CHECK(e.cell("C3:311")->ambient == 3);
  CHECK_THROWS_AS(e.cell("C4:9999"), CatalogError);
  CHECK_THROWS_AS(e.cell("nope"), CatalogError);
  CHECK_THROWS_AS(catalog().load("no-such-entry"), CatalogError);
}

TEST_CASE("malformed catalogs are rejected") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "cadtopo-bad-catalog";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream(dir / name) << text;
  };

  write("a.json", R"({"schema":"cadtopo.catalog/1","id":"b","anchor":"x"})");
  CHECK_THROWS_AS(Catalog{dir}, CatalogError);
  fs::remove(dir / "a.json");

  write("a.json", R"({"schema":"other/2","id":"a"})");
  CHECK_THROWS_AS(Catalog{dir}, CatalogError);
  fs::remove(dir / "a.json");

  write("a.json", "{ not json");
  CHECK_THROWS_AS(Catalog{dir}, CatalogError);
  fs::remove(dir / "a.json");

  write("a.json", R"({"schema":"cadtopo.catalog/1","id":"a","anchor":"x",
    "exprs":{"p":{"arity":1,"src":"@q"},"q":{"arity":1,"src":"@p"}},"facts":[]})");
  Catalog cycle(dir);
  CHECK_THROWS_AS(cycle.load("a"), CatalogError);

  fs::remove_all(dir);
  CHECK_THROWS_AS(Catalog{dir}, CatalogError);
}

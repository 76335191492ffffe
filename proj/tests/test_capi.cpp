#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "cadtopo/cadtopo.h"

namespace {

struct Cat {
  cadtopo_catalog* c = nullptr;
  Cat() { REQUIRE(cadtopo_catalog_open(nullptr, &c) == CADTOPO_OK); }
  ~Cat() { cadtopo_catalog_close(c); }
};

}  // namespace

TEST_CASE("opening catalogs") {
  cadtopo_catalog* c = nullptr;
  CHECK(cadtopo_catalog_open("/no/such/dir", &c) == CADTOPO_E_IO);
  CHECK(c == nullptr);
  CHECK(std::strlen(cadtopo_last_error()) > 0);
  CHECK(cadtopo_catalog_open(nullptr, nullptr) == CADTOPO_E_ARG);
  Cat cat;
  CHECK(cadtopo_catalog_entry_count(cat.c) >= 8);
  CHECK(std::string(cadtopo_catalog_entry_id(cat.c, 0)).size() > 0);
  CHECK(std::string(cadtopo_status_name(CADTOPO_E_NOT_FOUND)).size() > 0);
  CHECK(std::strlen(cadtopo_version()) > 0);
}

TEST_CASE("suites are listed") {
  bool all = false, neg = false;
  for (size_t i = 0; i < cadtopo_suite_count(); ++i) {
    std::string id = cadtopo_suite_id(i);
    all = all || id == "all";
    neg = neg || id == "negative-controls";
    CHECK(std::strlen(cadtopo_suite_title(i)) > 0);
  }
  CHECK(all);
  CHECK(neg);
}

TEST_CASE("running a suite through the C API") {
  Cat cat;
  cadtopo_suite_options opt;
  cadtopo_suite_options_init(&opt);
  cadtopo_report* rep = nullptr;

  opt.suite = "no-such-suite";
  CHECK(cadtopo_run_suite(cat.c, &opt, &rep) == CADTOPO_E_NOT_FOUND);
  CHECK(rep == nullptr);

  opt.suite = "prop-fibre";
  opt.eps_levels = 31;
  CHECK(cadtopo_run_suite(cat.c, &opt, &rep) == CADTOPO_E_ARG);
  opt.eps_levels = 20;
  const char* bad[] = {"1/"};
  opt.shifts = bad;
  opt.shift_count = 1;
  CHECK(cadtopo_run_suite(cat.c, &opt, &rep) == CADTOPO_E_PARSE);
  opt.shifts = nullptr;
  opt.shift_count = 0;

  opt.samples = 200;
  opt.boundary_samples = 100;
  REQUIRE(cadtopo_run_suite(cat.c, &opt, &rep) == CADTOPO_OK);
  CHECK(cadtopo_report_exit_code(rep) == 0);
  int p = -1, f = -1, i = -1;
  cadtopo_report_counts(rep, &p, &f, &i);
  CHECK(p > 0);
  CHECK(f == 0);
  CHECK(i == 0);
  char* text = nullptr;
  REQUIRE(cadtopo_report_json(rep, &text) == CADTOPO_OK);
  auto j = nlohmann::json::parse(text);
  cadtopo_free(text);
  CHECK(j["suite"] == "prop-fibre");
  CHECK(j["verdict"] == "pass");
  CHECK(j["checks"].size() == static_cast<std::size_t>(p));
  CHECK(cadtopo_report_write(rep, "/no/such/dir/r.json") == CADTOPO_E_IO);
  cadtopo_report_free(rep);
}

TEST_CASE("single-cell queries") {
  Cat cat;
  double in[] = {0.25, 0.25}, slit[] = {-0.5, 0}, far[] = {2, 0};
  cadtopo_membership m;
  REQUIRE(cadtopo_cell_contains(cat.c, "cornet-slitdisk", "Ds", in, 2, &m) == CADTOPO_OK);
  CHECK(m == CADTOPO_IN);
  REQUIRE(cadtopo_cell_contains(cat.c, "cornet-slitdisk", "Ds", slit, 2, &m) == CADTOPO_OK);
  CHECK(m == CADTOPO_OUT);
  CHECK(cadtopo_cell_contains(cat.c, "cornet-slitdisk", "Ds", in, 3, &m) == CADTOPO_E_ARG);
  CHECK(cadtopo_cell_contains(cat.c, "cornet-slitdisk", "nope", in, 2, &m) == CADTOPO_E_NOT_FOUND);
  CHECK(cadtopo_cell_contains(cat.c, "nope", "Ds", in, 2, &m) == CADTOPO_E_NOT_FOUND);

  cadtopo_closure k;
  REQUIRE(cadtopo_closure_contains(cat.c, "cornet-slitdisk", "Ds", slit, 2, 1, &k) == CADTOPO_OK);
  CHECK(k == CADTOPO_CLOSURE_YES);
  REQUIRE(cadtopo_closure_contains(cat.c, "cornet-slitdisk", "Ds", far, 2, 1, &k) == CADTOPO_OK);
  CHECK(k == CADTOPO_CLOSURE_NO);

  double v = 0, at[] = {-0.5, -0.25};
  REQUIRE(cadtopo_eval_expr(cat.c, "trousers", "ft", at, 2, &v) == CADTOPO_OK);
  CHECK(v == doctest::Approx(-0.5));
}

TEST_CASE("mesh export through the C API") {
  Cat cat;
  auto dir = std::filesystem::temp_directory_path() / "cadtopo-capi-test";
  std::filesystem::create_directories(dir);
  auto out = (dir / "ds.ply").string();
  cadtopo_mesh_stats st{};
  CHECK(cadtopo_export_mesh(cat.c, "cornet-slitdisk", "Ds", 4, out.c_str(), 0, &st) == CADTOPO_E_ARG);
  REQUIRE(cadtopo_export_mesh(cat.c, "cornet-slitdisk", "Ds", 16, out.c_str(), 0, &st) == CADTOPO_OK);
  CHECK(st.vertices - st.edges + st.faces == 1);
  CHECK(cadtopo_export_mesh(cat.c, "cornet-slitdisk", "Ds", 16, "/no/such/dir/x.ply", 0, nullptr) ==
        CADTOPO_E_IO);
}

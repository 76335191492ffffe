#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cadtopo/suites.hpp"

using namespace cadtopo;
namespace fs = std::filesystem;

namespace {

struct Ply {
  long vertices = 0, faces = 0;
  int dims = 0;
  std::vector<std::vector<double>> v;
  std::vector<std::vector<long>> f;
};

Ply read_ply(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in);
  Ply p;
  std::string line;
  while (std::getline(in, line) && line != "end_header") {
    std::istringstream ls(line);
    std::string a, b;
    ls >> a >> b;
    if (a == "element" && b == "vertex") ls >> p.vertices;
    if (a == "element" && b == "face") ls >> p.faces;
    if (a == "property" && b == "double") ++p.dims;
  }
  for (long i = 0; i < p.vertices; ++i) {
    std::vector<double> x(static_cast<std::size_t>(p.dims));
    for (auto& c : x) in >> c;
    p.v.push_back(x);
  }
  for (long i = 0; i < p.faces; ++i) {
    int k = 0;
    in >> k;
    std::vector<long> idx(static_cast<std::size_t>(k));
    for (auto& c : idx) in >> c;
    p.f.push_back(idx);
  }
  REQUIRE(in);
  return p;
}

const Catalog& catalog() {
  static const Catalog cat(default_catalog_dir());
  return cat;
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / "cadtopo-mesh-test";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("slit disk mesh is a disk and never bridges the slit") {
  auto out = scratch("ds.ply");
  auto st = export_mesh(catalog().load("cornet-slitdisk"), "Ds", 24, out.string(), 3);
  CHECK(st.euler() == 1);
  CHECK(st.boundary_points > 0);
  CHECK(fs::exists(scratch("ds_boundary.ply")));
  Ply p = read_ply(out);
  CHECK(p.vertices == st.vertices);
  CHECK(p.faces == st.faces);
  CHECK(p.dims == 3);
  for (const auto& f : p.f) {
    REQUIRE(f.size() == 3);
    bool neg = false, pos = false;
    for (long i : f) {
      const auto& x = p.v.at(static_cast<std::size_t>(i));
      CHECK(x[0] * x[0] + x[1] * x[1] < 1);
      if (x[0] < 0 && x[1] < 0) neg = true;
      if (x[0] < 0 && x[1] > 0) pos = true;
      CHECK_FALSE((x[0] <= 0 && x[1] == 0));
    }
    CHECK_FALSE((neg && pos));
  }
}

TEST_CASE("cornet mesh is a disk") {
  auto out = scratch("cornet.ply");
  auto st = export_mesh(catalog().load("cornet-slitdisk"), "cornet", 24, out.string(), 5);
  CHECK(st.euler() == 1);
  Ply p = read_ply(out);
  CHECK(p.vertices == st.vertices);
  CHECK(p.faces > 0);
}

TEST_CASE("full-dimensional cells export a point cloud") {
  auto out = scratch("at.ply");
  auto st = export_mesh(catalog().load("trousers"), "At", 8, out.string(), 1);
  CHECK(st.faces == 0);
  CHECK(st.vertices > 0);
  CHECK(read_ply(out).vertices == st.vertices);
}

TEST_CASE("mesh argument errors") {
  auto e = catalog().load("cornet-slitdisk");
  CHECK_THROWS_AS(export_mesh(e, "Ds", 4, scratch("x.ply").string()), std::invalid_argument);
  CHECK_THROWS(export_mesh(e, "no-such-cell", 16, scratch("x.ply").string()));
}

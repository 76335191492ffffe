#include <array>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "cadtopo/suites.hpp"

namespace cadtopo {

namespace {

struct Mesh {
  int ambient = 3;
  std::vector<Point> vertices;
  std::vector<std::array<long, 3>> faces;
};

void append(Mesh& into, const Mesh& m) {
  long off = static_cast<long>(into.vertices.size());
  into.vertices.insert(into.vertices.end(), m.vertices.begin(), m.vertices.end());
  for (auto f : m.faces) into.faces.push_back({f[0] + off, f[1] + off, f[2] + off});
}

// Grid over the bounding box of the two free coordinates; a triangle is kept
// when its bounding box is certified inside the cell.
Mesh triangulate(const Cell& c, int res, Rng& rng) {
  auto axes = free_axes(c);
  const int ax = axes.at(0), ay = axes.at(1);
  Box dom = default_domain(c.ambient);
  double lo[2] = {1e300, 1e300}, hi[2] = {-1e300, -1e300};
  auto widen = [&](const Point& p) {
    lo[0] = std::min(lo[0], p[ax]);
    hi[0] = std::max(hi[0], p[ax]);
    lo[1] = std::min(lo[1], p[ay]);
    hi[1] = std::max(hi[1], p[ay]);
  };
  for (int i = 0; i < 4000; ++i)
    if (auto s = sample(c, rng, dom)) widen(*s);
  OracleConfig oc;
  for (const auto& b : boundary_candidates(c, 200, oc, rng)) widen(b);
  if (!(lo[0] < hi[0] && lo[1] < hi[1])) throw std::invalid_argument("cell has no two-dimensional extent to mesh");

  Mesh m;
  m.ambient = c.ambient;
  const int n = res + 1;
  std::vector<long> id(static_cast<std::size_t>(n * n), -1);
  std::vector<Point> grid(static_cast<std::size_t>(n * n));
  auto at = [&](int i, int j) -> std::size_t { return static_cast<std::size_t>(i * n + j); };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Point p(static_cast<std::size_t>(c.ambient), 0.0);
      p[ax] = lo[0] + (hi[0] - lo[0]) * i / res;
      p[ay] = lo[1] + (hi[1] - lo[1]) * j / res;
      if (lift(c, p) && contains(c, p) == Membership::In) grid[at(i, j)] = std::move(p);
    }
  auto vertex = [&](std::size_t k) {
    if (id[k] < 0) {
      id[k] = static_cast<long>(m.vertices.size());
      m.vertices.push_back(grid[k]);
    }
    return id[k];
  };
  auto try_face = [&](std::size_t a, std::size_t b, std::size_t d) {
    if (grid[a].empty() || grid[b].empty() || grid[d].empty()) return;
    Box box(static_cast<std::size_t>(c.ambient), Interval(0, 0));
    for (int axis : {ax, ay}) {
      double l = std::min({grid[a][axis], grid[b][axis], grid[d][axis]});
      double h = std::max({grid[a][axis], grid[b][axis], grid[d][axis]});
      box[static_cast<std::size_t>(axis)] = Interval(l, h);
    }
    if (!certify_in(c, box)) return;
    m.faces.push_back({vertex(a), vertex(b), vertex(d)});
  };
  for (int i = 0; i < res; ++i)
    for (int j = 0; j < res; ++j) {
      try_face(at(i, j), at(i + 1, j), at(i + 1, j + 1));
      try_face(at(i, j), at(i + 1, j + 1), at(i, j + 1));
    }
  return m;
}

long count_edges(const Mesh& m) {
  std::set<std::pair<long, long>> edges;
  for (const auto& f : m.faces)
    for (int k = 0; k < 3; ++k) {
      long a = f[static_cast<std::size_t>(k)], b = f[static_cast<std::size_t>((k + 1) % 3)];
      edges.insert({std::min(a, b), std::max(a, b)});
    }
  return static_cast<long>(edges.size());
}

void write_ply(const std::string& path, const Mesh& m, const std::string& comment) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  static const char* names[] = {"x", "y", "z", "w"};
  int props = std::max(3, m.ambient);
  out << "ply\nformat ascii 1.0\ncomment " << comment << "\n";
  out << "element vertex " << m.vertices.size() << "\n";
  for (int k = 0; k < props && k < 4; ++k) out << "property double " << names[k] << "\n";
  if (!m.faces.empty()) out << "element face " << m.faces.size() << "\nproperty list uchar int vertex_indices\n";
  out << "end_header\n";
  char buf[64];
  for (const auto& v : m.vertices) {
    for (int k = 0; k < props && k < 4; ++k) {
      double x = k < static_cast<int>(v.size()) ? v[static_cast<std::size_t>(k)] : 0.0;
      std::snprintf(buf, sizeof buf, "%.10g", x);
      out << (k ? " " : "") << buf;
    }
    out << "\n";
  }
  for (const auto& f : m.faces) out << "3 " << f[0] << " " << f[1] << " " << f[2] << "\n";
}

}  // namespace

MeshStats export_mesh(const Entry& e, const std::string& object, int resolution, const std::string& out_path,
                      std::uint64_t seed) {
  if (resolution < 8) throw std::invalid_argument("resolution must be at least 8");
  CellPtr c;
  try {
    c = e.cell(object);
  } catch (const CatalogError&) {
    throw std::invalid_argument("unknown object '" + object + "' in entry " + e.id);
  }
  if (c->ambient > 4) throw std::invalid_argument("cannot export cells of ambient dimension above 4");
  Rng rng(mix_seed(seed, hash_string(e.id + "/" + object)));

  Mesh mesh;
  mesh.ambient = c->ambient;
  int dim = dimension(*c);
  if (dim == 2) {
    mesh = triangulate(*c, resolution, rng);
  } else if (dim == 3 && c->kind == CellKind::Sector && c->lo && c->hi && dimension(*c->base) == 2) {
    // the two bounding sheets
    append(mesh, triangulate(*make_section(c->base, *c->lo), resolution, rng));
    append(mesh, triangulate(*make_section(c->base, *c->hi), resolution, rng));
  } else {
    Box dom = default_domain(c->ambient);
    for (int i = 0; i < resolution * resolution; ++i)
      if (auto s = sample(*c, rng, dom)) mesh.vertices.push_back(std::move(*s));
  }

  MeshStats st;
  st.vertices = static_cast<long>(mesh.vertices.size());
  st.faces = static_cast<long>(mesh.faces.size());
  st.edges = count_edges(mesh);
  write_ply(out_path, mesh, e.id + "/" + object);

  Mesh bnd;
  bnd.ambient = c->ambient;
  OracleConfig oc;
  bnd.vertices = boundary_sample(*c, 4 * resolution, oc, rng);
  st.boundary_points = static_cast<long>(bnd.vertices.size());
  std::filesystem::path p(out_path);
  std::filesystem::path bp = p.parent_path() / (p.stem().string() + "_boundary.ply");
  write_ply(bp.string(), bnd, e.id + "/" + object + " boundary samples");
  return st;
}

}  // namespace cadtopo

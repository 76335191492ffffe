#include "cadtopo/checks.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cadtopo {

using nlohmann::json;

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

namespace {
constexpr std::size_t kKeptViolations = 16;

json point_json(std::span<const double> p) { return json(std::vector<double>(p.begin(), p.end())); }

std::string label_of(const Cell& c) { return c.label.empty() ? std::string("cell") : c.label; }

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

std::vector<Point> sample_many(const Cell& c, int n, Rng& rng, double half_width) {
  Box dom = default_domain(c.ambient, half_width);
  std::vector<Point> out;
  out.reserve(static_cast<std::size_t>(std::max(n, 0)));
  for (int i = 0; i < n; ++i)
    if (auto s = sample(c, rng, dom)) out.push_back(std::move(*s));
  return out;
}

// Membership with the tie-break: an uncertain point is moved by +-tau along
// the last axis. Returns the (possibly moved) point, or nullopt if still uncertain.
struct Settled {
  Point point;
  std::vector<Membership> memberships;
};

std::optional<Settled> settle(const std::vector<CellPtr>& cells, const Point& p, double tau) {
  auto classify = [&](const Point& q) {
    Settled s{q, {}};
    for (const auto& c : cells) {
      Membership m = contains(*c, q);
      if (m == Membership::Uncertain) return std::optional<Settled>{};
      s.memberships.push_back(m);
    }
    return std::optional<Settled>{std::move(s)};
  };
  if (auto s = classify(p)) return s;
  for (double d : {tau, -tau}) {
    Point q = p;
    q.back() += d;
    if (auto s = classify(q)) return s;
  }
  return std::nullopt;
}

}  // namespace

void Report::violate(Point p, std::string reason) {
  ++violation_count;
  if (violations.size() < 4 * kKeptViolations) violations.push_back({std::move(p), std::move(reason)});
}

void Report::finish(double inconclusive_cap) {
  std::sort(violations.begin(), violations.end(), [](const Violation& a, const Violation& b) {
    if (a.reason != b.reason) return a.reason < b.reason;
    return a.point < b.point;
  });
  if (violations.size() > kKeptViolations) violations.resize(kKeptViolations);
  if (violation_count > 0)
    verdict = Verdict::Fail;
  else if (inconclusive_fraction() >= inconclusive_cap)
    verdict = Verdict::Inconclusive;
  else
    verdict = Verdict::Pass;
}

bool Report::as_expected() const {
  return expect == "fail" ? verdict == Verdict::Fail : verdict == Verdict::Pass;
}

json to_json(const Report& r) {
  json v = json::array();
  for (const auto& x : r.violations) v.push_back({{"point", point_json(x.point)}, {"reason", x.reason}});
  return json{{"suite", r.suite},
              {"check", r.check},
              {"kind", r.kind},
              {"anchor", r.anchor},
              {"seed", r.seed},
              {"samples", r.samples},
              {"inconclusive", r.inconclusive},
              {"inconclusive_fraction", r.inconclusive_fraction()},
              {"violation_count", r.violation_count},
              {"violations", v},
              {"verdict", to_string(r.verdict)},
              {"expect", r.expect},
              {"millis", r.millis},
              {"details", r.details}};
}

std::optional<Point> VectorMap::apply(std::span<const double> p) const {
  if (static_cast<int>(p.size()) != arity) throw ArityError("map arity mismatch");
  Point out;
  out.reserve(components.size());
  for (const auto& e : components) {
    auto v = eval_point(e, p);
    if (!v || !std::isfinite(*v)) return std::nullopt;
    out.push_back(*v);
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

// A closure "yes" that counts against a claim is re-examined down to the
// finest admissible eps; points closer to the cell than the configured floor
// otherwise read as closure points.
ClosureKind confirm_yes(const Cell& c, const Point& p, const OracleConfig& oc, Rng& rng) {
  OracleConfig fine = oc;
  fine.eps_levels = std::max(oc.eps_levels, kFinestEpsLevel);
  auto k = closure_contains(c, p, fine, rng).kind;
  if (k != ClosureKind::Yes) return k;
  // Cells can pass far closer than 2^-30 without p being a limit point (a
  // section x1 = x3^2/|x4| over tiny x3, say). An empty ball at any radius
  // settles it.
  double scale = 1;
  for (double v : p) scale = std::max(scale, std::fabs(v));
  for (int e = kFinestEpsLevel + 2; e <= 60; e += 4)
    if (certify_ball_empty(c, p, std::ldexp(scale, -e), oc.certify_budget)) return ClosureKind::No;
  return k;
}

}  // namespace

Report check_closure_decomposition(const CellPtr& c, const std::vector<CellPtr>& parts,
                                   const std::vector<CellPtr>& probe_cells, const CheckConfig& cfg, Rng& rng) {
  Report rep;
  rep.kind = "closure_decomposition";
  const auto& oc = cfg.oracle;
  Box dom = default_domain(c->ambient, oc.domain);
  json part_names = json::array();
  for (const auto& p : parts) part_names.push_back(label_of(*p));
  rep.details["cell"] = label_of(*c);
  rep.details["parts"] = part_names;

  // (a) every part lies in the closure
  struct Stat {
    long yes = 0, no = 0;
    Point yes_pt, no_pt;
  };
  std::vector<Stat> stat(parts.size());
  long side_a = 0;
  if (!parts.empty()) {
    for (int i = 0; i < cfg.samples; ++i) {
      std::size_t k = static_cast<std::size_t>(i) % parts.size();
      ++side_a;
      auto s = sample(*parts[k], rng, dom);
      if (!s) {
        ++rep.inconclusive;
        continue;
      }
      auto v = closure_contains(*c, *s, oc, rng);
      if (v.kind == ClosureKind::Yes) {
        if (stat[k].yes++ == 0) stat[k].yes_pt = *s;
      } else if (v.kind == ClosureKind::No) {
        if (stat[k].no++ == 0) stat[k].no_pt = *s;
        rep.violate(*s, "point of " + label_of(*parts[k]) + " outside the closure");
      } else {
        ++rep.inconclusive;
      }
    }
  }
  json partial = json::array();
  for (std::size_t k = 0; k < parts.size(); ++k) {
    if (stat[k].yes > 0 && stat[k].no > 0) {
      rep.violate(stat[k].yes_pt, label_of(*parts[k]) + " meets the closure without being contained in it");
      partial.push_back({{"cell", label_of(*parts[k])},
                         {"in_closure", point_json(stat[k].yes_pt)},
                         {"outside_closure", point_json(stat[k].no_pt)}});
    }
  }
  rep.details["partially_covered"] = partial;

  // (b) closure points lie in exactly one part
  std::vector<Point> probes = boundary_sample(*c, cfg.boundary_samples, oc, rng, probe_cells);
  rep.details["boundary_probes"] = probes.size();
  std::vector<CellPtr> same;
  for (const auto& d : probe_cells)
    if (d->ambient == c->ambient) same.push_back(d);
  int rest = std::max(0, cfg.samples - static_cast<int>(probes.size()));
  for (int i = 0; i < rest && !same.empty(); ++i)
    if (auto s = sample(*same[static_cast<std::size_t>(i) % same.size()], rng, dom)) probes.push_back(std::move(*s));
  long side_b = 0, yes_b = 0;
  for (const auto& p : probes) {
    ++side_b;
    auto settled = settle(parts, p, oc.tau_fib);
    if (!settled) {
      ++rep.inconclusive;
      continue;
    }
    auto v = closure_contains(*c, settled->point, oc, rng);
    long in = std::count(settled->memberships.begin(), settled->memberships.end(), Membership::In);
    if (v.kind == ClosureKind::Yes) {
      ++yes_b;
      if (in == 0) {
        auto k = confirm_yes(*c, settled->point, oc, rng);
        if (k == ClosureKind::Yes)
          rep.violate(settled->point, "closure point in no part");
        else if (k == ClosureKind::Unknown)
          ++rep.inconclusive;
      }
      if (in > 1) rep.violate(settled->point, "closure point in several parts");
    } else if (v.kind == ClosureKind::No) {
      if (in > 0) rep.violate(settled->point, "part point certified outside the closure");
    } else {
      ++rep.inconclusive;
    }
  }
  rep.samples = side_a + side_b;
  rep.details["side_a_samples"] = side_a;
  rep.details["side_b_samples"] = side_b;
  rep.details["side_b_closure_points"] = yes_b;
  rep.finish(cfg.inconclusive_cap);
  return rep;
}

namespace {

// Boundary points of c must lie in the union of the closures of `cover`.
void boundary_in_union(Report& rep, const CellPtr& c, const std::vector<CellPtr>& cover,
                       const std::vector<CellPtr>& hints, const CheckConfig& cfg, Rng& rng) {
  auto bs = boundary_sample(*c, cfg.boundary_samples, cfg.oracle, rng, hints);
  rep.details["boundary_samples"] = bs.size();
  for (const auto& p : bs) {
    ++rep.samples;
    bool yes = false, unknown = false;
    for (const auto& d : cover) {
      auto k = closure_contains(*d, p, cfg.oracle, rng).kind;
      if (k == ClosureKind::Yes) {
        yes = true;
        break;
      }
      if (k == ClosureKind::Unknown) unknown = true;
    }
    if (yes) continue;
    if (unknown)
      ++rep.inconclusive;
    else
      rep.violate(p, "boundary point outside the claimed closures");
  }
}

// Points of each cell in `inside` must be boundary points of c.
void cells_in_boundary(Report& rep, const CellPtr& c, const std::vector<CellPtr>& inside, const CheckConfig& cfg,
                       Rng& rng) {
  if (inside.empty()) return;
  int per = std::max(1, cfg.samples / static_cast<int>(inside.size()));
  for (const auto& d : inside) {
    for (const auto& s : sample_many(*d, per, rng, cfg.oracle.domain)) {
      ++rep.samples;
      Membership m = contains(*c, s);
      if (m == Membership::Uncertain) {
        ++rep.inconclusive;
        continue;
      }
      if (m == Membership::In) {
        rep.violate(s, "point of " + label_of(*d) + " lies in the cell itself");
        continue;
      }
      auto k = closure_contains(*c, s, cfg.oracle, rng).kind;
      if (k == ClosureKind::No)
        rep.violate(s, "point of " + label_of(*d) + " is not a boundary point");
      else if (k == ClosureKind::Unknown)
        ++rep.inconclusive;
    }
  }
}

}  // namespace

Report check_wb_claim(const CellPtr& c, const std::vector<CellPtr>& claimed, const std::vector<CellPtr>& hints,
                      const CheckConfig& cfg, Rng& rng) {
  Report rep;
  rep.kind = "wb_claim";
  int d = dimension(*c);
  rep.details["cell"] = label_of(*c);
  rep.details["dimension"] = d;
  json names = json::array();
  for (const auto& k : claimed) {
    names.push_back(label_of(*k));
    if (dimension(*k) != d - 1)
      rep.violate({}, "claimed cell " + label_of(*k) + " has dimension " + std::to_string(dimension(*k)));
  }
  rep.details["claimed"] = names;
  boundary_in_union(rep, c, claimed, hints, cfg, rng);
  cells_in_boundary(rep, c, claimed, cfg, rng);
  rep.finish(cfg.inconclusive_cap);
  return rep;
}

Report check_wb_violation(const CellPtr& c, const std::vector<CellPtr>& lower, const std::vector<CellPtr>& level_cells,
                          const CheckConfig& cfg, Rng& rng) {
  Report rep;
  rep.kind = "wb_violation";
  int d = dimension(*c);
  int bdim = -1;
  json names = json::array();
  for (const auto& k : lower) {
    bdim = std::max(bdim, dimension(*k));
    names.push_back(label_of(*k));
  }
  rep.details["cell"] = label_of(*c);
  rep.details["dimension"] = d;
  rep.details["boundary_cells"] = names;
  rep.details["boundary_dimension"] = bdim;
  rep.details["required_dimension"] = d - 1;
  if (bdim > d - 2) rep.violate({}, "boundary cells are not of dimension <= d-2");

  boundary_in_union(rep, c, lower, level_cells, cfg, rng);
  cells_in_boundary(rep, c, lower, cfg, rng);

  // no cell of dimension d-1 meets the boundary
  std::vector<CellPtr> facets;
  json facet_names = json::array();
  for (const auto& k : level_cells)
    if (dimension(*k) == d - 1) {
      facets.push_back(k);
      facet_names.push_back(label_of(*k));
    }
  rep.details["cells_of_dimension_d_minus_1"] = facet_names;
  if (!facets.empty()) {
    int per = std::max(1, cfg.samples / static_cast<int>(facets.size()));
    for (const auto& f : facets) {
      for (const auto& s : sample_many(*f, per, rng, cfg.oracle.domain)) {
        ++rep.samples;
        auto k = closure_contains(*c, s, cfg.oracle, rng).kind;
        if (k == ClosureKind::Yes) k = confirm_yes(*c, s, cfg.oracle, rng);
        if (k == ClosureKind::Yes)
          rep.violate(s, label_of(*f) + " meets the boundary");
        else if (k == ClosureKind::Unknown)
          ++rep.inconclusive;
      }
    }
  }
  rep.finish(cfg.inconclusive_cap);
  return rep;
}

Report check_w_membership(const CellPtr& section, const Expr& r_expr, const std::vector<CellPtr>& hints,
                          const CheckConfig& cfg, Rng& rng) {
  Report rep;
  rep.kind = "w_membership";
  const auto& oc = cfg.oracle;
  auto rv = eval_point(r_expr, {});
  if (!rv) throw std::invalid_argument("r is undefined");
  const double r = *rv;
  const double tol = 1e-9;
  rep.details["r"] = r;

  // (i) boundary on the half-line, half-line in the closure, nothing else over x1 = 0
  long bad_i = 0;
  auto bs = boundary_sample(*section, cfg.boundary_samples, oc, rng, hints);
  for (const auto& p : bs) {
    ++rep.samples;
    if (std::fabs(p[0]) > tol || std::fabs(p[1]) > tol || std::fabs(p[2]) > tol || p[3] > r + tol) {
      // boundary samples are validated at the configured floor only
      auto k = confirm_yes(*section, p, oc, rng);
      if (k == ClosureKind::Yes) {
        ++bad_i;
        rep.violate(p, "boundary point off the half-line");
      } else if (k == ClosureKind::Unknown) {
        ++rep.inconclusive;
      }
    }
  }
  const int line = std::max(1, cfg.samples / 10);
  for (int i = 0; i < line; ++i) {
    ++rep.samples;
    double t = i == 0 ? r : r - oc.domain * rng.uniform();
    Point p{0, 0, 0, t};
    auto k = closure_contains(*section, p, oc, rng).kind;
    if (k == ClosureKind::No) {
      ++bad_i;
      rep.violate(p, "half-line point outside the closure");
    } else if (k == ClosureKind::Unknown) {
      ++rep.inconclusive;
    }
  }
  for (int i = 0; i < line; ++i) {
    ++rep.samples;
    Point p;
    if (i % 2 == 0) {
      p = {0, 0, 0, r + std::exp2(-6.0 + 9.0 * rng.uniform())};
    } else {
      // off-axis distance at least 1/8: the cell approaches (0, a, b, t) to within
      // about (a^2 + b^2) / |t - r|, which must stay well above the eps floor
      double rad = rng.uniform(0.125, 1.0), ang = rng.uniform(0, 2 * std::numbers::pi);
      double a = rad * std::cos(ang), b = rad * std::sin(ang);
      if (i % 4 == 1) {
        a = rng.sign() * rad;
        b = 0;
      }
      p = {0, a, b, rng.uniform(-oc.domain, oc.domain)};
    }
    auto k = closure_contains(*section, p, oc, rng).kind;
    if (k == ClosureKind::Yes) k = confirm_yes(*section, p, oc, rng);
    if (k == ClosureKind::Yes) {
      ++bad_i;
      rep.violate(p, "closure point over x1 = 0 off the half-line");
    } else if (k == ClosureKind::Unknown) {
      ++rep.inconclusive;
    }
  }
  rep.details["property_i_violations"] = bad_i;

  // (ii) divergence along sequences approaching {x1 = 0} away from the axis
  const Expr& f = section->value;
  long bad_ii = 0;
  double worst = -kInf;
  const double exps[] = {0.5, 1.0, 2.0};
  for (int s = 0; s < 100; ++s) {
    ++rep.samples;
    auto pick = [&] { return rng.sign() * rng.uniform(0.125, 2.0); };
    double a = pick(), b = pick();
    if (s % 3 == 1) a = 0;
    if (s % 3 == 2) b = 0;
    double e1 = exps[rng.below(3)], e2 = exps[rng.below(3)], e3 = exps[rng.below(3)];
    double c2 = rng.uniform(-1, 1), c3 = rng.uniform(-1, 1);
    double last = kInf;
    bool diverged = true;
    for (int k = 56; k <= 60; ++k) {
      double kk = static_cast<double>(k);
      Point x{std::exp2(-kk * e1), a + c2 * std::exp2(-kk * e2), b + c3 * std::exp2(-kk * e3)};
      auto v = eval_point(f, x);
      if (!v) {
        diverged = false;
        break;
      }
      last = *v;
      if (!(*v < -oc.divergence)) diverged = false;
    }
    worst = std::max(worst, last);
    if (!diverged) {
      ++bad_ii;
      rep.violate({0, a, b}, "f does not diverge to -infinity");
    }
  }
  rep.details["property_ii_violations"] = bad_ii;
  rep.details["largest_final_value"] = worst;
  rep.details["divergence_threshold"] = -oc.divergence;
  rep.finish(cfg.inconclusive_cap);
  return rep;
}

// ---------------------------------------------------------------------------

Report check_sandwich(const CellPtr& a, const CellPtr& b, const CellPtr& c, const std::vector<ProbeExpectation>& probes,
                      const std::vector<CellPtr>& hints, const CheckConfig& cfg, Rng& rng) {
  Report rep;
  rep.kind = "sandwich";
  const auto& oc = cfg.oracle;
  auto pts = sample_many(*b, cfg.samples, rng, oc.domain);
  auto bs = boundary_sample(*b, cfg.boundary_samples, oc, rng, hints);
  rep.details["section_samples"] = pts.size();
  rep.details["section_boundary_samples"] = bs.size();
  pts.insert(pts.end(), bs.begin(), bs.end());
  long inclusion_violations = 0;
  for (const auto& p : pts) {
    ++rep.samples;
    auto ka = closure_contains(*a, p, oc, rng).kind;
    auto kc = closure_contains(*c, p, oc, rng).kind;
    if (ka == ClosureKind::No || kc == ClosureKind::No) {
      ++inclusion_violations;
      rep.violate(p, "closure point of the section outside the closure of a neighbouring sector");
    } else if (ka == ClosureKind::Unknown || kc == ClosureKind::Unknown) {
      ++rep.inconclusive;
    }
  }
  rep.details["inclusion_violations"] = inclusion_violations;

  const CellPtr cells[3] = {a, b, c};
  const char* names[3] = {"A", "B", "C"};
  json pr = json::array();
  for (const auto& probe : probes) {
    ++rep.samples;
    json row{{"point", point_json(probe.point)}};
    bool unknown = false;
    for (int i = 0; i < 3; ++i) {
      auto v = closure_contains(*cells[i], probe.point, oc, rng, true);
      json cell{{"closure", to_string(v.kind)}};
      if (v.kind == ClosureKind::No) cell["separation"] = v.separation;
      row[names[i]] = cell;
      ClosureKind want = probe.expected.at(static_cast<std::size_t>(i));
      if (v.kind == ClosureKind::Unknown) {
        unknown = true;
      } else if (v.kind != want) {
        rep.violate(probe.point, std::string("probe misclassified against ") + names[i]);
      } else if (v.kind == ClosureKind::No && v.separation < probe.min_separation) {
        rep.violate(probe.point, std::string("separation from ") + names[i] + " below the required radius");
      }
    }
    if (unknown) ++rep.inconclusive;
    pr.push_back(row);
  }
  rep.details["probes"] = pr;
  rep.finish(cfg.inconclusive_cap);
  return rep;
}

namespace {

json fiber_json(const FiberDescription& fd) {
  json segs = json::array();
  for (const auto& s : fd.segments)
    segs.push_back({{"lo", s.lo}, {"hi", s.hi}, {"unbounded_below", s.unbounded_below},
                    {"unbounded_above", s.unbounded_above}});
  return json{{"base", point_json(fd.base)},
              {"isolated", fd.isolated},
              {"segments", segs},
              {"probes", fd.probes},
              {"unknown", fd.unknown}};
}

// Empty string when the descriptions agree within tol.
std::string compare_fibers(const std::vector<double>& iso_a, const std::vector<FiberSegment>& seg_a,
                           const std::vector<double>& iso_b, const std::vector<FiberSegment>& seg_b, double tol) {
  if (iso_a.size() != iso_b.size()) return "number of isolated points differs";
  if (seg_a.size() != seg_b.size()) return "number of segments differs";
  for (std::size_t i = 0; i < iso_a.size(); ++i)
    if (std::fabs(iso_a[i] - iso_b[i]) > tol) return "isolated point differs";
  for (std::size_t i = 0; i < seg_a.size(); ++i) {
    const auto& x = seg_a[i];
    const auto& y = seg_b[i];
    if (x.unbounded_below != y.unbounded_below || x.unbounded_above != y.unbounded_above)
      return "segment unboundedness differs";
    if (!x.unbounded_below && std::fabs(x.lo - y.lo) > tol) return "segment lower end differs";
    if (!x.unbounded_above && std::fabs(x.hi - y.hi) > tol) return "segment upper end differs";
  }
  return {};
}

}  // namespace

Report check_fiber(const CellPtr& c, const Point& x, const FiberExpectation& expected, const CheckConfig& cfg,
                   Rng& rng) {
  Report rep;
  rep.kind = "fiber_set";
  rep.samples = 1;
  try {
    FiberDescription fd = fiber(*c, x, cfg.oracle, rng);
    rep.details["fiber"] = fiber_json(fd);
    std::string why = compare_fibers(fd.isolated, fd.segments, expected.isolated, expected.segments, cfg.oracle.tau_fib);
    if (!why.empty()) {
      Point p = x;
      p.push_back(fd.isolated.empty() ? 0.0 : fd.isolated.front());
      rep.violate(p, why);
    }
  } catch (const std::invalid_argument& e) {
    rep.violate(x, e.what());
  }
  rep.details["expected_isolated"] = expected.isolated;
  rep.finish(cfg.inconclusive_cap);
  return rep;
}

Report check_fiber_transfer(const CellPtr& x_cell, const CellPtr& y_cell, const VectorMap& fwd, const Point& x,
                            const CheckConfig& cfg, Rng& rng) {
  Report rep;
  rep.kind = "fiber_transfer";
  rep.samples = 2;
  auto y = fwd.apply(x);
  if (!y) {
    rep.violate(x, "map undefined at the basepoint");
    rep.finish(cfg.inconclusive_cap);
    return rep;
  }
  try {
    FiberDescription fx = fiber(*x_cell, x, cfg.oracle, rng);
    FiberDescription fy = fiber(*y_cell, *y, cfg.oracle, rng);
    rep.details["x_side"] = fiber_json(fx);
    rep.details["y_side"] = fiber_json(fy);
    // both sides are refined to tau/4, so allow twice the tolerance
    std::string why = compare_fibers(fx.isolated, fx.segments, fy.isolated, fy.segments, 2 * cfg.oracle.tau_fib);
    if (!why.empty()) rep.violate(x, why);
  } catch (const std::invalid_argument& e) {
    rep.violate(x, e.what());
  }
  rep.finish(cfg.inconclusive_cap);
  return rep;
}

// ---------------------------------------------------------------------------

Report check_homeo_pair(const VectorMap& fwd, const VectorMap& inv, const CellPtr& x, const CellPtr& y,
                        const std::vector<CellPtr>& x_hints, const std::vector<CellPtr>& y_hints,
                        const std::vector<PointCheck>& point_checks, const CheckConfig& cfg, Rng& rng) {
  Report rep;
  rep.kind = "homeo_pair";
  const auto& oc = cfg.oracle;
  const double tau = oc.tau_homeo;
  double err_x = 0, err_y = 0;

  // maps `from` points through `there` and back; `inside` says whether the
  // points are in the source cell (else on its boundary)
  auto round_trip = [&](const std::vector<Point>& pts, const VectorMap& there, const VectorMap& back,
                        const CellPtr& target, bool inside, double& err, const char* side) {
    for (const auto& p : pts) {
      ++rep.samples;
      auto q = there.apply(p);
      if (!q) {
        rep.violate(p, std::string(side) + ": map undefined");
        continue;
      }
      auto pp = back.apply(*q);
      if (!pp) {
        rep.violate(p, std::string(side) + ": inverse undefined");
        continue;
      }
      double e = max_abs_diff(*pp, p);
      err = std::max(err, e);
      if (e > tau) rep.violate(p, std::string(side) + ": round trip is not the identity");
      // images within tau of the other side of the target count as rounding
      Box near(q->size());
      for (std::size_t i = 0; i < q->size(); ++i) near[i] = Interval((*q)[i] - tau, (*q)[i] + tau);
      Membership m = contains(*target, *q);
      if (inside) {
        if (m == Membership::Out && certify_out(*target, near))
          rep.violate(p, std::string(side) + ": cell point mapped outside the other cell");
        continue;
      }
      if (m == Membership::In && certify_in(*target, near)) {
        rep.violate(p, std::string(side) + ": boundary point mapped into the other cell");
        continue;
      }
      auto k = closure_contains(*target, *q, oc, rng).kind;
      if (k == ClosureKind::No)
        rep.violate(p, std::string(side) + ": boundary point mapped outside the other closure");
      else if (k == ClosureKind::Unknown)
        ++rep.inconclusive;
    }
  };

  auto xs = sample_many(*x, cfg.samples, rng, oc.domain);
  auto ys = sample_many(*y, cfg.samples, rng, oc.domain);
  auto xb = boundary_sample(*x, cfg.boundary_samples, oc, rng, x_hints);
  auto yb = boundary_sample(*y, cfg.boundary_samples, oc, rng, y_hints);
  rep.details["x_samples"] = xs.size();
  rep.details["y_samples"] = ys.size();
  rep.details["x_boundary_samples"] = xb.size();
  rep.details["y_boundary_samples"] = yb.size();
  round_trip(xs, fwd, inv, y, true, err_x, "X");
  round_trip(xb, fwd, inv, y, false, err_x, "boundary of X");
  round_trip(ys, inv, fwd, x, true, err_y, "Y");
  round_trip(yb, inv, fwd, x, false, err_y, "boundary of Y");
  rep.details["max_error_inv_fwd"] = err_x;
  rep.details["max_error_fwd_inv"] = err_y;

  json pc = json::array();
  for (const auto& chk : point_checks) {
    ++rep.samples;
    const VectorMap& m = chk.map == "inv" ? inv : fwd;
    auto v = m.apply(chk.at);
    json row{{"map", chk.map}, {"at", point_json(chk.at)}, {"expected", point_json(chk.expected)}};
    if (!v) {
      rep.violate(chk.at, "point check: map undefined");
    } else {
      row["value"] = point_json(*v);
      if (*v != chk.expected) rep.violate(chk.at, "point check: value differs from the expected point");
    }
    pc.push_back(row);
  }
  rep.details["point_checks"] = pc;
  rep.finish(cfg.inconclusive_cap);
  return rep;
}

Report check_retraction(const CellPtr& c, const VectorMap& F, const Guard& closure, const Guard& target,
                        const std::vector<Point>& target_points, const CheckConfig& cfg, Rng& rng) {
  Report rep;
  rep.kind = "retraction";
  const double tol = 1e-9;
  const auto& oc = cfg.oracle;
  auto pts = sample_many(*c, cfg.samples, rng, oc.domain);
  auto bs = boundary_sample(*c, cfg.boundary_samples, oc, rng);
  rep.details["cell_samples"] = pts.size();
  rep.details["boundary_samples"] = bs.size();
  rep.details["target_points"] = target_points.size();
  rep.details["t_grid"] = 21;
  pts.insert(pts.end(), bs.begin(), bs.end());
  const std::size_t n = c->ambient;
  double worst_target = 0;
  auto at = [&](const Point& p, double t) {
    Point q = p;
    q.push_back(t);
    return F.apply(q);
  };
  for (const auto& p : pts) {
    for (int j = 0; j <= 20; ++j) {
      ++rep.samples;
      double t = j / 20.0;
      auto q = at(p, t);
      if (!q || q->size() != n) {
        rep.violate(p, "F undefined");
        continue;
      }
      if (j == 0 && max_abs_diff(*q, p) > tol) rep.violate(p, "F(p, 0) differs from p");
      if (!eval_guard_tolerant(closure, *q, tol)) rep.violate(p, "F(p, t) leaves the closure at t = " + std::to_string(t));
      if (j == 20 && !eval_guard_tolerant(target, *q, tol)) rep.violate(p, "F(p, 1) is not on the retract");
    }
  }
  for (const auto& a : target_points) {
    if (!eval_guard_tolerant(target, a, tol)) rep.violate(a, "declared retract point fails the target predicate");
    for (int j = 0; j <= 20; ++j) {
      ++rep.samples;
      auto q = at(a, j / 20.0);
      if (!q) {
        rep.violate(a, "F undefined on the retract");
        continue;
      }
      double e = max_abs_diff(*q, a);
      worst_target = std::max(worst_target, e);
      if (e > tol) rep.violate(a, "F moves a point of the retract");
    }
  }
  rep.details["max_displacement_on_target"] = worst_target;
  rep.finish(cfg.inconclusive_cap);
  return rep;
}

Report check_vanishes(const CellPtr& c, const Expr& e, double tol, bool include_boundary,
                      const std::vector<CellPtr>& hints, const CheckConfig& cfg, Rng& rng) {
  Report rep;
  rep.kind = "identity";
  auto pts = sample_many(*c, cfg.samples, rng, cfg.oracle.domain);
  std::size_t ncell = pts.size();
  if (include_boundary) {
    auto bs = boundary_sample(*c, cfg.boundary_samples, cfg.oracle, rng, hints);
    pts.insert(pts.end(), bs.begin(), bs.end());
  }
  rep.details["cell_samples"] = ncell;
  rep.details["boundary_samples"] = pts.size() - ncell;
  double worst = 0;
  for (const auto& p : pts) {
    ++rep.samples;
    auto v = eval_point(e, std::span<const double>(p).first(static_cast<std::size_t>(e.arity())));
    if (!v) {
      rep.violate(p, "expression undefined");
      continue;
    }
    worst = std::max(worst, std::fabs(*v));
    if (std::fabs(*v) > tol) rep.violate(p, "expression does not vanish");
  }
  rep.details["max_abs_value"] = worst;
  rep.details["tolerance"] = tol;
  rep.finish(cfg.inconclusive_cap);
  return rep;
}

Report check_root_residual(const CellPtr& base, const Expr& h, const std::vector<Expr>& terms, double tol, int samples,
                           const CheckConfig& cfg, Rng& rng) {
  Report rep;
  rep.kind = "root_residual";
  double worst = 0;
  for (const auto& p : sample_many(*base, samples, rng, cfg.oracle.domain)) {
    ++rep.samples;
    auto v = eval_point(h, p);
    if (!v) {
      rep.violate(p, "root expression undefined");
      continue;
    }
    Point q = p;
    q.push_back(*v);
    double sum = 0, scale = 0;
    bool ok = true;
    for (const auto& t : terms) {
      auto tv = eval_point(t, q);
      if (!tv) {
        ok = false;
        break;
      }
      sum += *tv;
      scale += std::fabs(*tv);
    }
    if (!ok) {
      rep.violate(p, "polynomial term undefined");
      continue;
    }
    double rel = scale > 0 ? std::fabs(sum) / scale : std::fabs(sum);
    worst = std::max(worst, rel);
    if (rel > tol) rep.violate(p, "relative residual above tolerance");
  }
  rep.details["max_relative_residual"] = worst;
  rep.details["tolerance"] = tol;
  rep.finish(cfg.inconclusive_cap);
  return rep;
}

Report check_closure_probes(const CellPtr& c, const std::vector<ClosureProbe>& probes, const CheckConfig& cfg,
                            Rng& rng) {
  Report rep;
  rep.kind = "closure_probe";
  json rows = json::array();
  for (const auto& pr : probes) {
    ++rep.samples;
    auto v = closure_contains(*c, pr.point, cfg.oracle, rng, true);
    Membership m = contains(*c, pr.point);
    json row{{"point", point_json(pr.point)}, {"closure", to_string(v.kind)}, {"membership", to_string(m)}};
    if (v.kind == ClosureKind::No) row["separation"] = v.separation;
    if (v.kind == ClosureKind::Yes && !v.witnesses.empty())
      row["closest_witness_distance"] = distance(v.witnesses.back().second, pr.point);
    rows.push_back(row);
    if (v.kind == ClosureKind::Unknown) {
      ++rep.inconclusive;
    } else if (v.kind != pr.closure) {
      rep.violate(pr.point, std::string("closure verdict ") + to_string(v.kind) + ", expected " + to_string(pr.closure));
    }
    if (pr.membership && m != *pr.membership)
      rep.violate(pr.point, std::string("membership ") + to_string(m) + ", expected " + to_string(*pr.membership));
  }
  rep.details["probes"] = rows;
  rep.finish(cfg.inconclusive_cap);
  return rep;
}

Report check_lbc(const CellPtr& c, const Point& p, bool expect_fails, const CheckConfig& cfg, Rng& rng) {
  Report rep;
  rep.kind = "lbc";
  rep.samples = 1;
  try {
    LbcResult r = locally_boundary_connected_at(*c, p, cfg.oracle, rng);
    rep.details["verdict"] = r.fails ? "fails-lbc" : "consistent-with-lbc";
    rep.details["eps"] = r.eps;
    rep.details["components"] = r.components;
    rep.details["samples"] = r.samples;
    json wp = json::array();
    for (const auto& [a, b] : r.witness_pairs)
      wp.push_back(a.empty() ? json(nullptr) : json::array({point_json(a), point_json(b)}));
    rep.details["witness_pairs"] = wp;
    if (r.fails != expect_fails)
      rep.violate(p, expect_fails ? "no persistent split into components" : "persistent split into components");
  } catch (const std::invalid_argument& e) {
    rep.violate(p, e.what());
  }
  rep.finish(cfg.inconclusive_cap);
  return rep;
}

}  // namespace cadtopo

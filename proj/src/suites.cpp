#include "cadtopo/suites.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <thread>

namespace cadtopo {

using nlohmann::json;

const std::vector<SuiteInfo>& suites() {
  static const std::vector<SuiteInfo> s = {
      {"thm-cf-not-wb", "closure-finite CADs of R^4 that are not well-bordered"},
      {"lemma-sandwich", "closure of a section lies in the closures of both neighbouring sectors"},
      {"remark-lazard", "Lazard's negative root gives a member of the family"},
      {"prop-cornet", "cornet cell and slit disk are equiregular"},
      {"prop-fibre", "doubleton fiber of a section over the cornet"},
      {"remark-sandwich-fail", "the sandwich equality fails without boundary connectedness"},
      {"prop-ring", "section over the cornet whose closure retracts onto a circle"},
      {"prop-sector", "non-regular sector over the cornet with regular bounds"},
      {"negative-controls", "constructions that must fail"},
      {"all", "every suite except negative-controls"},
  };
  return s;
}

bool is_suite(const std::string& id) {
  return std::any_of(suites().begin(), suites().end(), [&](const SuiteInfo& s) { return id == s.id; });
}

std::uint64_t check_seed(std::uint64_t suite_seed, const std::string& check_id) {
  return mix_seed(suite_seed, hash_string(check_id));
}

int SuiteResult::passed() const {
  return static_cast<int>(std::count_if(reports.begin(), reports.end(),
                                        [](const Report& r) { return r.verdict == Verdict::Pass; }));
}
int SuiteResult::failed() const {
  return static_cast<int>(std::count_if(reports.begin(), reports.end(),
                                        [](const Report& r) { return r.verdict == Verdict::Fail; }));
}
int SuiteResult::inconclusive() const {
  return static_cast<int>(std::count_if(reports.begin(), reports.end(),
                                        [](const Report& r) { return r.verdict == Verdict::Inconclusive; }));
}
int SuiteResult::exit_code() const {
  if (failed() > 0) return 1;
  if (inconclusive() > 0) return 2;
  return 0;
}

namespace {

const json& need(const json& body, const char* key) {
  if (!body.contains(key)) throw CatalogError(std::string("fact is missing \"") + key + "\"");
  return body[key];
}

std::vector<CellPtr> cells_of(const Entry& e, const json& refs) {
  std::vector<CellPtr> out;
  for (const auto& r : refs) out.push_back(e.cell(r.get<std::string>()));
  return out;
}

std::vector<CellPtr> all_cells(const Cad& cad) {
  std::vector<CellPtr> out;
  for (int k = 1; k <= cad.dimension(); ++k)
    for (const auto& c : cad.level(k)) out.push_back(c);
  return out;
}

std::string cad_of_ref(const std::string& ref) {
  auto pos = ref.find(':');
  return pos == std::string::npos ? std::string() : ref.substr(0, pos);
}

// Cells that guide boundary sampling: explicit "hints", the cells of
// "hints_cad", or every cell of the CAD the main cell belongs to.
std::vector<CellPtr> hints_for(const Entry& e, const json& body, const std::string& main_ref) {
  if (body.contains("hints")) return cells_of(e, body["hints"]);
  if (body.contains("hints_cad")) return all_cells(e.cad(body["hints_cad"].get<std::string>()));
  std::string cad = cad_of_ref(main_ref);
  if (!cad.empty()) return all_cells(e.cad(cad));
  return {};
}

ClosureKind closure_kind(const std::string& s) {
  if (s == "yes") return ClosureKind::Yes;
  if (s == "no") return ClosureKind::No;
  if (s == "unknown") return ClosureKind::Unknown;
  throw CatalogError("closure verdict must be yes, no or unknown, not '" + s + "'");
}

Membership membership_of(const std::string& s) {
  if (s == "in") return Membership::In;
  if (s == "out") return Membership::Out;
  throw CatalogError("membership must be in or out, not '" + s + "'");
}

bool close_ulps(double v, double expected) {
  return std::fabs(v - expected) <= 4 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::fabs(expected));
}

Report value_fact(const Entry& e, const json& b) {
  Report rep;
  rep.kind = "value";
  rep.samples = 1;
  const Expr& ex = e.expr(need(b, "expr").get<std::string>());
  Point at = e.point(need(b, "at"));
  double expected = e.constant(need(b, "expected").get<std::string>());
  auto v = eval_point(ex, at);
  rep.details["expected"] = expected;
  if (!v) {
    rep.violate(at, "expression undefined");
  } else {
    rep.details["value"] = *v;
    if (!close_ulps(*v, expected)) rep.violate(at, "value differs from the expected constant");
  }
  return rep;
}

Report map_value_fact(const Entry& e, const json& b) {
  Report rep;
  rep.kind = "map_value";
  rep.samples = 1;
  const VectorMap& m = e.map(need(b, "map").get<std::string>());
  Point at = e.point(need(b, "at"));
  Point expected = e.point(need(b, "expected"));
  auto v = m.apply(at);
  rep.details["expected"] = expected;
  if (!v) {
    rep.violate(at, "map undefined");
  } else {
    rep.details["value"] = *v;
    bool ok = v->size() == expected.size();
    for (std::size_t i = 0; ok && i < expected.size(); ++i) ok = close_ulps((*v)[i], expected[i]);
    if (!ok) rep.violate(at, "image differs from the expected point");
  }
  return rep;
}

Report cell_count_fact(const Entry& e, const json& b) {
  Report rep;
  rep.kind = "cell_count";
  rep.samples = 1;
  const Cad& cad = e.cad(need(b, "cad").get<std::string>());
  int level = need(b, "level").get<int>();
  long expected = need(b, "count").get<long>();
  long got = level >= 1 && level <= cad.dimension() ? static_cast<long>(cad.level(level).size()) : 0;
  rep.details["count"] = got;
  rep.details["expected"] = expected;
  if (got != expected) rep.violate({}, "cell count differs");
  return rep;
}

// Validated boundary samples (optionally pushed through a map) satisfy the locus.
Report boundary_locus_fact(const Entry& e, const json& b, const CheckConfig& cfg, Rng& rng) {
  Report rep;
  rep.kind = "boundary_locus";
  std::string ref = need(b, "cell").get<std::string>();
  CellPtr c = e.cell(ref);
  const VectorMap* m = b.contains("map") ? &e.map(b["map"].get<std::string>()) : nullptr;
  int dim = m ? static_cast<int>(m->components.size()) : c->ambient;
  Guard locus = e.parse_guard(need(b, "locus").get<std::string>(), dim);
  auto hints = hints_for(e, b, ref);
  auto bs = boundary_sample(*c, cfg.boundary_samples, cfg.oracle, rng, hints);
  rep.samples = cfg.boundary_samples;
  rep.inconclusive = std::max(0L, static_cast<long>(cfg.boundary_samples / 2) - static_cast<long>(bs.size()));
  rep.details["boundary_samples"] = bs.size();
  for (const auto& p : bs) {
    Point q = p;
    if (m) {
      auto img = m->apply(p);
      if (!img) {
        rep.violate(p, "map undefined at a boundary point");
        continue;
      }
      q = *img;
    }
    if (!eval_guard_tolerant(locus, q, 1e-9)) rep.violate(p, "boundary point off the declared locus");
  }
  return rep;
}

FiberExpectation fiber_expectation(const Entry& e, const json& b, const OracleConfig& oc) {
  FiberExpectation fx;
  for (const auto& v : need(b, "isolated")) fx.isolated.push_back(e.constant(v.get<std::string>()));
  std::sort(fx.isolated.begin(), fx.isolated.end());
  for (const auto& s : need(b, "segments")) {
    FiberSegment seg;
    seg.unbounded_below = s.at(0).is_null();
    seg.unbounded_above = s.at(1).is_null();
    seg.lo = seg.unbounded_below ? oc.scan_lo : e.constant(s.at(0).get<std::string>());
    seg.hi = seg.unbounded_above ? oc.scan_hi : e.constant(s.at(1).get<std::string>());
    fx.segments.push_back(seg);
  }
  return fx;
}

std::vector<Point> retract_points(const Entry& e, const json& b) {
  std::vector<Point> out;
  for (const auto& p : b.value("target_points", json::array())) out.push_back(e.point(p));
  for (const auto& cj : b.value("target_curves", json::array())) {
    double t0 = e.constant(cj.at("t").at(0).get<std::string>());
    double t1 = e.constant(cj.at("t").at(1).get<std::string>());
    std::vector<Expr> comps;
    for (const auto& x : cj.at("x")) comps.push_back(e.parse(x.get<std::string>(), 1));
    for (int i = 0; i <= 100; ++i) {
      double t = t0 + (t1 - t0) * i / 100.0;
      Point p;
      for (const auto& c : comps) {
        auto v = eval_point(c, std::span<const double>(&t, 1));
        if (!v) throw CatalogError("retract curve undefined at t = " + std::to_string(t));
        p.push_back(*v);
      }
      out.push_back(std::move(p));
    }
  }
  return out;
}

Report dispatch(const Entry& e, const Fact& f, const CheckConfig& cfg, Rng& rng) {
  const json& b = f.body;
  const std::string& k = f.kind;
  auto ref = [&](const char* key) { return need(b, key).get<std::string>(); };

  if (k == "closure_decomposition") {
    std::string cref = ref("cell");
    CellPtr c = e.cell(cref);
    std::vector<CellPtr> probe;
    if (b.contains("probe_cad"))
      probe = all_cells(e.cad(b["probe_cad"].get<std::string>()));
    else if (!cad_of_ref(cref).empty())
      probe = all_cells(e.cad(cad_of_ref(cref)));
    auto parts = cells_of(e, need(b, "parts"));
    if (probe.empty()) probe = parts;
    return check_closure_decomposition(c, parts, probe, cfg, rng);
  }
  if (k == "wb_claim") {
    std::string cref = ref("cell");
    return check_wb_claim(e.cell(cref), cells_of(e, need(b, "claimed")), hints_for(e, b, cref), cfg, rng);
  }
  if (k == "wb_violation") {
    std::string cref = ref("cell");
    CellPtr c = e.cell(cref);
    std::string cad = cad_of_ref(cref);
    if (cad.empty()) throw CatalogError("wb_violation needs a CAD cell");
    return check_wb_violation(c, cells_of(e, need(b, "lower")), e.cad(cad).level(c->ambient), cfg, rng);
  }
  if (k == "w_membership") {
    std::string cref = ref("cell");
    return check_w_membership(e.cell(cref), e.parse(ref("r"), 0), hints_for(e, b, cref), cfg, rng);
  }
  if (k == "sandwich") {
    auto cells = cells_of(e, need(b, "cells"));
    if (cells.size() != 3) throw CatalogError("sandwich needs three cells");
    std::vector<ProbeExpectation> probes;
    for (const auto& pj : b.value("probes", json::array())) {
      ProbeExpectation pe;
      pe.point = e.point(pj.at("point"));
      for (const auto& v : pj.at("expected")) pe.expected.push_back(closure_kind(v.get<std::string>()));
      if (pj.contains("min_separation")) pe.min_separation = e.constant(pj["min_separation"].get<std::string>());
      probes.push_back(std::move(pe));
    }
    return check_sandwich(cells[0], cells[1], cells[2], probes, hints_for(e, b, b["cells"][1].get<std::string>()),
                          cfg, rng);
  }
  if (k == "fiber_set")
    return check_fiber(e.cell(ref("cell")), e.point(need(b, "base_point")), fiber_expectation(e, b, cfg.oracle), cfg,
                       rng);
  if (k == "fiber_transfer")
    return check_fiber_transfer(e.cell(ref("x")), e.cell(ref("y")), e.map(ref("map")), e.point(need(b, "base_point")),
                                cfg, rng);
  if (k == "homeo_pair") {
    std::vector<PointCheck> pcs;
    for (const auto& pj : b.value("point_checks", json::array()))
      pcs.push_back({pj.at("map").get<std::string>(), e.point(pj.at("at")), e.point(pj.at("expected"))});
    std::vector<CellPtr> xh = b.contains("x_hints") ? cells_of(e, b["x_hints"]) : std::vector<CellPtr>{};
    std::vector<CellPtr> yh = b.contains("y_hints") ? cells_of(e, b["y_hints"]) : std::vector<CellPtr>{};
    return check_homeo_pair(e.map(ref("fwd")), e.map(ref("inv")), e.cell(ref("x")), e.cell(ref("y")), xh, yh, pcs,
                            cfg, rng);
  }
  if (k == "retraction") {
    CellPtr c = e.cell(ref("cell"));
    return check_retraction(c, e.map(ref("map")), e.parse_guard(ref("closure"), c->ambient),
                            e.parse_guard(ref("target"), c->ambient), retract_points(e, b), cfg, rng);
  }
  if (k == "identity") {
    std::string cref = ref("cell");
    CellPtr c = e.cell(cref);
    return check_vanishes(c, e.parse(ref("expr"), c->ambient), e.constant(ref("tolerance")), b.value("boundary", false),
                          hints_for(e, b, cref), cfg, rng);
  }
  if (k == "root_residual") {
    CellPtr base = e.cell(ref("base"));
    std::vector<Expr> terms;
    for (const auto& t : need(b, "terms")) terms.push_back(e.parse(t.get<std::string>(), base->ambient + 1));
    return check_root_residual(base, e.parse(ref("root"), base->ambient), terms, e.constant(ref("tolerance")),
                               b.value("samples", 1000), cfg, rng);
  }
  if (k == "closure_probe") {
    std::vector<ClosureProbe> probes;
    for (const auto& pj : need(b, "probes")) {
      ClosureProbe cp;
      cp.point = e.point(pj.at("point"));
      cp.closure = closure_kind(pj.at("closure").get<std::string>());
      if (pj.contains("membership")) cp.membership = membership_of(pj["membership"].get<std::string>());
      probes.push_back(std::move(cp));
    }
    return check_closure_probes(e.cell(ref("cell")), probes, cfg, rng);
  }
  if (k == "lbc_failure_point") {
    std::string ex = ref("expect_lbc");
    if (ex != "fails" && ex != "consistent") throw CatalogError("expect_lbc must be fails or consistent");
    return check_lbc(e.cell(ref("cell")), e.point(need(b, "point")), ex == "fails", cfg, rng);
  }
  if (k == "value") return value_fact(e, b);
  if (k == "map_value") return map_value_fact(e, b);
  if (k == "cell_count") return cell_count_fact(e, b);
  if (k == "boundary_locus") return boundary_locus_fact(e, b, cfg, rng);
  throw CatalogError("unknown fact kind " + k);
}

struct Instance {
  Entry entry;
  std::string tag;  // entry id plus the shift, if any
};

struct Job {
  const Instance* inst;
  const Fact* fact;
  std::string id;
  std::string suite;
};

// Closure-finiteness of a CAD: every top-level cell needs a passing
// closure decomposition fact in the same entry instance.
Report aggregate_cf(const Job& job, const std::vector<Job>& jobs, const std::vector<Report>& reports) {
  Report rep;
  rep.kind = "cf";
  const Entry& e = job.inst->entry;
  std::string cad_name = need(job.fact->body, "cad").get<std::string>();
  const Cad& cad = e.cad(cad_name);
  const auto& top = cad.level(cad.dimension());
  json per = json::object();
  for (const auto& cell : top) {
    ++rep.samples;
    const Report* found = nullptr;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      const Job& o = jobs[i];
      if (o.inst != job.inst || o.fact->kind != "closure_decomposition") continue;
      std::string cref = o.fact->body.value("cell", "");
      if (cad_of_ref(cref) != cad_name || e.cell(cref) != cell) continue;
      found = &reports[i];
      break;
    }
    std::string name = cell->label;
    if (!found) {
      per[name] = "no claim";
      ++rep.inconclusive;
      continue;
    }
    per[name] = to_string(found->verdict);
    if (found->verdict == Verdict::Fail) {
      Point p = found->violations.empty() ? Point{} : found->violations.front().point;
      rep.violate(p, "closure of " + name + " is not the claimed union of cells");
    } else if (found->verdict == Verdict::Inconclusive) {
      ++rep.inconclusive;
    }
  }
  rep.details["cad"] = cad_name;
  rep.details["claims"] = per;
  return rep;
}

std::string shift_tag(const std::string& s) {
  std::string out;
  for (char ch : s)
    if (ch != ' ') out += ch;
  return out;
}

}  // namespace

Report run_fact(const Entry& e, const Fact& f, const CheckConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  Report rep;
  try {
    rep = dispatch(e, f, cfg, rng);
  } catch (const std::exception& ex) {
    rep = Report{};
    rep.kind = f.kind;
    rep.violate({}, std::string("error: ") + ex.what());
  }
  rep.kind = f.kind;
  rep.expect = f.expect;
  rep.anchor = f.anchor.empty() ? e.anchor : f.anchor;
  rep.seed = seed;
  rep.details["entry"] = e.id;
  if (!e.shift_param.empty()) rep.details["shift"] = e.params.at(e.shift_param);
  rep.finish(cfg.inconclusive_cap);
  return rep;
}

SuiteResult run_suite(const Catalog& cat, const SuiteOptions& opt) {
  if (!is_suite(opt.suite)) throw std::invalid_argument("unknown suite '" + opt.suite + "'");
  if (opt.check.samples <= 0) throw std::invalid_argument("samples must be positive");
  auto t0 = std::chrono::steady_clock::now();
  const bool all = opt.suite == "all";
  auto selected = [&](const Fact& f) {
    for (const auto& s : f.suites)
      if (all ? s != "negative-controls" : s == opt.suite) return true;
    return false;
  };

  std::vector<std::unique_ptr<Instance>> instances;
  for (const auto& id : cat.ids()) {
    Entry probe = cat.load(id);
    if (std::none_of(probe.facts.begin(), probe.facts.end(), selected)) continue;
    if (probe.shift_param.empty()) {
      instances.push_back(std::make_unique<Instance>(Instance{std::move(probe), id}));
      continue;
    }
    for (const auto& s : opt.shifts) {
      Entry e = cat.load(id, {{probe.shift_param, s}});
      std::string tag = id + "[" + probe.shift_param + "=" + shift_tag(s) + "]";
      instances.push_back(std::make_unique<Instance>(Instance{std::move(e), tag}));
    }
  }

  std::vector<Job> jobs;
  for (const auto& inst : instances)
    for (const auto& f : inst->entry.facts) {
      if (!selected(f)) continue;
      std::string suite = opt.suite;
      if (all)
        for (const auto& s : f.suites)
          if (s != "negative-controls") {
            suite = s;
            break;
          }
      jobs.push_back({inst.get(), &f, inst->tag + "/" + f.id, suite});
    }
  std::sort(jobs.begin(), jobs.end(), [](const Job& a, const Job& b) { return a.id < b.id; });

  std::vector<Report> reports(jobs.size());
  auto run_one = [&](std::size_t i) {
    const Job& j = jobs[i];
    auto s = std::chrono::steady_clock::now();
    Report r = run_fact(j.inst->entry, *j.fact, opt.check, check_seed(opt.seed, j.id));
    if (opt.timing)
      r.millis = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - s).count();
    reports[i] = std::move(r);
  };

  std::vector<std::size_t> first, deferred;
  for (std::size_t i = 0; i < jobs.size(); ++i) (jobs[i].fact->kind == "cf" ? deferred : first).push_back(i);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t k; (k = next.fetch_add(1)) < first.size();) run_one(first[k]);
  };
  int nw = std::max(1, std::min<int>(opt.workers, static_cast<int>(first.size())));
  if (nw == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < nw; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (std::size_t i : deferred) {
    const Job& j = jobs[i];
    Report r;
    try {
      r = aggregate_cf(j, jobs, reports);
    } catch (const std::exception& ex) {
      r = Report{};
      r.violate({}, std::string("error: ") + ex.what());
    }
    r.kind = "cf";
    r.expect = j.fact->expect;
    r.anchor = j.fact->anchor.empty() ? j.inst->entry.anchor : j.fact->anchor;
    r.seed = check_seed(opt.seed, j.id);
    r.finish(opt.check.inconclusive_cap);
    reports[i] = std::move(r);
  }

  SuiteResult out;
  out.suite = opt.suite;
  out.seed = opt.seed;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    reports[i].suite = jobs[i].suite;
    reports[i].check = jobs[i].id;
  }
  out.reports = std::move(reports);
  if (opt.timing)
    out.millis = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

json to_json(const SuiteResult& r, const SuiteOptions& opt) {
  json checks = json::array();
  int unexpected = 0;
  for (const auto& rep : r.reports) {
    checks.push_back(to_json(rep));
    if (!rep.as_expected()) ++unexpected;
  }
  return {
      {"schema", "cadtopo.report/1"},
      {"suite", r.suite},
      {"seed", r.seed},
      {"config",
       {{"samples", opt.check.samples},
        {"boundary_samples", opt.check.boundary_samples},
        {"eps_min_exponent", opt.check.oracle.eps_levels},
        {"tau_fib", opt.check.oracle.tau_fib},
        {"tau_homeo", opt.check.oracle.tau_homeo},
        {"inconclusive_cap", opt.check.inconclusive_cap},
        {"shifts", opt.shifts}}},
      {"summary",
       {{"checks", r.reports.size()},
        {"pass", r.passed()},
        {"fail", r.failed()},
        {"inconclusive", r.inconclusive()},
        {"unexpected", unexpected},
        {"exit_code", r.exit_code()}}},
      {"verdict", r.exit_code() == 0 ? "pass" : r.exit_code() == 1 ? "fail" : "inconclusive"},
      {"millis", r.millis},
      {"checks", checks},
  };
}

}  // namespace cadtopo

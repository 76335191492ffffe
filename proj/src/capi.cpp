#include "cadtopo/cadtopo.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>

#include "cadtopo/suites.hpp"

using namespace cadtopo;

struct cadtopo_catalog {
  std::unique_ptr<Catalog> cat;
  std::vector<std::string> ids;
};

struct cadtopo_report {
  SuiteResult result;
  SuiteOptions options;
};

namespace {

thread_local std::string g_error;

cadtopo_status fail(cadtopo_status s, std::string msg) {
  g_error = std::move(msg);
  return s;
}

// Runs f, translating exceptions into status codes.
template <class F>
cadtopo_status guarded(F&& f) {
  g_error.clear();
  try {
    return f();
  } catch (const ParseError& ex) {
    return fail(CADTOPO_E_PARSE, ex.what());
  } catch (const ArityError& ex) {
    return fail(CADTOPO_E_ARG, ex.what());
  } catch (const CatalogError& ex) {
    return fail(CADTOPO_E_PARSE, ex.what());
  } catch (const std::invalid_argument& ex) {
    return fail(CADTOPO_E_ARG, ex.what());
  } catch (const std::bad_alloc&) {
    return fail(CADTOPO_E_INTERNAL, "out of memory");
  } catch (const std::exception& ex) {
    return fail(CADTOPO_E_INTERNAL, ex.what());
  } catch (...) {
    return fail(CADTOPO_E_INTERNAL, "unknown error");
  }
}

char* dup_string(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (p) std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

cadtopo_status need_entry(const cadtopo_catalog* cat, const char* entry) {
  if (!cat || !entry) return fail(CADTOPO_E_ARG, "null argument");
  if (!cat->cat->has(entry)) return fail(CADTOPO_E_NOT_FOUND, std::string("unknown entry '") + entry + "'");
  return CADTOPO_OK;
}

cadtopo_status find_cell(const Entry& e, const char* object, CellPtr& out) {
  if (!object) return fail(CADTOPO_E_ARG, "null object");
  try {
    out = e.cell(object);
  } catch (const CatalogError& ex) {
    return fail(CADTOPO_E_NOT_FOUND, ex.what());
  }
  return CADTOPO_OK;
}

}  // namespace

extern "C" {

const char* cadtopo_version(void) { return "1.0.0"; }

const char* cadtopo_status_name(cadtopo_status s) {
  switch (s) {
    case CADTOPO_OK: return "ok";
    case CADTOPO_E_ARG: return "invalid argument";
    case CADTOPO_E_NOT_FOUND: return "not found";
    case CADTOPO_E_PARSE: return "parse error";
    case CADTOPO_E_IO: return "i/o error";
    case CADTOPO_E_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* cadtopo_last_error(void) { return g_error.c_str(); }

void cadtopo_free(void* p) { std::free(p); }

cadtopo_status cadtopo_catalog_open(const char* dir, cadtopo_catalog** out) {
  if (!out) return fail(CADTOPO_E_ARG, "null out");
  *out = nullptr;
  return guarded([&] {
    std::filesystem::path d = dir ? std::filesystem::path(dir) : default_catalog_dir();
    if (!std::filesystem::is_directory(d)) return fail(CADTOPO_E_IO, "catalog directory not found: " + d.string());
    auto h = std::make_unique<cadtopo_catalog>();
    h->cat = std::make_unique<Catalog>(d);
    h->ids = h->cat->ids();
    *out = h.release();
    return CADTOPO_OK;
  });
}

void cadtopo_catalog_close(cadtopo_catalog* cat) { delete cat; }

size_t cadtopo_catalog_entry_count(const cadtopo_catalog* cat) { return cat ? cat->ids.size() : 0; }

const char* cadtopo_catalog_entry_id(const cadtopo_catalog* cat, size_t i) {
  return cat && i < cat->ids.size() ? cat->ids[i].c_str() : nullptr;
}

size_t cadtopo_suite_count(void) { return suites().size(); }

const char* cadtopo_suite_id(size_t i) { return i < suites().size() ? suites()[i].id : nullptr; }

const char* cadtopo_suite_title(size_t i) { return i < suites().size() ? suites()[i].title : nullptr; }

void cadtopo_suite_options_init(cadtopo_suite_options* opt) {
  if (!opt) return;
  SuiteOptions d;
  opt->suite = "all";
  opt->seed = d.seed;
  opt->samples = d.check.samples;
  opt->boundary_samples = d.check.boundary_samples;
  opt->eps_levels = d.check.oracle.eps_levels;
  opt->inconclusive_cap = d.check.inconclusive_cap;
  opt->shifts = nullptr;
  opt->shift_count = 0;
  opt->workers = d.workers;
  opt->timing = 0;
}

cadtopo_status cadtopo_run_suite(const cadtopo_catalog* cat, const cadtopo_suite_options* opt,
                                 cadtopo_report** out) {
  if (!cat || !opt || !out || !opt->suite) return fail(CADTOPO_E_ARG, "null argument");
  *out = nullptr;
  if (!is_suite(opt->suite)) return fail(CADTOPO_E_NOT_FOUND, std::string("unknown suite '") + opt->suite + "'");
  if (opt->samples <= 0) return fail(CADTOPO_E_ARG, "samples must be positive");
  if (opt->boundary_samples <= 0) return fail(CADTOPO_E_ARG, "boundary samples must be positive");
  if (opt->eps_levels < 1 || opt->eps_levels > kFinestEpsLevel)
    return fail(CADTOPO_E_ARG, "eps floor must lie between 2^-1 and 2^-" + std::to_string(kFinestEpsLevel));
  if (!(opt->inconclusive_cap >= 0 && opt->inconclusive_cap <= 1))
    return fail(CADTOPO_E_ARG, "inconclusive cap must lie in [0, 1]");
  if (opt->workers < 1) return fail(CADTOPO_E_ARG, "workers must be at least 1");
  if (opt->shift_count > 0 && !opt->shifts) return fail(CADTOPO_E_ARG, "null shift list");
  return guarded([&] {
    auto r = std::make_unique<cadtopo_report>();
    SuiteOptions& o = r->options;
    o.suite = opt->suite;
    o.seed = opt->seed;
    o.check.samples = opt->samples;
    o.check.boundary_samples = opt->boundary_samples;
    o.check.oracle.eps_levels = opt->eps_levels;
    o.check.inconclusive_cap = opt->inconclusive_cap;
    if (opt->shift_count > 0) {
      o.shifts.clear();
      for (size_t i = 0; i < opt->shift_count; ++i) {
        if (!opt->shifts[i]) return fail(CADTOPO_E_ARG, "null shift");
        parse_expr(opt->shifts[i], 0);  // rejects malformed shifts before any work
        o.shifts.emplace_back(opt->shifts[i]);
      }
    }
    o.workers = opt->workers;
    o.timing = opt->timing != 0;
    r->result = run_suite(*cat->cat, o);
    *out = r.release();
    return CADTOPO_OK;
  });
}

void cadtopo_report_free(cadtopo_report* rep) { delete rep; }

int cadtopo_report_exit_code(const cadtopo_report* rep) { return rep ? rep->result.exit_code() : 3; }

void cadtopo_report_counts(const cadtopo_report* rep, int* pass, int* fail_, int* inconclusive) {
  if (pass) *pass = rep ? rep->result.passed() : 0;
  if (fail_) *fail_ = rep ? rep->result.failed() : 0;
  if (inconclusive) *inconclusive = rep ? rep->result.inconclusive() : 0;
}

cadtopo_status cadtopo_report_json(const cadtopo_report* rep, char** out) {
  if (!rep || !out) return fail(CADTOPO_E_ARG, "null argument");
  return guarded([&] {
    *out = dup_string(to_json(rep->result, rep->options).dump(2) + "\n");
    return *out ? CADTOPO_OK : fail(CADTOPO_E_INTERNAL, "out of memory");
  });
}

cadtopo_status cadtopo_report_write(const cadtopo_report* rep, const char* path) {
  if (!rep || !path) return fail(CADTOPO_E_ARG, "null argument");
  return guarded([&] {
    std::ofstream f(path, std::ios::binary);
    if (!f) return fail(CADTOPO_E_IO, std::string("cannot write ") + path);
    f << to_json(rep->result, rep->options).dump(2) << "\n";
    return f ? CADTOPO_OK : fail(CADTOPO_E_IO, std::string("write failed: ") + path);
  });
}

cadtopo_status cadtopo_cell_contains(const cadtopo_catalog* cat, const char* entry, const char* object,
                                     const double* p, size_t n, cadtopo_membership* out) {
  if (auto s = need_entry(cat, entry); s != CADTOPO_OK) return s;
  if (!p || !out) return fail(CADTOPO_E_ARG, "null argument");
  return guarded([&] {
    Entry e = cat->cat->load(entry);
    CellPtr c;
    if (auto s = find_cell(e, object, c); s != CADTOPO_OK) return s;
    Membership m = contains(*c, std::span<const double>(p, n));
    *out = m == Membership::In ? CADTOPO_IN : m == Membership::Out ? CADTOPO_OUT : CADTOPO_UNCERTAIN;
    return CADTOPO_OK;
  });
}

cadtopo_status cadtopo_closure_contains(const cadtopo_catalog* cat, const char* entry, const char* object,
                                        const double* p, size_t n, uint64_t seed, cadtopo_closure* out) {
  if (auto s = need_entry(cat, entry); s != CADTOPO_OK) return s;
  if (!p || !out) return fail(CADTOPO_E_ARG, "null argument");
  return guarded([&] {
    Entry e = cat->cat->load(entry);
    CellPtr c;
    if (auto s = find_cell(e, object, c); s != CADTOPO_OK) return s;
    Rng rng(seed);
    auto v = closure_contains(*c, std::span<const double>(p, n), OracleConfig{}, rng);
    *out = v.kind == ClosureKind::Yes  ? CADTOPO_CLOSURE_YES
           : v.kind == ClosureKind::No ? CADTOPO_CLOSURE_NO
                                       : CADTOPO_CLOSURE_UNKNOWN;
    return CADTOPO_OK;
  });
}

cadtopo_status cadtopo_eval_expr(const cadtopo_catalog* cat, const char* entry, const char* name, const double* p,
                                 size_t n, double* out) {
  if (auto s = need_entry(cat, entry); s != CADTOPO_OK) return s;
  if (!name || (!p && n > 0) || !out) return fail(CADTOPO_E_ARG, "null argument");
  return guarded([&] {
    Entry e = cat->cat->load(entry);
    if (!e.exprs.count(name)) return fail(CADTOPO_E_NOT_FOUND, std::string("unknown expression '") + name + "'");
    auto v = eval_point(e.expr(name), std::span<const double>(p, n));
    if (!v) return fail(CADTOPO_E_ARG, "expression undefined at the point");
    *out = *v;
    return CADTOPO_OK;
  });
}

cadtopo_status cadtopo_export_mesh(const cadtopo_catalog* cat, const char* entry, const char* object,
                                   int resolution, const char* out_path, uint64_t seed, cadtopo_mesh_stats* stats) {
  if (auto s = need_entry(cat, entry); s != CADTOPO_OK) return s;
  if (!object || !out_path) return fail(CADTOPO_E_ARG, "null argument");
  if (resolution < 8) return fail(CADTOPO_E_ARG, "resolution must be at least 8");
  return guarded([&] {
    Entry e = cat->cat->load(entry);
    CellPtr c;
    if (auto s = find_cell(e, object, c); s != CADTOPO_OK) return s;
    MeshStats st;
    try {
      st = export_mesh(e, object, resolution, out_path, seed);
    } catch (const std::runtime_error& ex) {
      if (std::string(ex.what()).rfind("cannot write", 0) == 0) return fail(CADTOPO_E_IO, ex.what());
      throw;
    }
    if (stats) *stats = {st.vertices, st.faces, st.edges, st.boundary_points};
    return CADTOPO_OK;
  });
}

}  // extern "C"

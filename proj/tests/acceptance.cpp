// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.
//
//   acceptance <path-to-cadverify> [work-dir]
//
// Suites run at the default sample count (10^4 per side). The full run takes
// several minutes on one core.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <json.hpp>

#include "cadtopo/cadtopo.h"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr long kSamples = 10000;

std::string g_cli;
fs::path g_work;
cadtopo_catalog* g_cat = nullptr;

struct Outcome {
  bool ok = true;
  std::string note;
  void require(bool cond, const std::string& why) {
    if (!cond && ok) {
      ok = false;
      note = why;
    }
  }
};

int run_cli(const std::string& args) {
  std::string cmd = "\"" + g_cli + "\" " + args + " > /dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Runs a suite through the C API; returns the parsed report.
json run_suite(const char* suite, std::vector<std::string> shifts, bool timing, int* exit_code, double* seconds) {
  cadtopo_suite_options opt;
  cadtopo_suite_options_init(&opt);
  opt.suite = suite;
  opt.seed = 7;
  opt.timing = timing ? 1 : 0;
  std::vector<const char*> ptrs;
  for (const auto& s : shifts) ptrs.push_back(s.c_str());
  if (!ptrs.empty()) {
    opt.shifts = ptrs.data();
    opt.shift_count = ptrs.size();
  }
  cadtopo_report* rep = nullptr;
  auto t0 = std::chrono::steady_clock::now();
  if (cadtopo_run_suite(g_cat, &opt, &rep) != CADTOPO_OK)
    throw std::runtime_error(std::string("run ") + suite + ": " + cadtopo_last_error());
  if (seconds) *seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (exit_code) *exit_code = cadtopo_report_exit_code(rep);
  char* text = nullptr;
  cadtopo_report_json(rep, &text);
  json j = json::parse(text);
  cadtopo_free(text);
  cadtopo_report_free(rep);
  return j;
}

const json* find_check(const json& rep, const std::string& id) {
  for (const auto& c : rep["checks"])
    if (c["check"] == id) return &c;
  return nullptr;
}

bool near(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

// -- criteria --

Outcome cf_not_wb() {
  Outcome o;
  std::ostringstream note;
  for (const char* s : {"-1", "0", "1/2", "2"}) {
    int code = -1;
    double secs = 0;
    json r = run_suite("thm-cf-not-wb", {s}, true, &code, &secs);
    const std::string tag = std::string("s=") + s;
    o.require(code == 0, tag + ": exit " + std::to_string(code));
    o.require(secs < 120, tag + ": took " + std::to_string(secs) + " s");
    int closures = 0;
    double worst = 0;
    for (const auto& c : r["checks"]) {
      worst = std::max(worst, c["inconclusive_fraction"].get<double>());
      o.require(c["inconclusive_fraction"].get<double>() < 0.02, tag + ": " + c["check"].get<std::string>() + " inconclusive");
      if (c["kind"] != "closure_decomposition") continue;
      if (c["details"]["entry"] != "w-family") continue;
      ++closures;
      o.require(c["verdict"] == "pass" && c["violation_count"] == 0, tag + ": " + c["check"].get<std::string>());
      o.require(c["details"]["side_a_samples"].get<long>() >= kSamples, tag + ": closure side a undersampled");
    }
    o.require(closures >= 11, tag + ": only " + std::to_string(closures) + " closure facts");
    const json* wb = find_check(r, std::string("w-family[s=") + s + "]/wb-violation/C3112");
    o.require(wb && (*wb)["verdict"] == "pass", tag + ": wb violation not confirmed");
    if (wb) o.require((*wb)["details"]["boundary_dimension"].get<int>() <= 1, tag + ": boundary dimension");
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s%s %.0fs inc<=%.4f", note.str().empty() ? "" : ", ", tag.c_str(), secs, worst);
    note << buf;
  }
  if (o.ok) o.note = note.str();
  return o;
}

Outcome doubleton_fiber(const json& all) {
  Outcome o;
  const json* c = find_check(all, "trousers/fiber/cornet-side");
  o.require(c && (*c)["verdict"] == "pass", "fiber check missing or failed");
  if (!o.ok) return o;
  const auto& f = (*c)["details"]["fiber"];
  auto base = f["base"].get<std::vector<double>>();
  o.require(base == std::vector<double>{0, 0, 0.5}, "wrong base point");
  o.require(f["segments"].empty(), "fiber has segments");
  auto iso = f["isolated"].get<std::vector<double>>();
  o.require(iso.size() == 2, "expected two isolated points");
  if (iso.size() == 2) {
    o.require(near(iso[0], -0.5, 1e-6) && near(iso[1], 0, 1e-6), "isolated points off");
    char buf[96];
    std::snprintf(buf, sizeof buf, "isolated %.3g, %.3g", iso[0], iso[1]);
    if (o.ok) o.note = buf;
  }
  return o;
}

Outcome homeo_pair(const json& all) {
  Outcome o;
  const json* c = find_check(all, "cornet-slitdisk/homeo/phi-psi");
  o.require(c && (*c)["verdict"] == "pass", "homeo check missing or failed");
  if (!o.ok) return o;
  const auto& d = (*c)["details"];
  double e1 = d["max_error_fwd_inv"], e2 = d["max_error_inv_fwd"];
  o.require(e1 <= 1e-9 && e2 <= 1e-9, "round-trip error above 1e-9");
  o.require(d["x_samples"].get<long>() >= kSamples && d["y_samples"].get<long>() >= kSamples, "undersampled");
  bool phi_point = false;
  for (const auto& pc : d["point_checks"]) {
    o.require(pc.contains("value") && pc["value"] == pc["expected"], "point check not exact");
    if (pc["map"] == "fwd" && pc["at"] == json::array({0.0, 0.0, 0.5}) && pc["expected"] == json::array({-0.5, 0.0}))
      phi_point = true;
  }
  o.require(phi_point, "phi(0,0,1/2) point check missing");
  char buf[96];
  std::snprintf(buf, sizeof buf, "round trip %.2g / %.2g", e1, e2);
  if (o.ok) o.note = buf;
  return o;
}

Outcome sandwich_remark(const json& all) {
  Outcome o;
  double seps[2] = {0, 0};
  int k = 0;
  for (const char* id : {"trousers/sandwich/slit-disk", "trousers/sandwich/cornet"}) {
    const json* c = find_check(all, id);
    o.require(c != nullptr, std::string(id) + " missing");
    if (!c) return o;
    const auto& p = (*c)["details"]["probes"].at(0);
    o.require(p["A"]["closure"] == "yes" && p["C"]["closure"] == "yes" && p["B"]["closure"] == "no",
              std::string(id) + ": probe misclassified");
    if (p["B"].contains("separation")) seps[k] = p["B"]["separation"];
    ++k;
  }
  o.require(seps[0] >= 0.15, "slit-disk separation below 0.15");
  char buf[96];
  std::snprintf(buf, sizeof buf, "separation %.4f (slit disk), %.4f (cornet)", seps[0], seps[1]);
  if (o.ok) o.note = buf;
  return o;
}

Outcome sandwich_inclusion(const json& all) {
  Outcome o;
  int n = 0;
  for (const auto& c : all["checks"]) {
    if (c["kind"] != "sandwich") continue;
    ++n;
    const std::string id = c["check"];
    o.require(c["details"]["inclusion_violations"] == 0, id + ": inclusion violated");
    o.require(c["details"]["section_samples"].get<long>() >= kSamples, id + ": undersampled");
  }
  o.require(n >= 7, "too few sandwich checks");
  if (o.ok) o.note = std::to_string(n) + " sandwich checks, 0 violations";
  return o;
}

Outcome retraction(const json& all) {
  Outcome o;
  const json* c = find_check(all, "ring/retraction");
  o.require(c && (*c)["verdict"] == "pass" && (*c)["violation_count"] == 0, "retraction missing or failed");
  if (!o.ok) return o;
  const auto& d = (*c)["details"];
  o.require(d["t_grid"] == 21, "t grid is not 21 points");
  o.require(d["cell_samples"].get<long>() >= kSamples, "undersampled");
  if (o.ok) o.note = std::to_string((*c)["samples"].get<long>()) + " (p, t) evaluations";
  return o;
}

Outcome sector_proxies(const json& all) {
  Outcome o;
  const json* m = find_check(all, "sector/m3-equals-u-of-m12");
  o.require(m && (*m)["verdict"] == "pass", "identity check missing or failed");
  if (!o.ok) return o;
  o.require((*m)["details"]["cell_samples"].get<long>() >= kSamples, "identity undersampled");
  o.require((*m)["details"]["max_abs_value"].get<double>() <= 1e-9, "identity residual");
  const json* r = find_check(all, "sector/red-region");
  o.require(r && (*r)["verdict"] == "pass", "red-region check missing or failed");
  if (!o.ok) return o;
  int seen = 0;
  for (const auto& p : (*r)["details"]["probes"]) {
    auto pt = p["point"].get<std::vector<double>>();
    if (pt.size() == 3 && pt[0] == -0.5 && pt[1] == 0 && (pt[2] == 0.125 || pt[2] == -0.125 || pt[2] == 0)) {
      ++seen;
      o.require(p["closure"] == "yes" && p["membership"] == "out", "probe misclassified");
    }
  }
  o.require(seen == 3, "expected three red-region probes");
  char buf[64];
  std::snprintf(buf, sizeof buf, "identity residual %.2g", (*m)["details"]["max_abs_value"].get<double>());
  if (o.ok) o.note = buf;
  return o;
}

Outcome w_membership(const json& all, const json& neg) {
  Outcome o;
  int fam = 0;
  for (const auto& c : all["checks"]) {
    if (c["kind"] != "w_membership") continue;
    const std::string id = c["check"];
    fam += id.rfind("w-family[", 0) == 0;
    o.require(c["verdict"] == "pass", id + " failed");
    o.require(c["details"]["divergence_threshold"].get<double>() <= -1e6, id + ": threshold");
    o.require(c["details"]["property_i_violations"] == 0 && c["details"]["property_ii_violations"] == 0,
              id + ": property violations");
  }
  o.require(find_check(all, "lazard/w-membership") != nullptr, "lazard check missing");
  o.require(fam >= 4, "w-family checks missing");
  const json* k = find_check(neg, "non-cf-variant/w-membership/constant");
  o.require(k && (*k)["verdict"] == "fail", "constant control did not fail");
  if (k) o.require((*k)["details"]["property_ii_violations"].get<long>() > 0, "constant control passes (ii)");
  if (o.ok) o.note = "constant control (ii) violations " + std::to_string((*k)["details"]["property_ii_violations"].get<long>());
  return o;
}

Outcome negative_control(const json& neg, int cli_exit) {
  Outcome o;
  o.require(cli_exit == 1, "negative-controls exit " + std::to_string(cli_exit));
  const json* c = find_check(neg, "non-cf-variant/cf");
  o.require(c && (*c)["verdict"] == "fail" && !(*c)["violations"].empty(), "cf check did not fail");
  if (!o.ok) return o;
  auto w = (*c)["violations"][0]["point"].get<std::vector<double>>();
  o.require(w.size() == 4 && w[0] == 0 && w[1] == 0 && w[2] == 0, "witness not on the half-line");
  if (o.ok) o.note = "witness x4 = " + std::to_string(w[3]);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: acceptance <cadverify> [work-dir]\n");
    return 2;
  }
  g_cli = argv[1];
  g_work = argc > 2 ? fs::path(argv[2]) : fs::temp_directory_path() / "cadtopo-acceptance";
  fs::create_directories(g_work);
  if (cadtopo_catalog_open(nullptr, &g_cat) != CADTOPO_OK) {
    std::fprintf(stderr, "cannot open catalog: %s\n", cadtopo_last_error());
    return 2;
  }

  // two CLI runs of the full suite; the first report feeds criteria 2-8
  const fs::path a = g_work / "all-a.json", b = g_work / "all-b.json";
  int rc_a = run_cli("verify all --seed 7 -q --report \"" + a.string() + "\"");
  int rc_b = run_cli("verify all --seed 7 -q --report \"" + b.string() + "\"");
  json all = json::parse(slurp(a));
  const fs::path n = g_work / "neg.json";
  int rc_neg = run_cli("verify negative-controls --seed 7 -q --report \"" + n.string() + "\"");
  json neg = json::parse(slurp(n));

  std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"cf-not-wb over four shifts", cf_not_wb},
      {"doubleton fiber over (0,0,1/2)", [&] { return doubleton_fiber(all); }},
      {"cornet / slit disk homeomorphism", [&] { return homeo_pair(all); }},
      {"sandwich probe yes/no/yes", [&] { return sandwich_remark(all); }},
      {"sandwich inclusion", [&] { return sandwich_inclusion(all); }},
      {"ring retraction", [&] { return retraction(all); }},
      {"sector proxies", [&] { return sector_proxies(all); }},
      {"W-membership", [&] { return w_membership(all, neg); }},
      {"non-CF negative control", [&] { return negative_control(neg, rc_neg); }},
      {"determinism of verify all --seed 7", [&] {
         Outcome o;
         o.require(rc_a == 0 && rc_b == 0, "verify all exit " + std::to_string(rc_a) + "/" + std::to_string(rc_b));
         o.require(slurp(a) == slurp(b), "reports differ");
         if (o.ok) o.note = "identical, " + std::to_string(slurp(a).size()) + " bytes";
         return o;
       }},
  };

  int failed = 0, i = 0;
  for (auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& ex) {
      o.ok = false;
      o.note = ex.what();
    }
    failed += !o.ok;
    std::printf("criterion %2d  %s  %s: %s\n", ++i, o.ok ? "PASS" : "FAIL", name.c_str(), o.note.c_str());
    std::fflush(stdout);
  }
  cadtopo_catalog_close(g_cat);
  std::printf("%d/%zu criteria pass\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed ? 1 : 0;
}

// cadverify: command-line front end over the cadtopo C API.
//
//   cadverify verify <suite> [--seed N] [--samples N] [--shift s ...]
//                    [--report path.json] [--eps-min 2^-K] [--config file.json]
//   cadverify mesh <entry> <object> [--res N] [--out path.ply]
//   cadverify list
//
// Exit codes: 0 pass, 1 violations, 2 inconclusive over the cap, 3 usage error.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cadtopo/cadtopo.h"

namespace {

constexpr int kUsage = 3;

// JSON object of option values. Flat keys belong to the verify subcommand
// (except "data"); nested objects name subcommands explicitly.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& ex) {
      throw CLI::ConversionError(std::string("config: ") + ex.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config: top level must be an object");
    std::vector<CLI::ConfigItem> out;
    collect(j, {}, out);
    for (auto& item : out)
      if (item.parents.empty() && item.name != "data") item.parents.push_back("verify");
    return out;
  }

 private:
  static std::string scalar(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number()) return v.dump();
    throw CLI::ConversionError("config: unsupported value " + v.dump());
  }

  static void collect(const nlohmann::json& j, const std::vector<std::string>& parents,
                      std::vector<CLI::ConfigItem>& out) {
    for (const auto& [key, v] : j.items()) {
      if (v.is_object()) {
        auto p = parents;
        p.push_back(key);
        collect(v, p, out);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (v.is_array())
        for (const auto& x : v) item.inputs.push_back(scalar(x));
      else
        item.inputs.push_back(scalar(v));
      out.push_back(std::move(item));
    }
  }
};

// "2^-K", or a number that is exactly such a power of two.
bool parse_eps(const std::string& s, int& levels) {
  if (s.rfind("2^-", 0) == 0) {
    try {
      std::size_t used = 0;
      int k = std::stoi(s.substr(3), &used);
      if (used != s.size() - 3) return false;
      levels = k;
      return true;
    } catch (const std::exception&) {
      return false;
    }
  }
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || !(v > 0 && v < 1)) return false;
  int e = 0;
  double m = std::frexp(v, &e);
  if (m != 0.5) return false;
  levels = 1 - e;
  return true;
}

int report_error(const char* what) {
  std::fprintf(stderr, "cadverify: %s: %s\n", what, cadtopo_last_error());
  return kUsage;
}

const char* verdict_tag(const std::string& v) {
  if (v == "pass") return "PASS";
  if (v == "fail") return "FAIL";
  return "INCONCLUSIVE";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Verify topological facts about CAD cells"};
  app.require_subcommand(1);
  app.fallthrough();  // lets --config and --data follow the subcommand
  std::string data_dir;
  app.add_option("--data", data_dir, "catalog directory (default: $CADTOPO_DATA_DIR or the built-in path)");

  auto* verify = app.add_subcommand("verify", "run a verification suite");
  std::string suite;
  std::uint64_t seed = 0;
  int samples = 0, boundary = 0, workers = 1;
  std::vector<std::string> shifts;
  std::string report_path, eps;
  double cap = -1;
  bool timing = false, quiet = false;
  verify->add_option("suite", suite, "suite id (see 'cadverify list')")->required();
  verify->add_option("--seed", seed, "base seed");
  verify->add_option("--samples", samples, "samples per check side")->check(CLI::PositiveNumber);
  verify->add_option("--boundary-samples", boundary, "validated boundary points per cell")
      ->check(CLI::PositiveNumber);
  verify->add_option("--shift", shifts, "shift parameters for parameterised entries")->take_all();
  verify->add_option("--report", report_path, "write the JSON report here");
  verify->add_option("--eps-min", eps, "witness eps floor, 2^-K with K <= 30");
  verify->add_option("--inconclusive-cap", cap, "allowed inconclusive fraction")->check(CLI::Range(0.0, 1.0));
  verify->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  verify->add_flag("--timing", timing, "record wall time per check");
  verify->add_flag("-q,--quiet", quiet, "print only the summary line");

  auto* mesh = app.add_subcommand("mesh", "export a cell as ASCII PLY");
  std::string entry, object, out_path;
  int res = 64;
  std::uint64_t mesh_seed = 0;
  mesh->add_option("entry", entry, "catalog entry")->required();
  mesh->add_option("object", object, "cell name or CAD:index")->required();
  mesh->add_option("--res", res, "grid resolution (>= 8)");
  mesh->add_option("--out", out_path, "output path (default <entry>_<object>.ply)");
  mesh->add_option("--seed", mesh_seed, "sampling seed");

  auto* list = app.add_subcommand("list", "list suites and catalog entries");

  app.config_formatter(std::make_shared<JsonConfig>());
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.set_config("--config", "", "JSON file with option values; command-line flags take precedence");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kUsage;
  }

  if (list->parsed()) {
    for (size_t i = 0; i < cadtopo_suite_count(); ++i)
      std::printf("suite  %-22s %s\n", cadtopo_suite_id(i), cadtopo_suite_title(i));
    cadtopo_catalog* cat = nullptr;
    if (cadtopo_catalog_open(data_dir.empty() ? nullptr : data_dir.c_str(), &cat) != CADTOPO_OK)
      return report_error("cannot open catalog");
    for (size_t i = 0; i < cadtopo_catalog_entry_count(cat); ++i)
      std::printf("entry  %s\n", cadtopo_catalog_entry_id(cat, i));
    cadtopo_catalog_close(cat);
    return 0;
  }

  cadtopo_catalog* cat = nullptr;
  if (cadtopo_catalog_open(data_dir.empty() ? nullptr : data_dir.c_str(), &cat) != CADTOPO_OK)
    return report_error("cannot open catalog");
  struct Closer {
    cadtopo_catalog* c;
    ~Closer() { cadtopo_catalog_close(c); }
  } closer{cat};

  if (mesh->parsed()) {
    if (res < 8) {
      std::fprintf(stderr, "cadverify: --res must be at least 8\n");
      return kUsage;
    }
    if (out_path.empty()) {
      out_path = entry + "_" + object + ".ply";
      for (char& ch : out_path)
        if (ch == ':' || ch == '/') ch = '_';
    }
    cadtopo_mesh_stats st{};
    if (cadtopo_export_mesh(cat, entry.c_str(), object.c_str(), res, out_path.c_str(), mesh_seed, &st) != CADTOPO_OK)
      return report_error("mesh export failed");
    std::printf("%s: %ld vertices, %ld edges, %ld faces, euler %ld; %ld boundary samples\n", out_path.c_str(),
                st.vertices, st.edges, st.faces, st.vertices - st.edges + st.faces, st.boundary_points);
    return 0;
  }

  cadtopo_suite_options opt;
  cadtopo_suite_options_init(&opt);
  opt.suite = suite.c_str();
  opt.seed = seed;
  if (samples > 0) opt.samples = samples;
  if (boundary > 0) opt.boundary_samples = boundary;
  if (cap >= 0) opt.inconclusive_cap = cap;
  opt.workers = workers;
  opt.timing = timing ? 1 : 0;
  if (!eps.empty()) {
    int levels = 0;
    if (!parse_eps(eps, levels)) {
      std::fprintf(stderr, "cadverify: --eps-min expects 2^-K, got '%s'\n", eps.c_str());
      return kUsage;
    }
    if (levels > 30) {
      std::fprintf(stderr, "cadverify: --eps-min must be at least 2^-30\n");
      return kUsage;
    }
    if (levels < 1) {
      std::fprintf(stderr, "cadverify: --eps-min must be below 1\n");
      return kUsage;
    }
    opt.eps_levels = levels;
  }
  std::vector<const char*> shift_ptrs;
  for (const auto& s : shifts) shift_ptrs.push_back(s.c_str());
  if (!shift_ptrs.empty()) {
    opt.shifts = shift_ptrs.data();
    opt.shift_count = shift_ptrs.size();
  }

  cadtopo_report* rep = nullptr;
  if (cadtopo_run_suite(cat, &opt, &rep) != CADTOPO_OK) return report_error("cannot run suite");
  char* text = nullptr;
  if (cadtopo_report_json(rep, &text) != CADTOPO_OK) {
    cadtopo_report_free(rep);
    return report_error("cannot render report");
  }
  if (!report_path.empty() && cadtopo_report_write(rep, report_path.c_str()) != CADTOPO_OK) {
    cadtopo_free(text);
    cadtopo_report_free(rep);
    return report_error("cannot write report");
  }
  int code = cadtopo_report_exit_code(rep);
  auto j = nlohmann::json::parse(text);
  cadtopo_free(text);
  cadtopo_report_free(rep);

  if (!quiet)
    for (const auto& c : j["checks"]) {
      std::printf("%-12s %s  samples=%lld violations=%lld inconclusive=%.4f", verdict_tag(c["verdict"]),
                  c["check"].get<std::string>().c_str(), c["samples"].get<long long>(),
                  c["violation_count"].get<long long>(), c["inconclusive_fraction"].get<double>());
      if (c["expect"] != "pass") std::printf("  (expected %s)", c["expect"].get<std::string>().c_str());
      if (!c["violations"].empty())
        std::printf("  first: %s", c["violations"][0]["reason"].get<std::string>().c_str());
      std::printf("\n");
    }
  const auto& s = j["summary"];
  std::printf("%s: %d checks, %d pass, %d fail, %d inconclusive; exit %d\n", j["suite"].get<std::string>().c_str(),
              s["checks"].get<int>(), s["pass"].get<int>(), s["fail"].get<int>(), s["inconclusive"].get<int>(), code);
  return code;
}

#pragma once

// Verification suites: facts from the catalog dispatched to the checkers,
// run on a worker pool and merged deterministically.

#include <string>
#include <vector>

#include "cadtopo/catalog.hpp"

namespace cadtopo {

struct SuiteInfo {
  const char* id;
  const char* title;
};

/// Known suites, "all" last.
const std::vector<SuiteInfo>& suites();
bool is_suite(const std::string& id);

struct SuiteOptions {
  std::string suite;
  std::uint64_t seed = 0;
  CheckConfig check;
  std::vector<std::string> shifts = {"-1", "0", "1/2", "2"};
  int workers = 1;
  bool timing = false;  // record wall time per check (breaks byte-identical reports)
};

struct SuiteResult {
  std::string suite;
  std::uint64_t seed = 0;
  std::vector<Report> reports;  // sorted by check id
  long long millis = 0;         // 0 unless timing

  int passed() const;
  int failed() const;
  int inconclusive() const;
  /// 0 all pass, 1 some check failed, 2 some check inconclusive (none failed).
  int exit_code() const;
};

nlohmann::json to_json(const SuiteResult& r, const SuiteOptions& opt);

/// Throws std::invalid_argument for an unknown suite id.
SuiteResult run_suite(const Catalog& cat, const SuiteOptions& opt);

/// Run one fact of a loaded entry (used by tests and by run_suite).
Report run_fact(const Entry& e, const Fact& f, const CheckConfig& cfg, std::uint64_t seed);

/// Seed used for the check with the given id.
std::uint64_t check_seed(std::uint64_t suite_seed, const std::string& check_id);

// -- meshes --

struct MeshStats {
  long vertices = 0;
  long faces = 0;
  long edges = 0;
  long boundary_points = 0;
  long euler() const { return vertices - edges + faces; }
};

/// Masked-grid triangulation of 2-dimensional cells over their free axes,
/// a point cloud for other cells; boundary samples go to "<stem>_boundary.ply".
/// Throws std::invalid_argument for resolution < 8 or an unknown object.
MeshStats export_mesh(const Entry& e, const std::string& object, int resolution, const std::string& out_path,
                      std::uint64_t seed = 0);

}  // namespace cadtopo

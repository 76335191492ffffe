#pragma once

// Numerical / interval oracles for closure membership, boundary points,
// fibers and local boundary connectedness.

#include <string>
#include <utility>
#include <vector>

#include "cadtopo/cell.hpp"

namespace cadtopo {

/// Finest admissible witness level: eps never goes below 2^-30.
inline constexpr int kFinestEpsLevel = 30;

struct OracleConfig {
  int eps_levels = 20;  // witness schedule 2^-1 .. 2^-eps_levels, at most kFinestEpsLevel
  double tau_fib = 1e-6;
  double tau_homeo = 1e-9;
  double component_factor = 3.0;
  double divergence = 1e6;
  double scan_lo = -8.0;
  double scan_hi = 8.0;
  double scan_step = 1.0 / 32.0;
  double domain = 8.0;  // sampling box half width
  int search_candidates = 12;
  int certify_budget = 6000;

  double eps_min() const { return std::ldexp(1.0, -eps_levels); }
};

enum class ClosureKind { Yes, No, Unknown };
const char* to_string(ClosureKind k);

struct ClosureVerdict {
  ClosureKind kind = ClosureKind::Unknown;
  std::vector<std::pair<double, Point>> witnesses;  // (eps, witness); a witness covers every eps above its distance
  double separation = 0;                            // for No: certified empty ball radius
  int failed_level = 0;                             // first eps level without a witness
};

double distance(std::span<const double> a, std::span<const double> b);

/// Points of the cell within distance r of q, all with membership In. With
/// slack > 0, section points within slack of the cell are admitted as well.
std::vector<Point> sample_near(const Cell& c, std::span<const double> q, double r, Rng& rng, int n,
                               std::span<const Point> hints = {}, double slack = 0);

/// Interval certificate that the closed ball B(p, rho) misses the cell.
bool certify_ball_empty(const Cell& c, std::span<const double> p, double rho, int budget);

ClosureVerdict closure_contains(const Cell& c, std::span<const double> p, const OracleConfig& cfg, Rng& rng,
                                bool refine_separation = false);

/// Candidate boundary points (not yet validated). Cells in hint_cells that
/// share an ambient dimension with a base in the stack contribute points
/// where the base boundary is approached.
std::vector<Point> boundary_candidates(const Cell& c, int n, const OracleConfig& cfg, Rng& rng,
                                       std::span<const CellPtr> hint_cells = {});

/// Validated boundary points: closure yes and membership out.
std::vector<Point> boundary_sample(const Cell& c, int n, const OracleConfig& cfg, Rng& rng,
                                   std::span<const CellPtr> hint_cells = {});

struct FiberSegment {
  double lo = 0;
  double hi = 0;
  bool unbounded_below = false;
  bool unbounded_above = false;
};

struct FiberDescription {
  Point base;
  std::vector<FiberSegment> segments;
  std::vector<double> isolated;
  int probes = 0;
  int unknown = 0;
};

/// Fiber of the closure of c over x; throws std::invalid_argument when x is
/// not (verifiably) in the closure of the base.
FiberDescription fiber(const Cell& c, std::span<const double> x, const OracleConfig& cfg, Rng& rng);

struct LbcResult {
  bool fails = false;
  std::vector<double> eps;
  std::vector<int> components;  // components holding at least 5% of the samples, per eps
  std::vector<int> samples;
  std::vector<std::pair<Point, Point>> witness_pairs;  // one point from each of the two largest components
};

/// Throws std::invalid_argument when p is not a boundary point.
LbcResult locally_boundary_connected_at(const Cell& c, std::span<const double> p, const OracleConfig& cfg, Rng& rng,
                                        int samples_per_eps = 300);

}  // namespace cadtopo

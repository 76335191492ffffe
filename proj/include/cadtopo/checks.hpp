#pragma once

// Sampled checkers built on the oracles. Each returns a Report; pass means
// no violation and an inconclusive fraction below the cap.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "cadtopo/oracles.hpp"

namespace cadtopo {

enum class Verdict { Pass, Fail, Inconclusive };
const char* to_string(Verdict v);

struct Violation {
  Point point;
  std::string reason;
};

struct Report {
  std::string suite;
  std::string check;
  std::string anchor;
  std::string kind;
  std::string expect = "pass";  // "pass" or "fail"
  std::uint64_t seed = 0;
  long samples = 0;
  long inconclusive = 0;
  long violation_count = 0;
  std::vector<Violation> violations;  // first few, sorted
  Verdict verdict = Verdict::Inconclusive;
  long long millis = 0;
  nlohmann::json details = nlohmann::json::object();

  void violate(Point p, std::string reason);
  /// Sort the kept violations and compute the verdict.
  void finish(double inconclusive_cap);
  double inconclusive_fraction() const {
    return samples > 0 ? static_cast<double>(inconclusive) / static_cast<double>(samples) : 0.0;
  }
  /// Verdict agrees with the expectation recorded in the catalog.
  bool as_expected() const;
};

nlohmann::json to_json(const Report& r);

struct CheckConfig {
  OracleConfig oracle;
  int samples = 10000;
  double inconclusive_cap = 0.02;
  int boundary_samples = 400;  // validated boundary points per cell where needed
};

/// Vector-valued map given componentwise.
struct VectorMap {
  std::vector<Expr> components;
  int arity = 0;
  std::optional<Point> apply(std::span<const double> p) const;
};

struct ProbeExpectation {
  Point point;
  std::vector<ClosureKind> expected;  // one per target cell
  double min_separation = 0;          // for expected No verdicts
};

// -- closure finiteness / well-borderedness --

/// probe_cells: cells whose samples feed side (b) (those of c's ambient
/// dimension) and whose lower-dimensional members guide boundary sampling.

Report check_closure_decomposition(const CellPtr& c, const std::vector<CellPtr>& parts,
                                   const std::vector<CellPtr>& probe_cells, const CheckConfig& cfg, Rng& rng);

/// Positive claim: the boundary of c is the union of the closures of `claimed`.
Report check_wb_claim(const CellPtr& c, const std::vector<CellPtr>& claimed, const std::vector<CellPtr>& hints,
                      const CheckConfig& cfg, Rng& rng);

/// Violation claim: the boundary of c equals the closure of `lower` (cells of
/// dimension <= d-2) and no cell of dimension d-1 in `level_cells` meets it.
Report check_wb_violation(const CellPtr& c, const std::vector<CellPtr>& lower, const std::vector<CellPtr>& level_cells,
                          const CheckConfig& cfg, Rng& rng);

/// Properties (i) and (ii) of the family of pairs (f, r): `section` is C311 ⊙ {f}.
Report check_w_membership(const CellPtr& section, const Expr& r, const std::vector<CellPtr>& hints,
                          const CheckConfig& cfg, Rng& rng);

// -- sandwiches, fibers --

/// A = base ⊙ (f1, f2), B = base ⊙ {f2}, C = base ⊙ (f2, f3). Probes carry
/// expected verdicts against (A, B, C).
Report check_sandwich(const CellPtr& a, const CellPtr& b, const CellPtr& c, const std::vector<ProbeExpectation>& probes,
                      const std::vector<CellPtr>& hints, const CheckConfig& cfg, Rng& rng);

struct FiberExpectation {
  std::vector<double> isolated;
  std::vector<FiberSegment> segments;
};

Report check_fiber(const CellPtr& c, const Point& x, const FiberExpectation& expected, const CheckConfig& cfg,
                   Rng& rng);

/// Fiber of X-side cell over x against the Y-side cell over fwd(x).
Report check_fiber_transfer(const CellPtr& x_cell, const CellPtr& y_cell, const VectorMap& fwd, const Point& x,
                            const CheckConfig& cfg, Rng& rng);

// -- maps --

struct PointCheck {
  std::string map;  // "fwd" or "inv"
  Point at;
  Point expected;
};

Report check_homeo_pair(const VectorMap& fwd, const VectorMap& inv, const CellPtr& x, const CellPtr& y,
                        const std::vector<CellPtr>& x_hints, const std::vector<CellPtr>& y_hints,
                        const std::vector<PointCheck>& point_checks, const CheckConfig& cfg, Rng& rng);

/// F has arity n+1 (point, t). `closure` is the declared closure predicate
/// (tolerant comparisons), `target` the predicate of the retract, `target_points`
/// exact points of the retract.
Report check_retraction(const CellPtr& c, const VectorMap& F, const Guard& closure, const Guard& target,
                        const std::vector<Point>& target_points, const CheckConfig& cfg, Rng& rng);

// -- identities and probes --

/// |e| <= tol on samples of c (and on validated boundary samples when requested).
Report check_vanishes(const CellPtr& c, const Expr& e, double tol, bool include_boundary,
                      const std::vector<CellPtr>& hints, const CheckConfig& cfg, Rng& rng);

/// Relative residual of sum(terms)(x, h(x)) on samples of base, scaled by sum |terms|.
Report check_root_residual(const CellPtr& base, const Expr& h, const std::vector<Expr>& terms, double tol, int samples,
                           const CheckConfig& cfg, Rng& rng);

struct ClosureProbe {
  Point point;
  ClosureKind closure;
  std::optional<Membership> membership;
};

Report check_closure_probes(const CellPtr& c, const std::vector<ClosureProbe>& probes, const CheckConfig& cfg,
                            Rng& rng);

/// expect_fails: the oracle must report a persistent split into >= 2 components.
Report check_lbc(const CellPtr& c, const Point& p, bool expect_fails, const CheckConfig& cfg, Rng& rng);

}  // namespace cadtopo

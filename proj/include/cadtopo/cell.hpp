#pragma once

// CAD cells as explicit stacks of sections and sectors, plus open regions of
// the plane given by a guard (used for bases that are not CAD cells, such as
// the slit disk).

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cadtopo/expr.hpp"
#include "cadtopo/rng.hpp"

namespace cadtopo {

using Point = std::vector<double>;
using Box = std::vector<Interval>;

enum class CellKind { Point, Interval, Region, Section, Sector };
enum class Membership { In, Out, Uncertain };

const char* to_string(Membership m);
const char* to_string(CellKind k);

/// Parametrised piece of a region boundary: t -> components(t), t in [t_lo, t_hi].
struct Curve {
  std::vector<Expr> components;  // arity 1 each
  double t_lo = 0;
  double t_hi = 1;
};

struct Cell;
using CellPtr = std::shared_ptr<const Cell>;

struct Cell {
  CellKind kind = CellKind::Point;
  int ambient = 1;
  std::string label;
  std::vector<int> index;  // empty when the cell is not attached to a CAD

  CellPtr base;                 // Section / Sector
  Expr value;                   // Point: arity 0; Section: bound over the base
  std::optional<Expr> lo, hi;   // Interval / Sector; nullopt means -inf / +inf
  Guard region;                 // Region: the open set {region holds}
  Box region_box;               // Region: bounding box
  std::vector<Curve> boundary;  // Region: boundary pieces

  // enclosures of arity-0 expressions, filled by the constructors
  Interval value_enc, lo_enc, hi_enc;
};

// -- construction --
CellPtr make_point(const Expr& value, std::string label = {});
CellPtr make_interval(std::optional<Expr> lo, std::optional<Expr> hi, std::string label = {});
CellPtr make_region(int ambient, const Guard& g, Box box, std::vector<Curve> boundary, std::string label = {});
CellPtr make_section(CellPtr base, const Expr& bound, std::string label = {});
CellPtr make_sector(CellPtr base, std::optional<Expr> lo, std::optional<Expr> hi, std::string label = {});
CellPtr with_index(const CellPtr& c, std::vector<int> index, std::string label);

/// Dimension from the cell structure.
int dimension(const Cell& c);
/// Number of odd entries of an index word.
int dimension_of_index(std::span<const int> index);
std::string index_string(std::span<const int> index);

/// Base cell (projection onto the first ambient-1 coordinates).
CellPtr project(const CellPtr& c);

/// Three-valued membership; values within a relative 1e-12 of a bound count as equal.
Membership contains(const Cell& c, std::span<const double> p);

/// Coordinates that can vary inside the cell (the others are bound values).
std::vector<int> free_axes(const Cell& c);

/// Recompute the bound coordinates of p from its free coordinates; false when
/// a bound is undefined at the resulting prefix.
bool lift(const Cell& c, std::span<double> p);

/// True only if the box provably misses the cell.
bool certify_out(const Cell& c, std::span<const Interval> box);

/// True only if every point whose free coordinates lie in the box, lifted,
/// belongs to the cell. On success the bound coordinates of box are replaced
/// by enclosures of the lifted values.
bool certify_in(const Cell& c, std::span<Interval> box);

/// Value of an expression at a prefix of p.
std::optional<double> eval_prefix(const Expr& e, std::span<const double> p);

/// Random point of the cell inside the domain box (nullopt after the retry budget).
std::optional<Point> sample(const Cell& c, Rng& rng, std::span<const Interval> domain);

Box default_domain(int ambient, double half_width = 8.0);

// -- Definition-style construction of CADs --

/// Alternating intervals and points split at the given increasing values.
std::vector<CellPtr> build_level1(const std::vector<Expr>& points);

/// Sectors and sections over base split by increasing bounds. Ordering is
/// checked at sampled base points; throws std::invalid_argument on a violation.
std::vector<CellPtr> stack(const CellPtr& base, const std::vector<Expr>& bounds, Rng* rng = nullptr,
                           int check_samples = 64);

class Cad {
 public:
  explicit Cad(int n = 0) : levels_(static_cast<std::size_t>(n)) {}

  int dimension() const { return static_cast<int>(levels_.size()); }
  const std::vector<CellPtr>& level(int k) const { return levels_.at(static_cast<std::size_t>(k - 1)); }
  void add(int k, CellPtr c) { levels_.at(static_cast<std::size_t>(k - 1)).push_back(std::move(c)); }
  void resize(int n) { levels_.resize(static_cast<std::size_t>(n)); }

  CellPtr find(std::span<const int> index) const;
  CellPtr find(const std::string& index_word) const;

 private:
  std::vector<std::vector<CellPtr>> levels_;
};

/// Parse "3112" or "3,1,1,2" into an index word.
std::vector<int> parse_index(const std::string& word);

}  // namespace cadtopo

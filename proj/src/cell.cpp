#include "cadtopo/cell.hpp"

#include <sstream>
#include <stdexcept>

namespace cadtopo {

const char* to_string(Membership m) {
  switch (m) {
    case Membership::In: return "in";
    case Membership::Out: return "out";
    case Membership::Uncertain: return "uncertain";
  }
  return "?";
}

const char* to_string(CellKind k) {
  switch (k) {
    case CellKind::Point: return "point";
    case CellKind::Interval: return "interval";
    case CellKind::Region: return "region";
    case CellKind::Section: return "section";
    case CellKind::Sector: return "sector";
  }
  return "?";
}

namespace {

Interval constant_enclosure(const Expr& e, const char* what) {
  if (e.arity() != 0) throw ArityError(std::string(what) + " must be a constant expression");
  auto v = eval_interval(e, {});
  if (!v) throw std::invalid_argument(std::string(what) + " is undefined");
  return *v;
}

void check_bound_arity(const Expr& e, int expected) {
  if (e.arity() != expected)
    throw ArityError("bound arity " + std::to_string(e.arity()) + " does not match base ambient dimension " +
                     std::to_string(expected));
}

enum class Cmp { Below, Equal, Above, Unknown };

// Relative to the magnitudes involved so that points close to a zero bound
// (x1 -> 0+ in the W-family) stay distinguishable from it.
double width_floor(double v, const Interval& h) {
  double m = std::max(std::fabs(v), std::max(std::isfinite(h.lo) ? std::fabs(h.lo) : 0.0,
                                             std::isfinite(h.hi) ? std::fabs(h.hi) : 0.0));
  return 1e-12 * m;
}

Cmp compare_enclosure(double v, const Interval& h) {
  double fl = width_floor(v, h);
  if (v < h.lo - fl) return Cmp::Below;
  if (v > h.hi + fl) return Cmp::Above;
  if (h.lo >= v - fl && h.hi <= v + fl) return Cmp::Equal;
  return Cmp::Unknown;
}

// Position of v relative to e(prefix).
Cmp compare_value(double v, const Expr& e, std::span<const double> p) {
  auto prefix = p.first(static_cast<std::size_t>(e.arity()));
  if (auto d = eval_point(e, prefix); d && std::isfinite(*d)) {
    double tol = 1e-6 * std::max(1.0, std::fabs(*d));
    if (v < *d - tol) return Cmp::Below;
    if (v > *d + tol) return Cmp::Above;
  }
  Enclosure enc = eval_enclosure_at(e, prefix);
  if (enc.empty()) return Cmp::Unknown;
  return compare_enclosure(v, enc.hull());
}

Membership meet(Membership a, Membership b) {
  if (a == Membership::Out || b == Membership::Out) return Membership::Out;
  if (a == Membership::Uncertain || b == Membership::Uncertain) return Membership::Uncertain;
  return Membership::In;
}

// Whether v lies strictly above a lower bound / strictly below an upper bound.
Membership above(Cmp c) {
  return c == Cmp::Above ? Membership::In : c == Cmp::Unknown ? Membership::Uncertain : Membership::Out;
}
Membership below(Cmp c) {
  return c == Cmp::Below ? Membership::In : c == Cmp::Unknown ? Membership::Uncertain : Membership::Out;
}

}  // namespace

CellPtr make_point(const Expr& value, std::string label) {
  auto c = std::make_shared<Cell>();
  c->kind = CellKind::Point;
  c->ambient = 1;
  c->value = value;
  c->value_enc = constant_enclosure(value, "point value");
  c->label = std::move(label);
  return c;
}

CellPtr make_interval(std::optional<Expr> lo, std::optional<Expr> hi, std::string label) {
  auto c = std::make_shared<Cell>();
  c->kind = CellKind::Interval;
  c->ambient = 1;
  c->lo_enc = lo ? constant_enclosure(*lo, "interval bound") : Interval::point(-kInf);
  c->hi_enc = hi ? constant_enclosure(*hi, "interval bound") : Interval::point(kInf);
  if (!(c->lo_enc.hi < c->hi_enc.lo)) throw std::invalid_argument("interval bounds are not increasing");
  c->lo = std::move(lo);
  c->hi = std::move(hi);
  c->label = std::move(label);
  return c;
}

CellPtr make_region(int ambient, const Guard& g, Box box, std::vector<Curve> boundary, std::string label) {
  if (g.arity() != ambient) throw ArityError("region guard arity does not match ambient dimension");
  if (static_cast<int>(box.size()) != ambient) throw ArityError("region box dimension mismatch");
  for (const auto& cv : boundary) {
    if (static_cast<int>(cv.components.size()) != ambient) throw ArityError("boundary curve dimension mismatch");
    for (const auto& e : cv.components)
      if (e.arity() != 1) throw ArityError("boundary curve components take one parameter");
  }
  auto c = std::make_shared<Cell>();
  c->kind = CellKind::Region;
  c->ambient = ambient;
  c->region = g;
  c->region_box = std::move(box);
  c->boundary = std::move(boundary);
  c->label = std::move(label);
  return c;
}

CellPtr make_section(CellPtr base, const Expr& bound, std::string label) {
  check_bound_arity(bound, base->ambient);
  auto c = std::make_shared<Cell>();
  c->kind = CellKind::Section;
  c->ambient = base->ambient + 1;
  c->base = std::move(base);
  c->value = bound;
  c->label = std::move(label);
  return c;
}

CellPtr make_sector(CellPtr base, std::optional<Expr> lo, std::optional<Expr> hi, std::string label) {
  if (lo) check_bound_arity(*lo, base->ambient);
  if (hi) check_bound_arity(*hi, base->ambient);
  auto c = std::make_shared<Cell>();
  c->kind = CellKind::Sector;
  c->ambient = base->ambient + 1;
  c->base = std::move(base);
  c->lo = std::move(lo);
  c->hi = std::move(hi);
  c->label = std::move(label);
  return c;
}

CellPtr with_index(const CellPtr& c, std::vector<int> index, std::string label) {
  auto copy = std::make_shared<Cell>(*c);
  copy->index = std::move(index);
  copy->label = std::move(label);
  return copy;
}

int dimension(const Cell& c) {
  switch (c.kind) {
    case CellKind::Point: return 0;
    case CellKind::Interval: return 1;
    case CellKind::Region: return c.ambient;
    case CellKind::Section: return dimension(*c.base);
    case CellKind::Sector: return dimension(*c.base) + 1;
  }
  return 0;
}

int dimension_of_index(std::span<const int> index) {
  int d = 0;
  for (int i : index) d += (i % 2 != 0);
  return d;
}

std::string index_string(std::span<const int> index) {
  bool digits = std::all_of(index.begin(), index.end(), [](int i) { return i >= 1 && i <= 9; });
  std::string s;
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (!digits && k) s += ',';
    s += std::to_string(index[k]);
  }
  return s;
}

std::vector<int> parse_index(const std::string& word) {
  std::vector<int> out;
  if (word.find(',') != std::string::npos) {
    std::stringstream ss(word);
    std::string part;
    while (std::getline(ss, part, ',')) out.push_back(std::stoi(part));
  } else {
    for (char ch : word) {
      if (ch < '1' || ch > '9') throw std::invalid_argument("bad index word '" + word + "'");
      out.push_back(ch - '0');
    }
  }
  for (int i : out)
    if (i < 1) throw std::invalid_argument("index entries must be positive");
  return out;
}

CellPtr project(const CellPtr& c) {
  if (c->kind == CellKind::Section || c->kind == CellKind::Sector) return c->base;
  throw std::invalid_argument("cell has no base");
}

std::optional<double> eval_prefix(const Expr& e, std::span<const double> p) {
  return eval_point(e, p.first(static_cast<std::size_t>(e.arity())));
}

Membership contains(const Cell& c, std::span<const double> p) {
  if (static_cast<int>(p.size()) != c.ambient)
    throw ArityError("point has " + std::to_string(p.size()) + " coordinates, cell ambient dimension is " +
                     std::to_string(c.ambient));
  switch (c.kind) {
    case CellKind::Point: {
      Cmp r = compare_enclosure(p[0], c.value_enc);
      return r == Cmp::Equal ? Membership::In : r == Cmp::Unknown ? Membership::Uncertain : Membership::Out;
    }
    case CellKind::Interval:
      return meet(above(compare_enclosure(p[0], c.lo_enc)), below(compare_enclosure(p[0], c.hi_enc)));
    case CellKind::Region: {
      Box box;
      box.reserve(p.size());
      for (double v : p) box.push_back(Interval::point(v));
      Tri t = eval_guard(c.region, box);
      return t == Tri::True ? Membership::In : t == Tri::False ? Membership::Out : Membership::Uncertain;
    }
    case CellKind::Section: {
      auto prefix = p.first(p.size() - 1);
      Membership mb = contains(*c.base, prefix);
      if (mb == Membership::Out) return mb;
      Cmp r = compare_value(p.back(), c.value, prefix);
      if (r == Cmp::Equal) return mb;
      return r == Cmp::Unknown ? Membership::Uncertain : Membership::Out;
    }
    case CellKind::Sector: {
      auto prefix = p.first(p.size() - 1);
      Membership mb = contains(*c.base, prefix);
      if (mb == Membership::Out) return mb;
      if (c.lo) mb = meet(mb, above(compare_value(p.back(), *c.lo, prefix)));
      if (mb == Membership::Out) return mb;
      if (c.hi) mb = meet(mb, below(compare_value(p.back(), *c.hi, prefix)));
      return mb;
    }
  }
  return Membership::Uncertain;
}

std::vector<int> free_axes(const Cell& c) {
  switch (c.kind) {
    case CellKind::Point: return {};
    case CellKind::Interval: return {0};
    case CellKind::Region: {
      std::vector<int> v(static_cast<std::size_t>(c.ambient));
      for (int i = 0; i < c.ambient; ++i) v[static_cast<std::size_t>(i)] = i;
      return v;
    }
    case CellKind::Section: return free_axes(*c.base);
    case CellKind::Sector: {
      auto v = free_axes(*c.base);
      v.push_back(c.ambient - 1);
      return v;
    }
  }
  return {};
}

bool lift(const Cell& c, std::span<double> p) {
  switch (c.kind) {
    case CellKind::Point: {
      auto v = eval_point(c.value, {});
      if (!v) return false;
      p[0] = *v;
      return true;
    }
    case CellKind::Interval:
    case CellKind::Region: return true;
    case CellKind::Section: {
      if (!lift(*c.base, p.first(p.size() - 1))) return false;
      auto v = eval_prefix(c.value, p);
      if (!v || !std::isfinite(*v)) return false;
      p.back() = *v;
      return true;
    }
    case CellKind::Sector: return lift(*c.base, p.first(p.size() - 1));
  }
  return false;
}

bool certify_out(const Cell& c, std::span<const Interval> box) {
  switch (c.kind) {
    case CellKind::Point: return !overlaps(box[0], c.value_enc);
    case CellKind::Interval: return box[0].hi <= c.lo_enc.lo || box[0].lo >= c.hi_enc.hi;
    case CellKind::Region: return eval_guard(c.region, box) == Tri::False;
    case CellKind::Section: {
      auto prefix = box.first(box.size() - 1);
      if (certify_out(*c.base, prefix)) return true;
      Enclosure enc = eval_enclosure(c.value, prefix.first(static_cast<std::size_t>(c.value.arity())));
      return enc.empty() || !enc.intersects(box.back());
    }
    case CellKind::Sector: {
      auto prefix = box.first(box.size() - 1);
      if (certify_out(*c.base, prefix)) return true;
      if (c.lo) {
        Enclosure enc = eval_enclosure(*c.lo, prefix.first(static_cast<std::size_t>(c.lo->arity())));
        if (enc.empty() || box.back().hi <= enc.min()) return true;
      }
      if (c.hi) {
        Enclosure enc = eval_enclosure(*c.hi, prefix.first(static_cast<std::size_t>(c.hi->arity())));
        if (enc.empty() || box.back().lo >= enc.max()) return true;
      }
      return false;
    }
  }
  return false;
}

bool certify_in(const Cell& c, std::span<Interval> box) {
  switch (c.kind) {
    case CellKind::Point: box[0] = c.value_enc; return true;
    case CellKind::Interval: return box[0].lo > c.lo_enc.hi && box[0].hi < c.hi_enc.lo;
    case CellKind::Region: return eval_guard(c.region, box) == Tri::True;
    case CellKind::Section: {
      auto prefix = box.first(box.size() - 1);
      if (!certify_in(*c.base, prefix)) return false;
      Enclosure enc = eval_enclosure(c.value, prefix.first(static_cast<std::size_t>(c.value.arity())));
      if (enc.empty() || enc.partial()) return false;
      Interval h = enc.hull();
      if (!std::isfinite(h.lo) || !std::isfinite(h.hi)) return false;
      box.back() = h;
      return true;
    }
    case CellKind::Sector: {
      auto prefix = box.first(box.size() - 1);
      if (!certify_in(*c.base, prefix)) return false;
      if (c.lo) {
        Enclosure enc = eval_enclosure(*c.lo, prefix.first(static_cast<std::size_t>(c.lo->arity())));
        if (enc.empty() || enc.partial() || !(box.back().lo > enc.max())) return false;
      }
      if (c.hi) {
        Enclosure enc = eval_enclosure(*c.hi, prefix.first(static_cast<std::size_t>(c.hi->arity())));
        if (enc.empty() || enc.partial() || !(box.back().hi < enc.min())) return false;
      }
      return true;
    }
  }
  return false;
}

Box default_domain(int ambient, double half_width) {
  return Box(static_cast<std::size_t>(ambient), Interval{-half_width, half_width});
}

namespace {

// One attempt; the caller retries.
bool sample_once(const Cell& c, Rng& rng, std::span<const Interval> domain, std::span<double> out) {
  switch (c.kind) {
    case CellKind::Point: {
      auto v = eval_point(c.value, {});
      if (!v) return false;
      out[0] = *v;
      return true;
    }
    case CellKind::Interval: {
      double lo = std::max(c.lo ? c.lo_enc.hi : -kInf, domain[0].lo);
      double hi = std::min(c.hi ? c.hi_enc.lo : kInf, domain[0].hi);
      if (!(lo < hi)) return false;
      out[0] = rng.uniform(lo, hi);
      return out[0] > lo;
    }
    case CellKind::Region: {
      for (std::size_t i = 0; i < out.size(); ++i) {
        double lo = std::max(c.region_box[i].lo, domain[i].lo);
        double hi = std::min(c.region_box[i].hi, domain[i].hi);
        if (!(lo < hi)) return false;
        out[i] = rng.uniform(lo, hi);
      }
      return true;
    }
    case CellKind::Section: {
      if (!sample_once(*c.base, rng, domain.first(domain.size() - 1), out.first(out.size() - 1))) return false;
      auto v = eval_prefix(c.value, out);
      if (!v || !domain.back().contains(*v)) return false;
      out.back() = *v;
      return true;
    }
    case CellKind::Sector: {
      if (!sample_once(*c.base, rng, domain.first(domain.size() - 1), out.first(out.size() - 1))) return false;
      double lo = domain.back().lo;
      double hi = domain.back().hi;
      if (c.lo) {
        auto v = eval_prefix(*c.lo, out);
        if (!v) return false;
        lo = std::max(lo, *v);
      }
      if (c.hi) {
        auto v = eval_prefix(*c.hi, out);
        if (!v) return false;
        hi = std::min(hi, *v);
      }
      if (!(lo < hi)) return false;
      out.back() = rng.uniform(lo, hi);
      return true;
    }
  }
  return false;
}

}  // namespace

std::optional<Point> sample(const Cell& c, Rng& rng, std::span<const Interval> domain) {
  Point p(static_cast<std::size_t>(c.ambient));
  for (int attempt = 0; attempt < 400; ++attempt) {
    if (sample_once(c, rng, domain, p) && contains(c, p) == Membership::In) return p;
  }
  return std::nullopt;
}

std::vector<CellPtr> build_level1(const std::vector<Expr>& points) {
  std::vector<Interval> enc;
  for (const auto& e : points) enc.push_back(constant_enclosure(e, "level-1 split point"));
  for (std::size_t i = 1; i < enc.size(); ++i)
    if (!(enc[i - 1].hi < enc[i].lo)) throw std::invalid_argument("level-1 split points are not increasing");
  std::vector<CellPtr> out;
  std::optional<Expr> prev;
  int idx = 1;
  auto add = [&](CellPtr c) {
    std::vector<int> index{idx};
    out.push_back(with_index(c, index, "C" + index_string(index)));
    ++idx;
  };
  for (const auto& e : points) {
    add(make_interval(prev, e));
    add(make_point(e));
    prev = e;
  }
  add(make_interval(prev, std::nullopt));
  return out;
}

std::vector<CellPtr> stack(const CellPtr& base, const std::vector<Expr>& bounds, Rng* rng, int check_samples) {
  for (const auto& b : bounds) check_bound_arity(b, base->ambient);
  if (bounds.size() > 1) {
    Rng local(0x5EED);
    Rng& r = rng ? *rng : local;
    Box dom = default_domain(base->ambient);
    for (int k = 0; k < check_samples; ++k) {
      auto p = sample(*base, r, dom);
      if (!p) break;
      double prev = -kInf;
      for (const auto& b : bounds) {
        auto v = eval_point(b, *p);
        if (!v) throw std::invalid_argument("stack bound undefined at a base point");
        if (!(*v > prev)) throw std::invalid_argument("stack bounds are not increasing on the base");
        prev = *v;
      }
    }
  }
  std::vector<CellPtr> out;
  std::optional<Expr> prev;
  int idx = 1;
  auto add = [&](CellPtr c) {
    std::vector<int> index = base->index;
    index.push_back(idx);
    out.push_back(with_index(c, index, "C" + index_string(index)));
    ++idx;
  };
  for (const auto& b : bounds) {
    add(make_sector(base, prev, b));
    add(make_section(base, b));
    prev = b;
  }
  add(make_sector(base, prev, std::nullopt));
  return out;
}

CellPtr Cad::find(std::span<const int> index) const {
  if (index.empty() || static_cast<int>(index.size()) > dimension()) return nullptr;
  for (const auto& c : level(static_cast<int>(index.size())))
    if (std::equal(c->index.begin(), c->index.end(), index.begin(), index.end())) return c;
  return nullptr;
}

CellPtr Cad::find(const std::string& index_word) const { return find(parse_index(index_word)); }

}  // namespace cadtopo

#include "cadtopo/catalog.hpp"

#include <cctype>
#include <fstream>
#include <set>

#ifndef CADTOPO_DEFAULT_DATA_DIR
#define CADTOPO_DEFAULT_DATA_DIR "data/catalog"
#endif

namespace cadtopo {

using nlohmann::json;

namespace {

bool name_char(char ch) { return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_'; }

std::size_t name_end(const std::string& s, std::size_t i) {
  std::size_t j = i;
  while (j < s.size() && name_char(s[j])) ++j;
  return j;
}

void merge_object(json& into, const json& from) {
  for (auto it = from.begin(); it != from.end(); ++it)
    if (!into.contains(it.key())) into[it.key()] = it.value();
}

std::string text_of(const json& j, const std::string& what) {
  if (!j.is_string()) throw CatalogError(what + ": expected a string");
  return j.get<std::string>();
}

// Resolves definitions on demand so that JSON key order does not matter.
class Builder {
 public:
  Builder(Entry& e, json defs) : e_(e), defs_(std::move(defs)) {}

  void build_all() {
    for (auto it = defs_["exprs"].begin(); it != defs_["exprs"].end(); ++it) expr(it.key());
    for (auto it = defs_["maps"].begin(); it != defs_["maps"].end(); ++it) map(it.key());
    for (auto it = defs_["cads"].begin(); it != defs_["cads"].end(); ++it) cad(it.key());
    for (auto it = defs_["cells"].begin(); it != defs_["cells"].end(); ++it) cell(it.key());
  }

 private:
  Entry& e_;
  json defs_;
  std::set<std::string> busy_;

  struct Guarded {
    Builder& b;
    std::string key;
    Guarded(Builder& bb, std::string k) : b(bb), key(std::move(k)) {
      if (!b.busy_.insert(key).second) throw CatalogError("cyclic definition of " + key);
    }
    ~Guarded() { b.busy_.erase(key); }
  };

  // Make every @name in text available before it is expanded.
  std::string expand(const std::string& text) {
    for (std::size_t i = 0; i < text.size(); ++i) {
      if (text[i] != '@') continue;
      std::size_t j = name_end(text, i + 1);
      expr(text.substr(i + 1, j - i - 1));
    }
    return expand_references(text, e_.params, e_.exprs);
  }

  Expr parse(const json& j, int arity, const std::string& what) {
    try {
      return parse_expr(expand(text_of(j, what)), arity);
    } catch (const CatalogError&) {
      throw;
    } catch (const std::exception& ex) {
      throw CatalogError(what + ": " + ex.what());
    }
  }

  std::optional<Expr> parse_bound(const json& j, int arity, const std::string& what) {
    if (j.is_null()) return std::nullopt;
    return parse(j, arity, what);
  }

  const Expr& expr(const std::string& name) {
    if (auto it = e_.exprs.find(name); it != e_.exprs.end()) return it->second;
    if (!defs_["exprs"].contains(name)) throw CatalogError("unknown expression @" + name);
    Guarded g(*this, "@" + name);
    const json& d = defs_["exprs"][name];
    Expr out;
    if (d.contains("compose")) {
      const Expr& inner = expr(text_of(d["compose"], "compose"));
      const VectorMap& m = map(text_of(d["with"], "with"));
      if (static_cast<int>(m.components.size()) != inner.arity())
        throw CatalogError("expression " + name + ": map output does not match the arity of " +
                           d["compose"].get<std::string>());
      out = substitute(inner, m.components).with_arity(m.arity);
    } else {
      out = parse(d.at("src"), d.at("arity").get<int>(), "expression " + name);
    }
    return e_.exprs.emplace(name, out).first->second;
  }

  const VectorMap& map(const std::string& name) {
    if (auto it = e_.maps.find(name); it != e_.maps.end()) return it->second;
    if (!defs_["maps"].contains(name)) throw CatalogError("unknown map " + name);
    Guarded g(*this, "map " + name);
    const json& d = defs_["maps"][name];
    VectorMap m;
    m.arity = d.at("arity").get<int>();
    for (const auto& c : d.at("components")) m.components.push_back(parse(c, m.arity, "map " + name));
    return e_.maps.emplace(name, std::move(m)).first->second;
  }

  const Cad& cad(const std::string& name) {
    if (auto it = e_.cads.find(name); it != e_.cads.end()) return it->second;
    if (!defs_["cads"].contains(name)) throw CatalogError("unknown CAD " + name);
    Guarded g(*this, "cad " + name);
    const json& d = defs_["cads"][name];
    Cad out;
    if (d.contains("extends")) out = cad(text_of(d["extends"], "extends"));
    Rng rng(mix_seed(hash_string(e_.id), hash_string(name)));
    for (const auto& lvl : d.at("levels")) {
      int k = out.dimension() + 1;
      out.resize(k);
      if (lvl.contains("split")) {
        if (k != 1) throw CatalogError("CAD " + name + ": split is only allowed at level 1");
        std::vector<Expr> pts;
        for (const auto& v : lvl["split"]) pts.push_back(parse(v, 0, "CAD " + name));
        for (auto& c : build_level1(pts)) out.add(1, c);
        continue;
      }
      if (k == 1) throw CatalogError("CAD " + name + ": level 1 needs a split");
      const json& stacks = lvl.at("stacks");
      std::size_t used = 0;
      for (const auto& base : out.level(k - 1)) {
        std::string key = index_string(base->index);
        if (!stacks.contains(key)) throw CatalogError("CAD " + name + ": no stack given over C" + key);
        ++used;
        std::vector<Expr> bounds;
        for (const auto& b : stacks[key]) bounds.push_back(parse(b, k - 1, "CAD " + name + " over C" + key));
        try {
          for (auto& c : stack(base, bounds, &rng)) out.add(k, c);
        } catch (const std::invalid_argument& ex) {
          throw CatalogError("CAD " + name + " over C" + key + ": " + ex.what());
        }
      }
      if (used != stacks.size()) throw CatalogError("CAD " + name + ": stack keys name no cell of level " +
                                                    std::to_string(k - 1));
    }
    return e_.cads.emplace(name, std::move(out)).first->second;
  }

  Box box(const json& j) {
    Box b;
    for (const auto& side : j) {
      double lo = e_.constant(text_of(side.at(0), "box"));
      double hi = e_.constant(text_of(side.at(1), "box"));
      b.emplace_back(lo, hi);
    }
    return b;
  }

  CellPtr cell(const std::string& ref) {
    if (auto pos = ref.find(':'); pos != std::string::npos) {
      const Cad& c = cad(ref.substr(0, pos));
      CellPtr out;
      try {
        out = c.find(ref.substr(pos + 1));
      } catch (const std::invalid_argument&) {
      }
      if (!out) throw CatalogError("no cell " + ref);
      return out;
    }
    if (auto it = e_.cells.find(ref); it != e_.cells.end()) return it->second;
    if (!defs_["cells"].contains(ref)) throw CatalogError("unknown cell " + ref);
    Guarded g(*this, "cell " + ref);
    const json& d = defs_["cells"][ref];
    std::string label = d.contains("label") ? d["label"].get<std::string>() : ref;
    std::string what = "cell " + ref;
    CellPtr out;
    if (d.contains("point")) {
      out = make_point(parse(d["point"], 0, what), label);
    } else if (d.contains("interval")) {
      out = make_interval(parse_bound(d["interval"].at(0), 0, what), parse_bound(d["interval"].at(1), 0, what), label);
    } else if (d.contains("region")) {
      const json& r = d["region"];
      Box b = box(r.at("box"));
      int n = static_cast<int>(b.size());
      Guard gd;
      try {
        gd = cadtopo::parse_guard(expand(text_of(r.at("guard"), what)), n);
      } catch (const std::exception& ex) {
        throw CatalogError(what + ": " + ex.what());
      }
      std::vector<Curve> curves;
      for (const auto& cj : r.value("curves", json::array())) {
        Curve cv;
        cv.t_lo = e_.constant(text_of(cj.at("t").at(0), what));
        cv.t_hi = e_.constant(text_of(cj.at("t").at(1), what));
        for (const auto& x : cj.at("x")) cv.components.push_back(parse(x, 1, what));
        if (static_cast<int>(cv.components.size()) != n) throw CatalogError(what + ": curve dimension mismatch");
        curves.push_back(std::move(cv));
      }
      out = make_region(n, gd, std::move(b), std::move(curves), label);
    } else if (d.contains("section")) {
      CellPtr base = cell(text_of(d["section"].at("base"), what));
      out = make_section(base, parse(d["section"].at("bound"), base->ambient, what), label);
    } else if (d.contains("sector")) {
      const json& s = d["sector"];
      CellPtr base = cell(text_of(s.at("base"), what));
      out = make_sector(base, parse_bound(s.at("lo"), base->ambient, what),
                        parse_bound(s.at("hi"), base->ambient, what), label);
    } else {
      throw CatalogError(what + ": unknown cell form");
    }
    return e_.cells.emplace(ref, out).first->second;
  }

};

void collect_includes(const Catalog& cat, const std::string& id, std::vector<std::string>& order,
                      std::set<std::string>& seen) {
  if (!seen.insert(id).second) return;
  const json& j = cat.raw(id);
  for (const auto& inc : j.value("include", json::array())) collect_includes(cat, inc.get<std::string>(), order, seen);
  order.push_back(id);
}

}  // namespace

std::string expand_references(const std::string& text, const std::map<std::string, std::string>& params,
                              const std::map<std::string, Expr>& exprs) {
  std::string out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char ch = text[i];
    if (ch != '$' && ch != '@') {
      out += ch;
      continue;
    }
    std::size_t j = name_end(text, i + 1);
    std::string name = text.substr(i + 1, j - i - 1);
    if (name.empty()) throw CatalogError("empty reference in '" + text + "'");
    if (ch == '$') {
      auto it = params.find(name);
      if (it == params.end()) throw CatalogError("unknown parameter $" + name);
      out += "(" + it->second + ")";
    } else {
      auto it = exprs.find(name);
      if (it == exprs.end()) throw CatalogError("unknown expression @" + name);
      out += "(" + to_string(it->second) + ")";
    }
    i = j - 1;
  }
  return out;
}

std::filesystem::path default_catalog_dir() {
  if (const char* env = std::getenv("CADTOPO_DATA_DIR"); env && *env) return env;
  return CADTOPO_DEFAULT_DATA_DIR;
}

// ---------------------------------------------------------------------------

CellPtr Entry::cell(const std::string& ref) const {
  if (auto pos = ref.find(':'); pos != std::string::npos) {
    const Cad& c = cad(ref.substr(0, pos));
    CellPtr out;
    try {
      out = c.find(ref.substr(pos + 1));
    } catch (const std::invalid_argument&) {
    }
    if (!out) throw CatalogError("entry " + id + ": no cell " + ref);
    return out;
  }
  auto it = cells.find(ref);
  if (it == cells.end()) throw CatalogError("entry " + id + ": unknown cell " + ref);
  return it->second;
}

const Cad& Entry::cad(const std::string& name) const {
  auto it = cads.find(name);
  if (it == cads.end()) throw CatalogError("entry " + id + ": unknown CAD " + name);
  return it->second;
}

const VectorMap& Entry::map(const std::string& name) const {
  auto it = maps.find(name);
  if (it == maps.end()) throw CatalogError("entry " + id + ": unknown map " + name);
  return it->second;
}

const Expr& Entry::expr(const std::string& name) const {
  auto it = exprs.find(name);
  if (it == exprs.end()) throw CatalogError("entry " + id + ": unknown expression " + name);
  return it->second;
}

Expr Entry::parse(const std::string& text, int arity) const {
  return parse_expr(expand_references(text, params, exprs), arity);
}

Guard Entry::parse_guard(const std::string& text, int arity) const {
  return cadtopo::parse_guard(expand_references(text, params, exprs), arity);
}

double Entry::constant(const std::string& text) const {
  auto v = eval_point(parse(text, 0), std::span<const double>{});
  if (!v) throw CatalogError("entry " + id + ": constant '" + text + "' is undefined");
  return *v;
}

Point Entry::point(const json& coords) const {
  Point p;
  for (const auto& c : coords) p.push_back(constant(text_of(c, "coordinate")));
  return p;
}

// ---------------------------------------------------------------------------

Catalog::Catalog(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw CatalogError("catalog directory not found: " + dir.string());
  for (const auto& de : fs::directory_iterator(dir)) {
    if (de.path().extension() != ".json") continue;
    std::ifstream in(de.path());
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& ex) {
      throw CatalogError(de.path().filename().string() + ": " + ex.what());
    }
    if (j.value("schema", "") != kCatalogSchema)
      throw CatalogError(de.path().filename().string() + ": unsupported schema");
    std::string id = j.at("id").get<std::string>();
    if (id + ".json" != de.path().filename().string())
      throw CatalogError(de.path().filename().string() + ": id does not match the file name");
    raw_.emplace(id, std::move(j));
  }
}

std::vector<std::string> Catalog::ids() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : raw_) out.push_back(k);
  return out;
}

const json& Catalog::raw(const std::string& id) const {
  auto it = raw_.find(id);
  if (it == raw_.end()) throw CatalogError("unknown catalog entry " + id);
  return it->second;
}

Entry Catalog::load(const std::string& id, const std::map<std::string, std::string>& overrides) const {
  std::vector<std::string> order;
  std::set<std::string> seen;
  collect_includes(*this, id, order, seen);

  // own definitions take precedence over included ones
  json defs = {{"exprs", json::object()}, {"maps", json::object()}, {"cads", json::object()},
               {"cells", json::object()}, {"params", json::object()}};
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const json& j = raw(*it);
    for (const char* sec : {"exprs", "maps", "cads", "cells", "params"})
      if (j.contains(sec)) merge_object(defs[sec], j[sec]);
  }

  const json& j = raw(id);
  Entry e;
  e.id = id;
  e.anchor = j.value("anchor", "");
  e.shift_param = j.value("shift_param", "");
  for (auto it = defs["params"].begin(); it != defs["params"].end(); ++it)
    e.params[it.key()] = text_of(it.value(), "parameter " + it.key());
  for (const auto& [k, v] : overrides) {
    if (!e.params.count(k)) continue;
    try {
      parse_expr(v, 0);
    } catch (const std::exception& ex) {
      throw CatalogError("parameter " + k + " = '" + v + "': " + ex.what());
    }
    e.params[k] = v;
  }

  Builder b(e, defs);
  b.build_all();

  for (const auto& fj : j.value("facts", json::array())) {
    Fact f;
    f.id = fj.at("id").get<std::string>();
    f.kind = fj.at("kind").get<std::string>();
    const json& s = fj.at("suite");
    if (s.is_string())
      f.suites.push_back(s.get<std::string>());
    else
      for (const auto& x : s) f.suites.push_back(x.get<std::string>());
    f.expect = fj.value("expect", "pass");
    if (f.expect != "pass" && f.expect != "fail") throw CatalogError("fact " + f.id + ": expect must be pass or fail");
    f.anchor = fj.value("anchor", "");
    f.body = fj;
    for (const auto& other : e.facts)
      if (other.id == f.id) throw CatalogError("entry " + id + ": duplicate fact id " + f.id);
    e.facts.push_back(std::move(f));
  }
  return e;
}

}  // namespace cadtopo

#pragma once

// Catalog entries: JSON files bundling parameters, expressions, maps, CADs,
// named cells and the facts to verify about them.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "cadtopo/cell.hpp"
#include "cadtopo/checks.hpp"

namespace cadtopo {

inline constexpr const char* kCatalogSchema = "cadtopo.catalog/1";

class CatalogError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Fact {
  std::string id;
  std::string kind;
  std::vector<std::string> suites;
  std::string expect = "pass";
  std::string anchor;  // empty: use the entry anchor
  nlohmann::json body;
};

/// A fully built entry. Definitions pulled in through "include" are merged;
/// facts are only the entry's own.
class Entry {
 public:
  std::string id;
  std::string anchor;
  std::string shift_param;  // empty when the entry is not parameterised
  std::map<std::string, std::string> params;
  std::map<std::string, Expr> exprs;
  std::map<std::string, VectorMap> maps;
  std::map<std::string, Cad> cads;
  std::map<std::string, CellPtr> cells;
  std::vector<Fact> facts;

  /// "NAME" for a named cell or "CAD:index" for a CAD cell.
  CellPtr cell(const std::string& ref) const;
  const Cad& cad(const std::string& name) const;
  const VectorMap& map(const std::string& name) const;
  const Expr& expr(const std::string& name) const;

  /// Parse DSL text after substituting $param and @expr references.
  Expr parse(const std::string& text, int arity) const;
  Guard parse_guard(const std::string& text, int arity) const;
  /// Arity-0 expression evaluated to a double.
  double constant(const std::string& text) const;
  Point point(const nlohmann::json& coords) const;
};

class Catalog {
 public:
  /// Reads every *.json under dir.
  explicit Catalog(const std::filesystem::path& dir);

  std::vector<std::string> ids() const;
  bool has(const std::string& id) const { return raw_.count(id) > 0; }
  const nlohmann::json& raw(const std::string& id) const;
  /// Build an entry; overrides replace parameter defaults (also in included entries).
  Entry load(const std::string& id, const std::map<std::string, std::string>& overrides = {}) const;

 private:
  std::map<std::string, nlohmann::json> raw_;
};

/// Replace $name by the parameter text and @name by the printed expression.
std::string expand_references(const std::string& text, const std::map<std::string, std::string>& params,
                              const std::map<std::string, Expr>& exprs);

/// Data directory: $CADTOPO_DATA_DIR if set, else the compiled-in default.
std::filesystem::path default_catalog_dir();

}  // namespace cadtopo

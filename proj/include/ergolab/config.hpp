// JSON experiment configs: system and observable serialization, per-experiment
// parameter validation, and the config hash.
#pragma once

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "systems.hpp"

namespace ergolab {

using json = nlohmann::json;

namespace detail {

inline const json& field(const json& j, const std::string& key, const std::string& where) {
  require(j.is_object(), where + " must be a JSON object");
  auto it = j.find(key);
  require(it != j.end(), where + ": missing '" + key + "'");
  return *it;
}

inline double asNumber(const json& j, const std::string& what) {
  require(j.is_number(), what + " must be a number");
  return j.get<double>();
}

inline std::int64_t asInteger(const json& j, const std::string& what) {
  require(j.is_number_integer() || (j.is_number() && isIntegral(j.get<double>())), what + " must be an integer");
  return j.is_number_integer() ? j.get<std::int64_t>() : static_cast<std::int64_t>(j.get<double>());
}

// A number or an array of numbers.
inline Vec asVec(const json& j, const std::string& what) {
  if (j.is_number()) return {j.get<double>()};
  require(j.is_array() && !j.empty(), what + " must be a number or a non-empty array of numbers");
  Vec out;
  for (const auto& v : j) out.push_back(asNumber(v, what));
  return out;
}

inline Freq asFreq(const json& j) {
  require(j.is_array() && !j.empty(), "frequency 'k' must be a non-empty integer array");
  Freq k;
  for (const auto& v : j) k.push_back(asInteger(v, "frequency component"));
  return k;
}

inline void rejectUnknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    require(allowed.count(it.key()) != 0, where + ": unknown key '" + it.key() + "'");
}

}  // namespace detail

// [{k, re, im}, ...] or {coeffs: [...], realValued, meanZero}.
inline FourierObservable observableFromJson(const json& j, std::size_t dim) {
  const json* list = &j;
  bool realValued = false, meanZero = false;
  if (j.is_object()) {
    detail::rejectUnknown(j, {"coeffs", "realValued", "meanZero"}, "observable");
    list = &detail::field(j, "coeffs", "observable");
    if (j.contains("realValued")) realValued = j["realValued"].get<bool>();
    if (j.contains("meanZero")) meanZero = j["meanZero"].get<bool>();
  }
  require(list->is_array(), "observable coefficients must be an array of {k, re, im}");
  std::vector<std::pair<Freq, cplx>> coeffs;
  for (const auto& c : *list) {
    detail::rejectUnknown(c, {"k", "re", "im"}, "coefficient");
    Freq k = detail::asFreq(detail::field(c, "k", "coefficient"));
    require(k.size() == dim, "coefficient frequency has dimension " + std::to_string(k.size()) + ", expected " +
                                 std::to_string(dim));
    double re = c.contains("re") ? detail::asNumber(c["re"], "re") : 0.0;
    double im = c.contains("im") ? detail::asNumber(c["im"], "im") : 0.0;
    coeffs.push_back({k, {re, im}});
  }
  return FourierObservable::fromCoefficients(dim, coeffs, realValued, meanZero);
}

inline json observableToJson(const FourierObservable& f) {
  json list = json::array();
  for (const auto& [k, a] : f.coeffs()) list.push_back({{"k", k}, {"re", a.real()}, {"im", a.imag()}});
  return {{"coeffs", list}, {"realValued", f.realValued()}, {"meanZero", f.meanZero()}};
}

namespace detail {

inline Action actionFromJson(const json& p, Action fallback) {
  if (!p.contains("action")) return fallback;
  std::string s = p["action"].get<std::string>();
  if (s == "componentwise") return Action::Componentwise;
  if (s == "diagonal") return Action::Diagonal;
  throw ValidationError("action must be 'componentwise' or 'diagonal'");
}

inline const char* actionName(Action a) { return a == Action::Componentwise ? "componentwise" : "diagonal"; }

// A number c, or {constant, coeffs}.
inline std::pair<double, FourierObservable> positiveFromJson(const json& j, std::size_t dim, const std::string& what) {
  if (j.is_number()) return {j.get<double>(), FourierObservable(dim)};
  rejectUnknown(j, {"constant", "coeffs"}, what);
  double c = asNumber(field(j, "constant", what), what + ".constant");
  FourierObservable f = j.contains("coeffs") ? observableFromJson(j["coeffs"], dim) : FourierObservable(dim);
  return {c, f};
}

inline json positiveToJson(const PositiveFunction& p) {
  json list = json::array();
  for (const auto& [k, a] : p.f.coeffs()) list.push_back({{"k", k}, {"re", a.real()}, {"im", a.imag()}});
  return {{"constant", p.constant}, {"coeffs", list}};
}

}  // namespace detail

inline SystemSpec systemFromJson(const json& j) {
  detail::rejectUnknown(j, {"type", "params"}, "system");
  std::string type = detail::field(j, "type", "system").get<std::string>();
  const json& p = detail::field(j, "params", "system " + type);
  std::string where = type + ".params";
  if (type == "Rotation" || type == "LinearFlow") {
    detail::rejectUnknown(p, {"alpha", "action"}, where);
    Vec alpha = detail::asVec(detail::field(p, "alpha", where), "alpha");
    if (type == "Rotation") return SystemSpec::rotation(alpha, detail::actionFromJson(p, Action::Componentwise));
    return SystemSpec::linearFlow(alpha, detail::actionFromJson(p, Action::Diagonal));
  }
  if (type == "SkewShift") {
    detail::rejectUnknown(p, {"eta1", "eta2"}, where);
    return SystemSpec::skewShift(detail::asNumber(detail::field(p, "eta1", where), "eta1"),
                                 detail::asNumber(detail::field(p, "eta2", where), "eta2"));
  }
  if (type == "HeisenbergReturnMap") {
    detail::rejectUnknown(p, {"wa", "wb", "wc"}, where);
    return SystemSpec::heisenberg(detail::asNumber(detail::field(p, "wa", where), "wa"),
                                  detail::asNumber(detail::field(p, "wb", where), "wb"),
                                  detail::asNumber(detail::field(p, "wc", where), "wc"));
  }
  if (type == "ToralAutomorphism") {
    detail::rejectUnknown(p, {"matrix"}, where);
    const json& m = detail::field(p, "matrix", where);
    require(m.is_array() && !m.empty(), "matrix must be a non-empty array of rows");
    IntMatrix mat;
    for (const auto& row : m) {
      require(row.is_array(), "matrix rows must be arrays");
      std::vector<std::int64_t> r;
      for (const auto& v : row) r.push_back(detail::asInteger(v, "matrix entry"));
      mat.push_back(r);
    }
    return SystemSpec::toral(mat);
  }
  if (type == "ProductSystem") {
    detail::rejectUnknown(p, {"factors"}, where);
    const json& fs = detail::field(p, "factors", where);
    require(fs.is_array() && !fs.empty(), "factors must be a non-empty array");
    std::vector<SystemSpec> factors;
    for (const auto& f : fs) factors.push_back(systemFromJson(f));
    return SystemSpec::product(std::move(factors));
  }
  if (type == "SuspensionFlow") {
    detail::rejectUnknown(p, {"base", "roof"}, where);
    SystemSpec base = systemFromJson(detail::field(p, "base", where));
    auto [c, f] = detail::positiveFromJson(detail::field(p, "roof", where), base.spaceDim(), "roof");
    return SystemSpec::suspension(base, c, f);
  }
  if (type == "TimeChange") {
    detail::rejectUnknown(p, {"base", "tau", "quadStep", "rootTol"}, where);
    SystemSpec base = systemFromJson(detail::field(p, "base", where));
    auto [c, f] = detail::positiveFromJson(detail::field(p, "tau", where), base.spaceDim(), "tau");
    double h = p.contains("quadStep") ? detail::asNumber(p["quadStep"], "quadStep") : 1e-3;
    double tol = p.contains("rootTol") ? detail::asNumber(p["rootTol"], "rootTol") : 1e-10;
    return SystemSpec::timeChange(base, c, f, h, tol);
  }
  if (type == "TimeOneMap") {
    detail::rejectUnknown(p, {"flow"}, where);
    return SystemSpec::timeOne(systemFromJson(detail::field(p, "flow", where)));
  }
  throw ValidationError("unknown system type '" + type + "'");
}

inline json systemToJson(const SystemSpec& spec) {
  json p = std::visit(
      [](const auto& s) -> json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Rotation> || std::is_same_v<T, LinearFlow>) {
          return {{"alpha", s.alpha}, {"action", detail::actionName(s.action)}};
        } else if constexpr (std::is_same_v<T, SkewShift>) {
          return {{"eta1", s.eta1}, {"eta2", s.eta2}};
        } else if constexpr (std::is_same_v<T, HeisenbergReturnMap>) {
          return {{"wa", s.wa}, {"wb", s.wb}, {"wc", s.wc}};
        } else if constexpr (std::is_same_v<T, ToralAutomorphism>) {
          return {{"matrix", s.matrix}};
        } else if constexpr (std::is_same_v<T, ProductSystem>) {
          json fs = json::array();
          for (const auto& f : s.factors) fs.push_back(systemToJson(f));
          return {{"factors", fs}};
        } else if constexpr (std::is_same_v<T, SuspensionFlow>) {
          return {{"base", systemToJson(*s.base)}, {"roof", detail::positiveToJson(s.roof)}};
        } else if constexpr (std::is_same_v<T, TimeChange>) {
          return {{"base", systemToJson(*s.base)},
                  {"tau", detail::positiveToJson(s.tau)},
                  {"quadStep", s.quadStep},
                  {"rootTol", s.rootTol}};
        } else {
          return {{"flow", systemToJson(*s.flow)}};
        }
      },
      spec.variant());
  return {{"type", spec.typeName()}, {"params", p}};
}

inline const std::vector<std::string>& experimentKinds() {
  static const std::vector<std::string> kinds = {"twisted",         "sparse",        "weights",
                                                 "alpha",           "beta",          "audit-vprop1",
                                                 "expsum-oracle",   "rates-calc",    "rates-fit"};
  return kinds;
}

struct ExperimentConfig {
  std::string experiment;
  std::optional<SystemSpec> system;
  std::optional<FourierObservable> observable;
  std::optional<FourierObservable> observable2;
  std::optional<StatePoint> point;  // empty with pointRandom for "random"
  bool pointRandom = false;
  Vec grid;
  json params = json::object();
  std::uint64_t seed = 1;
  std::string output;
  json raw;  // the parsed document, for hashing
};

namespace detail {

struct ExperimentRules {
  bool needsSystem = false;
  bool needsObservable = false;
  bool needsPoint = false;
  bool needsGrid = true;
  bool integerGrid = false;
  std::set<std::string> required;
  std::set<std::string> optional;
};

inline ExperimentRules rulesFor(const std::string& kind) {
  if (kind == "twisted") return {true, true, true, true, false, {}, {"a", "aGrid", "refine", "window", "panel"}};
  if (kind == "sparse")
    return {true, true, true, true, true, {"eps"}, {"delta", "a", "dist", "p", "lo", "hi", "panel"}};
  if (kind == "weights") return {false, false, false, true, true, {"delta"}, {"replicas", "dist", "p", "lo", "hi", "d"}};
  if (kind == "alpha") return {true, true, false, true, false, {}, {"mcSamples", "panel"}};
  if (kind == "beta") return {true, true, true, true, false, {}, {"panel"}};
  if (kind == "audit-vprop1")
    return {true, true, true, true, true, {}, {"H", "hExponent", "nPairs", "maxRelStdErr", "aGrid", "mcSamples"}};
  if (kind == "expsum-oracle") return {false, false, false, true, true, {"p", "xi"}, {"mode"}};
  if (kind == "rates-calc")
    return {false, false, false, false, false, {"delta1", "delta2", "d", "K"}, {"rho", "rhoPrime", "kappa", "eps", "a"}};
  if (kind == "rates-fit")
    return {false, false, false, false, false, {"csv"}, {"fit", "allowMixed", "predictedExponent"}};
  throw ValidationError("unknown experiment '" + kind + "'");
}

inline StatePoint pointFromJson(const json& j) {
  if (j.is_array()) return {asVec(j, "point"), std::nullopt};
  rejectUnknown(j, {"coords", "height"}, "point");
  StatePoint x{asVec(field(j, "coords", "point"), "point.coords"), std::nullopt};
  if (j.contains("height")) x.height = asNumber(j["height"], "point.height");
  return x;
}

}  // namespace detail

inline ExperimentConfig configFromJson(const json& j) {
  require(j.is_object(), "config must be a JSON object");
  detail::rejectUnknown(j, {"experiment", "system", "observable", "observable2", "point", "grid", "params", "seed",
                            "output"},
                        "config");
  ExperimentConfig c;
  c.raw = j;
  c.experiment = detail::field(j, "experiment", "config").get<std::string>();
  detail::ExperimentRules rules = detail::rulesFor(c.experiment);

  if (j.contains("system")) c.system = systemFromJson(j["system"]);
  require(!rules.needsSystem || c.system, c.experiment + " needs a 'system'");
  if (j.contains("observable") || j.contains("observable2"))
    require(c.system.has_value(), "observables need a 'system' to fix their dimension");
  if (j.contains("observable")) c.observable = observableFromJson(j["observable"], c.system->spaceDim());
  if (j.contains("observable2")) c.observable2 = observableFromJson(j["observable2"], c.system->spaceDim());
  require(!rules.needsObservable || c.observable, c.experiment + " needs an 'observable'");

  if (j.contains("point")) {
    const json& p = j["point"];
    if (p.is_string()) {
      require(p.get<std::string>() == "random", "point must be coordinates or \"random\"");
      c.pointRandom = true;
    } else {
      c.point = detail::pointFromJson(p);
      require(c.system.has_value(), "a point needs a 'system'");
      require(c.point->coords.size() == c.system->spaceDim(), "point dimension does not match the system");
      require(c.point->height.has_value() == c.system->hasHeight(),
              c.system->hasHeight() ? "point needs a 'height' for this system" : "point has a 'height' but the system does not");
    }
  }
  require(!rules.needsPoint || c.point || c.pointRandom, c.experiment + " needs a 'point'");

  if (j.contains("grid")) c.grid = detail::asVec(j["grid"], "grid");
  require(!rules.needsGrid || !c.grid.empty(), c.experiment + " needs a non-empty 'grid'");
  for (std::size_t i = 0; i < c.grid.size(); ++i) {
    require(std::isfinite(c.grid[i]) && c.grid[i] > 0, "grid values must be positive");
    require(i == 0 || c.grid[i] > c.grid[i - 1], "grid must be strictly increasing");
    bool integer = rules.integerGrid || (c.system && c.system->discrete());
    require(!integer || isIntegral(c.grid[i]), c.experiment + " needs an integer grid");
  }

  if (j.contains("params")) c.params = j["params"];
  require(c.params.is_object(), "params must be an object");
  std::set<std::string> allowed = rules.required;
  allowed.insert(rules.optional.begin(), rules.optional.end());
  detail::rejectUnknown(c.params, allowed, c.experiment + " params");
  for (const auto& key : rules.required)
    require(c.params.contains(key), c.experiment + " needs param '" + key + "'");

  if (j.contains("seed")) {
    require(j["seed"].is_number_unsigned() || (j["seed"].is_number_integer() && j["seed"].get<std::int64_t>() >= 0),
            "seed must be a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("output")) c.output = j["output"].get<std::string>();
  return c;
}

inline ExperimentConfig loadConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ValidationError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return configFromJson(j);
}

// FNV-1a (64-bit) over the canonical dump of the config without seed, output
// and grid, as 16 hex digits.
inline std::string configHash(const ExperimentConfig& c) {
  json j = c.raw;
  j.erase("seed");
  j.erase("output");
  j.erase("grid");
  std::string s = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace ergolab

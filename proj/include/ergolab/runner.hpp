// Batch experiment runner: config in, CSV rows (or a JSON summary) out.
#pragma once

#include <atomic>
#include <chrono>
#include <ctime>
#include <iomanip>
#include <map>
#include <mutex>
#include <ostream>

#include "config.hpp"
#include "estimators.hpp"
#include "rates.hpp"

namespace ergolab {

inline const char* kCsvHeader =
    "experiment,config_hash,seed,system,T,statistic,value,aux1_name,aux1,aux2_name,aux2,aux3_name,aux3";

inline std::string formatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct CsvRow {
  double T = 0;
  std::string statistic;
  double value = 0;
  std::vector<std::pair<std::string, double>> aux;  // at most three
};

struct RunOptions {
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  bool timestamp = true;
};

struct RunResult {
  int exitCode = 0;
  std::string message;
};

namespace detail {

inline double param(const json& p, const std::string& key, double fallback) {
  return p.contains(key) ? asNumber(p[key], key) : fallback;
}

inline std::int64_t intParam(const json& p, const std::string& key, std::int64_t fallback) {
  return p.contains(key) ? asInteger(p[key], key) : fallback;
}

inline WeightDistribution distParam(const json& p) {
  std::string name = p.contains("dist") ? p["dist"].get<std::string>() : "pmOne";
  return distributionFromName(name, param(p, "p", 0.5), param(p, "lo", 0), param(p, "hi", 1));
}

inline QuadratureSettings quadParam(const json& p) {
  QuadratureSettings q;
  q.panel = param(p, "panel", q.panel);
  require(q.panel > 0, "panel must be positive");
  return q;
}

inline std::uint64_t mixSeed(std::uint64_t seed, std::uint64_t i) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (i + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct Context {
  const ExperimentConfig& cfg;
  std::uint64_t seed;
  StatePoint x;
};

inline WeylBoundMode weylMode(const json& p, double xi, double pw) {
  std::string mode = p.contains("mode") ? p["mode"].get<std::string>() : "";
  if (mode.empty()) mode = isIntegral(pw) ? "vdcPoly" : (pw < 1 ? "fejer" : "vdcFrac");
  if (mode == "vdcPoly") {
    require(isIntegral(pw), "vdcPoly needs an integer p");
    return VdcPolyBound{static_cast<int>(pw), distToZ(xi)};
  }
  if (mode == "vdcFrac") return VdcFracBound{pw, xi};
  if (mode == "fejer") return FejerBound{xi, pw};
  throw ValidationError("mode must be 'vdcPoly', 'vdcFrac' or 'fejer'");
}

inline double xiParam(const json& p) {
  const json& j = p["xi"];
  if (j.is_string()) {
    require(j.get<std::string>() == "golden", "xi must be a number or \"golden\"");
    return (std::sqrt(5.0) - 1) / 2;
  }
  return asNumber(j, "xi");
}

inline std::vector<CsvRow> computeRow(const Context& ctx, double T) {
  const ExperimentConfig& c = ctx.cfg;
  const json& p = c.params;
  const std::string& kind = c.experiment;
  std::vector<CsvRow> rows;

  if (kind == "twisted") {
    const SystemSpec& s = *c.system;
    if (p.contains("a")) {
      Vec a = asVec(p["a"], "a");
      cplx v = twistedAverage(s, *c.observable, ctx.x, T, a, quadParam(p));
      rows.push_back({T, "twisted", std::abs(v), {{"re", v.real()}, {"im", v.imag()}}});
    } else {
      GammaSettings gs;
      gs.grid = static_cast<std::size_t>(intParam(p, "aGrid", 256));
      gs.refine = static_cast<std::size_t>(intParam(p, "refine", 40));
      gs.window = param(p, "window", gs.window);
      gs.quad = quadParam(p);
      GammaResult g = gammaSup(s, *c.observable, ctx.x, T, gs);
      rows.push_back({T,
                      "gamma",
                      g.value,
                      {{"argmax1", g.argmax.empty() ? 0.0 : g.argmax[0]},
                       {"resolution", g.resolution},
                       {"refinement_hit_edge", g.refinementHitEdge ? 1.0 : 0.0}}});
    }
  } else if (kind == "sparse") {
    const SystemSpec& s = *c.system;
    auto N = static_cast<std::int64_t>(T);
    Vec eps = asVec(p["eps"], "eps");
    require(eps.size() == s.groupDim(), "eps needs one entry per group dimension");
    WeightedSampleSet B = powerSequence(N, eps);
    if (p.contains("dist")) B = B.withWeights(randomWeights(mixSeed(ctx.seed, N), distParam(p), B.size()).weights);
    cplx v = weightedSparseSum(s, *c.observable, ctx.x, B);
    rows.push_back({T, "sparse", std::abs(v), {{"re", v.real()}, {"im", v.imag()}, {"diameter", B.diameter()}}});
    if (p.contains("delta")) {
      Vec a = p.contains("a") ? asVec(p["a"], "a") : Vec(s.groupDim(), 0.0);
      SmoothedAudit au = smoothedSumAudit(s, *c.observable, ctx.x, B, asNumber(p["delta"], "delta"), a);
      rows.push_back({T,
                      "smoothed_gap",
                      std::abs(au.discrete - au.smoothed),
                      {{"error_bound", au.errorBound}, {"constant", au.constant}, {"modulus", au.modulus}}});
    }
  } else if (kind == "weights") {
    auto N = static_cast<std::size_t>(T);
    auto d = static_cast<std::size_t>(intParam(p, "d", 1));
    require(d == 1 || d == 2, "weights supports d = 1 or 2");
    double delta = asNumber(p["delta"], "delta");
    auto replicas = static_cast<std::size_t>(intParam(p, "replicas", 200));
    require(replicas >= 2, "replicas must be >= 2");
    WeightDistribution dist = distParam(p);
    std::size_t count = d == 1 ? N : N * N;
    Accumulator s1, s2;
    for (std::size_t r = 0; r < replicas; ++r) {
      WeightDraw w = randomWeights(mixSeed(ctx.seed, r), dist, count);
      double y = yStatistic(w.weights, d, delta).value;
      s1.add(y * y);
      s2.add(y * y * y * y);
    }
    double n = static_cast<double>(replicas), mean = s1.value() / n;
    double var = std::max(0.0, (s2.value() / n - mean * mean) * n / (n - 1));
    rows.push_back({T, "Y2_mean", mean, {{"delta", delta}, {"replicas", n}, {"std_err", std::sqrt(var / n)}}});
  } else if (kind == "alpha") {
    std::optional<MonteCarloSettings> mc;
    if (p.contains("mcSamples"))
      mc = MonteCarloSettings{static_cast<std::size_t>(asInteger(p["mcSamples"], "mcSamples")), ctx.seed};
    const FourierObservable& g = c.observable2 ? *c.observable2 : *c.observable;
    AlphaResult a = alphaRate(*c.system, *c.observable, g, T, mc, quadParam(p));
    rows.push_back({T, "alpha", a.value, {{"std_err", a.stdErr}}});
  } else if (kind == "beta") {
    const SystemSpec& s = *c.system;
    QuadratureSettings q = quadParam(p);
    cplx avg = ergodicAverage(s, *c.observable, ctx.x, T, q);
    cplx mean = spaceAverage(s, *c.observable);
    rows.push_back({T, "beta", std::abs(avg - mean), {{"avg_re", avg.real()}, {"avg_im", avg.imag()}}});
  } else if (kind == "audit-vprop1") {
    auto Ti = static_cast<std::int64_t>(T);
    std::int64_t H = p.contains("H") ? asInteger(p["H"], "H")
                                     : std::max<std::int64_t>(1, std::llround(std::pow(T, param(p, "hExponent", 1.0 / 3))));
    PairSampling ps;
    ps.nPairs = static_cast<std::size_t>(intParam(p, "nPairs", static_cast<std::int64_t>(ps.nPairs)));
    ps.seed = ctx.seed;
    ps.maxRelStdErr = param(p, "maxRelStdErr", ps.maxRelStdErr);
    GammaSettings gs;
    gs.grid = static_cast<std::size_t>(intParam(p, "aGrid", 256));
    Vprop1Record r = vprop1Audit(*c.system, *c.observable, ctx.x, Ti, H, ps, gs);
    rows.push_back({T,
                    "vprop1_lhs",
                    r.lhs,
                    {{"term_boundary", r.termBoundary}, {"term_alpha", r.termAlpha}, {"term_beta", r.termBeta}}});
    rows.push_back({T,
                    "vprop1_constant",
                    r.constant,
                    {{"H", static_cast<double>(H)}, {"pairs", static_cast<double>(r.pairs)},
                     {"beta_rel_std_err", r.betaRelStdErr}}});
  } else if (kind == "expsum-oracle") {
    auto N = static_cast<std::int64_t>(T);
    double xi = xiParam(p), pw = asNumber(p["p"], "p");
    require(pw > 0, "p must be positive");
    WeylBoundMode mode = weylMode(p, xi, pw);
    WeylPhase phase;
    if (isIntegral(pw)) {
      std::vector<long double> coeffs(static_cast<std::size_t>(pw) + 1, 0.0L);
      coeffs.back() = xi;
      phase = PolynomialPhase{coeffs};
    } else {
      phase = PowerPhase{xi, pw};
    }
    double measured = std::abs(weylSum(phase, N));
    double bound = analyticWeylBound(mode, static_cast<double>(N));
    rows.push_back({T, "weyl_abs", measured, {{"bound", bound}, {"ratio", measured / bound},
                                              {"bound_exponent", weylBoundExponent(mode)}}});
  } else {
    throw ValidationError(kind + " does not produce CSV rows");
  }
  for (const auto& r : rows) {
    if (!std::isfinite(r.value)) throw NumericError(r.statistic + " is not finite at T = " + formatDouble(T));
  }
  return rows;
}

inline std::string csvLine(const ExperimentConfig& c, const std::string& hash, std::uint64_t seed, const CsvRow& r) {
  std::string s = c.experiment + "," + hash + "," + std::to_string(seed) + "," +
                  (c.system ? c.system->typeName() : std::string("none")) + "," + formatDouble(r.T) + "," +
                  r.statistic + "," + formatDouble(r.value);
  for (std::size_t i = 0; i < 3; ++i) {
    if (i < r.aux.size())
      s += "," + r.aux[i].first + "," + formatDouble(r.aux[i].second);
    else
      s += ",,";
  }
  return s;
}

inline std::string timestampLine() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << "# generated " << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

}  // namespace detail

// Exponent calculus on the config params, as JSON.
inline json ratesCalc(const json& p) {
  ExponentInputs<double> in;
  in.delta1 = detail::asNumber(p["delta1"], "delta1");
  in.delta2 = detail::asNumber(p["delta2"], "delta2");
  in.d = detail::asNumber(p["d"], "d");
  in.K = detail::asNumber(p["K"], "K");
  in.rho = detail::param(p, "rho", 1);
  in.rhoPrime = detail::param(p, "rhoPrime", 1);
  in.kappa = detail::param(p, "kappa", 1);
  TwistExponent<double> t = twistExponent(in);
  DerivedExponents<double> de = derivedExponents(in);
  json out = {{"delta", t.delta},  {"kappaOpt", t.kappaOpt},           {"branch", t.branch},
              {"time1", de.time1}, {"randomWeights", de.randomWeights}};
  if (p.contains("eps")) {
    in.eps = detail::asVec(p["eps"], "eps");
    json windows = json::array();
    for (double e : in.eps) {
      auto w = sparseWindow(e, in.kappa, in.d);
      windows.push_back({{"eps", e},
                         {"feasible", w.feasible},
                         {"violated", w.violated},
                         {"aLo", w.aLo},
                         {"aHi", w.aHi},
                         {"aLoEffective", w.aLoEffective}});
    }
    out["sparseWindows"] = windows;
    bool feasible = true;
    for (const auto& w : windows) feasible = feasible && w["feasible"].get<bool>();
    if (feasible) {
      SparseExponent se = p.contains("a") ? sparseExponent(in, detail::asVec(p["a"], "a")) : sparseExponentOptimize(in);
      out["sparse"] = {{"kappaPrime", se.kappaPrime}, {"a", se.a}};
    }
  }
  return out;
}

// One parsed CSV file.
struct CsvTable {
  std::string path;
  std::vector<std::map<std::string, std::string>> rows;
};

inline CsvTable readCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open CSV '" + path + "'");
  CsvTable t{path, {}};
  std::string line;
  std::vector<std::string> header;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!s.empty() && s.back() == ',') out.emplace_back();
    return out;
  };
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header.empty()) {
      require(line == kCsvHeader, "schema mismatch in '" + path + "': unexpected header");
      header = split(line);
      continue;
    }
    auto cells = split(line);
    require(cells.size() == header.size(), "schema mismatch in '" + path + "': wrong column count");
    std::map<std::string, std::string> row;
    for (std::size_t i = 0; i < header.size(); ++i) row[header[i]] = cells[i];
    t.rows.push_back(std::move(row));
  }
  require(!header.empty(), "schema mismatch in '" + path + "': no header");
  return t;
}

namespace detail {
inline double parseCell(const std::string& cell, const std::string& path) {
  std::size_t used = 0;
  double v = NAN;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  require(used != 0 && used == cell.size(), "schema mismatch in '" + path + "': '" + cell + "' is not a number");
  return v;
}
}  // namespace detail

struct ReportOptions {
  bool fit = true;
  bool allowMixed = false;
  std::optional<double> predictedExponent;  // decay exponent e of a predicted T^{-e} rate
};

// Merges runs per statistic (sorted by T), optionally fitting a power law.
inline json emitReport(const std::vector<std::string>& csvPaths, const ReportOptions& opt) {
  require(!csvPaths.empty(), "report needs at least one CSV");
  std::set<std::string> hashes;
  std::map<std::string, std::vector<std::pair<double, double>>> series;
  for (const auto& path : csvPaths) {
    CsvTable t = readCsv(path);
    for (const auto& row : t.rows) {
      hashes.insert(row.at("config_hash"));
      series[row.at("statistic")].push_back({detail::parseCell(row.at("T"), path), detail::parseCell(row.at("value"), path)});
    }
  }
  require(opt.allowMixed || hashes.size() <= 1, "CSVs carry different config hashes (use --allow-mixed)");
  json stats = json::array();
  for (auto& [name, pts] : series) {
    std::stable_sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    Vec T, v;
    for (const auto& [t, x] : pts) {
      T.push_back(t);
      v.push_back(x);
    }
    json s = {{"statistic", name},
              {"count", pts.size()},
              {"tMin", T.front()},
              {"tMax", T.back()},
              {"min", *std::min_element(v.begin(), v.end())},
              {"max", *std::max_element(v.begin(), v.end())}};
    Accumulator mean;
    for (double x : v) mean.add(x);
    s["mean"] = mean.value() / static_cast<double>(v.size());
    if (opt.fit) {
      RateFit f = fitPowerLaw(T, v);
      s["slope"] = f.slope;
      s["intercept"] = f.intercept;
      s["rSquared"] = f.rSquared;
      s["pointCount"] = f.pointCount;
      s["dropped"] = f.dropped;
      if (opt.predictedExponent) {
        double e = *opt.predictedExponent;
        s["predictedExponent"] = e;
        s["slopeRatio"] = e != 0 ? -f.slope / e : NAN;
        Vec ratio;
        for (std::size_t i = 0; i < T.size(); ++i) ratio.push_back(v[i] * std::pow(T[i], e));
        s["ratioMin"] = *std::min_element(ratio.begin(), ratio.end());
        s["ratioMax"] = *std::max_element(ratio.begin(), ratio.end());
      }
    }
    stats.push_back(s);
  }
  return {{"runs", csvPaths.size()}, {"configHashes", hashes}, {"statistics", stats}};
}

// Runs a config, writing CSV rows (or JSON for rates-calc and rates-fit).
inline RunResult runExperiment(const ExperimentConfig& cfg, std::ostream& out, const RunOptions& opt) {
  std::uint64_t seed = opt.seed.value_or(cfg.seed);
  if (cfg.experiment == "rates-calc") {
    out << ratesCalc(cfg.params).dump(2) << "\n";
    return {};
  }
  if (cfg.experiment == "rates-fit") {
    const json& p = cfg.params;
    std::vector<std::string> paths;
    if (p["csv"].is_string())
      paths.push_back(p["csv"].get<std::string>());
    else
      paths = p["csv"].get<std::vector<std::string>>();
    ReportOptions ro;
    ro.fit = p.contains("fit") ? p["fit"].get<bool>() : true;
    ro.allowMixed = p.contains("allowMixed") && p["allowMixed"].get<bool>();
    if (p.contains("predictedExponent")) ro.predictedExponent = detail::asNumber(p["predictedExponent"], "predictedExponent");
    out << emitReport(paths, ro).dump(2) << "\n";
    return {};
  }

  StatePoint x;
  if (cfg.point) {
    x = *cfg.point;
  } else if (cfg.pointRandom) {
    RandomStream rng(seed, 0x706f696e74);
    x = randomState(*cfg.system, rng);
  }
  detail::Context ctx{cfg, seed, x};
  std::string hash = configHash(cfg);

  std::size_t n = cfg.grid.size();
  std::vector<std::vector<CsvRow>> results(n);
  std::vector<std::string> errors(n);
  std::vector<int> codes(n, 0);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        results[i] = detail::computeRow(ctx, cfg.grid[i]);
      } catch (const ValidationError& e) {
        codes[i] = 2;
        errors[i] = e.what();
      } catch (const NumericError& e) {
        codes[i] = 3;
        errors[i] = e.what();
      } catch (const json::exception& e) {
        codes[i] = 2;
        errors[i] = e.what();
      }
    }
  };
  unsigned threads = std::max(1u, std::min<unsigned>(opt.threads, static_cast<unsigned>(n)));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work);
    work();
  }

  if (opt.timestamp) out << detail::timestampLine() << "\n";
  out << kCsvHeader << "\n";
  for (std::size_t i = 0; i < n; ++i) {
    if (codes[i] != 0) {
      out << "# PARTIAL: T = " << formatDouble(cfg.grid[i]) << ": " << errors[i] << "\n";
      return {codes[i], errors[i]};
    }
    for (const auto& r : results[i]) out << detail::csvLine(cfg, hash, seed, r) << "\n";
  }
  return {};
}

}  // namespace ergolab

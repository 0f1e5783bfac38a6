// Rate functionals on concrete systems: ergodic and twisted averages, the
// twisted sup, weak-mixing averages, sparse and smoothed sums, the spectral
// mass statistic and the three-term audit of twisted averages.
#pragma once

#include <map>
#include <string>
#include <utility>

#include "expsum.hpp"
#include "kernels.hpp"
#include "observables.hpp"
#include "systems.hpp"

namespace ergolab {

struct RateSample {
  double T = 0;
  double value = 0;
  std::vector<std::pair<std::string, double>> aux;
  std::uint64_t seed = 0;
  double wallSeconds = 0;
};

// Multi-index box [-R,R]^d, row-major with the last axis fastest.
class LatticeBox {
 public:
  LatticeBox(std::int64_t R, std::size_t d) : R_(R), d_(d), side_(2 * R + 1) {
    require(R >= 0 && d >= 1, "lattice box needs R >= 0 and d >= 1");
    size_ = 1;
    for (std::size_t i = 0; i < d; ++i) size_ *= static_cast<std::size_t>(side_);
  }
  std::size_t size() const { return size_; }
  std::size_t dim() const { return d_; }
  std::int64_t radius() const { return R_; }
  Vec point(std::size_t idx) const {
    Vec p(d_);
    for (std::size_t i = d_; i-- > 0;) {
      p[i] = static_cast<double>(static_cast<std::int64_t>(idx % static_cast<std::size_t>(side_)) - R_);
      idx /= static_cast<std::size_t>(side_);
    }
    return p;
  }
  // Index of n (must lie in the box).
  std::size_t index(const std::vector<std::int64_t>& n) const {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < d_; ++i) idx = idx * static_cast<std::size_t>(side_) + static_cast<std::size_t>(n[i] + R_);
    return idx;
  }

 private:
  std::int64_t R_;
  std::size_t d_;
  std::int64_t side_;
  std::size_t size_;
};

namespace detail {

inline bool hasClosedFormJumps(const SystemSpec& s) {
  if (s.as<Rotation>() || s.as<SkewShift>() || s.as<HeisenbergReturnMap>()) return true;
  if (const auto* t = s.as<TimeOneMap>()) return t->flow->as<LinearFlow>() != nullptr;
  return false;
}

}  // namespace detail

// Orbit states phi_n(x) for n in [-R,R]^d of a discrete system.
inline std::vector<StatePoint> orbitStates(const SystemSpec& spec, const StatePoint& x, std::int64_t R) {
  require(spec.discrete(), "orbitStates needs a discrete system");
  require(R >= 0, "orbit radius must be >= 0");
  LatticeBox box(R, spec.groupDim());
  if (const auto* p = spec.as<ProductSystem>()) {
    std::vector<std::vector<StatePoint>> parts;
    std::size_t xi = 0;
    for (const auto& f : p->factors) {
      StatePoint part{Vec(x.coords.begin() + xi, x.coords.begin() + xi + f.spaceDim()), std::nullopt};
      parts.push_back(orbitStates(f, part, R));
      xi += f.spaceDim();
    }
    std::vector<StatePoint> out(box.size());
    for (std::size_t idx = 0; idx < box.size(); ++idx) {
      Vec n = box.point(idx);
      StatePoint s;
      std::size_t gi = 0;
      for (std::size_t fi = 0; fi < parts.size(); ++fi) {
        const auto& f = p->factors[fi];
        LatticeBox fb(R, f.groupDim());
        std::vector<std::int64_t> sub(f.groupDim());
        for (std::size_t j = 0; j < f.groupDim(); ++j) sub[j] = static_cast<std::int64_t>(n[gi + j]);
        const StatePoint& fs = parts[fi][fb.index(sub)];
        s.coords.insert(s.coords.end(), fs.coords.begin(), fs.coords.end());
        gi += f.groupDim();
      }
      out[idx] = std::move(s);
    }
    return out;
  }
  std::vector<StatePoint> out(box.size());
  if (spec.groupDim() == 1 && !detail::hasClosedFormJumps(spec)) {
    out[static_cast<std::size_t>(R)] = x;
    for (std::int64_t n = 1; n <= R; ++n) {
      out[static_cast<std::size_t>(R + n)] = evolve1(spec, out[static_cast<std::size_t>(R + n - 1)], 1.0);
      out[static_cast<std::size_t>(R - n)] = evolve1(spec, out[static_cast<std::size_t>(R - n + 1)], -1.0);
    }
    return out;
  }
  for (std::size_t idx = 0; idx < box.size(); ++idx) out[idx] = evolve(spec, x, box.point(idx));
  return out;
}

inline std::vector<cplx> orbitValues(const SystemSpec& spec, const FourierObservable& f, const StatePoint& x,
                                     std::int64_t R) {
  require(f.dim() == spec.spaceDim(), "observable dimension does not match the system");
  auto states = orbitStates(spec, x, R);
  std::vector<cplx> v(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) v[i] = evaluate(f, states[i]);
  return v;
}

// Quadrature nodes along a continuous orbit over the window [-T,T]^d:
// sum_i weight_i F(t_i, state_i) approximates int F(t, phi_t x) dt.
struct OrbitNodes {
  std::size_t dim = 1;
  std::vector<Vec> t;
  Vec weight;
  std::vector<StatePoint> states;
  double volume = 0;  // (2T)^d
};

struct QuadratureSettings {
  double panel = 0.25;
};

namespace detail {

inline void addPieceNodes(const SystemSpec& flow, const FlowPiece& p, double panel, OrbitNodes& out) {
  const GaussRule& rule = defaultRule();
  double len = p.u1 - p.u0;
  auto panels = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(len / panel)));
  double h = len / static_cast<double>(panels);
  for (std::size_t k = 0; k < panels; ++k) {
    double mid = p.u0 + h * (static_cast<double>(k) + 0.5);
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      double u = mid + 0.5 * h * rule.nodes[i];
      out.t.push_back({u});
      out.weight.push_back(0.5 * h * rule.weights[i]);
      out.states.push_back(advanceInPiece(flow, p.start, u - p.u0));
    }
  }
}

}  // namespace detail

inline OrbitNodes orbitNodes(const SystemSpec& spec, const StatePoint& x, double T, const QuadratureSettings& q = {}) {
  require(!spec.discrete(), "orbitNodes needs a continuous system");
  require(T > 0 && std::isfinite(T), "T must be positive and finite");
  require(q.panel > 0, "panel width must be positive");
  OrbitNodes out;
  out.dim = spec.groupDim();
  out.volume = std::pow(2 * T, static_cast<double>(out.dim));
  if (const auto* lf = spec.as<LinearFlow>(); lf && spec.groupDim() > 1) {
    const GaussRule& rule = defaultRule();
    auto panels = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(2 * T / q.panel)));
    double h = 2 * T / static_cast<double>(panels);
    Vec axisT, axisW;
    for (std::size_t k = 0; k < panels; ++k)
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        axisT.push_back(-T + h * (static_cast<double>(k) + 0.5) + 0.5 * h * rule.nodes[i]);
        axisW.push_back(0.5 * h * rule.weights[i]);
      }
    std::size_t m = axisT.size(), total = 1;
    for (std::size_t i = 0; i < out.dim; ++i) total *= m;
    for (std::size_t idx = 0; idx < total; ++idx) {
      Vec t(out.dim);
      double w = 1;
      std::size_t r = idx;
      for (std::size_t i = out.dim; i-- > 0;) {
        t[i] = axisT[r % m];
        w *= axisW[r % m];
        r /= m;
      }
      out.states.push_back(evolve(spec, x, t));
      out.t.push_back(std::move(t));
      out.weight.push_back(w);
    }
    return out;
  }
  if (spec.as<LinearFlow>() || spec.as<SuspensionFlow>()) {
    for (const auto& p : orbitPieces(spec, x, -T, T)) detail::addPieceNodes(spec, p, q.panel, out);
    return out;
  }
  const auto* tc = spec.as<TimeChange>();
  require(tc != nullptr, "unsupported continuous system");
  // Substitute s = sigma(t): dt = tau(phi_s x) ds, and t(s) accumulates tau.
  const SystemSpec& base = *tc->base;
  double sa = timeChangeSigma(spec, x, -T), sb = timeChangeSigma(spec, x, T);
  OrbitNodes raw;
  for (const auto& p : orbitPieces(base, x, sa, sb)) detail::addPieceNodes(base, p, q.panel, raw);
  const GaussRule& sub = gaussRule<5>();
  const GaussRule& rule = defaultRule();
  std::size_t per = rule.nodes.size();
  double tLeft = -T;
  for (std::size_t blk = 0; blk < raw.t.size(); blk += per) {
    // Recover the panel [lo,hi] from its nodes (symmetric rule).
    double wsum = 0;
    for (std::size_t i = 0; i < per; ++i) wsum += raw.weight[blk + i];
    double mid = 0.5 * (raw.t[blk][0] + raw.t[blk + per - 1][0]);
    double lo = mid - 0.5 * wsum, hi = mid + 0.5 * wsum;
    StatePoint anchor = raw.states[blk];
    double uAnchor = raw.t[blk][0];
    auto tauAt = [&](double u) { return tc->tau(advanceInPiece(base, anchor, u - uAnchor).coords); };
    auto partial = [&](double a, double b) {
      double m = 0.5 * (a + b), hh = 0.5 * (b - a), s = 0;
      for (std::size_t i = 0; i < sub.nodes.size(); ++i) s += sub.weights[i] * tauAt(m + hh * sub.nodes[i]);
      return s * hh;
    };
    for (std::size_t i = 0; i < per; ++i) {
      double u = raw.t[blk + i][0];
      const StatePoint& st = raw.states[blk + i];
      out.t.push_back({tLeft + partial(lo, u)});
      out.weight.push_back(raw.weight[blk + i] * tc->tau(st.coords));
      out.states.push_back(st);
    }
    tLeft += partial(lo, hi);
  }
  return out;
}

// Space average of f under the invariant measure of spec.
inline cplx spaceAverage(const SystemSpec& spec, const FourierObservable& f) {
  require(f.dim() == spec.spaceDim(), "observable dimension does not match the system");
  auto asObservable = [](const PositiveFunction& p, std::size_t dim) {
    FourierObservable g(dim);
    g.addUnchecked(Freq(dim, 0), p.constant);
    for (const auto& [k, a] : p.f.coeffs()) {
      Freq m(k.size());
      for (std::size_t i = 0; i < k.size(); ++i) m[i] = -k[i];
      g.addUnchecked(k, 0.5 * a);
      g.addUnchecked(m, 0.5 * std::conj(a));
    }
    return g;
  };
  const SystemSpec* s = &spec;
  if (const auto* t = s->as<TimeOneMap>()) s = t->flow.get();
  std::size_t dim = spec.spaceDim();
  FourierObservable density(dim);
  density.addUnchecked(Freq(dim, 0), 1.0);
  if (const auto* tc = s->as<TimeChange>()) {
    density = density * asObservable(tc->tau, dim);
    s = tc->base.get();
  }
  if (const auto* su = s->as<SuspensionFlow>()) density = density * asObservable(su->roof, dim);
  Freq zero(dim, 0);
  cplx mass = density.coefficient(zero);
  cplx num = (f * density).coefficient(zero);
  return num / mass;
}

// Normalized twisted sum (discrete) or integral (continuous) over [-T,T]^d.
inline cplx twistedAverage(const SystemSpec& spec, const FourierObservable& f, const StatePoint& x, double T,
                           const Vec& a, const QuadratureSettings& q = {}) {
  require(a.size() == spec.groupDim(), "twist dimension does not match the system");
  require(f.dim() == spec.spaceDim(), "observable dimension does not match the system");
  if (spec.discrete()) {
    require(T >= 0 && isIntegral(T), "discrete averages need an integer T >= 0");
    auto R = static_cast<std::int64_t>(T);
    auto vals = orbitValues(spec, f, x, R);
    LatticeBox box(R, spec.groupDim());
    cplx s = blockSum<cplx>(vals.size(), [&](std::size_t i) {
      Vec n = box.point(i);
      long double p = 0;
      for (std::size_t j = 0; j < n.size(); ++j) p += static_cast<long double>(n[j]) * mod1l(a[j]);
      return vals[i] * el(p);
    });
    return s / static_cast<double>(box.size());
  }
  OrbitNodes nodes = orbitNodes(spec, x, T, q);
  cplx s = blockSum<cplx>(nodes.weight.size(), [&](std::size_t i) {
    long double p = 0;
    for (std::size_t j = 0; j < a.size(); ++j) p += static_cast<long double>(a[j]) * nodes.t[i][j];
    return nodes.weight[i] * evaluate(f, nodes.states[i]) * el(p);
  });
  return s / nodes.volume;
}

inline cplx ergodicAverage(const SystemSpec& spec, const FourierObservable& f, const StatePoint& x, double T,
                           const QuadratureSettings& q = {}) {
  return twistedAverage(spec, f, x, T, Vec(spec.groupDim(), 0.0), q);
}

// |ergodic average - space average|.
inline double betaRate(const SystemSpec& spec, const FourierObservable& f, const StatePoint& x, double T,
                       const QuadratureSettings& q = {}) {
  return std::abs(ergodicAverage(spec, f, x, T, q) - spaceAverage(spec, f));
}

struct GammaResult {
  double value = 0;
  Vec argmax;
  double resolution = 0;      // grid spacing
  bool refinementHitEdge = false;  // optimum pinned to a bracket edge: possible sharper peak
};

struct GammaSettings {
  std::size_t grid = 256;
  std::size_t refine = 40;
  double window = 4.0;  // continuous systems: a in [-window, window]^d
  QuadratureSettings quad;
};

namespace detail {

// |sum_i w_i v_i e(<a,t_i>)| / norm for fixed samples.
class TwistedMagnitude {
 public:
  TwistedMagnitude(std::vector<Vec> t, std::vector<cplx> wv, double norm, bool consecutive)
      : t_(std::move(t)), wv_(std::move(wv)), norm_(norm), consecutive_(consecutive) {}

  double operator()(const Vec& a) const {
    if (consecutive_ && a.size() == 1) {
      // t_i = t_0 + i: phases by recurrence, re-anchored every 64 steps.
      ComplexAccumulator acc;
      cplx z = e(a[0]);
      cplx w;
      for (std::size_t i = 0; i < wv_.size(); ++i) {
        if (i % 64 == 0)
          w = el(static_cast<long double>(a[0]) * t_[i][0]);
        else
          w *= z;
        acc.add(wv_[i] * w);
      }
      return std::abs(acc.value()) / norm_;
    }
    ComplexAccumulator acc;
    for (std::size_t i = 0; i < wv_.size(); ++i) {
      long double p = 0;
      for (std::size_t j = 0; j < a.size(); ++j) p += static_cast<long double>(a[j]) * t_[i][j];
      acc.add(wv_[i] * el(p));
    }
    return std::abs(acc.value()) / norm_;
  }

 private:
  std::vector<Vec> t_;
  std::vector<cplx> wv_;
  double norm_;
  bool consecutive_;
};

// Maximize g on [lo,hi] by golden section; returns (argmax, max).
template <class G>
std::pair<double, double> goldenMax(G&& g, double lo, double hi, std::size_t iters) {
  const double r = (std::sqrt(5.0) - 1) / 2;
  double c = hi - r * (hi - lo), d = lo + r * (hi - lo);
  double gc = g(c), gd = g(d);
  for (std::size_t i = 0; i < iters; ++i) {
    if (gc >= gd) {
      hi = d;
      d = c;
      gd = gc;
      c = hi - r * (hi - lo);
      gc = g(c);
    } else {
      lo = c;
      c = d;
      gc = gd;
      d = lo + r * (hi - lo);
      gd = g(d);
    }
  }
  return gc >= gd ? std::make_pair(c, gc) : std::make_pair(d, gd);
}

}  // namespace detail

// sup over twists a of the normalized twisted average: coarse grid on
// [0,1)^d (discrete) or [-window, window]^d (continuous), then golden-section
// refinement around the five best cells. The value is a lower bound of the
// true sup; `resolution` is the grid spacing.
inline GammaResult gammaSup(const SystemSpec& spec, const FourierObservable& f, const StatePoint& x, double T,
                            const GammaSettings& gs = {}) {
  require(gs.grid >= 2, "gamma grid must have at least 2 points per axis");
  require(f.dim() == spec.spaceDim(), "observable dimension does not match the system");
  std::size_t d = spec.groupDim();
  std::vector<Vec> t;
  std::vector<cplx> wv;
  double norm;
  bool consecutive = false;
  if (spec.discrete()) {
    require(T >= 0 && isIntegral(T), "discrete averages need an integer T >= 0");
    auto R = static_cast<std::int64_t>(T);
    auto vals = orbitValues(spec, f, x, R);
    LatticeBox box(R, d);
    for (std::size_t i = 0; i < vals.size(); ++i) t.push_back(box.point(i));
    wv = std::move(vals);
    norm = static_cast<double>(box.size());
    consecutive = d == 1;
  } else {
    OrbitNodes nodes = orbitNodes(spec, x, T, gs.quad);
    for (std::size_t i = 0; i < nodes.weight.size(); ++i) wv.push_back(nodes.weight[i] * evaluate(f, nodes.states[i]));
    t = std::move(nodes.t);
    norm = nodes.volume;
  }
  GammaResult res;
  double lo = spec.discrete() ? 0.0 : -gs.window;
  double span = spec.discrete() ? 1.0 : 2 * gs.window;
  double h = span / static_cast<double>(gs.grid);
  res.resolution = h;
  if (f.isZero()) {
    res.argmax.assign(d, lo);
    return res;
  }
  detail::TwistedMagnitude Z(std::move(t), std::move(wv), norm, consecutive);

  std::size_t total = 1;
  for (std::size_t i = 0; i < d; ++i) total *= gs.grid;
  std::vector<std::pair<double, std::size_t>> scored(total);
  auto gridPoint = [&](std::size_t idx) {
    Vec a(d);
    for (std::size_t i = d; i-- > 0;) {
      a[i] = lo + h * static_cast<double>(idx % gs.grid);
      idx /= gs.grid;
    }
    return a;
  };
  for (std::size_t idx = 0; idx < total; ++idx) scored[idx] = {Z(gridPoint(idx)), idx};
  std::size_t top = std::min<std::size_t>(5, total);
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(top), scored.end(),
                    [](const auto& p, const auto& q) { return p.first > q.first || (p.first == q.first && p.second < q.second); });
  res.value = scored[0].first;
  res.argmax = gridPoint(scored[0].second);
  for (std::size_t c = 0; c < top; ++c) {
    Vec a = gridPoint(scored[c].second);
    double best = scored[c].first;
    bool edge = false;
    for (std::size_t i = 0; i < d; ++i) {
      Vec probe = a;
      auto g = [&](double v) {
        probe[i] = v;
        return Z(probe);
      };
      auto [arg, val] = detail::goldenMax(g, a[i] - h, a[i] + h, gs.refine);
      if (val > best) {
        best = val;
        a[i] = arg;
        edge = edge || std::abs(std::abs(arg - gridPoint(scored[c].second)[i]) - h) < 1e-3 * h;
      }
    }
    if (!std::isfinite(best)) throw NumericError("twisted sup refinement produced a non-finite value");
    if (best > res.value) {
      res.value = best;
      res.argmax = a;
      res.refinementHitEdge = edge;
    }
  }
  if (spec.discrete())
    for (auto& v : res.argmax) v = mod1(v);
  return res;
}

struct MonteCarloSettings {
  std::size_t samples = 10000;
  std::uint64_t seed = 1;
};

struct AlphaResult {
  double value = 0;
  double stdErr = 0;  // Monte Carlo only: mean over t of the standard error
};

// Average over [-T,T]^d of |<f, g o phi_t>|; exact when no Monte Carlo
// settings are given.
inline AlphaResult alphaRate(const SystemSpec& spec, const FourierObservable& f, const FourierObservable& g, double T,
                             const std::optional<MonteCarloSettings>& mc = std::nullopt,
                             const QuadratureSettings& q = {}) {
  require(f.dim() == spec.spaceDim() && g.dim() == spec.spaceDim(), "observable dimension does not match the system");
  std::size_t d = spec.groupDim();
  if (!mc) {
    require(hasExactOracle(spec), "exact alpha needs an oracle-supported system");
    if (spec.discrete()) {
      require(T >= 0 && isIntegral(T), "discrete averages need an integer T >= 0");
      LatticeBox box(static_cast<std::int64_t>(T), d);
      double s = blockSum<double>(box.size(), [&](std::size_t i) {
        return std::abs(exactCorrelation(spec, g, f, box.point(i)));
      });
      return {s / static_cast<double>(box.size()), 0};
    }
    StatePoint origin{Vec(spec.spaceDim(), 0.0), std::nullopt};
    OrbitNodes nodes = orbitNodes(SystemSpec::linearFlow(Vec(d, 0.0), d > 1 ? Action::Componentwise : Action::Diagonal),
                                  origin, T, q);
    double s = blockSum<double>(nodes.weight.size(), [&](std::size_t i) {
      return nodes.weight[i] * std::abs(exactCorrelation(spec, g, f, nodes.t[i]));
    });
    return {s / nodes.volume, 0};
  }
  require(mc->samples >= 2, "Monte Carlo needs at least two samples");
  // Times: the lattice (discrete) or Gauss-Legendre nodes of the window.
  std::vector<Vec> times;
  Vec weights;
  double norm;
  if (spec.discrete()) {
    require(T >= 0 && isIntegral(T), "discrete averages need an integer T >= 0");
    LatticeBox box(static_cast<std::int64_t>(T), d);
    for (std::size_t i = 0; i < box.size(); ++i) {
      times.push_back(box.point(i));
      weights.push_back(1.0);
    }
    norm = static_cast<double>(box.size());
  } else {
    StatePoint origin{Vec(d, 0.0), std::nullopt};
    OrbitNodes nodes = orbitNodes(SystemSpec::linearFlow(Vec(d, 0.0), d > 1 ? Action::Componentwise : Action::Diagonal),
                                  origin, T, q);
    times = nodes.t;
    weights = nodes.weight;
    norm = nodes.volume;
  }
  RandomStream rng(mc->seed, 0x616c);
  std::vector<ComplexAccumulator> sum(times.size());
  std::vector<Accumulator> sq(times.size());
  for (std::size_t s = 0; s < mc->samples; ++s) {
    StatePoint x = randomState(spec, rng);
    cplx fx = std::conj(evaluate(f, x));
    if (spec.discrete() && d == 1) {
      auto vals = orbitValues(spec, g, x, static_cast<std::int64_t>(T));
      for (std::size_t i = 0; i < vals.size(); ++i) {
        cplx v = vals[i] * fx;
        sum[i].add(v);
        sq[i].add(std::norm(v));
      }
    } else {
      for (std::size_t i = 0; i < times.size(); ++i) {
        cplx v = evaluate(g, evolve(spec, x, times[i])) * fx;
        sum[i].add(v);
        sq[i].add(std::norm(v));
      }
    }
  }
  double n = static_cast<double>(mc->samples);
  Accumulator val, err;
  for (std::size_t i = 0; i < times.size(); ++i) {
    cplx m = sum[i].value() / n;
    double var = std::max(0.0, (sq[i].value() / n - std::norm(m)) * n / (n - 1));
    val.add(weights[i] * std::abs(m));
    err.add(weights[i] * std::sqrt(var / n));
  }
  return {val.value() / norm, err.value() / norm};
}

// (1/#B) sum_b theta_b f(phi_b x).
inline cplx weightedSparseSum(const SystemSpec& spec, const FourierObservable& f, const StatePoint& x,
                              const WeightedSampleSet& B) {
  require(B.dim() == spec.groupDim(), "sample set dimension does not match the system");
  require(B.size() >= 1, "sample set must be non-empty");
  if (spec.discrete()) require(B.integral(), "non-integer sample point on a discrete system");
  cplx s = blockSum<cplx>(B.size(), [&](std::size_t i) {
    return B.weights()[i] * evaluate(f, evolve(spec, x, B.points()[i]));
  });
  return s / static_cast<double>(B.size());
}

struct SmoothedAudit {
  cplx discrete;
  cplx smoothed;
  double modulus = 0;
  double errorBound = 0;  // 1 + modulus #B max|theta|
  double constant = 0;    // |discrete - smoothed| / errorBound
};

// Smallest sup-distance between two distinct points of B.
inline double minimalGap(const WeightedSampleSet& B) {
  double gap = INFINITY;
  if (B.dim() == 1) {
    Vec v;
    for (const auto& p : B.points()) v.push_back(p[0]);
    std::sort(v.begin(), v.end());
    for (std::size_t i = 1; i < v.size(); ++i) gap = std::min(gap, v[i] - v[i - 1]);
    return gap;
  }
  for (std::size_t i = 0; i < B.size(); ++i)
    for (std::size_t j = i + 1; j < B.size(); ++j) {
      double dd = 0;
      for (std::size_t k = 0; k < B.dim(); ++k) dd = std::max(dd, std::abs(B.points()[i][k] - B.points()[j][k]));
      gap = std::min(gap, dd);
    }
  return gap;
}

// Compares sum_b theta_b f(phi_b x) e(<a,b>) with the integral of
// G(t) e(<a,t>) f(phi_t x), G = sum_b theta_b g_delta(t - b), over the
// support of G (which contains [-d(B), d(B)]^d).
inline SmoothedAudit smoothedSumAudit(const SystemSpec& spec, const FourierObservable& f, const StatePoint& x,
                                      const WeightedSampleSet& B, double delta, const Vec& a) {
  require(!spec.discrete(), "smoothed audit needs a continuous system");
  require(B.dim() == spec.groupDim() && a.size() == B.dim(), "dimension mismatch");
  require(delta > 0, "delta must be positive");
  require(delta < minimalGap(B), "delta must be smaller than the minimal gap of B");
  std::size_t d = B.dim();
  const GaussRule& rule = defaultRule();
  // Per-axis offsets s in [-delta, delta]: four panels on each side of the kink.
  Vec off, offW;
  for (int side = 0; side < 2; ++side)
    for (int k = 0; k < 4; ++k) {
      double lo = side == 0 ? -delta + k * delta / 4 : k * delta / 4;
      double h = delta / 4;
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        double s = lo + 0.5 * h + 0.5 * h * rule.nodes[i];
        off.push_back(s);
        offW.push_back(0.5 * h * rule.weights[i] * triangle(delta, s));
      }
    }
  std::size_t m = off.size(), per = 1;
  for (std::size_t i = 0; i < d; ++i) per *= m;
  SmoothedAudit out;
  out.discrete = blockSum<cplx>(B.size(), [&](std::size_t i) {
    const Vec& b = B.points()[i];
    long double p = 0;
    for (std::size_t j = 0; j < d; ++j) p += static_cast<long double>(a[j]) * b[j];
    return B.weights()[i] * evaluate(f, evolve(spec, x, b)) * el(p);
  });
  out.smoothed = blockSum<cplx>(B.size(), [&](std::size_t i) {
    const Vec& b = B.points()[i];
    if (B.weights()[i] == 0) return cplx{};
    ComplexAccumulator acc;
    Vec t(d);
    for (std::size_t idx = 0; idx < per; ++idx) {
      std::size_t r = idx;
      double w = 1;
      long double p = 0;
      for (std::size_t j = 0; j < d; ++j) {
        t[j] = b[j] + off[r % m];
        w *= offW[r % m];
        p += static_cast<long double>(a[j]) * t[j];
        r /= m;
      }
      acc.add(w * evaluate(f, evolve(spec, x, t)) * el(p));
    }
    return B.weights()[i] * acc.value();
  });
  out.modulus = modulus(spec, f, delta);
  out.errorBound = 1.0 + out.modulus * static_cast<double>(B.size()) * B.maxAbsWeight();
  out.constant = std::abs(out.discrete - out.smoothed) / out.errorBound;
  return out;
}

struct Vprop1Record {
  double lhs = 0;
  Vec aWorst;
  double termBoundary = 0;
  double termAlpha = 0;
  double termBeta = 0;
  double betaRelStdErr = 0;
  std::size_t pairs = 0;
  bool exhaustive = false;
  double constant = 0;  // lhs / (sum of the three terms)
};

struct PairSampling {
  std::size_t nPairs = 256;
  std::uint64_t seed = 1;
  double maxRelStdErr = 0.25;
};

// Twisted sup at scale T against
//   (H/T) ||f||_inf + alpha_{f,f}(H)^{1/2} + (mean over h1,h2 in [-H,H]^d of beta_{F_{h1,h2},x}(T))^{1/2},
// with F_{h1,h2} = f(phi_{h1}) conj f(phi_{h2}). Pairs are enumerated when
// there are at most nPairs of them, otherwise sampled.
inline Vprop1Record vprop1Audit(const SystemSpec& spec, const FourierObservable& f, const StatePoint& x, std::int64_t T,
                                std::int64_t H, const PairSampling& ps = {}, const GammaSettings& gs = {}) {
  require(spec.discrete(), "the three-term audit runs on discrete systems");
  require(T >= H && H >= 1, "audit needs T >= H >= 1");
  require(ps.nPairs >= 2, "need at least two (h1,h2) pairs");
  std::size_t d = spec.groupDim();
  Vprop1Record rec;
  if (f.isZero()) return rec;

  GammaResult g = gammaSup(spec, f, x, static_cast<double>(T), gs);
  rec.lhs = g.value;
  rec.aWorst = g.argmax;
  rec.termBoundary = static_cast<double>(H) / static_cast<double>(T) * f.supBound();
  bool exact = hasExactOracle(spec);
  AlphaResult al = exact ? alphaRate(spec, f, f, static_cast<double>(H))
                         : alphaRate(spec, f, f, static_cast<double>(H), MonteCarloSettings{20000, ps.seed});
  rec.termAlpha = std::sqrt(al.value);

  auto vals = orbitValues(spec, f, x, T + H);
  LatticeBox big(T + H, d), win(T, d), hb(H, d), ub(2 * H, d);
  // Correlations c(u) = <f o phi_u, f> for u in [-2H, 2H]^d.
  std::vector<cplx> corr(ub.size());
  for (std::size_t i = 0; i < ub.size(); ++i) {
    Vec u = ub.point(i);
    corr[i] = exact ? exactCorrelation(spec, f, f, u)
                    : monteCarloCorrelation(spec, f, f, u, 20000, ps.seed + 7).mean;
  }
  std::size_t hcount = hb.size();
  std::size_t allPairs = hcount * hcount;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  if (allPairs <= ps.nPairs) {
    rec.exhaustive = true;
    for (std::size_t i = 0; i < hcount; ++i)
      for (std::size_t j = 0; j < hcount; ++j) pairs.emplace_back(i, j);
  } else {
    RandomStream rng(ps.seed, 0x7062);
    for (std::size_t s = 0; s < ps.nPairs; ++s)
      pairs.emplace_back(static_cast<std::size_t>(rng.bits() % hcount), static_cast<std::size_t>(rng.bits() % hcount));
  }
  Vec betas;
  for (const auto& [i1, i2] : pairs) {
    Vec h1 = hb.point(i1), h2 = hb.point(i2);
    cplx s = blockSum<cplx>(win.size(), [&](std::size_t w) {
      Vec n = win.point(w);
      std::vector<std::int64_t> m1(d), m2(d);
      for (std::size_t k = 0; k < d; ++k) {
        m1[k] = static_cast<std::int64_t>(n[k] + h1[k]);
        m2[k] = static_cast<std::int64_t>(n[k] + h2[k]);
      }
      return vals[big.index(m1)] * std::conj(vals[big.index(m2)]);
    });
    std::vector<std::int64_t> u(d);
    for (std::size_t k = 0; k < d; ++k) u[k] = static_cast<std::int64_t>(h1[k] - h2[k]);
    betas.push_back(std::abs(s / static_cast<double>(win.size()) - corr[ub.index(u)]));
  }
  double n = static_cast<double>(betas.size()), mean = 0, var = 0;
  for (double b : betas) mean += b;
  mean /= n;
  for (double b : betas) var += (b - mean) * (b - mean);
  var /= (n - 1);
  rec.pairs = betas.size();
  rec.termBeta = std::sqrt(mean);
  if (!rec.exhaustive && mean > 0) {
    // Delta method: relative error of sqrt(mean) is half that of mean.
    rec.betaRelStdErr = 0.5 * std::sqrt(var / n) / mean;
    if (rec.betaRelStdErr > ps.maxRelStdErr)
      throw NumericError("too few (h1,h2) pairs: relative standard error of the beta term exceeds the limit");
  }
  double rhs = rec.termBoundary + rec.termAlpha + rec.termBeta;
  rec.constant = rhs > 0 ? rec.lhs / rhs : 0;
  return rec;
}

// T^{-2d} || sum_n e(<a,n>) f o phi_n ||^2_{L^2} (discrete) or the integral
// analogue (continuous), exactly from correlations where an oracle exists,
// otherwise by Monte Carlo over x.
inline double spectralMassStatistic(const SystemSpec& spec, const FourierObservable& f, const Vec& a, double T,
                                    const std::optional<MonteCarloSettings>& mc = std::nullopt,
                                    const QuadratureSettings& q = {}) {
  require(a.size() == spec.groupDim(), "twist dimension does not match the system");
  require(T > 0, "T must be positive");
  std::size_t d = spec.groupDim();
  double scale = std::pow(T, -2.0 * static_cast<double>(d));
  if (f.isZero()) return 0;
  if (!mc && hasExactOracle(spec)) {
    if (spec.discrete()) {
      require(isIntegral(T), "discrete averages need an integer T");
      auto R = static_cast<std::int64_t>(T);
      LatticeBox ub(2 * R, d);
      cplx s = blockSum<cplx>(ub.size(), [&](std::size_t i) {
        Vec u = ub.point(i);
        double w = 1;
        long double p = 0;
        for (std::size_t k = 0; k < d; ++k) {
          w *= static_cast<double>(2 * R + 1) - std::abs(u[k]);
          p += static_cast<long double>(mod1l(a[k])) * u[k];
        }
        return w * el(p) * exactCorrelation(spec, f, f, u);
      });
      return std::max(0.0, s.real()) * scale;
    }
    StatePoint origin{Vec(d, 0.0), std::nullopt};
    OrbitNodes nodes = orbitNodes(SystemSpec::linearFlow(Vec(d, 0.0), d > 1 ? Action::Componentwise : Action::Diagonal),
                                  origin, 2 * T, q);
    cplx s = blockSum<cplx>(nodes.weight.size(), [&](std::size_t i) {
      double w = nodes.weight[i];
      long double p = 0;
      for (std::size_t k = 0; k < d; ++k) {
        w *= 2 * T - std::abs(nodes.t[i][k]);
        p += static_cast<long double>(a[k]) * nodes.t[i][k];
      }
      return w * el(p) * exactCorrelation(spec, f, f, nodes.t[i]);
    });
    return std::max(0.0, s.real()) * scale;
  }
  MonteCarloSettings m = mc ? *mc : MonteCarloSettings{};
  RandomStream rng(m.seed, 0x736d);
  Accumulator acc;
  for (std::size_t s = 0; s < m.samples; ++s) {
    StatePoint x = randomState(spec, rng);
    cplx v = twistedAverage(spec, f, x, T, a, q);
    double vol = spec.discrete() ? std::pow(2 * T + 1, static_cast<double>(d)) : std::pow(2 * T, static_cast<double>(d));
    acc.add(std::norm(v * vol));
  }
  return acc.value() / static_cast<double>(m.samples) * scale;
}

}  // namespace ergolab

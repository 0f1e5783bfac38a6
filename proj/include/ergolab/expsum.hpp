// Weighted exponential sums over sample sets, lattice closed forms, the
// n^{1+eps} progression approximation, Weyl sums and their analytic bounds,
// random weights and the kernel-weighted Y statistic.
#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <variant>

#include "core.hpp"
#include "kernels.hpp"

namespace ergolab {

class WeightedSampleSet {
 public:
  WeightedSampleSet() = default;
  WeightedSampleSet(std::size_t dim, std::vector<Vec> points, Vec weights)
      : dim_(dim), points_(std::move(points)), weights_(std::move(weights)) {
    require(dim_ >= 1, "sample set dimension must be >= 1");
    require(points_.size() == weights_.size(), "points and weights must have equal length");
    for (const auto& p : points_) {
      require(p.size() == dim_, "sample point dimension mismatch");
      for (double v : p) {
        require(std::isfinite(v), "non-finite sample point");
        diameter_ = std::max(diameter_, std::abs(v));
      }
    }
    for (double w : weights_) {
      require(std::isfinite(w), "non-finite weight");
      maxAbsWeight_ = std::max(maxAbsWeight_, std::abs(w));
    }
  }

  // Unit weights.
  WeightedSampleSet(std::size_t dim, std::vector<Vec> points)
      : WeightedSampleSet(dim, points, Vec(points.size(), 1.0)) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return points_.size(); }
  const std::vector<Vec>& points() const { return points_; }
  const Vec& weights() const { return weights_; }
  double diameter() const { return diameter_; }  // max_b |b|_inf
  double maxAbsWeight() const { return maxAbsWeight_; }

  bool integral() const {
    for (const auto& p : points_)
      for (double v : p)
        if (!isIntegral(v)) return false;
    return true;
  }

  WeightedSampleSet withWeights(Vec w) const { return {dim_, points_, std::move(w)}; }

 private:
  std::size_t dim_ = 1;
  std::vector<Vec> points_;
  Vec weights_;
  double diameter_ = 0;
  double maxAbsWeight_ = 0;
};

// sum_b theta_b e(<xi, b>).
inline cplx weightedExpSum(const WeightedSampleSet& B, const Vec& xi, unsigned threads = 1) {
  require(xi.size() == B.dim(), "frequency dimension does not match the sample set");
  return blockSum<cplx>(
      B.size(),
      [&](std::size_t i) {
        const Vec& b = B.points()[i];
        long double p = 0;
        for (std::size_t j = 0; j < b.size(); ++j) p += mod1l(static_cast<long double>(xi[j]) * b[j]);
        return B.weights()[i] * el(p);
      },
      threads);
}

// [-N,N]^d with unit weights.
inline WeightedSampleSet latticeBox(std::int64_t N, std::size_t d) {
  require(N >= 1 && d >= 1, "lattice box needs N >= 1 and d >= 1");
  std::size_t side = static_cast<std::size_t>(2 * N + 1), total = 1;
  for (std::size_t i = 0; i < d; ++i) total *= side;
  std::vector<Vec> pts(total, Vec(d));
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t r = idx;
    for (std::size_t i = 0; i < d; ++i) {
      pts[idx][i] = static_cast<double>(static_cast<std::int64_t>(r % side) - N);
      r /= side;
    }
  }
  return {d, std::move(pts)};
}

// |sum over [-N,N]^d of e(<k/N, n>)| = prod_j (2N+1 if N | k_j else 1).
inline double boxLatticeClosedForm(std::int64_t N, const std::vector<std::int64_t>& k) {
  require(N >= 1, "N must be >= 1");
  double v = 1;
  for (auto kj : k) v *= (kj % N == 0) ? static_cast<double>(2 * N + 1) : 1.0;
  return v;
}

// {(n_1^{1+eps_1}, ..., n_d^{1+eps_d}) : 0 <= n_i < N}.
inline WeightedSampleSet powerSequence(std::int64_t N, const Vec& eps) {
  require(N >= 1, "N must be >= 1");
  require(!eps.empty(), "eps must be non-empty");
  for (double e : eps) require(e > 0, "eps entries must be positive");
  std::size_t d = eps.size(), total = 1;
  for (std::size_t i = 0; i < d; ++i) total *= static_cast<std::size_t>(N);
  std::vector<Vec> pts(total, Vec(d));
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t r = idx;
    for (std::size_t i = 0; i < d; ++i) {
      auto n = static_cast<double>(r % static_cast<std::size_t>(N));
      pts[idx][i] = std::pow(n, 1.0 + eps[i]);
      r /= static_cast<std::size_t>(N);
    }
  }
  return {d, std::move(pts)};
}

// One arithmetic piece of the n^{1+eps} approximation: for n in
// [first, last], b'_n = start + diff (n - anchor) with anchor = first.
struct ProgressionSegment {
  std::int64_t j = 0;
  std::int64_t anchor = 0;
  std::int64_t first = 0;
  std::int64_t last = 0;
  double start = 0;
  double diff = 0;
  double maxError = 0;  // max_n |n^{1+eps} - b'_n|
  double maxBound = 0;  // max_n eps (1+eps) anchor^{eps-1} (n - anchor)^2

  std::int64_t length() const { return last - first + 1; }
  double value(std::int64_t n) const { return start + diff * static_cast<double>(n - anchor); }
};

struct ProgressionApprox {
  std::vector<ProgressionSegment> segments;
  std::string warning;
};

// Segments anchored at k_j = ceil(j^a), j = 1, 2, ..., covering 1 <= n < N.
inline ProgressionApprox progressionApprox(std::int64_t N, double eps, double a) {
  require(N >= 2, "N must be >= 2");
  require(eps >= 0 && std::isfinite(eps), "eps must be finite and >= 0");
  require(a > 1, "progression exponent a must exceed 1");
  ProgressionApprox out;
  if (!(a < 2.0 / (1.0 + eps)))
    out.warning = "a outside the window 1 < a < 2/(1+eps); segment errors may not vanish";
  auto anchorOf = [&](std::int64_t j) { return static_cast<std::int64_t>(std::ceil(std::pow(static_cast<double>(j), a) - 1e-12)); };
  for (std::int64_t j = 1;; ++j) {
    std::int64_t k = anchorOf(j);
    if (k >= N) break;
    std::int64_t next = std::max(anchorOf(j + 1), k + 1);
    ProgressionSegment s;
    s.j = j;
    s.anchor = k;
    s.first = k;
    s.last = std::min(N, next) - 1;
    double kd = static_cast<double>(k);
    s.start = std::pow(kd, 1.0 + eps);
    s.diff = (1.0 + eps) * std::pow(kd, eps);
    for (std::int64_t n = s.first; n <= s.last; ++n) {
      double exact = std::pow(static_cast<double>(n), 1.0 + eps);
      s.maxError = std::max(s.maxError, std::abs(exact - s.value(n)));
      double dn = static_cast<double>(n - k);
      s.maxBound = std::max(s.maxBound, eps * (1 + eps) * std::pow(kd, eps - 1) * dn * dn);
    }
    out.segments.push_back(s);
  }
  return out;
}

// Variable parts of the analytic Weyl-sum bounds.
struct FejerBound {
  double xi = 1;
  double p = 0.5;
};
struct VdcPolyBound {
  int p = 2;
  double distToZ = 0.5;
};
struct VdcFracBound {
  double p = 1.5;
  double xi = 1;
};
using WeylBoundMode = std::variant<FejerBound, VdcPolyBound, VdcFracBound>;

inline double analyticWeylBound(const WeylBoundMode& mode, double N) {
  require(N >= 1, "N must be >= 1");
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, FejerBound>) {
          require(m.p > 0 && m.xi != 0, "fejer bound needs p > 0 and xi != 0");
          double f = m.xi * std::pow(N, m.p);
          double fp = m.xi * m.p * std::pow(N, m.p - 1);
          return (1.0 / std::abs(fp) + std::abs(f)) / N;
        } else if constexpr (std::is_same_v<T, VdcPolyBound>) {
          require(m.p >= 1, "vdcPoly needs an integer degree p >= 1");
          require(m.distToZ > 0 && m.distToZ <= 0.5, "vdcPoly needs distToZ in (0, 1/2]; integer xi has no bound");
          return std::pow(N, -std::pow(4.0, -m.p + 1)) / m.distToZ;
        } else {
          require(m.p > 0 && !isIntegral(m.p), "vdcFrac needs a positive non-integer p");
          require(m.xi != 0, "vdcFrac needs xi != 0");
          double c = std::ceil(m.p), ax = std::abs(m.xi);
          double inner = std::pow(N, c - m.p - 1) / ax + ax * std::pow(N, m.p - c);
          return std::pow(inner, 1.0 / (2 * c));
        }
      },
      mode);
}

// Decay exponent e with bound ~ N^{-e}.
inline double weylBoundExponent(const WeylBoundMode& mode) {
  return std::visit(
      [](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, FejerBound>) {
          return std::min(m.p, 1.0 - m.p);
        } else if constexpr (std::is_same_v<T, VdcPolyBound>) {
          return std::pow(4.0, -m.p + 1);
        } else {
          double c = std::ceil(m.p);
          return std::min(m.p + 1 - c, c - m.p) / (2 * c);
        }
      },
      mode);
}

// f(n) = sum_j coeffs[j] n^j.
struct PolynomialPhase {
  std::vector<long double> coeffs;
};
// f(n) = xi n^p.
struct PowerPhase {
  long double xi = 1;
  long double p = 1;
};
using WeylPhase = std::variant<PolynomialPhase, PowerPhase>;

inline long double phaseMod1(const WeylPhase& phase, std::uint64_t n) {
  return std::visit(
      [&](const auto& f) -> long double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, PolynomialPhase>) {
          long double s = 0, pw = 1;
          for (long double c : f.coeffs) {
            s += mod1l(c * pw);
            pw *= static_cast<long double>(n);
          }
          return mod1l(s);
        } else {
          if (n == 0) return f.p > 0 ? 0.0L : mod1l(f.xi);
          return mod1l(f.xi * std::pow(static_cast<long double>(n), f.p));
        }
      },
      phase);
}

// (1/N) sum_{n=0}^{N-1} e(f(n)).
inline cplx weylSum(const WeylPhase& phase, std::int64_t N, unsigned threads = 1) {
  require(N >= 1, "N must be >= 1");
  cplx s = blockSum<cplx>(
      static_cast<std::size_t>(N), [&](std::size_t n) { return el(phaseMod1(phase, n)); }, threads);
  return s / static_cast<double>(N);
}

struct PmOne {};
struct Bernoulli {
  double p = 0.5;
};
struct UniformDist {
  double lo = 0;
  double hi = 1;
};
using WeightDistribution = std::variant<PmOne, Bernoulli, UniformDist>;

// Parses a named bounded distribution; unbounded names are rejected.
inline WeightDistribution distributionFromName(const std::string& name, double p = 0.5, double lo = 0, double hi = 1) {
  if (name == "pmOne") return PmOne{};
  if (name == "bernoulli") {
    require(p >= 0 && p <= 1, "bernoulli p must lie in [0,1]");
    return Bernoulli{p};
  }
  if (name == "uniform") {
    require(std::isfinite(lo) && std::isfinite(hi) && lo <= hi, "uniform needs finite lo <= hi");
    return UniformDist{lo, hi};
  }
  if (name == "gaussian" || name == "normal" || name == "cauchy" || name == "exponential")
    throw ValidationError("unbounded weight distribution '" + name + "' is not allowed");
  throw ValidationError("unknown weight distribution '" + name + "'");
}

struct WeightDraw {
  Vec weights;
  double bound = 0;  // M with |theta| <= M almost surely
  std::uint64_t seed = 0;
};

// iid draws from RandomStream(seed): pmOne uses the top bit, the others the
// 53-bit uniform.
inline WeightDraw randomWeights(std::uint64_t seed, const WeightDistribution& dist, std::size_t count) {
  require(count >= 1, "count must be >= 1");
  RandomStream rng(seed);
  WeightDraw out{Vec(count), 0, seed};
  std::visit(
      [&](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, PmOne>) {
          out.bound = 1;
          for (auto& w : out.weights) w = (rng.bits() >> 63) ? 1.0 : -1.0;
        } else if constexpr (std::is_same_v<T, Bernoulli>) {
          require(d.p >= 0 && d.p <= 1, "bernoulli p must lie in [0,1]");
          out.bound = 1;
          for (auto& w : out.weights) w = rng.uniform() < d.p ? 1.0 : 0.0;
        } else {
          require(std::isfinite(d.lo) && std::isfinite(d.hi) && d.lo <= d.hi, "uniform needs finite lo <= hi");
          out.bound = std::max(std::abs(d.lo), std::abs(d.hi));
          for (auto& w : out.weights) w = rng.uniform(d.lo, d.hi);
        }
      },
      dist);
  return out;
}

// How the kernel-weighted integral of |S| is evaluated.
//  Periodized: for integer points and delta < 1 the kernel periodizes to the
//    constant 1/delta per axis, so Y = delta^{-d} int_{[0,1]^d} |S|, computed
//    with the periodic trapezoid rule on gridPerAxis points (0: 4N).
//  Truncated: Gauss-Legendre over |xi| <= xiMax (0: 50/delta) with the tail
//    bound reported as the error (d = 1 only).
struct YQuadrature {
  enum class Mode { Periodized, Truncated } mode = Mode::Periodized;
  std::size_t gridPerAxis = 0;
  double xiMax = 0;
};

struct YResult {
  double value = 0;
  double errorBound = 0;
};

namespace detail {

// int_{[0,1]^d} |sum_n theta_n e(<xi,n>)| for theta on [1,N]^d, row-major
// with the last axis fastest (d = 1 or 2).
inline double periodicMeanAbs(const Vec& theta, std::size_t N, std::size_t d, std::size_t M) {
  std::vector<cplx> table(M);
  for (std::size_t j = 0; j < M; ++j) table[j] = e(static_cast<double>(j) / static_cast<double>(M));
  if (d == 1) {
    // |S(-xi)| = |S(xi)| for real weights, so half the grid suffices.
    std::size_t half = M / 2;
    Accumulator acc;
    for (std::size_t j = 0; j <= half; ++j) {
      ComplexAccumulator s;
      std::size_t idx = j % M, step = j;
      for (std::size_t n = 0; n < N; ++n) {
        s.add(theta[n] * table[idx]);
        idx += step;
        if (idx >= M) idx -= M;
      }
      double w = (j == 0 || (M % 2 == 0 && j == half)) ? 1.0 : 2.0;
      acc.add(w * std::abs(s.value()));
    }
    return acc.value() / static_cast<double>(M);
  }
  // d = 2: partial transforms along the fast axis first.
  std::vector<cplx> partial(N * M);
  for (std::size_t n1 = 0; n1 < N; ++n1)
    for (std::size_t j2 = 0; j2 < M; ++j2) {
      ComplexAccumulator s;
      std::size_t idx = j2 % M;
      for (std::size_t n2 = 0; n2 < N; ++n2) {
        s.add(theta[n1 * N + n2] * table[idx]);
        idx += j2;
        if (idx >= M) idx -= M;
      }
      partial[n1 * M + j2] = s.value();
    }
  Accumulator acc;
  for (std::size_t j1 = 0; j1 < M; ++j1)
    for (std::size_t j2 = 0; j2 < M; ++j2) {
      ComplexAccumulator s;
      std::size_t idx = j1 % M;
      for (std::size_t n1 = 0; n1 < N; ++n1) {
        s.add(partial[n1 * M + j2] * table[idx]);
        idx += j1;
        if (idx >= M) idx -= M;
      }
      acc.add(std::abs(s.value()));
    }
  return acc.value() / static_cast<double>(M * M);
}

}  // namespace detail

// Y_{N,delta} = int |sum_{n in [1,N]^d} theta_n e(<xi,n>)| prod_j |F(chi_delta)(xi_j)| dxi,
// for several delta at once (the periodized |S| grid is shared).
inline std::vector<YResult> yStatistics(const Vec& theta, std::size_t d, const Vec& deltas, const YQuadrature& quad = {}) {
  require(d >= 1, "d must be >= 1");
  std::size_t N = d == 1 ? theta.size() : static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(theta.size()))));
  require(d <= 2, "Y statistic supports d = 1 and d = 2");
  require(d == 1 || N * N == theta.size(), "theta size must be N^d");
  require(N >= 1, "theta must be non-empty");
  for (double dl : deltas) require(dl > 0 && dl < 1, "delta must lie in (0,1)");
  std::vector<YResult> out(deltas.size());
  bool allZero = std::all_of(theta.begin(), theta.end(), [](double t) { return t == 0; });
  if (allZero) return out;

  if (quad.mode == YQuadrature::Mode::Periodized) {
    std::size_t M = quad.gridPerAxis ? quad.gridPerAxis : std::max<std::size_t>(64, 4 * N);
    double base = detail::periodicMeanAbs(theta, N, d, M);
    for (std::size_t i = 0; i < deltas.size(); ++i) out[i].value = base * std::pow(deltas[i], -static_cast<double>(d));
    return out;
  }

  require(d == 1, "truncated Y quadrature supports d = 1 only");
  double l1 = 0;
  for (double t : theta) l1 += std::abs(t);
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    double delta = deltas[i];
    double X = quad.xiMax > 0 ? quad.xiMax : 50.0 / delta;
    double panel = std::min(0.25, 1.0 / (2.0 * static_cast<double>(N)));
    auto S = [&](double xi) {
      ComplexAccumulator s;
      for (std::size_t n = 0; n < N; ++n) s.add(theta[n] * e(xi * static_cast<double>(n + 1)));
      return std::abs(s.value()) * kernelTransform(delta, xi);
    };
    out[i].value = integrate<double>(S, -X, X, panel);
    out[i].errorBound = l1 * kernelTailMass(delta, X);
    if (out[i].errorBound > 0.1 * out[i].value)
      throw NumericError("Y statistic tail bound exceeds 10% of the estimate; increase xiMax");
  }
  return out;
}

inline YResult yStatistic(const Vec& theta, std::size_t d, double delta, const YQuadrature& quad = {}) {
  return yStatistics(theta, d, Vec{delta}, quad)[0];
}

// int_0^1 |sin(pi L u) / sin(pi u)| du, integrated between consecutive zeros.
inline double dirichletL1(std::int64_t L) {
  require(L >= 1, "L must be >= 1");
  if (L == 1) return 1.0;
  const GaussRule& r = gaussRule<16>();
  double Ld = static_cast<double>(L);
  Accumulator acc;
  for (std::int64_t m = 0; m < L; ++m) {
    double lo = static_cast<double>(m) / Ld, hi = static_cast<double>(m + 1) / Ld;
    double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo), s = 0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) {
      double u = mid + half * r.nodes[i];
      s += r.weights[i] * std::abs(std::sin(kPi * Ld * u) / std::sin(kPi * u));
    }
    acc.add(s * half);
  }
  return acc.value();
}

// int_R |sum_{m<L} e(xi (start + m diff))| F(chi_delta)(xi) dxi for an
// arithmetic progression with diff >= delta; the kernel periodizes with
// period 1/diff, which turns the integral into dirichletL1(L) / delta.
inline double progressionKernelIntegral(std::int64_t L, double diff, double delta) {
  require(delta > 0 && diff >= delta, "progression kernel integral needs diff >= delta > 0");
  return dirichletL1(L) / delta;
}

// Same integral for an arbitrary 1-d sample set by truncated quadrature.
inline YResult kernelWeightedIntegral(const WeightedSampleSet& B, double delta, double xiMax = 0) {
  require(B.dim() == 1, "kernelWeightedIntegral supports d = 1");
  require(delta > 0, "delta must be positive");
  double X = xiMax > 0 ? xiMax : 50.0 / delta;
  double panel = std::min(0.25, 1.0 / (4.0 * std::max(1.0, B.diameter())));
  auto f = [&](double xi) { return std::abs(weightedExpSum(B, {xi})) * kernelTransform(delta, xi); };
  double l1 = 0;
  for (double w : B.weights()) l1 += std::abs(w);
  return {integrate<double>(f, -X, X, panel), l1 * kernelTailMass(delta, X)};
}

struct VdcSides {
  double lhs = 0;
  double rhs = 0;
};

// H^2 |sum u_n|^2 versus
// H (N+H-1) sum |u_n|^2 + 2 (N+H-1) sum_{h=1}^{H-1} (H-h) Re sum_{n=1}^{N-h} u_n conj(u_{n+h}).
inline VdcSides vanDerCorputSides(const std::vector<cplx>& u, std::size_t H) {
  std::size_t N = u.size();
  require(H >= 1 && H <= N, "van der Corput needs 1 <= H <= N");
  cplx s = 0;
  double sq = 0;
  for (const auto& v : u) {
    s += v;
    sq += std::norm(v);
  }
  double Hd = static_cast<double>(H), Nd = static_cast<double>(N);
  double corr = 0;
  for (std::size_t h = 1; h < H; ++h) {
    double re = 0;
    for (std::size_t n = 0; n + h < N; ++n) re += (u[n] * std::conj(u[n + h])).real();
    corr += (Hd - static_cast<double>(h)) * re;
  }
  return {Hd * Hd * std::norm(s), Hd * (Nd + Hd - 1) * sq + 2 * (Nd + Hd - 1) * corr};
}

// Columnar CSV: b_1..b_d,theta.
inline void writeSampleSetCsv(const WeightedSampleSet& B, std::ostream& os) {
  for (std::size_t j = 0; j < B.dim(); ++j) os << "b_" << (j + 1) << ",";
  os << "theta\n";
  char buf[64];
  for (std::size_t i = 0; i < B.size(); ++i) {
    for (double v : B.points()[i]) {
      std::snprintf(buf, sizeof buf, "%.17g,", v);
      os << buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g\n", B.weights()[i]);
    os << buf;
  }
}

inline WeightedSampleSet readSampleSetCsv(std::istream& is) {
  std::string line;
  require(static_cast<bool>(std::getline(is, line)), "empty sample set CSV");
  std::size_t cols = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  require(cols >= 2 && line.rfind("theta") == line.size() - 5, "sample set CSV header must be b_1..b_d,theta");
  std::vector<Vec> pts;
  Vec w;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    Vec row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    require(row.size() == cols, "sample set CSV row has the wrong number of columns");
    w.push_back(row.back());
    row.pop_back();
    pts.push_back(row);
  }
  return {cols - 1, std::move(pts), std::move(w)};
}

}  // namespace ergolab

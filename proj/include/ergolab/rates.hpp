// Exponent calculus for rate transfer and log-log power-law fitting.
//
// The closed-form maps are templates over the scalar type: instantiate with
// double, or with boost::rational<long long> for exact arithmetic on rational
// inputs.
#pragma once

#include <optional>
#include <string>

#include "core.hpp"

namespace ergolab {

template <class S = double>
struct ExponentInputs {
  S delta1{1};
  S delta2{1};
  S d{1};
  S K{0};
  S rho{1};
  S rhoPrime{1};
  S kappa{1};
  std::vector<S> eps;
};

template <class S>
struct TwistExponent {
  S delta;
  S kappaOpt;
  std::string branch;  // which term attains the minimum: "kappa1", "kappa3" or "kappa4"
};

namespace detail {
template <class S>
S smin(const S& a, const S& b) {
  return b < a ? b : a;
}
template <class S>
S smax(const S& a, const S& b) {
  return a < b ? b : a;
}
}  // namespace detail

// delta = min(d1/(2+d1), d1/(2(d+d1)), d1 d2/(2(K d + d1))), attained at
// kappaOpt = min(2/(2+d1), 1/(d+d1), d2/(K d + d1)) on the line II(k) = k d1/2.
template <class S>
TwistExponent<S> twistExponent(const ExponentInputs<S>& in) {
  require(S(0) < in.delta1 && S(0) < in.delta2, "delta1 and delta2 must be positive");
  require(!(in.d < S(1)) && !(in.K < S(0)), "need d >= 1 and K >= 0");
  S k1 = S(2) / (S(2) + in.delta1);
  S k3 = S(1) / (in.d + in.delta1);
  S k4 = in.delta2 / (in.K * in.d + in.delta1);
  TwistExponent<S> out{S(0), k1, "kappa1"};
  if (k3 < out.kappaOpt) out = {S(0), k3, "kappa3"};
  if (k4 < out.kappaOpt) out = {S(0), k4, "kappa4"};
  S t1 = in.delta1 / (S(2) + in.delta1);
  S t3 = in.delta1 / (S(2) * (in.d + in.delta1));
  S t4 = in.delta1 * in.delta2 / (S(2) * (in.K * in.d + in.delta1));
  out.delta = detail::smin(t1, detail::smin(t3, t4));
  return out;
}

// min(I, II, III, IV) at kappa for the lines I = 1 - k, II = k d1/2,
// III = (1 - k d)/2, IV = (d2 - k K d)/2.
template <class S>
S twistLinesAt(const ExponentInputs<S>& in, const S& k) {
  S I = (S(1) - k);
  S II = k * in.delta1 / S(2);
  S III = (S(1) - k * in.d) / S(2);
  S IV = (in.delta2 - k * in.K * in.d) / S(2);
  return detail::smin(detail::smin(I, II), detail::smin(III, IV));
}

template <class S>
struct DerivedExponents {
  S time1;
  S randomWeights;
};

// time1 = rho rho' kappa / (2d + rho rho'); randomWeights = kappa / (8d).
template <class S>
DerivedExponents<S> derivedExponents(const ExponentInputs<S>& in) {
  require(S(0) < in.kappa, "kappa must be positive");
  require(!(in.d < S(1)), "d must be >= 1");
  S rr = in.rho * in.rhoPrime;
  return {rr * in.kappa / (S(2) * in.d + rr), in.kappa / (S(8) * in.d)};
}

template <class S>
struct SparseWindow {
  bool feasible = false;
  bool condSum = false;      // 2 eps - kappa eps < 2d - 2 + kappa
  bool condProduct = false;  // (1+eps)(1-kappa) < d
  bool condEps = false;      // eps < 1
  std::string violated;
  S aLo{0};  // min(1, kappa / (d - (1+eps)(1-kappa)))
  S aHi{0};  // 2 / (1+eps)
  // Lower edge where all three exponent terms stay below d:
  // max(1, kappa / (d - (1+eps)(1-kappa))).
  S aLoEffective{0};
};

template <class S>
SparseWindow<S> sparseWindow(const S& eps, const S& kappa, const S& d) {
  require(S(0) < kappa && kappa < S(1), "kappa must lie in (0,1)");
  require(S(0) < eps, "eps must be positive");
  SparseWindow<S> w;
  w.condSum = S(2) * eps - kappa * eps < S(2) * d - S(2) + kappa;
  w.condProduct = (S(1) + eps) * (S(1) - kappa) < d;
  w.condEps = eps < S(1);
  if (!w.condEps)
    w.violated = "eps < 1";
  else if (!w.condProduct)
    w.violated = "(1+eps)(1-kappa) < d";
  else if (!w.condSum)
    w.violated = "2 eps - kappa eps < 2d - 2 + kappa";
  w.feasible = w.condSum && w.condProduct && w.condEps;
  if (w.feasible) {
    S edge = kappa / (d - (S(1) + eps) * (S(1) - kappa));
    w.aLo = detail::smin(S(1), edge);
    w.aHi = S(2) / (S(1) + eps);
    w.aLoEffective = detail::smax(S(1), edge);
  }
  return w;
}

// The three exponents bounding the unnormalized sparse sum, at a.
struct SparseTerms {
  double progression = 0;  // d + 1 + max_i (eps_i - 2/a_i)
  double count = 0;        // d max_i (1/a_i)
  double twisted = 0;      // d - d/(d + rr) + max_i((1+eps_i)(1-kappa) + kappa/a_i)/(d + rr)
};

inline SparseTerms sparseTerms(const ExponentInputs<double>& in, const Vec& a) {
  require(a.size() == in.eps.size() && !a.empty(), "need one a_i per eps_i");
  double rr = in.rho * in.rhoPrime, d = in.d;
  SparseTerms t{-INFINITY, -INFINITY, -INFINITY};
  double m3 = -INFINITY;
  for (std::size_t i = 0; i < a.size(); ++i) {
    t.progression = std::max(t.progression, in.eps[i] - 2.0 / a[i]);
    t.count = std::max(t.count, 1.0 / a[i]);
    m3 = std::max(m3, (1 + in.eps[i]) * (1 - in.kappa) + in.kappa / a[i]);
  }
  t.progression += d + 1;
  t.count *= d;
  t.twisted = d - d / (d + rr) + m3 / (d + rr);
  return t;
}

inline double sparseExponentAt(const ExponentInputs<double>& in, const Vec& a) {
  SparseTerms t = sparseTerms(in, a);
  return in.d - std::max({t.progression, t.count, t.twisted});
}

struct SparseExponent {
  double kappaPrime = 0;
  Vec a;
};

// kappa' = d - max(three exponents) at a given a, each a_i required inside
// its window (aLo, aHi).
inline SparseExponent sparseExponent(const ExponentInputs<double>& in, const Vec& a) {
  require(a.size() == in.eps.size() && !a.empty(), "need one a_i per eps_i");
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto w = sparseWindow(in.eps[i], in.kappa, in.d);
    require(w.feasible, "sparse window is empty: violates " + w.violated);
    require(w.aLo < a[i] && a[i] < w.aHi, "a outside its window");
  }
  return {sparseExponentAt(in, a), a};
}

// The exponent splits as max_i h_i(a_i), each h_i the max of one increasing
// and two decreasing terms, so kappa' is maximized by minimizing every h_i
// over its window independently (golden section on a quasi-convex function).
inline SparseExponent sparseExponentOptimize(const ExponentInputs<double>& in, std::size_t iters = 200) {
  std::size_t n = in.eps.size();
  require(n >= 1, "eps must be non-empty");
  const double r = (std::sqrt(5.0) - 1) / 2;
  Vec a(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto w = sparseWindow(in.eps[i], in.kappa, in.d);
    require(w.feasible, "sparse window is empty: violates " + w.violated);
    ExponentInputs<double> one = in;
    one.eps = {in.eps[i]};
    auto h = [&](double v) { return -sparseExponentAt(one, {v}); };
    double l = w.aLo, u = w.aHi;
    double c = u - r * (u - l), d = l + r * (u - l), hc = h(c), hd = h(d);
    for (std::size_t k = 0; k < iters && u - l > 1e-15; ++k) {
      if (hc <= hd) {
        u = d;
        d = c;
        hd = hc;
        c = u - r * (u - l);
        hc = h(c);
      } else {
        l = c;
        c = d;
        hc = hd;
        d = l + r * (u - l);
        hd = h(d);
      }
    }
    a[i] = hc <= hd ? c : d;
  }
  return {sparseExponentAt(in, a), a};
}

struct RateFit {
  double slope = 0;
  double intercept = 0;
  double rSquared = 0;
  double tMin = 0;
  double tMax = 0;
  std::size_t pointCount = 0;
  std::size_t dropped = 0;  // non-positive values skipped
};

// OLS of log(value) on log(T); non-positive values are dropped and counted.
inline RateFit fitPowerLaw(const Vec& T, const Vec& values) {
  require(T.size() == values.size(), "T and values must have equal length");
  RateFit fit;
  Vec x, y;
  for (std::size_t i = 0; i < T.size(); ++i) {
    if (values[i] > 0 && T[i] > 0 && std::isfinite(values[i])) {
      x.push_back(std::log(T[i]));
      y.push_back(std::log(values[i]));
    } else {
      ++fit.dropped;
    }
  }
  require(x.size() >= 3, "power-law fit needs at least 3 positive samples");
  double n = static_cast<double>(x.size()), mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  require(sxx > 0, "power-law fit needs at least two distinct T values");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ssr += r * r;
  }
  fit.rSquared = syy > 0 ? std::clamp(1.0 - ssr / syy, 0.0, 1.0) : 1.0;
  fit.tMin = std::exp(*std::min_element(x.begin(), x.end()));
  fit.tMax = std::exp(*std::max_element(x.begin(), x.end()));
  fit.pointCount = x.size();
  return fit;
}

}  // namespace ergolab

// Coefficient-space dynamics of trigonometric polynomials: exact
// correlations, composition with the action, and continuity moduli.
#pragma once

#include <optional>

#include "fourier.hpp"
#include "systems.hpp"

namespace ergolab {

// e_k o phi_g = e(phase) e_{k'}. Phases are returned mod 1 in long double.
struct FrequencyImage {
  Freq k;
  long double phase = 0;
  bool overflow = false;  // image frequency left the int64 range
};

namespace detail {

inline FrequencyImage rotationImage(const Vec& alpha, Action action, const Freq& k, const Vec& g) {
  FrequencyImage out{k, 0, false};
  for (std::size_t i = 0; i < k.size(); ++i) {
    long double t = action == Action::Componentwise ? g[i] : g[0];
    out.phase += mod1l(static_cast<long double>(k[i]) * mod1l(t * static_cast<long double>(alpha[i])));
  }
  out.phase = mod1l(out.phase);
  return out;
}

inline FrequencyImage skewImage(double eta1, double eta2, const Freq& k, std::int64_t n) {
  // e(k1 x + k2 y) o R^n = e((k1 + n k2) x + k2 y + n k1 eta1 + n k2 eta2 + C(n,2) k2 eta1).
  FrequencyImage out;
  __int128 k1 = static_cast<__int128>(k[0]) + static_cast<__int128>(n) * k[1];
  if (k1 > INT64_MAX || k1 < INT64_MIN) return {k, 0, true};
  out.k = {static_cast<std::int64_t>(k1), k[1]};
  long double ln = static_cast<long double>(n);
  long double binom = static_cast<long double>(static_cast<__int128>(n) * (n - 1) / 2);
  long double p = mod1l(ln * static_cast<long double>(k[0]) * eta1) + mod1l(ln * static_cast<long double>(k[1]) * eta2) +
                  mod1l(mod1l(binom * static_cast<long double>(eta1)) * static_cast<long double>(k[1]));
  out.phase = mod1l(p);
  return out;
}

inline FrequencyImage toralImage(const ToralAutomorphism& a, const Freq& k, std::int64_t n) {
  // e_k(M x) = e_{M^T k}(x); negative n uses the inverse.
  const IntMatrix& m = n >= 0 ? a.matrix : a.inverse;
  std::int64_t steps = n >= 0 ? n : -n;
  std::vector<__int128> cur(k.begin(), k.end()), nxt(k.size());
  for (std::int64_t s = 0; s < steps; ++s) {
    for (std::size_t j = 0; j < cur.size(); ++j) {
      __int128 acc = 0;
      for (std::size_t i = 0; i < cur.size(); ++i) acc += static_cast<__int128>(m[i][j]) * cur[i];
      if (acc > INT64_MAX || acc < INT64_MIN) return {k, 0, true};
      nxt[j] = acc;
    }
    cur.swap(nxt);
  }
  return {Freq(cur.begin(), cur.end()), 0, false};
}

}  // namespace detail

inline bool hasExactOracle(const SystemSpec& spec) {
  if (spec.as<SuspensionFlow>() || spec.as<TimeChange>()) return false;
  if (const auto* t = spec.as<TimeOneMap>()) return hasExactOracle(*t->flow);
  if (const auto* p = spec.as<ProductSystem>()) {
    for (const auto& f : p->factors)
      if (!hasExactOracle(f)) return false;
  }
  return true;
}

// Image of the character e_k under composition with phi_g.
inline FrequencyImage transformFrequency(const SystemSpec& spec, const Freq& k, const GroupElement& g) {
  require(k.size() == spec.spaceDim(), "frequency dimension does not match the system");
  require(g.size() == spec.groupDim(), "group element dimension does not match the system");
  if (spec.discrete())
    for (double v : g) require(isIntegral(v), "non-integer time supplied to a discrete system");
  return std::visit(
      [&](const auto& s) -> FrequencyImage {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Rotation> || std::is_same_v<T, LinearFlow>) {
          return detail::rotationImage(s.alpha, s.action, k, g);
        } else if constexpr (std::is_same_v<T, SkewShift>) {
          return detail::skewImage(s.eta1, s.eta2, k, static_cast<std::int64_t>(g[0]));
        } else if constexpr (std::is_same_v<T, HeisenbergReturnMap>) {
          SkewShift sk = s.asSkewShift();
          return detail::skewImage(sk.eta1, sk.eta2, k, static_cast<std::int64_t>(g[0]));
        } else if constexpr (std::is_same_v<T, ToralAutomorphism>) {
          return detail::toralImage(s, k, static_cast<std::int64_t>(g[0]));
        } else if constexpr (std::is_same_v<T, ProductSystem>) {
          FrequencyImage out;
          std::size_t gi = 0, xi = 0;
          for (const auto& f : s.factors) {
            Freq kp(k.begin() + xi, k.begin() + xi + f.spaceDim());
            Vec gp(g.begin() + gi, g.begin() + gi + f.groupDim());
            FrequencyImage im = transformFrequency(f, kp, gp);
            if (im.overflow) return {k, 0, true};
            out.k.insert(out.k.end(), im.k.begin(), im.k.end());
            out.phase += im.phase;
            gi += f.groupDim();
            xi += f.spaceDim();
          }
          out.phase = mod1l(out.phase);
          return out;
        } else if constexpr (std::is_same_v<T, TimeOneMap>) {
          return transformFrequency(*s.flow, k, g);
        } else {
          throw ValidationError("no exact oracle for " + spec.typeName() + "; use Monte Carlo");
        }
      },
      spec.variant());
}

// f o phi_g as a trigonometric polynomial. Frequencies whose image overflows
// int64 raise a NumericError.
inline FourierObservable compose(const SystemSpec& spec, const FourierObservable& f, const GroupElement& g) {
  require(f.dim() == spec.spaceDim(), "observable dimension does not match the system");
  FourierObservable out(f.dim(), f.realValued(), f.meanZero());
  for (const auto& [k, a] : f.coeffs()) {
    FrequencyImage im = transformFrequency(spec, k, g);
    if (im.overflow) throw NumericError("frequency image overflowed int64");
    out.addUnchecked(im.k, a * el(im.phase));
  }
  return out;
}

// <f o phi_t, g> = sum_k a_k e(phase_k) conj(b_{k'}).
inline cplx exactCorrelation(const SystemSpec& spec, const FourierObservable& f, const FourierObservable& g,
                             const GroupElement& t) {
  require(f.dim() == spec.spaceDim() && g.dim() == spec.spaceDim(), "observable dimension does not match the system");
  ComplexAccumulator acc;
  for (const auto& [k, a] : f.coeffs()) {
    FrequencyImage im = transformFrequency(spec, k, t);
    if (im.overflow) continue;  // |k'| beyond int64 cannot meet g's finite support
    cplx b = g.coefficient(im.k);
    if (b != cplx{}) acc.add(a * el(im.phase) * std::conj(b));
  }
  return acc.value();
}

struct MonteCarloEstimate {
  cplx mean;
  double stdErrRe = 0;
  double stdErrIm = 0;
  std::size_t samples = 0;
};

// Sample mean of f(phi_t x) conj(g(x)) over uniform x.
inline MonteCarloEstimate monteCarloCorrelation(const SystemSpec& spec, const FourierObservable& f,
                                                const FourierObservable& g, const GroupElement& t, std::size_t samples,
                                                std::uint64_t seed) {
  require(samples >= 2, "Monte Carlo needs at least two samples");
  RandomStream rng(seed, 0x6d63);
  ComplexAccumulator sum;
  Accumulator sre2, sim2;
  for (std::size_t i = 0; i < samples; ++i) {
    StatePoint x = randomState(spec, rng);
    cplx v = evaluate(f, evolve(spec, x, t)) * std::conj(evaluate(g, x));
    sum.add(v);
    sre2.add(v.real() * v.real());
    sim2.add(v.imag() * v.imag());
  }
  double n = static_cast<double>(samples);
  cplx mean = sum.value() / n;
  double vre = std::max(0.0, (sre2.value() / n - mean.real() * mean.real()) * n / (n - 1));
  double vim = std::max(0.0, (sim2.value() / n - mean.imag() * mean.imag()) * n / (n - 1));
  return {mean, std::sqrt(vre / n), std::sqrt(vim / n), samples};
}

// Bound on max_{|t|_inf < delta} sup_x |f(x) - f(phi_t x)|, from the
// surrogate norm with r = 1 times the flow speed. Flows with jumps get the
// trivial bound 2 sum |a_k|.
inline double modulus(const SystemSpec& spec, const FourierObservable& f, double delta) {
  require(!spec.discrete(), "modulus of continuity needs a continuous system");
  require(delta >= 0, "delta must be non-negative");
  double trivial = 2.0 * f.supBound();
  double speed = 0;
  if (const auto* lf = spec.as<LinearFlow>()) {
    for (double a : lf->alpha) speed += std::abs(a);
  } else if (const auto* tc = spec.as<TimeChange>()) {
    if (const auto* lf2 = tc->base->as<LinearFlow>()) {
      for (double a : lf2->alpha) speed += std::abs(a);
      speed /= std::max(tc->tau.lowerBound(), tc->tau.gridMin * 0.5);
    } else {
      return trivial;
    }
  } else {
    return trivial;
  }
  return std::min(trivial, kTwoPi * delta * speed * surrogateNorm(f, 1.0));
}

}  // namespace ergolab

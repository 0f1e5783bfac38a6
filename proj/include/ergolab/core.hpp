// Shared numeric primitives: errors, characters e(x), compensated sums,
// Gauss-Legendre panels and the seeded random stream.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

namespace ergolab {

using cplx = std::complex<double>;
using Vec = std::vector<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input: dimensions, ranges, unsupported variants.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A numerical procedure failed to reach its tolerance.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Reading or writing a file failed.
class IoError : public Error {
 public:
  using Error::Error;
};

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

// Fractional part in [0,1).
inline double mod1(double x) {
  double r = x - std::floor(x);
  return r >= 1.0 ? 0.0 : r;
}

inline long double mod1l(long double x) {
  long double r = x - std::floor(x);
  return r >= 1.0L ? 0.0L : r;
}

inline bool isIntegral(double t) { return std::isfinite(t) && t == std::nearbyint(t); }

// Distance from x to the nearest integer.
inline double distToZ(double x) {
  double r = mod1(x);
  return std::min(r, 1.0 - r);
}

// Signed torus difference in [-1/2, 1/2).
inline double torusDiff(double a, double b) {
  double r = mod1(a - b + 0.5) - 0.5;
  return r;
}

// e(x) = exp(2 pi i x) with the argument reduced mod 1 first.
inline cplx e(double x) {
  double r = mod1(x);
  return {std::cos(kTwoPi * r), std::sin(kTwoPi * r)};
}

inline cplx el(long double x) { return e(static_cast<double>(mod1l(x))); }

// Neumaier-compensated accumulator.
class Accumulator {
 public:
  void add(double v) {
    double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

class ComplexAccumulator {
 public:
  void add(cplx v) {
    re_.add(v.real());
    im_.add(v.imag());
  }
  cplx value() const { return {re_.value(), im_.value()}; }

 private:
  Accumulator re_, im_;
};

inline constexpr std::size_t kBlock = 1024;

// Pairwise reduction over a fixed list of partial sums.
template <class T>
T pairwiseReduce(std::vector<T> parts) {
  if (parts.empty()) return T{};
  while (parts.size() > 1) {
    std::vector<T> next((parts.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < parts.size(); i += 2) next[i / 2] = parts[i] + parts[i + 1];
    if (parts.size() % 2) next.back() = parts.back();
    parts.swap(next);
  }
  return parts[0];
}

inline unsigned hardwareThreads() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : n;
}

// Sum term(i) for i in [0,n): compensated within fixed-size blocks, pairwise
// across blocks. The block layout does not depend on the thread count, so the
// result is bit-identical for any number of workers.
template <class T, class F>
T blockSum(std::size_t n, F&& term, unsigned threads = 1) {
  std::size_t nb = (n + kBlock - 1) / kBlock;
  std::vector<T> parts(nb);
  auto work = [&](std::size_t b) {
    std::conditional_t<std::is_same_v<T, cplx>, ComplexAccumulator, Accumulator> acc;
    std::size_t hi = std::min(n, (b + 1) * kBlock);
    for (std::size_t i = b * kBlock; i < hi; ++i) acc.add(term(i));
    parts[b] = acc.value();
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(nb)));
  if (threads <= 1) {
    for (std::size_t b = 0; b < nb; ++b) work(b);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < threads; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t b = w; b < nb; b += threads) work(b);
      });
  }
  return pairwiseReduce(std::move(parts));
}

// Gauss-Legendre rule on [-1,1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

template <unsigned N>
const GaussRule& gaussRule() {
  static const GaussRule rule = [] {
    using G = boost::math::quadrature::gauss<double, N>;
    GaussRule r;
    const auto& x = G::abscissa();
    const auto& w = G::weights();
    for (std::size_t i = x.size(); i-- > 0;) {
      if (x[i] == 0.0) continue;
      r.nodes.push_back(-x[i]);
      r.weights.push_back(w[i]);
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      r.nodes.push_back(x[i]);
      r.weights.push_back(w[i]);
    }
    std::vector<std::size_t> idx(r.nodes.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return r.nodes[a] < r.nodes[b]; });
    GaussRule s;
    for (auto i : idx) {
      s.nodes.push_back(r.nodes[i]);
      s.weights.push_back(r.weights[i]);
    }
    return s;
  }();
  return rule;
}

inline const GaussRule& defaultRule() { return gaussRule<8>(); }

// Composite Gauss-Legendre on [a,b] with panels no wider than maxPanel.
template <class T, class F>
T integrate(F&& f, double a, double b, double maxPanel, const GaussRule& rule = defaultRule()) {
  if (a == b) return T{};
  double len = b - a;
  auto panels = static_cast<std::size_t>(std::ceil(std::abs(len) / maxPanel));
  panels = std::max<std::size_t>(panels, 1);
  double h = len / static_cast<double>(panels);
  return blockSum<T>(panels, [&](std::size_t p) {
    double lo = a + h * static_cast<double>(p);
    double mid = lo + 0.5 * h;
    T s{};
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
      s += rule.weights[i] * f(mid + 0.5 * h * rule.nodes[i]);
    return s * (0.5 * h);
  });
}

// Seeded stream over mt19937_64. The engine is fed by std::seed_seq from
// (seed, stream), both fully specified by the standard, and doubles are taken
// from the top 53 bits, so draws are identical on every conforming platform.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed, std::uint64_t stream = 0) : seed_(seed), stream_(stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      0x9e3779b9u};
    engine_.seed(seq);
  }

  std::uint64_t bits() { return engine_(); }
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t seed() const { return seed_; }

  // Independent child stream derived from the parent seed.
  RandomStream split(std::uint64_t id) const {
    return RandomStream(seed_, stream_ * 0x100000001b3ull + 0x5bd1e995ull * (id + 1));
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

}  // namespace ergolab

// Trigonometric polynomials f(x) = sum_k a_k e(<k,x>) on the d-torus.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "core.hpp"

namespace ergolab {

using Freq = std::vector<std::int64_t>;

struct StatePoint {
  Vec coords;
  std::optional<double> height;
};

class FourierObservable {
 public:
  FourierObservable() = default;
  explicit FourierObservable(std::size_t dim, bool realValued = false, bool meanZero = false)
      : dim_(dim), realValued_(realValued), meanZero_(meanZero) {}

  // Builds and validates. Repeated frequencies accumulate.
  static FourierObservable fromCoefficients(std::size_t dim, const std::vector<std::pair<Freq, cplx>>& coeffs,
                                            bool realValued = false, bool meanZero = false) {
    FourierObservable f(dim, realValued, meanZero);
    for (const auto& [k, a] : coeffs) f.addUnchecked(k, a);
    f.prune();
    f.validate();
    return f;
  }

  // The character e_k with amplitude a.
  static FourierObservable character(const Freq& k, cplx a = 1.0) {
    return fromCoefficients(k.size(), {{k, a}});
  }

  // a e_k + conj(a) e_{-k}, real valued.
  static FourierObservable cosine(const Freq& k, cplx a = 1.0) {
    Freq m(k.size());
    for (std::size_t i = 0; i < k.size(); ++i) m[i] = -k[i];
    return fromCoefficients(k.size(), {{k, a}, {m, std::conj(a)}}, true);
  }

  std::size_t dim() const { return dim_; }
  bool realValued() const { return realValued_; }
  bool meanZero() const { return meanZero_; }
  const std::map<Freq, cplx>& coeffs() const { return coeffs_; }
  bool isZero() const { return coeffs_.empty(); }

  cplx coefficient(const Freq& k) const {
    auto it = coeffs_.find(k);
    return it == coeffs_.end() ? cplx{} : it->second;
  }

  // Sum of |a_k|; an upper bound for the sup norm.
  double supBound() const {
    double s = 0;
    for (const auto& [k, a] : coeffs_) s += std::abs(a);
    return s;
  }

  // 2*pi * sum |a_k| |k|_1: Lipschitz constant with respect to the sup-distance on the torus.
  double lipschitzBound() const {
    double s = 0;
    for (const auto& [k, a] : coeffs_) {
      double l1 = 0;
      for (auto v : k) l1 += std::abs(static_cast<double>(v));
      s += std::abs(a) * l1;
    }
    return kTwoPi * s;
  }

  double l2NormSquared() const {
    Accumulator acc;
    for (const auto& [k, a] : coeffs_) acc.add(std::norm(a));
    return acc.value();
  }

  std::int64_t maxFrequency() const {
    std::int64_t m = 0;
    for (const auto& [k, a] : coeffs_)
      for (auto v : k) m = std::max<std::int64_t>(m, v < 0 ? -v : v);
    return m;
  }

  void validate() const {
    for (const auto& [k, a] : coeffs_) {
      require(k.size() == dim_, "frequency dimension does not match observable dimension");
      require(std::isfinite(a.real()) && std::isfinite(a.imag()), "non-finite coefficient");
    }
    if (meanZero_) require(std::abs(coefficient(Freq(dim_, 0))) == 0.0, "mean-zero observable has a_0 != 0");
    if (realValued_) {
      double scale = std::max(1.0, supBound());
      for (const auto& [k, a] : coeffs_) {
        Freq m(k.size());
        for (std::size_t i = 0; i < k.size(); ++i) m[i] = -k[i];
        require(std::abs(coefficient(m) - std::conj(a)) <= 1e-12 * scale,
                "real-valued observable needs a_{-k} = conj(a_k)");
      }
    }
  }

  // Pointwise product in coefficient space.
  friend FourierObservable operator*(const FourierObservable& f, const FourierObservable& g) {
    require(f.dim_ == g.dim_, "dimension mismatch in product");
    FourierObservable h(f.dim_, f.realValued_ && g.realValued_);
    for (const auto& [k, a] : f.coeffs_)
      for (const auto& [l, b] : g.coeffs_) {
        Freq s(k.size());
        for (std::size_t i = 0; i < k.size(); ++i) s[i] = k[i] + l[i];
        h.addUnchecked(s, a * b);
      }
    h.prune();
    return h;
  }

  void addUnchecked(const Freq& k, cplx a) { coeffs_[k] += a; }

 private:
  void prune() {
    for (auto it = coeffs_.begin(); it != coeffs_.end();) {
      if (it->second == cplx{})
        it = coeffs_.erase(it);
      else
        ++it;
    }
  }

  std::size_t dim_ = 0;
  std::map<Freq, cplx> coeffs_;
  bool realValued_ = false;
  bool meanZero_ = false;
};

inline long double phaseOf(const Freq& k, const Vec& x) {
  long double p = 0;
  for (std::size_t i = 0; i < k.size(); ++i) p += static_cast<long double>(k[i]) * x[i];
  return p;
}

inline cplx evaluate(const FourierObservable& f, const Vec& x) {
  require(x.size() == f.dim(), "point dimension does not match observable dimension");
  ComplexAccumulator acc;
  for (const auto& [k, a] : f.coeffs()) acc.add(a * el(phaseOf(k, x)));
  return acc.value();
}

inline cplx evaluate(const FourierObservable& f, const StatePoint& x) { return evaluate(f, x.coords); }

// ||f||_B = sum_k |a_k| (1 + |k|_inf)^r.
inline double surrogateNorm(const FourierObservable& f, double r) {
  require(std::isfinite(r) && r >= 0, "surrogate norm exponent must be finite and >= 0");
  Accumulator acc;
  for (const auto& [k, a] : f.coeffs()) {
    std::int64_t m = 0;
    for (auto v : k) m = std::max<std::int64_t>(m, v < 0 ? -v : v);
    acc.add(std::abs(a) * std::pow(1.0 + static_cast<double>(m), r));
  }
  return acc.value();
}

// c + Re f(x), used for suspension roofs and time-change speeds.
struct PositiveFunction {
  double constant = 1.0;
  FourierObservable f;
  double gridMin = 1.0;  // minimum seen on the construction grid
  double gridMax = 1.0;

  double operator()(const Vec& x) const {
    return f.isZero() ? constant : constant + evaluate(f, x).real();
  }
  bool isConstant() const { return f.isZero(); }
  // Guaranteed bounds from the coefficient sum.
  double lowerBound() const { return constant - f.supBound(); }
  double upperBound() const { return constant + f.supBound(); }
};

// Checks positivity on a dense grid (tensor grid for d <= 3, seeded scatter
// otherwise) and records the observed range.
inline PositiveFunction makePositiveFunction(double constant, FourierObservable f, std::size_t dim) {
  require(std::isfinite(constant), "non-finite constant");
  if (f.isZero()) f = FourierObservable(dim);
  require(f.dim() == dim, "positive function dimension mismatch");
  PositiveFunction p{constant, std::move(f), constant, constant};
  if (!p.f.isZero()) {
    double lo = INFINITY, hi = -INFINITY;
    auto visit = [&](const Vec& x) {
      double v = p(x);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    };
    std::size_t per = dim == 1 ? 4096 : dim == 2 ? 96 : dim == 3 ? 24 : 0;
    if (per > 0) {
      std::size_t total = 1;
      for (std::size_t i = 0; i < dim; ++i) total *= per;
      Vec x(dim);
      for (std::size_t idx = 0; idx < total; ++idx) {
        std::size_t r = idx;
        for (std::size_t i = 0; i < dim; ++i) {
          x[i] = static_cast<double>(r % per) / static_cast<double>(per);
          r /= per;
        }
        visit(x);
      }
    } else {
      RandomStream rng(0x706f73u);
      Vec x(dim);
      for (int s = 0; s < 20000; ++s) {
        for (auto& v : x) v = rng.uniform();
        visit(x);
      }
    }
    p.gridMin = lo;
    p.gridMax = hi;
  }
  require(p.gridMin > 0, "function must be strictly positive on the evaluation grid");
  return p;
}

}  // namespace ergolab

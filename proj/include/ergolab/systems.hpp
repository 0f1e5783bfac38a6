// Group actions on tori and suspensions.
#pragma once

#include <memory>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "core.hpp"
#include "fourier.hpp"

namespace ergolab {

// How a translation vector alpha acts: componentwise gives a Z^D (or R^D)
// action n -> x + (n_i alpha_i)_i; diagonal gives a one-parameter action
// n -> x + n alpha.
enum class Action { Componentwise, Diagonal };

class SystemSpec;
using SystemPtr = std::shared_ptr<const SystemSpec>;
using IntMatrix = std::vector<std::vector<std::int64_t>>;

struct Rotation {
  Vec alpha;
  Action action = Action::Componentwise;
};

struct LinearFlow {
  Vec alpha;
  Action action = Action::Diagonal;
};

struct SkewShift {
  double eta1 = 0;
  double eta2 = 0;
};

struct HeisenbergReturnMap {
  double wa = 0;
  double wb = 1;
  double wc = 0;
  SkewShift asSkewShift() const { return {wa / wb, wc / wb + wa / (2 * wb)}; }
};

struct ToralAutomorphism {
  IntMatrix matrix;
  IntMatrix inverse;
  double lambdaMax = 1;  // spectral radius
};

struct ProductSystem {
  std::vector<SystemSpec> factors;
};

struct SuspensionFlow {
  SystemPtr base;
  PositiveFunction roof;
};

struct TimeChange {
  SystemPtr base;
  PositiveFunction tau;
  double quadStep = 1e-3;
  double rootTol = 1e-10;
};

// A flow sampled at integer times.
struct TimeOneMap {
  SystemPtr flow;
};

class SystemSpec {
 public:
  using Variant = std::variant<Rotation, LinearFlow, SkewShift, HeisenbergReturnMap, ToralAutomorphism, ProductSystem,
                               SuspensionFlow, TimeChange, TimeOneMap>;

  SystemSpec() : v_(Rotation{{0.0}}) {}
  explicit SystemSpec(Variant v) : v_(std::move(v)) { validate(); }

  static SystemSpec rotation(Vec alpha, Action a = Action::Componentwise) { return SystemSpec(Rotation{std::move(alpha), a}); }
  static SystemSpec linearFlow(Vec alpha, Action a = Action::Diagonal) { return SystemSpec(LinearFlow{std::move(alpha), a}); }
  static SystemSpec skewShift(double eta1, double eta2) { return SystemSpec(SkewShift{eta1, eta2}); }
  static SystemSpec heisenberg(double wa, double wb, double wc) { return SystemSpec(HeisenbergReturnMap{wa, wb, wc}); }
  static SystemSpec toral(const IntMatrix& m) { return SystemSpec(ToralAutomorphism{m, {}, 1}); }
  static SystemSpec product(std::vector<SystemSpec> factors) { return SystemSpec(ProductSystem{std::move(factors)}); }
  static SystemSpec suspension(const SystemSpec& base, double c, FourierObservable f = {}) {
    return SystemSpec(SuspensionFlow{std::make_shared<const SystemSpec>(base),
                                     makePositiveFunction(c, std::move(f), base.spaceDim())});
  }
  static SystemSpec timeChange(const SystemSpec& base, double c, FourierObservable f = {}, double quadStep = 1e-3,
                               double rootTol = 1e-10) {
    return SystemSpec(TimeChange{std::make_shared<const SystemSpec>(base),
                                 makePositiveFunction(c, std::move(f), base.spaceDim()), quadStep, rootTol});
  }
  static SystemSpec timeOne(const SystemSpec& flow) { return SystemSpec(TimeOneMap{std::make_shared<const SystemSpec>(flow)}); }

  const Variant& variant() const { return v_; }
  template <class T>
  const T* as() const {
    return std::get_if<T>(&v_);
  }

  std::size_t groupDim() const { return groupDim_; }
  std::size_t spaceDim() const { return spaceDim_; }
  bool discrete() const { return discrete_; }
  bool hasHeight() const { return hasHeight_; }

  std::string typeName() const {
    static const char* names[] = {"Rotation",          "LinearFlow",    "SkewShift",
                                  "HeisenbergReturnMap", "ToralAutomorphism", "ProductSystem",
                                  "SuspensionFlow",    "TimeChange",    "TimeOneMap"};
    return names[v_.index()];
  }

 private:
  void validate();

  Variant v_;
  std::size_t groupDim_ = 1;
  std::size_t spaceDim_ = 1;
  bool discrete_ = true;
  bool hasHeight_ = false;
};

namespace detail {

inline IntMatrix multiply(const IntMatrix& a, const IntMatrix& b) {
  std::size_t n = a.size();
  IntMatrix c(n, std::vector<std::int64_t>(n, 0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t j = 0; j < n; ++j) c[i][j] += a[i][k] * b[k][j];
  return c;
}

// Exact determinant by fraction-free elimination.
inline __int128 determinant(const IntMatrix& m) {
  std::size_t n = m.size();
  std::vector<std::vector<__int128>> a(n, std::vector<__int128>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a[i][j] = m[i][j];
  __int128 sign = 1, prev = 1;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (a[k][k] == 0) {
      std::size_t p = k + 1;
      while (p < n && a[p][k] == 0) ++p;
      if (p == n) return 0;
      std::swap(a[k], a[p]);
      sign = -sign;
    }
    for (std::size_t i = k + 1; i < n; ++i)
      for (std::size_t j = k + 1; j < n; ++j) a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
    prev = a[k][k];
  }
  return sign * a[n - 1][n - 1];
}

}  // namespace detail

inline void SystemSpec::validate() {
  std::visit(
      [this](auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Rotation> || std::is_same_v<T, LinearFlow>) {
          require(!s.alpha.empty(), "translation vector must be non-empty");
          for (double a : s.alpha) require(std::isfinite(a), "non-finite translation component");
          spaceDim_ = s.alpha.size();
          groupDim_ = s.action == Action::Componentwise ? s.alpha.size() : 1;
          discrete_ = std::is_same_v<T, Rotation>;
        } else if constexpr (std::is_same_v<T, SkewShift>) {
          require(std::isfinite(s.eta1) && std::isfinite(s.eta2), "non-finite skew shift parameter");
          spaceDim_ = 2;
        } else if constexpr (std::is_same_v<T, HeisenbergReturnMap>) {
          require(std::isfinite(s.wa) && std::isfinite(s.wb) && std::isfinite(s.wc), "non-finite Heisenberg parameter");
          require(s.wb != 0, "Heisenberg return map needs w_b != 0");
          spaceDim_ = 2;
        } else if constexpr (std::is_same_v<T, ToralAutomorphism>) {
          std::size_t n = s.matrix.size();
          require(n >= 1, "automorphism matrix must be non-empty");
          for (const auto& row : s.matrix) require(row.size() == n, "automorphism matrix must be square");
          __int128 det = detail::determinant(s.matrix);
          require(det == 1 || det == -1, "automorphism matrix must have determinant +-1");
          Eigen::MatrixXd m(n, n);
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) m(i, j) = static_cast<double>(s.matrix[i][j]);
          Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
          double rho = 0;
          for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
            double r = std::abs(es.eigenvalues()[i]);
            require(std::abs(r - 1.0) > 1e-9, "automorphism has an eigenvalue on the unit circle");
            rho = std::max(rho, r);
          }
          s.lambdaMax = rho;
          Eigen::MatrixXd inv = m.inverse();
          s.inverse.assign(n, std::vector<std::int64_t>(n));
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) s.inverse[i][j] = std::llround(inv(i, j));
          IntMatrix id = detail::multiply(s.matrix, s.inverse);
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
              if (id[i][j] != (i == j ? 1 : 0)) throw NumericError("failed to invert automorphism matrix");
          spaceDim_ = n;
        } else if constexpr (std::is_same_v<T, ProductSystem>) {
          require(!s.factors.empty(), "product needs at least one factor");
          groupDim_ = spaceDim_ = 0;
          for (const auto& f : s.factors) {
            require(f.discrete(), "product factors must be discrete");
            require(!f.hasHeight(), "product factors must act on tori");
            groupDim_ += f.groupDim();
            spaceDim_ += f.spaceDim();
          }
        } else if constexpr (std::is_same_v<T, SuspensionFlow>) {
          require(s.base && s.base->discrete() && s.base->groupDim() == 1, "suspension base must be a discrete Z-action");
          require(!s.base->hasHeight(), "suspension base must act on a torus");
          require(s.roof.f.isZero() || s.roof.f.dim() == s.base->spaceDim(), "roof dimension mismatch");
          require(s.roof.gridMin > 0, "roof must be positive");
          spaceDim_ = s.base->spaceDim();
          discrete_ = false;
          hasHeight_ = true;
        } else if constexpr (std::is_same_v<T, TimeChange>) {
          require(s.base != nullptr, "time change needs a base flow");
          bool ok = s.base->template as<SuspensionFlow>() != nullptr ||
                    (s.base->template as<LinearFlow>() != nullptr && s.base->groupDim() == 1);
          require(ok, "time change base must be a one-parameter LinearFlow or a SuspensionFlow");
          require(s.tau.f.isZero() || s.tau.f.dim() == s.base->spaceDim(), "tau dimension mismatch");
          require(s.tau.gridMin > 0, "tau must be positive");
          require(s.quadStep > 0 && s.rootTol > 0, "quadrature step and root tolerance must be positive");
          spaceDim_ = s.base->spaceDim();
          discrete_ = false;
          hasHeight_ = s.base->hasHeight();
        } else if constexpr (std::is_same_v<T, TimeOneMap>) {
          require(s.flow && !s.flow->discrete(), "time-one map needs a continuous flow");
          groupDim_ = s.flow->groupDim();
          spaceDim_ = s.flow->spaceDim();
          hasHeight_ = s.flow->hasHeight();
        }
      },
      v_);
}

using GroupElement = Vec;

// Sup distance on the torus coordinates plus the absolute height gap.
inline double torusDistance(const StatePoint& a, const StatePoint& b) {
  require(a.coords.size() == b.coords.size(), "dimension mismatch");
  double d = 0;
  for (std::size_t i = 0; i < a.coords.size(); ++i) d = std::max(d, std::abs(torusDiff(a.coords[i], b.coords[i])));
  if (a.height && b.height) d = std::max(d, std::abs(*a.height - *b.height));
  return d;
}

// frac(x + n*alpha) with the product formed in extended precision.
inline double translate(double x, long double n, double alpha) {
  return static_cast<double>(mod1l(static_cast<long double>(x) + mod1l(n * static_cast<long double>(alpha))));
}

// R^n(x,y) = (x + n eta1, y + n x + n eta2 + C(n,2) eta1) mod 1, any integer n.
inline StatePoint skewShiftClosedForm(double eta1, double eta2, const StatePoint& p, std::int64_t n) {
  require(p.coords.size() == 2, "skew shift acts on the 2-torus");
  long double ln = static_cast<long double>(n);
  long double binom = static_cast<long double>(static_cast<__int128>(n) * (n - 1) / 2);
  long double x = p.coords[0], y = p.coords[1];
  long double nx = mod1l(ln * x);
  long double t1 = mod1l(ln * static_cast<long double>(eta1));
  long double t2 = mod1l(ln * static_cast<long double>(eta2));
  long double tb = mod1l(binom * static_cast<long double>(eta1));
  return {{static_cast<double>(mod1l(x + t1)), static_cast<double>(mod1l(y + nx + t2 + tb))}, std::nullopt};
}

StatePoint evolve(const SystemSpec& spec, const StatePoint& x, const GroupElement& g);
double timeChangeSigma(const SystemSpec& spec, const StatePoint& x, double t);

inline StatePoint evolve1(const SystemSpec& spec, const StatePoint& x, double t) { return evolve(spec, x, Vec{t}); }

namespace detail {

inline StatePoint toralStep(const ToralAutomorphism& a, const Vec& x, std::int64_t n) {
  const IntMatrix& m = n >= 0 ? a.matrix : a.inverse;
  std::int64_t steps = n >= 0 ? n : -n;
  Vec cur = x, nxt(x.size());
  for (std::int64_t s = 0; s < steps; ++s) {
    for (std::size_t i = 0; i < cur.size(); ++i) {
      long double acc = 0;
      for (std::size_t j = 0; j < cur.size(); ++j) acc += static_cast<long double>(m[i][j]) * cur[j];
      nxt[i] = static_cast<double>(mod1l(acc));
    }
    cur.swap(nxt);
  }
  return {cur, std::nullopt};
}

inline StatePoint suspensionFlow(const SuspensionFlow& s, const StatePoint& x, double t) {
  StatePoint base{x.coords, std::nullopt};
  double h = *x.height + t;
  auto roofAt = [&](const Vec& c) {
    double r = s.roof(c);
    if (!(r > 0)) throw NumericError("roof evaluated to a non-positive value");
    return r;
  };
  double r = roofAt(base.coords);
  while (h >= r) {
    h -= r;
    base = evolve1(*s.base, base, 1.0);
    r = roofAt(base.coords);
  }
  while (h < 0) {
    base = evolve1(*s.base, base, -1.0);
    h += roofAt(base.coords);
  }
  base.height = h;
  return base;
}

}  // namespace detail

inline StatePoint evolve(const SystemSpec& spec, const StatePoint& x, const GroupElement& g) {
  require(g.size() == spec.groupDim(), "group element dimension does not match the system");
  require(x.coords.size() == spec.spaceDim(), "state dimension does not match the system");
  require(x.height.has_value() == spec.hasHeight(), "height must be present exactly for suspension states");
  for (double v : g) require(std::isfinite(v), "non-finite time");
  if (spec.discrete())
    for (double v : g) require(isIntegral(v), "non-integer time supplied to a discrete system");
  for (double c : x.coords) require(std::isfinite(c), "non-finite coordinate");

  return std::visit(
      [&](const auto& s) -> StatePoint {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Rotation> || std::is_same_v<T, LinearFlow>) {
          StatePoint y{x.coords, std::nullopt};
          for (std::size_t i = 0; i < y.coords.size(); ++i) {
            double t = s.action == Action::Componentwise ? g[i] : g[0];
            y.coords[i] = translate(x.coords[i], t, s.alpha[i]);
          }
          return y;
        } else if constexpr (std::is_same_v<T, SkewShift>) {
          return skewShiftClosedForm(s.eta1, s.eta2, x, static_cast<std::int64_t>(g[0]));
        } else if constexpr (std::is_same_v<T, HeisenbergReturnMap>) {
          SkewShift k = s.asSkewShift();
          return skewShiftClosedForm(k.eta1, k.eta2, x, static_cast<std::int64_t>(g[0]));
        } else if constexpr (std::is_same_v<T, ToralAutomorphism>) {
          return detail::toralStep(s, x.coords, static_cast<std::int64_t>(g[0]));
        } else if constexpr (std::is_same_v<T, ProductSystem>) {
          StatePoint y;
          std::size_t gi = 0, xi = 0;
          for (const auto& f : s.factors) {
            StatePoint part{Vec(x.coords.begin() + xi, x.coords.begin() + xi + f.spaceDim()), std::nullopt};
            Vec gpart(g.begin() + gi, g.begin() + gi + f.groupDim());
            StatePoint out = evolve(f, part, gpart);
            y.coords.insert(y.coords.end(), out.coords.begin(), out.coords.end());
            gi += f.groupDim();
            xi += f.spaceDim();
          }
          return y;
        } else if constexpr (std::is_same_v<T, SuspensionFlow>) {
          require(*x.height >= 0, "suspension height must be non-negative");
          return detail::suspensionFlow(s, x, g[0]);
        } else if constexpr (std::is_same_v<T, TimeChange>) {
          double sigma = timeChangeSigma(spec, x, g[0]);
          return evolve1(*s.base, x, sigma);
        } else {
          return evolve(*s.flow, x, g);
        }
      },
      spec.variant());
}

// A stretch of a one-parameter flow orbit with no jumps: over [u0,u1] the
// state is start advanced by (u - u0) along a smooth path.
struct FlowPiece {
  double u0 = 0;
  double u1 = 0;
  StatePoint start;
};

// Smooth advance within a piece (no wrap of the suspension height).
inline StatePoint advanceInPiece(const SystemSpec& flow, const StatePoint& start, double du) {
  if (const auto* s = flow.as<SuspensionFlow>()) {
    StatePoint y = start;
    y.height = *start.height + du;
    (void)s;
    return y;
  }
  return evolve1(flow, start, du);
}

// Walks the orbit of a one-parameter LinearFlow or SuspensionFlow away from
// u = 0 (forward or backward), yielding jump-free pieces in order.
class PieceWalker {
 public:
  PieceWalker(const SystemSpec& flow, const StatePoint& x, bool forward, double linearPiece = 1.0)
      : flow_(flow), forward_(forward), linearPiece_(linearPiece), cur_(x) {
    require(flow.as<LinearFlow>() || flow.as<SuspensionFlow>(), "piece walk needs a LinearFlow or SuspensionFlow");
    require(flow.groupDim() == 1, "piece walk needs a one-parameter flow");
  }

  FlowPiece next() {
    if (const auto* s = flow_.as<SuspensionFlow>()) {
      double h = *cur_.height;
      if (forward_) {
        double r = s->roof(cur_.coords);
        if (!(r > 0)) throw NumericError("roof evaluated to a non-positive value");
        FlowPiece p{u_, u_ + (r - h), cur_};
        u_ = p.u1;
        cur_ = evolve1(*s->base, StatePoint{cur_.coords, std::nullopt}, 1.0);
        cur_.height = 0.0;
        return p;
      }
      if (h <= 0) {
        StatePoint prev = evolve1(*s->base, StatePoint{cur_.coords, std::nullopt}, -1.0);
        double r = s->roof(prev.coords);
        if (!(r > 0)) throw NumericError("roof evaluated to a non-positive value");
        prev.height = r;
        cur_ = prev;
        h = r;
      }
      StatePoint start = cur_;
      start.height = 0.0;
      FlowPiece p{u_ - h, u_, start};
      u_ = p.u0;
      cur_ = start;
      return p;
    }
    if (forward_) {
      FlowPiece p{u_, u_ + linearPiece_, cur_};
      u_ = p.u1;
      cur_ = evolve1(flow_, p.start, linearPiece_);
      return p;
    }
    StatePoint start = evolve1(flow_, cur_, -linearPiece_);
    FlowPiece p{u_ - linearPiece_, u_, start};
    u_ = p.u0;
    cur_ = start;
    return p;
  }

 private:
  const SystemSpec& flow_;
  bool forward_;
  double linearPiece_;
  double u_ = 0;
  StatePoint cur_;
};

// All jump-free pieces of the orbit covering [a,b] (a <= b), clipped.
inline std::vector<FlowPiece> orbitPieces(const SystemSpec& flow, const StatePoint& x, double a, double b) {
  std::vector<FlowPiece> out;
  auto clip = [&](FlowPiece p) {
    double lo = std::max(p.u0, a), hi = std::min(p.u1, b);
    if (hi > lo) {
      StatePoint st = advanceInPiece(flow, p.start, lo - p.u0);
      out.push_back({lo, hi, st});
    }
  };
  if (a < 0) {
    PieceWalker back(flow, x, false);
    std::vector<FlowPiece> tmp;
    for (;;) {
      FlowPiece p = back.next();
      if (p.u1 <= a) break;
      tmp.push_back(p);
      if (p.u0 <= a) break;
    }
    for (auto it = tmp.rbegin(); it != tmp.rend(); ++it) clip(*it);
  }
  if (b > 0) {
    PieceWalker fwd(flow, x, true);
    for (;;) {
      FlowPiece p = fwd.next();
      if (p.u0 >= b) break;
      clip(p);
      if (p.u1 >= b) break;
    }
  }
  return out;
}

// sigma(t,x) solving t = int_0^sigma tau(phi_s x) ds: fixed-step composite
// Gauss-Legendre along the base orbit and a bracketed false-position /
// bisection root find on the final panel.
inline double timeChangeSigma(const SystemSpec& spec, const StatePoint& x, double t) {
  const auto* tc = spec.as<TimeChange>();
  require(tc != nullptr, "timeChangeSigma needs a TimeChange system");
  require(std::isfinite(t), "time must be finite");
  if (t == 0) return 0;
  if (tc->tau.isConstant()) return t / tc->tau.constant;

  const SystemSpec& base = *tc->base;
  const GaussRule& rule = gaussRule<5>();
  auto tauAlong = [&](const FlowPiece& p, double u) {
    return tc->tau(advanceInPiece(base, p.start, u - p.u0).coords);
  };
  auto panelIntegral = [&](const FlowPiece& p, double lo, double hi) {
    double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo), s = 0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) s += rule.weights[i] * tauAlong(p, mid + half * rule.nodes[i]);
    return s * half;
  };

  bool forward = t > 0;
  double target = std::abs(t);
  double acc = 0;
  double guardLen = target / std::max(tc->tau.gridMin * 0.5, 1e-300) + 10.0;
  PieceWalker walker(base, x, forward);
  double walked = 0;
  while (walked <= guardLen) {
    FlowPiece p = walker.next();
    double len = p.u1 - p.u0;
    auto panels = static_cast<std::size_t>(std::ceil(len / tc->quadStep));
    panels = std::max<std::size_t>(panels, 1);
    double h = len / static_cast<double>(panels);
    for (std::size_t k = 0; k < panels; ++k) {
      // Panels are visited outward from u = 0.
      double lo, hi;
      if (forward) {
        lo = p.u0 + h * static_cast<double>(k);
        hi = k + 1 == panels ? p.u1 : p.u0 + h * static_cast<double>(k + 1);
      } else {
        hi = p.u1 - h * static_cast<double>(k);
        lo = k + 1 == panels ? p.u0 : p.u1 - h * static_cast<double>(k + 1);
      }
      double I = panelIntegral(p, lo, hi);
      if (acc + I < target) {
        acc += I;
        continue;
      }
      // Residual as a function of the inner endpoint s of the partial panel.
      auto residual = [&](double s) {
        return forward ? acc + panelIntegral(p, lo, s) - target : acc + panelIntegral(p, s, hi) - target;
      };
      double a = forward ? lo : hi, b = forward ? hi : lo;
      double fa = acc - target, fb = acc + I - target;
      double s = b;
      int side = 0;
      for (int it = 0; it < 200; ++it) {
        if (std::abs(fb) <= tc->rootTol) return b;
        if (std::abs(fa) <= tc->rootTol) return a;
        s = (fb - fa) != 0 ? b - fb * (b - a) / (fb - fa) : 0.5 * (a + b);
        if (!(std::min(a, b) < s && s < std::max(a, b))) s = 0.5 * (a + b);
        double fs = residual(s);
        if (std::abs(fs) <= tc->rootTol) return s;
        if ((fs < 0) == (fa < 0)) {
          a = s;
          fa = fs;
          if (side == -1) fb *= 0.5;
          side = -1;
        } else {
          b = s;
          fb = fs;
          if (side == 1) fa *= 0.5;
          side = 1;
        }
        if (it % 4 == 3) {  // guaranteed shrink
          double m = 0.5 * (a + b), fm = residual(m);
          if (std::abs(fm) <= tc->rootTol) return m;
          if ((fm < 0) == (fa < 0)) {
            a = m;
            fa = fm;
          } else {
            b = m;
            fb = fm;
          }
          side = 0;
        }
      }
      throw NumericError("time-change root find did not reach tolerance");
    }
    walked += len;
  }
  throw NumericError("time-change integral did not reach the requested time");
}

// The Z^d action obtained by sampling a flow at integer times.
inline SystemSpec restrict(const SystemSpec& spec) {
  require(!spec.discrete(), "restrict needs a continuous system; input is already discrete");
  if (const auto* lf = spec.as<LinearFlow>()) return SystemSpec::rotation(lf->alpha, lf->action);
  if (const auto* tc = spec.as<TimeChange>()) {
    if (tc->tau.isConstant() && tc->tau.constant == 1.0) return restrict(*tc->base);
  }
  return SystemSpec::timeOne(spec);
}

// Draw from the invariant measure: Lebesgue on tori, roof-weighted base with
// uniform height for suspensions, and tau-weighted for time changes
// (rejection sampling against the recorded upper bounds).
inline StatePoint randomState(const SystemSpec& spec, RandomStream& rng) {
  if (const auto* t = spec.as<TimeOneMap>()) return randomState(*t->flow, rng);
  if (const auto* tc = spec.as<TimeChange>()) {
    double cap = std::min(tc->tau.upperBound(), tc->tau.gridMax * 1.05);
    for (;;) {
      StatePoint p = randomState(*tc->base, rng);
      double v = tc->tau(p.coords);
      if (v > cap) cap = v;  // keep the bound valid if the grid missed a peak
      if (rng.uniform() * cap < v) return p;
    }
  }
  StatePoint p;
  p.coords.resize(spec.spaceDim());
  if (const auto* su = spec.as<SuspensionFlow>()) {
    double cap = std::min(su->roof.upperBound(), su->roof.gridMax * 1.05);
    for (;;) {
      for (auto& c : p.coords) c = rng.uniform();
      double r = su->roof(p.coords);
      if (r > cap) cap = r;
      if (rng.uniform() * cap < r) {
        p.height = rng.uniform() * r;
        return p;
      }
    }
  }
  for (auto& c : p.coords) c = rng.uniform();
  return p;
}

}  // namespace ergolab

// Triangle bump chi_delta(x) = max(0, 1 - |x|/delta) / delta, its d-fold
// product g_delta, their Fourier transforms, and box exponential kernels.
#pragma once

#include <variant>

#include "core.hpp"

namespace ergolab {

inline double triangle(double delta, double x) {
  require(delta > 0, "kernel width must be positive");
  double a = std::abs(x);
  return a >= delta ? 0.0 : (1.0 - a / delta) / delta;
}

inline double kernelValue(double delta, const Vec& t) {
  require(delta > 0, "kernel width must be positive");
  double v = 1.0;
  for (double s : t) {
    v *= triangle(delta, s);
    if (v == 0) break;
  }
  return v;
}

namespace detail {

// (1 - cos(2 pi y)) / (2 pi^2 y^2) = (sin(pi y) / (pi y))^2.
inline double sincSquared(double y) {
  double z = kPi * y;
  if (std::abs(2 * z) < 1e-4) {
    double z2 = z * z;
    double s = 1.0 - z2 / 6.0 + z2 * z2 / 120.0;
    return s * s;
  }
  double s = std::sin(z) / z;
  return s * s;
}

}  // namespace detail

struct TransformMode {};
struct SeriesMode {
  double A = 1;
};
using KernelMode = std::variant<TransformMode, SeriesMode>;

// Transform: F(xi) = int chi_delta(x) e(-xi x) dx.
// Series:    F_A(k) = (1/A) int_{-A/2}^{A/2} chi_delta(x) e(-k x / A) dx.
inline double kernelFourier(double delta, const KernelMode& mode, double freq) {
  require(delta > 0, "kernel width must be positive");
  if (std::holds_alternative<TransformMode>(mode)) {
    if (freq == 0) return 1.0;
    return detail::sincSquared(freq * delta);
  }
  double A = std::get<SeriesMode>(mode).A;
  require(A > delta, "series mode needs A > delta");
  if (freq == 0) return 1.0 / A;
  return detail::sincSquared(freq * delta / A) / A;
}

inline double kernelTransform(double delta, double xi) { return kernelFourier(delta, TransformMode{}, xi); }

// Fourier transform of g_delta at a vector frequency.
inline double kernelTransform(double delta, const Vec& xi) {
  double v = 1.0;
  for (double s : xi) v *= kernelTransform(delta, s);
  return v;
}

// int_{|xi| > X} F(xi) dxi <= 2 / (pi^2 delta^2 X).
inline double kernelTailMass(double delta, double X) { return 2.0 / (kPi * kPi * delta * delta * X); }

// Exact ||F(chi_delta)||_{L^1} = 1/delta (the integral of sinc^2).
inline double kernelTransformL1(double delta) {
  require(delta > 0, "kernel width must be positive");
  return 1.0 / delta;
}

enum class TimeGroup { Continuous, Discrete };

// prod_j int_{-T}^{T} e(a_j t) dt, or prod_j sum_{n=-T}^{T} e(a_j n).
inline cplx boxKernel(const Vec& a, double T, TimeGroup group) {
  require(T > 0, "box half-width must be positive");
  double v = 1.0;
  if (group == TimeGroup::Continuous) {
    for (double aj : a) {
      double z = kTwoPi * aj * T;
      v *= std::abs(z) < 1e-8 ? 2 * T * (1 - z * z / 6) : std::sin(z) / (kPi * aj);
    }
  } else {
    require(isIntegral(T), "discrete box kernel needs an integer T");
    for (double aj : a) {
      double r = mod1(aj);
      if (r > 0.5) r -= 1.0;
      double s = std::sin(kPi * r);
      v *= std::abs(s) < 1e-300 || r == 0 ? 2 * T + 1 : std::sin(kPi * r * (2 * T + 1)) / s;
    }
  }
  return v;
}

}  // namespace ergolab

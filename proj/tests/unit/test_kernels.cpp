#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include "ergolab/kernels.hpp"

using namespace ergolab;

namespace {

// int chi_delta(x) e(-xi x) dx by adaptive Gauss-Kronrod on each half.
double transformByQuadrature(double delta, double xi) {
  auto f = [&](double x) { return triangle(delta, x) * std::cos(kTwoPi * xi * x); };
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  return GK::integrate(f, -delta, 0.0, 15, 1e-14) + GK::integrate(f, 0.0, delta, 15, 1e-14);
}

}  // namespace

TEST(KernelValue, Examples) {
  EXPECT_DOUBLE_EQ(kernelValue(0.1, {0.0}), 10.0);
  EXPECT_EQ(kernelValue(0.1, {0.1}), 0.0);
  EXPECT_EQ(kernelValue(0.1, {-0.3}), 0.0);
  EXPECT_DOUBLE_EQ(kernelValue(0.5, {0.25, 0.0}), 2.0);
  EXPECT_THROW(kernelValue(0.0, {0.0}), ValidationError);
}

TEST(KernelValue, UnitMass) {
  for (double delta : {0.5, 0.1, 0.01}) {
    double m = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
                   [&](double x) { return triangle(delta, x); }, -delta, 0.0, 10, 1e-14) +
               boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
                   [&](double x) { return triangle(delta, x); }, 0.0, delta, 10, 1e-14);
    EXPECT_NEAR(m, 1.0, 1e-10);
  }
}

TEST(KernelFourier, Examples) {
  EXPECT_EQ(kernelTransform(0.3, 0.0), 1.0);
  EXPECT_NEAR(kernelTransform(0.3, 1 / 0.3), 0.0, 1e-15);
  EXPECT_NEAR(kernelTransform(0.3, 1 / 0.6), 4 / (kPi * kPi), 1e-15);
  EXPECT_NEAR(transformByQuadrature(0.3, 1 / 0.6), 4 / (kPi * kPi), 1e-10);
  EXPECT_DOUBLE_EQ(kernelFourier(0.3, SeriesMode{2.0}, 0), 0.5);
  EXPECT_THROW(kernelFourier(0.3, SeriesMode{0.3}, 1), ValidationError);
}

TEST(KernelFourier, MatchesQuadrature) {
  for (double delta : {0.5, 0.1, 0.02}) {
    for (int i = 0; i < 100; ++i) {
      double xi = (i - 50) * 0.173 / delta;
      EXPECT_NEAR(kernelTransform(delta, xi), transformByQuadrature(delta, xi), 1e-8) << delta << " " << xi;
    }
  }
}

TEST(KernelFourier, SeriesMatchesClosedFormAndRange) {
  double delta = 0.1, A = 1.7;
  for (int k = -40; k <= 40; ++k) {
    double v = kernelFourier(delta, SeriesMode{A}, k);
    if (k != 0) {
      double kk = static_cast<double>(k);
      double expect = A / (2 * kk * kk * kPi * kPi * delta * delta) * (1 - std::cos(kTwoPi * kk * delta / A));
      EXPECT_NEAR(v, expect, 1e-12);
    }
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1 / A + 1e-15);
  }
}

TEST(KernelFourier, NearZeroSeriesBranchContinuous) {
  double delta = 0.2;
  for (double xi : {1e-7, 1e-6, 5e-5, 7.9e-5, 8.1e-5, 1e-4}) {
    double exact = std::pow(std::sin(kPi * xi * delta) / (kPi * xi * delta), 2);
    EXPECT_NEAR(kernelTransform(delta, xi), exact, 1e-15);
  }
}

TEST(KernelFourier, L1NormScaling) {
  // Partial integrals of sinc^2 approach 1/delta; the closed value is used.
  for (double delta : {0.125, 0.0625}) {
    double X = 200 / delta, s = 0;
    int panels = 4000;
    for (int i = 0; i < panels; ++i) {
      double a = X * i / panels, b = X * (i + 1) / panels;
      s += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
          [&](double x) { return kernelTransform(delta, x); }, a, b, 0);
    }
    double full = 2 * s;
    EXPECT_NEAR(full, kernelTransformL1(delta), kernelTailMass(delta, X) + 1e-9);
    EXPECT_LE(full, kernelTransformL1(delta));
  }
}

TEST(KernelFourier, SeriesL1Bound) {
  for (double A : {1.0, 4.0}) {
    for (int j = 3; j <= 10; ++j) {
      double delta = std::ldexp(1.0, -j), s = 0;
      for (int k = -200000; k <= 200000; ++k) s += kernelFourier(delta, SeriesMode{A}, k);
      EXPECT_LE(s, 2 * (1 / A + 1 / delta));
    }
  }
}

TEST(BoxKernel, Examples) {
  EXPECT_NEAR(boxKernel({0.0, 0.0}, 3.0, TimeGroup::Continuous).real(), 36.0, 1e-12);
  EXPECT_NEAR(boxKernel({0.0, 0.0}, 3.0, TimeGroup::Discrete).real(), 49.0, 1e-12);
  EXPECT_NEAR(std::abs(boxKernel({1 / 6.0}, 3.0, TimeGroup::Continuous)), 0.0, 1e-12);
  for (int k = 1; k < 10; ++k) EXPECT_NEAR(std::abs(boxKernel({k / 10.0}, 10, TimeGroup::Discrete)), 1.0, 1e-12);
  EXPECT_THROW(boxKernel({0.1}, 2.5, TimeGroup::Discrete), ValidationError);
}

TEST(BoxKernel, MatchesDirectSumAndBounds) {
  RandomStream rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    Vec a = {rng.uniform(-3, 3), rng.uniform(-3, 3)};
    double T = std::floor(rng.uniform(1, 30));
    cplx direct = 1.0;
    for (double aj : a) {
      cplx s = 0;
      for (int n = -static_cast<int>(T); n <= static_cast<int>(T); ++n) s += e(aj * n);
      direct *= s;
    }
    cplx v = boxKernel(a, T, TimeGroup::Discrete);
    EXPECT_LT(std::abs(v - direct), 1e-9 * std::max(1.0, std::abs(direct)));
    double bound = 1, cbound = 1;
    for (double aj : a) {
      bound *= std::min(2 * T + 1, 1 / (2 * distToZ(aj)));
      cbound *= std::min(2 * T, 1 / (kPi * std::abs(aj)));
    }
    EXPECT_LE(std::abs(v), bound * (1 + 1e-12));
    EXPECT_LE(std::abs(boxKernel(a, T, TimeGroup::Continuous)), cbound * (1 + 1e-12));
  }
}

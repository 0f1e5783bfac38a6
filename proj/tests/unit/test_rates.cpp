#include <boost/rational.hpp>
#include <gtest/gtest.h>

#include <random>

#include "ergolab/rates.hpp"

using namespace ergolab;

namespace {

using Q = boost::rational<long long>;

ExponentInputs<double> inputs(double d1, double d2, double d, double K) {
  ExponentInputs<double> in;
  in.delta1 = d1;
  in.delta2 = d2;
  in.d = d;
  in.K = K;
  return in;
}

ExponentInputs<double> sparseInputs(double eps, double kappa) {
  ExponentInputs<double> in;
  in.kappa = kappa;
  in.eps = {eps};
  return in;
}

// Refines a uniform grid search four times around its best cell.
double zoomedGridMax(const ExponentInputs<double>& in, double lo, double hi) {
  double best = -INFINITY, arg = 0.5 * (lo + hi);
  for (int level = 0; level < 4; ++level) {
    double h = (hi - lo) / 1001;
    for (int i = 1; i <= 1000; ++i) {
      double a = lo + h * i;
      double v = sparseExponentAt(in, {a});
      if (v > best) {
        best = v;
        arg = a;
      }
    }
    double nlo = std::max(lo, arg - 2 * h), nhi = std::min(hi, arg + 2 * h);
    lo = nlo;
    hi = nhi;
  }
  return best;
}

}  // namespace

TEST(TwistExponent, Examples) {
  auto r = twistExponent(inputs(1, 1, 1, 1));
  EXPECT_DOUBLE_EQ(r.delta, 0.25);
  auto r2 = twistExponent(inputs(2, 2, 1, 1));
  EXPECT_DOUBLE_EQ(r2.delta, 1.0 / 3);
  EXPECT_EQ(r2.branch, "kappa3");
  EXPECT_DOUBLE_EQ(r2.kappaOpt, 1.0 / 3);
  for (double d1 : {1e-3, 1e-6, 1e-9}) {
    double v = twistExponent(inputs(d1, 1, 1, 1)).delta;
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, d1);
  }
  EXPECT_THROW(twistExponent(inputs(0, 1, 1, 1)), ValidationError);
}

TEST(TwistExponent, Monotonicity) {
  const Vec grid = {0.25, 0.5, 1, 2};
  const Vec dims = {1, 2, 3, 4};
  const Vec Ks = {0, 0.5, 1, 2};
  for (double d1 : grid)
    for (double d2 : grid)
      for (double d : dims)
        for (double K : Ks) {
          double v = twistExponent(inputs(d1, d2, d, K)).delta;
          EXPECT_GT(v, 0);
          EXPECT_LE(v, twistExponent(inputs(d1 * 2, d2, d, K)).delta);
          EXPECT_LE(v, twistExponent(inputs(d1, d2 * 2, d, K)).delta);
          EXPECT_GE(v, twistExponent(inputs(d1, d2, d + 1, K)).delta);
          EXPECT_GE(v, twistExponent(inputs(d1, d2, d, K + 0.5)).delta);
        }
}

TEST(TwistExponent, LinesReproduceDelta) {
  const Vec grid = {0.1, 0.5, 1, 3};
  for (double d1 : grid)
    for (double d2 : grid)
      for (double d : {1.0, 2.0, 3.0})
        for (double K : {0.0, 1.0, 2.5}) {
          auto in = inputs(d1, d2, d, K);
          auto r = twistExponent(in);
          EXPECT_NEAR(twistLinesAt(in, r.kappaOpt), r.delta, 1e-12);
        }
}

TEST(TwistExponent, ExactRationalArithmetic) {
  ExponentInputs<Q> in;
  in.delta1 = Q(1);
  in.delta2 = Q(1);
  in.d = Q(1);
  in.K = Q(1);
  auto r = twistExponent(in);
  EXPECT_EQ(r.delta, Q(1, 4));
  EXPECT_EQ(twistLinesAt(in, r.kappaOpt), r.delta);
  in.delta1 = Q(2, 3);
  in.d = Q(2);
  r = twistExponent(in);
  // min(1/4, 1/8, 1/9) from d1/(2+d1), d1/(2(d+d1)), d1 d2/(2(K d+d1)).
  EXPECT_EQ(r.delta, Q(1, 8));
  EXPECT_EQ(r.branch, "kappa3");
  EXPECT_EQ(twistLinesAt(in, r.kappaOpt), r.delta);
}

TEST(DerivedExponents, Examples) {
  ExponentInputs<double> in;
  in.kappa = 1;
  auto r = derivedExponents(in);
  EXPECT_DOUBLE_EQ(r.time1, 1.0 / 3);
  EXPECT_DOUBLE_EQ(r.randomWeights, 1.0 / 8);
  in.rhoPrime = 1e-9;
  EXPECT_LT(derivedExponents(in).time1, 1e-9);
  EXPECT_GT(derivedExponents(in).time1, 0.0);
  ExponentInputs<Q> q;
  q.kappa = Q(1, 2);
  q.d = Q(2);
  q.rho = Q(1, 2);
  EXPECT_EQ(derivedExponents(q).time1, Q(1, 18));
  EXPECT_EQ(derivedExponents(q).randomWeights, Q(1, 32));
}

TEST(SparseWindow, Examples) {
  auto w = sparseWindow(0.1, 0.25, 1.0);
  EXPECT_TRUE(w.feasible);
  EXPECT_DOUBLE_EQ(w.aLo, 1.0);
  EXPECT_NEAR(w.aHi, 2 / 1.1, 1e-15);
  EXPECT_NEAR(w.aHi, 1.81818, 1e-5);
  EXPECT_NEAR(w.aLoEffective, 0.25 / 0.175, 1e-15);

  for (double eps : {1.0, 1.5}) {
    auto v = sparseWindow(eps, 0.25, 1.0);
    EXPECT_FALSE(v.feasible);
    EXPECT_EQ(v.violated, "eps < 1");
  }
  auto p = sparseWindow(0.9, 0.01, 1.0);
  EXPECT_FALSE(p.feasible);
  EXPECT_FALSE(p.condProduct);
  EXPECT_EQ(p.violated, "(1+eps)(1-kappa) < d");
  EXPECT_THROW(sparseWindow(0.1, 1.0, 1.0), ValidationError);
}

TEST(SparseWindow, ExactRationalWindow) {
  auto w = sparseWindow(Q(1, 10), Q(1, 4), Q(1));
  EXPECT_TRUE(w.feasible);
  EXPECT_EQ(w.aLo, Q(1));
  EXPECT_EQ(w.aHi, Q(20, 11));
  EXPECT_EQ(w.aLoEffective, Q(10, 7));
}

TEST(SparseExponent, TermsMatchHandComputation) {
  auto in = sparseInputs(0.1, 0.25);
  double a = 1.4;
  SparseTerms t = sparseTerms(in, {a});
  double progression = 1 + 1 + (0.1 - 2 / a);
  double count = 1 / a;
  double twisted = 1 - 1.0 / 2 + (1.1 * 0.75 + 0.25 / a) / 2;
  EXPECT_NEAR(t.progression, progression, 1e-15);
  EXPECT_NEAR(t.count, count, 1e-15);
  EXPECT_NEAR(t.twisted, twisted, 1e-15);
  double kp = sparseExponent(in, {a}).kappaPrime;
  EXPECT_NEAR(kp, 1 - std::max({progression, count, twisted}), 1e-15);
  // a = 1.4 lies below the effective edge 10/7, where the twisted term exceeds d.
  EXPECT_LT(kp, 0.0);
  EXPECT_THROW(sparseExponent(in, {1.9}), ValidationError);
  EXPECT_THROW(sparseExponent(in, {0.9}), ValidationError);
}

TEST(SparseExponent, UpperEdgeDegenerates) {
  auto in = sparseInputs(0.1, 0.25);
  double hi = 2 / 1.1;
  // The progression term reaches d at a = 2/(1+eps).
  EXPECT_NEAR(sparseExponentAt(in, {hi - 1e-12}), 0.0, 1e-9);
}

TEST(SparseExponent, OptimizeMatchesZoomedGrid) {
  for (auto [eps, kappa] : {std::pair{0.1, 0.25}, {0.05, 0.5}, {0.3, 0.6}, {0.5, 0.9}}) {
    auto in = sparseInputs(eps, kappa);
    auto w = sparseWindow(eps, kappa, 1.0);
    ASSERT_TRUE(w.feasible);
    auto opt = sparseExponentOptimize(in);
    EXPECT_NEAR(opt.kappaPrime, zoomedGridMax(in, w.aLo, w.aHi), 1e-6) << eps << " " << kappa;
    EXPECT_GT(opt.kappaPrime, 0.0);
    for (int i = 1; i < 100; ++i) {
      double a = w.aLo + (w.aHi - w.aLo) * i / 100.0;
      EXPECT_GE(opt.kappaPrime, sparseExponent(in, {a}).kappaPrime);
    }
  }
}

TEST(SparseExponent, OptimizeMultipleAxes) {
  ExponentInputs<double> in;
  in.d = 2;
  in.kappa = 0.5;
  in.eps = {0.1, 0.3};
  auto opt = sparseExponentOptimize(in);
  ASSERT_EQ(opt.a.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    auto w = sparseWindow(in.eps[i], in.kappa, in.d);
    EXPECT_GT(opt.a[i], w.aLo);
    EXPECT_LT(opt.a[i], w.aHi);
  }
  RandomStream rng(3);
  for (int i = 0; i < 200; ++i) {
    Vec a(2);
    for (std::size_t j = 0; j < 2; ++j) {
      auto w = sparseWindow(in.eps[j], in.kappa, in.d);
      a[j] = rng.uniform(w.aLo, w.aHi);
    }
    EXPECT_GE(opt.kappaPrime + 1e-12, sparseExponentAt(in, a));
  }
}

TEST(FitPowerLaw, ExactPowerLaw) {
  Vec T, v;
  for (int j = 1; j <= 10; ++j) {
    T.push_back(std::ldexp(1.0, j));
    v.push_back(3.0 * std::pow(T.back(), -0.5));
  }
  auto f = fitPowerLaw(T, v);
  EXPECT_NEAR(f.slope, -0.5, 1e-12);
  EXPECT_NEAR(f.intercept, std::log(3.0), 1e-12);
  EXPECT_NEAR(f.rSquared, 1.0, 1e-12);
  EXPECT_EQ(f.pointCount, 10u);
  EXPECT_DOUBLE_EQ(f.tMin, 2.0);
  EXPECT_NEAR(f.tMax, 1024.0, 1e-9);
}

TEST(FitPowerLaw, NoisySamples) {
  std::mt19937_64 gen(2024);
  std::normal_distribution<double> noise(0.0, 0.1);
  for (double slope : {-0.25, -0.5, -1.0}) {
    Vec T, v;
    for (int i = 0; i < 20; ++i) {
      T.push_back(std::pow(2.0, 4 + 16.0 * i / 19));
      v.push_back(std::pow(T.back(), slope) * std::exp(noise(gen)));
    }
    EXPECT_NEAR(fitPowerLaw(T, v).slope, slope, 0.05);
  }
}

TEST(FitPowerLaw, ConstantAndFiftyPoints) {
  Vec T, c, p;
  for (int i = 0; i < 50; ++i) {
    T.push_back(10.0 + 37.0 * i);
    c.push_back(0.7);
    p.push_back(5 * std::pow(T.back(), -0.37));
  }
  EXPECT_NEAR(fitPowerLaw(T, c).slope, 0.0, 1e-12);
  EXPECT_NEAR(fitPowerLaw(T, p).slope, -0.37, 0.02);
}

TEST(FitPowerLaw, DropsNonPositiveAndRejectsTooFew) {
  auto f = fitPowerLaw({1, 2, 4, 8, 16}, {1, 0, 0.25, -1, 1.0 / 16});
  EXPECT_EQ(f.dropped, 2u);
  EXPECT_EQ(f.pointCount, 3u);
  EXPECT_NEAR(f.slope, -1.0, 1e-12);
  EXPECT_THROW(fitPowerLaw({1, 2, 3}, {1, 0, 2}), ValidationError);
  EXPECT_THROW(fitPowerLaw({1, 2}, {1, 2, 3}), ValidationError);
  EXPECT_THROW(fitPowerLaw({2, 2, 2}, {1, 2, 3}), ValidationError);
}

#include <algorithm>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <gtest/gtest.h>

#include "ergolab/systems.hpp"

using namespace ergolab;

namespace {

StatePoint pt(Vec c) { return {std::move(c), std::nullopt}; }

const double kGolden = (std::sqrt(5.0) - 1) / 2;

SystemSpec cat() { return SystemSpec::toral({{2, 1}, {1, 1}}); }

double ksUniform(Vec v) {
  std::sort(v.begin(), v.end());
  double n = static_cast<double>(v.size()), d = 0;
  for (std::size_t i = 0; i < v.size(); ++i)
    d = std::max({d, std::abs(v[i] - static_cast<double>(i) / n), std::abs(v[i] - static_cast<double>(i + 1) / n)});
  return d;
}

}  // namespace

TEST(Evolve, SkewShiftOneStep) {
  auto s = SystemSpec::skewShift(0.3, 0.1);
  StatePoint y = evolve1(s, pt({0.5, 0.7}), 1);
  EXPECT_NEAR(y.coords[0], 0.8, 1e-15);
  EXPECT_NEAR(y.coords[1], mod1(0.5 + 0.7 + 0.1), 1e-15);
}

TEST(Evolve, IdentityAtZero) {
  std::vector<SystemSpec> specs = {SystemSpec::rotation({0.3, kGolden}), SystemSpec::linearFlow({kGolden}),
                                   SystemSpec::skewShift(0.3, 0.1), cat(),
                                   SystemSpec::heisenberg(1.0, 2.0, 0.5)};
  for (const auto& s : specs) {
    StatePoint x = pt(Vec(s.spaceDim(), 0.37));
    StatePoint y = evolve(s, x, Vec(s.groupDim(), 0.0));
    EXPECT_LT(torusDistance(x, y), 1e-15) << s.typeName();
  }
}

TEST(Evolve, CatMapHandMultiply) {
  StatePoint y = evolve1(cat(), pt({0.2, 0.4}), 1);
  EXPECT_NEAR(y.coords[0], 0.8, 1e-15);
  EXPECT_NEAR(y.coords[1], 0.6, 1e-15);
  StatePoint back = evolve1(cat(), y, -1);
  EXPECT_LT(torusDistance(back, pt({0.2, 0.4})), 1e-14);
}

TEST(Evolve, CoordinatesStayInUnitInterval) {
  auto s = SystemSpec::skewShift(kGolden, std::sqrt(2.0));
  StatePoint x = pt({0.999999999, 0.999999999});
  for (int n = -50; n <= 50; ++n) {
    StatePoint y = evolve1(s, x, n);
    for (double c : y.coords) {
      EXPECT_GE(c, 0.0);
      EXPECT_LT(c, 1.0);
    }
  }
}

TEST(Evolve, Errors) {
  EXPECT_THROW(evolve1(cat(), pt({0.1, 0.2}), 0.5), ValidationError);
  EXPECT_THROW(evolve(cat(), pt({0.1, 0.2}), {1, 2}), ValidationError);
  EXPECT_THROW(evolve1(cat(), pt({0.1}), 1), ValidationError);
  EXPECT_THROW(SystemSpec::toral({{1, 1}, {0, 1}}), ValidationError);  // eigenvalue on the unit circle
  EXPECT_THROW(SystemSpec::toral({{2, 0}, {0, 1}}), ValidationError);  // det 2
  EXPECT_THROW(SystemSpec::heisenberg(1, 0, 1), ValidationError);
  EXPECT_THROW(SystemSpec::suspension(cat(), 0.5, FourierObservable::cosine({1, 0}, 0.5)), ValidationError);
  EXPECT_THROW(SystemSpec::product({SystemSpec::linearFlow({0.1})}), ValidationError);
}

TEST(Evolve, GroupLawDiscrete) {
  RandomStream rng(7);
  std::vector<SystemSpec> specs = {SystemSpec::rotation({0.3, kGolden}), SystemSpec::skewShift(kGolden, 0.2), cat(),
                                   SystemSpec::heisenberg(0.7, 1.3, 0.4),
                                   SystemSpec::product({SystemSpec::rotation({kGolden}), cat()})};
  for (const auto& s : specs) {
    for (int trial = 0; trial < 20; ++trial) {
      StatePoint x = randomState(s, rng);
      Vec g(s.groupDim()), h(s.groupDim()), gh(s.groupDim());
      for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] = std::floor(rng.uniform(-20, 20));
        h[i] = std::floor(rng.uniform(-20, 20));
        gh[i] = g[i] + h[i];
      }
      EXPECT_LT(torusDistance(evolve(s, evolve(s, x, g), h), evolve(s, x, gh)), 1e-9) << s.typeName();
    }
  }
}

TEST(Evolve, GroupLawContinuous) {
  RandomStream rng(8);
  auto roof = FourierObservable::cosine({1, 0}, 0.2);
  std::vector<SystemSpec> specs = {
      SystemSpec::linearFlow({kGolden}), SystemSpec::linearFlow({0.3, kGolden}, Action::Componentwise),
      SystemSpec::suspension(cat(), 1.0, roof),
      SystemSpec::timeChange(SystemSpec::linearFlow({kGolden}), 1.0, FourierObservable::cosine({1}, 0.25))};
  for (const auto& s : specs) {
    for (int trial = 0; trial < 10; ++trial) {
      StatePoint x = randomState(s, rng);
      Vec g(s.groupDim()), h(s.groupDim()), gh(s.groupDim());
      for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] = rng.uniform(-5, 5);
        h[i] = rng.uniform(-5, 5);
        gh[i] = g[i] + h[i];
      }
      EXPECT_LT(torusDistance(evolve(s, evolve(s, x, g), h), evolve(s, x, gh)), 1e-7) << s.typeName();
    }
  }
}

TEST(Evolve, LebesgueInvarianceKs) {
  std::vector<std::pair<SystemSpec, Vec>> cases = {{SystemSpec::rotation({kGolden}), {7}},
                                                   {SystemSpec::skewShift(kGolden, 0.3), {5}},
                                                   {cat(), {3}},
                                                   {SystemSpec::linearFlow({kGolden, 0.2}, Action::Componentwise),
                                                    {1.5, -2.5}}};
  for (const auto& [s, g] : cases) {
    RandomStream rng(11);
    std::vector<Vec> comps(s.spaceDim());
    for (int i = 0; i < 10000; ++i) {
      StatePoint y = evolve(s, randomState(s, rng), g);
      for (std::size_t j = 0; j < y.coords.size(); ++j) comps[j].push_back(y.coords[j]);
    }
    for (const auto& c : comps) EXPECT_LT(ksUniform(c), 0.02) << s.typeName();
  }
}

TEST(SkewShift, ClosedFormExamples) {
  StatePoint y = skewShiftClosedForm(0.3, 0.1, pt({0, 0}), 2);
  EXPECT_NEAR(y.coords[0], 0.6, 1e-15);
  EXPECT_NEAR(y.coords[1], 0.5, 1e-15);
  StatePoint one = skewShiftClosedForm(0.3, 0.1, pt({0.25, 0.5}), 1);
  EXPECT_NEAR(one.coords[0], 0.55, 1e-15);
  EXPECT_NEAR(one.coords[1], 0.85, 1e-15);
}

TEST(SkewShift, ClosedFormMatchesExtendedPrecisionIteration) {
  using big = boost::multiprecision::cpp_bin_float_50;
  RandomStream rng(3);
  double eta1 = kGolden, eta2 = std::sqrt(2.0) - 1;
  for (int trial = 0; trial < 3; ++trial) {
    StatePoint x = pt({rng.uniform(), rng.uniform()});
    big bx = x.coords[0], by = x.coords[1], e1 = eta1, e2 = eta2;
    for (int n = 1; n <= 10000; ++n) {
      big nx = bx + e1, ny = bx + by + e2;
      bx = nx - floor(nx);
      by = ny - floor(ny);
      if (n % 97 == 0 || n == 10000) {
        StatePoint c = skewShiftClosedForm(eta1, eta2, x, n);
        StatePoint o = pt({static_cast<double>(bx), static_cast<double>(by)});
        ASSERT_LT(torusDistance(c, o), 1e-7) << "n=" << n;
      }
    }
  }
}

TEST(Heisenberg, ReturnMapIsSkewShift) {
  auto h = SystemSpec::heisenberg(0.7, 1.3, 0.4);
  const auto* hr = h.as<HeisenbergReturnMap>();
  SkewShift s = hr->asSkewShift();
  EXPECT_NEAR(s.eta1, 0.7 / 1.3, 1e-15);
  StatePoint x = pt({0.1, 0.2});
  EXPECT_LT(torusDistance(evolve1(h, x, 9), skewShiftClosedForm(s.eta1, s.eta2, x, 9)), 1e-15);
}

TEST(TimeChange, ConstantAndUnit) {
  auto base = SystemSpec::linearFlow({kGolden});
  auto unit = SystemSpec::timeChange(base, 1.0);
  auto three = SystemSpec::timeChange(base, 3.0);
  StatePoint x = pt({0.3});
  EXPECT_EQ(timeChangeSigma(unit, x, 2.5), 2.5);
  EXPECT_DOUBLE_EQ(timeChangeSigma(three, x, 2.5), 2.5 / 3.0);
}

TEST(TimeChange, SigmaSolvesIntegralEquation) {
  auto base = SystemSpec::linearFlow({kGolden});
  auto tau = FourierObservable::cosine({1}, 0.25);  // 1 + 0.5 cos(2 pi x)
  auto tc = SystemSpec::timeChange(base, 1.0, tau);
  StatePoint x = pt({0.2});
  for (double t : {1.0, -1.0, 7.3}) {
    double s = timeChangeSigma(tc, x, t);
    double lo = std::min(0.0, s), hi = std::max(0.0, s);
    auto integrand = [&](double u) { return 1.0 + 0.5 * std::cos(kTwoPi * (x.coords[0] + kGolden * u)); };
    double I = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, lo, hi, 12, 1e-13);
    EXPECT_NEAR(s >= 0 ? I : -I, t, 1e-9);
    EXPECT_GE(s / t, 1.0 / 1.5 - 1e-12);
    EXPECT_LE(s / t, 1.0 / 0.5 + 1e-12);
  }
}

TEST(TimeChange, CocycleIdentity) {
  auto base = SystemSpec::linearFlow({kGolden});
  auto tc = SystemSpec::timeChange(base, 1.0, FourierObservable::cosine({1}, 0.25));
  RandomStream rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    StatePoint x = pt({rng.uniform()});
    double t = rng.uniform(-3, 3), s = rng.uniform(-3, 3);
    double lhs = timeChangeSigma(tc, x, t + s);
    double rhs = timeChangeSigma(tc, x, t) + timeChangeSigma(tc, evolve1(tc, x, t), s);
    EXPECT_NEAR(lhs, rhs, 1e-6);
  }
}

TEST(TimeChange, CocycleOverSuspension) {
  auto susp = SystemSpec::suspension(cat(), 1.0, FourierObservable::cosine({1, 0}, 0.2));
  auto tc = SystemSpec::timeChange(susp, 1.0, FourierObservable::cosine({0, 1}, 0.2));
  StatePoint x{{0.31, 0.77}, 0.4};
  double t = 2.2, s = 1.7;
  EXPECT_NEAR(timeChangeSigma(tc, x, t + s), timeChangeSigma(tc, x, t) + timeChangeSigma(tc, evolve1(tc, x, t), s), 1e-6);
}

TEST(TimeChange, SubstitutionIdentity) {
  // int_0^T f(phi^tau_t x) dt = int_0^{sigma(T)} tau(phi_s x) f(phi_s x) ds.
  auto base = SystemSpec::linearFlow({kGolden});
  auto tc = SystemSpec::timeChange(base, 1.0, FourierObservable::cosine({1}, 0.25));
  auto f = [](double y) { return std::cos(kTwoPi * 3 * y) + 0.5 * std::sin(kTwoPi * y); };
  StatePoint x = pt({0.15});
  double T = 3.0;
  double lhs = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      [&](double t) { return f(evolve1(tc, x, t).coords[0]); }, 0.0, T, 6, 1e-9);
  double sT = timeChangeSigma(tc, x, T);
  double rhs = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      [&](double s) {
        double y = x.coords[0] + kGolden * s;
        return (1.0 + 0.5 * std::cos(kTwoPi * y)) * f(y);
      },
      0.0, sT, 12, 1e-13);
  EXPECT_NEAR(lhs, rhs, 1e-5);
}

TEST(Suspension, ConstantRoofReturnsToSection) {
  auto s = SystemSpec::suspension(cat(), 1.0);
  auto r = restrict(s);
  StatePoint x{{0.2, 0.4}, 0.0};
  for (int n = 1; n <= 5; ++n) {
    StatePoint y = evolve1(r, x, n);
    StatePoint b = evolve1(cat(), pt({0.2, 0.4}), n);
    EXPECT_LT(torusDistance(pt(y.coords), b), 1e-12);
    EXPECT_NEAR(*y.height, 0.0, 1e-12);
  }
}

TEST(Restrict, LinearFlowToRotation) {
  auto lf = SystemSpec::linearFlow({kGolden});
  auto r = restrict(lf);
  ASSERT_NE(r.as<Rotation>(), nullptr);
  StatePoint x = pt({0.3});
  for (int n = -5; n <= 5; ++n) EXPECT_EQ(evolve1(r, x, n).coords, evolve1(lf, x, n).coords);
  auto unit = SystemSpec::timeChange(lf, 1.0);
  ASSERT_NE(restrict(unit).as<Rotation>(), nullptr);
  EXPECT_THROW(restrict(cat()), ValidationError);
}

TEST(RandomState, SuspensionHeightsBelowRoof) {
  auto s = SystemSpec::suspension(cat(), 1.0, FourierObservable::cosine({1, 0}, 0.3));
  RandomStream rng(9);
  for (int i = 0; i < 1000; ++i) {
    StatePoint x = randomState(s, rng);
    ASSERT_TRUE(x.height.has_value());
    EXPECT_GE(*x.height, 0.0);
    EXPECT_LT(*x.height, s.as<SuspensionFlow>()->roof(x.coords));
  }
}

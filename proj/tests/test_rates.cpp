#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "subgeo/error.hpp"
#include "subgeo/rates.hpp"

using namespace subgeo;

namespace {

std::vector<ConcaveRate> families() {
  return {ConcaveRate::logarithmic(2.0), ConcaveRate::polynomial(0.5),
          ConcaveRate::subexponential(1.0), ConcaveRate::pcn_drift(0.5, 0.0125, 0.5)};
}

}  // namespace

TEST(ConcaveRate, FrozenValues) {
  EXPECT_DOUBLE_EQ(ConcaveRate::polynomial(0.5).eval(4.0), 2.0);
  EXPECT_DOUBLE_EQ(ConcaveRate::logarithmic(2.0).eval(1.0), 1.0);
  EXPECT_NEAR(ConcaveRate::subexponential(1.0).eval(std::exp(1.0)), std::exp(1.0) / 2, 1e-15);
}

TEST(ConcaveRate, DomainErrors) {
  EXPECT_THROW(ConcaveRate::logarithmic(1.0).eval(0.5), DomainError);
  EXPECT_THROW(ConcaveRate::polynomial(1.5), DomainError);
  EXPECT_NO_THROW(ConcaveRate::polynomial(0.5).eval(0.0));
  EXPECT_DOUBLE_EQ(ConcaveRate::pcn_drift(0.5, 0.0125, 0.5).eval(0.0), 0.0);
}

TEST(ConcaveRate, DerivativeMatchesFiniteDifferences) {
  for (const auto& phi : families()) {
    for (double t : {1.5, 3.0, 10.0, 100.0, 1e4, 1e6}) {
      const double h = 1e-5 * t;
      const double fd = (phi.eval(t + h) - phi.eval(t - h)) / (2 * h);
      EXPECT_NEAR(phi.deriv(t) / fd, 1.0, 1e-6) << phi.describe() << " t=" << t;
    }
  }
}

TEST(ConcaveRate, LogEvalMatchesEval) {
  for (const auto& phi : families())
    for (double t : {1.0, 2.0, 50.0, 1e5})
      EXPECT_NEAR(phi.log_eval_log(std::log(t)), std::log(phi.eval(t)), 1e-12) << phi.describe();
}

TEST(ConcaveRate, Inverse) {
  const auto phi = ConcaveRate::polynomial(0.5);
  EXPECT_NEAR(phi.inverse(2.0), 4.0, 1e-12);
  EXPECT_NEAR(phi.scaled(3.0).inverse(6.0), 4.0, 1e-12);
}

TEST(RateKit, PolynomialClosedForm) {
  const auto kit = build_rate_kit(ConcaveRate::polynomial(0.5));
  EXPECT_TRUE(kit.closed_form_H());
  EXPECT_NEAR(kit.H(4.0), 2.0, 1e-14);
  EXPECT_NEAR(kit.Hinv(2.0), 4.0, 1e-14);
  EXPECT_EQ(kit.H(1.0), 0.0);
  EXPECT_EQ(kit.Hinv(0.0), 1.0);
  EXPECT_NEAR(r_phi(kit, 0.0), 1.0, 1e-15);
  EXPECT_NEAR(r_phi(kit, 2.0), 2.0, 1e-14);
}

TEST(RateKit, SubexponentialRZero) {
  const auto kit = build_rate_kit(ConcaveRate::subexponential(1.0));
  EXPECT_NEAR(kit.r(0.0), 1.0, 1e-15);
}

TEST(RateKit, QuadratureAgreesWithClosedForms) {
  for (const auto& phi : {ConcaveRate::polynomial(0.5), ConcaveRate::subexponential(1.0),
                          ConcaveRate::subexponential(0.5, 0.3)}) {
    const auto exact = build_rate_kit(phi);
    const auto quad = build_rate_kit(phi, 1e-10, 1e-12, false);
    ASSERT_FALSE(quad.closed_form_H());
    for (double t : {1.0, 1.001, 2.0, 17.0, 1e3, 1e5, 1e6}) {
      const double a = exact.H(t), b = quad.H(t);
      EXPECT_LE(std::abs(a - b), 1e-8 * std::max(1e-300, std::abs(a))) << phi.describe() << " " << t;
      if (t > 1) EXPECT_NEAR(quad.Hinv(a) / t, 1.0, 1e-9);
    }
  }
}

TEST(RateKit, RoundTripOnRandomPoints) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> w(0.0, std::log(1e6));
  for (const auto& phi : families()) {
    const auto kit = build_rate_kit(phi);
    for (int i = 0; i < 200; ++i) {
      const double t = std::exp(w(gen));
      EXPECT_LT(std::abs(kit.Hinv(kit.H(t)) / t - 1), 1e-8) << phi.describe() << " t=" << t;
    }
  }
}

TEST(RateKit, RIdentityByIntegration) {
  for (const auto& phi : families()) {
    const auto kit = build_rate_kit(phi);
    std::vector<double> ts;
    for (int i = 1; i <= 40; ++i) ts.push_back(25.0 * i);
    const auto Rint = kit.R_by_integration(ts);
    for (std::size_t i = 0; i < ts.size(); ++i)
      EXPECT_LT(std::abs(Rint[i] / kit.R(ts[i]) - 1), 1e-8) << phi.describe() << " t=" << ts[i];
  }
}

TEST(RateKit, HkProperties) {
  const auto kit = build_rate_kit(ConcaveRate::polynomial(0.5));
  // Hinv(H(u)) - Hinv(0) = u - 1
  for (double u : {1.0, 2.0, 7.5, 100.0}) EXPECT_NEAR(H_k(kit, 0, u), u - 1, 1e-8 * u);
  EXPECT_EQ(H_k(kit, 0, 1.0), 0.0);
  EXPECT_EQ(H_k(kit, 2, 1.0), 0.0);
  // concave nondecreasing in u
  for (int k : {0, 1, 5, 50}) {
    double prev = -1, prev_slope = INFINITY;
    for (double u = 1.0; u < 200; u += 1.0) {
      const double v = H_k(kit, k, u);
      EXPECT_GE(v, prev);
      if (prev >= 0) {
        EXPECT_LE(v - prev, prev_slope + 1e-9);
        prev_slope = v - prev;
      }
      prev = v;
      if (k == 0) EXPECT_LE(v, u + 1e-9);
    }
  }
}

TEST(RateKit, RatioToZero) {
  for (const auto& phi : families()) {
    const auto kit = build_rate_kit(phi);
    const double T = 1e6;
    EXPECT_LT(std::exp(kit.log_r(T) - kit.log_R(T)), 0.01) << phi.describe();
    EXPECT_LT(kit.log_r(T) - kit.log_R(T), kit.log_r(T / 2) - kit.log_R(T / 2));
  }
}

TEST(Extension, PolynomialAtFour) {
  const auto ext = extend_concave(ConcaveRate::polynomial(0.5), 4.0);
  EXPECT_EQ(ext.eval(0.0), 0.0);
  EXPECT_NEAR(ext.eval(4.0), 2.0, 1e-15);
  // (2*(1/4) - 2/4) t + (2*(2 - 1)/2) sqrt(t) = sqrt(t)
  EXPECT_NEAR(ext.eval(1.0), 1.0, 1e-15);
  EXPECT_NEAR(ext.eval(2.0), std::sqrt(2.0), 1e-15);
}

TEST(Extension, ContinuityAndConcavity) {
  const std::vector<ConcaveRate> bases = {ConcaveRate::logarithmic(1.5), ConcaveRate::polynomial(0.5),
                                          ConcaveRate::subexponential(0.5),
                                          ConcaveRate::pcn_drift(0.5, 0.0125, 0.5)};
  for (const auto& base : bases) {
    for (double M : {2.0, 4.0, 10.0}) {
      const auto ext = extend_concave(base, M);
      EXPECT_EQ(ext.eval(0.0), 0.0);
      const double h = 1e-7;
      EXPECT_NEAR(ext.eval(M - h * M), base.eval(M - h * M), 1e-6) << base.describe();
      EXPECT_NEAR(ext.deriv(M * (1 - 1e-12)), base.deriv(M), 1e-9) << base.describe();
      const double step = 2 * M / 2000;
      for (int i = 1; i < 2000; ++i) {
        const double t = i * step;
        const double d2 = ext.eval(t - step) - 2 * ext.eval(t) + ext.eval(t + step);
        EXPECT_LE(d2, 1e-9) << base.describe() << " M=" << M << " t=" << t;
      }
    }
  }
}

TEST(Extension, RejectsNonConcaveJoin) {
  // t/(1+log t)^3 has phi(M) < M phi'(M)? No: check decreasing branch instead.
  EXPECT_THROW(extend_concave(ConcaveRate::subexponential(3.0), 1.0), DomainError);
}

TEST(SubgeomConstants, Polynomial) {
  const auto kit = build_rate_kit(ConcaveRate::polynomial(0.5));
  const auto c = subgeom_constants(kit, 1, 1e5, {0.6});
  EXPECT_GE(c.c5, 1.0);
  EXPECT_LE(c.c5, 2.0);
  EXPECT_GE(c.c2, 1.0);
  EXPECT_NEAR(c.Mkappa_for(0.6), 4.0 / 3.0, 1e-10);
  EXPECT_NEAR(c.c1, 2.25, 1e-12);  // R(1)/r(0)
  EXPECT_EQ(c.c3, 1.0);
  EXPECT_NEAR(c.c4, 2.0, 1e-12);
}

TEST(SubgeomConstants, AllFamiliesCertify) {
  for (const auto& phi : families()) {
    const auto kit = build_rate_kit(phi);
    const auto c = subgeom_constants(kit, 2, 1e4, {0.5, 0.1});
    EXPECT_TRUE(std::isfinite(c.c1) && std::isfinite(c.c2) && std::isfinite(c.c5)) << phi.describe();
    EXPECT_GE(c.c2, 1.0);
    EXPECT_GE(c.step_ratio, 1.0);
    // r(t) <= kappa R(t) past M_kappa
    for (double t = c.Mkappa_for(0.1) + 1e-9; t < 1e4; t *= 1.5)
      EXPECT_LE(kit.log_r(t) - kit.log_R(t), std::log(0.1) + 1e-12);
  }
}

TEST(SubgeomConstants, HorizonTooSmall) {
  const auto kit = build_rate_kit(ConcaveRate::polynomial(0.5));
  EXPECT_THROW(subgeom_constants(kit, 1, 100, {}), DomainError);
}

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "subgeo/chains.hpp"
#include "subgeo/error.hpp"

using namespace subgeo;

TEST(Srwm, AcceptFrozenValues) {
  LatticeSpec spec{0.4, 100};
  EXPECT_EQ(srwm_accept(spec, 1.0, 1.0), 1.0);
  EXPECT_NEAR(srwm_accept(spec, 0.0, 0.25), std::pow(0.8, 1.4), 1e-15);
  EXPECT_NEAR(srwm_accept(spec, 0.0, 0.25), 0.7319, 5e-4);
  EXPECT_EQ(srwm_accept(spec, 2.0, 1.75), 1.0);
}

TEST(Srwm, RowAtOrigin) {
  LatticeSpec spec{0.4, 100};
  const auto row = srwm_row(spec, 0.0);
  const double a = std::pow(0.8, 1.4);
  const int i0 = spec.index(0.0);
  EXPECT_NEAR(row[i0 - 1], a / 3, 1e-15);
  EXPECT_NEAR(row[i0 + 1], a / 3, 1e-15);
  EXPECT_NEAR(row[i0], 1 - 2 * a / 3, 1e-15);
  EXPECT_GE(row[i0], 1.0 / 3);
}

TEST(Srwm, RowsStochasticAndBoundaryFolds) {
  LatticeSpec spec{0.4, 40};
  for (int i = 0; i < spec.size(); ++i) {
    const auto r = srwm_row(spec, i);
    EXPECT_NEAR(r.down + r.stay + r.up, 1.0, 1e-15);
    EXPECT_GE(r.stay, 0.0);
  }
  const auto top = srwm_row(spec, spec.size() - 1);
  EXPECT_EQ(top.up, 0.0);
  EXPECT_NEAR(top.stay, 1 - top.down, 1e-15);
}

TEST(Srwm, DetailedBalance) {
  LatticeSpec spec{0.4, 200};
  const auto pi = lattice_stationary(spec);
  EXPECT_NEAR(std::accumulate(pi.begin(), pi.end(), 0.0), 1.0, 1e-12);
  for (int i = 0; i + 1 < spec.size(); ++i) {
    const double lhs = pi[i] * srwm_row(spec, i).up;
    const double rhs = pi[i + 1] * srwm_row(spec, i + 1).down;
    EXPECT_NEAR(lhs, rhs, 1e-12 * lhs);
  }
}

TEST(Srwm, Evolve) {
  LatticeSpec spec{0.4, 100};
  const auto d0 = lattice_delta(spec, 0.0);
  EXPECT_EQ(srwm_evolve(spec, d0, 0), d0);
  const auto one = srwm_evolve(spec, d0, 1);
  const auto row = srwm_row(spec, 0.0);
  for (std::size_t i = 0; i < one.size(); ++i) EXPECT_NEAR(one[i], row[i], 1e-16);
  const auto pi = lattice_stationary(spec);
  const auto pi10 = srwm_evolve(spec, pi, 10);
  double l1 = 0;
  for (std::size_t i = 0; i < pi.size(); ++i) l1 += std::abs(pi[i] - pi10[i]);
  EXPECT_LT(l1, 1e-9);
  auto d = srwm_evolve(spec, d0, 500);
  EXPECT_NEAR(std::accumulate(d.begin(), d.end(), 0.0), 1.0, 1e-12);
  for (double v : d) EXPECT_GE(v, 0.0);
  EXPECT_THROW(srwm_evolve(spec, d0, 1000, 1e3), BudgetError);
}

TEST(Srwm, DriftAsymptotics) {
  // (PV - V)/x^{s-2} -> s(s-h-2)/48
  LatticeSpec spec{0.4, 4000};
  const double s = 2.2, limit = s * (s - spec.h - 2) / 48;
  for (double x : {125.0, 500.0}) {
    const double inc = srwm_drift_increment(spec, spec.index(x), s);
    EXPECT_LT(std::abs(inc / std::pow(x, s - 2) / limit - 1), 0.1) << x;
  }
}

TEST(Srwm, Lyapunov) {
  LatticeSpec spec;
  EXPECT_EQ(lyapunov_eval(spec, 2.2, 0.0).value, 1.0);
  EXPECT_NEAR(lyapunov_eval(spec, 2.2, 2.0).value, 4.5948, 1e-4);
  EXPECT_NEAR(srwm_lyapunov(2.0, 2.2), std::pow(2.0, 2.2), 1e-14);
}

TEST(Ar, MapFrozen) {
  ARSpec spec;
  spec.rho_ar = 1.0;
  Eigen::VectorXd x(2);
  x << 0, 0;
  EXPECT_EQ(ar_step(spec, x, x), x);
  x << 2, 0;
  EXPECT_NEAR((ar_map(spec, x) - x / 2).norm(), 0.0, 1e-15);
}

TEST(Ar, LipschitzBelowOneWhenRhoBelowOne) {
  ARSpec spec;
  spec.rho_ar = 0.8;
  Rng rng = seed_derive(3, 0);
  EXPECT_LE(ar_lipschitz_scan(spec, INFINITY, 10000, rng), 1 + 1e-12);
  EXPECT_LT(ar_lipschitz_scan(spec, 3.0, 10000, rng), 1.0);
}

TEST(Ar, ExpandsRadiallyWhenRhoAboveOne) {
  // |g| = r - r^{1-rho} along a ray has slope 1 + (rho-1) r^{-rho} > 1
  ARSpec spec;
  spec.rho_ar = 1.5;
  Rng rng = seed_derive(3, 1);
  EXPECT_GT(ar_lipschitz_scan(spec, INFINITY, 10000, rng), 1.0);
  EXPECT_NEAR(ar_lipschitz_scan(spec, 1.5, 10000, rng), 0.5, 1e-12);
}

TEST(Ar, RadialConstant) {
  ARSpec spec;
  spec.rho_ar = 1.5;
  EXPECT_NEAR(ar2_radial_constant(spec, std::pow(2.0, 1 / 1.5)), 1.0, 1e-7);
  EXPECT_NEAR(ar2_radial_constant(spec, 1.0), 0.5, 1e-9);
}

TEST(Ar, TruncatedExpNoiseMoments) {
  // p=1, kappa0=1: Laplace with rate beta0, E|z| = 1/beta0
  ARSpec spec;
  spec.p = 1;
  spec.noise = NoiseKind::TruncatedExp;
  spec.beta0 = 2.0;
  spec.beta = 1.0;
  Rng rng = seed_derive(11, 0);
  double m = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) m += std::abs(ar_noise(spec, rng)[0]);
  EXPECT_NEAR(m / n, 0.5, 0.01);
}

TEST(Pcn, StepBasics) {
  PcnSpec spec;
  spec.eigs = PcnSpec::inverse_square_eigs(10);
  spec.validate();
  EXPECT_NEAR(spec.s(), 0.25 * 0.45 / 16, 1e-15);
  Eigen::VectorXd x = Eigen::VectorXd::Ones(10), z = Eigen::VectorXd::Constant(10, 0.3);
  const auto mv = pcn_step(spec, x, z, 0.0);
  EXPECT_TRUE(mv.accepted);
  EXPECT_NEAR((mv.next - (0.5 * x + std::sqrt(0.75) * z)).norm(), 0.0, 1e-15);
  spec.rho = 0;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(10);
  const double a = pcn_accept_prob(spec, zero, z);
  EXPECT_EQ(pcn_step(spec, zero, z, a * 0.999).accepted, true);
  EXPECT_EQ(pcn_step(spec, zero, z, std::min(1.0, a * 1.001)).accepted, a >= 1.0);
  EXPECT_EQ(lyapunov_eval(spec, zero).value, 1.0);
}

TEST(Pcn, AutocorrelationNearRhoWhenFlat) {
  PcnSpec spec;
  spec.p = 3;
  spec.eigs = PcnSpec::inverse_square_eigs(3);
  spec.Cg = 1e-12;
  Rng rng = seed_derive(5, 0);
  Eigen::VectorXd x = pcn_noise(spec, rng);
  const int n = 200000;
  double sxy = 0, sxx = 0;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd y = pcn_step(spec, x, pcn_noise(spec, rng), uniform01(rng)).next;
    sxy += x[0] * y[0];
    sxx += x[0] * x[0];
    x = y;
  }
  EXPECT_NEAR(sxy / sxx, spec.rho, 0.01);
}

TEST(Pcn, ThetaValidation) {
  PcnSpec spec;
  spec.eigs = PcnSpec::inverse_square_eigs(10);
  spec.theta = 0.6;
  EXPECT_THROW(spec.validate(), DomainError);
}

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "subgeo/coupling.hpp"
#include "subgeo/error.hpp"

using namespace subgeo;

namespace {

CouplingSet ball(double M) { return {DeltaKind::ProductBall, M}; }

auto lattice_step(const std::vector<LatticeRow>& rows) {
  return [&rows](int x, int y, Rng& rng) { return couple_srwm(rows, {x, y}, rng); };
}

}  // namespace

TEST(Renewal, DeadTimeSpacing) {
  RenewalClock clock(3);
  std::vector<long> hits;
  for (long n = 0; n < 12; ++n)
    if (clock.observe(n, true)) hits.push_back(n);
  EXPECT_EQ(hits, (std::vector<long>{3, 6, 9}));
}

TEST(Metric, Values) {
  MetricSpec d0;
  EXPECT_EQ(d0(0.0), 0.0);
  EXPECT_EQ(d0(1e-300), 1.0);
  MetricSpec eta{MetricKind::Eta, 4.0, 0.5};
  EXPECT_DOUBLE_EQ(eta(4.0), 0.5);
  EXPECT_EQ(eta(1e6), 1.0);
}

TEST(CouplingSet, Membership) {
  EXPECT_TRUE(ball(0.5).contains(0.5, 0.25, 0, 0));
  EXPECT_FALSE(ball(0.5).contains(0.75, 0.0, 0, 0));
  CouplingSet lvl{DeltaKind::LevelSet, 4.0};
  EXPECT_TRUE(lvl.contains(0, 0, std::log(2.0), std::log(2.0)));
  EXPECT_FALSE(lvl.contains(0, 0, std::log(2.0), std::log(2.5)));
  CouplingSet sq{DeltaKind::SublevelSquare, std::exp(1.0)};
  EXPECT_TRUE(sq.contains(0, 0, 1.0, 0.5));
  EXPECT_FALSE(sq.contains(0, 0, 1.01, 0.5));
}

TEST(CoupleSrwm, DiagonalStaysTogether) {
  LatticeSpec spec{0.4, 40};
  const auto rows = srwm_rows(spec);
  Rng rng = seed_derive(1, 0);
  std::pair<int, int> p{40, 40};
  for (int k = 0; k < 1000; ++k) {
    p = couple_srwm(rows, p, rng);
    ASSERT_EQ(p.first, p.second);
  }
}

TEST(CoupleSrwm, MarginalChiSquare) {
  LatticeSpec spec{0.4, 40};
  const auto rows = srwm_rows(spec);
  const int x = spec.index(1.0), y = spec.index(-2.0);
  Rng rng = seed_derive(2, 0);
  const int n = 100000;
  double cx[3] = {0, 0, 0}, cy[3] = {0, 0, 0};
  for (int k = 0; k < n; ++k) {
    const auto p = couple_srwm(rows, {x, y}, rng);
    cx[p.first - x + 1] += 1;
    cy[p.second - y + 1] += 1;
  }
  auto chi2 = [&](const double* c, int i) {
    const double e[3] = {rows[i].down * n, rows[i].stay * n, rows[i].up * n};
    double s = 0;
    for (int k = 0; k < 3; ++k) s += (c[k] - e[k]) * (c[k] - e[k]) / e[k];
    return s;
  };
  // df = 2, 0.1% critical value
  EXPECT_LT(chi2(cx, x), 13.82);
  EXPECT_LT(chi2(cy, y), 13.82);
}

TEST(CoupleSrwm, SimulateDiagonalStart) {
  LatticeSpec spec{0.4, 40};
  const auto rows = srwm_rows(spec);
  Rng rng = seed_derive(3, 0);
  const int i0 = spec.index(0.0);
  auto tr = simulate_coupled<int>(
      lattice_step(rows), {i0, i0}, 50, ball(100), 2, MetricSpec{},
      [&](int i) { return std::abs(spec.state(i)); }, [](int) { return 0.0; },
      [](int a, int b) { return std::abs(a - b) * 0.25; }, rng);
  for (double d : tr.dists) EXPECT_EQ(d, 0.0);
  ASSERT_FALSE(tr.hitting_times.empty());
  EXPECT_EQ(tr.hitting_times.front(), 2);
  for (std::size_t k = 1; k < tr.hitting_times.size(); ++k)
    EXPECT_GE(tr.hitting_times[k] - tr.hitting_times[k - 1], 2);
  EXPECT_EQ(*tr.coalesced_at, 0);
}

TEST(ProductChain, ExactEpsilonIsOneOver81) {
  LatticeSpec spec{0.4, 100};
  const double eps = lattice_epsilon_exact(spec, ball(0.5), 2);
  EXPECT_NEAR(eps, 1.0 / 81, 1e-12 / 81);
  EXPECT_NEAR(std::exp(lattice_log_epsilon_ball_bound(0.5)), 1.0 / 81, 1e-15);
}

TEST(ProductChain, MonteCarloEpsilonCoversExact) {
  LatticeSpec spec{0.4, 100};
  const auto rows = srwm_rows(spec);
  std::vector<std::pair<int, int>> pairs;
  for (int a = -2; a <= 2; ++a)
    for (int b = -2; b <= 2; ++b)
      if (a != b) pairs.emplace_back(spec.index(a / 4.0), spec.index(b / 4.0));
  auto chk = verify_coupling_set<int>(lattice_step(rows), [](int a, int b) { return std::abs(a - b) * 0.25; },
                                      MetricSpec{}, 2, pairs, pairs, 20000, 7, 0.975, 2);
  const double exact = lattice_epsilon_exact(spec, ball(0.5), 2);
  EXPECT_EQ(chk.pairs_used, 20);
  EXPECT_LE(chk.epsilon_lower, exact);
  EXPECT_GE(chk.epsilon_upper, exact);
  EXPECT_EQ(chk.weak_contraction_violations, 0);
}

TEST(ProductChain, DiagonalAndInitialValues) {
  LatticeSpec spec{0.4, 20};
  auto diag = product_chain_exact(spec, {1.0, 1.0}, 30, ball(0.5), 2, 3);
  for (double v : diag.dist_expectation) EXPECT_EQ(v, 0.0);
  auto off = product_chain_exact(spec, {1.0, -1.0}, 30, ball(0.5), 2, 3);
  EXPECT_EQ(off.dist_expectation[0], 1.0);
  for (int m = 0; m <= 3; ++m) EXPECT_EQ(off.tail[m][0], 1.0);
}

TEST(ProductChain, SupermartingaleAndPropInequality) {
  LatticeSpec spec{0.4, 40};
  const double eps = lattice_epsilon_exact(spec, ball(0.5), 2);
  const int m_max = 6;
  auto res = product_chain_exact(spec, {3.0, -2.5}, 200, ball(0.5), 2, m_max);
  for (std::size_t n = 1; n < res.dist_expectation.size(); ++n)
    EXPECT_LE(res.dist_expectation[n], res.dist_expectation[n - 1]);
  for (int m = 0; m <= m_max; ++m)
    for (std::size_t n = 0; n < res.dist_expectation.size(); ++n)
      EXPECT_LE(res.dist_expectation[n], std::pow(1 - eps, m) + res.tail[m][n]) << m << " " << n;
  // T_m nondecreasing in m
  for (int m = 1; m <= m_max; ++m)
    for (std::size_t n = 0; n < res.tail[m].size(); ++n) EXPECT_GE(res.tail[m][n], res.tail[m - 1][n] - 1e-15);
}

TEST(ProductChain, MatchesSimulation) {
  LatticeSpec spec{0.4, 30};
  const auto rows = srwm_rows(spec);
  auto exact = product_chain_exact(spec, {1.0, -1.0}, 60, ball(0.5), 2, 2);
  const int reps = 10000;
  std::vector<double> mean(61, 0.0);
  std::vector<double> t0_ge(61, 0.0);
  for (int r = 0; r < reps; ++r) {
    Rng rng = seed_derive(11, static_cast<std::uint64_t>(r));
    auto tr = simulate_coupled<int>(
        lattice_step(rows), {spec.index(1.0), spec.index(-1.0)}, 60, ball(0.5), 2, MetricSpec{},
        [&](int i) { return std::abs(spec.state(i)); }, [](int) { return 0.0; },
        [](int a, int b) { return std::abs(a - b) * 0.25; }, rng);
    for (int n = 0; n <= 60; ++n) {
      mean[n] += tr.dists[n];
      const long t0 = tr.hitting_times.empty() ? 1000 : tr.hitting_times[0];
      t0_ge[n] += (t0 >= n) ? 1.0 : 0.0;
    }
  }
  for (int n = 0; n <= 60; ++n) {
    const double p = exact.dist_expectation[n];
    const double se = std::sqrt(std::max(p * (1 - p), 1e-12) / reps);
    EXPECT_NEAR(mean[n] / reps, p, 4 * se + 1e-12) << n;
    const double q = exact.tail[0][n];
    const double se_q = std::sqrt(std::max(q * (1 - q), 1e-12) / reps);
    EXPECT_NEAR(t0_ge[n] / reps, q, 4 * se_q + 1e-12) << n;
  }
}

TEST(ProductChain, BudgetEnforced) {
  LatticeSpec spec{0.4, 100};
  EXPECT_THROW(product_chain_exact(spec, {0.0, 0.25}, 5, ball(0.5), 50, 10, 1e6), BudgetError);
  EXPECT_THROW(lattice_epsilon_exact(spec, ball(0.5), 2000, 1e6), BudgetError);
}

TEST(CoupleAr, SynchronousDistance) {
  ARSpec spec;
  Rng rng = seed_derive(5, 0);
  for (int k = 0; k < 200; ++k) {
    Eigen::VectorXd x = Eigen::VectorXd::Random(2) * 5, y = Eigen::VectorXd::Random(2) * 5;
    auto p = couple_ar(spec, x, y, rng);
    EXPECT_NEAR((p.first - p.second).norm(), (ar_map(spec, x) - ar_map(spec, y)).norm(), 1e-12);
  }
  Eigen::VectorXd x = Eigen::VectorXd::Constant(2, 0.3);
  auto p = couple_ar(spec, x, x, rng);
  EXPECT_EQ((p.first - p.second).norm(), 0.0);
}

TEST(CouplePcn, BothAcceptContractsByRhoPowBeta) {
  PcnSpec spec;
  spec.eigs = PcnSpec::inverse_square_eigs(spec.p);
  MetricSpec d{MetricKind::Eta, 10.0, spec.beta};
  Rng rng = seed_derive(6, 0);
  int checked = 0;
  for (int k = 0; k < 5000; ++k) {
    Eigen::VectorXd x = pcn_noise(spec, rng) * 2, y = pcn_noise(spec, rng) * 2;
    auto mv = couple_pcn(spec, x, y, rng);
    const double before = (x - y).norm();
    if (mv.accept_x && mv.accept_y && before >= 1e-3 && !d.capped(before)) {
      const double ratio = d((mv.x - mv.y).norm()) / d(before);
      EXPECT_NEAR(ratio, std::pow(spec.rho, spec.beta), 1e-9);
      ++checked;
    }
  }
  EXPECT_GT(checked, 1000);
}

TEST(CouplePcn, MarginalKolmogorovSmirnov) {
  PcnSpec spec;
  spec.eigs = PcnSpec::inverse_square_eigs(spec.p);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(spec.p);
  x(0) = 1.5;
  Eigen::VectorXd y = -x;
  const int n = 20000;
  std::vector<double> a(n), b(n);
  Rng r1 = seed_derive(8, 0), r2 = seed_derive(8, 1);
  for (int k = 0; k < n; ++k) {
    a[k] = couple_pcn(spec, x, y, r1).x.norm();
    const Eigen::VectorXd z = pcn_noise(spec, r2);
    b[k] = pcn_step(spec, x, z, uniform01(r2)).next.norm();
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double dmax = 0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);  // rejections tie at |x|
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    dmax = std::max(dmax, std::abs(double(i) / n - double(j) / n));
  }
  EXPECT_LT(dmax, 1.95 * std::sqrt(2.0 / n));
}

#include <gtest/gtest.h>

#include <cmath>

#include "subgeo/error.hpp"
#include "subgeo/metrics.hpp"

using namespace subgeo;

TEST(Tv, FrozenValues) {
  EXPECT_EQ(tv_exact({0.3, 0.7}, {0.3, 0.7}).value, 0.0);
  EXPECT_EQ(tv_exact({1, 0}, {0, 1}).value, 1.0);
  EXPECT_DOUBLE_EQ(tv_exact({0.5, 0.5, 0}, {0, 0.5, 0.5}).value, 0.5);
  EXPECT_FALSE(tv_exact({1}, {1}).stderr_.has_value());
  EXPECT_THROW(tv_exact({1}, {0.5, 0.5}), DomainError);
}

TEST(Tv, MetricAxiomsOnRandomTriples) {
  Rng rng = seed_derive(1, 0);
  auto draw = [&] {
    LatticeDist d(7);
    double s = 0;
    for (auto& v : d) s += (v = uniform01(rng));
    for (auto& v : d) v /= s;
    return d;
  };
  for (int k = 0; k < 500; ++k) {
    auto p = draw(), q = draw(), r = draw();
    EXPECT_DOUBLE_EQ(tv_exact(p, q).value, tv_exact(q, p).value);
    EXPECT_LE(tv_exact(p, r).value, tv_exact(p, q).value + tv_exact(q, r).value + 1e-15);
    EXPECT_GT(tv_exact(p, q).value, 0.0);
  }
}

TEST(Tv, NonincreasingAlongChain) {
  LatticeSpec spec{0.4, 60};
  auto pi = lattice_stationary(spec);
  auto rows = srwm_rows(spec);
  LatticeDist p = lattice_delta(spec, 3.0), next;
  double prev = tv_exact(p, pi).value;
  for (int n = 0; n < 300; ++n) {
    srwm_step_dist(rows, p, next);
    p.swap(next);
    const double cur = tv_exact(p, pi).value;
    EXPECT_LE(cur, prev + 1e-12);
    prev = cur;
  }
}

TEST(CouplingUpper, Basics) {
  auto e = wasserstein_upper(std::vector<double>{0, 0, 0});
  EXPECT_EQ(e.value, 0.0);
  EXPECT_EQ(*e.stderr_, 0.0);
  EXPECT_THROW(wasserstein_upper(std::vector<double>{}), DomainError);
}

TEST(CouplingUpper, DominatesExactTvOnLattice) {
  LatticeSpec spec{0.4, 40};
  const auto rows = srwm_rows(spec);
  const int n = 40, reps = 5000;
  std::vector<CoupledTrace<int>> traces;
  for (int r = 0; r < reps; ++r) {
    Rng rng = seed_derive(3, static_cast<std::uint64_t>(r));
    traces.push_back(simulate_coupled<int>(
        [&](int x, int y, Rng& g) { return couple_srwm(rows, {x, y}, g); },
        {spec.index(1.0), spec.index(-1.0)}, n, CouplingSet{}, 1, MetricSpec{},
        [&](int i) { return std::abs(spec.state(i)); }, [](int) { return 0.0; },
        [](int a, int b) { return std::abs(a - b) * 0.25; }, rng));
  }
  auto p = srwm_evolve(spec, lattice_delta(spec, 1.0), n);
  auto q = srwm_evolve(spec, lattice_delta(spec, -1.0), n);
  const double tv = tv_exact(p, q).value;
  auto w = wasserstein_upper(traces, n);
  EXPECT_GE(w.value + 3 * *w.stderr_, tv);
  auto w0 = wasserstein_upper(traces, 0);
  EXPECT_EQ(w0.value, 1.0);
  EXPECT_EQ(*w0.stderr_, 0.0);
}

TEST(Comonotone, Values) {
  MetricSpec d{MetricKind::Eta, 100.0, 1.0};
  std::vector<double> xs{3, 1, 2}, ys{1, 2, 3};
  EXPECT_EQ(comonotone_w1d(xs, ys, d).value, 0.0);
  std::vector<double> zs{1.5, 2.5, 3.5};
  EXPECT_NEAR(comonotone_w1d(xs, zs, d).value, 0.5 / 100, 1e-15);
  EXPECT_THROW(comonotone_w1d({1}, {1, 2}, d), DomainError);
}

TEST(Comonotone, BelowSynchronousCoupling) {
  // two Gaussian laws shifted by 1, coupled independently vs monotonically
  MetricSpec d{MetricKind::Eta, 4.0, 0.5};
  Rng rng = seed_derive(4, 0);
  std::vector<double> xs, ys, indep;
  for (int k = 0; k < 20000; ++k) {
    xs.push_back(std_normal(rng));
    ys.push_back(1 + std_normal(rng));
    indep.push_back(d(std::abs(xs.back() - ys.back())));
  }
  auto c = comonotone_w1d(xs, ys, d);
  auto u = wasserstein_upper(indep);
  EXPECT_LE(c.value, u.value + 3 * *u.stderr_);
  EXPECT_NEAR(c.value, 0.25, 0.02);
}

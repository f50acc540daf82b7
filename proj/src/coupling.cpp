#include "subgeo/coupling.hpp"

#include <algorithm>
#include <string>

#include "subgeo/error.hpp"

namespace subgeo {

int srwm_sample(const std::vector<LatticeRow>& rows, int i, Rng& rng) {
  const LatticeRow& r = rows[static_cast<std::size_t>(i)];
  const double u = uniform01(rng);
  if (u < r.down) return i - 1;
  if (u < r.down + r.up) return i + 1;
  return i;
}

std::pair<int, int> couple_srwm(const std::vector<LatticeRow>& rows, std::pair<int, int> pair, Rng& rng) {
  const int x = srwm_sample(rows, pair.first, rng);
  if (pair.first == pair.second) return {x, x};
  return {x, srwm_sample(rows, pair.second, rng)};
}

std::pair<int, int> couple_srwm(const LatticeSpec& spec, std::pair<int, int> pair, Rng& rng) {
  // single-use path; repeated stepping should pass precomputed rows
  std::vector<LatticeRow> rows(static_cast<std::size_t>(spec.size()));
  rows[static_cast<std::size_t>(pair.first)] = srwm_row(spec, pair.first);
  rows[static_cast<std::size_t>(pair.second)] = srwm_row(spec, pair.second);
  return couple_srwm(rows, pair, rng);
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> couple_ar(const ARSpec& spec, const Eigen::VectorXd& x,
                                                      const Eigen::VectorXd& y, Rng& rng) {
  const Eigen::VectorXd z = ar_noise(spec, rng);
  return {ar_step(spec, x, z), ar_step(spec, y, z)};
}

PcnPairMove couple_pcn(const PcnSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& y, Rng& rng) {
  const Eigen::VectorXd z = pcn_noise(spec, rng);
  const double u = uniform01(rng);
  PcnMove mx = pcn_step(spec, x, z, u);
  PcnMove my = pcn_step(spec, y, z, u);
  return {std::move(mx.next), std::move(my.next), mx.accepted, my.accepted};
}

bool lattice_in_delta(const LatticeSpec& spec, const CouplingSet& delta, double s_exponent, int i, int j) {
  const double x = spec.state(i), y = spec.state(j);
  return delta.contains(std::abs(x), std::abs(y), lyapunov_eval(spec, s_exponent, x).log_value,
                        lyapunov_eval(spec, s_exponent, y).log_value);
}

namespace {

// out = in * (P ⊗ P) restricted to off-diagonal input, for an N x N
// row-major matrix. Row index is x, column index is y.
void product_step(const std::vector<LatticeRow>& rows, const std::vector<double>& in,
                  std::vector<double>& tmp, std::vector<double>& out) {
  const std::size_t N = rows.size();
  tmp.assign(N * N, 0.0);
  for (std::size_t i = 0; i < N; ++i) {
    const double* src = &in[i * N];
    double* dst = &tmp[i * N];
    const double st = rows[i].stay;
    for (std::size_t j = 0; j < N; ++j) dst[j] += st * src[j];
    if (i + 1 < N) {
      double* up = &tmp[(i + 1) * N];
      const double pu = rows[i].up;
      for (std::size_t j = 0; j < N; ++j) up[j] += pu * src[j];
    }
    if (i > 0) {
      double* dn = &tmp[(i - 1) * N];
      const double pd = rows[i].down;
      for (std::size_t j = 0; j < N; ++j) dn[j] += pd * src[j];
    }
  }
  out.assign(N * N, 0.0);
  for (std::size_t i = 0; i < N; ++i) {
    const double* src = &tmp[i * N];
    double* dst = &out[i * N];
    for (std::size_t j = 0; j < N; ++j) {
      const double v = src[j];
      if (v == 0) continue;
      dst[j] += rows[j].stay * v;
      if (j + 1 < N) dst[j + 1] += rows[j].up * v;
      if (j > 0) dst[j - 1] += rows[j].down * v;
    }
  }
}

void diag_step(const std::vector<LatticeRow>& rows, const std::vector<double>& in, std::vector<double>& out) {
  srwm_step_dist(rows, in, out);
}

struct Layer {
  std::vector<double> off;   // N*N, zero diagonal
  std::vector<double> diag;  // N
  bool active() const { return !diag.empty(); }
  void ensure(std::size_t N) {
    if (!active()) {
      off.assign(N * N, 0.0);
      diag.assign(N, 0.0);
    }
  }
  double mass() const {
    double s = 0;
    for (double v : off) s += v;
    for (double v : diag) s += v;
    return s;
  }
};

}  // namespace

ProductChainResult product_chain_exact(const LatticeSpec& spec, std::pair<double, double> pair0, long n,
                                       const CouplingSet& delta, int ell, int m_max, double max_states,
                                       double s_exponent) {
  if (ell < 1) throw DomainError("coupling", "ell must be >= 1");
  if (m_max < 0) throw DomainError("coupling", "m_max must be >= 0");
  const std::size_t N = static_cast<std::size_t>(spec.size());
  const std::size_t n_layers = static_cast<std::size_t>(m_max + 1) * static_cast<std::size_t>(ell + 1);
  if (static_cast<double>(N) * static_cast<double>(N) * static_cast<double>(n_layers) > max_states)
    throw BudgetError("coupling", "product chain state space exceeds the configured cap");

  const auto rows = srwm_rows(spec);
  std::vector<char> in_delta(N * N);
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j)
      in_delta[i * N + j] = lattice_in_delta(spec, delta, s_exponent, static_cast<int>(i), static_cast<int>(j));

  auto layer_id = [&](int j, int c) { return static_cast<std::size_t>(j) * static_cast<std::size_t>(ell + 1) + static_cast<std::size_t>(c); };
  std::vector<Layer> layers(n_layers), next(n_layers);

  const std::size_t i0 = static_cast<std::size_t>(spec.index(pair0.first));
  const std::size_t j0 = static_cast<std::size_t>(spec.index(pair0.second));
  layers[layer_id(0, ell)].ensure(N);
  if (i0 == j0)
    layers[layer_id(0, ell)].diag[i0] = 1.0;
  else
    layers[layer_id(0, ell)].off[i0 * N + j0] = 1.0;

  // plain pair law for E d0 (mass is never dropped here). The coalesced
  // mass only ever gains nonnegative increments, so E d0 = 1 - coalesced is
  // nonincreasing in floating point as well.
  std::vector<double> pair_off(N * N, 0.0);
  double coalesced = 0;
  if (i0 == j0)
    coalesced = 1.0;
  else
    pair_off[i0 * N + j0] = 1.0;

  ProductChainResult res;
  res.tail.assign(static_cast<std::size_t>(m_max + 1), std::vector<double>(static_cast<std::size_t>(n + 1), 0.0));
  for (auto& t : res.tail) t[0] = 1.0;

  std::vector<double> tmp, stepped, dstep;

  // renewal check at the current time on phase-0 layers
  auto renew = [&]() {
    for (int j = m_max; j >= 0; --j) {
      Layer& L = layers[layer_id(j, 0)];
      if (!L.active()) continue;
      Layer* dst = nullptr;
      if (j + 1 <= m_max) {
        dst = &layers[layer_id(j + 1, ell)];
        dst->ensure(N);
      }
      for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t k = 0; k < N; ++k) {
          if (!in_delta[i * N + k]) continue;
          double& v = (i == k) ? L.diag[i] : L.off[i * N + k];
          if (v == 0) continue;
          if (dst) ((i == k) ? dst->diag[i] : dst->off[i * N + k]) += v;
          v = 0;
        }
      }
    }
  };

  auto record = [&](long t) {
    res.dist_expectation.push_back(1.0 - coalesced);
    if (t + 1 > n) return;
    std::vector<double> by_j(static_cast<std::size_t>(m_max + 1), 0.0);
    for (int j = 0; j <= m_max; ++j)
      for (int c = 0; c <= ell; ++c)
        if (layers[layer_id(j, c)].active()) by_j[static_cast<std::size_t>(j)] += layers[layer_id(j, c)].mass();
    double cum = 0;
    for (int m = 0; m <= m_max; ++m) {
      cum += by_j[static_cast<std::size_t>(m)];
      res.tail[static_cast<std::size_t>(m)][static_cast<std::size_t>(t + 1)] = std::min(1.0, cum);
    }
  };

  renew();  // time 0 (never a renewal since ell >= 1, kept for uniformity)
  record(0);
  for (long t = 1; t <= n; ++t) {
    for (auto& L : next) {
      L.off.clear();
      L.diag.clear();
    }
    for (int j = 0; j <= m_max; ++j) {
      for (int c = 0; c <= ell; ++c) {
        Layer& L = layers[layer_id(j, c)];
        if (!L.active()) continue;
        product_step(rows, L.off, tmp, stepped);
        diag_step(rows, L.diag, dstep);
        for (std::size_t i = 0; i < N; ++i) {
          dstep[i] += stepped[i * N + i];
          stepped[i * N + i] = 0;
        }
        Layer& D = next[layer_id(j, std::max(0, c - 1))];
        if (!D.active()) {
          D.off = std::move(stepped);
          D.diag = std::move(dstep);
          stepped.clear();
          dstep.clear();
        } else {
          for (std::size_t q = 0; q < N * N; ++q) D.off[q] += stepped[q];
          for (std::size_t i = 0; i < N; ++i) D.diag[i] += dstep[i];
        }
      }
    }
    layers.swap(next);
    // drop layers that carry no mass at all
    for (auto& L : layers)
      if (L.active() && L.mass() == 0) {
        L.off.clear();
        L.diag.clear();
      }

    product_step(rows, pair_off, tmp, stepped);
    double landed = 0;
    for (std::size_t i = 0; i < N; ++i) {
      landed += stepped[i * N + i];
      stepped[i * N + i] = 0;
    }
    coalesced = std::min(1.0, coalesced + landed);
    pair_off.swap(stepped);

    renew();
    record(t);
  }
  return res;
}

double lattice_epsilon_exact(const LatticeSpec& spec, const CouplingSet& delta, int ell, double max_work,
                             double s_exponent) {
  if (ell < 1) throw DomainError("coupling", "ell must be >= 1");
  const std::size_t N = static_cast<std::size_t>(spec.size());
  if (static_cast<double>(N) * static_cast<double>(N) * ell * 6 > max_work)
    throw BudgetError("coupling", "exact epsilon: N^2 * ell exceeds the work budget");
  const auto rows = srwm_rows(spec);
  // f = P[X_ell == Y_ell]: a sum of products, so small meeting probabilities
  // keep full relative precision (1 - P[X != Y] would cancel)
  std::vector<double> f(N * N, 0.0), g(N * N);
  for (std::size_t i = 0; i < N; ++i) f[i * N + i] = 1;
  for (int step = 0; step < ell; ++step) {
    // g(i, k) = sum_i' P(i, i') f(i', k)
    for (std::size_t i = 0; i < N; ++i) {
      double* dst = &g[i * N];
      const double* mid = &f[i * N];
      const double st = rows[i].stay, up = rows[i].up, dn = rows[i].down;
      for (std::size_t k = 0; k < N; ++k) dst[k] = st * mid[k];
      if (i + 1 < N) {
        const double* hi = &f[(i + 1) * N];
        for (std::size_t k = 0; k < N; ++k) dst[k] += up * hi[k];
      }
      if (i > 0) {
        const double* lo = &f[(i - 1) * N];
        for (std::size_t k = 0; k < N; ++k) dst[k] += dn * lo[k];
      }
    }
    // f(i, k) = sum_k' P(k, k') g(i, k'), the diagonal is absorbing
    for (std::size_t i = 0; i < N; ++i) {
      const double* src = &g[i * N];
      double* dst = &f[i * N];
      for (std::size_t k = 0; k < N; ++k) {
        double v = rows[k].stay * src[k];
        if (k + 1 < N) v += rows[k].up * src[k + 1];
        if (k > 0) v += rows[k].down * src[k - 1];
        dst[k] = v;
      }
      dst[i] = 1;
    }
  }
  double eps = 1;
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t k = 0; k < N; ++k)
      if (i != k && lattice_in_delta(spec, delta, s_exponent, static_cast<int>(i), static_cast<int>(k)))
        eps = std::min(eps, f[i * N + k]);
  return eps;
}

double lattice_log_epsilon_ball_bound(double M) { return -8.0 * M * std::log(3.0); }

}  // namespace subgeo

#include "branchsim/renewal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "branchsim/parallel.hpp"

namespace branchsim {

namespace {

// Two binomial counters accumulated in one replica pass.
struct PairCounter {
  stats::CounterSummary first;
  stats::CounterSummary second;
};

PairCounter merge(const PairCounter& a, const PairCounter& b) {
  return {merge(a.first, b.first), merge(a.second, b.second)};
}

// Smallest power-tail exponent among the light (finite-mean) types; the
// paper's decay curves use this eta. +inf when every light tail is
// exponential-or-faster.
double light_tail_eta(const std::vector<LifetimeLaw>& lifetimes) {
  double eta = std::numeric_limits<double>::infinity();
  for (const auto& law : lifetimes)
    if (law.kind() == LifetimeKind::LightPareto)
      eta = std::min(eta, law.eta());
  return eta;
}

}  // namespace

ChainPath simulate_chain(const Matrix& M, std::uint32_t i0, std::uint64_t n,
                         Rng& rng) {
  const std::size_t K = M.size();
  if (i0 >= K) throw std::invalid_argument("simulate_chain: i0 out of range");
  std::vector<std::vector<double>> cum(K, std::vector<double>(K));
  for (std::size_t i = 0; i < K; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < K; ++j) {
      acc += M[i][j];
      cum[i][j] = acc;
    }
    cum[i][K - 1] = 1.0;
  }
  ChainPath path;
  path.visit_counts.assign(K, 0);
  path.states.reserve(n);
  std::uint32_t cur = i0;
  for (std::uint64_t step = 0; step < n; ++step) {
    path.states.push_back(cur);
    ++path.visit_counts[cur];
    cur = static_cast<std::uint32_t>(rng.categorical(cum[cur]));
  }
  return path;
}

RenewalSystem::RenewalSystem(Matrix M, std::vector<LifetimeLaw> lifetimes)
    : M_(std::move(M)), lifetimes_(std::move(lifetimes)) {
  const std::size_t K = M_.size();
  if (K == 0 || lifetimes_.size() != K)
    throw std::invalid_argument("RenewalSystem: matrix/lifetime size mismatch");
  row_cum_.assign(K, std::vector<double>(K));
  for (std::size_t i = 0; i < K; ++i) {
    if (M_[i].size() != K)
      throw std::invalid_argument("RenewalSystem: matrix is not square");
    double acc = 0.0;
    for (std::size_t j = 0; j < K; ++j) {
      acc += M_[i][j];
      row_cum_[i][j] = acc;
    }
    row_cum_[i][K - 1] = 1.0;
  }
}

RenewalSystem RenewalSystem::from_model(const ModelSpec& model) {
  return RenewalSystem(build_mean_matrix(model.offspring), model.lifetimes);
}

std::uint32_t RenewalSystem::next_state(std::uint32_t i, Rng& rng) const {
  return static_cast<std::uint32_t>(rng.categorical(row_cum_[i]));
}

RenewalPath simulate_renewal(const RenewalSystem& sys, std::uint32_t i0,
                             double horizon, Rng& rng) {
  const std::size_t K = sys.num_types();
  if (i0 >= K)
    throw std::invalid_argument("simulate_renewal: i0 out of range");
  if (!(horizon > 0.0))
    throw std::invalid_argument("simulate_renewal: horizon must be positive");

  RenewalPath path;
  path.horizon = horizon;
  path.occupation.assign(K, 0.0);
  path.visit_counts.assign(K, 0);
  std::vector<double> sums(K, 0.0);

  std::uint32_t cur = i0;
  for (;;) {
    const double xi = sys.lifetimes()[cur].sample(rng);
    // Completed time so far, re-summed in fixed type order so that the
    // residual below makes the occupation times add up to the horizon.
    double z = 0.0;
    for (std::size_t j = 0; j < K; ++j) z += sums[j];
    path.states.push_back(cur);
    path.lifetimes.push_back(xi);
    if (z + xi > horizon) {
      path.residual = horizon - z;
      path.current_state = cur;
      break;
    }
    sums[cur] += xi;
    ++path.visit_counts[cur];
    ++path.n_t;
    cur = sys.next_state(cur, rng);
  }
  path.occupation = sums;
  path.occupation[cur] += path.residual;
  return path;
}

TailSeries occupation_tail_type1(const RenewalSystem& sys, std::uint32_t i0,
                                 std::span<const double> ts, double c1,
                                 std::uint64_t reps, std::uint64_t seed,
                                 unsigned workers) {
  if (!(c1 > 0.0) || c1 > 1.0)
    throw std::invalid_argument("occupation_tail_type1: c1 must be in (0,1]");
  const double eta = light_tail_eta(sys.lifetimes());
  TailSeries series;
  series.low_precision = reps < 100;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const double t = ts[k];
    const std::uint64_t sub_seed =
        seed + (k + 1) * 0x9e3779b97f4a7c15ULL;  // decorrelate grid points
    const auto counter = parallel_mc<stats::CounterSummary>(
        reps, sub_seed, workers,
        [&](Rng& rng, stats::CounterSummary& acc, std::uint64_t) {
          const RenewalPath path = simulate_renewal(sys, i0, t, rng);
          acc.add(path.occupation[0] / t <= c1);
        });
    const double bound =
        std::isinf(eta) ? 0.0 : std::pow(t, 1.0 - eta);
    series.points.push_back({t, counter.estimate(), bound});
  }
  return series;
}

RenewalCountTails renewal_count_tails(const RenewalSystem& sys,
                                      std::uint32_t i0, double gamma, double t,
                                      double c_t, double a, std::uint64_t reps,
                                      std::uint64_t seed, unsigned workers) {
  if (!(gamma > 0.0) || gamma > 1.0)
    throw std::invalid_argument("renewal_count_tails: gamma must be in (0,1]");
  if (!(c_t > 0.0) || !(a > 0.0))
    throw std::invalid_argument("renewal_count_tails: thresholds must be > 0");

  const double lower_threshold = std::pow(t, gamma) * c_t;
  // For gamma < 1 the upper threshold is the exponent shift t^{gamma+a};
  // for gamma = 1 the lemma's 'a' is a plain multiple of t.
  const double upper_threshold =
      gamma < 1.0 ? std::pow(t, gamma + a) : a * t;

  const auto counters = parallel_mc<PairCounter>(
      reps, seed, workers, [&](Rng& rng, PairCounter& acc, std::uint64_t) {
        const RenewalPath path = simulate_renewal(sys, i0, t, rng);
        const auto n = static_cast<double>(path.n_t);
        acc.first.add(n <= lower_threshold);
        acc.second.add(n > upper_threshold);
      });

  RenewalCountTails out;
  out.t = t;
  out.low_precision = reps < 100;
  out.lower = counters.first.estimate();
  out.lower_bound = 2.0 * c_t;
  out.upper = counters.second.estimate();
  out.upper_bound = gamma < 1.0
                        ? 2.0 * std::exp(-std::pow(t, a / (1.0 - gamma)))
                        : std::exp(-t);
  return out;
}

OccupationType2Tails occupation_type2_tails(
    const RenewalSystem& sys, std::uint32_t i0, std::uint32_t j, double gamma,
    double eta, double t, double c_t, double a, double eps, std::uint64_t reps,
    std::uint64_t seed, unsigned workers) {
  if (sys.num_types() < 2 || j == 0 || j >= sys.num_types())
    throw std::invalid_argument(
        "occupation_type2_tails: needs a finite-mean type index j >= 1");
  if (!(gamma > 0.0) || gamma > 1.0)
    throw std::invalid_argument(
        "occupation_type2_tails: gamma must be in (0,1]");

  const double lower_threshold = std::pow(t, gamma) * c_t;
  const double upper_threshold =
      gamma < 1.0 ? std::pow(t, gamma + a) : a * t;

  const auto counters = parallel_mc<PairCounter>(
      reps, seed, workers, [&](Rng& rng, PairCounter& acc, std::uint64_t) {
        const RenewalPath path = simulate_renewal(sys, i0, t, rng);
        acc.first.add(path.occupation[j] <= lower_threshold);
        acc.second.add(path.occupation[j] >= upper_threshold);
      });

  OccupationType2Tails out;
  out.t = t;
  out.low_precision = reps < 100;
  out.lower = counters.first.estimate();
  out.lower_bound = c_t + std::pow(t, eps - gamma);
  out.upper = counters.second.estimate();
  out.upper_bound =
      gamma < 1.0 ? std::pow(t, 1.0 - eta * gamma) : std::pow(t, 1.0 - eta);
  return out;
}

StableSumTails stable_sum_tails(const LifetimeLaw& law, std::uint64_t n,
                                double d_n, double c_n, std::uint64_t reps,
                                std::uint64_t seed, unsigned workers) {
  if (law.kind() != LifetimeKind::ParetoTail)
    throw std::invalid_argument("stable_sum_tails: law must be ParetoTail");
  const double gamma = law.gamma();
  if (!(gamma > 0.0) || gamma > 1.0)
    throw std::invalid_argument("stable_sum_tails: gamma must be in (0,1]");
  if (!(d_n > 0.0) || !(c_n > 0.0))
    throw std::invalid_argument("stable_sum_tails: sequences must be > 0");

  const double scale = std::pow(static_cast<double>(n), 1.0 / gamma);
  const auto counters = parallel_mc<PairCounter>(
      reps, seed, workers, [&](Rng& rng, PairCounter& acc, std::uint64_t) {
        double s = 0.0;
        for (std::uint64_t k = 0; k < n; ++k) s += law.sample(rng);
        acc.first.add(s > scale * d_n);
        acc.second.add(s <= c_n * scale);
      });

  StableSumTails out;
  out.low_precision = reps < 100;
  out.upper = counters.first.estimate();
  out.upper_bound = std::pow(d_n, -gamma);
  out.lower = counters.second.estimate();
  if (gamma < 1.0) {
    const double c_gamma =
        (10.0 - 8.0 * gamma) * std::pow(2.0 - 2.0 * gamma, 1.0 / (1.0 - gamma));
    out.lower_bound =
        2.0 * std::exp(-std::pow(c_n, -gamma / (1.0 - gamma)) / c_gamma);
  } else {
    // gamma = 1: the decay is exp(-c n) with an existential constant; no
    // closed comparison curve is attached.
    out.lower_bound = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

std::size_t OccupationSolverGrid::index_of(double t) const {
  const auto idx = static_cast<std::size_t>(std::llround(t / grid.dt));
  return std::min(idx, grid.size - 1);
}

OccupationSolverGrid solve_linear_system(const RenewalSystem& sys,
                                         double t_max, double dt) {
  if (!(dt > 0.0) || !(t_max > 0.0))
    throw std::invalid_argument("solve_linear_system: dt, t_max must be > 0");
  const auto cells = static_cast<std::size_t>(std::llround(t_max / dt));
  if (cells > 100'000)
    throw std::invalid_argument("solve_linear_system: more than 1e5 cells");
  const std::size_t N = cells + 1;
  const std::size_t K = sys.num_types();
  const Matrix& M = sys.transition();

  OccupationSolverGrid out;
  out.grid = TimeGrid{dt, N};
  out.K = K;
  out.values.assign(K * K, std::vector<double>(N * N, 0.0));
  // Occupation cannot exceed the horizon: alpha = 1 on a >= t.
  for (auto& v : out.values)
    for (std::size_t m = 0; m < N; ++m)
      for (std::size_t l = m; l < N; ++l) v[m * N + l] = 1.0;

  // Lifetime cdf values and increments on the grid, per type.
  std::vector<std::vector<double>> G(K, std::vector<double>(N));
  std::vector<std::vector<double>> dG(K, std::vector<double>(N - 1));
  for (std::size_t i = 0; i < K; ++i) {
    for (std::size_t m = 0; m < N; ++m)
      G[i][m] = sys.lifetimes()[i].cdf(out.grid.time(m));
    for (std::size_t r = 0; r + 1 < N; ++r) dG[i][r] = G[i][r + 1] - G[i][r];
  }

  auto value = [&](std::size_t k, std::size_t j, std::size_t m,
                   std::size_t l) {
    return l >= m ? 1.0 : out.values[k * K + j][m * N + l];
  };

  // Gauss-Seidel sweeps in ascending (m, l). Each renewal step integrates
  // the lifetime increment over [s_r, s_{r+1}] against the continuation
  // value averaged at the two endpoints (second-order in dt).
  constexpr std::size_t kBudget = 500;
  double residual = std::numeric_limits<double>::infinity();
  std::size_t sweep = 0;
  for (; sweep < kBudget && residual > 1e-8; ++sweep) {
    residual = 0.0;
    for (std::size_t m = 1; m < N; ++m) {
      for (std::size_t l = 0; l < m; ++l) {
        for (std::size_t i = 0; i < K; ++i) {
          for (std::size_t j = 0; j < K; ++j) {
            double acc;
            if (i == j) {
              // The clock for type i runs during the first sojourn: both the
              // remaining horizon and the remaining budget shrink by r.
              acc = 0.0;
              for (std::size_t r = 0; r < l; ++r) {
                double cont = 0.0;
                for (std::size_t k = 0; k < K; ++k)
                  cont += M[i][k] * 0.5 *
                          (value(k, i, m - r, l - r) +
                           value(k, i, m - r - 1, l - r - 1));
                acc += dG[i][r] * cont;
              }
            } else {
              // Type j's clock is untouched during the first sojourn; the
              // path contributes 1 outright if the sojourn outlives t.
              acc = 1.0 - G[i][m];
              for (std::size_t r = 0; r < m; ++r) {
                double cont = 0.0;
                for (std::size_t k = 0; k < K; ++k)
                  cont += M[i][k] * 0.5 *
                          (value(k, j, m - r, l) + value(k, j, m - r - 1, l));
                acc += dG[i][r] * cont;
              }
            }
            acc = std::min(acc, 1.0);
            double& slot = out.values[i * K + j][m * N + l];
            residual = std::max(residual, std::fabs(acc - slot));
            slot = acc;
          }
        }
      }
    }
  }
  if (residual > 1e-8)
    throw NoConvergence("solve_linear_system: budget exhausted");
  out.iterations = sweep;
  out.residual = residual;
  return out;
}

}  // namespace branchsim

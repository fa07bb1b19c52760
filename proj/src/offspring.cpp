#include "branchsim/offspring.hpp"

#include <algorithm>
#include <cmath>

namespace branchsim {

namespace {

constexpr std::size_t kCountTable = 64;

void check_probability_vector(std::span<const double> p, double tol,
                              const char* what) {
  double sum = 0.0;
  for (double x : p) {
    if (x < 0.0) throw std::invalid_argument(std::string(what) + ": negative entry");
    sum += x;
  }
  if (std::fabs(sum - 1.0) > tol)
    throw std::invalid_argument(std::string(what) + ": does not sum to 1");
}

std::vector<double> cumulative(std::span<const double> p) {
  std::vector<double> cum(p.size());
  double run = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    run += p[i];
    cum[i] = run;
  }
  cum.back() = 1.0;
  return cum;
}

}  // namespace

OffspringLaw OffspringLaw::factorized(double beta, double c,
                                      std::vector<double> type_row) {
  if (!(beta > 0.0) || beta > 1.0)
    throw std::invalid_argument("factorized: beta must lie in (0,1]");
  if (!(c > 0.0) || c > 1.0 / (1.0 + beta) + 1e-15)
    throw std::invalid_argument("factorized: need c in (0, 1/(1+beta)]");
  check_probability_vector(type_row, 1e-12, "factorized type_row");

  OffspringLaw law;
  law.kind_ = OffspringKind::Factorized;
  law.K_ = type_row.size();
  law.beta_ = beta;
  law.c_ = c;
  law.type_row_ = std::move(type_row);
  law.type_cum_ = cumulative(law.type_row_);
  law.count_cdf_.resize(kCountTable + 1);
  for (std::size_t k = 0; k <= kCountTable; ++k)
    law.count_cdf_[k] = 1.0 - law.count_tail(k);
  return law;
}

OffspringLaw OffspringLaw::explicit_table(
    std::size_t K, std::map<std::vector<std::uint32_t>, double> table) {
  if (K == 0 || table.empty())
    throw std::invalid_argument("explicit_table: empty law");
  OffspringLaw law;
  law.kind_ = OffspringKind::Explicit;
  law.K_ = K;
  for (auto& [counts, p] : table) {
    if (counts.size() != K)
      throw std::invalid_argument("explicit_table: count vector size != K");
    law.counts_.push_back(counts);
    law.probs_.push_back(p);
  }
  check_probability_vector(law.probs_, 1e-12, "explicit_table probabilities");
  law.probs_cum_ = cumulative(law.probs_);
  return law;
}

double OffspringLaw::count_tail(std::uint64_t k) const {
  if (kind_ != OffspringKind::Factorized)
    throw std::logic_error("count_tail: Factorized only");
  if (k == 0) return 1.0 - c_;
  if (beta_ == 1.0) return k >= 2 ? 0.0 : c_;
  // 1 - F(k) = c beta Gamma(k - beta) / (Gamma(1 - beta) Gamma(k + 1)),
  // the closed form of the alternating binomial partial sums of h.
  const double kk = static_cast<double>(k);
  return c_ * beta_ *
         std::exp(std::lgamma(kk - beta_) - std::lgamma(1.0 - beta_) -
                  std::lgamma(kk + 1.0));
}

std::uint64_t OffspringLaw::sample_count(Rng& rng) const {
  const double u = rng.uniform();
  if (u < count_cdf_[0]) return 0;
  if (u < count_cdf_[kCountTable]) {
    const auto it =
        std::upper_bound(count_cdf_.begin(), count_cdf_.end(), u);
    return static_cast<std::uint64_t>(it - count_cdf_.begin());
  }
  // Heavy tail beyond the table: invert the exact closed-form tail.
  const double target = 1.0 - u;  // want smallest k with tail(k) < target
  std::uint64_t lo = kCountTable, hi = 2 * kCountTable;
  while (count_tail(hi) >= target && hi < (1ULL << 50)) {
    lo = hi;
    hi *= 2;
  }
  while (lo + 1 < hi) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (count_tail(mid) < target)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

std::vector<double> OffspringLaw::mean_row() const {
  std::vector<double> row(K_, 0.0);
  if (kind_ == OffspringKind::Factorized) {
    // h'(1) = 1: the count law is critical, so the row is just type_row.
    row = type_row_;
  } else {
    for (std::size_t e = 0; e < counts_.size(); ++e)
      for (std::size_t j = 0; j < K_; ++j)
        row[j] += probs_[e] * counts_[e][j];
  }
  return row;
}

double OffspringLaw::gf(std::span<const double> s) const {
  if (kind_ == OffspringKind::Factorized) {
    double z = 0.0;
    for (std::size_t j = 0; j < K_; ++j) z += type_row_[j] * s[j];
    return z + c_ * std::pow(1.0 - z, 1.0 + beta_);
  }
  double value = 0.0;
  for (std::size_t e = 0; e < counts_.size(); ++e) {
    double term = probs_[e];
    for (std::size_t j = 0; j < K_; ++j)
      for (std::uint32_t r = 0; r < counts_[e][j]; ++r) term *= s[j];
    value += term;
  }
  return value;
}

double OffspringLaw::survival_map(std::span<const double> q) const {
  if (kind_ == OffspringKind::Factorized) {
    double w = 0.0;
    for (std::size_t j = 0; j < K_; ++j) w += type_row_[j] * q[j];
    return w - c_ * std::pow(w, 1.0 + beta_);
  }
  double value = 0.0;
  for (std::size_t e = 0; e < counts_.size(); ++e) {
    double log_term = 0.0;
    for (std::size_t j = 0; j < K_; ++j)
      if (counts_[e][j] > 0)
        log_term += counts_[e][j] * std::log1p(-std::min(q[j], 1.0));
    value += probs_[e] * (-std::expm1(log_term));
  }
  return value;
}

std::vector<std::uint32_t> OffspringLaw::sample(Rng& rng) const {
  std::vector<std::uint32_t> counts(K_, 0);
  if (kind_ == OffspringKind::Explicit) {
    return counts_[rng.categorical(probs_cum_)];
  }
  const std::uint64_t n = sample_count(rng);
  for (std::uint64_t r = 0; r < n; ++r)
    ++counts[rng.categorical(type_cum_)];
  return counts;
}

std::vector<double> gf_eval(const OffspringSet& laws,
                            std::span<const double> s) {
  if (laws.empty() || s.size() != laws.size())
    throw std::invalid_argument("gf_eval: dimension mismatch");
  for (double x : s)
    if (!(x >= 0.0) || x > 1.0) throw OutOfDomain("gf_eval: s outside [0,1]^K");
  std::vector<double> out(laws.size());
  for (std::size_t i = 0; i < laws.size(); ++i) out[i] = laws[i].gf(s);
  return out;
}

std::vector<std::vector<double>> gf_iterate(const OffspringSet& laws,
                                            std::size_t n,
                                            std::span<const double> s0) {
  std::vector<std::vector<double>> seq;
  seq.reserve(n + 1);
  seq.emplace_back(s0.begin(), s0.end());
  for (std::size_t k = 0; k < n; ++k) seq.push_back(gf_eval(laws, seq.back()));
  return seq;
}

SurvivalSequence survival_sequence(const OffspringSet& laws,
                                   std::size_t n_max) {
  if (n_max < 100)
    throw std::invalid_argument("survival_sequence: need n_max >= 100");
  const std::size_t K = laws.size();
  SurvivalSequence out;
  out.survival.assign(K, std::vector<double>());
  std::vector<double> q(K, 1.0), next(K);
  for (std::size_t n = 1; n <= n_max; ++n) {
    for (std::size_t i = 0; i < K; ++i) next[i] = laws[i].survival_map(q);
    q = next;
    for (std::size_t i = 0; i < K; ++i) out.survival[i].push_back(q[i]);
  }
  // Slope over the last decade of the total survival mass.
  std::vector<double> xs, ys;
  const double lo = static_cast<double>(n_max) / 10.0;
  for (int p = 0; p < 32; ++p) {
    const double n = lo * std::pow(10.0, p / 31.0);
    const auto idx = static_cast<std::size_t>(std::llround(n)) - 1;
    double total = 0.0;
    for (std::size_t i = 0; i < K; ++i) total += out.survival[i][idx];
    if (!xs.empty() && static_cast<double>(idx + 1) == xs.back()) continue;
    xs.push_back(static_cast<double>(idx + 1));
    ys.push_back(total);
  }
  out.slope_fit = stats::loglog_slope(xs, ys);
  return out;
}

// ---------------------------------------------------------------------------

KernelMatrix kernel_unit(const TimeGrid& grid, std::size_t K) {
  KernelMatrix m;
  m.grid = grid;
  m.K = K;
  m.entries.assign(K * K, GridFn(grid.size, 0.0));
  for (std::size_t i = 0; i < K; ++i)
    m.at(i, i).assign(grid.size, 1.0);
  return m;
}

KernelMatrix lifetime_kernel(const std::vector<std::vector<double>>& M,
                             const std::vector<LifetimeLaw>& lifetimes,
                             const TimeGrid& grid) {
  const std::size_t K = M.size();
  KernelMatrix m;
  m.grid = grid;
  m.K = K;
  m.entries.assign(K * K, GridFn(grid.size, 0.0));
  for (std::size_t i = 0; i < K; ++i) {
    GridFn gamma(grid.size);
    for (std::size_t k = 0; k < grid.size; ++k)
      gamma[k] = lifetimes[i].cdf(grid.time(k));
    for (std::size_t j = 0; j < K; ++j)
      for (std::size_t k = 0; k < grid.size; ++k)
        m.at(i, j)[k] = M[i][j] * gamma[k];
  }
  return m;
}

KernelMatrix matrix_convolution(const KernelMatrix& A, const KernelMatrix& B) {
  if (!(A.grid == B.grid) || A.K != B.K)
    throw GridMismatch("matrix_convolution: incompatible grids");
  const std::size_t K = A.K, n = A.grid.size;
  KernelMatrix C;
  C.grid = A.grid;
  C.K = K;
  C.entries.assign(K * K, GridFn(n, 0.0));
  for (std::size_t i = 0; i < K; ++i)
    for (std::size_t j = 0; j < K; ++j) {
      GridFn& out = C.at(i, j);
      for (std::size_t k = 0; k < K; ++k) {
        const GridFn& a = A.at(i, k);
        const GridFn& b = B.at(k, j);
        for (std::size_t m = 0; m < n; ++m) {
          double acc = a[m] * b[0];  // mass of b at 0
          for (std::size_t r = 0; r + 1 <= m; ++r)
            acc += a[m - r] * (b[r + 1] - b[r]);
          out[m] += acc;
        }
      }
    }
  return C;
}

std::vector<GridFn> matrix_vector_convolution(const KernelMatrix& A,
                                              std::span<const GridFn> w) {
  if (w.size() != A.K) throw GridMismatch("matrix_vector_convolution: size");
  for (const GridFn& f : w)
    if (f.size() != A.grid.size)
      throw GridMismatch("matrix_vector_convolution: grid length");
  const std::size_t K = A.K, n = A.grid.size;
  std::vector<GridFn> out(K, GridFn(n, 0.0));
  for (std::size_t i = 0; i < K; ++i)
    for (std::size_t k = 0; k < K; ++k) {
      const GridFn& a = A.at(i, k);
      for (std::size_t m = 0; m < n; ++m) {
        double acc = w[k][m] * a[0];
        for (std::size_t r = 0; r + 1 <= m; ++r)
          acc += w[k][m - r] * (a[r + 1] - a[r]);
        out[i][m] += acc;
      }
    }
  return out;
}

ComparisonEnvelope comparison_bounds(const OffspringSet& laws,
                                     const std::vector<std::vector<double>>& M,
                                     const std::vector<LifetimeLaw>& lifetimes,
                                     std::size_t n, std::span<const double> s,
                                     const TimeGrid& grid) {
  const std::size_t K = laws.size();
  const auto fs = gf_eval(laws, s);
  for (std::size_t i = 0; i < K; ++i)
    if (fs[i] < s[i] - 1e-12)
      throw NotInLambda("comparison_bounds: f(s) >= s fails, s not in Lambda");

  std::vector<double> fn(s.begin(), s.end());
  for (std::size_t k = 0; k < n; ++k) fn = gf_eval(laws, fn);

  std::vector<GridFn> w_gamma(K, GridFn(grid.size)),
      w_tail(K, GridFn(grid.size));
  for (std::size_t i = 0; i < K; ++i)
    for (std::size_t m = 0; m < grid.size; ++m) {
      const double g = lifetimes[i].cdf(grid.time(m));
      w_gamma[i][m] = (1.0 - s[i]) * g;
      w_tail[i][m] = (1.0 - s[i]) * (1.0 - g);
    }

  const KernelMatrix m1 = lifetime_kernel(M, lifetimes, grid);
  KernelMatrix power = kernel_unit(grid, K);

  ComparisonEnvelope env;
  env.grid = grid;
  env.fn_at_s = fn;
  env.upper.assign(K, GridFn(grid.size, 0.0));
  for (std::size_t j = 0; j < n; ++j) {
    const auto term = matrix_vector_convolution(power, w_tail);
    for (std::size_t i = 0; i < K; ++i)
      for (std::size_t m = 0; m < grid.size; ++m)
        env.upper[i][m] += term[i][m];
    power = matrix_convolution(m1, power);
  }
  const auto lower_term = matrix_vector_convolution(power, w_gamma);
  env.lower.assign(K, GridFn(grid.size, 0.0));
  for (std::size_t i = 0; i < K; ++i)
    for (std::size_t m = 0; m < grid.size; ++m) {
      env.lower[i][m] = (1.0 - fn[i]) - lower_term[i][m];
      env.upper[i][m] += 1.0 - fn[i];
    }
  return env;
}

LifetimeConditionReport lifetime_condition_check(
    const OffspringSet& laws, const std::vector<LifetimeLaw>& lifetimes,
    std::span<const double> v, std::size_t n_max) {
  for (const auto& law : lifetimes)
    if (law.heavy_tailed())
      throw OutOfDomain(
          "lifetime_condition_check: all lifetime means must be finite");
  if (n_max < 200)
    throw std::invalid_argument("lifetime_condition_check: n_max too small");

  const std::size_t K = laws.size();
  std::vector<double> q(K, 1.0), next(K);
  LifetimeConditionReport rep;
  std::size_t grid_pos = 0;
  std::vector<double> targets;
  for (int p = 0; p < 25; ++p)
    targets.push_back(100.0 * std::pow(static_cast<double>(n_max) / 100.0,
                                       p / 24.0));
  for (std::size_t n = 1; n <= n_max; ++n) {
    for (std::size_t i = 0; i < K; ++i) next[i] = laws[i].survival_map(q);
    q = next;
    if (grid_pos < targets.size() &&
        static_cast<double>(n) >= targets[grid_pos]) {
      double denom = 0.0;
      for (std::size_t i = 0; i < K; ++i) denom += v[i] * q[i];
      double ratio = 0.0;
      for (const auto& law : lifetimes)
        ratio = std::max(ratio, static_cast<double>(n) *
                                    law.tail(static_cast<double>(n)) / denom);
      rep.n_grid.push_back(static_cast<double>(n));
      rep.ratio.push_back(std::max(ratio, 1e-300));
      while (grid_pos < targets.size() &&
             static_cast<double>(n) >= targets[grid_pos])
        ++grid_pos;
    }
  }
  rep.fit = stats::loglog_slope(rep.n_grid, rep.ratio);
  // Exponential-type tails underflow to the 1e-300 floor, flattening the
  // fitted slope; a vanished ratio means the condition holds outright.
  rep.holds = rep.fit.slope < 0.0 || rep.ratio.back() <= 1e-100;
  rep.margin = -rep.fit.slope;
  return rep;
}

}  // namespace branchsim

#include "branchsim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace branchsim::stats {

double TailEstimate::stderr_est() const {
  if (trials == 0) return 0.0;
  const double n = static_cast<double>(trials);
  const double p = (static_cast<double>(successes) + 0.5) / (n + 1.0);
  return std::sqrt(p * (1.0 - p) / n);
}

TailEstimate wilson_ci(std::uint64_t successes, std::uint64_t trials) {
  if (trials == 0 || successes > trials)
    throw InvalidCounts("wilson_ci: need 0 <= successes <= trials, trials >= 1");
  const double z = 1.959963984540054;  // 97.5% normal quantile
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half =
      z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  TailEstimate e;
  e.successes = successes;
  e.trials = trials;
  e.p_hat = p;
  e.ci_lo = std::max(0.0, center - half);
  e.ci_hi = std::min(1.0, center + half);
  return e;
}

SlopeFit linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3)
    throw NonPositiveData("linear_fit: need >= 3 matched points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) throw NonPositiveData("linear_fit: degenerate x values");
  SlopeFit fit;
  fit.n_points = x.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ss_res += r * r;
  }
  fit.r_squared = syy > 0 ? std::max(0.0, 1.0 - ss_res / syy) : 1.0;
  fit.stderr_slope =
      x.size() > 2 ? std::sqrt(ss_res / (n - 2.0) / sxx) : 0.0;
  return fit;
}

SlopeFit loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3)
    throw NonPositiveData("loglog_slope: need >= 3 matched points");
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0))
      throw NonPositiveData("loglog_slope: inputs must be strictly positive");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  return linear_fit(lx, ly);
}

namespace {

// Asymptotic Kolmogorov survival function Q(lambda) = 2 sum (-1)^{k-1} e^{-2k^2 lambda^2}.
double kolmogorov_q(double lambda) {
  if (lambda < 1e-8) return 1.0;
  const double a = -2.0 * lambda * lambda;
  double sign = 1.0, sum = 0.0, prev = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = sign * std::exp(a * k * k);
    sum += term;
    if (std::fabs(term) <= 1e-12 * std::fabs(prev) || std::fabs(term) < 1e-300)
      break;
    prev = term;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

}  // namespace

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw EmptySample("ks_two_sample: empty sample");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < sa.size() && j < sb.size()) {
    const double va = sa[i], vb = sb[j];
    if (va <= vb) ++i;
    if (vb <= va) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na -
                              static_cast<double>(j) / nb));
  }
  d = std::max({d, std::fabs(1.0 - static_cast<double>(j) / nb),
                std::fabs(static_cast<double>(i) / na - 1.0)});
  KsResult r;
  r.statistic = d;
  const double ne = std::sqrt(na * nb / (na + nb));
  r.p_value = kolmogorov_q((ne + 0.12 + 0.11 / ne) * d);
  return r;
}

void MergeableSummary::add(double x) {
  if (count == 0) {
    min = max = x;
  } else {
    min = std::min(min, x);
    max = std::max(max, x);
  }
  ++count;
  sum += x;
  sum_sq += x * x;
}

double MergeableSummary::mean() const {
  return count ? sum / static_cast<double>(count) : 0.0;
}

double MergeableSummary::variance() const {
  if (count < 2) return 0.0;
  const double n = static_cast<double>(count);
  return std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0));
}

double MergeableSummary::stderr_mean() const {
  return count ? std::sqrt(variance() / static_cast<double>(count)) : 0.0;
}

MergeableSummary merge(const MergeableSummary& a, const MergeableSummary& b) {
  if (a.count == 0) return b;
  if (b.count == 0) return a;
  MergeableSummary m;
  m.count = a.count + b.count;
  m.sum = a.sum + b.sum;
  m.sum_sq = a.sum_sq + b.sum_sq;
  m.min = std::min(a.min, b.min);
  m.max = std::max(a.max, b.max);
  return m;
}

CounterSummary merge(const CounterSummary& a, const CounterSummary& b) {
  return CounterSummary{a.successes + b.successes, a.trials + b.trials};
}

}  // namespace branchsim::stats

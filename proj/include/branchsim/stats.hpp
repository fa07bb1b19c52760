#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace branchsim::stats {

struct InvalidCounts : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct NonPositiveData : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct EmptySample : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct KindMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Binomial tail-probability estimate with a 95% Wilson interval.
struct TailEstimate {
  std::uint64_t successes = 0;
  std::uint64_t trials = 0;
  double p_hat = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;

  /// Standard error sqrt(p(1-p)/n) with the +1/2 continuity floor so that
  /// 3SE slack never collapses to zero at p_hat = 0.
  double stderr_est() const;
};

TailEstimate wilson_ci(std::uint64_t successes, std::uint64_t trials);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  double r_squared = 0.0;
  std::size_t n_points = 0;
};

/// OLS on (log x, log y); all inputs must be strictly positive.
SlopeFit loglog_slope(std::span<const double> x, std::span<const double> y);

/// Plain OLS on (x, y).
SlopeFit linear_fit(std::span<const double> x, std::span<const double> y);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Classical two-sample Kolmogorov-Smirnov test with asymptotic p-value.
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

/// Moment accumulator; merge is associative and commutative, with the
/// default-constructed summary as identity.
struct MergeableSummary {
  std::uint64_t count = 0;
  double sum = 0.0;
  double sum_sq = 0.0;
  double min = 0.0;
  double max = 0.0;

  void add(double x);
  double mean() const;
  double variance() const;  // unbiased; 0 for count < 2
  double stderr_mean() const;
};

MergeableSummary merge(const MergeableSummary& a, const MergeableSummary& b);

struct CounterSummary {
  std::uint64_t successes = 0;
  std::uint64_t trials = 0;

  void add(bool success) {
    successes += success ? 1 : 0;
    ++trials;
  }
  TailEstimate estimate() const { return wilson_ci(successes, trials); }
};

CounterSummary merge(const CounterSummary& a, const CounterSummary& b);

}  // namespace branchsim::stats

#pragma once

#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "branchsim/rng.hpp"
#include "branchsim/stats.hpp"

namespace branchsim {

struct OutOfDomain : std::domain_error {
  using std::domain_error::domain_error;
};
struct RegimeViolation : std::domain_error {
  using std::domain_error::domain_error;
};

enum class LifetimeKind { ParetoTail, LightPareto, Exponential, Weibull };

/// A particle lifetime law. Continuous, non-arithmetic, with cdf(0) = 0.
///
/// ParetoTail is the exact heavy tail 1 - cdf(x) = (x/x_min)^{-gamma} for
/// x >= x_min; its mean is infinite for gamma <= 1. LightPareto has the
/// global tail bound 1 - cdf(x) <= A x^{-eta} with eta > 1 (uniform mass
/// below x_min); the other kinds are standard light-tailed laws.
class LifetimeLaw {
 public:
  static LifetimeLaw pareto_tail(double gamma, double x_min = 1.0);
  static LifetimeLaw light_pareto(double eta, double A = 1.0,
                                  double x_min = 1.0);
  static LifetimeLaw exponential(double rate);
  static LifetimeLaw weibull(double shape, double scale);

  LifetimeKind kind() const { return kind_; }
  double mean() const { return mean_; }  // +inf for heavy tails
  bool heavy_tailed() const { return !std::isfinite(mean_); }

  // ParetoTail / LightPareto parameter accessors.
  double gamma() const { return p1_; }
  double eta() const { return p1_; }
  double tail_constant() const { return p2_; }  // LightPareto A
  double x_min() const { return p3_; }
  double rate() const { return p1_; }
  double shape() const { return p1_; }
  double scale() const { return p2_; }

  double cdf(double x) const;
  double tail(double x) const { return 1.0 - cdf(x); }
  double quantile(double u) const;
  double sample(Rng& rng) const { return quantile(rng.uniform()); }

  /// Residual lifetime of an individual of age theta: (xi - theta | xi > theta).
  double sample_residual(double theta, Rng& rng) const;

  /// mu_a = E min-truncation at a = int_0^a x dG(x) + a (1 - G(a)).
  double truncated_mean(double a) const;

 private:
  LifetimeLaw(LifetimeKind kind, double p1, double p2, double p3, double mean)
      : kind_(kind), p1_(p1), p2_(p2), p3_(p3), mean_(mean) {}

  LifetimeKind kind_;
  double p1_, p2_, p3_;
  double mean_;
};

/// Bernstein bound 2 exp(-t^2 / (2vn + 2 kappa t)); raw value, may exceed 1.
struct BoundValue {
  double value = 0.0;
  bool vacuous = false;  // value > 1
};

BoundValue bernstein_bound(double t, double n, double v, double kappa);

/// Nagaev bound 2 n A x^{-eta}, valid in the regime x >= c n.
BoundValue nagaev_bound(double n, double x, double eta, double A,
                        double validity_c = 1.0);

/// Empirical z^gamma (1 - H(z)) curve for Z = max{X, Y}, X the heavy law.
struct MaxTailCurve {
  std::vector<double> z;
  std::vector<double> normalized_tail;  // z^gamma * empirical tail
  std::vector<stats::TailEstimate> raw;
};

MaxTailCurve max_law_tail(const LifetimeLaw& heavy, const LifetimeLaw& light,
                          std::span<const double> z_grid, std::uint64_t reps,
                          Rng& rng);

}  // namespace branchsim

#include "branchsim/lifetimes.hpp"

#include <cmath>

namespace branchsim {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double simpson(const LifetimeLaw& law, double lo, double hi) {
  const double mid = 0.5 * (lo + hi);
  return (hi - lo) / 6.0 *
         (law.tail(lo) + 4.0 * law.tail(mid) + law.tail(hi));
}

double adaptive_tail_integral(const LifetimeLaw& law, double lo, double hi,
                              double whole, double tol, int depth) {
  const double mid = 0.5 * (lo + hi);
  const double left = simpson(law, lo, mid);
  const double right = simpson(law, mid, hi);
  const double delta = left + right - whole;
  if (depth <= 0 || std::fabs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adaptive_tail_integral(law, lo, mid, left, tol / 2, depth - 1) +
         adaptive_tail_integral(law, mid, hi, right, tol / 2, depth - 1);
}

}  // namespace

LifetimeLaw LifetimeLaw::pareto_tail(double gamma, double x_min) {
  if (!(gamma > 0.0) || !(x_min > 0.0))
    throw std::invalid_argument("pareto_tail: need gamma > 0, x_min > 0");
  const double mean =
      gamma > 1.0 ? x_min * gamma / (gamma - 1.0) : kInf;
  return LifetimeLaw(LifetimeKind::ParetoTail, gamma, 0.0, x_min, mean);
}

LifetimeLaw LifetimeLaw::light_pareto(double eta, double A, double x_min) {
  if (!(eta > 1.0) || !(A > 0.0) || !(x_min > 0.0))
    throw std::invalid_argument("light_pareto: need eta > 1, A > 0, x_min > 0");
  const double cap = std::pow(x_min, eta);
  // A <= x_min^eta keeps the cdf nonnegative at x_min; A >= x_min^eta/(1+eta)
  // keeps the tail bound A x^{-eta} valid on the uniform part as well.
  if (A > cap * (1.0 + 1e-12) || A < cap / (1.0 + eta) * (1.0 - 1e-12))
    throw std::invalid_argument(
        "light_pareto: need x_min^eta/(1+eta) <= A <= x_min^eta for a global "
        "tail bound");
  const double q = 1.0 - A * std::pow(x_min, -eta);  // cdf at x_min
  const double mean = x_min - 0.5 * x_min * q +
                      A * std::pow(x_min, 1.0 - eta) / (eta - 1.0);
  return LifetimeLaw(LifetimeKind::LightPareto, eta, A, x_min, mean);
}

LifetimeLaw LifetimeLaw::exponential(double rate) {
  if (!(rate > 0.0)) throw std::invalid_argument("exponential: need rate > 0");
  return LifetimeLaw(LifetimeKind::Exponential, rate, 0.0, 0.0, 1.0 / rate);
}

LifetimeLaw LifetimeLaw::weibull(double shape, double scale) {
  if (!(shape > 0.0) || !(scale > 0.0))
    throw std::invalid_argument("weibull: need shape > 0, scale > 0");
  const double mean = scale * std::tgamma(1.0 + 1.0 / shape);
  return LifetimeLaw(LifetimeKind::Weibull, shape, scale, 0.0, mean);
}

double LifetimeLaw::cdf(double x) const {
  if (x < 0.0) throw OutOfDomain("LifetimeLaw::cdf: x < 0");
  switch (kind_) {
    case LifetimeKind::ParetoTail:
      return x < p3_ ? 0.0 : 1.0 - std::pow(x / p3_, -p1_);
    case LifetimeKind::LightPareto: {
      if (x >= p3_) return 1.0 - p2_ * std::pow(x, -p1_);
      const double q = 1.0 - p2_ * std::pow(p3_, -p1_);
      return x / p3_ * q;
    }
    case LifetimeKind::Exponential:
      return -std::expm1(-p1_ * x);
    case LifetimeKind::Weibull:
      return -std::expm1(-std::pow(x / p2_, p1_));
  }
  return 0.0;
}

double LifetimeLaw::quantile(double u) const {
  if (!(u >= 0.0) || u >= 1.0)
    throw OutOfDomain("LifetimeLaw::quantile: u outside [0,1)");
  switch (kind_) {
    case LifetimeKind::ParetoTail:
      return p3_ * std::pow(1.0 - u, -1.0 / p1_);
    case LifetimeKind::LightPareto: {
      const double q = 1.0 - p2_ * std::pow(p3_, -p1_);
      if (u < q) return u * p3_ / q;
      return std::pow(p2_ / (1.0 - u), 1.0 / p1_);
    }
    case LifetimeKind::Exponential:
      return -std::log1p(-u) / p1_;
    case LifetimeKind::Weibull:
      return p2_ * std::pow(-std::log1p(-u), 1.0 / p1_);
  }
  return 0.0;
}

double LifetimeLaw::sample_residual(double theta, Rng& rng) const {
  if (theta < 0.0) throw OutOfDomain("sample_residual: theta < 0");
  if (theta == 0.0) return sample(rng);
  const double base = cdf(theta);
  const double u = base + rng.uniform() * (1.0 - base);
  return std::max(0.0, quantile(std::min(u, std::nexttoward(1.0, 0.0))) - theta);
}

double LifetimeLaw::truncated_mean(double a) const {
  if (!(a > 0.0)) throw OutOfDomain("truncated_mean: need a > 0");
  switch (kind_) {
    case LifetimeKind::ParetoTail: {
      const double m = p3_, g = p1_;
      if (a <= m) return a;
      if (g == 1.0) return m + m * std::log(a / m);
      return m + std::pow(m, g) * (std::pow(a, 1.0 - g) - std::pow(m, 1.0 - g)) /
                     (1.0 - g);
    }
    case LifetimeKind::LightPareto: {
      const double m = p3_, eta = p1_, A = p2_;
      const double q = 1.0 - A * std::pow(m, -eta);
      if (a <= m) return a - q * a * a / (2.0 * m);
      return m - 0.5 * q * m +
             A * (std::pow(m, 1.0 - eta) - std::pow(a, 1.0 - eta)) / (eta - 1.0);
    }
    case LifetimeKind::Exponential:
      return -std::expm1(-p1_ * a) / p1_;
    case LifetimeKind::Weibull:
      return adaptive_tail_integral(*this, 0.0, a, simpson(*this, 0.0, a),
                                    1e-10 * a, 48);
  }
  return 0.0;
}

BoundValue bernstein_bound(double t, double n, double v, double kappa) {
  if (!(t > 0.0) || !(n > 0.0) || !(v > 0.0) || kappa < 0.0)
    throw OutOfDomain("bernstein_bound: need t, n, v > 0 and kappa >= 0");
  BoundValue b;
  b.value = 2.0 * std::exp(-t * t / (2.0 * v * n + 2.0 * kappa * t));
  b.vacuous = b.value > 1.0;
  return b;
}

BoundValue nagaev_bound(double n, double x, double eta, double A,
                        double validity_c) {
  if (!(n >= 1.0) || !(x > 0.0) || !(eta > 1.0) || !(A > 0.0))
    throw OutOfDomain("nagaev_bound: invalid parameters");
  if (x < validity_c * n)
    throw RegimeViolation("nagaev_bound: x < c*n outside validity regime");
  BoundValue b;
  b.value = 2.0 * n * A * std::pow(x, -eta);
  b.vacuous = b.value > 1.0;
  return b;
}

MaxTailCurve max_law_tail(const LifetimeLaw& heavy, const LifetimeLaw& light,
                          std::span<const double> z_grid, std::uint64_t reps,
                          Rng& rng) {
  if (heavy.kind() != LifetimeKind::ParetoTail)
    throw OutOfDomain("max_law_tail: X must be a ParetoTail law");
  if (!std::isfinite(light.mean()))
    throw OutOfDomain("max_law_tail: Y must have finite mean");
  if (reps == 0) throw stats::EmptySample("max_law_tail: reps = 0");

  std::vector<std::uint64_t> hits(z_grid.size(), 0);
  for (std::uint64_t r = 0; r < reps; ++r) {
    const double z = std::max(heavy.sample(rng), light.sample(rng));
    for (std::size_t k = 0; k < z_grid.size(); ++k)
      if (z > z_grid[k]) ++hits[k];
  }
  MaxTailCurve curve;
  const double gamma = heavy.gamma();
  for (std::size_t k = 0; k < z_grid.size(); ++k) {
    const auto est = stats::wilson_ci(hits[k], reps);
    curve.z.push_back(z_grid[k]);
    curve.normalized_tail.push_back(std::pow(z_grid[k], gamma) * est.p_hat);
    curve.raw.push_back(est);
  }
  return curve;
}

}  // namespace branchsim

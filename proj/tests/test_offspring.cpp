#include "doctest.h"

#include <cmath>
#include <map>
#include <vector>

#include "branchsim/offspring.hpp"

using namespace branchsim;

namespace {

OffspringLaw binary_split() {
  // h(s) = s + 0.5 (1-s)^2: children 0 or 2 with probability 1/2 each
  return OffspringLaw::factorized(1.0, 0.5, {1.0});
}

}  // namespace

TEST_CASE("factorized law validation") {
  CHECK_THROWS(OffspringLaw::factorized(1.0, 0.6, {1.0}));   // c(1+b) > 1
  CHECK_THROWS(OffspringLaw::factorized(0.0, 0.5, {1.0}));   // beta out of range
  CHECK_THROWS(OffspringLaw::factorized(1.0, 0.5, {0.5, 0.4}));  // row sum
}

TEST_CASE("gf evaluation") {
  const OffspringSet single{binary_split()};
  CHECK(gf_eval(single, std::vector<double>{1.0})[0] == 1.0);
  CHECK(gf_eval(single, std::vector<double>{0.0})[0] == doctest::Approx(0.5));

  const OffspringSet pair{OffspringLaw::factorized(1.0, 0.5, {0.5, 0.5}),
                          OffspringLaw::factorized(1.0, 0.5, {0.5, 0.5})};
  const auto vals = gf_eval(pair, std::vector<double>{0.0, 1.0});
  CHECK(vals[0] == doctest::Approx(0.625).epsilon(1e-12));

  CHECK_THROWS_AS(gf_eval(single, std::vector<double>{1.5}), OutOfDomain);
  CHECK_THROWS_AS(gf_eval(single, std::vector<double>{-0.1}), OutOfDomain);
}

TEST_CASE("gf at 1 is exactly 1 for every law kind") {
  std::map<std::vector<std::uint32_t>, double> table{
      {{0, 0}, 0.25}, {{1, 1}, 0.5}, {{2, 0}, 0.125}, {{0, 2}, 0.125}};
  const OffspringSet laws{OffspringLaw::factorized(0.7, 0.4, {0.3, 0.7}),
                          OffspringLaw::explicit_table(2, table)};
  const auto vals = gf_eval(laws, std::vector<double>{1.0, 1.0});
  CHECK(std::fabs(vals[0] - 1.0) <= 1e-15);
  CHECK(std::fabs(vals[1] - 1.0) <= 1e-15);
}

TEST_CASE("gf iteration reproduces hand values and Kolmogorov decay") {
  const OffspringSet single{binary_split()};
  const auto seq0 = gf_iterate(single, 0, std::vector<double>{0.25});
  CHECK(seq0.size() == 1);
  CHECK(seq0[0][0] == doctest::Approx(0.25));

  const auto seq = gf_iterate(single, 10'000, std::vector<double>{0.0});
  CHECK(seq[1][0] == doctest::Approx(0.5));
  CHECK(seq[2][0] == doctest::Approx(0.625));
  for (std::size_t n = 1; n < seq.size(); ++n) {
    CHECK(seq[n][0] >= seq[n - 1][0]);
    CHECK(seq[n][0] <= 1.0);
  }
  const double survival = 1.0 - seq[10'000][0];
  CHECK(survival >= 1.9 / 10'000);
  CHECK(survival <= 2.1 / 10'000);
}

TEST_CASE("survival sequence exponent fits") {
  const auto one = survival_sequence({binary_split()}, 10'000);
  CHECK(one.slope_fit.slope > -1.05);
  CHECK(one.slope_fit.slope < -0.95);

  const auto half = survival_sequence(
      {OffspringLaw::factorized(0.5, 0.9 / 1.5, {1.0})}, 10'000);
  CHECK(half.slope_fit.slope > -2.2);
  CHECK(half.slope_fit.slope < -1.8);

  CHECK_THROWS(survival_sequence({binary_split()}, 99));
}

TEST_CASE("sampling matches the law") {
  Rng rng(21);
  SUBCASE("binary split frequencies") {
    const auto law = binary_split();
    int zeros = 0, twos = 0;
    for (int k = 0; k < 100'000; ++k) {
      const auto kids = law.sample(rng);
      if (kids[0] == 0) ++zeros;
      else if (kids[0] == 2) ++twos;
      else CHECK(false);
    }
    CHECK(std::fabs(zeros / 1e5 - 0.5) < 3.0 * 0.5 / std::sqrt(1e5) + 0.002);
    CHECK(std::fabs(twos / 1e5 - 0.5) < 3.0 * 0.5 / std::sqrt(1e5) + 0.002);
  }
  SUBCASE("deterministic explicit table") {
    const auto law = OffspringLaw::explicit_table(
        2, {{std::vector<std::uint32_t>{0, 0}, 1.0}});
    for (int k = 0; k < 100; ++k) {
      const auto kids = law.sample(rng);
      CHECK(kids[0] == 0);
      CHECK(kids[1] == 0);
    }
  }
  SUBCASE("heavy count law is critical in mean") {
    const auto law = OffspringLaw::factorized(0.5, 0.5, {1.0});
    stats::MergeableSummary s;
    for (int k = 0; k < 200'000; ++k)
      s.add(static_cast<double>(law.sample(rng)[0]));
    CHECK(std::fabs(s.mean() - 1.0) <= 3.0 * s.stderr_mean());
  }
  SUBCASE("empirical count tail matches the closed form") {
    const auto law = OffspringLaw::factorized(0.5, 0.5, {1.0});
    const int n = 200'000;
    int over = 0;
    for (int k = 0; k < n; ++k) over += law.sample(rng)[0] > 20 ? 1 : 0;
    const double expect = law.count_tail(20);
    CHECK(std::fabs(over / double(n) - expect) <
          3.0 * std::sqrt(expect / n) + 1e-4);
  }
}

TEST_CASE("empirical pgf matches gf_eval") {
  Rng rng(22);
  const auto law = OffspringLaw::factorized(0.6, 0.5, {0.4, 0.6});
  const double s0 = 0.7, s1 = 0.3;
  const int n = 200'000;
  stats::MergeableSummary s;
  for (int k = 0; k < n; ++k) {
    const auto kids = law.sample(rng);
    s.add(std::pow(s0, kids[0]) * std::pow(s1, kids[1]));
  }
  const double exact = gf_eval({law, law}, std::vector<double>{s0, s1})[0];
  CHECK(std::fabs(s.mean() - exact) <= 3.0 * s.stderr_mean());
}

TEST_CASE("mean row by finite differences") {
  const auto law = OffspringLaw::factorized(0.8, 0.4, {0.25, 0.75});
  const auto row = law.mean_row();
  const double eps = 1e-6;
  for (int j = 0; j < 2; ++j) {
    std::vector<double> s{1.0, 1.0};
    s[j] -= eps;
    const double fd = (1.0 - gf_eval({law, law}, s)[0]) / eps;
    CHECK(fd == doctest::Approx(row[j]).epsilon(1e-4));
  }
}

TEST_CASE("matrix convolution unit and exponential powers") {
  const TimeGrid grid{0.01, 801};  // t up to 8
  const std::vector<std::vector<double>> M{{1.0}};
  const std::vector<LifetimeLaw> expo{LifetimeLaw::exponential(1.0)};
  const KernelMatrix A = lifetime_kernel(M, expo, grid);
  const KernelMatrix unit = kernel_unit(grid, 1);

  const KernelMatrix AU = matrix_convolution(A, unit);
  for (std::size_t m = 0; m < grid.size; m += 50)
    CHECK(AU.at(0, 0)[m] == doctest::Approx(A.at(0, 0)[m]).epsilon(1e-12));

  const KernelMatrix A2 = matrix_convolution(A, A);
  for (std::size_t m = 0; m < grid.size; m += 50) {
    const double t = grid.time(m);
    const double gamma2 = 1.0 - std::exp(-t) * (1.0 + t);
    CHECK(std::fabs(A2.at(0, 0)[m] - gamma2) <= 2.0 * grid.dt);
  }

  const KernelMatrix other = lifetime_kernel(M, expo, TimeGrid{0.01, 400});
  CHECK_THROWS_AS(matrix_convolution(A, other), GridMismatch);
}

TEST_CASE("comparison bounds") {
  const TimeGrid grid{0.02, 301};
  const std::vector<std::vector<double>> M1{{1.0}};
  const std::vector<LifetimeLaw> expo{LifetimeLaw::exponential(1.0)};
  const OffspringSet single{binary_split()};

  SUBCASE("degenerate at s = 1") {
    const auto env =
        comparison_bounds(single, M1, expo, 4, std::vector<double>{1.0}, grid);
    for (std::size_t m = 0; m < grid.size; m += 60) {
      CHECK(env.lower[0][m] == doctest::Approx(0.0).epsilon(1e-12));
      CHECK(env.upper[0][m] == doctest::Approx(0.0).epsilon(1e-12));
    }
  }

  SUBCASE("single-type upper bound telescopes") {
    const double sigma = 0.3;
    const std::size_t n = 5;
    const auto env = comparison_bounds(single, M1, expo, n,
                                       std::vector<double>{sigma}, grid);
    // independent assembly of 1 - f_n(sigma) + (1-sigma)(1 - Gamma^{*n}(t))
    KernelMatrix power = kernel_unit(grid, 1);
    const KernelMatrix base = lifetime_kernel(M1, expo, grid);
    for (std::size_t k = 0; k < n; ++k) power = matrix_convolution(base, power);
    const double fn = gf_iterate(single, n, std::vector<double>{sigma})[n][0];
    for (std::size_t m = 0; m < grid.size; m += 30) {
      const double expect =
          (1.0 - fn) + (1.0 - sigma) * (1.0 - power.at(0, 0)[m]);
      CHECK(env.upper[0][m] == doctest::Approx(expect).epsilon(1e-9));
    }
  }

  SUBCASE("lower never exceeds upper") {
    const std::vector<std::vector<double>> M2{{0.6, 0.4}, {0.3, 0.7}};
    const OffspringSet pair{OffspringLaw::factorized(1.0, 0.5, {0.6, 0.4}),
                            OffspringLaw::factorized(0.5, 0.5, {0.3, 0.7})};
    const std::vector<LifetimeLaw> lifetimes{LifetimeLaw::exponential(1.0),
                                             LifetimeLaw::weibull(1.5, 1.0)};
    const auto env = comparison_bounds(pair, M2, lifetimes, 6,
                                       std::vector<double>{0.2, 0.2}, grid);
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t m = 0; m < grid.size; ++m)
        CHECK(env.lower[i][m] <= env.upper[i][m] + 1e-12);
  }

  SUBCASE("off-diagonal points may leave Lambda") {
    const std::vector<std::vector<double>> M2{{0.9, 0.1}, {0.2, 0.8}};
    const OffspringSet pair{OffspringLaw::factorized(1.0, 0.5, {0.9, 0.1}),
                            OffspringLaw::factorized(1.0, 0.5, {0.2, 0.8})};
    const std::vector<LifetimeLaw> lifetimes{LifetimeLaw::exponential(1.0),
                                             LifetimeLaw::exponential(1.0)};
    CHECK_THROWS_AS(comparison_bounds(pair, M2, lifetimes, 3,
                                      std::vector<double>{0.9, 0.1}, grid),
                    NotInLambda);
  }
}

TEST_CASE("finite-mean lifetime condition guard") {
  const OffspringSet single{binary_split()};
  const std::vector<double> v{1.0};

  const auto good = lifetime_condition_check(
      single, {LifetimeLaw::exponential(1.0)}, v, 5000);
  CHECK(good.holds);

  // eta = 3 with beta = 1: n * n^{-3} / (c/n) ~ n^{-1} shrinks at unit rate
  const auto power = lifetime_condition_check(
      single, {LifetimeLaw::light_pareto(3.0, 0.5)}, v, 5000);
  CHECK(power.holds);
  CHECK(power.fit.slope == doctest::Approx(-1.0).epsilon(0.1));

  // eta = 1.5 with beta = 1: n * n^{-1.5} / (c/n) ~ n^{0.5} grows
  const auto bad = lifetime_condition_check(
      single, {LifetimeLaw::light_pareto(1.5, 0.5)}, v, 5000);
  CHECK_FALSE(bad.holds);

  CHECK_THROWS_AS(lifetime_condition_check(
                      single, {LifetimeLaw::pareto_tail(0.5)}, v, 5000),
                  OutOfDomain);
}

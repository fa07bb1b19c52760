#include "doctest.h"

#include <cmath>
#include <vector>

#include "branchsim/model.hpp"

using namespace branchsim;

namespace {

ModelSpec two_type_model(double alpha0, double alpha1, LifetimeLaw life0,
                         double beta0 = 1.0, double beta1 = 1.0) {
  return ModelSpec::create(
      2, 1, {alpha0, alpha1},
      {life0, LifetimeLaw::exponential(1.0)},
      {OffspringLaw::factorized(beta0, 0.5 / (1.0 + beta0), {0.6, 0.4}),
       OffspringLaw::factorized(beta1, 0.5 / (1.0 + beta1), {0.3, 0.7})},
      {0.1, 0.1});
}

}  // namespace

TEST_CASE("mean matrix of critical factorized laws is the type matrix") {
  const OffspringSet laws{OffspringLaw::factorized(1.0, 0.5, {0.9, 0.1}),
                          OffspringLaw::factorized(0.5, 0.5, {0.2, 0.8})};
  const Matrix M = build_mean_matrix(laws);
  CHECK(M[0][0] == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(M[0][1] == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(M[1][0] == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(M[1][1] == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("spectral data of a hand-solved chain") {
  const Matrix M{{0.9, 0.1}, {0.2, 0.8}};
  const auto sd = spectral(M);
  CHECK(sd.p_star[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-10));
  CHECK(sd.p_star[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
  CHECK(sd.v[0] == doctest::Approx(4.0 / 3.0).epsilon(1e-10));
  CHECK(sd.v[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-10));
  CHECK(sd.u[0] == doctest::Approx(0.5));
  CHECK(sd.rho == doctest::Approx(1.0).epsilon(1e-12));
  // normalization <v, u> = 1
  CHECK(sd.v[0] * sd.u[0] + sd.v[1] * sd.u[1] ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("spectral rejects bad matrices") {
  CHECK_THROWS_AS(spectral(Matrix{{0.0, 1.0}, {1.0, 0.0}}), NotErgodic);
  CHECK_THROWS_AS(spectral(Matrix{{0.5, 0.4}, {0.3, 0.7}}),
                  NonStochasticMatrix);
  CHECK_THROWS_AS(spectral(Matrix{{0.5, -0.1, 0.6}, {0.3, 0.3, 0.4},
                                  {0.2, 0.2, 0.6}}),
                  NonStochasticMatrix);
}

TEST_CASE("offspring beta: analytic factorized family") {
  const auto model =
      two_type_model(2.0, 1.5, LifetimeLaw::exponential(1.0), 0.5, 1.0);
  const auto sd = spectral(build_mean_matrix(model.offspring));
  const auto fit = offspring_beta(model, sd);
  CHECK(fit.analytic);
  CHECK(fit.beta == doctest::Approx(0.5));
  // the diagnostic fit should agree with 1 + beta
  CHECK(fit.diagnostics.slope == doctest::Approx(1.5).epsilon(0.02));
}

TEST_CASE("offspring beta: explicit binomial table gives beta = 1") {
  const auto model = ModelSpec::create(
      1, 1, {2.0}, {LifetimeLaw::exponential(1.0)},
      {OffspringLaw::explicit_table(
          1, {{std::vector<std::uint32_t>{0}, 0.25},
              {std::vector<std::uint32_t>{1}, 0.5},
              {std::vector<std::uint32_t>{2}, 0.25}})},
      {0.1});
  const auto sd = spectral(build_mean_matrix(model.offspring));
  const auto fit = offspring_beta(model, sd);
  CHECK_FALSE(fit.analytic);
  CHECK(fit.beta == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("offspring beta rejects the deterministic single-child law") {
  const auto model = ModelSpec::create(
      1, 1, {2.0}, {LifetimeLaw::exponential(1.0)},
      {OffspringLaw::explicit_table(1, {{std::vector<std::uint32_t>{1}, 1.0}})},
      {0.1});
  const auto sd = spectral(build_mean_matrix(model.offspring));
  CHECK_THROWS_AS(offspring_beta(model, sd), DegenerateOffspring);
}

TEST_CASE("critical dimension formulas on hand values") {
  // finite-mean threshold alpha/beta
  const auto fm = critical_dimensions(2.0, 2.0, 1.0, 1.0, false);
  CHECK(fm.regime == Regime::FiniteMean);
  CHECK(fm.threshold() == doctest::Approx(2.0));

  // equal mobility: alpha*gamma/beta
  const auto ca = critical_dimensions(1.0, 1.0, 1.0, 0.5, true);
  CHECK(ca.regime == Regime::CaseA);
  CHECK(ca.threshold() == doctest::Approx(0.5));

  // d_+ by direct substitution
  const auto cb2 = critical_dimensions(3.0, 1.0, 1.0, 0.5, true);
  CHECK(cb2.regime == Regime::CaseB2);
  CHECK(cb2.case_b2 == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(cb2.v_mob == doctest::Approx(0.5));

  CHECK_THROWS_AS(critical_dimensions(1.0, 1.0, 1.0, 1.5, true), InvalidGamma);
  CHECK_THROWS_AS(critical_dimensions(1.0, 1.0, 1.0, 0.0, true), InvalidGamma);
}

TEST_CASE("regime boundary: d_+ meets the case-b1 threshold") {
  // gamma / alpha = 1 / alpha_1 collapses d_+ to alpha_1 gamma / beta
  const double alpha1 = 2.0, gamma = 0.4, alpha = alpha1 * gamma;
  for (const double beta : {0.3, 0.6, 1.0}) {
    const auto cd = critical_dimensions(alpha1, alpha, beta, gamma, true);
    CHECK(cd.case_b2 == doctest::Approx(alpha1 * gamma / beta).epsilon(1e-12));
    CHECK(cd.regime == Regime::CaseB1);  // boundary belongs to case b1
  }
}

TEST_CASE("d_+ decreases in the offspring exponent") {
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 20; ++k) {
    const double beta = 0.05 + 0.95 * k / 19.0;
    const auto cd = critical_dimensions(2.0, 1.0, beta, 0.8, true);
    CHECK(cd.case_b2 < prev);
    prev = cd.case_b2;
  }
}

TEST_CASE("regime classification from a full model") {
  const auto a =
      classify_regime(two_type_model(1.0, 1.5, LifetimeLaw::pareto_tail(0.8)),
                      1.0);
  CHECK(a.regime == Regime::CaseA);

  const auto b1 =
      classify_regime(two_type_model(2.0, 1.5, LifetimeLaw::pareto_tail(0.5)),
                      0.5);
  CHECK(b1.regime == Regime::CaseB1);

  const auto b2 =
      classify_regime(two_type_model(2.0, 1.0, LifetimeLaw::pareto_tail(0.9)),
                      0.5);
  CHECK(b2.regime == Regime::CaseB2);
  CHECK(b2.dims.threshold() ==
        doctest::Approx(0.9 / (1.5 * 0.9 / 1.0 - 0.5)).epsilon(1e-12));

  const auto fm =
      classify_regime(two_type_model(2.0, 1.8, LifetimeLaw::exponential(1.0)),
                      1.0);
  CHECK(fm.regime == Regime::FiniteMean);
  CHECK_FALSE(fm.rationale.empty());
}

TEST_CASE("model validation") {
  const auto expo = LifetimeLaw::exponential(1.0);
  const auto heavy = LifetimeLaw::pareto_tail(0.5);
  const OffspringSet laws{OffspringLaw::factorized(1.0, 0.5, {0.6, 0.4}),
                          OffspringLaw::factorized(1.0, 0.5, {0.3, 0.7})};

  CHECK_THROWS(ModelSpec::create(2, 1, {2.0, 2.5}, {expo, expo}, laws,
                                 {0.1, 0.1}));  // alpha out of range
  CHECK_THROWS(ModelSpec::create(2, 1, {2.0, 0.0}, {expo, expo}, laws,
                                 {0.1, 0.1}));
  CHECK_THROWS(ModelSpec::create(2, 1, {2.0, 1.0}, {expo, heavy}, laws,
                                 {0.1, 0.1}));  // heavy type not first
  CHECK_THROWS(ModelSpec::create(2, 1, {2.0, 1.0}, {heavy, heavy}, laws,
                                 {0.1, 0.1}));  // two heavy types
  CHECK_THROWS(ModelSpec::create(2, 1, {2.0, 1.0}, {expo, expo}, laws,
                                 {0.1, -0.1}));  // negative intensity
  CHECK_THROWS(ModelSpec::create(2, 1, {2.0}, {expo, expo}, laws,
                                 {0.1, 0.1}));  // size mismatch

  const auto ok = ModelSpec::create(2, 1, {2.0, 1.0}, {heavy, expo}, laws,
                                    {0.1, 0.1});
  CHECK(ok.heavy_type() == std::size_t{0});
  CHECK(ok.alpha_min() == doctest::Approx(1.0));
}

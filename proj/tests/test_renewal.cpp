#include "doctest.h"

#include <cmath>
#include <numeric>
#include <vector>

#include "branchsim/renewal.hpp"

using namespace branchsim;

namespace {

RenewalSystem symmetric_two_type(LifetimeLaw first, LifetimeLaw second) {
  return RenewalSystem(Matrix{{0.5, 0.5}, {0.5, 0.5}}, {first, second});
}

}  // namespace

TEST_CASE("chain visits follow the stationary distribution") {
  Rng rng(31);
  const Matrix M{{0.5, 0.5}, {0.5, 0.5}};
  const auto path = simulate_chain(M, 0, 100'000, rng);
  CHECK(path.states.size() == 100'000);
  CHECK(path.states[0] == 0);
  CHECK(path.visit_counts[0] + path.visit_counts[1] == 100'000);
  CHECK(std::fabs(path.visit_counts[0] / 1e5 - 0.5) < 0.01);

  const auto empty = simulate_chain(M, 1, 0, rng);
  CHECK(empty.states.empty());
  CHECK(empty.visit_counts[0] == 0);
  CHECK(empty.visit_counts[1] == 0);

  CHECK_THROWS(simulate_chain(M, 2, 10, rng));
}

TEST_CASE("moderate chain deviations decay with the path length") {
  // P{ t_1(n)/n <= 0.3 } for the symmetric chain shrinks fast in n.
  const Matrix M{{0.5, 0.5}, {0.5, 0.5}};
  std::vector<double> probs;
  for (const std::uint64_t n : {10ULL, 20ULL, 40ULL}) {
    Rng rng(1000 + n);
    int hit = 0;
    const int reps = 20'000;
    for (int k = 0; k < reps; ++k) {
      const auto path = simulate_chain(M, 0, n, rng);
      hit += path.visit_counts[0] <= 0.3 * double(n) ? 1 : 0;
    }
    probs.push_back(hit / double(reps));
  }
  CHECK(probs[0] > probs[1]);
  CHECK(probs[1] > probs[2]);
  CHECK(probs[2] < 0.03);
}

TEST_CASE("renewal path invariants") {
  Rng rng(32);
  const auto sys = symmetric_two_type(LifetimeLaw::pareto_tail(0.7),
                                      LifetimeLaw::weibull(1.3, 0.8));
  for (int rep = 0; rep < 500; ++rep) {
    const double horizon = 0.5 + 50.0 * rng.uniform();
    const auto path = simulate_renewal(sys, rep % 2, horizon, rng);
    CHECK(path.states.size() == path.n_t + 1);
    CHECK(path.lifetimes.size() == path.states.size());
    CHECK(path.visit_counts[0] + path.visit_counts[1] == path.n_t);
    // completed sojourns fit below the horizon, the straddler crosses it
    const double completed =
        std::accumulate(path.lifetimes.begin(), path.lifetimes.end() - 1, 0.0);
    CHECK(completed <= horizon);
    CHECK(completed + path.lifetimes.back() > horizon);
    CHECK(path.residual >= 0.0);
    CHECK(path.residual <= path.lifetimes.back());
    CHECK(path.current_state == path.states.back());
    // occupation times partition the horizon exactly
    const double occ = path.occupation[0] + path.occupation[1];
    CHECK(occ == doctest::Approx(horizon).epsilon(1e-12));
  }
  CHECK_THROWS(simulate_renewal(sys, 5, 1.0, rng));
  CHECK_THROWS(simulate_renewal(sys, 0, 0.0, rng));
}

TEST_CASE("single-type renewal count matches the elementary renewal theorem") {
  Rng rng(33);
  const RenewalSystem sys(Matrix{{1.0}}, {LifetimeLaw::exponential(1.0)});
  stats::MergeableSummary s;
  for (int rep = 0; rep < 500; ++rep) {
    const auto path = simulate_renewal(sys, 0, 1000.0, rng);
    s.add(static_cast<double>(path.n_t));
    CHECK(path.occupation[0] == doctest::Approx(1000.0).epsilon(1e-12));
  }
  CHECK(s.mean() > 950.0);
  CHECK(s.mean() < 1050.0);
}

TEST_CASE("symmetric system splits occupation evenly") {
  Rng rng(34);
  const auto sys = symmetric_two_type(LifetimeLaw::exponential(1.0),
                                      LifetimeLaw::exponential(1.0));
  stats::MergeableSummary share;
  for (int rep = 0; rep < 2000; ++rep) {
    const auto path = simulate_renewal(sys, 0, 50.0, rng);
    share.add(path.occupation[0] / 50.0);
  }
  CHECK(std::fabs(share.mean() - 0.5) < 0.01);
}

TEST_CASE("type-1 occupation tail series") {
  const auto sys = symmetric_two_type(LifetimeLaw::pareto_tail(0.5),
                                      LifetimeLaw::light_pareto(2.0, 0.5));
  const std::vector<double> ts{50.0, 100.0};

  SUBCASE("c1 = 1 is certain") {
    const auto series = occupation_tail_type1(sys, 0, ts, 1.0, 400, 7);
    for (const auto& pt : series.points)
      CHECK(pt.estimate.p_hat == doctest::Approx(1.0));
    CHECK_FALSE(series.low_precision);
  }
  SUBCASE("decay curve uses the lightest power tail") {
    const auto series = occupation_tail_type1(sys, 0, ts, 0.1, 150, 7);
    CHECK(series.points[0].paper_bound == doctest::Approx(1.0 / 50.0));
    CHECK(series.points[1].paper_bound == doctest::Approx(1.0 / 100.0));
  }
  SUBCASE("exponential-only light tails carry no power curve") {
    const auto expo_sys = symmetric_two_type(LifetimeLaw::pareto_tail(0.5),
                                             LifetimeLaw::exponential(1.0));
    const auto series = occupation_tail_type1(expo_sys, 0, ts, 0.1, 150, 7);
    CHECK(series.points[0].paper_bound == 0.0);
  }
  SUBCASE("few replicas raise the precision flag") {
    const auto series = occupation_tail_type1(sys, 0, ts, 0.5, 50, 7);
    CHECK(series.low_precision);
  }
  SUBCASE("bad c1 is rejected") {
    CHECK_THROWS(occupation_tail_type1(sys, 0, ts, 0.0, 100, 7));
    CHECK_THROWS(occupation_tail_type1(sys, 0, ts, 1.5, 100, 7));
  }
}

TEST_CASE("renewal count deviations sit under the comparison curves") {
  const RenewalSystem sys(Matrix{{1.0}}, {LifetimeLaw::pareto_tail(0.5)});
  const auto tails =
      renewal_count_tails(sys, 0, 0.5, 1000.0, 0.1, 0.5, 4000, 11);
  CHECK(tails.lower_bound == doctest::Approx(0.2));
  CHECK(tails.lower.p_hat <= tails.lower_bound);
  // the upper threshold t^{gamma+a} = t is far above the n_t scale t^gamma
  CHECK(tails.upper.p_hat == 0.0);
  CHECK(tails.upper_bound <= 2.0 * std::exp(-1000.0) + 1e-300);
  CHECK_FALSE(tails.low_precision);

  CHECK_THROWS(renewal_count_tails(sys, 0, 1.5, 100.0, 0.1, 0.5, 100, 11));
  CHECK_THROWS(renewal_count_tails(sys, 0, 0.5, 100.0, -1.0, 0.5, 100, 11));
}

TEST_CASE("renewal count deviations at the boundary index gamma = 1") {
  const RenewalSystem sys(Matrix{{1.0}}, {LifetimeLaw::pareto_tail(1.0)});
  const auto tails = renewal_count_tails(sys, 0, 1.0, 200.0, 0.05, 5.0, 2000, 12);
  // mean sojourn grows like log t, so n_t ~ t / log t << 5t
  CHECK(tails.upper.p_hat == 0.0);
  CHECK(tails.upper_bound == doctest::Approx(std::exp(-200.0)));
}

TEST_CASE("finite-mean occupation deviations") {
  const auto sys = symmetric_two_type(LifetimeLaw::pareto_tail(0.5),
                                      LifetimeLaw::light_pareto(3.0, 0.5));
  const auto tails = occupation_type2_tails(sys, 0, 1, 0.5, 3.0, 400.0, 0.2,
                                            0.4, 0.1, 2000, 13);
  CHECK(tails.lower_bound ==
        doctest::Approx(0.2 + std::pow(400.0, -0.4)).epsilon(1e-12));
  CHECK(tails.upper_bound == doctest::Approx(std::pow(400.0, -0.5)));
  // both lemma bounds carry existential constants; allow a small factor
  CHECK(tails.lower.p_hat <= 2.0 * tails.lower_bound);
  CHECK(tails.upper.p_hat <= tails.upper_bound + 3.0 * tails.upper.stderr_est());
  // the lower tail grows with the threshold constant
  const auto wider = occupation_type2_tails(sys, 0, 1, 0.5, 3.0, 400.0, 0.8,
                                            0.4, 0.1, 2000, 13);
  CHECK(wider.lower.p_hat >= tails.lower.p_hat);

  CHECK_THROWS(occupation_type2_tails(sys, 0, 0, 0.5, 3.0, 400.0, 0.2, 0.4,
                                      0.1, 100, 13));
  const RenewalSystem one(Matrix{{1.0}}, {LifetimeLaw::pareto_tail(0.5)});
  CHECK_THROWS(occupation_type2_tails(one, 0, 1, 0.5, 3.0, 400.0, 0.2, 0.4,
                                      0.1, 100, 13));
}

TEST_CASE("heavy-tailed sum deviations") {
  const auto law = LifetimeLaw::pareto_tail(0.5, 1.0);
  SUBCASE("upper tail sits under d_n^{-gamma}") {
    const auto tails = stable_sum_tails(law, 100, 10.0, 0.5, 4000, 17);
    CHECK(tails.upper_bound == doctest::Approx(std::pow(10.0, -0.5)));
    CHECK(tails.upper.p_hat <=
          tails.upper_bound + 3.0 * tails.upper.stderr_est());
    CHECK(std::isfinite(tails.lower_bound));
  }
  SUBCASE("sums cannot undershoot the deterministic floor") {
    // c_n n^{1/gamma} = 50 < n x_min = 100, so the event is empty
    const auto tails = stable_sum_tails(law, 100, 10.0, 0.005, 500, 17);
    CHECK(tails.lower.p_hat == 0.0);
  }
  SUBCASE("gamma = 1 has no closed lower comparison curve") {
    const auto tails = stable_sum_tails(LifetimeLaw::pareto_tail(1.0), 50, 10.0,
                                        0.1, 200, 17);
    CHECK(std::isnan(tails.lower_bound));
  }
  CHECK_THROWS(stable_sum_tails(LifetimeLaw::exponential(1.0), 10, 1.0, 0.5,
                                100, 17));
}

TEST_CASE("parallel tail estimates are worker-count invariant") {
  const auto sys = symmetric_two_type(LifetimeLaw::pareto_tail(0.5),
                                      LifetimeLaw::exponential(1.0));
  const std::vector<double> ts{30.0};
  const auto one = occupation_tail_type1(sys, 0, ts, 0.4, 2000, 23, 1);
  const auto four = occupation_tail_type1(sys, 0, ts, 0.4, 2000, 23, 4);
  CHECK(one.points[0].estimate.successes == four.points[0].estimate.successes);
  const auto replay = occupation_tail_type1(sys, 0, ts, 0.4, 2000, 23, 1);
  CHECK(one.points[0].estimate.successes ==
        replay.points[0].estimate.successes);
}

TEST_CASE("occupation solver structure") {
  const RenewalSystem one(Matrix{{1.0}}, {LifetimeLaw::exponential(1.0)});
  const auto sol = solve_linear_system(one, 2.0, 0.05);
  CHECK(sol.K == 1);
  CHECK(sol.residual <= 1e-8);
  // a >= t is certain; with one type the occupation equals the horizon,
  // so below the diagonal the probability vanishes identically
  for (std::size_t m = 0; m < sol.grid.size; ++m)
    for (std::size_t l = 0; l < sol.grid.size; ++l)
      CHECK(sol.alpha(0, 0, m, l) == (l >= m ? 1.0 : 0.0));

  CHECK_THROWS(solve_linear_system(one, 2.0, 0.0));
  CHECK_THROWS(solve_linear_system(one, 1e5, 0.05));
}

TEST_CASE("occupation solver is monotone and matches simulation") {
  const auto sys = symmetric_two_type(LifetimeLaw::exponential(1.0),
                                      LifetimeLaw::exponential(2.0));
  const auto sol = solve_linear_system(sys, 3.0, 0.05);

  // distribution functions: nondecreasing in a, nonincreasing in t
  const std::size_t N = sol.grid.size;
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      for (std::size_t m = 0; m < N; m += 7)
        for (std::size_t l = 1; l < N; ++l) {
          CHECK(sol.alpha(i, j, m, l) >= sol.alpha(i, j, m, l - 1) - 1e-12);
          if (m >= 7)
            CHECK(sol.alpha(i, j, m, l) <= sol.alpha(i, j, m - 7, l) + 1e-12);
        }

  // Monte Carlo cross-check at a grid point away from the diagonal
  const double t = 2.0, a = 1.0;
  Rng rng(41);
  stats::CounterSummary counter;
  for (int rep = 0; rep < 40'000; ++rep) {
    const auto path = simulate_renewal(sys, 0, t, rng);
    counter.add(path.occupation[1] <= a);
  }
  const auto est = counter.estimate();
  const double solved = sol.alpha(0, 1, sol.index_of(t), sol.index_of(a));
  CHECK(std::fabs(est.p_hat - solved) <= 3.0 * est.stderr_est() + 0.02);
}

#include "branchsim/acceptance.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>

#include "branchsim/branching.hpp"
#include "branchsim/config.hpp"
#include "branchsim/experiment.hpp"
#include "branchsim/parallel.hpp"

namespace branchsim::acceptance {

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t scaled(double scale, std::uint64_t n, std::uint64_t floor_n) {
  const auto m = static_cast<std::uint64_t>(static_cast<double>(n) * scale);
  return std::max(m, floor_n);
}

struct Check {
  bool ok = true;
  std::ostringstream details;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      details << (details.tellp() > 0 ? "; " : "") << "FAILED " << what;
    }
  }
  void note(const std::string& what) {
    details << (details.tellp() > 0 ? "; " : "") << what;
  }
};

CriterionResult run_criterion(int id, const std::string& name, double budget,
                              const std::function<void(Check&)>& body) {
  CriterionResult r;
  r.id = id;
  r.name = name;
  r.budget_seconds = budget;
  const auto start = Clock::now();
  Check check;
  try {
    body(check);
  } catch (const std::exception& e) {
    check.ok = false;
    check.note(std::string("exception: ") + e.what());
  }
  r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  if (r.seconds >= budget) {
    check.ok = false;
    check.note("runtime budget exceeded");
  }
  r.passed = check.ok;
  r.details = check.details.str();
  return r;
}

// --- criterion bodies -----------------------------------------------------

void spectral_exactness(const Options& opts, Check& check) {
  Rng rng(opts.seed ^ 0xA1);
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t K = 1 + rng.next() % 8;
    Matrix M(K, std::vector<double>(K));
    for (auto& row : M) {
      double sum = 0.0;
      for (auto& x : row) {
        x = 0.05 + rng.uniform();  // strictly positive => ergodic
        sum += x;
      }
      for (auto& x : row) x /= sum;
    }
    const SpectralData sd = spectral(M);
    double res = std::fabs(sd.rho - 1.0);
    double u_sum = 0.0, vu = 0.0;
    for (std::size_t j = 0; j < K; ++j) {
      double vm = 0.0, mu = 0.0;
      for (std::size_t i = 0; i < K; ++i) {
        vm += sd.v[i] * M[i][j];
        mu += M[j][i] * sd.u[i];
      }
      res = std::max({res, std::fabs(vm - sd.v[j]), std::fabs(mu - sd.u[j])});
      u_sum += sd.u[j];
      vu += sd.v[j] * sd.u[j];
    }
    res = std::max({res, std::fabs(u_sum - 1.0), std::fabs(vu - 1.0)});
    worst = std::max(worst, res);
  }
  check.note("max residual " + format_float(worst));
  check.require(worst <= 1e-10, "residual <= 1e-10");
}

ModelSpec uniform_row_model(std::size_t K, double beta0) {
  std::vector<double> row(K, 1.0 / static_cast<double>(K));
  OffspringSet offspring;
  std::vector<LifetimeLaw> lifetimes;
  std::vector<double> alphas, intensities;
  for (std::size_t i = 0; i < K; ++i) {
    const double beta_i = i == 0 ? beta0 : 1.0;
    offspring.push_back(
        OffspringLaw::factorized(beta_i, 0.9 / (1.0 + beta_i), row));
    lifetimes.push_back(LifetimeLaw::exponential(1.0));
    alphas.push_back(2.0);
    intensities.push_back(0.0);
  }
  return ModelSpec::create(K, 1, alphas, std::move(lifetimes),
                           std::move(offspring), intensities);
}

void beta_recovery(const Options&, Check& check) {
  double worst = 0.0;
  for (const std::size_t K : {1u, 2u, 4u}) {
    for (const double beta : {0.3, 0.5, 0.8, 1.0}) {
      const ModelSpec model = uniform_row_model(K, beta);
      const SpectralData sd = spectral(build_mean_matrix(model.offspring));
      const BetaFit fit = offspring_beta(model, sd);
      worst = std::max(worst, std::fabs(fit.beta - beta));
    }
  }
  check.note("max |beta error| " + format_float(worst));
  check.require(worst <= 1e-3, "beta within 1e-3");
}

void survival_exponent(const Options&, Check& check) {
  for (const auto& [beta, tol] : {std::pair{1.0, 0.05}, {0.5, 0.15}}) {
    const OffspringSet laws{
        OffspringLaw::factorized(beta, 0.9 / (1.0 + beta), {1.0})};
    const SurvivalSequence seq = survival_sequence(laws, 10'000);
    const double target = -1.0 / beta;
    check.note("beta=" + format_float(beta) + " slope " +
               format_float(seq.slope_fit.slope));
    check.require(std::fabs(seq.slope_fit.slope - target) <= tol,
                  "slope within tolerance at beta=" + format_float(beta));
  }
}

void renewal_count_exponent(const Options& opts, Check& check) {
  const Matrix M{{0.6, 0.4}, {0.3, 0.7}};
  const RenewalSystem sys(
      M, {LifetimeLaw::pareto_tail(0.5), LifetimeLaw::exponential(1.0)});
  const std::uint64_t reps = scaled(opts.scale, 1000, 50);
  std::vector<double> ts{1e3, 1e4, 1e5}, means;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const auto summary = parallel_mc<stats::MergeableSummary>(
        reps, opts.seed + 11 * (k + 1), opts.workers,
        [&](Rng& rng, stats::MergeableSummary& acc, std::uint64_t) {
          acc.add(static_cast<double>(simulate_renewal(sys, 0, ts[k], rng).n_t));
        });
    means.push_back(summary.mean());
  }
  const stats::SlopeFit fit = stats::loglog_slope(ts, means);
  check.note("slope " + format_float(fit.slope));
  check.require(std::fabs(fit.slope - 0.5) <= 0.05, "slope = gamma +- 0.05");
}

void occupation_tail_decay(const Options& opts, Check& check) {
  const Matrix M{{0.6, 0.4}, {0.3, 0.7}};
  const RenewalSystem sys(
      M, {LifetimeLaw::pareto_tail(0.5), LifetimeLaw::light_pareto(2.0, 0.5)});
  const std::uint64_t reps = scaled(opts.scale, 10'000, 200);
  const std::vector<double> ts{1e3, 3e3, 1e4};
  const TailSeries series =
      occupation_tail_type1(sys, 0, ts, 0.05, reps, opts.seed + 5, opts.workers);

  std::vector<double> floored;
  for (std::size_t k = 0; k < series.points.size(); ++k) {
    const auto& p = series.points[k];
    floored.push_back(std::max(
        p.estimate.p_hat, 0.5 / static_cast<double>(p.estimate.trials)));
    check.note("p(" + format_float(p.t) + ")=" + format_float(p.estimate.p_hat));
    if (k > 0) {
      const auto& q = series.points[k - 1];
      const double slack =
          2.0 * (p.estimate.stderr_est() + q.estimate.stderr_est());
      check.require(p.estimate.p_hat <= q.estimate.p_hat + slack,
                    "nonincreasing beyond 2SE");
    }
  }
  const stats::SlopeFit fit = stats::loglog_slope(ts, floored);
  check.note("decay slope " + format_float(fit.slope));
  check.require(fit.slope <= (1.0 - 2.0) + 0.5, "decay slope <= 1-eta+0.5");
}

// Shared by criteria 6 and 7: empirical mu_j / t-bar_j tail counters over an
// (a, j) grid from one batch of simulations per t.
struct GridCounter {
  std::vector<stats::CounterSummary> cells;
};

GridCounter merge(const GridCounter& a, const GridCounter& b) {
  if (a.cells.empty()) return b;
  if (b.cells.empty()) return a;
  GridCounter out = a;
  for (std::size_t k = 0; k < out.cells.size(); ++k)
    out.cells[k] = merge(out.cells[k], b.cells[k]);
  return out;
}

void domination(const Options& opts, Check& check) {
  const std::vector<double> ts{2.0, 4.0, 6.0};
  const std::vector<double> as{0.5, 1.0, 1.5};
  const std::uint64_t reps = scaled(opts.scale, 10'000, 200);

  for (const std::string name : {"all-exponential", "case-a"}) {
    const ModelSpec model = preset(name).model;
    const RenewalSystem sys = RenewalSystem::from_model(model);
    const OccupationSolverGrid grid = solve_linear_system(sys, 6.0, 0.02);
    const Ancestor start{std::vector<double>(model.d, 0.0), 0, 0.0};

    for (std::size_t ti = 0; ti < ts.size(); ++ti) {
      const double t = ts[ti];
      const auto counters = parallel_mc<GridCounter>(
          reps, opts.seed + 31 * (ti + 1) + (name == "case-a" ? 977 : 0),
          opts.workers, [&](Rng& rng, GridCounter& acc, std::uint64_t) {
            if (acc.cells.empty()) acc.cells.resize(model.K * as.size());
            const Genealogy g = simulate_tree(model, start, t, rng);
            const OccupationExtremes ext = occupation_extremes(g, t);
            for (std::size_t j = 0; j < model.K; ++j)
              for (std::size_t ai = 0; ai < as.size(); ++ai)
                acc.cells[j * as.size() + ai].add(ext.mu[j] <= as[ai]);
          });
      for (std::size_t j = 0; j < model.K; ++j) {
        for (std::size_t ai = 0; ai < as.size(); ++ai) {
          const stats::TailEstimate nu =
              counters.cells[j * as.size() + ai].estimate();
          const double alpha_val = grid.alpha(0, j, grid.index_of(t),
                                              grid.index_of(as[ai]));
          check.require(
              nu.p_hat <= alpha_val + 3.0 * nu.stderr_est(),
              name + " nu(0," + std::to_string(j) + ";t=" + format_float(t) +
                  ",a=" + format_float(as[ai]) + ")=" + format_float(nu.p_hat) +
                  " <= alpha=" + format_float(alpha_val) + " + 3SE");
        }
      }
    }
  }
}

void solver_vs_mc(const Options& opts, Check& check) {
  const ModelSpec model = preset("all-exponential").model;
  const RenewalSystem sys = RenewalSystem::from_model(model);
  const OccupationSolverGrid grid = solve_linear_system(sys, 5.0, 0.02);
  check.note("solver residual " + format_float(grid.residual) + " in " +
             std::to_string(grid.iterations) + " sweeps");
  check.require(grid.residual <= 1e-8, "fixed-point residual <= 1e-8");

  const std::vector<double> ts{2.5, 5.0};
  const std::vector<double> as{0.75, 1.5, 3.0};
  const std::uint64_t reps = scaled(opts.scale, 100'000, 2000);
  for (std::size_t ti = 0; ti < ts.size(); ++ti) {
    const double t = ts[ti];
    const auto counters = parallel_mc<GridCounter>(
        reps, opts.seed + 127 * (ti + 1), opts.workers,
        [&](Rng& rng, GridCounter& acc, std::uint64_t) {
          if (acc.cells.empty()) acc.cells.resize(2 * as.size());
          const RenewalPath path = simulate_renewal(sys, 0, t, rng);
          for (std::size_t j = 0; j < 2; ++j)
            for (std::size_t ai = 0; ai < as.size(); ++ai)
              acc.cells[j * as.size() + ai].add(path.occupation[j] <= as[ai]);
        });
    for (std::size_t j = 0; j < 2; ++j) {
      for (std::size_t ai = 0; ai < as.size(); ++ai) {
        const stats::TailEstimate mc =
            counters.cells[j * as.size() + ai].estimate();
        const double alpha_val =
            grid.alpha(0, j, grid.index_of(t), grid.index_of(as[ai]));
        check.require(
            std::fabs(mc.p_hat - alpha_val) <= 3.0 * mc.stderr_est(),
            "cell (j=" + std::to_string(j) + ",t=" + format_float(t) +
                ",a=" + format_float(as[ai]) + "): |" + format_float(mc.p_hat) +
                " - " + format_float(alpha_val) + "| <= 3SE");
      }
    }
  }
}

void stable_self_similarity(const Options& opts, Check& check) {
  const std::uint64_t n = scaled(opts.scale, 10'000, 1000);
  for (const double alpha : {0.8, 1.0, 1.5, 2.0}) {
    int passes = 0;
    for (int run = 0; run < 10; ++run) {
      Rng rng(opts.seed + 1000 * static_cast<std::uint64_t>(10 * alpha) + run);
      std::vector<double> coarse(n), scaled_fine(n);
      const double factor = std::pow(4.0, 1.0 / alpha);
      for (auto& x : coarse) x = sample_stable_increment(alpha, 4.0, 1, rng)[0];
      for (auto& x : scaled_fine)
        x = factor * sample_stable_increment(alpha, 1.0, 1, rng)[0];
      if (stats::ks_two_sample(coarse, scaled_fine).p_value > 0.01) ++passes;
    }
    check.note("alpha=" + format_float(alpha) + ": " +
               std::to_string(passes) + "/10");
    check.require(passes >= 8, "self-similarity KS at alpha=" +
                                   format_float(alpha));
  }
}

void max_law_normalization(const Options& opts, Check& check) {
  Rng rng(opts.seed + 9);
  const std::vector<double> zs{1e3};
  const MaxTailCurve curve =
      max_law_tail(LifetimeLaw::pareto_tail(0.5), LifetimeLaw::exponential(1.0),
                   zs, scaled(opts.scale, 1'000'000, 20'000), rng);
  check.note("z^gamma tail " + format_float(curve.normalized_tail[0]));
  check.require(curve.normalized_tail[0] >= 0.8 &&
                    curve.normalized_tail[0] <= 1.2,
                "normalized tail in [0.8, 1.2]");
}

void population_conservation(const Options& opts, Check& check) {
  const std::uint64_t reps = scaled(opts.scale, 10'000, 200);
  for (const std::string name : {"finite-mean-subcritical", "case-a"}) {
    const ModelSpec model = preset(name).model;
    const Ancestor start{std::vector<double>(model.d, 0.0), 0, 0.0};
    for (const double t : {5.0, 20.0, 80.0}) {
      const auto summary = parallel_mc<stats::MergeableSummary>(
          reps, opts.seed + 17 * static_cast<std::uint64_t>(t) +
                    (name == "case-a" ? 1231 : 0),
          opts.workers, [&](Rng& rng, stats::MergeableSummary& acc,
                            std::uint64_t) {
            acc.add(static_cast<double>(
                simulate_tree(model, start, t, rng).alive.size()));
          });
      const double dev = std::fabs(summary.mean() - 1.0);
      check.note(name + " t=" + format_float(t) + " mean " +
                 format_float(summary.mean()));
      check.require(dev <= 4.0 * summary.stderr_mean(),
                    name + " mean alive = 1 +- 4SE at t=" + format_float(t));
    }
  }
}

void extinction_trend(const Options& opts, Check& check) {
  const std::uint64_t reps = scaled(opts.scale, 1200, 100);
  for (const std::string name : {"finite-mean-subcritical", "case-a"}) {
    const ModelSpec model = preset(name).model;
    const Ball ball{std::vector<double>(model.d, 0.0), 1.0};
    std::vector<double> ests, ses;
    for (const double t : {25.0, 50.0, 100.0, 200.0}) {
      const SurvivalIntegral si = survival_integral(
          model, 0, t, ball, 1.0, 6, reps,
          opts.seed + 29 * static_cast<std::uint64_t>(t) +
              (name == "case-a" ? 4057 : 0),
          opts.workers);
      ests.push_back(si.estimate);
      ses.push_back(si.stderr_est);
      check.note(name + " t=" + format_float(t) + ": " +
                 format_float(si.estimate));
    }
    for (std::size_t k = 0; k + 1 < ests.size(); ++k) {
      const double slack = 2.0 * std::hypot(ses[k], ses[k + 1]);
      check.require(ests[k + 1] < ests[k] - slack,
                    name + " decreasing beyond 2SE at step " +
                        std::to_string(k));
    }
  }
}

void dplus_regression(const Options&, Check& check) {
  struct Tuple {
    double alpha1, alpha, beta, gamma;
    bool boundary;  // gamma/alpha == 1/alpha1 exactly
  };
  // 20 parameter tuples; 6 sit exactly on the boundary gamma/alpha = 1/alpha1
  // where d_+ must coincide with alpha_1*gamma/beta.
  const std::vector<Tuple> tuples{
      {3.0, 1.0, 1.0, 0.5, false},  {2.0, 1.0, 0.5, 0.9, false},
      {6.0, 2.0, 0.5, 0.9, false},  {1.5, 1.0, 0.3, 0.8, false},
      {2.5, 1.2, 0.7, 0.6, false},  {4.0, 1.5, 0.9, 0.7, false},
      {5.0, 0.8, 0.4, 0.3, false},  {3.5, 1.8, 0.6, 0.95, false},
      {2.0, 0.5, 1.0, 0.4, false},  {8.0, 2.0, 0.8, 0.5, false},
      {1.2, 0.9, 0.2, 0.85, false}, {2.8, 1.4, 0.55, 0.75, false},
      {3.0, 1.1, 0.35, 0.45, false}, {7.0, 1.9, 0.65, 0.6, false},
      {4.0, 2.0, 0.5, 0.5, true},   {2.0, 2.0, 1.0, 1.0, true},
      {2.0, 1.0, 0.5, 0.5, true},   {5.0, 2.0, 0.25, 0.4, true},
      {8.0, 2.0, 0.75, 0.25, true}, {1.25, 1.0, 0.6, 0.8, true}};

  double worst = 0.0;
  for (const auto& tp : tuples) {
    const CriticalDimensions cd =
        critical_dimensions(tp.alpha1, tp.alpha, tp.beta, tp.gamma, true);
    // independent direct substitution into the threshold formula
    const double expected =
        tp.gamma /
        ((tp.beta + 1.0) * tp.gamma / tp.alpha - 1.0 / tp.alpha1);
    worst = std::max(worst, std::fabs(cd.case_b2 - expected));
    if (tp.boundary)
      worst = std::max(
          worst, std::fabs(cd.case_b2 - tp.alpha1 * tp.gamma / tp.beta));
  }
  // the one hand-computed literal from the worked example
  worst = std::max(
      worst,
      std::fabs(critical_dimensions(3.0, 1.0, 1.0, 0.5, true).case_b2 - 0.75));
  check.note("max |d_+ error| " + format_float(worst));
  check.require(worst <= 1e-9, "d_+ within 1e-9");
}

}  // namespace

std::vector<CriterionResult> run_all(const Options& opts) {
  std::vector<CriterionResult> results;
  const bool low = opts.scale < 1.0;
  auto add = [&](int id, const std::string& name, double budget,
                 const std::function<void(Check&)>& body) {
    CriterionResult r = run_criterion(id, name, budget, body);
    r.low_precision = low;
    results.push_back(std::move(r));
  };

  add(1, "spectral-exactness", 1.0,
      [&](Check& c) { spectral_exactness(opts, c); });
  add(2, "beta-recovery", 5.0, [&](Check& c) { beta_recovery(opts, c); });
  add(3, "survival-exponent", 30.0,
      [&](Check& c) { survival_exponent(opts, c); });
  add(4, "renewal-count-exponent", 300.0,
      [&](Check& c) { renewal_count_exponent(opts, c); });
  add(5, "occupation-tail-decay", 300.0,
      [&](Check& c) { occupation_tail_decay(opts, c); });
  add(6, "domination", 600.0, [&](Check& c) { domination(opts, c); });
  add(7, "solver-vs-mc", 120.0, [&](Check& c) { solver_vs_mc(opts, c); });
  add(8, "stable-self-similarity", 60.0,
      [&](Check& c) { stable_self_similarity(opts, c); });
  add(9, "max-law-normalization", 30.0,
      [&](Check& c) { max_law_normalization(opts, c); });
  add(10, "population-conservation", 300.0,
      [&](Check& c) { population_conservation(opts, c); });
  add(11, "extinction-trend", 1200.0,
      [&](Check& c) { extinction_trend(opts, c); });
  add(12, "dplus-regression", 1.0, [&](Check& c) { dplus_regression(opts, c); });
  return results;
}

bool all_passed(const std::vector<CriterionResult>& results) {
  for (const auto& r : results)
    if (!r.passed) return false;
  return true;
}

std::string format_line(const CriterionResult& r) {
  std::ostringstream out;
  out << (r.passed ? "PASS" : "FAIL") << " " << r.id << " " << r.name << " ("
      << format_float(r.seconds) << "s / budget "
      << format_float(r.budget_seconds) << "s)";
  if (r.low_precision) out << " [LowPrecision]";
  if (!r.details.empty()) out << " -- " << r.details;
  return out.str();
}

}  // namespace branchsim::acceptance

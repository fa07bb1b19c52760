#include "branchsim/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "branchsim/parallel.hpp"

namespace branchsim {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

json estimate_json(const stats::TailEstimate& e) {
  return {{"successes", e.successes},
          {"trials", e.trials},
          {"p_hat", e.p_hat},
          {"ci_lo", e.ci_lo},
          {"ci_hi", e.ci_hi}};
}

json slope_json(const stats::SlopeFit& f) {
  return {{"slope", f.slope},
          {"intercept", f.intercept},
          {"stderr", f.stderr_slope},
          {"r_squared", f.r_squared},
          {"n_points", f.n_points}};
}

// Hypothesis guards of the conditional theorems; a violated guard turns the
// scenario's checks into skips, never failures.
std::vector<std::string> guard_violations(const ExperimentConfig& config,
                                          const CriticalDimensions& dims) {
  std::vector<std::string> out;
  const auto heavy = config.model.heavy_type();
  const double d_over_alpha =
      static_cast<double>(config.model.d) / config.model.alpha_min();
  double eta = std::numeric_limits<double>::infinity();
  for (const auto& law : config.model.lifetimes)
    if (law.kind() == LifetimeKind::LightPareto)
      eta = std::min(eta, law.eta());

  switch (config.scenario) {
    case Scenario::FiniteMean:
      if (heavy) out.push_back("HypothesisViolation: heavy-tailed lifetime present");
      break;
    case Scenario::CaseA:
    case Scenario::CaseB1:
      if (!heavy) {
        out.push_back("HypothesisViolation: no heavy-tailed lifetime");
      } else if (!(eta - 1.0 > d_over_alpha)) {
        out.push_back("HypothesisViolation: eta - 1 <= d/alpha");
      }
      break;
    case Scenario::CaseB2:
      if (!heavy) {
        out.push_back("HypothesisViolation: no heavy-tailed lifetime");
      } else {
        const double gamma = config.model.lifetimes[*heavy].gamma();
        if (!(gamma * eta > d_over_alpha + 1.0))
          out.push_back("HypothesisViolation: gamma*eta <= d/alpha + 1");
      }
      break;
    case Scenario::RenewalOnly:
    case Scenario::Custom:
      break;
  }
  if (config.model.d >= dims.threshold() &&
      config.scenario != Scenario::RenewalOnly &&
      config.scenario != Scenario::Custom)
    out.push_back("HypothesisViolation: d is not below the regime threshold");
  return out;
}

void run_renewal_scenario(const ExperimentConfig& config,
                          const RunOptions& opts, ExperimentReport& report) {
  const RenewalSystem sys = RenewalSystem::from_model(config.model);

  std::vector<double> ts(config.t_grid), means;
  std::vector<std::vector<double>> count_rows;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const std::uint64_t sub_seed =
        config.seed + (k + 1) * 0x9e3779b97f4a7c15ULL;
    const auto summary = parallel_mc<stats::MergeableSummary>(
        config.replicas, sub_seed, opts.workers,
        [&](Rng& rng, stats::MergeableSummary& acc, std::uint64_t) {
          acc.add(static_cast<double>(
              simulate_renewal(sys, 0, ts[k], rng).n_t));
        });
    means.push_back(summary.mean());
    count_rows.push_back({ts[k], summary.mean(), summary.stderr_mean()});
  }
  const stats::SlopeFit fit = stats::loglog_slope(ts, means);
  write_csv(config.output_dir + "/renewal_counts.csv",
            {"t", "mean_n_t", "stderr"}, count_rows);
  report.document["renewal_counts"] = {{"slope_fit", slope_json(fit)}};

  if (config.model.heavy_type()) {
    const TailSeries series = occupation_tail_type1(
        sys, 0, ts, 0.05, config.replicas, config.seed ^ 0x5bd1e995u,
        opts.workers);
    std::vector<std::vector<double>> rows;
    json points = json::array();
    for (const auto& p : series.points) {
      rows.push_back({p.t, p.estimate.p_hat, p.estimate.ci_lo,
                      p.estimate.ci_hi, p.paper_bound});
      points.push_back({{"t", p.t},
                        {"estimate", estimate_json(p.estimate)},
                        {"paper_bound", p.paper_bound}});
    }
    write_csv(config.output_dir + "/occupation_tail_type1.csv",
              {"t", "estimate", "ci_lo", "ci_hi", "paper_bound"}, rows);
    report.document["occupation_tail_type1"] = {
        {"c1", 0.05},
        {"low_precision", series.low_precision},
        {"points", std::move(points)}};
  }
}

void run_spatial_scenario(const ExperimentConfig& config,
                          const RunOptions& opts,
                          const CriticalDimensions& dims,
                          ExperimentReport& report) {
  // Case B windows widen to the effective-mobility exponent.
  const bool dominated = config.scenario == Scenario::CaseB1 ||
                         config.scenario == Scenario::CaseB2;
  const double exponent = dominated ? dims.v_mob + 0.05 : -1.0;
  const Ball ball{std::vector<double>(config.model.d, 0.0),
                  config.ball_radius};

  std::vector<double> ts(config.t_grid), ests;
  std::vector<std::vector<double>> rows;
  json series = json::array();
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const std::uint64_t sub_seed =
        config.seed + (k + 1) * 0x9e3779b97f4a7c15ULL;
    const SurvivalIntegral si = survival_integral(
        config.model, 0, ts[k], ball, config.window_L, 6, config.replicas,
        sub_seed, opts.workers, exponent);
    ests.push_back(si.estimate);
    rows.push_back({ts[k], si.estimate, si.stderr_est, si.window_radius});
    series.push_back({{"t", ts[k]},
                      {"estimate", si.estimate},
                      {"stderr", si.stderr_est},
                      {"window_radius", si.window_radius},
                      {"radius_exponent", si.radius_exponent}});
  }
  write_csv(config.output_dir + "/survival_integral.csv",
            {"t", "estimate", "stderr", "window_radius"}, rows);

  // Direction-only extinction check: estimates decreasing beyond 2SE.
  bool decreasing = true;
  for (std::size_t k = 0; k + 1 < ests.size(); ++k) {
    const double slack = 2.0 * std::hypot(rows[k][2], rows[k + 1][2]);
    if (!(ests[k + 1] < ests[k] - slack)) decreasing = false;
  }
  std::vector<double> floored(ests);
  for (auto& e : floored) e = std::max(e, 1e-12);
  const stats::SlopeFit fit = stats::loglog_slope(ts, floored);

  report.document["survival_integral"] = {
      {"points", std::move(series)},
      {"slope_fit", slope_json(fit)},
      {"decreasing_beyond_2se", decreasing},
      {"check_id", "extinction-trend"}};
  if (!decreasing) report.any_failure = true;
}

}  // namespace

std::string format_float(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_csv(const std::string& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  for (std::size_t k = 0; k < header.size(); ++k)
    out << (k ? "," : "") << header[k];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < row.size(); ++k)
      out << (k ? "," : "") << format_float(row[k]);
    out << '\n';
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

ExperimentReport run_experiment(const ExperimentConfig& config,
                                const RunOptions& opts) {
  const auto start = std::chrono::steady_clock::now();

  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec || !fs::is_directory(config.output_dir))
    throw IoError("output_dir '" + config.output_dir + "' is not usable");
  {
    std::ofstream probe(config.output_dir + "/.write_probe");
    if (!probe)
      throw IoError("output_dir '" + config.output_dir + "' is not writable");
  }
  fs::remove(config.output_dir + "/.write_probe", ec);

  ExperimentReport report;
  report.document["config"] = serialize_config(config);
  report.document["rng"] = {{"engine", "xoshiro256++"},
                            {"seed", config.seed},
                            {"workers", opts.workers}};

  const Matrix M = build_mean_matrix(config.model.offspring);
  const SpectralData sd = spectral(M);
  const BetaFit beta = offspring_beta(config.model, sd);
  const RegimeReport regime = classify_regime(config.model, beta.beta);

  report.document["spectral"] = {{"p_star", sd.p_star},
                                 {"v", sd.v},
                                 {"u", sd.u},
                                 {"rho", sd.rho}};
  report.document["beta"] = {{"value", beta.beta},
                             {"analytic", beta.analytic},
                             {"fit", slope_json(beta.diagnostics)}};
  report.document["critical_dimensions"] = {
      {"finite_mean", regime.dims.finite_mean},
      {"case_a", regime.dims.case_a},
      {"case_b1", regime.dims.case_b1},
      {"case_b2", regime.dims.case_b2},
      {"v_mob", regime.dims.v_mob},
      {"alpha_min", regime.dims.alpha_min},
      {"regime", regime_name(regime.regime)},
      {"threshold", regime.dims.threshold()},
      {"rationale", regime.rationale}};

  report.skipped = guard_violations(config, regime.dims);
  report.document["skipped_checks"] = report.skipped;

  if (report.skipped.empty()) {
    if (config.scenario == Scenario::RenewalOnly ||
        config.scenario == Scenario::Custom)
      run_renewal_scenario(config, opts, report);
    else
      run_spatial_scenario(config, opts, regime.dims, report);
  } else {
    // Guards failed: still emit the cheap renewal table so the run is not
    // empty, but no theorem-facing checks are evaluated.
    run_renewal_scenario(config, opts, report);
  }

  const auto elapsed = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - start)
                           .count();
  report.document["wall_clock_seconds"] = elapsed;
  report.document["any_failure"] = report.any_failure;

  std::ofstream out(config.output_dir + "/report.json");
  if (!out) throw IoError("cannot write report.json");
  out << report.document.dump(2) << '\n';
  if (!out) throw IoError("write failed for report.json");
  return report;
}

}  // namespace branchsim

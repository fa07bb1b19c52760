#pragma once

#include <cstdint>
#include <span>

#include "branchsim/model.hpp"

namespace branchsim {

/// One realization of the type-chain alone (no clocks).
struct ChainPath {
  std::vector<std::uint32_t> states;        // X_1..X_n; states[0] = i0
  std::vector<std::uint64_t> visit_counts;  // t_j(n) per type
};

ChainPath simulate_chain(const Matrix& M, std::uint32_t i0, std::uint64_t n,
                         Rng& rng);

/// One realization of the Markov renewal process up to a horizon.
///
/// `states` lists every type entered, including the one whose sojourn
/// straddles the horizon, so states.size() == n_t + 1. `lifetimes` is
/// aligned with `states`; its last entry is the full straddling lifetime.
struct RenewalPath {
  std::vector<std::uint32_t> states;
  std::vector<double> lifetimes;
  double horizon = 0.0;
  std::uint64_t n_t = 0;                    // completed renewals up to t
  std::vector<double> occupation;           // per-type time incl. residual
  std::vector<std::uint64_t> visit_counts;  // completed sojourns per type
  double residual = 0.0;                    // age of the in-progress sojourn
  std::uint32_t current_state = 0;          // type occupying the horizon
};

/// Transition matrix + lifetime laws with precomputed row CDFs, so replica
/// loops don't redo validation or prefix sums.
class RenewalSystem {
 public:
  RenewalSystem(Matrix M, std::vector<LifetimeLaw> lifetimes);
  static RenewalSystem from_model(const ModelSpec& model);

  std::size_t num_types() const { return lifetimes_.size(); }
  const Matrix& transition() const { return M_; }
  const std::vector<LifetimeLaw>& lifetimes() const { return lifetimes_; }
  std::uint32_t next_state(std::uint32_t i, Rng& rng) const;

 private:
  Matrix M_;
  std::vector<std::vector<double>> row_cum_;
  std::vector<LifetimeLaw> lifetimes_;
};

RenewalPath simulate_renewal(const RenewalSystem& sys, std::uint32_t i0,
                             double horizon, Rng& rng);

struct TailPoint {
  double t = 0.0;
  stats::TailEstimate estimate;
  double paper_bound = 0.0;  // comparison curve with unit constant
};

struct TailSeries {
  std::vector<TailPoint> points;
  bool low_precision = false;  // fewer than 100 replicas
};

/// P_i{ t_bar_1(t)/t <= c1 } across a t-grid, with the t^{1-eta} decay curve
/// attached (eta taken from the lightest regularly-varying light tail; the
/// curve is 0 when every light tail decays faster than any power).
TailSeries occupation_tail_type1(const RenewalSystem& sys, std::uint32_t i0,
                                 std::span<const double> ts, double c1,
                                 std::uint64_t reps, std::uint64_t seed,
                                 unsigned workers = 1);

struct RenewalCountTails {
  double t = 0.0;
  stats::TailEstimate lower;  // P{ n_t / t^gamma <= c(t) }
  double lower_bound = 0.0;   // 2 c(t)
  stats::TailEstimate upper;  // P{ n_t / t^gamma > t^a }
  double upper_bound = 0.0;   // 2 exp(-t^{a/(1-gamma)}); exp(-t) when gamma=1
  bool low_precision = false;
};

/// Small/large deviations of the renewal count n_t on the gamma scale.
RenewalCountTails renewal_count_tails(const RenewalSystem& sys,
                                      std::uint32_t i0, double gamma, double t,
                                      double c_t, double a, std::uint64_t reps,
                                      std::uint64_t seed, unsigned workers = 1);

struct OccupationType2Tails {
  double t = 0.0;
  stats::TailEstimate lower;  // P{ t_bar_j(t) <= t^gamma c(t) }
  double lower_bound = 0.0;   // c(t) + t^{eps - gamma}
  stats::TailEstimate upper;  // P{ t_bar_j(t) >= t^{gamma+a} }
  double upper_bound = 0.0;   // t^{1 - eta*gamma}
  bool low_precision = false;
};

/// Occupation-time deviations for a finite-mean type j >= 2 (0-based j >= 1).
OccupationType2Tails occupation_type2_tails(const RenewalSystem& sys,
                                            std::uint32_t i0, std::uint32_t j,
                                            double gamma, double eta, double t,
                                            double c_t, double a, double eps,
                                            std::uint64_t reps,
                                            std::uint64_t seed,
                                            unsigned workers = 1);

struct StableSumTails {
  stats::TailEstimate upper;  // P{ S_n > n^{1/gamma} d_n }
  double upper_bound = 0.0;   // d_n^{-gamma}
  stats::TailEstimate lower;  // P{ S_n <= c_n n^{1/gamma} }
  double lower_bound = 0.0;   // 2 exp(-c_n^{-g/(1-g)}/c_g); NaN when gamma=1
  bool low_precision = false;
};

/// Deviations of a heavy-tailed i.i.d. sum on its natural n^{1/gamma} scale.
StableSumTails stable_sum_tails(const LifetimeLaw& law, std::uint64_t n,
                                double d_n, double c_n, std::uint64_t reps,
                                std::uint64_t seed, unsigned workers = 1);

/// Deterministic solution of the linear occupation system on a uniform
/// (t, a) grid: values[i*K+j][m*N+l] approximates
/// P_i{ time spent in type j by time t_m is <= a_l }.
struct OccupationSolverGrid {
  TimeGrid grid;  // shared t- and a-axis
  std::size_t K = 0;
  std::vector<std::vector<double>> values;
  std::size_t iterations = 0;
  double residual = 0.0;

  double alpha(std::size_t i, std::size_t j, std::size_t t_idx,
               std::size_t a_idx) const {
    return values[i * K + j][t_idx * grid.size + a_idx];
  }
  /// Nearest grid index for a time value.
  std::size_t index_of(double t) const;
};

OccupationSolverGrid solve_linear_system(const RenewalSystem& sys,
                                         double t_max, double dt);

}  // namespace branchsim

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "branchsim/lifetimes.hpp"
#include "branchsim/rng.hpp"
#include "branchsim/stats.hpp"

namespace branchsim {

struct GridMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct NotInLambda : std::domain_error {
  using std::domain_error::domain_error;
};

enum class OffspringKind { Factorized, Explicit };

/// Offspring law of one parent type in a K-type system.
///
/// Factorized: the parent draws a child count N from the critical count
/// generating function h(s) = s + c (1-s)^{1+beta}, then assigns each child a
/// type independently from type_row. This gives f_i(s) = h_i(<row_i, s>).
/// Explicit: a finite table of child-count vectors in N^K with probabilities.
class OffspringLaw {
 public:
  static OffspringLaw factorized(double beta, double c,
                                 std::vector<double> type_row);
  static OffspringLaw explicit_table(
      std::size_t K, std::map<std::vector<std::uint32_t>, double> table);

  OffspringKind kind() const { return kind_; }
  std::size_t num_types() const { return K_; }
  double beta() const { return beta_; }
  double c() const { return c_; }
  const std::vector<double>& type_row() const { return type_row_; }
  const std::vector<std::vector<std::uint32_t>>& table_counts() const {
    return counts_;
  }
  const std::vector<double>& table_probs() const { return probs_; }

  /// Expected children per type, row of the mean matrix.
  std::vector<double> mean_row() const;

  /// f(s) for s in [0,1]^K.
  double gf(std::span<const double> s) const;

  /// 1 - f(1 - q) evaluated without cancellation; q in [0,1]^K.
  double survival_map(std::span<const double> q) const;

  /// Child-count vector realization.
  std::vector<std::uint32_t> sample(Rng& rng) const;

  /// Count distribution tail P{N > k} (Factorized only; closed form).
  double count_tail(std::uint64_t k) const;

 private:
  OffspringLaw() = default;

  std::uint64_t sample_count(Rng& rng) const;

  OffspringKind kind_ = OffspringKind::Factorized;
  std::size_t K_ = 0;
  // Factorized parameters.
  double beta_ = 1.0;
  double c_ = 0.5;
  std::vector<double> type_row_;
  std::vector<double> type_cum_;
  std::vector<double> count_cdf_;  // cached cdf of N for k = 0..kTableSize
  // Explicit parameters.
  std::vector<std::vector<std::uint32_t>> counts_;
  std::vector<double> probs_;
  std::vector<double> probs_cum_;
};

using OffspringSet = std::vector<OffspringLaw>;

/// (f_1(s), ..., f_K(s)).
std::vector<double> gf_eval(const OffspringSet& laws,
                            std::span<const double> s);

/// f_0 = s0, f_1, ..., f_n by composition.
std::vector<std::vector<double>> gf_iterate(const OffspringSet& laws,
                                            std::size_t n,
                                            std::span<const double> s0);

struct SurvivalSequence {
  // survival[i][n-1] = 1 - f_n^{(i)}(0), n = 1..n_max
  std::vector<std::vector<double>> survival;
  stats::SlopeFit slope_fit;  // log-log over the last decade; slope ~ -1/beta
};

SurvivalSequence survival_sequence(const OffspringSet& laws,
                                   std::size_t n_max);

// ---------------------------------------------------------------------------
// Matrix convolution machinery for the comparison bounds.

struct TimeGrid {
  double dt = 0.0;
  std::size_t size = 0;  // grid points t_k = k*dt, k = 0..size-1

  double time(std::size_t k) const { return dt * static_cast<double>(k); }
  bool operator==(const TimeGrid&) const = default;
};

using GridFn = std::vector<double>;

/// K x K matrix of sub-distribution functions sampled on a uniform grid.
struct KernelMatrix {
  TimeGrid grid;
  std::size_t K = 0;
  std::vector<GridFn> entries;  // row-major, entries[i*K + j]

  GridFn& at(std::size_t i, std::size_t j) { return entries[i * K + j]; }
  const GridFn& at(std::size_t i, std::size_t j) const {
    return entries[i * K + j];
  }
};

/// Convolution unit: diagonal matrix of unit masses at 0.
KernelMatrix kernel_unit(const TimeGrid& grid, std::size_t K);

/// M^1_Gamma(t) = (m_ij Gamma_i(t)).
KernelMatrix lifetime_kernel(const std::vector<std::vector<double>>& M,
                             const std::vector<LifetimeLaw>& lifetimes,
                             const TimeGrid& grid);

/// (A * B)_{ij}(t) = sum_k int_0^t a_{ik}(t-s) db_{kj}(s), Stieltjes sums with
/// left-endpoint evaluation; the unit kernel acts as identity exactly.
KernelMatrix matrix_convolution(const KernelMatrix& A, const KernelMatrix& B);

/// (A * w)_i(t) = sum_k int_0^t w_k(t-s) da_{ik}(s).
std::vector<GridFn> matrix_vector_convolution(const KernelMatrix& A,
                                              std::span<const GridFn> w);

struct ComparisonEnvelope {
  TimeGrid grid;
  std::vector<double> fn_at_s;       // f_n(s)
  std::vector<GridFn> lower;         // per type i, lower bound for 1 - F^{(i)}(t;s)
  std::vector<GridFn> upper;
};

/// Two-sided envelopes for the non-generating probability 1 - F(t; s), valid
/// on the set Lambda = { s : f(s) >= s }.
ComparisonEnvelope comparison_bounds(const OffspringSet& laws,
                                     const std::vector<std::vector<double>>& M,
                                     const std::vector<LifetimeLaw>& lifetimes,
                                     std::size_t n, std::span<const double> s,
                                     const TimeGrid& grid);

struct LifetimeConditionReport {
  bool holds = false;
  double margin = 0.0;  // -slope of the fitted log ratio trend
  stats::SlopeFit fit;
  std::vector<double> n_grid;
  std::vector<double> ratio;  // max_i n(1-Gamma_i(n)) / <v, 1-f_n(0)>
};

/// Trend check for n(1-Gamma_i(n)) / <v, 1-f_n(0)> -> 0; guards the
/// finite-mean extinction scenario.
LifetimeConditionReport lifetime_condition_check(
    const OffspringSet& laws, const std::vector<LifetimeLaw>& lifetimes,
    std::span<const double> v, std::size_t n_max);

}  // namespace branchsim

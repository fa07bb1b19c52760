#pragma once

#include <optional>
#include <string>

#include "branchsim/lifetimes.hpp"
#include "branchsim/offspring.hpp"

namespace branchsim {

struct NonStochasticMatrix : std::domain_error {
  using std::domain_error::domain_error;
};
struct NotErgodic : std::domain_error {
  using std::domain_error::domain_error;
};
struct NoConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateOffspring : std::domain_error {
  using std::domain_error::domain_error;
};
struct InvalidGamma : std::domain_error {
  using std::domain_error::domain_error;
};

using Matrix = std::vector<std::vector<double>>;

/// Full parameterization of the particle system. Immutable after
/// construction; the constructor validates criticality and ergodicity.
struct ModelSpec {
  std::size_t K = 1;
  std::size_t d = 1;
  std::vector<double> alphas;           // stability indices, (0,2]
  std::vector<LifetimeLaw> lifetimes;   // per type
  OffspringSet offspring;               // per type
  std::vector<double> intensities;      // Poisson intensities, >= 0

  static ModelSpec create(std::size_t K, std::size_t d,
                          std::vector<double> alphas,
                          std::vector<LifetimeLaw> lifetimes,
                          OffspringSet offspring,
                          std::vector<double> intensities);

  /// Index of the (single) infinite-mean lifetime type, if any.
  std::optional<std::size_t> heavy_type() const;
  double alpha_min() const;
};

struct SpectralData {
  Matrix M;
  std::vector<double> p_star;  // stationary distribution, sums to 1
  std::vector<double> v;       // left eigenvector, <v,u> = 1
  std::vector<double> u;       // right eigenvector, sums to 1 (= 1/K each)
  double rho = 1.0;            // Perron root
  std::optional<double> beta;  // filled by offspring_beta
  std::optional<double> D;     // sum u_i v_i mu_i; absent with infinite means
};

/// Mean matrix m_ij = expected type-j children of a type-i parent.
Matrix build_mean_matrix(const OffspringSet& offspring);

/// Perron data of a stochastic ergodic matrix by power iteration.
SpectralData spectral(const Matrix& M);

struct BetaFit {
  double beta = 1.0;
  bool analytic = false;       // Remark-family closed form used
  stats::SlopeFit diagnostics; // log-log fit of g(x); slope = 1 + beta
};

/// Offspring variability exponent from g(x) = x - <v, 1 - f(1 - u x)>.
BetaFit offspring_beta(const ModelSpec& model, const SpectralData& spectral);

enum class Regime { FiniteMean, CaseA, CaseB1, CaseB2 };

std::string regime_name(Regime r);

struct CriticalDimensions {
  double finite_mean = 0.0;  // alpha / beta
  double case_a = 0.0;       // alpha gamma / beta
  double case_b1 = 0.0;      // alpha_1 gamma / beta
  double case_b2 = 0.0;      // d_+ = gamma / ((beta+1)gamma/alpha - 1/alpha_1)
  double v_mob = 0.0;        // max{1/alpha_1, gamma/alpha}
  double alpha_min = 0.0;
  Regime regime = Regime::FiniteMean;

  double threshold() const;  // the dimension bound of the active regime
};

CriticalDimensions critical_dimensions(const ModelSpec& model, double beta,
                                       double gamma);

/// Formula-only variant: the dimension thresholds depend solely on these
/// scalars, so parameter studies need not construct a full ModelSpec.
CriticalDimensions critical_dimensions(double alpha1, double alpha_min,
                                       double beta, double gamma,
                                       bool heavy_tailed = true);

struct RegimeReport {
  Regime regime;
  std::string rationale;
  CriticalDimensions dims;
};

RegimeReport classify_regime(const ModelSpec& model, double beta);

}  // namespace branchsim

#include "branchsim/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace branchsim {

namespace {

void check_stochastic(const Matrix& M, double tol) {
  for (const auto& row : M) {
    if (row.size() != M.size())
      throw NonStochasticMatrix("mean matrix is not square");
    double sum = 0.0;
    for (double x : row) {
      if (x < 0.0) throw NonStochasticMatrix("mean matrix has a negative entry");
      sum += x;
    }
    if (std::fabs(sum - 1.0) > tol)
      throw NonStochasticMatrix("mean matrix row sum deviates from 1");
  }
}

// Primitivity certificate: positivity of M^(2^m) with 2^m >= K^2.
bool is_primitive(const Matrix& M) {
  const std::size_t K = M.size();
  std::vector<std::vector<bool>> B(K, std::vector<bool>(K));
  for (std::size_t i = 0; i < K; ++i)
    for (std::size_t j = 0; j < K; ++j) B[i][j] = M[i][j] > 0.0;
  std::size_t exponent = 1;
  while (exponent < K * K) {
    std::vector<std::vector<bool>> C(K, std::vector<bool>(K, false));
    for (std::size_t i = 0; i < K; ++i)
      for (std::size_t k = 0; k < K; ++k)
        if (B[i][k])
          for (std::size_t j = 0; j < K; ++j)
            if (B[k][j]) C[i][j] = true;
    B = std::move(C);
    exponent *= 2;
  }
  for (const auto& row : B)
    for (bool x : row)
      if (!x) return false;
  return true;
}

}  // namespace

Matrix build_mean_matrix(const OffspringSet& offspring) {
  Matrix M;
  M.reserve(offspring.size());
  for (const auto& law : offspring) M.push_back(law.mean_row());
  check_stochastic(M, 1e-9);
  if (!is_primitive(M))
    throw NotErgodic("mean matrix is not irreducible and aperiodic");
  return M;
}

SpectralData spectral(const Matrix& M) {
  check_stochastic(M, 1e-9);
  if (!is_primitive(M)) throw NotErgodic("spectral: matrix is not ergodic");
  const std::size_t K = M.size();

  // Stationary distribution by power iteration on the transpose.
  std::vector<double> p(K, 1.0 / static_cast<double>(K)), next(K);
  constexpr std::size_t kBudget = 1'000'000;
  std::size_t iter = 0;
  for (; iter < kBudget; ++iter) {
    double norm = 0.0;
    for (std::size_t j = 0; j < K; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < K; ++i) acc += p[i] * M[i][j];
      next[j] = acc;
      norm += acc;
    }
    double delta = 0.0;
    for (std::size_t j = 0; j < K; ++j) {
      next[j] /= norm;
      delta = std::max(delta, std::fabs(next[j] - p[j]));
    }
    p.swap(next);
    if (delta < 1e-15) break;
  }

  SpectralData sd;
  sd.M = M;
  sd.p_star = p;
  sd.u.assign(K, 1.0 / static_cast<double>(K));
  double vu = 0.0;
  for (std::size_t i = 0; i < K; ++i) vu += p[i] * sd.u[i];
  sd.v.resize(K);
  for (std::size_t i = 0; i < K; ++i) sd.v[i] = p[i] / vu;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < K; ++i) {
    double mu_i = 0.0;
    for (std::size_t j = 0; j < K; ++j) mu_i += M[i][j] * sd.u[j];
    num += sd.v[i] * mu_i;
    den += sd.v[i] * sd.u[i];
  }
  sd.rho = num / den;

  double residual = 0.0;
  for (std::size_t j = 0; j < K; ++j) {
    double vm = 0.0;
    for (std::size_t i = 0; i < K; ++i) vm += sd.v[i] * M[i][j];
    residual = std::max(residual, std::fabs(vm - sd.v[j]));
  }
  residual = std::max(residual, std::fabs(sd.rho - 1.0));
  if (residual > 1e-10)
    throw NoConvergence("spectral: residual above 1e-10 after budget");
  return sd;
}

ModelSpec ModelSpec::create(std::size_t K, std::size_t d,
                            std::vector<double> alphas,
                            std::vector<LifetimeLaw> lifetimes,
                            OffspringSet offspring,
                            std::vector<double> intensities) {
  if (K < 1 || d < 1) throw std::invalid_argument("ModelSpec: K, d >= 1");
  if (alphas.size() != K || lifetimes.size() != K || offspring.size() != K ||
      intensities.size() != K)
    throw std::invalid_argument("ModelSpec: per-type vectors must have size K");
  for (double a : alphas)
    if (!(a > 0.0) || a > 2.0)
      throw std::invalid_argument("ModelSpec: alpha_i must lie in (0,2]");
  for (double lam : intensities)
    if (lam < 0.0) throw std::invalid_argument("ModelSpec: intensity < 0");
  for (const auto& law : offspring)
    if (law.num_types() != K)
      throw std::invalid_argument("ModelSpec: offspring law type count != K");
  std::size_t heavy = 0;
  for (std::size_t i = 0; i < K; ++i)
    if (lifetimes[i].heavy_tailed()) {
      ++heavy;
      if (i != 0)
        throw std::invalid_argument(
            "ModelSpec: the heavy-tailed lifetime must be type 1 (index 0)");
    }
  if (heavy > 1)
    throw std::invalid_argument("ModelSpec: at most one heavy-tailed type");
  build_mean_matrix(offspring);  // validates stochastic + ergodic
  return ModelSpec{K, d, std::move(alphas), std::move(lifetimes),
                   std::move(offspring), std::move(intensities)};
}

std::optional<std::size_t> ModelSpec::heavy_type() const {
  for (std::size_t i = 0; i < K; ++i)
    if (lifetimes[i].heavy_tailed()) return i;
  return std::nullopt;
}

double ModelSpec::alpha_min() const {
  return *std::min_element(alphas.begin(), alphas.end());
}

BetaFit offspring_beta(const ModelSpec& model, const SpectralData& sd) {
  const std::size_t K = model.K;
  BetaFit fit;

  // 25-point logarithmic grid on [1e-6, 1e-2].
  std::vector<double> xs(25), gs(25);
  std::vector<double> q(K);
  for (int p = 0; p < 25; ++p) {
    const double x = 1e-6 * std::pow(1e4, p / 24.0);
    for (std::size_t i = 0; i < K; ++i) q[i] = sd.u[i] * x;
    double vq = 0.0;
    for (std::size_t i = 0; i < K; ++i)
      vq += sd.v[i] * model.offspring[i].survival_map(q);
    const double g = x - vq;
    if (!(g > 0.0))
      throw DegenerateOffspring(
          "offspring_beta: g(x) <= 0, offspring law is linear (f = Ms)");
    xs[p] = x;
    gs[p] = g;
  }
  fit.diagnostics = stats::loglog_slope(xs, gs);

  bool all_factorized = true;
  double beta_min = 1.0;
  for (const auto& law : model.offspring) {
    if (law.kind() != OffspringKind::Factorized) {
      all_factorized = false;
      break;
    }
    beta_min = std::min(beta_min, law.beta());
  }
  if (all_factorized) {
    fit.analytic = true;
    fit.beta = beta_min;
  } else {
    fit.analytic = false;
    fit.beta = fit.diagnostics.slope - 1.0;
  }
  return fit;
}

std::string regime_name(Regime r) {
  switch (r) {
    case Regime::FiniteMean: return "FiniteMean";
    case Regime::CaseA: return "CaseA";
    case Regime::CaseB1: return "CaseB1";
    case Regime::CaseB2: return "CaseB2";
  }
  return "?";
}

double CriticalDimensions::threshold() const {
  switch (regime) {
    case Regime::FiniteMean: return finite_mean;
    case Regime::CaseA: return case_a;
    case Regime::CaseB1: return case_b1;
    case Regime::CaseB2: return case_b2;
  }
  return 0.0;
}

CriticalDimensions critical_dimensions(double alpha1, double alpha_min,
                                       double beta, double gamma,
                                       bool heavy_tailed) {
  if (!(gamma > 0.0) || gamma > 1.0)
    throw InvalidGamma("critical_dimensions: gamma must lie in (0,1]");
  CriticalDimensions cd;
  cd.alpha_min = alpha_min;
  cd.finite_mean = alpha_min / beta;
  cd.case_a = alpha_min * gamma / beta;
  cd.case_b1 = alpha1 * gamma / beta;
  const double denom = (beta + 1.0) * gamma / alpha_min - 1.0 / alpha1;
  cd.case_b2 = denom > 0.0 ? gamma / denom
                           : std::numeric_limits<double>::infinity();
  cd.v_mob = std::max(1.0 / alpha1, gamma / alpha_min);
  if (!heavy_tailed)
    cd.regime = Regime::FiniteMean;
  else if (alpha1 == alpha_min)
    cd.regime = Regime::CaseA;
  else if (alpha_min >= alpha1 * gamma)
    cd.regime = Regime::CaseB1;
  else
    cd.regime = Regime::CaseB2;
  return cd;
}

CriticalDimensions critical_dimensions(const ModelSpec& model, double beta,
                                       double gamma) {
  return critical_dimensions(model.alphas[0], model.alpha_min(), beta, gamma,
                             model.heavy_type().has_value());
}

RegimeReport classify_regime(const ModelSpec& model, double beta) {
  const auto heavy = model.heavy_type();
  const double gamma = heavy ? model.lifetimes[*heavy].gamma() : 1.0;
  RegimeReport rep{Regime::FiniteMean, "", critical_dimensions(model, beta, gamma)};
  rep.regime = rep.dims.regime;
  switch (rep.regime) {
    case Regime::FiniteMean:
      rep.rationale = "no heavy-tailed lifetime; extinction below alpha/beta";
      break;
    case Regime::CaseA:
      rep.rationale =
          "long-living type is also the most mobile; threshold alpha*gamma/beta";
      break;
    case Regime::CaseB1:
      rep.rationale =
          "first type's mobility dominant (alpha >= alpha_1*gamma); threshold "
          "alpha_1*gamma/beta";
      break;
    case Regime::CaseB2:
      rep.rationale =
          "second type's mobility dominant (alpha_1*gamma > alpha); threshold "
          "d_+";
      break;
  }
  return rep;
}

}  // namespace branchsim

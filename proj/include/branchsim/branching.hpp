#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "branchsim/model.hpp"
#include "branchsim/renewal.hpp"

namespace branchsim {

struct InvalidAlpha : std::domain_error {
  using std::domain_error::domain_error;
};
struct PopulationExplosion : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct WindowTooSmall : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Increment of an isotropic symmetric alpha-stable motion over dt in R^d.
/// For alpha = 2 each coordinate is Gaussian with variance 2*dt; for
/// alpha < 2 a Brownian increment is run on a positive (alpha/2)-stable
/// clock (one-sided stable drawn by the Chambers-Mallows-Stuck transform).
std::vector<double> sample_stable_increment(double alpha, double dt,
                                            std::size_t d, Rng& rng);

inline constexpr std::uint64_t kNoParent = ~std::uint64_t{0};

struct Particle {
  std::uint64_t id = 0;
  std::uint64_t parent = kNoParent;
  std::uint32_t type = 0;
  double birth_time = 0.0;
  double death_time = 0.0;
  std::vector<double> birth_position;
  std::vector<double> death_position;      // at death_time (empty if alive)
  std::vector<double> horizon_position;    // at the horizon (alive only)
  double initial_age = 0.0;                // theta; ancestors only

  bool is_ancestor() const { return parent == kNoParent; }
};

/// Full particle table of one simulated tree. Ids are table indices; a
/// child's id is always larger than its parent's.
struct Genealogy {
  std::vector<Particle> particles;
  double horizon = 0.0;
  std::size_t num_types = 0;         // K of the generating model
  std::vector<std::uint64_t> alive;  // ids with birth <= horizon < death

  bool extinct() const { return alive.empty(); }
};

struct Ancestor {
  std::vector<double> position;
  std::uint32_t type = 0;
  double age = 0.0;  // theta >= 0
};

Genealogy simulate_tree(const ModelSpec& model, const Ancestor& ancestor,
                        double horizon, Rng& rng,
                        std::uint64_t population_cap = 10'000'000);

/// Restriction of the tree to the ancestry lines of particles alive at t.
Genealogy reduced_tree(const Genealogy& g, double t);

struct Ball {
  std::vector<double> center;
  double radius = 1.0;
};

struct LocalCount {
  Ball ball;
  std::vector<std::uint64_t> per_type;
  std::uint64_t total = 0;
};

/// Alive-at-horizon particles inside the ball, by type.
LocalCount count_in_ball(const Genealogy& g, const Ball& ball);

struct OccupationExtremes {
  // mu[j]: minimal time spent in type j among lines alive at t (inf when
  // extinct); sigma[j]: maximal time spent in type j over all lines.
  std::vector<double> mu;
  std::vector<double> sigma;
};

OccupationExtremes occupation_extremes(const Genealogy& g, double t);

struct OccupationLawEstimate {
  double t = 0.0;
  double a = 0.0;
  std::vector<stats::TailEstimate> nu;  // nu[j] ~ P_i{ mu_j(t) <= a }
};

/// MC estimate of the occupation law of the branching tree; dominated by
/// the renewal solver's alpha_{i,j}(t,a) entrywise.
OccupationLawEstimate mc_occupation_law(const ModelSpec& model,
                                        std::uint32_t i0, double t, double a,
                                        std::uint64_t reps, std::uint64_t seed,
                                        unsigned workers = 1);

struct LocalSurvivalEstimate {
  stats::TailEstimate estimate;  // P{ N_t(B x K) > 0 }
  double paper_bound = 0.0;      // t^{-d/alpha} + t^{1-eta}, unit constant
  bool low_precision = false;
};

LocalSurvivalEstimate local_survival(const ModelSpec& model,
                                     const Ancestor& start, double t,
                                     const Ball& ball, std::uint64_t reps,
                                     std::uint64_t seed, unsigned workers = 1);

struct ShellEstimate {
  double radius = 0.0;
  double volume = 0.0;  // shell volume in R^d
  stats::TailEstimate survival;
};

struct SurvivalIntegral {
  double estimate = 0.0;   // integral of P_{x,i}{ N_t(B x K) > 0 } over the window
  double stderr_est = 0.0;
  double window_radius = 0.0;
  double window_volume = 0.0;
  double radius_exponent = 0.0;  // window radius = L * t^exponent
  std::vector<ShellEstimate> shells;
};

/// Radially stratified estimate of the extinction functional's integral over
/// the window {|x| <= L t^exponent}; exponent defaults to 1/alpha_min and is
/// overridden with v_mob + eps in the dominated-mobility regimes.
SurvivalIntegral survival_integral(const ModelSpec& model, std::uint32_t i0,
                                   double t, const Ball& ball, double L,
                                   std::size_t n_shells, std::uint64_t reps,
                                   std::uint64_t seed, unsigned workers = 1,
                                   double radius_exponent = -1.0);

struct PoissonFieldEstimate {
  stats::TailEstimate occupancy;  // P{ N_t(B x K) > 0 } under Poisson start
  double window_radius = 0.0;
  double mean_ancestors = 0.0;
  bool low_precision = false;
};

/// Survival probability of a ball under a Poisson field of ancestors
/// restricted to a finite window of the given radius.
PoissonFieldEstimate poisson_field_survival(const ModelSpec& model, double t,
                                            double window_radius, double L,
                                            const Ball& ball,
                                            std::uint64_t reps,
                                            std::uint64_t seed,
                                            unsigned workers = 1);

/// Volume of the d-ball of radius r.
double ball_volume(std::size_t d, double r);

}  // namespace branchsim

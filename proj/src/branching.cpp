#include "branchsim/branching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "branchsim/parallel.hpp"

namespace branchsim {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Positive strictly-stable variable S with Laplace transform exp(-lambda^a),
// a in (0,1), by the Chambers-Mallows-Stuck / Kanter representation.
double one_sided_stable(double a, Rng& rng) {
  const double u = kPi * rng.uniform_open();
  const double e = rng.exponential();
  // A(u) = sin(au)^{a/(1-a)} sin((1-a)u) / sin(u)^{1/(1-a)}; work with
  // log A so that (A/E)^{(1-a)/a} stays in a safe floating range.
  const double log_A = (a / (1.0 - a)) * std::log(std::sin(a * u)) +
                       std::log(std::sin((1.0 - a) * u)) -
                       (1.0 / (1.0 - a)) * std::log(std::sin(u));
  return std::exp(((1.0 - a) / a) * (log_A - std::log(e)));
}

std::vector<double> shifted(const std::vector<double>& base,
                            const std::vector<double>& step) {
  std::vector<double> out(base.size());
  for (std::size_t k = 0; k < base.size(); ++k) out[k] = base[k] + step[k];
  return out;
}

double light_eta(const ModelSpec& model) {
  double eta = std::numeric_limits<double>::infinity();
  for (const auto& law : model.lifetimes)
    if (law.kind() == LifetimeKind::LightPareto)
      eta = std::min(eta, law.eta());
  return eta;
}

std::vector<double> uniform_in_ball(std::size_t d, double radius, Rng& rng) {
  std::vector<double> g(d);
  double norm_sq = 0.0;
  for (auto& x : g) {
    x = rng.normal();
    norm_sq += x * x;
  }
  const double norm = std::sqrt(norm_sq);
  const double r =
      radius * std::pow(rng.uniform_open(), 1.0 / static_cast<double>(d));
  for (auto& x : g) x *= r / norm;
  return g;
}

const Particle& particle_by_id(const Genealogy& g, std::uint64_t id) {
  // Tables from simulate_tree index by id directly; reduced trees keep
  // original ids in sorted order, so fall back to binary search.
  if (id < g.particles.size() && g.particles[id].id == id)
    return g.particles[id];
  const auto it = std::lower_bound(
      g.particles.begin(), g.particles.end(), id,
      [](const Particle& p, std::uint64_t key) { return p.id < key; });
  return *it;
}

struct VectorCounter {
  std::vector<stats::CounterSummary> parts;
};

VectorCounter merge(const VectorCounter& a, const VectorCounter& b) {
  if (a.parts.empty()) return b;
  if (b.parts.empty()) return a;
  VectorCounter out = a;
  for (std::size_t k = 0; k < out.parts.size(); ++k)
    out.parts[k] = merge(out.parts[k], b.parts[k]);
  return out;
}

}  // namespace

double ball_volume(std::size_t d, double r) {
  const double half_d = static_cast<double>(d) / 2.0;
  return std::pow(kPi, half_d) * std::pow(r, static_cast<double>(d)) /
         std::tgamma(half_d + 1.0);
}

std::vector<double> sample_stable_increment(double alpha, double dt,
                                            std::size_t d, Rng& rng) {
  if (!(alpha > 0.0) || alpha > 2.0)
    throw InvalidAlpha("sample_stable_increment: alpha must be in (0,2]");
  if (dt < 0.0)
    throw std::invalid_argument("sample_stable_increment: dt < 0");
  std::vector<double> out(d, 0.0);
  if (dt == 0.0) return out;
  if (alpha == 2.0) {
    const double sd = std::sqrt(2.0 * dt);
    for (auto& x : out) x = sd * rng.normal();
    return out;
  }
  // Brownian motion evaluated at an independent (alpha/2)-stable time: the
  // characteristic function is exp(-dt |xi|^alpha), exactly isotropic.
  const double clock = one_sided_stable(alpha / 2.0, rng);
  const double sd = std::pow(dt, 1.0 / alpha) * std::sqrt(2.0 * clock);
  for (auto& x : out) x = sd * rng.normal();
  return out;
}

Genealogy simulate_tree(const ModelSpec& model, const Ancestor& ancestor,
                        double horizon, Rng& rng,
                        std::uint64_t population_cap) {
  if (!(horizon > 0.0))
    throw std::invalid_argument("simulate_tree: horizon must be positive");
  if (ancestor.type >= model.K || ancestor.position.size() != model.d ||
      ancestor.age < 0.0)
    throw std::invalid_argument("simulate_tree: bad ancestor");

  Genealogy g;
  g.horizon = horizon;
  g.num_types = model.K;

  Particle root;
  root.id = 0;
  root.type = ancestor.type;
  root.birth_position = ancestor.position;
  root.initial_age = ancestor.age;
  const auto& root_law = model.lifetimes[ancestor.type];
  root.death_time = ancestor.age > 0.0
                        ? root_law.sample_residual(ancestor.age, rng)
                        : root_law.sample(rng);
  g.particles.push_back(std::move(root));

  // Min-heap of pending deaths inside the horizon; ties break on id so the
  // event order (and hence replay) is fully deterministic.
  using Event = std::pair<double, std::uint64_t>;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> deaths;
  if (g.particles[0].death_time <= horizon) deaths.emplace(g.particles[0].death_time, 0);

  std::uint64_t living = 1;
  while (!deaths.empty()) {
    const auto [td, id] = deaths.top();
    deaths.pop();

    const std::uint32_t type = g.particles[id].type;
    const double dt = td - g.particles[id].birth_time;
    g.particles[id].death_position = shifted(
        g.particles[id].birth_position,
        sample_stable_increment(model.alphas[type], dt, model.d, rng));

    const std::vector<std::uint32_t> litter =
        model.offspring[type].sample(rng);
    std::uint64_t n_children = 0;
    for (std::uint32_t c : litter) n_children += c;
    living += n_children;
    --living;
    if (living > population_cap)
      throw PopulationExplosion(
          "simulate_tree: alive count exceeded the population cap");

    for (std::uint32_t j = 0; j < model.K; ++j) {
      for (std::uint32_t c = 0; c < litter[j]; ++c) {
        Particle child;
        child.id = g.particles.size();
        child.parent = id;
        child.type = j;
        child.birth_time = td;
        child.birth_position = g.particles[id].death_position;
        child.death_time = td + model.lifetimes[j].sample(rng);
        if (child.death_time <= horizon)
          deaths.emplace(child.death_time, child.id);
        g.particles.push_back(std::move(child));
      }
    }
  }

  for (auto& p : g.particles) {
    if (p.death_time > horizon) {
      p.horizon_position = shifted(
          p.birth_position,
          sample_stable_increment(model.alphas[p.type],
                                  horizon - p.birth_time, model.d, rng));
      g.alive.push_back(p.id);
    }
  }
  return g;
}

Genealogy reduced_tree(const Genealogy& g, double t) {
  if (t > g.horizon)
    throw std::invalid_argument("reduced_tree: t beyond the simulated horizon");
  std::vector<bool> keep(g.particles.size(), false);
  Genealogy out;
  out.horizon = t;
  out.num_types = g.num_types;
  for (std::size_t idx = 0; idx < g.particles.size(); ++idx) {
    const Particle& p = g.particles[idx];
    if (p.birth_time <= t && t < p.death_time) {
      out.alive.push_back(p.id);
      // walk the ancestry line up to the root
      std::uint64_t cur = p.id;
      for (;;) {
        std::size_t pos = cur;  // ids are table indices in full genealogies
        if (pos >= g.particles.size() || g.particles[pos].id != cur)
          pos = static_cast<std::size_t>(
              std::lower_bound(g.particles.begin(), g.particles.end(), cur,
                               [](const Particle& q, std::uint64_t key) {
                                 return q.id < key;
                               }) -
              g.particles.begin());
        if (keep[pos]) break;
        keep[pos] = true;
        if (g.particles[pos].is_ancestor()) break;
        cur = g.particles[pos].parent;
      }
    }
  }
  for (std::size_t idx = 0; idx < g.particles.size(); ++idx)
    if (keep[idx]) out.particles.push_back(g.particles[idx]);
  return out;
}

LocalCount count_in_ball(const Genealogy& g, const Ball& ball) {
  LocalCount out;
  out.ball = ball;
  std::size_t K = 0;
  for (const auto& p : g.particles) K = std::max<std::size_t>(K, p.type + 1);
  out.per_type.assign(K, 0);
  for (std::uint64_t id : g.alive) {
    const Particle& p = particle_by_id(g, id);
    double dist_sq = 0.0;
    for (std::size_t k = 0; k < ball.center.size(); ++k) {
      const double diff = p.horizon_position[k] - ball.center[k];
      dist_sq += diff * diff;
    }
    if (dist_sq <= ball.radius * ball.radius) {
      ++out.per_type[p.type];
      ++out.total;
    }
  }
  return out;
}

OccupationExtremes occupation_extremes(const Genealogy& g, double t) {
  if (t > g.horizon)
    throw std::invalid_argument(
        "occupation_extremes: t beyond the simulated horizon");
  std::size_t K = 0;
  for (const auto& p : g.particles) K = std::max<std::size_t>(K, p.type + 1);

  OccupationExtremes out;
  out.mu.assign(K, std::numeric_limits<double>::infinity());
  out.sigma.assign(K, 0.0);

  // Per-particle cumulative line occupation at min(death, t); parents always
  // precede children in the table, so one forward pass suffices.
  std::vector<std::vector<double>> cum(g.particles.size());
  for (std::size_t idx = 0; idx < g.particles.size(); ++idx) {
    const Particle& p = g.particles[idx];
    if (p.birth_time > t) continue;
    std::vector<double> occ =
        p.is_ancestor() ? std::vector<double>(K, 0.0) : cum[p.parent];
    const double end = std::min(p.death_time, t);
    occ[p.type] += end - p.birth_time;
    for (std::size_t j = 0; j < K; ++j)
      out.sigma[j] = std::max(out.sigma[j], occ[j]);
    if (p.death_time > t)
      for (std::size_t j = 0; j < K; ++j)
        out.mu[j] = std::min(out.mu[j], occ[j]);
    cum[idx] = std::move(occ);
  }
  return out;
}

OccupationLawEstimate mc_occupation_law(const ModelSpec& model,
                                        std::uint32_t i0, double t, double a,
                                        std::uint64_t reps, std::uint64_t seed,
                                        unsigned workers) {
  if (!(a < t))
    throw std::invalid_argument("mc_occupation_law: requires a < t");
  const Ancestor start{std::vector<double>(model.d, 0.0), i0, 0.0};
  const auto counters = parallel_mc<VectorCounter>(
      reps, seed, workers, [&](Rng& rng, VectorCounter& acc, std::uint64_t) {
        if (acc.parts.empty()) acc.parts.resize(model.K);
        const Genealogy g = simulate_tree(model, start, t, rng);
        const OccupationExtremes ext = occupation_extremes(g, t);
        for (std::size_t j = 0; j < model.K; ++j)
          acc.parts[j].add(ext.mu[j] <= a);
      });

  OccupationLawEstimate out;
  out.t = t;
  out.a = a;
  for (const auto& c : counters.parts) out.nu.push_back(c.estimate());
  return out;
}

LocalSurvivalEstimate local_survival(const ModelSpec& model,
                                     const Ancestor& start, double t,
                                     const Ball& ball, std::uint64_t reps,
                                     std::uint64_t seed, unsigned workers) {
  const auto counter = parallel_mc<stats::CounterSummary>(
      reps, seed, workers,
      [&](Rng& rng, stats::CounterSummary& acc, std::uint64_t) {
        const Genealogy g = simulate_tree(model, start, t, rng);
        acc.add(count_in_ball(g, ball).total > 0);
      });

  LocalSurvivalEstimate out;
  out.estimate = counter.estimate();
  out.low_precision = reps < 100;
  const double eta = light_eta(model);
  const double motion_term =
      std::pow(t, -static_cast<double>(model.d) / model.alpha_min());
  const double lifetime_term =
      std::isinf(eta) ? 0.0 : std::pow(t, 1.0 - eta);
  out.paper_bound = motion_term + lifetime_term;
  return out;
}

SurvivalIntegral survival_integral(const ModelSpec& model, std::uint32_t i0,
                                   double t, const Ball& ball, double L,
                                   std::size_t n_shells, std::uint64_t reps,
                                   std::uint64_t seed, unsigned workers,
                                   double radius_exponent) {
  if (!(L > 0.0) || n_shells == 0)
    throw std::invalid_argument("survival_integral: bad window parameters");
  for (double c : ball.center)
    if (c != 0.0)
      throw std::invalid_argument("survival_integral: ball must be centered");

  SurvivalIntegral out;
  out.radius_exponent =
      radius_exponent > 0.0 ? radius_exponent : 1.0 / model.alpha_min();

  if (t == 0.0) {
    // The integrand degenerates to the indicator of the ball.
    out.estimate = ball_volume(model.d, ball.radius);
    return out;
  }

  out.window_radius = L * std::pow(t, out.radius_exponent);
  out.window_volume = ball_volume(model.d, out.window_radius);

  double var = 0.0;
  for (std::size_t s = 0; s < n_shells; ++s) {
    const double r_lo =
        out.window_radius * static_cast<double>(s) / n_shells;
    const double r_hi =
        out.window_radius * static_cast<double>(s + 1) / n_shells;
    const double r_mid = 0.5 * (r_lo + r_hi);
    const double volume =
        ball_volume(model.d, r_hi) - ball_volume(model.d, r_lo);

    std::vector<double> x(model.d, 0.0);
    x[0] = r_mid;  // isotropy: only the radius matters
    const Ancestor start{x, i0, 0.0};
    const std::uint64_t sub_seed = seed + (s + 1) * 0x9e3779b97f4a7c15ULL;
    const auto counter = parallel_mc<stats::CounterSummary>(
        reps, sub_seed, workers,
        [&](Rng& rng, stats::CounterSummary& acc, std::uint64_t) {
          const Genealogy g = simulate_tree(model, start, t, rng);
          acc.add(count_in_ball(g, ball).total > 0);
        });
    const stats::TailEstimate est = counter.estimate();
    out.shells.push_back({r_mid, volume, est});
    out.estimate += volume * est.p_hat;
    var += volume * volume * est.stderr_est() * est.stderr_est();
  }
  out.stderr_est = std::sqrt(var);
  return out;
}

PoissonFieldEstimate poisson_field_survival(const ModelSpec& model, double t,
                                            double window_radius, double L,
                                            const Ball& ball,
                                            std::uint64_t reps,
                                            std::uint64_t seed,
                                            unsigned workers) {
  const double required = L * std::pow(t, 1.0 / model.alpha_min());
  if (window_radius < required * (1.0 - 1e-12))
    throw WindowTooSmall(
        "poisson_field_survival: window does not cover the spread region");

  const double volume = ball_volume(model.d, window_radius);
  const auto counter = parallel_mc<stats::CounterSummary>(
      reps, seed, workers,
      [&](Rng& rng, stats::CounterSummary& acc, std::uint64_t) {
        bool occupied = false;
        for (std::uint32_t i = 0; i < model.K && !occupied; ++i) {
          const double mean = model.intensities[i] * volume;
          if (mean == 0.0) continue;
          const std::uint64_t n = rng.poisson(mean);
          for (std::uint64_t k = 0; k < n && !occupied; ++k) {
            const Ancestor start{uniform_in_ball(model.d, window_radius, rng),
                                 i, 0.0};
            const Genealogy g = simulate_tree(model, start, t, rng);
            occupied = count_in_ball(g, ball).total > 0;
          }
        }
        acc.add(occupied);
      });

  PoissonFieldEstimate out;
  out.occupancy = counter.estimate();
  out.window_radius = window_radius;
  for (std::uint32_t i = 0; i < model.K; ++i)
    out.mean_ancestors += model.intensities[i] * volume;
  out.low_precision = reps < 100;
  return out;
}

}  // namespace branchsim

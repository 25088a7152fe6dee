#pragma once

#include <concepts>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "committor/network.hpp"
#include "committor/potentials.hpp"
#include "committor/rng.hpp"
#include "committor/sde.hpp"
#include "committor/stats.hpp"
#include "committor/vec_math.hpp"

namespace committor {

struct HarvestOptions {
  long decorrelation_gap = 1000;  // chain steps between accepted states
  long budget_steps = 50000000;   // post-burn-in chain steps before giving up
};

// States on the band |q(x) - 1/2| < epsilon, harvested from an equilibrium
// chain with a decorrelation gap.
struct IsoSurfaceBatch {
  std::vector<Vec> states;
  Vec q_values;
  double epsilon = 0.0;
};

class HarvestBudgetError : public std::runtime_error {
 public:
  HarvestBudgetError(const std::string& msg, IsoSurfaceBatch partial)
      : std::runtime_error(msg), partial_(std::move(partial)) {}
  const IsoSurfaceBatch& partial() const { return partial_; }

 private:
  IsoSurfaceBatch partial_;
};

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename QFn, NoiseSource NS>
  requires std::invocable<QFn&, std::span<const double>>
IsoSurfaceBatch collect_isosurface_states(QFn&& q_fn, const PotentialSpec& spec,
                                          const RegionSpec& region, double epsilon, std::size_t m,
                                          const SdeConfig& cfg, const HarvestOptions& opt,
                                          NS& rng) {
  if (m < 1) throw std::invalid_argument("collect_isosurface_states: m must be >= 1");
  if (epsilon < 0.0) throw std::invalid_argument("collect_isosurface_states: epsilon < 0");
  cfg.validate();

  IsoSurfaceBatch batch;
  batch.epsilon = epsilon;

  Vec x = region.center_a;
  {
    Vec g(spec.dim);
    rng.gauss_fill(g);
    axpy(1.0, g, x);
  }
  if (spec.domain) spec.domain->reflect(x);
  Vec noise(spec.dim), grad(spec.dim);
  for (long i = 0; i < cfg.burn_in_steps; ++i)
    detail::advance_chain(spec, x, cfg.dt_equilibrium, cfg.beta, rng, noise, grad);

  long since_accept = 0;
  for (long step = 0; step < opt.budget_steps; ++step) {
    detail::advance_chain(spec, x, cfg.dt_equilibrium, cfg.beta, rng, noise, grad);
    if (++since_accept < opt.decorrelation_gap) continue;
    if (region_classify(region, x) != RegionLabel::Interior) continue;
    const double q = q_fn(std::span<const double>(x));
    if (std::abs(q - 0.5) < epsilon) {
      batch.states.push_back(x);
      batch.q_values.push_back(q);
      since_accept = 0;
      if (batch.states.size() == m) return batch;
    }
  }
  throw HarvestBudgetError("collect_isosurface_states: budget exhausted with " +
                               std::to_string(batch.states.size()) + " of " + std::to_string(m) +
                               " states",
                           std::move(batch));
}

template <NoiseSource NS>
IsoSurfaceBatch collect_isosurface_states(const CommittorModel& model, const PotentialSpec& spec,
                                          const RegionSpec& region, double epsilon, std::size_t m,
                                          const SdeConfig& cfg, const HarvestOptions& opt,
                                          NS& rng) {
  Workspace ws(model);
  return collect_isosurface_states(
      [&](std::span<const double> x) { return forward(model, x, ws); }, spec, region, epsilon, m,
      cfg, opt, rng);
}

struct HitStatistics {
  Vec fractions;                      // n_j / N_j per state
  std::vector<std::size_t> hits;      // n_j
  std::vector<std::size_t> timeouts;  // excluded trajectories per state
  std::size_t trajectories_per_state = 0;
  std::size_t timeout_count = 0;
  double mean = 0.0;
  double variance = 0.0;
  double null_sd = 0.0;  // 1 / (2 sqrt(N))
  double ks_statistic = 0.0;
  double ks_p_value = 0.0;
  std::vector<std::pair<double, double>> qq;  // (empirical, normal) quantiles
};

// Launches N trajectories from every state and compares the hit-B fractions
// against Normal(1/2, 1/(4N)). Per-state RNG streams are keyed by a content
// hash of the state, so the statistics are invariant under state reordering
// and under the worker count.
HitStatistics hitting_test(const IsoSurfaceBatch& batch, const PotentialSpec& spec,
                           const RegionSpec& region, std::size_t trajectories, double dt,
                           long max_steps, double beta, const Rng& master, int workers = 1);

// fractions.csv, histogram.csv, qq.csv and ks_summary.json under `dir`
void write_hit_statistics(const HitStatistics& stats, const std::string& dir);

}  // namespace committor

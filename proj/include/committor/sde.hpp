#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "committor/potentials.hpp"
#include "committor/rng.hpp"
#include "committor/vec_math.hpp"

namespace committor {

struct SdeConfig {
  double beta = 1.0;            // inverse temperature 1/T
  double dt_equilibrium = 1e-3; // step for burn-in / decorrelation stepping
  long burn_in_steps = 100000;
  long thinning_steps = 10;
  double delta = 0.003;
  int substeps = 1;  // M

  void validate() const {
    if (beta <= 0.0 || dt_equilibrium <= 0.0 || delta <= 0.0)
      throw std::invalid_argument("SdeConfig: beta, dt_equilibrium, delta must be positive");
    if (burn_in_steps <= 0 || thinning_steps <= 0 || substeps <= 0)
      throw std::invalid_argument("SdeConfig: burn_in, thinning, substeps must be positive");
  }
};

enum class HitIndicator : std::uint8_t { Interior = 0, HitA = 1, HitB = 2 };
enum class HitOutcome : std::uint8_t { HitA = 1, HitB = 2, Timeout = 3 };

// One training atom: start x ~ rho restricted to the interior, endpoint of the
// delta-propagation, and whether the discrete path entered A or B on the way.
struct TransitionSample {
  Vec x;
  Vec x_delta;
  HitIndicator indicator = HitIndicator::Interior;
};

// x <- x - grad*dt + sqrt(2 dt / beta) * noise, with noise ~ N(0, I)
inline void em_step_with_grad(std::span<double> x, std::span<const double> grad, double dt,
                              std::span<const double> noise, double beta) {
  const double diffusion = std::sqrt(2.0 * dt / beta);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += -grad[i] * dt + diffusion * noise[i];
}

inline Vec em_step(const PotentialSpec& spec, std::span<const double> x, double dt,
                   std::span<const double> noise, double beta) {
  if (dt <= 0.0) throw std::invalid_argument("em_step: dt must be positive");
  if (noise.size() != x.size()) throw std::invalid_argument("em_step: noise length mismatch");
  Vec next(x.begin(), x.end());
  Vec grad = eval_grad(spec, x);
  em_step_with_grad(next, grad, dt, noise, beta);
  return next;
}

namespace detail {

// One chain step with fresh noise; reflects at the domain walls if present.
template <NoiseSource NS>
void advance_chain(const PotentialSpec& spec, std::span<double> x, double dt, double beta,
                   NS& noise_source, std::span<double> noise_buf, std::span<double> grad_buf) {
  noise_source.gauss_fill(noise_buf);
  eval_grad(spec, x, grad_buf);
  em_step_with_grad(x, grad_buf, dt, noise_buf, beta);
  if (spec.domain) spec.domain->reflect(x);
}

}  // namespace detail

// Equilibrium draws from rho restricted to Omega \ (A u B): burn-in, then every
// thinning_steps-th chain state; states inside A u B are skipped but the chain
// runs through them. `start` defaults to y^A perturbed by unit Gaussian noise.
template <NoiseSource NS>
std::vector<Vec> equilibrium_samples(const PotentialSpec& spec, const RegionSpec& region,
                                     const SdeConfig& cfg, std::size_t count, NS& rng,
                                     const std::optional<Vec>& start = std::nullopt) {
  cfg.validate();
  std::vector<Vec> out;
  if (count == 0) return out;
  out.reserve(count);

  Vec x;
  if (start) {
    if (static_cast<int>(start->size()) != spec.dim)
      throw std::invalid_argument("equilibrium_samples: start point dimension mismatch");
    x = *start;
  } else {
    x = region.center_a;
    Vec g(spec.dim);
    rng.gauss_fill(g);
    axpy(1.0, g, x);
  }
  if (spec.domain) spec.domain->reflect(x);

  Vec noise(spec.dim), grad(spec.dim);
  for (long i = 0; i < cfg.burn_in_steps; ++i)
    detail::advance_chain(spec, x, cfg.dt_equilibrium, cfg.beta, rng, noise, grad);

  while (out.size() < count) {
    for (long i = 0; i < cfg.thinning_steps; ++i)
      detail::advance_chain(spec, x, cfg.dt_equilibrium, cfg.beta, rng, noise, grad);
    if (region_classify(region, x) == RegionLabel::Interior) out.push_back(x);
  }
  return out;
}

// Propagates an interior point over the window delta in M substeps of delta/M.
// The earliest substep landing in A or B decides the indicator; the path is
// continued to the full window so x_delta is always the final substep state.
template <NoiseSource NS>
TransitionSample propagate_delta(const PotentialSpec& spec, const RegionSpec& region,
                                 std::span<const double> x, const SdeConfig& cfg, NS& rng) {
  cfg.validate();
  if (region_classify(region, x) != RegionLabel::Interior)
    throw std::invalid_argument("propagate_delta: start point must classify Interior");

  TransitionSample s;
  s.x.assign(x.begin(), x.end());
  Vec state(x.begin(), x.end());
  Vec noise(spec.dim), grad(spec.dim);
  const double dt = cfg.delta / cfg.substeps;
  for (int k = 0; k < cfg.substeps; ++k) {
    detail::advance_chain(spec, state, dt, cfg.beta, rng, noise, grad);
    if (s.indicator == HitIndicator::Interior) {
      const RegionLabel label = region_classify(region, state);
      if (label == RegionLabel::InA) s.indicator = HitIndicator::HitA;
      else if (label == RegionLabel::InB) s.indicator = HitIndicator::HitB;
    }
  }
  s.x_delta = std::move(state);
  return s;
}

// Runs the chain until it enters A or B, or max_steps is exhausted.
template <NoiseSource NS>
HitOutcome simulate_until_hit(const PotentialSpec& spec, const RegionSpec& region,
                              std::span<const double> x, double dt, long max_steps, NS& rng,
                              double beta) {
  if (dt <= 0.0) throw std::invalid_argument("simulate_until_hit: dt must be positive");
  if (max_steps < 1) throw std::invalid_argument("simulate_until_hit: max_steps must be >= 1");
  if (region_classify(region, x) != RegionLabel::Interior)
    throw std::invalid_argument("simulate_until_hit: start point must classify Interior");

  Vec state(x.begin(), x.end());
  Vec noise(spec.dim), grad(spec.dim);
  for (long i = 0; i < max_steps; ++i) {
    detail::advance_chain(spec, state, dt, beta, rng, noise, grad);
    const RegionLabel label = region_classify(region, state);
    if (label == RegionLabel::InA) return HitOutcome::HitA;
    if (label == RegionLabel::InB) return HitOutcome::HitB;
  }
  return HitOutcome::Timeout;
}

// Propagates every start point once; the frozen result is the training corpus.
template <NoiseSource NS>
std::vector<TransitionSample> make_transition_samples(const PotentialSpec& spec,
                                                      const RegionSpec& region,
                                                      const SdeConfig& cfg,
                                                      std::span<const Vec> starts, NS& rng) {
  std::vector<TransitionSample> out;
  out.reserve(starts.size());
  for (const Vec& s : starts) out.push_back(propagate_delta(spec, region, s, cfg, rng));
  return out;
}

}  // namespace committor

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "committor/network.hpp"
#include "committor/potentials.hpp"
#include "committor/reference.hpp"
#include "committor/sde.hpp"
#include "committor/training.hpp"

namespace committor {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ReferenceKind { None, Ode1D, Grid2D };

// One experiment, as read from a config file. Field names follow the blocks
// of the JSON schema (see configs/ and the README).
struct ExperimentConfig {
  // potential
  PotentialKind kind = PotentialKind::DoubleWell;
  int dim = 10;
  double temperature = 0.5;
  double gl_lambda = 0.03;

  // region overrides
  double region_radius = 3.0;  // Ginzburg-Landau spheres

  // sde
  double dt = 1e-3;
  long burn_in_steps = 100000;
  long thinning_steps = 10;
  double delta = 0.003;
  int substeps = 1;

  // sampling
  std::size_t training_samples = 150000;
  std::size_t boundary_samples = 2000;
  std::size_t validation_samples = 400000;
  int chains = 1;

  // network
  std::vector<int> n0_hidden{40, 40, 40};
  std::vector<int> ab_hidden{20, 20};

  // training
  double penalty_c = 0.0;       // resolved value (c = c_norm * delta when c_norm given)
  double penalty_c_norm = 0.0;  // the other normalization, always derivable
  std::size_t batch_size = 1000;
  std::size_t boundary_batch = 128;
  std::size_t steps = 20000;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::size_t eval_interval = 500;
  std::size_t checkpoint_interval = 0;  // 0 = only the final checkpoint

  // evaluation
  ReferenceKind reference = ReferenceKind::None;
  std::size_t reference_nodes = 2001;      // 1D quadrature grid
  std::size_t reference_resolution = 400;  // 2D cells per axis
  std::size_t trace_validation_samples = 20000;

  // validation (Ginzburg-Landau hitting test)
  double iso_epsilon = 0.01;
  std::size_t iso_states = 120;
  std::size_t hit_trajectories = 100;
  double hit_dt = 1e-4;
  long hit_max_steps = 10000000;
  long decorrelation_gap = 1000;
  long harvest_budget = 50000000;

  // compare
  std::vector<double> c_norm_sweep;
  std::size_t compare_steps = 8000;

  std::uint64_t seed = 1;

  static ExperimentConfig from_json_file(const std::string& path);
  static ExperimentConfig from_json_text(const std::string& text);

  std::string canonical_json() const;
  std::uint64_t config_hash() const;
};

// Problem objects assembled from a config.
struct Experiment {
  ExperimentConfig cfg;
  PotentialSpec potential;
  RegionSpec region;
  SdeConfig sde;
  ModelArch arch;
};

Experiment build_experiment(const ExperimentConfig& cfg);

struct SampleSet {
  TrainingData train;
  std::vector<Vec> validation;
};

// Deterministic in (seed, chains): chain i draws from rng streams derived from
// the master seed and i alone, so the worker pool never changes the result.
SampleSet generate_samples(const Experiment& ex, const Rng& master, int workers = 1);

// Error metric evaluator bound to the experiment's reference solution over a
// fixed validation set; empty when the experiment has no reference.
ErrorFn make_error_fn(const Experiment& ex, std::vector<Vec> validation);

// Builds (or loads from `cache_path` when present) the experiment's reference.
Reference1D build_reference_1d(const Experiment& ex,
                               const std::optional<std::string>& cache_path = std::nullopt);
Reference2D build_reference_2d(const Experiment& ex,
                               const std::optional<std::string>& cache_path = std::nullopt);

}  // namespace committor

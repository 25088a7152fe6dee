#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "committor/network.hpp"
#include "committor/rng.hpp"
#include "committor/sde.hpp"

namespace committor {

enum class LossKind {
  Semigroup,            // the stochastic semigroup loss, no spatial derivatives
  BaselineGradSquared,  // |grad_x q|^2 + boundary penalties, for comparison
};

struct TrainConfig {
  double penalty_c = 0.0;  // boundary penalty coefficient (c, or c~ for the baseline)
  std::size_t batch_size = 1000;
  std::size_t boundary_batch = 128;
  std::size_t steps = 20000;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t eval_interval = 500;
  std::size_t checkpoint_interval = 0;  // 0 disables periodic checkpoints
  LossKind loss = LossKind::Semigroup;
  int workers = 1;
};

struct OptimizerState {
  Vec m, v;  // first/second moments
  std::size_t t = 0;
  explicit OptimizerState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

// Standard Adam with bias correction.
void adam_step(OptimizerState& state, std::span<double> theta, std::span<const double> grad,
               const TrainConfig& cfg);

// Batch mean of grad_theta q(x) * (q(x) - q(x_delta) 1_{Interior} - 1_{HitB}).
// q(x_delta) is evaluated but never differentiated: only the leading
// grad_theta q(x) carries derivative information.
Vec semigroup_grad(const CommittorModel& model, std::span<const TransitionSample> batch,
                   int workers = 1);

// c * mean_A[grad q * q] + c * mean_B[grad q * (q-1)]
Vec penalty_grad(const CommittorModel& model, std::span<const Vec> boundary_a,
                 std::span<const Vec> boundary_b, double c);

// Exact theta-gradient of mean |grad_x q|^2 + c~ mean_A q^2 + c~ mean_B (q-1)^2.
Vec baseline_grad(const CommittorModel& model, std::span<const Vec> interior,
                  std::span<const Vec> boundary_a, std::span<const Vec> boundary_b,
                  double c_tilde, int workers = 1);

// Monitoring scalar only: single-sample substitution inside the quadratic form
// makes this a tracking statistic, not the exact loss.
double monitor_loss(const CommittorModel& model, std::span<const TransitionSample> batch,
                    std::span<const Vec> boundary_a, std::span<const Vec> boundary_b, double c);

// Baseline counterpart: mean |grad_x q|^2 plus penalty means.
double baseline_monitor_loss(const CommittorModel& model, std::span<const Vec> interior,
                             std::span<const Vec> boundary_a, std::span<const Vec> boundary_b,
                             double c_tilde);

struct TraceRow {
  std::size_t step = 0;
  double monitor = 0.0;
  double error = 0.0;
  bool has_error = false;
  double wall_seconds = 0.0;
};

struct TrainingData {
  std::vector<TransitionSample> samples;
  std::vector<Vec> boundary_a, boundary_b;
};

using ErrorFn = std::function<double(const CommittorModel&)>;
using CheckpointFn = std::function<void(std::size_t step, const CommittorModel&)>;

struct TrainResult {
  std::vector<TraceRow> trace;
  double final_error = 0.0;
  bool has_final_error = false;
};

// Minibatch Adam loop over a frozen sample corpus: batches are drawn with
// replacement, the metric trace records monitor_loss (and E when an error
// evaluator is supplied) every eval_interval steps. Deterministic under the
// seed at fixed worker count.
TrainResult train(CommittorModel& model, const TrainingData& data, const TrainConfig& cfg,
                  const ErrorFn& error_fn, Rng& rng, const CheckpointFn& checkpoint_fn = {});

void write_trace_csv(std::span<const TraceRow> trace, const std::string& path);

}  // namespace committor

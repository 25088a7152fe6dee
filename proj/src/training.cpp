#include "committor/training.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <thread>

namespace committor {

void adam_step(OptimizerState& state, std::span<double> theta, std::span<const double> grad,
               const TrainConfig& cfg) {
  if (theta.size() != grad.size() || state.m.size() != theta.size())
    throw std::invalid_argument("adam_step: length mismatch");
  state.t += 1;
  const double b1 = cfg.beta1, b2 = cfg.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double g = grad[i];
    state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
    state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    theta[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
  }
}

namespace {

void accumulate_semigroup(const CommittorModel& model, std::span<const TransitionSample> part,
                          std::span<double> acc, Workspace& ws) {
  for (const TransitionSample& s : part) {
    double q_delta = 0.0;
    if (s.indicator == HitIndicator::Interior) q_delta = forward(model, s.x_delta, ws);
    const double q = forward(model, s.x, ws);
    double coeff = q;
    if (s.indicator == HitIndicator::Interior) coeff -= q_delta;
    else if (s.indicator == HitIndicator::HitB) coeff -= 1.0;
    backprop_params_from_forward(model, coeff, acc, ws);
  }
}

// Shards work over contiguous ranges and sums the per-shard accumulators in
// shard order, so results are deterministic at a fixed worker count.
template <typename Item, typename AccumFn>
Vec sharded_mean_grad(const CommittorModel& model, std::span<const Item> items, int workers,
                      AccumFn&& accum) {
  Vec total(model.theta.size(), 0.0);
  const std::size_t n = items.size();
  if (workers <= 1 || n < 64) {
    Workspace ws(model);
    accum(items, std::span<double>(total), ws);
  } else {
    const std::size_t shards = static_cast<std::size_t>(workers);
    std::vector<Vec> partial(shards, Vec(model.theta.size(), 0.0));
    std::vector<std::thread> pool;
    pool.reserve(shards);
    for (std::size_t w = 0; w < shards; ++w) {
      const std::size_t lo = n * w / shards, hi = n * (w + 1) / shards;
      pool.emplace_back([&, w, lo, hi] {
        Workspace ws(model);
        accum(items.subspan(lo, hi - lo), std::span<double>(partial[w]), ws);
      });
    }
    for (auto& t : pool) t.join();
    for (const Vec& p : partial) axpy(1.0, p, total);
  }
  scale(total, 1.0 / static_cast<double>(n));
  return total;
}

}  // namespace

Vec semigroup_grad(const CommittorModel& model, std::span<const TransitionSample> batch,
                   int workers) {
  if (batch.empty()) throw std::invalid_argument("semigroup_grad: empty batch");
  return sharded_mean_grad<TransitionSample>(
      model, batch, workers,
      [&model](std::span<const TransitionSample> part, std::span<double> acc, Workspace& ws) {
        accumulate_semigroup(model, part, acc, ws);
      });
}

Vec penalty_grad(const CommittorModel& model, std::span<const Vec> boundary_a,
                 std::span<const Vec> boundary_b, double c) {
  Vec g(model.theta.size(), 0.0);
  if (c == 0.0) return g;
  if (boundary_a.empty() || boundary_b.empty())
    throw std::invalid_argument("penalty_grad: empty boundary sample list with c > 0");
  Workspace ws(model);
  const double wa = c / static_cast<double>(boundary_a.size());
  for (const Vec& x : boundary_a) {
    const double q = forward(model, x, ws);
    backprop_params_from_forward(model, wa * q, g, ws);
  }
  const double wb = c / static_cast<double>(boundary_b.size());
  for (const Vec& x : boundary_b) {
    const double q = forward(model, x, ws);
    backprop_params_from_forward(model, wb * (q - 1.0), g, ws);
  }
  return g;
}

Vec baseline_grad(const CommittorModel& model, std::span<const Vec> interior,
                  std::span<const Vec> boundary_a, std::span<const Vec> boundary_b,
                  double c_tilde, int workers) {
  if (interior.empty()) throw std::invalid_argument("baseline_grad: empty interior batch");
  Vec g = sharded_mean_grad<Vec>(
      model, interior, workers,
      [&model](std::span<const Vec> part, std::span<double> acc, Workspace& ws) {
        for (const Vec& x : part) accumulate_sqgrad_params(model, x, 1.0, acc, ws);
      });
  if (c_tilde != 0.0) {
    // the penalties enter without a 1/2, so their gradient carries a factor 2
    axpy(1.0, penalty_grad(model, boundary_a, boundary_b, 2.0 * c_tilde), g);
  }
  return g;
}

double monitor_loss(const CommittorModel& model, std::span<const TransitionSample> batch,
                    std::span<const Vec> boundary_a, std::span<const Vec> boundary_b, double c) {
  if (batch.empty()) throw std::invalid_argument("monitor_loss: empty batch");
  Workspace ws(model);
  double acc = 0.0;
  for (const TransitionSample& s : batch) {
    double q_delta = 0.0;
    if (s.indicator == HitIndicator::Interior) q_delta = forward(model, s.x_delta, ws);
    const double q = forward(model, s.x, ws);
    double coeff = q;
    if (s.indicator == HitIndicator::Interior) coeff -= q_delta;
    else if (s.indicator == HitIndicator::HitB) coeff -= 1.0;
    acc += 0.5 * q * coeff;
  }
  double loss = acc / static_cast<double>(batch.size());
  if (c != 0.0 && !boundary_a.empty() && !boundary_b.empty()) {
    double pa = 0.0, pb = 0.0;
    for (const Vec& x : boundary_a) {
      const double q = forward(model, x, ws);
      pa += q * q;
    }
    for (const Vec& x : boundary_b) {
      const double q = forward(model, x, ws);
      pb += (q - 1.0) * (q - 1.0);
    }
    loss += 0.5 * c * pa / static_cast<double>(boundary_a.size());
    loss += 0.5 * c * pb / static_cast<double>(boundary_b.size());
  }
  return loss;
}

double baseline_monitor_loss(const CommittorModel& model, std::span<const Vec> interior,
                             std::span<const Vec> boundary_a, std::span<const Vec> boundary_b,
                             double c_tilde) {
  if (interior.empty()) throw std::invalid_argument("baseline_monitor_loss: empty batch");
  Workspace ws(model);
  Vec dqdx(model.dim);
  double acc = 0.0;
  for (const Vec& x : interior) {
    grad_input(model, x, dqdx, ws);
    acc += squared_norm(dqdx);
  }
  double loss = acc / static_cast<double>(interior.size());
  if (c_tilde != 0.0 && !boundary_a.empty() && !boundary_b.empty()) {
    double pa = 0.0, pb = 0.0;
    for (const Vec& x : boundary_a) {
      const double q = forward(model, x, ws);
      pa += q * q;
    }
    for (const Vec& x : boundary_b) {
      const double q = forward(model, x, ws);
      pb += (q - 1.0) * (q - 1.0);
    }
    loss += c_tilde * pa / static_cast<double>(boundary_a.size());
    loss += c_tilde * pb / static_cast<double>(boundary_b.size());
  }
  return loss;
}

TrainResult train(CommittorModel& model, const TrainingData& data, const TrainConfig& cfg,
                  const ErrorFn& error_fn, Rng& rng, const CheckpointFn& checkpoint_fn) {
  if (data.samples.empty() && cfg.steps > 0)
    throw std::invalid_argument("train: empty sample corpus");
  const bool use_penalty = cfg.penalty_c != 0.0;
  if (use_penalty && (data.boundary_a.empty() || data.boundary_b.empty()))
    throw std::invalid_argument("train: boundary pools required when the penalty is active");

  TrainResult result;
  OptimizerState opt(model.theta.size());
  std::vector<TransitionSample> batch(cfg.batch_size);
  std::vector<Vec> interior_batch;  // baseline loss uses bare points
  std::vector<Vec> ba(cfg.boundary_batch), bb(cfg.boundary_batch);
  if (cfg.loss == LossKind::BaselineGradSquared) interior_batch.resize(cfg.batch_size);

  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    for (std::size_t i = 0; i < cfg.batch_size; ++i)
      batch[i] = data.samples[rng.index(data.samples.size())];
    if (use_penalty) {
      for (std::size_t i = 0; i < cfg.boundary_batch; ++i)
        ba[i] = data.boundary_a[rng.index(data.boundary_a.size())];
      for (std::size_t i = 0; i < cfg.boundary_batch; ++i)
        bb[i] = data.boundary_b[rng.index(data.boundary_b.size())];
    }

    Vec grad;
    if (cfg.loss == LossKind::Semigroup) {
      grad = semigroup_grad(model, batch, cfg.workers);
      if (use_penalty) axpy(1.0, penalty_grad(model, ba, bb, cfg.penalty_c), grad);
    } else {
      for (std::size_t i = 0; i < cfg.batch_size; ++i) interior_batch[i] = batch[i].x;
      grad = baseline_grad(model, interior_batch, ba, bb, cfg.penalty_c, cfg.workers);
    }
    adam_step(opt, model.theta, grad, cfg);

    if (step % cfg.eval_interval == 0 || step == cfg.steps) {
      TraceRow row;
      row.step = step;
      if (cfg.loss == LossKind::Semigroup) {
        row.monitor = monitor_loss(model, batch, ba, bb, use_penalty ? cfg.penalty_c : 0.0);
      } else {
        row.monitor = baseline_monitor_loss(model, interior_batch, ba, bb, cfg.penalty_c);
      }
      if (error_fn) {
        row.error = error_fn(model);
        row.has_error = true;
      }
      row.wall_seconds = elapsed();
      result.trace.push_back(row);
    }
    if (checkpoint_fn && cfg.checkpoint_interval > 0 && step % cfg.checkpoint_interval == 0)
      checkpoint_fn(step, model);
  }

  if (error_fn) {
    result.final_error = error_fn(model);
    result.has_final_error = true;
  }
  return result;
}

void write_trace_csv(std::span<const TraceRow> trace, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_trace_csv: cannot open " + path);
  os << "step,monitor_loss,E,wallclock_seconds\n";
  os.precision(17);
  for (const TraceRow& r : trace) {
    os << r.step << ',' << r.monitor << ',';
    if (r.has_error) os << r.error;
    os << ',' << r.wall_seconds << '\n';
  }
  if (!os) throw std::runtime_error("write_trace_csv: write failed for " + path);
}

}  // namespace committor

// Acceptance suite: runs the experiment-level criteria end to end and prints
// one [PASS]/[FAIL] line per criterion. Each criterion is self-contained, so
// the per-criterion ctest entries can run in parallel.
//
//   committor_acceptance [--criterion N] [--extended] [--workers K]
//
// --extended adds the optional long rows (double-well T=0.2, rugged-Muller
// T=40, the m=120 hitting study); they are not part of the ctest gate.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "committor/experiment.hpp"
#include "committor/gl_validation.hpp"
#include "committor/stats.hpp"
#include "oracles.hpp"

using namespace committor;

namespace {

int g_workers = 2;

// The paper's tables pin delta, c, sample counts, and batch sizes; step counts
// and learning rates are not reported anywhere and are fixed here (matching
// the shipped config files). The long double-well schedule trades steps for a
// small learning rate to shrink the stationary optimizer noise.
constexpr std::size_t kDwSteps = 100000;
constexpr double kDwLr = 1e-4;
constexpr std::size_t kRmSteps = 15000;
constexpr double kRmLr = 3e-4;
constexpr std::size_t kGlSteps = 10000;
constexpr double kGlLr = 3e-4;
constexpr std::size_t kCompareSteps = 50000;
constexpr double kCompareLr = 2e-4;

double now_seconds() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

ExperimentConfig double_well_config(double temperature, double delta, int substeps,
                                    std::size_t training_samples) {
  ExperimentConfig cfg;
  cfg.kind = PotentialKind::DoubleWell;
  cfg.dim = 10;
  cfg.temperature = temperature;
  cfg.dt = 1e-3;
  cfg.delta = delta;
  cfg.substeps = substeps;
  cfg.training_samples = training_samples;
  cfg.boundary_samples = 2000;
  cfg.validation_samples = 400000;
  cfg.chains = g_workers;
  cfg.penalty_c = 15.0;
  cfg.batch_size = 1000;
  cfg.boundary_batch = 128;
  cfg.steps = kDwSteps;
  cfg.learning_rate = kDwLr;
  cfg.eval_interval = 10000;
  cfg.reference = ReferenceKind::Ode1D;
  cfg.reference_nodes = 2001;
  cfg.seed = 1;
  return cfg;
}

ExperimentConfig rugged_muller_config(double temperature) {
  ExperimentConfig cfg;
  cfg.kind = PotentialKind::RuggedMuller;
  cfg.dim = 10;
  cfg.temperature = temperature;
  cfg.dt = 1e-3;
  cfg.delta = 1e-3;
  cfg.training_samples = 600000;
  cfg.boundary_samples = 2000;
  cfg.validation_samples = 200000;
  cfg.chains = g_workers;
  cfg.penalty_c = 500.0;
  cfg.batch_size = 5000;
  cfg.boundary_batch = 128;
  cfg.steps = kRmSteps;
  cfg.learning_rate = kRmLr;
  cfg.eval_interval = 3000;
  cfg.reference = ReferenceKind::Grid2D;
  cfg.reference_resolution = 400;
  cfg.seed = 2;
  return cfg;
}

ExperimentConfig ginzburg_landau_config(double temperature) {
  ExperimentConfig cfg;
  cfg.kind = PotentialKind::GinzburgLandau;
  cfg.dim = 49;
  cfg.gl_lambda = 0.03;
  cfg.temperature = temperature;
  cfg.dt = 1e-4;
  cfg.delta = temperature == 20.0 ? 0.002 : 0.001;
  cfg.training_samples = 200000;
  cfg.boundary_samples = 2000;
  cfg.validation_samples = 0;
  cfg.chains = g_workers;
  cfg.penalty_c = 200.0;
  cfg.batch_size = 5000;
  cfg.boundary_batch = 128;
  cfg.steps = kGlSteps;
  cfg.learning_rate = kGlLr;
  cfg.eval_interval = 2000;
  cfg.reference = ReferenceKind::None;
  cfg.seed = 3;
  cfg.iso_epsilon = 0.01;
  cfg.iso_states = 30;
  cfg.hit_trajectories = 100;
  cfg.hit_dt = 1e-4;
  cfg.hit_max_steps = 10000000;
  cfg.decorrelation_gap = 1000;
  cfg.harvest_budget = 100000000;
  return cfg;
}

TrainConfig train_config_of(const ExperimentConfig& cfg) {
  TrainConfig tc;
  tc.penalty_c = cfg.penalty_c;
  tc.batch_size = cfg.batch_size;
  tc.boundary_batch = cfg.boundary_batch;
  tc.steps = cfg.steps;
  tc.learning_rate = cfg.learning_rate;
  tc.beta1 = cfg.adam_beta1;
  tc.beta2 = cfg.adam_beta2;
  tc.epsilon = cfg.adam_epsilon;
  tc.eval_interval = cfg.eval_interval;
  tc.workers = g_workers;
  return tc;
}

// Samples, trains, and reports the final error over the full validation set.
double run_experiment(const ExperimentConfig& cfg, CommittorModel* model_out = nullptr) {
  const Experiment ex = build_experiment(cfg);
  Rng master(cfg.seed);
  const SampleSet set = generate_samples(ex, master, g_workers);
  const ErrorFn error_fn = make_error_fn(ex, set.validation);
  Rng init_rng = master.stream(1);
  CommittorModel model = init_model(ex.arch, init_rng);
  Rng train_rng = master.stream(2);
  train(model, set.train, train_config_of(cfg), {}, train_rng);
  const double e = error_fn ? error_fn(model) : 0.0;
  if (model_out) *model_out = std::move(model);
  return e;
}

// ---------------------------------------------------------------------------

Outcome criterion_1(bool extended) {
  Outcome out;
  const double t0 = now_seconds();
  const double e = run_experiment(double_well_config(0.5, 0.003, 1, 150000));
  const double minutes = (now_seconds() - t0) / 60.0;
  out.require(e <= 0.03, "E(T=0.5) = " + std::to_string(e) + " > 0.03");
  out.detail += "E(T=0.5) = " + std::to_string(e) + " (paper 0.014), " +
                std::to_string(minutes).substr(0, 4) + " min";
  if (extended) {
    auto cfg = double_well_config(0.2, 0.003, 1, 800000);
    cfg.validation_samples = 800000;
    cfg.seed = 4;
    const double e2 = run_experiment(cfg);
    out.require(e2 <= 0.03, "E(T=0.2) = " + std::to_string(e2) + " > 0.03");
    out.detail += ", E(T=0.2) = " + std::to_string(e2) + " (paper 0.011)";
  }
  return out;
}

Outcome criterion_2(bool) {
  Outcome out;
  double e_at_005 = 0.0;
  for (double delta : {0.01, 0.03, 0.05}) {
    const double e = run_experiment(double_well_config(0.5, delta, 1, 150000));
    out.require(e <= 0.03,
                "E(delta=" + std::to_string(delta) + ") = " + std::to_string(e) + " > 0.03");
    out.detail += "E(" + std::to_string(delta).substr(0, 4) + ") = " + std::to_string(e) + "  ";
    if (delta == 0.05) e_at_005 = e;
  }
  const double e_multi = run_experiment(double_well_config(0.5, 0.05, 10, 150000));
  out.require(e_multi <= e_at_005 + 0.005,
              "E(M=10) = " + std::to_string(e_multi) + " > E(M=1) + 0.005 = " +
                  std::to_string(e_at_005 + 0.005));
  out.detail += "E(0.05, M=10) = " + std::to_string(e_multi);
  return out;
}

Outcome criterion_3(bool extended) {
  Outcome out;
  const double t0 = now_seconds();
  const double e = run_experiment(rugged_muller_config(22.0));
  const double minutes = (now_seconds() - t0) / 60.0;
  out.require(e <= 0.05, "E(T=22) = " + std::to_string(e) + " > 0.05");
  out.detail += "E(T=22) = " + std::to_string(e) + " (paper 0.024), " +
                std::to_string(minutes).substr(0, 4) + " min";
  if (extended) {
    auto cfg = rugged_muller_config(40.0);
    cfg.seed = 5;
    const double e2 = run_experiment(cfg);
    out.require(e2 <= 0.05, "E(T=40) = " + std::to_string(e2) + " > 0.05");
    out.detail += ", E(T=40) = " + std::to_string(e2) + " (paper 0.023)";
  }
  return out;
}

Outcome criterion_4(bool extended) {
  Outcome out;
  ExperimentConfig cfg = ginzburg_landau_config(20.0);
  if (extended) cfg.iso_states = 120;
  const Experiment ex = build_experiment(cfg);
  Rng master(cfg.seed);
  const SampleSet set = generate_samples(ex, master, g_workers);
  Rng init_rng = master.stream(1);
  CommittorModel model = init_model(ex.arch, init_rng);
  Rng train_rng = master.stream(2);
  train(model, set.train, train_config_of(cfg), {}, train_rng);

  HarvestOptions hopt;
  hopt.decorrelation_gap = cfg.decorrelation_gap;
  hopt.budget_steps = cfg.harvest_budget;
  Rng harvest_rng = master.stream(11);
  const IsoSurfaceBatch batch = collect_isosurface_states(
      model, ex.potential, ex.region, cfg.iso_epsilon, cfg.iso_states, ex.sde, hopt, harvest_rng);
  const HitStatistics stats =
      hitting_test(batch, ex.potential, ex.region, cfg.hit_trajectories, cfg.hit_dt,
                   cfg.hit_max_steps, ex.sde.beta, master.stream(12), g_workers);

  out.require(std::abs(stats.mean - 0.5) <= 0.03,
              "mean hit fraction " + std::to_string(stats.mean) + " outside 0.5 +- 0.03");
  out.require(stats.ks_p_value > 0.01,
              "KS p = " + std::to_string(stats.ks_p_value) + " <= 0.01");
  out.detail += "mean = " + std::to_string(stats.mean) +
                ", KS p = " + std::to_string(stats.ks_p_value) +
                ", timeouts = " + std::to_string(stats.timeout_count) + ", m = " +
                std::to_string(stats.fractions.size());
  return out;
}

Outcome criterion_5(bool) {
  Outcome out;
  const double t0 = now_seconds();

  const auto spec = PotentialSpec::double_well(10);
  const auto region = RegionSpec::half_space_pair(10);
  SdeConfig sde;
  sde.beta = 2.0;
  sde.dt_equilibrium = 1e-3;
  sde.burn_in_steps = 50000;
  sde.thinning_steps = 10;
  sde.delta = 0.003;
  Rng rng(55);
  const auto starts = equilibrium_samples(spec, region, sde, 100000, rng);
  const auto samples = make_transition_samples(spec, region, sde, starts, rng);

  ModelArch arch;
  arch.dim = 10;
  arch.net0 = {{16}, true};  // 193 parameters, under the 500 cap
  Rng init(56);
  const CommittorModel model = init_model(arch, init);
  const std::size_t p = model.theta.size();
  out.require(p <= 500, "network too large for the criterion");

  const Vec est = semigroup_grad(model, samples, g_workers);

  Workspace ws(model);
  std::vector<Vec> corr(p);
  for (auto& c : corr) c.reserve(samples.size());
  Vec gx(p), gd(p);
  for (const auto& s : samples) {
    if (s.indicator == HitIndicator::Interior) {
      const double q = forward(model, s.x, ws);
      const double qd = forward(model, s.x_delta, ws);
      grad_params(model, s.x, gx, ws);
      grad_params(model, s.x_delta, gd, ws);
      for (std::size_t k = 0; k < p; ++k) corr[k].push_back(0.5 * (q * gd[k] - gx[k] * qd));
    } else {
      for (std::size_t k = 0; k < p; ++k) corr[k].push_back(0.0);
    }
  }

  CommittorModel pert = model;
  Workspace wsp(pert);
  auto empirical_loss = [&]() {
    double acc = 0.0;
    for (const auto& s : samples) {
      const double q = forward(pert, s.x, wsp);
      double v = 0.5 * q * q;
      if (s.indicator == HitIndicator::Interior) v -= 0.5 * q * forward(pert, s.x_delta, wsp);
      else if (s.indicator == HitIndicator::HitB) v -= q;
      acc += v;
    }
    return acc / static_cast<double>(samples.size());
  };

  const double h = 1e-5;
  std::size_t violations = 0;
  double worst = 0.0;
  for (std::size_t k = 0; k < p; ++k) {
    pert.theta[k] = model.theta[k] + h;
    const double lp = empirical_loss();
    pert.theta[k] = model.theta[k] - h;
    const double lm = empirical_loss();
    pert.theta[k] = model.theta[k];
    const double fd = (lp - lm) / (2.0 * h);
    const double band = 3.0 * standard_error(corr[k]) + 1e-6 * (1.0 + std::abs(fd));
    const double dev = std::abs(est[k] - fd);
    if (dev > band) ++violations;
    worst = std::max(worst, band > 0 ? dev / band : 0.0);
  }
  const double minutes = (now_seconds() - t0) / 60.0;
  out.require(violations == 0, std::to_string(violations) + " coordinates outside 3 se");
  out.require(minutes <= 5.0, "runtime " + std::to_string(minutes) + " min > 5 min");
  out.detail += std::to_string(samples.size()) + " samples, " + std::to_string(p) +
                " coordinates, worst dev/band = " + std::to_string(worst) + ", " +
                std::to_string(minutes).substr(0, 4) + " min";
  return out;
}

Outcome criterion_6(bool) {
  Outcome out;
  const auto spec = PotentialSpec::double_well(10);
  const auto region = RegionSpec::half_space_pair(10);
  SdeConfig sde;
  sde.beta = 2.0;
  sde.dt_equilibrium = 1e-3;
  sde.burn_in_steps = 50000;
  sde.thinning_steps = 10;
  sde.delta = 0.003;
  Rng rng(66);
  const auto starts = equilibrium_samples(spec, region, sde, 120000, rng);

  Vec diffs;
  diffs.reserve(starts.size());
  for (const auto& x : starts) {
    const auto s = propagate_delta(spec, region, x, sde, rng);
    if (s.indicator != HitIndicator::Interior) {
      diffs.push_back(0.0);
      continue;
    }
    const double ux = std::tanh(s.x[0]), ud = std::tanh(s.x_delta[0]);
    const double vx = std::exp(-squared_norm(s.x) / 10.0);
    const double vd = std::exp(-squared_norm(s.x_delta) / 10.0);
    diffs.push_back(ux * vd - ud * vx);
  }
  const double d = mean(diffs);
  const double se = standard_error(diffs);
  out.require(std::abs(d) <= 3.0 * se,
              "|<u,Pv> - <Pu,v>| = " + std::to_string(std::abs(d)) + " > 3 se = " +
                  std::to_string(3.0 * se));
  out.detail += "difference = " + std::to_string(d) + ", se = " + std::to_string(se) + ", n = " +
                std::to_string(diffs.size());
  return out;
}

Outcome criterion_7(bool) {
  Outcome out;
  const double t0 = now_seconds();
  Rng rng(77);

  auto arch_of = [](int kind) {
    ModelArch arch;
    if (kind == 0) {
      arch.dim = 10;
      arch.net0 = {{40, 40, 40}, true};
    } else if (kind == 1) {
      arch.dim = 10;
      arch.net0 = {{40, 40, 40}, true};
      arch.net_ab = {{20, 20}, false};
      Vec ca(10, 0.0), cb(10, 0.0);
      ca[0] = -0.57;
      ca[1] = 1.43;
      cb[0] = 0.56;
      cb[1] = 0.044;
      arch.sing_a = {SingularityKind::Log2D, ca, {0, 1}, 0.0};
      arch.sing_b = {SingularityKind::Log2D, cb, {0, 1}, 0.0};
    } else {
      arch.dim = 49;
      arch.net0 = {{40, 40, 40}, true};
      arch.net_ab = {{20, 20}, false};
      const auto gl = PotentialSpec::ginzburg_landau(49, 0.03);
      const auto minima = find_gl_minimizers(gl);
      arch.sing_a = {SingularityKind::PowerLaw, minima.u_minus, {0, 1}, 2.0 - 49.0};
      arch.sing_b = {SingularityKind::PowerLaw, minima.u_plus, {0, 1}, 2.0 - 49.0};
    }
    return arch;
  };

  std::size_t param_checks = 0, param_fails = 0, input_checks = 0, input_fails = 0;
  for (int kind = 0; kind < 3; ++kind) {
    const ModelArch arch = arch_of(kind);
    Rng init = rng.stream(static_cast<std::uint64_t>(kind));
    const CommittorModel model = init_model(arch, init);
    Workspace ws(model);
    CommittorModel pert = model;
    Workspace wsp(pert);
    Vec g(model.theta.size()), gi(arch.dim);
    const double h = 1e-5;

    for (int n = 0; n < 20; ++n) {
      Vec x(arch.dim);
      rng.gauss_fill(x);
      grad_params(model, x, g, ws);
      for (std::size_t i = 0; i < model.theta.size(); ++i) {
        pert.theta[i] = model.theta[i] + h;
        const double qp = forward(pert, x, wsp);
        pert.theta[i] = model.theta[i] - h;
        const double qm = forward(pert, x, wsp);
        pert.theta[i] = model.theta[i];
        const double fd = (qp - qm) / (2.0 * h);
        if (std::abs(g[i]) > 1e-8) {
          ++param_checks;
          if (std::abs(fd - g[i]) > 1e-4 * std::abs(g[i]) + 1e-9) ++param_fails;
        }
      }
      grad_input(model, x, gi, ws);
      Vec xp = x, xm = x;
      for (int i = 0; i < arch.dim; ++i) {
        xp[i] = x[i] + h;
        xm[i] = x[i] - h;
        const double fd = (forward(model, xp, ws) - forward(model, xm, ws)) / (2.0 * h);
        xp[i] = x[i];
        xm[i] = x[i];
        if (std::abs(gi[i]) > 1e-8) {
          ++input_checks;
          if (std::abs(fd - gi[i]) > 1e-4 * std::abs(gi[i]) + 1e-9) ++input_fails;
        }
      }
    }
  }
  const double minutes = (now_seconds() - t0) / 60.0;
  out.require(param_fails == 0, std::to_string(param_fails) + " parameter-gradient mismatches");
  out.require(input_fails == 0, std::to_string(input_fails) + " input-gradient mismatches");
  out.require(minutes <= 1.0, "runtime " + std::to_string(minutes) + " min > 1 min");
  out.detail += std::to_string(param_checks) + " parameter and " + std::to_string(input_checks) +
                " input coordinates checked, " + std::to_string(minutes).substr(0, 4) + " min";
  return out;
}

Outcome criterion_8(bool) {
  Outcome out;
  for (double beta : {2.0, 5.0}) {
    const Reference1D ref = solve_double_well_1d(beta, 1001);
    const Vec shot = oracles::shoot_double_well_ode(beta, ref.grid);
    double max_err = 0.0;
    for (std::size_t i = 0; i < shot.size(); ++i)
      max_err = std::max(max_err, std::abs(shot[i] - ref.values[i]));
    out.require(max_err <= 1e-6, "1D quadrature vs ODE max-norm " + std::to_string(max_err) +
                                     " > 1e-6 at beta " + std::to_string(beta));
    if (beta == 2.0) out.detail += "1D max-norm = " + std::to_string(max_err);
  }

  const auto spec = PotentialSpec::rugged_muller(10);
  const auto region = RegionSpec::cylinder_pair(10);
  const Reference2D ones = solve_rugged_muller_2d(spec, region, 22.0, 200, 1.0, 1.0);
  double id_err = 0.0;
  for (double v : ones.values) id_err = std::max(id_err, std::abs(v - 1.0));
  out.require(id_err <= 1e-8, "constant-boundary identity error " + std::to_string(id_err));

  const Reference2D r1 = solve_rugged_muller_2d(spec, region, 22.0, 200);
  const Reference2D r2 = solve_rugged_muller_2d(spec, region, 22.0, 400);
  const Reference2D r4 = solve_rugged_muller_2d(spec, region, 22.0, 800);
  const double ratio = refinement_distance(r1, r2) / refinement_distance(r2, r4);
  out.require(ratio >= 3.0 && ratio <= 5.0,
              "Richardson ratio " + std::to_string(ratio) + " outside [3, 5]");
  out.detail += ", identity = " + std::to_string(id_err) +
                ", Richardson ratio = " + std::to_string(ratio);
  return out;
}

Outcome criterion_9(bool) {
  Outcome out;
  ExperimentConfig cfg = double_well_config(0.5, 0.003, 1, 150000);
  cfg.steps = kCompareSteps;
  cfg.learning_rate = kCompareLr;
  cfg.seed = 9;
  const std::vector<double> sweep{0.0, 1.0, 5.0, 15.0 / 0.003};

  const Experiment ex = build_experiment(cfg);
  Rng master(cfg.seed);
  const SampleSet set = generate_samples(ex, master, g_workers);
  const ErrorFn error_fn = make_error_fn(ex, set.validation);
  Rng init_rng = master.stream(1);
  const CommittorModel init = init_model(ex.arch, init_rng);

  auto run_one = [&](LossKind loss, double c_norm) {
    CommittorModel model = init;
    TrainConfig tc = train_config_of(cfg);
    tc.loss = loss;
    tc.penalty_c = (loss == LossKind::Semigroup) ? c_norm * cfg.delta : c_norm;
    Rng train_rng = master.stream(2);
    train(model, set.train, tc, {}, train_rng);
    return error_fn(model);
  };

  double e_min = 1e30, e_max = -1e30, e_semi_smallest = 0.0;
  for (double c_norm : sweep) {
    const double e = run_one(LossKind::Semigroup, c_norm);
    out.detail +=
        "E_semi(" + std::to_string(c_norm).substr(0, 6) + ") = " + std::to_string(e) + "  ";
    e_min = std::min(e_min, e);
    e_max = std::max(e_max, e);
    if (c_norm == sweep.front()) e_semi_smallest = e;
    out.require(e <= 0.03, "semigroup E = " + std::to_string(e) + " > 0.03 at c_norm " +
                               std::to_string(c_norm));
  }
  const double e_baseline = run_one(LossKind::BaselineGradSquared, sweep.front());
  out.detail += "E_baseline(" + std::to_string(sweep.front()).substr(0, 6) + ") = " +
                std::to_string(e_baseline);
  out.require(e_semi_smallest <= e_baseline,
              "semigroup E " + std::to_string(e_semi_smallest) + " > baseline E " +
                  std::to_string(e_baseline) + " at the smallest c_norm");
  out.require(e_max - e_min <= 0.01, "semigroup E spread " + std::to_string(e_max - e_min) +
                                         " > 0.01 across the sweep");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  int criterion = 0;  // 0 = all
  bool extended = false;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) criterion = std::atoi(argv[++i]);
    else if (std::strcmp(argv[i], "--extended") == 0) extended = true;
    else if (std::strcmp(argv[i], "--workers") == 0 && i + 1 < argc)
      g_workers = std::atoi(argv[++i]);
  }

  struct Entry {
    int id;
    const char* name;
    Outcome (*run)(bool);
  };
  const std::vector<Entry> entries = {
      {1, "double-well accuracy (Table 1, T=0.5)", criterion_1},
      {2, "delta insensitivity and multi-step variant", criterion_2},
      {3, "rugged-Muller accuracy (Table 2, T=22)", criterion_3},
      {4, "Ginzburg-Landau hitting-probability validation", criterion_4},
      {5, "semigroup gradient estimator correctness", criterion_5},
      {6, "interior-propagation symmetry", criterion_6},
      {7, "autodiff against finite differences", criterion_7},
      {8, "reference solver correctness", criterion_8},
      {9, "semigroup vs gradient-squared comparison", criterion_9},
  };

  bool all_pass = true;
  for (const Entry& entry : entries) {
    if (criterion != 0 && criterion != entry.id) continue;
    const double t0 = now_seconds();
    const Outcome out = entry.run(extended);
    const double minutes = (now_seconds() - t0) / 60.0;
    std::printf("[%s] criterion %d: %s -- %s (%.1f min)\n", out.pass ? "PASS" : "FAIL", entry.id,
                entry.name, out.detail.c_str(), minutes);
    std::fflush(stdout);
    all_pass = all_pass && out.pass;
  }
  return all_pass ? 0 : 1;
}

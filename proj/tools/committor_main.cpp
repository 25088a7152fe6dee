// Command-line harness: sampling, training, evaluation, and validation runs
// driven by a JSON experiment config. See README.md for the schema.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "committor/experiment.hpp"
#include "committor/gl_validation.hpp"
#include "committor/sample_cache.hpp"
#include "committor/stats.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace committor;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed_override;
  int workers = 0;  // 0: use COMMITTOR_WORKERS or 1
};

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("COMMITTOR_WORKERS")) {
    const int w = std::atoi(env);
    if (w > 0) return w;
  }
  return 1;
}

ExperimentConfig load_config(const CommonOpts& opts) {
  ExperimentConfig cfg = ExperimentConfig::from_json_file(opts.config_path);
  if (opts.seed_override) cfg.seed = *opts.seed_override;
  return cfg;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "experiment config file")->required();
  cmd->add_option("--out", opts.out_dir, "output directory");
  cmd->add_option("--seed", opts.seed_override, "override the config seed");
  cmd->add_option("--workers", opts.workers, "worker threads (default $COMMITTOR_WORKERS or 1)");
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string());
  os << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  json j;
  is >> j;
  return j;
}

// ---------------------------------------------------------------------------
// sample

int cmd_sample(const CommonOpts& opts, bool csv) {
  ExperimentConfig cfg = load_config(opts);
  Experiment ex = build_experiment(cfg);
  const int workers = resolve_workers(opts.workers);
  fs::create_directories(opts.out_dir);

  Rng master(cfg.seed);
  SampleSet set = generate_samples(ex, master, workers);

  const fs::path out(opts.out_dir);
  const std::string sample_file = csv ? "samples.csv" : "samples.bin";
  if (csv) save_samples_csv(set.train.samples, (out / sample_file).string());
  else save_samples(set.train.samples, (out / sample_file).string());
  save_points(set.train.boundary_a, (out / "boundary_a.bin").string());
  save_points(set.train.boundary_b, (out / "boundary_b.bin").string());
  if (!set.validation.empty()) save_points(set.validation, (out / "validation.bin").string());

  json manifest{
      {"config_hash", hash_hex(cfg.config_hash())},
      {"seed", cfg.seed},
      {"dimension", cfg.dim},
      {"format", csv ? "csv" : "binary"},
      {"interior_samples", set.train.samples.size()},
      {"boundary_samples_a", set.train.boundary_a.size()},
      {"boundary_samples_b", set.train.boundary_b.size()},
      {"validation_samples", set.validation.size()},
      {"files",
       {{"samples", sample_file},
        {"boundary_a", "boundary_a.bin"},
        {"boundary_b", "boundary_b.bin"},
        {"validation", set.validation.empty() ? "" : "validation.bin"}}},
  };
  write_json(manifest, out / "manifest.json");
  std::printf("sample: %zu interior, %zu + %zu boundary, %zu validation -> %s\n",
              set.train.samples.size(), set.train.boundary_a.size(), set.train.boundary_b.size(),
              set.validation.size(), opts.out_dir.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// train

SampleSet load_or_generate_samples(const Experiment& ex, const std::string& cache_dir,
                                   int workers) {
  if (!cache_dir.empty()) {
    const fs::path dir(cache_dir);
    const json manifest = read_json(dir / "manifest.json");
    const std::string recorded = manifest.at("config_hash").get<std::string>();
    if (recorded != hash_hex(ex.cfg.config_hash()))
      throw ConfigError("sample cache was produced by a different config (hash " + recorded +
                        " vs " + hash_hex(ex.cfg.config_hash()) + ")");
    SampleSet set;
    const std::string sample_file = manifest.at("files").at("samples").get<std::string>();
    if (manifest.at("format").get<std::string>() == "csv")
      set.train.samples = load_samples_csv((dir / sample_file).string());
    else
      set.train.samples = load_samples((dir / sample_file).string());
    set.train.boundary_a = load_points((dir / "boundary_a.bin").string());
    set.train.boundary_b = load_points((dir / "boundary_b.bin").string());
    if (fs::exists(dir / "validation.bin"))
      set.validation = load_points((dir / "validation.bin").string());
    return set;
  }
  Rng master(ex.cfg.seed);
  return generate_samples(ex, master, workers);
}

TrainConfig train_config_of(const ExperimentConfig& cfg, int workers) {
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
  tc.checkpoint_interval = cfg.checkpoint_interval;
  tc.workers = workers;
  return tc;
}

int cmd_train(const CommonOpts& opts, const std::string& cache_dir) {
  ExperimentConfig cfg = load_config(opts);
  Experiment ex = build_experiment(cfg);
  const int workers = resolve_workers(opts.workers);
  fs::create_directories(opts.out_dir);
  const fs::path out(opts.out_dir);

  SampleSet set = load_or_generate_samples(ex, cache_dir, workers);

  // trace error on a subset; final metrics use the full validation set
  std::vector<Vec> trace_points(
      set.validation.begin(),
      set.validation.begin() + static_cast<std::ptrdiff_t>(std::min(
                                   cfg.trace_validation_samples, set.validation.size())));
  ErrorFn trace_fn = make_error_fn(ex, std::move(trace_points));

  Rng master(cfg.seed);
  Rng init_rng = master.stream(1);
  CommittorModel model = init_model(ex.arch, init_rng);
  Rng train_rng = master.stream(2);

  CheckpointFn on_checkpoint = [&](std::size_t step, const CommittorModel& m) {
    save_checkpoint(m, (out / ("checkpoint_" + std::to_string(step) + ".bin")).string());
  };
  TrainResult res =
      train(model, set.train, train_config_of(cfg, workers), trace_fn, train_rng, on_checkpoint);

  save_checkpoint(model, (out / "checkpoint.bin").string());
  write_trace_csv(res.trace, (out / "trace.csv").string());

  json metrics{{"config_hash", hash_hex(cfg.config_hash())},
               {"seed", cfg.seed},
               {"steps", cfg.steps},
               {"parameters", model.theta.size()}};
  if (!set.validation.empty() && cfg.reference != ReferenceKind::None) {
    ErrorFn full_fn = make_error_fn(ex, std::move(set.validation));
    metrics["E"] = full_fn(model);
  }
  write_json(metrics, out / "metrics.json");
  if (metrics.contains("E")) std::printf("train: final E = %.6f\n", metrics["E"].get<double>());
  std::printf("train: checkpoint and trace written to %s\n", opts.out_dir.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate

int cmd_evaluate(const CommonOpts& opts, const std::string& checkpoint_path,
                 const std::string& cache_dir) {
  ExperimentConfig cfg = load_config(opts);
  if (cfg.kind == PotentialKind::GinzburgLandau)
    throw ConfigError(
        "evaluate: no tractable reference for the Ginzburg-Landau problem; use validate-gl");
  Experiment ex = build_experiment(cfg);
  const int workers = resolve_workers(opts.workers);
  fs::create_directories(opts.out_dir);
  const fs::path out(opts.out_dir);

  CommittorModel model = load_checkpoint(checkpoint_path);
  if (model.dim != cfg.dim) throw ConfigError("evaluate: checkpoint dimension mismatch");

  std::vector<Vec> validation;
  if (!cache_dir.empty() && fs::exists(fs::path(cache_dir) / "validation.bin")) {
    validation = load_points((fs::path(cache_dir) / "validation.bin").string());
  } else {
    Rng master(cfg.seed);
    validation = generate_samples(ex, master, workers).validation;
  }
  if (validation.empty()) throw ConfigError("evaluate: no validation samples configured");

  Workspace ws(model);
  json metrics{{"config_hash", hash_hex(cfg.config_hash())},
               {"seed", cfg.seed},
               {"validation_samples", validation.size()}};

  if (cfg.reference == ReferenceKind::Ode1D) {
    Reference1D ref = build_reference_1d(ex, (out / "reference_1d.bin").string());
    metrics["E"] = relative_error(model, ref, validation);
    std::ofstream slice(out / "slice.csv");
    slice << "x1,q_model,q_reference\n";
    slice.precision(17);
    Vec x(cfg.dim, 0.0);
    const int n = 401;
    for (int i = 0; i < n; ++i) {
      x[0] = -1.0 + 2.0 * i / (n - 1);
      slice << x[0] << ',' << forward(model, x, ws) << ',' << ref.value_at(x[0]) << '\n';
    }
  } else if (cfg.reference == ReferenceKind::Grid2D) {
    Reference2D ref = build_reference_2d(ex, (out / "reference_2d.bin").string());
    metrics["E"] = relative_error(model, ref, validation);
    std::ofstream slice(out / "slice.csv");
    slice << "x1,x2,q_model,q_reference\n";
    slice.precision(17);
    Vec x(cfg.dim, 0.0);
    const int n = 101;
    const BoxDomain& box = *ex.potential.domain;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        x[0] = box.lo[0] + (box.hi[0] - box.lo[0]) * i / (n - 1);
        x[1] = box.lo[1] + (box.hi[1] - box.lo[1]) * j / (n - 1);
        slice << x[0] << ',' << x[1] << ',' << forward(model, x, ws) << ','
              << ref.value_at(x[0], x[1]) << '\n';
      }
  } else {
    throw ConfigError("evaluate: config has no reference solution configured");
  }
  write_json(metrics, out / "metrics.json");
  std::printf("evaluate: E = %.6f (written to %s)\n", metrics["E"].get<double>(),
              opts.out_dir.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// validate-gl

int cmd_validate_gl(const CommonOpts& opts, const std::string& checkpoint_path) {
  ExperimentConfig cfg = load_config(opts);
  if (cfg.kind != PotentialKind::GinzburgLandau)
    throw ConfigError("validate-gl: config must use the ginzburg_landau potential");
  Experiment ex = build_experiment(cfg);
  const int workers = resolve_workers(opts.workers);
  fs::create_directories(opts.out_dir);

  CommittorModel model = load_checkpoint(checkpoint_path);
  if (model.dim != cfg.dim) throw ConfigError("validate-gl: checkpoint dimension mismatch");

  Rng master(cfg.seed);
  Rng harvest_rng = master.stream(11);
  HarvestOptions hopt;
  hopt.decorrelation_gap = cfg.decorrelation_gap;
  hopt.budget_steps = cfg.harvest_budget;
  IsoSurfaceBatch batch = collect_isosurface_states(
      model, ex.potential, ex.region, cfg.iso_epsilon, cfg.iso_states, ex.sde, hopt, harvest_rng);
  HitStatistics stats =
      hitting_test(batch, ex.potential, ex.region, cfg.hit_trajectories, cfg.hit_dt,
                   cfg.hit_max_steps, ex.sde.beta, master.stream(12), workers);
  write_hit_statistics(stats, opts.out_dir);
  std::printf("validate-gl: %zu states, mean fraction %.4f, KS p = %.4f -> %s\n",
              stats.fractions.size(), stats.mean, stats.ks_p_value, opts.out_dir.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// compare

int cmd_compare(const CommonOpts& opts) {
  ExperimentConfig cfg = load_config(opts);
  if (cfg.kind != PotentialKind::DoubleWell)
    throw ConfigError("compare: config must use the double_well potential");
  if (cfg.c_norm_sweep.empty())
    throw ConfigError("compare: config field compare.c_norm_sweep must be a nonempty list");
  Experiment ex = build_experiment(cfg);
  const int workers = resolve_workers(opts.workers);
  fs::create_directories(opts.out_dir);
  const fs::path out(opts.out_dir);

  Rng master(cfg.seed);
  SampleSet set = generate_samples(ex, master, workers);
  std::vector<Vec> trace_points(
      set.validation.begin(),
      set.validation.begin() + static_cast<std::ptrdiff_t>(std::min(
                                   cfg.trace_validation_samples, set.validation.size())));
  ErrorFn trace_fn = make_error_fn(ex, trace_points);
  ErrorFn full_fn = make_error_fn(ex, set.validation);

  Rng init_rng = master.stream(1);
  const CommittorModel init = init_model(ex.arch, init_rng);

  json summary;
  summary["config_hash"] = hash_hex(cfg.config_hash());
  summary["runs"] = json::array();

  for (double c_norm : cfg.c_norm_sweep) {
    for (const bool baseline : {false, true}) {
      CommittorModel model = init;  // identical parameters for every run
      TrainConfig tc = train_config_of(cfg, workers);
      tc.steps = cfg.compare_steps;
      tc.loss = baseline ? LossKind::BaselineGradSquared : LossKind::Semigroup;
      tc.penalty_c = baseline ? c_norm : c_norm * cfg.delta;
      Rng train_rng = master.stream(2);  // same batch schedule for both methods
      TrainResult res = train(model, set.train, tc, trace_fn, train_rng);
      const double final_e = full_fn(model);

      const std::string tag =
          std::string(baseline ? "baseline" : "semigroup") + "_cnorm" + std::to_string(c_norm);
      write_trace_csv(res.trace, (out / ("compare_" + tag + ".csv")).string());
      summary["runs"].push_back(
          {{"method", baseline ? "baseline" : "semigroup"},
           {"c_norm", c_norm},
           {"final_E", final_e},
           {"wall_seconds", res.trace.empty() ? 0.0 : res.trace.back().wall_seconds}});
      std::printf("compare: %-9s c_norm %-8g final E = %.6f\n",
                  baseline ? "baseline" : "semigroup", c_norm, final_e);
    }
  }
  write_json(summary, out / "summary.json");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"committor: semigroup-loss committor functions of overdamped Langevin dynamics"};
  app.require_subcommand(1);

  CommonOpts sample_opts, train_opts, eval_opts, gl_opts, compare_opts;
  bool sample_csv = false;
  std::string train_cache, eval_checkpoint, eval_cache, gl_checkpoint;

  CLI::App* sample = app.add_subcommand("sample", "generate and cache training samples");
  add_common(sample, sample_opts);
  sample->add_flag("--csv", sample_csv, "write the transition-sample cache as CSV");

  CLI::App* train_cmd = app.add_subcommand("train", "train a committor model");
  add_common(train_cmd, train_opts);
  train_cmd->add_option("--cache", train_cache,
                        "sample cache directory from a previous `sample` run");

  CLI::App* evaluate = app.add_subcommand("evaluate", "evaluate a checkpoint against a reference");
  add_common(evaluate, eval_opts);
  evaluate->add_option("--checkpoint", eval_checkpoint, "model checkpoint")->required();
  evaluate->add_option("--cache", eval_cache, "sample cache directory (reuses validation points)");

  CLI::App* validate = app.add_subcommand("validate-gl", "hitting-probability validation");
  add_common(validate, gl_opts);
  validate->add_option("--checkpoint", gl_checkpoint, "model checkpoint")->required();

  CLI::App* compare = app.add_subcommand("compare", "semigroup vs gradient-squared comparison");
  add_common(compare, compare_opts);

  CLI11_PARSE(app, argc, argv);
  try {
    if (sample->parsed()) return cmd_sample(sample_opts, sample_csv);
    if (train_cmd->parsed()) return cmd_train(train_opts, train_cache);
    if (evaluate->parsed()) return cmd_evaluate(eval_opts, eval_checkpoint, eval_cache);
    if (validate->parsed()) return cmd_validate_gl(gl_opts, gl_checkpoint);
    if (compare->parsed()) return cmd_compare(compare_opts);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

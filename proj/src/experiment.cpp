#include "committor/experiment.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <thread>

#include "committor/stats.hpp"

namespace committor {

namespace {

using nlohmann::json;

const json* find(const json& obj, const std::string& key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

template <typename T>
void read_field(const json& obj, const std::string& key, const std::string& path, T& out) {
  if (const json* v = find(obj, key)) {
    try {
      out = v->get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config field " + path + "." + key + ": wrong type");
    }
  }
}

template <typename T>
void require_positive(const T& v, const std::string& path) {
  if (!(v > T{0})) throw ConfigError("config field " + path + ": must be positive");
}

PotentialKind parse_kind(const std::string& s) {
  if (s == "double_well") return PotentialKind::DoubleWell;
  if (s == "rugged_muller") return PotentialKind::RuggedMuller;
  if (s == "ginzburg_landau") return PotentialKind::GinzburgLandau;
  throw ConfigError("config field potential.kind: unknown kind '" + s + "'");
}

std::string kind_name(PotentialKind k) {
  switch (k) {
    case PotentialKind::DoubleWell: return "double_well";
    case PotentialKind::RuggedMuller: return "rugged_muller";
    case PotentialKind::GinzburgLandau: return "ginzburg_landau";
  }
  return "?";
}

std::string reference_name(ReferenceKind k) {
  switch (k) {
    case ReferenceKind::None: return "none";
    case ReferenceKind::Ode1D: return "ode_1d";
    case ReferenceKind::Grid2D: return "grid_2d";
  }
  return "?";
}

ExperimentConfig parse(const json& root) {
  if (!root.is_object()) throw ConfigError("config root must be a JSON object");
  ExperimentConfig cfg;

  const json* pot = find(root, "potential");
  if (!pot) throw ConfigError("config field potential: missing block");
  {
    std::string kind;
    read_field(*pot, "kind", "potential", kind);
    if (kind.empty()) throw ConfigError("config field potential.kind: missing");
    cfg.kind = parse_kind(kind);
    read_field(*pot, "dimension", "potential", cfg.dim);
    read_field(*pot, "temperature", "potential", cfg.temperature);
    read_field(*pot, "lambda", "potential", cfg.gl_lambda);
    require_positive(cfg.temperature, "potential.temperature");
    if (cfg.dim < 1) throw ConfigError("config field potential.dimension: must be >= 1");
  }

  if (const json* reg = find(root, "region")) {
    read_field(*reg, "radius", "region", cfg.region_radius);
    require_positive(cfg.region_radius, "region.radius");
  }

  if (const json* sde = find(root, "sde")) {
    read_field(*sde, "dt", "sde", cfg.dt);
    read_field(*sde, "burn_in_steps", "sde", cfg.burn_in_steps);
    read_field(*sde, "thinning_steps", "sde", cfg.thinning_steps);
    read_field(*sde, "delta", "sde", cfg.delta);
    read_field(*sde, "substeps", "sde", cfg.substeps);
    require_positive(cfg.dt, "sde.dt");
    require_positive(cfg.delta, "sde.delta");
    require_positive(cfg.burn_in_steps, "sde.burn_in_steps");
    require_positive(cfg.thinning_steps, "sde.thinning_steps");
    require_positive(cfg.substeps, "sde.substeps");
  }

  if (const json* s = find(root, "sampling")) {
    read_field(*s, "training_samples", "sampling", cfg.training_samples);
    read_field(*s, "boundary_samples", "sampling", cfg.boundary_samples);
    read_field(*s, "validation_samples", "sampling", cfg.validation_samples);
    read_field(*s, "chains", "sampling", cfg.chains);
    require_positive(cfg.chains, "sampling.chains");
  }

  if (const json* net = find(root, "network")) {
    if (const json* d = find(*net, "dimension")) {
      int ndim = d->get<int>();
      if (ndim != cfg.dim)
        throw ConfigError("config fields potential.dimension and network.dimension disagree (" +
                          std::to_string(cfg.dim) + " vs " + std::to_string(ndim) + ")");
    }
    read_field(*net, "n0_hidden", "network", cfg.n0_hidden);
    read_field(*net, "ab_hidden", "network", cfg.ab_hidden);
  }

  if (const json* tr = find(root, "training")) {
    const json* c = find(*tr, "c");
    const json* c_norm = find(*tr, "c_norm");
    if (c && c_norm)
      throw ConfigError("config fields training.c and training.c_norm: exactly one may be given");
    if (!c && !c_norm)
      throw ConfigError("config field training.c (or training.c_norm): missing");
    if (c) {
      cfg.penalty_c = c->get<double>();
      cfg.penalty_c_norm = cfg.penalty_c / cfg.delta;
    } else {
      cfg.penalty_c_norm = c_norm->get<double>();
      cfg.penalty_c = cfg.penalty_c_norm * cfg.delta;
    }
    if (cfg.penalty_c < 0.0) throw ConfigError("config field training.c: must be >= 0");
    read_field(*tr, "batch_size", "training", cfg.batch_size);
    read_field(*tr, "boundary_batch", "training", cfg.boundary_batch);
    read_field(*tr, "steps", "training", cfg.steps);
    read_field(*tr, "learning_rate", "training", cfg.learning_rate);
    read_field(*tr, "adam_beta1", "training", cfg.adam_beta1);
    read_field(*tr, "adam_beta2", "training", cfg.adam_beta2);
    read_field(*tr, "adam_epsilon", "training", cfg.adam_epsilon);
    read_field(*tr, "eval_interval", "training", cfg.eval_interval);
    read_field(*tr, "checkpoint_interval", "training", cfg.checkpoint_interval);
    require_positive(cfg.batch_size, "training.batch_size");
    require_positive(cfg.learning_rate, "training.learning_rate");
    require_positive(cfg.eval_interval, "training.eval_interval");
    if (cfg.adam_beta1 < 0.0 || cfg.adam_beta1 >= 1.0 || cfg.adam_beta2 < 0.0 ||
        cfg.adam_beta2 >= 1.0)
      throw ConfigError("config field training.adam_beta1/2: must lie in [0, 1)");
  }

  if (const json* ev = find(root, "evaluation")) {
    std::string ref = reference_name(cfg.reference);
    read_field(*ev, "reference", "evaluation", ref);
    if (ref == "none") cfg.reference = ReferenceKind::None;
    else if (ref == "ode_1d") cfg.reference = ReferenceKind::Ode1D;
    else if (ref == "grid_2d") cfg.reference = ReferenceKind::Grid2D;
    else throw ConfigError("config field evaluation.reference: unknown kind '" + ref + "'");
    read_field(*ev, "reference_nodes", "evaluation", cfg.reference_nodes);
    read_field(*ev, "reference_resolution", "evaluation", cfg.reference_resolution);
    read_field(*ev, "trace_validation_samples", "evaluation", cfg.trace_validation_samples);
  }

  if (const json* va = find(root, "validation")) {
    read_field(*va, "epsilon", "validation", cfg.iso_epsilon);
    read_field(*va, "states", "validation", cfg.iso_states);
    read_field(*va, "trajectories", "validation", cfg.hit_trajectories);
    read_field(*va, "dt", "validation", cfg.hit_dt);
    read_field(*va, "max_steps", "validation", cfg.hit_max_steps);
    read_field(*va, "decorrelation_gap", "validation", cfg.decorrelation_gap);
    read_field(*va, "budget_steps", "validation", cfg.harvest_budget);
    if (cfg.iso_states < 1) throw ConfigError("config field validation.states: must be >= 1");
    require_positive(cfg.hit_dt, "validation.dt");
  }

  if (const json* cmp = find(root, "compare")) {
    read_field(*cmp, "c_norm_sweep", "compare", cfg.c_norm_sweep);
    read_field(*cmp, "steps", "compare", cfg.compare_steps);
  }

  read_field(root, "seed", "", cfg.seed);
  return cfg;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return from_json_text(ss.str());
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return parse(root);
}

std::string ExperimentConfig::canonical_json() const {
  json root;
  root["potential"] = {{"kind", kind_name(kind)},
                       {"dimension", dim},
                       {"temperature", temperature},
                       {"lambda", gl_lambda}};
  root["region"] = {{"radius", region_radius}};
  root["sde"] = {{"dt", dt},
                 {"burn_in_steps", burn_in_steps},
                 {"thinning_steps", thinning_steps},
                 {"delta", delta},
                 {"substeps", substeps}};
  root["sampling"] = {{"training_samples", training_samples},
                      {"boundary_samples", boundary_samples},
                      {"validation_samples", validation_samples},
                      {"chains", chains}};
  root["network"] = {{"n0_hidden", n0_hidden}, {"ab_hidden", ab_hidden}};
  root["training"] = {{"c", penalty_c},
                      {"batch_size", batch_size},
                      {"boundary_batch", boundary_batch},
                      {"steps", steps},
                      {"learning_rate", learning_rate},
                      {"adam_beta1", adam_beta1},
                      {"adam_beta2", adam_beta2},
                      {"adam_epsilon", adam_epsilon},
                      {"eval_interval", eval_interval},
                      {"checkpoint_interval", checkpoint_interval}};
  root["evaluation"] = {{"reference", reference_name(reference)},
                        {"reference_nodes", reference_nodes},
                        {"reference_resolution", reference_resolution},
                        {"trace_validation_samples", trace_validation_samples}};
  root["validation"] = {{"epsilon", iso_epsilon},
                        {"states", iso_states},
                        {"trajectories", hit_trajectories},
                        {"dt", hit_dt},
                        {"max_steps", hit_max_steps},
                        {"decorrelation_gap", decorrelation_gap},
                        {"budget_steps", harvest_budget}};
  root["compare"] = {{"c_norm_sweep", c_norm_sweep}, {"steps", compare_steps}};
  root["seed"] = seed;
  return root.dump();  // nlohmann objects iterate in sorted key order
}

std::uint64_t ExperimentConfig::config_hash() const {
  const std::string s = canonical_json();
  return fnv1a(s.data(), s.size());
}

Experiment build_experiment(const ExperimentConfig& cfg) {
  Experiment ex;
  ex.cfg = cfg;
  switch (cfg.kind) {
    case PotentialKind::DoubleWell:
      ex.potential = PotentialSpec::double_well(cfg.dim);
      ex.region = RegionSpec::half_space_pair(cfg.dim);
      ex.arch.sing_a.kind = SingularityKind::None;
      ex.arch.sing_b.kind = SingularityKind::None;
      break;
    case PotentialKind::RuggedMuller: {
      ex.potential = PotentialSpec::rugged_muller(cfg.dim);
      ex.region = RegionSpec::cylinder_pair(cfg.dim);
      ex.arch.sing_a = SingularitySpec{SingularityKind::Log2D, ex.region.center_a, {0, 1}, 0.0};
      ex.arch.sing_b = SingularitySpec{SingularityKind::Log2D, ex.region.center_b, {0, 1}, 0.0};
      break;
    }
    case PotentialKind::GinzburgLandau: {
      ex.potential = PotentialSpec::ginzburg_landau(cfg.dim, cfg.gl_lambda);
      const GLMinimizers minima = find_gl_minimizers(ex.potential);
      ex.region = RegionSpec::sphere_pair(minima.u_minus, minima.u_plus, cfg.region_radius);
      const double exponent = 2.0 - static_cast<double>(cfg.dim);
      ex.arch.sing_a =
          SingularitySpec{SingularityKind::PowerLaw, ex.region.center_a, {0, 1}, exponent};
      ex.arch.sing_b =
          SingularitySpec{SingularityKind::PowerLaw, ex.region.center_b, {0, 1}, exponent};
      break;
    }
  }
  ex.arch.dim = cfg.dim;
  ex.arch.net0 = SubnetArch{cfg.n0_hidden, true};
  ex.arch.net_ab = SubnetArch{cfg.ab_hidden, false};
  ex.sde.beta = 1.0 / cfg.temperature;
  ex.sde.dt_equilibrium = cfg.dt;
  ex.sde.burn_in_steps = cfg.burn_in_steps;
  ex.sde.thinning_steps = cfg.thinning_steps;
  ex.sde.delta = cfg.delta;
  ex.sde.substeps = cfg.substeps;
  return ex;
}

namespace {

// Chain c of n draws equilibrium samples with stream (base + c) and propagates
// them with stream (base + 1000 + c); chunks are concatenated in chain order.
std::vector<Vec> sample_chains(const Experiment& ex, const Rng& master, std::uint64_t stream_base,
                               std::size_t count, int chains, int workers) {
  std::vector<std::vector<Vec>> chunk(static_cast<std::size_t>(chains));
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  auto work = [&] {
    for (;;) {
      const int c = next.fetch_add(1);
      if (c >= chains) return;
      const std::size_t lo = count * static_cast<std::size_t>(c) / static_cast<std::size_t>(chains);
      const std::size_t hi =
          count * static_cast<std::size_t>(c + 1) / static_cast<std::size_t>(chains);
      Rng rng = master.stream(stream_base + static_cast<std::uint64_t>(c));
      chunk[static_cast<std::size_t>(c)] =
          equilibrium_samples(ex.potential, ex.region, ex.sde, hi - lo, rng);
    }
  };
  const int nw = std::min(workers, chains);
  if (nw <= 1) {
    work();
  } else {
    for (int w = 0; w < nw; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  std::vector<Vec> out;
  out.reserve(count);
  for (auto& ch : chunk)
    for (Vec& v : ch) out.push_back(std::move(v));
  return out;
}

}  // namespace

SampleSet generate_samples(const Experiment& ex, const Rng& master, int workers) {
  SampleSet set;
  const ExperimentConfig& cfg = ex.cfg;

  std::vector<Vec> starts =
      sample_chains(ex, master, 100, cfg.training_samples, cfg.chains, workers);
  {
    // propagate per chain so the result is independent of the worker pool
    set.train.samples.resize(starts.size());
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    auto work = [&] {
      for (;;) {
        const int c = next.fetch_add(1);
        if (c >= cfg.chains) return;
        const std::size_t lo = starts.size() * static_cast<std::size_t>(c) /
                               static_cast<std::size_t>(cfg.chains);
        const std::size_t hi = starts.size() * static_cast<std::size_t>(c + 1) /
                               static_cast<std::size_t>(cfg.chains);
        Rng rng = master.stream(1100 + static_cast<std::uint64_t>(c));
        for (std::size_t i = lo; i < hi; ++i)
          set.train.samples[i] = propagate_delta(ex.potential, ex.region, starts[i], ex.sde, rng);
      }
    };
    const int nw = std::min(workers, cfg.chains);
    if (nw <= 1) {
      work();
    } else {
      for (int w = 0; w < nw; ++w) pool.emplace_back(work);
      for (auto& t : pool) t.join();
    }
  }

  {
    Rng rng_a = master.stream(300);
    set.train.boundary_a = sample_boundary(ex.region, Side::A, cfg.boundary_samples, ex.potential,
                                           ex.sde.beta, rng_a);
    Rng rng_b = master.stream(301);
    set.train.boundary_b = sample_boundary(ex.region, Side::B, cfg.boundary_samples, ex.potential,
                                           ex.sde.beta, rng_b);
  }

  if (cfg.validation_samples > 0)
    set.validation = sample_chains(ex, master, 200, cfg.validation_samples, cfg.chains, workers);
  return set;
}

ErrorFn make_error_fn(const Experiment& ex, std::vector<Vec> validation) {
  switch (ex.cfg.reference) {
    case ReferenceKind::None:
      return {};
    case ReferenceKind::Ode1D: {
      auto ref = std::make_shared<Reference1D>(build_reference_1d(ex));
      return [ref, points = std::move(validation)](const CommittorModel& m) {
        return relative_error(m, *ref, points);
      };
    }
    case ReferenceKind::Grid2D: {
      auto ref = std::make_shared<Reference2D>(build_reference_2d(ex));
      return [ref, points = std::move(validation)](const CommittorModel& m) {
        return relative_error(m, *ref, points);
      };
    }
  }
  return {};
}

Reference1D build_reference_1d(const Experiment& ex, const std::optional<std::string>& cache_path) {
  if (cache_path && std::filesystem::exists(*cache_path)) return load_reference_1d(*cache_path);
  Reference1D ref = solve_double_well_1d(ex.sde.beta, ex.cfg.reference_nodes);
  if (cache_path) save_reference(ref, *cache_path);
  return ref;
}

Reference2D build_reference_2d(const Experiment& ex, const std::optional<std::string>& cache_path) {
  if (cache_path && std::filesystem::exists(*cache_path)) return load_reference_2d(*cache_path);
  Reference2D ref = solve_rugged_muller_2d(ex.potential, ex.region, ex.cfg.temperature,
                                           ex.cfg.reference_resolution);
  if (cache_path) save_reference(ref, *cache_path);
  return ref;
}

}  // namespace committor

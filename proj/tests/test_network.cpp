#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <cstdio>
#include <filesystem>

#include "committor/network.hpp"
#include "committor/potentials.hpp"
#include "committor/rng.hpp"

using namespace committor;

namespace {

ModelArch double_well_arch() {
  ModelArch arch;
  arch.dim = 10;
  arch.net0 = {{40, 40, 40}, true};
  return arch;  // no singularities: only n_0 is trained
}

ModelArch rugged_muller_arch() {
  ModelArch arch;
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
  return arch;
}

ModelArch ginzburg_landau_arch() {
  ModelArch arch;
  arch.dim = 49;
  arch.net0 = {{40, 40, 40}, true};
  arch.net_ab = {{20, 20}, false};
  Vec ca(49), cb(49);
  Rng rng(1234);
  rng.gauss_fill(ca);
  for (int i = 0; i < 49; ++i) cb[i] = -ca[i];
  arch.sing_a = {SingularityKind::PowerLaw, ca, {0, 1}, 2.0 - 49.0};
  arch.sing_b = {SingularityKind::PowerLaw, cb, {0, 1}, 2.0 - 49.0};
  return arch;
}

Vec random_interior_point(const ModelArch& arch, Rng& rng) {
  Vec x(arch.dim);
  rng.gauss_fill(x);
  return x;
}

void check_param_fd(const CommittorModel& model, const Vec& x, double rel = 1e-4) {
  Workspace ws(model);
  Vec g(model.theta.size());
  grad_params(model, x, g, ws);
  CommittorModel pert = model;
  Workspace wsp(pert);
  const double h = 1e-5;
  for (std::size_t i = 0; i < model.theta.size(); ++i) {
    pert.theta[i] = model.theta[i] + h;
    const double qp = forward(pert, x, wsp);
    pert.theta[i] = model.theta[i] - h;
    const double qm = forward(pert, x, wsp);
    pert.theta[i] = model.theta[i];
    const double fd = (qp - qm) / (2.0 * h);
    if (std::abs(g[i]) > 1e-8) {
      // 1e-9 absolute floor absorbs the cancellation noise of the difference
      CHECK(std::abs(fd - g[i]) <= rel * std::abs(g[i]) + 1e-9);
    }
  }
}

void check_input_fd(const CommittorModel& model, const Vec& x, double rel = 1e-4) {
  Workspace ws(model);
  Vec g(x.size());
  grad_input(model, x, g, ws);
  const double h = 1e-5;
  Vec xp = x, xm = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    xm[i] = x[i] - h;
    const double fd = (forward(model, xp, ws) - forward(model, xm, ws)) / (2.0 * h);
    xp[i] = x[i];
    xm[i] = x[i];
    if (std::abs(g[i]) > 1e-8) CHECK(std::abs(fd - g[i]) <= rel * std::abs(g[i]) + 1e-9);
  }
}

// independent straight-line evaluation used as a second implementation
double straight_line_eval(const CommittorModel& model, const Vec& x) {
  auto eval_net = [&](const SubnetLayout& net) {
    Vec a(x);
    for (int l = 1; l <= net.layers(); ++l) {
      const auto W = layer_weights(model, net, l);
      const auto b = layer_bias(model, net, l);
      const int out_w = net.widths[l], in_w = net.widths[l - 1];
      Vec z(out_w);
      for (int r = 0; r < out_w; ++r) {
        double s = b[r];
        for (int c = 0; c < in_w; ++c) s += W[static_cast<std::size_t>(r) * in_w + c] * a[c];
        z[r] = s;
      }
      if (l < net.layers()) {
        const bool th = net.tanh_last_hidden && l == net.layers() - 1;
        for (int r = 0; r < out_w; ++r) z[r] = th ? std::tanh(z[r]) : std::max(z[r], 0.0);
      }
      a = z;
    }
    return a[0];
  };
  double q = eval_net(model.net_0);
  if (model.net_a) q += singularity_value(model.sing_a, x) * eval_net(*model.net_a);
  if (model.net_b) q += singularity_value(model.sing_b, x) * eval_net(*model.net_b);
  return q;
}

}  // namespace

TEST_CASE("singularity values") {
  SUBCASE("log form") {
    SingularitySpec s{SingularityKind::Log2D, Vec{0.0, 0.0, 0.0}, {0, 1}, 0.0};
    CHECK(singularity_value(s, Vec{1.0, 0.0, 9.0}) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(singularity_value(s, Vec{0.3, 0.0, -2.0}) ==
          doctest::Approx(std::log(0.09)).epsilon(1e-12));  // -2.40794560865...
    CHECK_THROWS_AS(singularity_value(s, Vec{0.0, 0.0, 5.0}), std::domain_error);
  }
  SUBCASE("power-law form") {
    SingularitySpec s{SingularityKind::PowerLaw, Vec(49, 0.0), {0, 1}, 2.0 - 49.0};
    Vec x(49, 0.0);
    x[7] = 1.0;
    CHECK(singularity_value(s, x) == doctest::Approx(1.0).epsilon(1e-15));
    x[7] = 2.0;
    CHECK(singularity_value(s, x) == doctest::Approx(std::pow(2.0, -47.0)).epsilon(1e-12));
    CHECK_THROWS_AS(singularity_value(s, Vec(49, 0.0)), std::domain_error);
  }
  SUBCASE("none") {
    SingularitySpec s;
    CHECK(singularity_value(s, Vec{1.0, 2.0}) == 0.0);
  }
}

TEST_CASE("forward of degenerate models") {
  auto arch = double_well_arch();
  CommittorModel model = make_model(arch);  // all parameters zero
  Workspace ws(model);
  Vec x(10, 0.3);
  CHECK(forward(model, x, ws) == 0.0);

  // output bias only: the model is the constant b
  layer_bias(model, model.net_0, model.net_0.layers())[0] = 0.375;
  CHECK(forward(model, x, ws) == 0.375);
  Vec y(10, -2.0);
  CHECK(forward(model, y, ws) == 0.375);
}

TEST_CASE("forward matches an independently coded evaluator") {
  Rng rng(5);
  for (const ModelArch& arch :
       {double_well_arch(), rugged_muller_arch(), ginzburg_landau_arch()}) {
    Rng init = rng.stream(arch.dim);
    const CommittorModel model = init_model(arch, init);
    Workspace ws(model);
    for (int n = 0; n < 10; ++n) {
      const Vec x = random_interior_point(arch, rng);
      const double q = forward(model, x, ws);
      const double q2 = straight_line_eval(model, x);
      CHECK(std::abs(q - q2) <= 1e-12 * std::max(1.0, std::abs(q)));
    }
  }
}

TEST_CASE("parameter gradients of degenerate models") {
  auto arch = double_well_arch();
  CommittorModel model = make_model(arch);
  Workspace ws(model);
  Vec x(10, 0.4);
  Vec g(model.theta.size());
  grad_params(model, x, g, ws);

  // gradient w.r.t. the output bias is 1; everything else is dead (ReLU
  // subgradient at 0 is 0, and all activations vanish)
  const SubnetLayout& net = model.net_0;
  const std::size_t out_bias_index =
      net.offset + net.layer_offsets.back() +
      static_cast<std::size_t>(net.widths[net.layers()]) * net.widths[net.layers() - 1];
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (i == out_bias_index) CHECK(g[i] == 1.0);
    else CHECK(g[i] == 0.0);
  }
}

TEST_CASE("parameter gradients match finite differences on all architectures") {
  Rng rng(6);
  for (const ModelArch& arch :
       {double_well_arch(), rugged_muller_arch(), ginzburg_landau_arch()}) {
    Rng init = rng.stream(arch.dim);
    const CommittorModel model = init_model(arch, init);
    for (int n = 0; n < 3; ++n) check_param_fd(model, random_interior_point(arch, rng));
  }
}

TEST_CASE("input gradients") {
  SUBCASE("constant model has zero input gradient") {
    auto arch = double_well_arch();
    CommittorModel model = make_model(arch);
    layer_bias(model, model.net_0, model.net_0.layers())[0] = 0.8;
    Workspace ws(model);
    Vec g(10);
    grad_input(model, Vec(10, 0.2), g, ws);
    for (double v : g) CHECK(v == 0.0);
  }

  SUBCASE("pure log singularity times the constant one") {
    ModelArch arch;
    arch.dim = 4;
    arch.net0 = {{8}, true};
    arch.net_ab = {{}, false};  // affine nets
    Vec center{0.5, -0.25, 0.0, 0.0};
    arch.sing_a = {SingularityKind::Log2D, center, {0, 1}, 0.0};
    arch.sing_b = {SingularityKind::None, {}, {0, 1}, 0.0};
    CommittorModel model = make_model(arch);
    layer_bias(model, *model.net_a, 1)[0] = 1.0;  // n_A == 1
    Workspace ws(model);
    const Vec x{1.0, 0.5, 3.0, -1.0};
    Vec g(4);
    grad_input(model, x, g, ws);
    const double di = x[0] - 0.5, dj = x[1] + 0.25;
    const double r2 = di * di + dj * dj;
    CHECK(g[0] == doctest::Approx(2.0 * di / r2).epsilon(1e-12));
    CHECK(g[1] == doctest::Approx(2.0 * dj / r2).epsilon(1e-12));
    CHECK(g[2] == 0.0);
    CHECK(g[3] == 0.0);
  }

  SUBCASE("random models match finite differences") {
    Rng rng(7);
    for (const ModelArch& arch :
         {double_well_arch(), rugged_muller_arch(), ginzburg_landau_arch()}) {
      Rng init = rng.stream(arch.dim);
      const CommittorModel model = init_model(arch, init);
      for (int n = 0; n < 3; ++n) check_input_fd(model, random_interior_point(arch, rng));
    }
  }
}

TEST_CASE("initialization") {
  auto arch = rugged_muller_arch();
  Rng r1(17), r2(17), r3(18);
  const CommittorModel a = init_model(arch, r1);
  const CommittorModel b = init_model(arch, r2);
  const CommittorModel c = init_model(arch, r3);
  CHECK(a.theta == b.theta);
  CHECK(a.theta != c.theta);

  // biases are zero at init
  for (int l = 1; l <= a.net_0.layers(); ++l)
    for (double v : layer_bias(a, a.net_0, l)) CHECK(v == 0.0);

  // finite near the singular centers (never evaluated exactly at them)
  Workspace ws(a);
  Vec near_a = arch.sing_a.center;
  near_a[0] += 1e-3;
  CHECK(std::isfinite(forward(a, near_a, ws)));

  // output scale over standard normal inputs is moderate
  Rng rng(19);
  Vec vals(1000);
  for (auto& v : vals) {
    Vec x(10);
    rng.gauss_fill(x);
    v = forward(a, x, ws);
  }
  double m = 0, m2 = 0;
  for (double v : vals) m += v;
  m /= 1000;
  for (double v : vals) m2 += (v - m) * (v - m);
  const double sd = std::sqrt(m2 / 999);
  CHECK(sd > 1e-3);
  CHECK(sd < 10.0);
}

TEST_CASE("flat parameter round-trip is the identity") {
  auto arch = rugged_muller_arch();
  Rng rng(23);
  CommittorModel model = init_model(arch, rng);
  const Vec original = model.theta;

  // pull the structured view out, wipe the flat store, write the structure back
  struct LayerCopy {
    const SubnetLayout* net;
    int layer;
    Vec weights, bias;
  };
  std::vector<LayerCopy> structure;
  for (const SubnetLayout* net : {&*model.net_a, &*model.net_b, &model.net_0})
    for (int l = 1; l <= net->layers(); ++l) {
      const auto w = layer_weights(model, *net, l);
      const auto b = layer_bias(model, *net, l);
      structure.push_back({net, l, Vec(w.begin(), w.end()), Vec(b.begin(), b.end())});
    }
  std::fill(model.theta.begin(), model.theta.end(), 0.0);
  for (const auto& lc : structure) {
    auto w = layer_weights(model, *lc.net, lc.layer);
    auto b = layer_bias(model, *lc.net, lc.layer);
    std::copy(lc.weights.begin(), lc.weights.end(), w.begin());
    std::copy(lc.bias.begin(), lc.bias.end(), b.begin());
  }
  CHECK(model.theta == original);
}

TEST_CASE("checkpoint round-trip") {
  const std::string path = (std::filesystem::temp_directory_path() / "cmt_ckpt_test.bin").string();
  auto arch = ginzburg_landau_arch();
  Rng rng(29);
  const CommittorModel model = init_model(arch, rng);
  save_checkpoint(model, path);
  const CommittorModel loaded = load_checkpoint(path);
  CHECK(loaded.dim == model.dim);
  CHECK(loaded.theta == model.theta);
  CHECK(loaded.sing_a.kind == model.sing_a.kind);
  CHECK(loaded.sing_a.center == model.sing_a.center);
  CHECK(loaded.sing_b.exponent == model.sing_b.exponent);

  Workspace ws1(model), ws2(loaded);
  Rng prng(31);
  for (int n = 0; n < 5; ++n) {
    Vec x(49);
    prng.gauss_fill(x);
    CHECK(forward(model, x, ws1) == forward(loaded, x, ws2));
  }
  std::filesystem::remove(path);

  CHECK_THROWS_AS(load_checkpoint("/nonexistent/ckpt.bin"), std::runtime_error);
}

TEST_CASE("forward evaluation is deterministic and stateless") {
  auto arch = rugged_muller_arch();
  Rng rng(37);
  const CommittorModel model = init_model(arch, rng);
  Workspace ws(model);
  Vec x(10);
  rng.gauss_fill(x);
  const double q1 = forward(model, x, ws);
  Vec other(10, 0.7);
  forward(model, other, ws);  // interleave another evaluation
  const double q2 = forward(model, x, ws);
  CHECK(q1 == q2);
}

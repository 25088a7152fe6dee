#include "committor/potentials.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace committor {

namespace {

void check_dim(const PotentialSpec& spec, std::span<const double> x, const char* op) {
  if (static_cast<int>(x.size()) != spec.dim)
    throw std::invalid_argument(std::string(op) + ": point has length " +
                                std::to_string(x.size()) + ", potential dimension is " +
                                std::to_string(spec.dim));
}

}  // namespace

void BoxDomain::reflect(std::span<double> x) const {
  for (std::size_t i = 0; i < lo.size(); ++i) {
    double v = x[i];
    const double a = lo[i], b = hi[i];
    const double width = b - a;
    // fold into [a, b] by repeated mirroring; steps are normally tiny so the
    // loop runs at most once
    while (v < a || v > b) {
      if (v < a) v = 2.0 * a - v;
      if (v > b) v = 2.0 * b - v;
      if (width <= 0.0) break;
    }
    x[i] = v;
  }
}

bool BoxDomain::contains(std::span<const double> x) const {
  for (std::size_t i = 0; i < lo.size(); ++i)
    if (x[i] < lo[i] || x[i] > hi[i]) return false;
  return true;
}

PotentialSpec PotentialSpec::double_well(int dim) {
  if (dim < 2) throw std::invalid_argument("double_well: dimension must be >= 2");
  PotentialSpec s;
  s.kind = PotentialKind::DoubleWell;
  s.dim = dim;
  return s;
}

PotentialSpec PotentialSpec::rugged_muller(int dim, double sigma) {
  if (dim < 2) throw std::invalid_argument("rugged_muller: dimension must be >= 2");
  PotentialSpec s;
  s.kind = PotentialKind::RuggedMuller;
  s.dim = dim;
  s.rm_a = {-1.0, -1.0, -6.5, 0.7};
  s.rm_b = {0.0, 0.0, 11.0, 0.6};
  s.rm_c = {-10.0, -10.0, -6.5, 0.7};
  s.rm_d = {-200.0, -100.0, -170.0, 15.0};
  s.rm_x = {1.0, 0.0, -0.5, -1.0};
  s.rm_y = {0.0, 0.5, 1.5, 1.0};
  s.rm_gamma = 9.0;
  s.rm_wavenumber = 5.0;
  s.rm_sigma = sigma;
  s.domain = BoxDomain{{-1.5, -0.5}, {1.0, 2.0}};
  return s;
}

PotentialSpec PotentialSpec::ginzburg_landau(int dim, double lambda) {
  if (dim < 1) throw std::invalid_argument("ginzburg_landau: dimension must be >= 1");
  if (lambda <= 0.0) throw std::invalid_argument("ginzburg_landau: lambda must be positive");
  PotentialSpec s;
  s.kind = PotentialKind::GinzburgLandau;
  s.dim = dim;
  s.gl_lambda = lambda;
  s.gl_h = 1.0 / (dim + 1);
  return s;
}

double rugged_muller_plane_potential(const PotentialSpec& spec, double x1, double x2) {
  double v = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double dx = x1 - spec.rm_x[i];
    const double dy = x2 - spec.rm_y[i];
    v += spec.rm_d[i] *
         std::exp(spec.rm_a[i] * dx * dx + spec.rm_b[i] * dx * dy + spec.rm_c[i] * dy * dy);
  }
  const double w = 2.0 * spec.rm_wavenumber * std::numbers::pi;
  v += spec.rm_gamma * std::sin(w * x1) * std::sin(w * x2);
  return v;
}

double eval_potential(const PotentialSpec& spec, std::span<const double> x) {
  check_dim(spec, x, "eval_potential");
  switch (spec.kind) {
    case PotentialKind::DoubleWell: {
      const double t = x[0] * x[0] - 1.0;
      double v = t * t;
      for (int i = 1; i < spec.dim; ++i) v += 0.3 * x[i] * x[i];
      return v;
    }
    case PotentialKind::RuggedMuller: {
      double v = rugged_muller_plane_potential(spec, x[0], x[1]);
      const double k = 1.0 / (2.0 * spec.rm_sigma * spec.rm_sigma);
      for (int i = 2; i < spec.dim; ++i) v += k * x[i] * x[i];
      return v;
    }
    case PotentialKind::GinzburgLandau: {
      const double h = spec.gl_h;
      const double lam = spec.gl_lambda;
      double v = 0.0;
      double prev = 0.0;  // U_0 = 0
      for (int i = 1; i <= spec.dim + 1; ++i) {
        const double ui = (i <= spec.dim) ? x[i - 1] : 0.0;  // U_{d+1} = 0
        const double slope = (ui - prev) / h;
        const double w = 1.0 - ui * ui;
        v += 0.5 * lam * slope * slope + w * w / (4.0 * lam);
        prev = ui;
      }
      return v;
    }
  }
  throw std::logic_error("eval_potential: unknown potential kind");
}

void eval_grad(const PotentialSpec& spec, std::span<const double> x, std::span<double> grad) {
  check_dim(spec, x, "eval_grad");
  if (grad.size() != x.size()) throw std::invalid_argument("eval_grad: output length mismatch");
  switch (spec.kind) {
    case PotentialKind::DoubleWell: {
      grad[0] = 4.0 * x[0] * (x[0] * x[0] - 1.0);
      for (int i = 1; i < spec.dim; ++i) grad[i] = 0.6 * x[i];
      return;
    }
    case PotentialKind::RuggedMuller: {
      double g1 = 0.0, g2 = 0.0;
      for (int i = 0; i < 4; ++i) {
        const double dx = x[0] - spec.rm_x[i];
        const double dy = x[1] - spec.rm_y[i];
        const double e = spec.rm_d[i] * std::exp(spec.rm_a[i] * dx * dx +
                                                 spec.rm_b[i] * dx * dy +
                                                 spec.rm_c[i] * dy * dy);
        g1 += e * (2.0 * spec.rm_a[i] * dx + spec.rm_b[i] * dy);
        g2 += e * (spec.rm_b[i] * dx + 2.0 * spec.rm_c[i] * dy);
      }
      const double w = 2.0 * spec.rm_wavenumber * std::numbers::pi;
      g1 += spec.rm_gamma * w * std::cos(w * x[0]) * std::sin(w * x[1]);
      g2 += spec.rm_gamma * w * std::sin(w * x[0]) * std::cos(w * x[1]);
      grad[0] = g1;
      grad[1] = g2;
      const double k = 1.0 / (spec.rm_sigma * spec.rm_sigma);
      for (int i = 2; i < spec.dim; ++i) grad[i] = k * x[i];
      return;
    }
    case PotentialKind::GinzburgLandau: {
      const double lam = spec.gl_lambda;
      const double inv_h2 = 1.0 / (spec.gl_h * spec.gl_h);
      for (int j = 0; j < spec.dim; ++j) {
        const double left = (j > 0) ? x[j - 1] : 0.0;
        const double right = (j + 1 < spec.dim) ? x[j + 1] : 0.0;
        grad[j] = lam * inv_h2 * (2.0 * x[j] - left - right) -
                  x[j] * (1.0 - x[j] * x[j]) / lam;
      }
      return;
    }
  }
  throw std::logic_error("eval_grad: unknown potential kind");
}

Vec eval_grad(const PotentialSpec& spec, std::span<const double> x) {
  Vec g(x.size());
  eval_grad(spec, x, g);
  return g;
}

RegionSpec RegionSpec::half_space_pair(int dim) {
  RegionSpec r;
  r.kind = RegionKind::HalfSpacePair;
  r.center_a.assign(dim, 0.0);
  r.center_b.assign(dim, 0.0);
  r.center_a[0] = -1.0;
  r.center_b[0] = 1.0;
  return r;
}

RegionSpec RegionSpec::cylinder_pair(int dim) {
  RegionSpec r;
  r.kind = RegionKind::CylinderPair;
  r.center_a.assign(dim, 0.0);
  r.center_b.assign(dim, 0.0);
  r.center_a[0] = -0.57;
  r.center_a[1] = 1.43;
  r.center_b[0] = 0.56;
  r.center_b[1] = 0.044;
  r.radius = 0.3;
  return r;
}

RegionSpec RegionSpec::sphere_pair(Vec center_a, Vec center_b, double radius) {
  RegionSpec r;
  r.kind = RegionKind::SpherePair;
  r.center_a = std::move(center_a);
  r.center_b = std::move(center_b);
  r.radius = radius;
  return r;
}

RegionLabel region_classify(const RegionSpec& region, std::span<const double> x) {
  if (x.size() != region.center_a.size())
    throw std::invalid_argument("region_classify: dimension mismatch");
  switch (region.kind) {
    case RegionKind::HalfSpacePair:
      if (x[0] <= region.center_a[0]) return RegionLabel::InA;
      if (x[0] >= region.center_b[0]) return RegionLabel::InB;
      return RegionLabel::Interior;
    case RegionKind::CylinderPair: {
      const int i = region.plane[0], j = region.plane[1];
      const double r2 = region.radius * region.radius;
      double da = (x[i] - region.center_a[i]) * (x[i] - region.center_a[i]) +
                  (x[j] - region.center_a[j]) * (x[j] - region.center_a[j]);
      if (da <= r2) return RegionLabel::InA;
      double db = (x[i] - region.center_b[i]) * (x[i] - region.center_b[i]) +
                  (x[j] - region.center_b[j]) * (x[j] - region.center_b[j]);
      if (db <= r2) return RegionLabel::InB;
      return RegionLabel::Interior;
    }
    case RegionKind::SpherePair: {
      const double r2 = region.radius * region.radius;
      if (squared_distance(x, region.center_a) <= r2) return RegionLabel::InA;
      if (squared_distance(x, region.center_b) <= r2) return RegionLabel::InB;
      return RegionLabel::Interior;
    }
  }
  throw std::logic_error("region_classify: unknown region kind");
}

std::vector<Vec> sample_boundary(const RegionSpec& region, Side side, std::size_t count,
                                 const PotentialSpec& spec, double beta, Rng& rng) {
  if (count == 0) return {};
  const Vec& center = (side == Side::A) ? region.center_a : region.center_b;
  const int dim = static_cast<int>(center.size());
  std::vector<Vec> out;
  out.reserve(count);
  switch (region.kind) {
    case RegionKind::HalfSpacePair: {
      // conditional of rho on the hyperplane: free coordinates ~ exp(-0.3 beta x^2)
      const double sd = std::sqrt(1.0 / (0.6 * beta));
      for (std::size_t n = 0; n < count; ++n) {
        Vec p(dim);
        p[0] = center[0];
        for (int i = 1; i < dim; ++i) p[i] = sd * rng.gauss();
        out.push_back(std::move(p));
      }
      return out;
    }
    case RegionKind::CylinderPair: {
      // uniform angle on the circle, free coordinates ~ exp(-beta x^2 / (2 sigma^2))
      const double sd = spec.rm_sigma * std::sqrt(1.0 / beta);
      const int i = region.plane[0], j = region.plane[1];
      for (std::size_t n = 0; n < count; ++n) {
        Vec p(dim, 0.0);
        const double theta = 2.0 * std::numbers::pi * rng.uniform();
        for (int k = 0; k < dim; ++k)
          if (k != i && k != j) p[k] = sd * rng.gauss();
        p[i] = center[i] + region.radius * std::cos(theta);
        p[j] = center[j] + region.radius * std::sin(theta);
        out.push_back(std::move(p));
      }
      return out;
    }
    case RegionKind::SpherePair: {
      for (std::size_t n = 0; n < count; ++n) {
        Vec g(dim);
        rng.gauss_fill(g);
        const double nrm = norm(g);
        Vec p(dim);
        for (int k = 0; k < dim; ++k) p[k] = center[k] + region.radius * g[k] / nrm;
        out.push_back(std::move(p));
      }
      return out;
    }
  }
  throw std::logic_error("sample_boundary: unknown region kind");
}

GLMinimizers find_gl_minimizers(const PotentialSpec& gl_spec, double tol) {
  if (gl_spec.kind != PotentialKind::GinzburgLandau)
    throw std::invalid_argument("find_gl_minimizers: not a Ginzburg-Landau spec");
  const int d = gl_spec.dim;
  // descent step bounded by the stiffest mode, 4*lambda/h^2 + 2/lambda
  const double lipschitz =
      4.0 * gl_spec.gl_lambda / (gl_spec.gl_h * gl_spec.gl_h) + 2.0 / gl_spec.gl_lambda;
  const double step = 1.0 / lipschitz;

  auto descend = [&](double sign) {
    Vec u(d);
    for (int i = 0; i < d; ++i)
      u[i] = sign * std::sin(std::numbers::pi * (i + 1) * gl_spec.gl_h);
    Vec g(d);
    const int max_iter = 2000000;
    for (int it = 0; it < max_iter; ++it) {
      eval_grad(gl_spec, u, g);
      if (norm(g) <= tol) return u;
      axpy(-step, g, u);
    }
    throw std::runtime_error("find_gl_minimizers: gradient descent did not converge");
  };

  GLMinimizers m;
  m.u_minus = descend(-1.0);
  m.u_plus = descend(+1.0);
  return m;
}

}  // namespace committor

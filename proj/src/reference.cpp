#include "committor/reference.hpp"

#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace committor {

namespace {

double simpson(double fa, double fm, double fb, double h) { return h / 6.0 * (fa + 4.0 * fm + fb); }

template <typename F>
double adaptive_simpson_rec(F& f, double a, double b, double fa, double fm, double fb,
                            double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(fa, flm, fm, m - a);
  const double right = simpson(fm, frm, fb, b - m);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <typename F>
double adaptive_simpson(F f, double a, double b, double tol) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = simpson(fa, fm, fb, b - a);
  return adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, 40);
}

}  // namespace

double Reference1D::value_at(double x1) const {
  const double lo = grid.front(), hi = grid.back();
  if (x1 < lo - 1e-9 || x1 > hi + 1e-9)
    throw std::invalid_argument("Reference1D::value_at: point outside the grid");
  x1 = std::clamp(x1, lo, hi);
  const double h = (hi - lo) / static_cast<double>(grid.size() - 1);
  auto i = static_cast<std::size_t>((x1 - lo) / h);
  if (i >= grid.size() - 1) i = grid.size() - 2;
  const double t = (x1 - grid[i]) / (grid[i + 1] - grid[i]);
  return (1.0 - t) * values[i] + t * values[i + 1];
}

Reference1D solve_double_well_1d(double beta, std::size_t node_count) {
  if (node_count < 2) throw std::invalid_argument("solve_double_well_1d: need >= 2 nodes");
  auto integrand = [beta](double s) {
    const double w = (s * s - 1.0) * (s * s - 1.0);
    return std::exp(beta * w);
  };
  Reference1D ref;
  ref.grid.resize(node_count);
  ref.values.resize(node_count);
  const double h = 2.0 / static_cast<double>(node_count - 1);
  for (std::size_t i = 0; i < node_count; ++i) ref.grid[i] = -1.0 + h * static_cast<double>(i);
  ref.grid.front() = -1.0;
  ref.grid.back() = 1.0;

  ref.values[0] = 0.0;
  for (std::size_t i = 1; i < node_count; ++i) {
    const double piece = adaptive_simpson(integrand, ref.grid[i - 1], ref.grid[i], 1e-12);
    ref.values[i] = ref.values[i - 1] + piece;
  }
  const double total = ref.values.back();
  for (double& v : ref.values) v /= total;
  ref.values.back() = 1.0;
  return ref;
}

namespace {

struct Circle {
  double cx, cy, r;
  double value;  // Dirichlet datum
};

// first parameter t in (0, 1] where p + t*step crosses the circle, or -1
double first_crossing(double px, double py, double sx, double sy, const Circle& c) {
  const double a = px - c.cx, b = py - c.cy;
  double best = -1.0;
  // axis-aligned step: exactly one of sx, sy is nonzero
  const double s = (sx != 0.0) ? sx : sy;
  const double moving = (sx != 0.0) ? a : b;
  const double fixed = (sx != 0.0) ? b : a;
  const double disc = c.r * c.r - fixed * fixed;
  if (disc < 0.0) return -1.0;
  const double root = std::sqrt(disc);
  for (const double target : {-root, root}) {
    const double t = (target - moving) / s;
    if (t > 0.0 && t <= 1.0 + 1e-12 && (best < 0.0 || t < best)) best = t;
  }
  return best;
}

}  // namespace

double Reference2D::value_at(double x1, double x2) const {
  const double xmax = x0 + hx * static_cast<double>(nx - 1);
  const double ymax = y0 + hy * static_cast<double>(ny - 1);
  if (x1 < x0 - 1e-9 || x1 > xmax + 1e-9 || x2 < y0 - 1e-9 || x2 > ymax + 1e-9)
    throw std::invalid_argument("Reference2D::value_at: point outside the grid");
  x1 = std::clamp(x1, x0, xmax);
  x2 = std::clamp(x2, y0, ymax);
  auto i = static_cast<std::size_t>((x1 - x0) / hx);
  auto j = static_cast<std::size_t>((x2 - y0) / hy);
  if (i >= nx - 1) i = nx - 2;
  if (j >= ny - 1) j = ny - 2;
  const double tx = (x1 - (x0 + hx * static_cast<double>(i))) / hx;
  const double ty = (x2 - (y0 + hy * static_cast<double>(j))) / hy;
  const double v00 = values[at(i, j)], v10 = values[at(i + 1, j)];
  const double v01 = values[at(i, j + 1)], v11 = values[at(i + 1, j + 1)];
  return (1.0 - tx) * (1.0 - ty) * v00 + tx * (1.0 - ty) * v10 + (1.0 - tx) * ty * v01 +
         tx * ty * v11;
}

Reference2D solve_rugged_muller_2d(const PotentialSpec& spec, const RegionSpec& region,
                                   double temperature, std::size_t resolution, double value_a,
                                   double value_b) {
  if (spec.kind != PotentialKind::RuggedMuller)
    throw std::invalid_argument("solve_rugged_muller_2d: not a rugged-Muller spec");
  if (!spec.domain) throw std::invalid_argument("solve_rugged_muller_2d: spec has no domain box");
  if (region.kind != RegionKind::CylinderPair)
    throw std::invalid_argument("solve_rugged_muller_2d: region must be a cylinder pair");
  if (resolution < 8) throw std::invalid_argument("solve_rugged_muller_2d: resolution too small");
  if (temperature <= 0.0) throw std::invalid_argument("solve_rugged_muller_2d: temperature <= 0");

  const double beta = 1.0 / temperature;
  Reference2D ref;
  ref.nx = resolution + 1;
  ref.ny = resolution + 1;
  ref.x0 = spec.domain->lo[0];
  ref.y0 = spec.domain->lo[1];
  ref.hx = (spec.domain->hi[0] - spec.domain->lo[0]) / static_cast<double>(resolution);
  ref.hy = (spec.domain->hi[1] - spec.domain->lo[1]) / static_cast<double>(resolution);
  ref.mask.assign(ref.nx * ref.ny, 0);
  ref.values.assign(ref.nx * ref.ny, 0.0);

  const int pi = region.plane[0], pj = region.plane[1];
  const Circle circ_a{region.center_a[pi], region.center_a[pj], region.radius, value_a};
  const Circle circ_b{region.center_b[pi], region.center_b[pj], region.radius, value_b};

  auto node_x = [&](std::size_t i) { return ref.x0 + ref.hx * static_cast<double>(i); };
  auto node_y = [&](std::size_t j) { return ref.y0 + ref.hy * static_cast<double>(j); };
  auto rho = [&](double x, double y) {
    return std::exp(-beta * rugged_muller_plane_potential(spec, x, y));
  };
  auto inside = [](const Circle& c, double x, double y) {
    return (x - c.cx) * (x - c.cx) + (y - c.cy) * (y - c.cy) <= c.r * c.r;
  };

  std::vector<std::ptrdiff_t> unknown(ref.nx * ref.ny, -1);
  std::ptrdiff_t n_unknown = 0;
  for (std::size_t j = 0; j < ref.ny; ++j)
    for (std::size_t i = 0; i < ref.nx; ++i) {
      const double x = node_x(i), y = node_y(j);
      if (inside(circ_a, x, y)) {
        ref.mask[ref.at(i, j)] = 1;
        ref.values[ref.at(i, j)] = value_a;
      } else if (inside(circ_b, x, y)) {
        ref.mask[ref.at(i, j)] = 2;
        ref.values[ref.at(i, j)] = value_b;
      } else {
        unknown[ref.at(i, j)] = n_unknown++;
      }
    }

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(n_unknown) * 5);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_unknown);

  const std::ptrdiff_t di[4] = {1, -1, 0, 0};
  const std::ptrdiff_t dj[4] = {0, 0, 1, -1};
  for (std::size_t j = 0; j < ref.ny; ++j) {
    for (std::size_t i = 0; i < ref.nx; ++i) {
      const std::ptrdiff_t row = unknown[ref.at(i, j)];
      if (row < 0) continue;
      const double x = node_x(i), y = node_y(j);
      double diag = 0.0;
      for (int arm = 0; arm < 4; ++arm) {
        const std::ptrdiff_t ni = static_cast<std::ptrdiff_t>(i) + di[arm];
        const std::ptrdiff_t nj = static_cast<std::ptrdiff_t>(j) + dj[arm];
        if (ni < 0 || nj < 0 || ni >= static_cast<std::ptrdiff_t>(ref.nx) ||
            nj >= static_cast<std::ptrdiff_t>(ref.ny))
          continue;  // outer wall: zero flux
        const double sx = ref.hx * static_cast<double>(di[arm]);
        const double sy = ref.hy * static_cast<double>(dj[arm]);
        const double h_arm = std::abs((di[arm] != 0) ? sx : sy);
        // face width of the control cell transverse to the arm; wall nodes own
        // a half cell, so each missing transverse neighbor drops half the width
        double transverse;
        if (di[arm] != 0) {
          transverse = 0.5 * ref.hy * ((j > 0 ? 1 : 0) + (j + 1 < ref.ny ? 1 : 0));
        } else {
          transverse = 0.5 * ref.hx * ((i > 0 ? 1 : 0) + (i + 1 < ref.nx ? 1 : 0));
        }
        const std::size_t nbr = ref.at(static_cast<std::size_t>(ni), static_cast<std::size_t>(nj));

        if (unknown[nbr] >= 0) {
          // grazing chords between two unmasked nodes intrude at most the
          // sagitta ~ h^2/(8r), an O(h^2) boundary perturbation, so plain
          // coupling keeps second order and the matrix symmetric
          const double w = transverse * rho(x + 0.5 * sx, y + 0.5 * sy) / h_arm;
          diag += w;
          triplets.emplace_back(static_cast<int>(row), static_cast<int>(unknown[nbr]), -w);
        } else {
          // Dirichlet arm: shorten to the segment/circle intersection
          const Circle& hit = (ref.mask[nbr] == 1) ? circ_a : circ_b;
          double t = first_crossing(x, y, sx, sy, hit);
          if (t <= 0.0) t = 1.0;  // roundoff tie: boundary sits at the node
          t = std::max(t, 1e-6);
          const double w = transverse * rho(x + 0.5 * t * sx, y + 0.5 * t * sy) / (t * h_arm);
          diag += w;
          rhs[row] += w * hit.value;
        }
      }
      triplets.emplace_back(static_cast<int>(row), static_cast<int>(row), diag);
    }
  }

  Eigen::SparseMatrix<double> mat(n_unknown, n_unknown);
  mat.setFromTriplets(triplets.begin(), triplets.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
  solver.compute(mat);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("solve_rugged_muller_2d: factorization failed");
  Eigen::VectorXd sol = solver.solve(rhs);
  // one step of iterative refinement keeps the constant-boundary identity tight
  sol += solver.solve(rhs - mat * sol);
  const double rhs_norm = rhs.norm();
  const double residual = (rhs - mat * sol).norm() / (rhs_norm > 0.0 ? rhs_norm : 1.0);
  if (!(residual < 1e-8))
    throw std::runtime_error("solve_rugged_muller_2d: linear solve did not converge, residual " +
                             std::to_string(residual));

  for (std::size_t idx = 0; idx < unknown.size(); ++idx) {
    if (unknown[idx] < 0) continue;
    double v = sol[unknown[idx]];
    const double lo = std::min(value_a, value_b), hi = std::max(value_a, value_b);
    // clip solver roundoff only; genuine violations stay visible
    if (v < lo && v > lo - 1e-10) v = lo;
    if (v > hi && v < hi + 1e-10) v = hi;
    ref.values[idx] = v;
  }
  return ref;
}

double refinement_distance(const Reference2D& coarse, const Reference2D& fine) {
  if (fine.nx != 2 * coarse.nx - 1 || fine.ny != 2 * coarse.ny - 1)
    throw std::invalid_argument("refinement_distance: grids are not a 2x refinement pair");
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t j = 0; j < coarse.ny; ++j)
    for (std::size_t i = 0; i < coarse.nx; ++i) {
      if (coarse.mask[coarse.at(i, j)] != 0) continue;
      if (fine.mask[fine.at(2 * i, 2 * j)] != 0) continue;
      const double d = coarse.values[coarse.at(i, j)] - fine.values[fine.at(2 * i, 2 * j)];
      acc += d * d;
      ++count;
    }
  if (count == 0) throw std::runtime_error("refinement_distance: no common unmasked nodes");
  return std::sqrt(acc / static_cast<double>(count));
}

double relative_error(const CommittorModel& model, const Reference1D& ref,
                      std::span<const Vec> validation) {
  Workspace ws(model);
  return relative_error_fn([&](const Vec& x) { return forward(model, x, ws); },
                           [&](const Vec& x) { return ref.value_at(x[0]); }, validation);
}

double relative_error(const CommittorModel& model, const Reference2D& ref,
                      std::span<const Vec> validation) {
  Workspace ws(model);
  return relative_error_fn([&](const Vec& x) { return forward(model, x, ws); },
                           [&](const Vec& x) { return ref.value_at(x[0], x[1]); }, validation);
}

namespace {

constexpr char kRefMagic[8] = {'C', 'M', 'T', 'R', 'E', 'F', '0', '1'};

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::istream& is, T& v) {
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
}

std::ifstream open_reference(const std::string& path, std::uint8_t expected_kind) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_reference: cannot open " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kRefMagic, sizeof(magic)) != 0)
    throw std::runtime_error("load_reference: bad magic in " + path);
  std::uint8_t kind = 0;
  read_pod(is, kind);
  if (kind != expected_kind)
    throw std::runtime_error("load_reference: wrong reference dimensionality in " + path);
  return is;
}

}  // namespace

void save_reference(const Reference1D& ref, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_reference: cannot open " + path);
  os.write(kRefMagic, sizeof(kRefMagic));
  write_pod(os, static_cast<std::uint8_t>(1));
  write_pod(os, static_cast<std::uint64_t>(ref.grid.size()));
  os.write(reinterpret_cast<const char*>(ref.grid.data()),
           static_cast<std::streamsize>(ref.grid.size() * sizeof(double)));
  os.write(reinterpret_cast<const char*>(ref.values.data()),
           static_cast<std::streamsize>(ref.values.size() * sizeof(double)));
  if (!os) throw std::runtime_error("save_reference: write failed for " + path);
}

void save_reference(const Reference2D& ref, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_reference: cannot open " + path);
  os.write(kRefMagic, sizeof(kRefMagic));
  write_pod(os, static_cast<std::uint8_t>(2));
  write_pod(os, static_cast<std::uint64_t>(ref.nx));
  write_pod(os, static_cast<std::uint64_t>(ref.ny));
  write_pod(os, ref.x0);
  write_pod(os, ref.y0);
  write_pod(os, ref.hx);
  write_pod(os, ref.hy);
  os.write(reinterpret_cast<const char*>(ref.mask.data()),
           static_cast<std::streamsize>(ref.mask.size()));
  os.write(reinterpret_cast<const char*>(ref.values.data()),
           static_cast<std::streamsize>(ref.values.size() * sizeof(double)));
  if (!os) throw std::runtime_error("save_reference: write failed for " + path);
}

Reference1D load_reference_1d(const std::string& path) {
  std::ifstream is = open_reference(path, 1);
  std::uint64_t n = 0;
  read_pod(is, n);
  Reference1D ref;
  ref.grid.resize(n);
  ref.values.resize(n);
  is.read(reinterpret_cast<char*>(ref.grid.data()), static_cast<std::streamsize>(n * sizeof(double)));
  is.read(reinterpret_cast<char*>(ref.values.data()),
          static_cast<std::streamsize>(n * sizeof(double)));
  if (!is) throw std::runtime_error("load_reference: truncated file " + path);
  return ref;
}

Reference2D load_reference_2d(const std::string& path) {
  std::ifstream is = open_reference(path, 2);
  Reference2D ref;
  std::uint64_t nx = 0, ny = 0;
  read_pod(is, nx);
  read_pod(is, ny);
  ref.nx = nx;
  ref.ny = ny;
  read_pod(is, ref.x0);
  read_pod(is, ref.y0);
  read_pod(is, ref.hx);
  read_pod(is, ref.hy);
  ref.mask.resize(nx * ny);
  ref.values.resize(nx * ny);
  is.read(reinterpret_cast<char*>(ref.mask.data()), static_cast<std::streamsize>(ref.mask.size()));
  is.read(reinterpret_cast<char*>(ref.values.data()),
          static_cast<std::streamsize>(ref.values.size() * sizeof(double)));
  if (!is) throw std::runtime_error("load_reference: truncated file " + path);
  return ref;
}

}  // namespace committor

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "committor/network.hpp"
#include "committor/potentials.hpp"
#include "committor/vec_math.hpp"

namespace committor {

// Ground-truth committor profile along x1 for the double-well problem.
struct Reference1D {
  Vec grid;    // increasing nodes on [-1, 1]
  Vec values;  // q~ at the nodes, monotone, q~(-1) = 0, q~(1) = 1

  // linear interpolation; throws outside the grid
  double value_at(double x1) const;
};

// q~(x1) = int_{-1}^{x1} e^{beta W} ds / int_{-1}^{1} e^{beta W} ds with
// W(s) = (s^2-1)^2, evaluated by adaptive quadrature on a uniform node grid.
Reference1D solve_double_well_1d(double beta, std::size_t node_count);

// Ground-truth committor on the (x1,x2) rectangle for the rugged-Muller
// problem. Nodes inside the projected regions carry the boundary data exactly.
struct Reference2D {
  std::size_t nx = 0, ny = 0;  // node counts per axis
  double x0 = 0, y0 = 0, hx = 0, hy = 0;
  std::vector<std::uint8_t> mask;  // 0 interior, 1 in A~, 2 in B~ (index i + nx*j)
  Vec values;

  double value_at(double x1, double x2) const;  // bilinear; throws outside
  std::size_t at(std::size_t i, std::size_t j) const { return i + nx * j; }
};

// Solves div(rho grad q) = 0, rho = exp(-beta V~), on the spec's rectangle with
// Dirichlet data value_a / value_b on the projected circles and zero flux on
// the outer walls. Five-point conservative flux scheme; arms cut by a circle
// use the exact segment/circle intersection distance, which keeps the system
// symmetric positive definite and second-order accurate. `resolution` is the
// cell count per axis (>= 200 for production runs; the operation accepts any
// resolution >= 8 so convergence studies can span refinement levels).
Reference2D solve_rugged_muller_2d(const PotentialSpec& spec, const RegionSpec& region,
                                   double temperature, std::size_t resolution,
                                   double value_a = 0.0, double value_b = 1.0);

// RMS difference between a solution and the next refinement (2x cells) over
// common unmasked nodes; the Richardson refinement checks build on this.
double refinement_distance(const Reference2D& coarse, const Reference2D& fine);

// E = ||q_theta - q*|| / ||q*|| over the validation points (Monte Carlo
// realization of the L^2_rho norm when the points are rho-distributed).
template <typename PredictFn, typename TruthFn>
double relative_error_fn(PredictFn&& predict, TruthFn&& truth,
                         std::span<const Vec> validation) {
  if (validation.empty()) throw std::invalid_argument("relative_error: empty validation set");
  double num = 0.0, den = 0.0;
  for (const Vec& x : validation) {
    const double p = predict(x);
    const double t = truth(x);
    num += (p - t) * (p - t);
    den += t * t;
  }
  return std::sqrt(num) / std::sqrt(den);
}

double relative_error(const CommittorModel& model, const Reference1D& ref,
                      std::span<const Vec> validation);
double relative_error(const CommittorModel& model, const Reference2D& ref,
                      std::span<const Vec> validation);

// versioned grid files so repeated runs skip the solve
void save_reference(const Reference1D& ref, const std::string& path);
void save_reference(const Reference2D& ref, const std::string& path);
Reference1D load_reference_1d(const std::string& path);
Reference2D load_reference_2d(const std::string& path);

}  // namespace committor

#pragma once

// Independent numerical oracles shared by the unit and acceptance suites.
// Everything here deliberately avoids the library's own solution paths.

#include <cmath>

#include "committor/vec_math.hpp"

namespace committor::oracles {

// RK4 integration of u'' = 4 beta x (x^2 - 1) u' shot from x = -1 with u' = 1,
// rescaled so u(1) = 1; evaluated at the (increasing) grid points.
inline Vec shoot_double_well_ode(double beta, const Vec& grid, double h = 1e-4) {
  double x = -1.0, u = 0.0, v = 1.0;
  std::size_t next = 0;
  Vec out(grid.size());
  auto f = [beta](double s, double vv) { return 4.0 * beta * s * (s * s - 1.0) * vv; };
  while (next < grid.size()) {
    while (next < grid.size() && grid[next] <= x + 1e-12) {
      out[next] = u + (grid[next] - x) * v;
      ++next;
    }
    if (x >= 1.0) break;
    const double k1u = v, k1v = f(x, v);
    const double k2u = v + 0.5 * h * k1v, k2v = f(x + 0.5 * h, v + 0.5 * h * k1v);
    const double k3u = v + 0.5 * h * k2v, k3v = f(x + 0.5 * h, v + 0.5 * h * k2v);
    const double k4u = v + h * k3v, k4v = f(x + h, v + h * k3v);
    u += h / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u);
    v += h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
    x += h;
  }
  const double total = out.back();
  for (double& w : out) w /= total;
  return out;
}

}  // namespace committor::oracles

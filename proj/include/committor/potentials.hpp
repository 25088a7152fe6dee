#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "committor/rng.hpp"
#include "committor/vec_math.hpp"

namespace committor {

enum class PotentialKind { DoubleWell, RuggedMuller, GinzburgLandau };

// Axis-aligned truncation of the state space on the leading coordinates,
// realized by reflecting walls (zero-flux).
struct BoxDomain {
  std::vector<double> lo, hi;  // bounds for coordinates 0 .. lo.size()-1

  void reflect(std::span<double> x) const;
  bool contains(std::span<const double> x) const;
};

struct PotentialSpec {
  PotentialKind kind = PotentialKind::DoubleWell;
  int dim = 0;

  // rugged-Muller parameters (length-4 arrays)
  std::array<double, 4> rm_a{}, rm_b{}, rm_c{}, rm_d{}, rm_x{}, rm_y{};
  double rm_gamma = 0.0;
  double rm_wavenumber = 0.0;  // k in gamma*sin(2k pi x1)sin(2k pi x2)
  double rm_sigma = 0.0;

  // Ginzburg-Landau parameters; grid size h = 1/(dim+1)
  double gl_lambda = 0.0;
  double gl_h = 0.0;

  std::optional<BoxDomain> domain;  // present when the landscape is non-confining

  static PotentialSpec double_well(int dim);
  static PotentialSpec rugged_muller(int dim = 10, double sigma = 0.05);
  static PotentialSpec ginzburg_landau(int dim = 49, double lambda = 0.03);
};

double eval_potential(const PotentialSpec& spec, std::span<const double> x);
void eval_grad(const PotentialSpec& spec, std::span<const double> x, std::span<double> grad);
Vec eval_grad(const PotentialSpec& spec, std::span<const double> x);

// The 2D landscape V~(x1,x2) the rugged-Muller potential is built from;
// the reference solver works on this restriction.
double rugged_muller_plane_potential(const PotentialSpec& spec, double x1, double x2);

enum class RegionKind { HalfSpacePair, CylinderPair, SpherePair };
enum class RegionLabel { Interior, InA, InB };
enum class Side { A, B };

struct RegionSpec {
  RegionKind kind = RegionKind::HalfSpacePair;
  Vec center_a, center_b;  // y^A, y^B
  double radius = 0.0;
  std::array<int, 2> plane{0, 1};  // projected coordinates for cylinders

  static RegionSpec half_space_pair(int dim);
  static RegionSpec cylinder_pair(int dim);
  static RegionSpec sphere_pair(Vec center_a, Vec center_b, double radius);
};

// Membership test; points on a boundary count as inside (first-entry
// hitting-time semantics).
RegionLabel region_classify(const RegionSpec& region, std::span<const double> x);

// Draws `count` points on the boundary of A or B. Free coordinates follow the
// conditional of rho = exp(-beta V) where tractable (half-space, cylinder);
// sphere boundaries are uniform.
std::vector<Vec> sample_boundary(const RegionSpec& region, Side side, std::size_t count,
                                 const PotentialSpec& spec, double beta, Rng& rng);

struct GLMinimizers {
  Vec u_minus, u_plus;
};

// Gradient descent on the discrete Ginzburg-Landau energy from the smooth
// profiles -sin(pi x) / +sin(pi x), run to ||grad V|| <= tol.
GLMinimizers find_gl_minimizers(const PotentialSpec& gl_spec, double tol = 1e-8);

}  // namespace committor

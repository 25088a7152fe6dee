#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "committor/rng.hpp"
#include "committor/vec_math.hpp"

namespace committor {

enum class SingularityKind : std::uint8_t { None = 0, Log2D = 1, PowerLaw = 2 };

// Fundamental-solution factor multiplying a learned subnet: log squared
// distance in a projected plane (inherent dimension 2), or a power law
// |x - c|^(2-n) for inherent dimension n >= 3.
struct SingularitySpec {
  SingularityKind kind = SingularityKind::None;
  Vec center;
  std::array<int, 2> plane{0, 1};  // Log2D projected coordinate pair
  double exponent = 0.0;           // PowerLaw: 2 - n (negative)
};

double singularity_value(const SingularitySpec& s, std::span<const double> x);
// acc += coeff * dS/dx
void singularity_gradient(const SingularitySpec& s, std::span<const double> x, double coeff,
                          std::span<double> acc);

struct SubnetArch {
  std::vector<int> hidden;        // hidden layer widths, may be empty (affine net)
  bool tanh_last_hidden = false;  // tanh at the last nonlinear layer, ReLU elsewhere
};

struct ModelArch {
  int dim = 0;
  SubnetArch net0{{40, 40, 40}, true};
  SubnetArch net_ab{{20, 20}, false};
  SingularitySpec sing_a, sing_b;  // kind None omits the corresponding subnet
};

// Parameter layout of one fully connected subnet inside the flat theta vector.
// Per layer l = 1..L: W_l row-major (widths[l] x widths[l-1]), then b_l.
struct SubnetLayout {
  std::vector<int> widths;  // [dim, hidden..., 1]
  bool tanh_last_hidden = false;
  std::size_t offset = 0;
  std::size_t count = 0;
  std::vector<std::size_t> layer_offsets;  // per-layer start, relative to offset

  static std::size_t param_count(const std::vector<int>& widths);
  static SubnetLayout make(std::vector<int> widths, bool tanh_last_hidden, std::size_t offset);
  int layers() const { return static_cast<int>(widths.size()) - 1; }
};

// q_theta(x) = n_A(x) S_A(x - y^A) + n_B(x) S_B(x - y^B) + n_0(x).
// theta is the single flat parameter store; the layouts are views into it.
struct CommittorModel {
  int dim = 0;
  SingularitySpec sing_a, sing_b;
  std::optional<SubnetLayout> net_a, net_b;
  SubnetLayout net_0;
  Vec theta;
};

CommittorModel make_model(const ModelArch& arch);  // zero-initialized parameters
CommittorModel init_model(const ModelArch& arch, Rng& rng);

// Scratch buffers for forward / gradient passes. One workspace supports one
// evaluation at a time; concurrent callers each use their own.
struct Workspace {
  struct SubnetState {
    std::vector<Vec> act;    // act[l] = a_l, l = 0..L-1 (a_0 = x)
    std::vector<Vec> tan_s;  // tangent pre-activations, l = 1..L-1
    std::vector<Vec> tan_t;  // tangent activations, l = 0..L-1
    double value = 0.0;
  };

  explicit Workspace(const CommittorModel& model);

  std::array<SubnetState, 3> slot;  // A, B, 0
  double sing_a_val = 0.0, sing_b_val = 0.0;
  double q = 0.0;
  Vec input;
  Vec grad_x;      // d q / d x
  Vec direction;   // cotangent direction for the squared-gradient pass
  Vec s1, s2, s3, s4;  // adjoint scratch, max subnet width
};

// Evaluates q and caches everything needed by the *_from_forward passes.
double forward(const CommittorModel& model, std::span<const double> x, Workspace& ws);

// acc += coeff * dq/dtheta, using the state cached by the last forward().
void backprop_params_from_forward(const CommittorModel& model, double coeff,
                                  std::span<double> acc, Workspace& ws);

// grad = dq/dtheta (exact reverse mode, flat-theta ordering)
void grad_params(const CommittorModel& model, std::span<const double> x, std::span<double> grad,
                 Workspace& ws);
void accumulate_grad_params(const CommittorModel& model, std::span<const double> x, double coeff,
                            std::span<double> acc, Workspace& ws);

// dqdx = dq/dx including the singularity factors' x-dependence
void grad_input(const CommittorModel& model, std::span<const double> x, std::span<double> dqdx,
                Workspace& ws);

// acc += coeff * d(|dq/dx|^2)/dtheta  (reverse pass over the input-gradient
// computation; used by the gradient-squared baseline loss)
void accumulate_sqgrad_params(const CommittorModel& model, std::span<const double> x, double coeff,
                              std::span<double> acc, Workspace& ws);

// Structured access into the flat parameter vector.
std::span<const double> layer_weights(const CommittorModel& model, const SubnetLayout& net,
                                      int layer);
std::span<const double> layer_bias(const CommittorModel& model, const SubnetLayout& net,
                                   int layer);
std::span<double> layer_weights(CommittorModel& model, const SubnetLayout& net, int layer);
std::span<double> layer_bias(CommittorModel& model, const SubnetLayout& net, int layer);

// Little-endian binary checkpoint: architecture descriptor plus flat theta.
void save_checkpoint(const CommittorModel& model, const std::string& path);
CommittorModel load_checkpoint(const std::string& path);

}  // namespace committor

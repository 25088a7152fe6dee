#include "committor/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace committor {

namespace {

// hidden activation of layer l (1-based): tanh at the last nonlinear layer
// when flagged, ReLU otherwise
inline bool is_tanh_layer(const SubnetLayout& net, int l) {
  return net.tanh_last_hidden && l == net.layers() - 1;
}

// derivative / second derivative recovered from the stored activation value
inline double phi_prime(double a, bool tanh_layer) {
  if (tanh_layer) return 1.0 - a * a;
  return a > 0.0 ? 1.0 : 0.0;  // ReLU subgradient at 0 is 0
}

inline double phi_second(double a, bool tanh_layer) {
  if (tanh_layer) return -2.0 * a * (1.0 - a * a);
  return 0.0;
}

inline const double* layer_params(const Vec& theta, const SubnetLayout& net, int l) {
  return theta.data() + net.offset + net.layer_offsets[static_cast<std::size_t>(l - 1)];
}

inline double* layer_params(Vec& theta, const SubnetLayout& net, int l) {
  return theta.data() + net.offset + net.layer_offsets[static_cast<std::size_t>(l - 1)];
}

double subnet_forward(const Vec& theta, const SubnetLayout& net, std::span<const double> x,
                      Workspace::SubnetState& st) {
  const int L = net.layers();
  std::copy(x.begin(), x.end(), st.act[0].begin());
  for (int l = 1; l < L; ++l) {
    const int in_w = net.widths[l - 1], out_w = net.widths[l];
    const double* W = layer_params(theta, net, l);
    const double* b = W + static_cast<std::size_t>(out_w) * in_w;
    const Vec& in = st.act[l - 1];
    Vec& out = st.act[l];
    const bool th = is_tanh_layer(net, l);
    for (int r = 0; r < out_w; ++r) {
      const double* row = W + static_cast<std::size_t>(r) * in_w;
      double z = b[r];
      for (int c = 0; c < in_w; ++c) z += row[c] * in[c];
      out[r] = th ? std::tanh(z) : (z > 0.0 ? z : 0.0);
    }
  }
  const int in_w = net.widths[L - 1];
  const double* W = layer_params(theta, net, L);
  const double* b = W + in_w;
  const Vec& in = st.act[L - 1];
  double y = b[0];
  for (int c = 0; c < in_w; ++c) y += W[c] * in[c];
  st.value = y;
  return y;
}

// Reverse pass from the cached forward state. Accumulates coeff * dvalue/dtheta
// into acc (when nonempty) and coeff * dvalue/dx into dx_acc (when nonempty).
void subnet_backprop(const Vec& theta, const SubnetLayout& net, const Workspace::SubnetState& st,
                     double coeff, std::span<double> acc, std::span<double> dx_acc, Vec& cur,
                     Vec& nxt) {
  const int L = net.layers();
  const bool want_params = !acc.empty();
  const bool want_input = !dx_acc.empty();

  // output layer: delta is the scalar coeff
  {
    const int in_w = net.widths[L - 1];
    const double* W = layer_params(theta, net, L);
    if (want_params) {
      double* Wbar = acc.data() + net.offset + net.layer_offsets[static_cast<std::size_t>(L - 1)];
      const Vec& in = st.act[L - 1];
      for (int c = 0; c < in_w; ++c) Wbar[c] += coeff * in[c];
      Wbar[in_w] += coeff;  // bias
    }
    for (int c = 0; c < in_w; ++c) cur[c] = coeff * W[c];  // dvalue/da_{L-1}
  }

  for (int l = L - 1; l >= 1; --l) {
    const int in_w = net.widths[l - 1], out_w = net.widths[l];
    const bool th = is_tanh_layer(net, l);
    const Vec& a = st.act[l];
    for (int r = 0; r < out_w; ++r) cur[r] *= phi_prime(a[r], th);  // now delta_l

    const double* W = layer_params(theta, net, l);
    if (want_params) {
      double* Wbar = acc.data() + net.offset + net.layer_offsets[static_cast<std::size_t>(l - 1)];
      const Vec& in = st.act[l - 1];
      for (int r = 0; r < out_w; ++r) {
        double* row = Wbar + static_cast<std::size_t>(r) * in_w;
        const double d = cur[r];
        for (int c = 0; c < in_w; ++c) row[c] += d * in[c];
      }
      double* bbar = Wbar + static_cast<std::size_t>(out_w) * in_w;
      for (int r = 0; r < out_w; ++r) bbar[r] += cur[r];
    }

    if (l > 1 || want_input) {
      for (int c = 0; c < in_w; ++c) nxt[c] = 0.0;
      for (int r = 0; r < out_w; ++r) {
        const double* row = W + static_cast<std::size_t>(r) * in_w;
        const double d = cur[r];
        for (int c = 0; c < in_w; ++c) nxt[c] += d * row[c];
      }
      std::swap(cur, nxt);
    }
  }
  if (want_input)
    for (std::size_t c = 0; c < dx_acc.size(); ++c) dx_acc[c] += cur[c];
}

// Forward (tangent) sweep along direction c; fills st.tan_s / st.tan_t.
void subnet_tangent(const Vec& theta, const SubnetLayout& net, Workspace::SubnetState& st,
                    std::span<const double> c_dir) {
  const int L = net.layers();
  std::copy(c_dir.begin(), c_dir.end(), st.tan_t[0].begin());
  for (int l = 1; l < L; ++l) {
    const int in_w = net.widths[l - 1], out_w = net.widths[l];
    const double* W = layer_params(theta, net, l);
    const Vec& tin = st.tan_t[l - 1];
    Vec& s = st.tan_s[l - 1];
    Vec& t = st.tan_t[l];
    const bool th = is_tanh_layer(net, l);
    const Vec& a = st.act[l];
    for (int r = 0; r < out_w; ++r) {
      const double* row = W + static_cast<std::size_t>(r) * in_w;
      double v = 0.0;
      for (int c = 0; c < in_w; ++c) v += row[c] * tin[c];
      s[r] = v;
      t[r] = phi_prime(a[r], th) * v;
    }
  }
}

// Reverse pass over the tangent sweep: acc += kappa * d(psi)/dtheta where
// psi = c . dvalue/dx. Requires subnet_forward and subnet_tangent state.
void subnet_tangent_backprop(const Vec& theta, const SubnetLayout& net,
                             const Workspace::SubnetState& st, double kappa,
                             std::span<double> acc, Vec& tbar, Vec& abar, Vec& zbar, Vec& sbar) {
  const int L = net.layers();

  // output layer: psi = W_L t_{L-1}; bias does not enter
  {
    const int in_w = net.widths[L - 1];
    const double* W = layer_params(theta, net, L);
    double* Wbar = acc.data() + net.offset + net.layer_offsets[static_cast<std::size_t>(L - 1)];
    const Vec& t = st.tan_t[L - 1];
    for (int c = 0; c < in_w; ++c) Wbar[c] += kappa * t[c];
    for (int c = 0; c < in_w; ++c) tbar[c] = kappa * W[c];
    for (int c = 0; c < in_w; ++c) abar[c] = 0.0;
  }

  for (int l = L - 1; l >= 1; --l) {
    const int in_w = net.widths[l - 1], out_w = net.widths[l];
    const bool th = is_tanh_layer(net, l);
    const Vec& a = st.act[l];
    const Vec& s = st.tan_s[l - 1];
    for (int r = 0; r < out_w; ++r) {
      const double pp = phi_prime(a[r], th);
      zbar[r] = phi_second(a[r], th) * s[r] * tbar[r] + pp * abar[r];
      sbar[r] = pp * tbar[r];
    }

    double* base = acc.data() + net.offset + net.layer_offsets[static_cast<std::size_t>(l - 1)];
    const Vec& tin = st.tan_t[l - 1];
    const Vec& ain = st.act[l - 1];
    for (int r = 0; r < out_w; ++r) {
      double* row = base + static_cast<std::size_t>(r) * in_w;
      const double sb = sbar[r], zb = zbar[r];
      for (int c = 0; c < in_w; ++c) row[c] += sb * tin[c] + zb * ain[c];
    }
    double* bbar = base + static_cast<std::size_t>(out_w) * in_w;
    for (int r = 0; r < out_w; ++r) bbar[r] += zbar[r];

    if (l > 1) {
      const double* W = layer_params(theta, net, l);
      for (int c = 0; c < in_w; ++c) {
        tbar[c] = 0.0;
        abar[c] = 0.0;
      }
      for (int r = 0; r < out_w; ++r) {
        const double* row = W + static_cast<std::size_t>(r) * in_w;
        const double sb = sbar[r], zb = zbar[r];
        for (int c = 0; c < in_w; ++c) {
          tbar[c] += sb * row[c];
          abar[c] += zb * row[c];
        }
      }
    }
  }
}

double singularity_grad_dot(const SingularitySpec& s, std::span<const double> x,
                            std::span<const double> dir) {
  switch (s.kind) {
    case SingularityKind::None:
      return 0.0;
    case SingularityKind::Log2D: {
      const int i = s.plane[0], j = s.plane[1];
      const double di = x[i] - s.center[i], dj = x[j] - s.center[j];
      const double r2 = di * di + dj * dj;
      return 2.0 * (di * dir[i] + dj * dir[j]) / r2;
    }
    case SingularityKind::PowerLaw: {
      const double r2 = squared_distance(x, s.center);
      const double f = s.exponent * std::pow(r2, 0.5 * s.exponent - 1.0);
      double acc = 0.0;
      for (std::size_t k = 0; k < x.size(); ++k) acc += (x[k] - s.center[k]) * dir[k];
      return f * acc;
    }
  }
  return 0.0;
}

void validate_singularity(const SingularitySpec& s, int dim, const char* name) {
  if (s.kind == SingularityKind::None) return;
  if (static_cast<int>(s.center.size()) != dim)
    throw std::invalid_argument(std::string(name) + ": singularity center dimension mismatch");
  if (s.kind == SingularityKind::Log2D) {
    if (s.plane[0] == s.plane[1] || s.plane[0] < 0 || s.plane[1] < 0 || s.plane[0] >= dim ||
        s.plane[1] >= dim)
      throw std::invalid_argument(std::string(name) + ": Log2D needs two distinct coordinates");
  } else if (s.exponent >= 0.0) {
    throw std::invalid_argument(std::string(name) + ": PowerLaw exponent 2-n must be negative");
  }
}

std::vector<int> full_widths(int dim, const SubnetArch& arch) {
  std::vector<int> w;
  w.push_back(dim);
  for (int h : arch.hidden) {
    if (h < 1) throw std::invalid_argument("subnet hidden width must be positive");
    w.push_back(h);
  }
  w.push_back(1);
  return w;
}

}  // namespace

double singularity_value(const SingularitySpec& s, std::span<const double> x) {
  switch (s.kind) {
    case SingularityKind::None:
      return 0.0;
    case SingularityKind::Log2D: {
      const int i = s.plane[0], j = s.plane[1];
      const double di = x[i] - s.center[i], dj = x[j] - s.center[j];
      const double r2 = di * di + dj * dj;
      if (r2 == 0.0) throw std::domain_error("singularity_value: evaluation at the center");
      return std::log(r2);
    }
    case SingularityKind::PowerLaw: {
      const double r2 = squared_distance(x, s.center);
      if (r2 == 0.0) throw std::domain_error("singularity_value: evaluation at the center");
      return std::pow(r2, 0.5 * s.exponent);
    }
  }
  throw std::logic_error("singularity_value: unknown kind");
}

void singularity_gradient(const SingularitySpec& s, std::span<const double> x, double coeff,
                          std::span<double> acc) {
  switch (s.kind) {
    case SingularityKind::None:
      return;
    case SingularityKind::Log2D: {
      const int i = s.plane[0], j = s.plane[1];
      const double di = x[i] - s.center[i], dj = x[j] - s.center[j];
      const double r2 = di * di + dj * dj;
      if (r2 == 0.0) throw std::domain_error("singularity_gradient: evaluation at the center");
      acc[i] += coeff * 2.0 * di / r2;
      acc[j] += coeff * 2.0 * dj / r2;
      return;
    }
    case SingularityKind::PowerLaw: {
      const double r2 = squared_distance(x, s.center);
      if (r2 == 0.0) throw std::domain_error("singularity_gradient: evaluation at the center");
      const double f = coeff * s.exponent * std::pow(r2, 0.5 * s.exponent - 1.0);
      for (std::size_t k = 0; k < x.size(); ++k) acc[k] += f * (x[k] - s.center[k]);
      return;
    }
  }
}

std::size_t SubnetLayout::param_count(const std::vector<int>& widths) {
  std::size_t n = 0;
  for (std::size_t l = 1; l < widths.size(); ++l)
    n += static_cast<std::size_t>(widths[l]) * widths[l - 1] + widths[l];
  return n;
}

SubnetLayout SubnetLayout::make(std::vector<int> widths, bool tanh_last_hidden,
                                std::size_t offset) {
  if (widths.size() < 2) throw std::invalid_argument("SubnetLayout: need at least input+output");
  if (widths.back() != 1) throw std::invalid_argument("SubnetLayout: output width must be 1");
  SubnetLayout net;
  net.widths = std::move(widths);
  net.tanh_last_hidden = tanh_last_hidden;
  net.offset = offset;
  net.count = param_count(net.widths);
  std::size_t at = 0;
  for (std::size_t l = 1; l < net.widths.size(); ++l) {
    net.layer_offsets.push_back(at);
    at += static_cast<std::size_t>(net.widths[l]) * net.widths[l - 1] + net.widths[l];
  }
  return net;
}

CommittorModel make_model(const ModelArch& arch) {
  if (arch.dim < 1) throw std::invalid_argument("make_model: dimension must be positive");
  validate_singularity(arch.sing_a, arch.dim, "make_model(sing_a)");
  validate_singularity(arch.sing_b, arch.dim, "make_model(sing_b)");

  CommittorModel m;
  m.dim = arch.dim;
  m.sing_a = arch.sing_a;
  m.sing_b = arch.sing_b;
  std::size_t offset = 0;
  if (arch.sing_a.kind != SingularityKind::None) {
    m.net_a = SubnetLayout::make(full_widths(arch.dim, arch.net_ab), arch.net_ab.tanh_last_hidden,
                                 offset);
    offset += m.net_a->count;
  }
  if (arch.sing_b.kind != SingularityKind::None) {
    m.net_b = SubnetLayout::make(full_widths(arch.dim, arch.net_ab), arch.net_ab.tanh_last_hidden,
                                 offset);
    offset += m.net_b->count;
  }
  m.net_0 = SubnetLayout::make(full_widths(arch.dim, arch.net0), arch.net0.tanh_last_hidden,
                               offset);
  offset += m.net_0.count;
  m.theta.assign(offset, 0.0);
  return m;
}

CommittorModel init_model(const ModelArch& arch, Rng& rng) {
  CommittorModel m = make_model(arch);
  auto fill_net = [&](const SubnetLayout& net) {
    for (int l = 1; l <= net.layers(); ++l) {
      const int in_w = net.widths[l - 1], out_w = net.widths[l];
      const double bound = std::sqrt(6.0 / (in_w + out_w));
      double* W = layer_params(m.theta, net, l);
      for (std::size_t k = 0; k < static_cast<std::size_t>(out_w) * in_w; ++k)
        W[k] = bound * (2.0 * rng.uniform() - 1.0);
      // biases stay zero
    }
  };
  if (m.net_a) fill_net(*m.net_a);
  if (m.net_b) fill_net(*m.net_b);
  fill_net(m.net_0);
  return m;
}

Workspace::Workspace(const CommittorModel& model) {
  std::size_t max_w = static_cast<std::size_t>(model.dim);
  auto setup = [&](const SubnetLayout* net, SubnetState& st) {
    if (!net) return;
    const int L = net->layers();
    st.act.resize(L);
    st.tan_t.resize(L);
    st.tan_s.resize(L > 1 ? L - 1 : 0);
    for (int l = 0; l < L; ++l) {
      st.act[l].assign(net->widths[l], 0.0);
      st.tan_t[l].assign(net->widths[l], 0.0);
      if (l >= 1) st.tan_s[l - 1].assign(net->widths[l], 0.0);
      max_w = std::max(max_w, static_cast<std::size_t>(net->widths[l]));
    }
  };
  setup(model.net_a ? &*model.net_a : nullptr, slot[0]);
  setup(model.net_b ? &*model.net_b : nullptr, slot[1]);
  setup(&model.net_0, slot[2]);
  input.assign(model.dim, 0.0);
  grad_x.assign(model.dim, 0.0);
  direction.assign(model.dim, 0.0);
  s1.assign(max_w, 0.0);
  s2.assign(max_w, 0.0);
  s3.assign(max_w, 0.0);
  s4.assign(max_w, 0.0);
}

double forward(const CommittorModel& model, std::span<const double> x, Workspace& ws) {
  if (static_cast<int>(x.size()) != model.dim)
    throw std::invalid_argument("forward: input dimension mismatch");
  std::copy(x.begin(), x.end(), ws.input.begin());
  double q = 0.0;
  if (model.net_a) {
    ws.sing_a_val = singularity_value(model.sing_a, x);
    q += ws.sing_a_val * subnet_forward(model.theta, *model.net_a, x, ws.slot[0]);
  }
  if (model.net_b) {
    ws.sing_b_val = singularity_value(model.sing_b, x);
    q += ws.sing_b_val * subnet_forward(model.theta, *model.net_b, x, ws.slot[1]);
  }
  q += subnet_forward(model.theta, model.net_0, x, ws.slot[2]);
  ws.q = q;
  return q;
}

void backprop_params_from_forward(const CommittorModel& model, double coeff, std::span<double> acc,
                                  Workspace& ws) {
  if (model.net_a)
    subnet_backprop(model.theta, *model.net_a, ws.slot[0], coeff * ws.sing_a_val, acc, {}, ws.s1,
                    ws.s2);
  if (model.net_b)
    subnet_backprop(model.theta, *model.net_b, ws.slot[1], coeff * ws.sing_b_val, acc, {}, ws.s1,
                    ws.s2);
  subnet_backprop(model.theta, model.net_0, ws.slot[2], coeff, acc, {}, ws.s1, ws.s2);
}

void grad_params(const CommittorModel& model, std::span<const double> x, std::span<double> grad,
                 Workspace& ws) {
  if (grad.size() != model.theta.size())
    throw std::invalid_argument("grad_params: output length mismatch");
  fill_zero(grad);
  forward(model, x, ws);
  backprop_params_from_forward(model, 1.0, grad, ws);
}

void accumulate_grad_params(const CommittorModel& model, std::span<const double> x, double coeff,
                            std::span<double> acc, Workspace& ws) {
  forward(model, x, ws);
  backprop_params_from_forward(model, coeff, acc, ws);
}

namespace {

// fills ws.grad_x from the cached forward state
void grad_input_from_forward(const CommittorModel& model, Workspace& ws) {
  fill_zero(ws.grad_x);
  if (model.net_a) {
    subnet_backprop(model.theta, *model.net_a, ws.slot[0], ws.sing_a_val, {}, ws.grad_x, ws.s1,
                    ws.s2);
    singularity_gradient(model.sing_a, ws.input, ws.slot[0].value, ws.grad_x);
  }
  if (model.net_b) {
    subnet_backprop(model.theta, *model.net_b, ws.slot[1], ws.sing_b_val, {}, ws.grad_x, ws.s1,
                    ws.s2);
    singularity_gradient(model.sing_b, ws.input, ws.slot[1].value, ws.grad_x);
  }
  subnet_backprop(model.theta, model.net_0, ws.slot[2], 1.0, {}, ws.grad_x, ws.s1, ws.s2);
}

}  // namespace

void grad_input(const CommittorModel& model, std::span<const double> x, std::span<double> dqdx,
                Workspace& ws) {
  if (dqdx.size() != x.size()) throw std::invalid_argument("grad_input: output length mismatch");
  forward(model, x, ws);
  grad_input_from_forward(model, ws);
  std::copy(ws.grad_x.begin(), ws.grad_x.end(), dqdx.begin());
}

void accumulate_sqgrad_params(const CommittorModel& model, std::span<const double> x, double coeff,
                              std::span<double> acc, Workspace& ws) {
  forward(model, x, ws);
  grad_input_from_forward(model, ws);
  for (int k = 0; k < model.dim; ++k) ws.direction[k] = 2.0 * ws.grad_x[k];

  auto subnet_term = [&](const SubnetLayout& net, Workspace::SubnetState& st,
                         const SingularitySpec* sing, double sing_val) {
    const double mult = sing ? sing_val : 1.0;
    subnet_tangent(model.theta, net, st, ws.direction);
    subnet_tangent_backprop(model.theta, net, st, coeff * mult, acc, ws.s1, ws.s2, ws.s3, ws.s4);
    if (sing) {
      const double cs = singularity_grad_dot(*sing, ws.input, ws.direction);
      subnet_backprop(model.theta, net, st, coeff * cs, acc, {}, ws.s1, ws.s2);
    }
  };
  if (model.net_a) subnet_term(*model.net_a, ws.slot[0], &model.sing_a, ws.sing_a_val);
  if (model.net_b) subnet_term(*model.net_b, ws.slot[1], &model.sing_b, ws.sing_b_val);
  subnet_term(model.net_0, ws.slot[2], nullptr, 0.0);
}

std::span<const double> layer_weights(const CommittorModel& model, const SubnetLayout& net,
                                      int layer) {
  const double* p = layer_params(model.theta, net, layer);
  return {p, static_cast<std::size_t>(net.widths[layer]) * net.widths[layer - 1]};
}

std::span<const double> layer_bias(const CommittorModel& model, const SubnetLayout& net,
                                   int layer) {
  const double* p = layer_params(model.theta, net, layer) +
                    static_cast<std::size_t>(net.widths[layer]) * net.widths[layer - 1];
  return {p, static_cast<std::size_t>(net.widths[layer])};
}

std::span<double> layer_weights(CommittorModel& model, const SubnetLayout& net, int layer) {
  double* p = layer_params(model.theta, net, layer);
  return {p, static_cast<std::size_t>(net.widths[layer]) * net.widths[layer - 1]};
}

std::span<double> layer_bias(CommittorModel& model, const SubnetLayout& net, int layer) {
  double* p = layer_params(model.theta, net, layer) +
              static_cast<std::size_t>(net.widths[layer]) * net.widths[layer - 1];
  return {p, static_cast<std::size_t>(net.widths[layer])};
}

namespace {

constexpr char kCheckpointMagic[8] = {'C', 'M', 'T', 'N', 'E', 'T', '0', '1'};

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::istream& is, T& v) {
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
}

void write_singularity(std::ostream& os, const SingularitySpec& s) {
  write_pod(os, static_cast<std::uint8_t>(s.kind));
  if (s.kind == SingularityKind::None) return;
  write_pod(os, static_cast<std::int32_t>(s.plane[0]));
  write_pod(os, static_cast<std::int32_t>(s.plane[1]));
  write_pod(os, s.exponent);
  write_pod(os, static_cast<std::uint32_t>(s.center.size()));
  os.write(reinterpret_cast<const char*>(s.center.data()),
           static_cast<std::streamsize>(s.center.size() * sizeof(double)));
}

SingularitySpec read_singularity(std::istream& is) {
  SingularitySpec s;
  std::uint8_t kind = 0;
  read_pod(is, kind);
  s.kind = static_cast<SingularityKind>(kind);
  if (s.kind == SingularityKind::None) return s;
  std::int32_t p0 = 0, p1 = 0;
  read_pod(is, p0);
  read_pod(is, p1);
  s.plane = {p0, p1};
  read_pod(is, s.exponent);
  std::uint32_t n = 0;
  read_pod(is, n);
  s.center.resize(n);
  is.read(reinterpret_cast<char*>(s.center.data()),
          static_cast<std::streamsize>(n * sizeof(double)));
  return s;
}

void write_layout(std::ostream& os, const SubnetLayout* net) {
  write_pod(os, static_cast<std::uint8_t>(net != nullptr));
  if (!net) return;
  write_pod(os, static_cast<std::uint8_t>(net->tanh_last_hidden));
  write_pod(os, static_cast<std::uint32_t>(net->widths.size()));
  for (int w : net->widths) write_pod(os, static_cast<std::int32_t>(w));
}

bool read_layout(std::istream& is, std::vector<int>& widths, bool& tanh_last) {
  std::uint8_t present = 0;
  read_pod(is, present);
  if (!present) return false;
  std::uint8_t th = 0;
  read_pod(is, th);
  tanh_last = th != 0;
  std::uint32_t n = 0;
  read_pod(is, n);
  widths.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    std::int32_t w = 0;
    read_pod(is, w);
    widths[i] = w;
  }
  return true;
}

}  // namespace

void save_checkpoint(const CommittorModel& model, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_checkpoint: cannot open " + path);
  os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  write_pod(os, static_cast<std::uint32_t>(1));  // version
  write_pod(os, static_cast<std::int32_t>(model.dim));
  write_singularity(os, model.sing_a);
  write_singularity(os, model.sing_b);
  write_layout(os, model.net_a ? &*model.net_a : nullptr);
  write_layout(os, model.net_b ? &*model.net_b : nullptr);
  write_layout(os, &model.net_0);
  write_pod(os, static_cast<std::uint64_t>(model.theta.size()));
  os.write(reinterpret_cast<const char*>(model.theta.data()),
           static_cast<std::streamsize>(model.theta.size() * sizeof(double)));
  if (!os) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

CommittorModel load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_checkpoint: cannot open " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
    throw std::runtime_error("load_checkpoint: bad magic in " + path);
  std::uint32_t version = 0;
  read_pod(is, version);
  if (version != 1) throw std::runtime_error("load_checkpoint: unsupported version");
  CommittorModel m;
  std::int32_t dim = 0;
  read_pod(is, dim);
  m.dim = dim;
  m.sing_a = read_singularity(is);
  m.sing_b = read_singularity(is);

  std::size_t offset = 0;
  std::vector<int> widths;
  bool tanh_last = false;
  if (read_layout(is, widths, tanh_last)) {
    m.net_a = SubnetLayout::make(widths, tanh_last, offset);
    offset += m.net_a->count;
  }
  if (read_layout(is, widths, tanh_last)) {
    m.net_b = SubnetLayout::make(widths, tanh_last, offset);
    offset += m.net_b->count;
  }
  if (!read_layout(is, widths, tanh_last))
    throw std::runtime_error("load_checkpoint: missing base subnet");
  m.net_0 = SubnetLayout::make(widths, tanh_last, offset);
  offset += m.net_0.count;

  std::uint64_t theta_len = 0;
  read_pod(is, theta_len);
  if (theta_len != offset) throw std::runtime_error("load_checkpoint: parameter count mismatch");
  m.theta.resize(theta_len);
  is.read(reinterpret_cast<char*>(m.theta.data()),
          static_cast<std::streamsize>(theta_len * sizeof(double)));
  if (!is) throw std::runtime_error("load_checkpoint: truncated file " + path);
  return m;
}

}  // namespace committor

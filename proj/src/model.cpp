#include "geopinn/model.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "geopinn/grid.hpp"
#include "geopinn/io.hpp"

namespace geopinn::model {

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::none: return "none";
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
  }
  return "?";
}

Activation parse_activation(const std::string& s) {
  if (s == "none") return Activation::none;
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  throw UsageError("unknown activation '" + s + "'");
}

namespace {

void activate(Activation a, const Tensor& z, Tensor& out) {
  out = z;
  switch (a) {
    case Activation::none: break;
    case Activation::relu:
      for (double& v : out.data) v = v > 0.0 ? v : 0.0;
      break;
    case Activation::tanh:
      for (double& v : out.data) v = std::tanh(v);
      break;
  }
}

/// g <- g * act'(z)
void activation_backward(Activation a, const Tensor& z, Tensor& g) {
  switch (a) {
    case Activation::none: break;
    case Activation::relu:
      for (std::size_t k = 0; k < g.data.size(); ++k)
        if (!(z.data[k] > 0.0)) g.data[k] = 0.0;
      break;
    case Activation::tanh:
      for (std::size_t k = 0; k < g.data.size(); ++k) {
        const double t = std::tanh(z.data[k]);
        g.data[k] *= 1.0 - t * t;
      }
      break;
  }
}

}  // namespace

Network::Network(const Architecture& arch) : arch_(arch) {
  if (arch.c_in == 0) throw UsageError("network needs at least one input channel");
  if (arch.variables.empty()) throw UsageError("network needs at least one output variable");
  if (arch.hidden.size() != 3) throw UsageError("each subnet has exactly three hidden layers");
  for (std::size_t h : arch.hidden)
    if (h == 0) throw UsageError("hidden layer width must be positive");
  std::size_t offset = 0;
  for (const auto& var : arch.variables) {
    Subnet s{var, {}};
    std::size_t c = arch.c_in;
    for (std::size_t l = 0; l < 4; ++l) {
      ConvLayer layer;
      layer.c_in = c;
      layer.c_out = l < 3 ? arch.hidden[l] : 1;
      layer.act = l < 3 ? arch.activation : Activation::none;
      layer.w_offset = offset;
      offset += layer.n_weights();
      layer.b_offset = offset;
      offset += layer.c_out;
      s.layers.push_back(layer);
      c = layer.c_out;
    }
    subnets_.push_back(std::move(s));
  }
  params_.assign(offset, 0.0);
}

std::string Network::param_name(std::size_t index) const {
  for (const auto& s : subnets_)
    for (std::size_t l = 0; l < s.layers.size(); ++l) {
      const auto& L = s.layers[l];
      if (index >= L.w_offset && index < L.w_offset + L.n_weights())
        return s.variable + ".layer" + std::to_string(l) + ".weight[" + std::to_string(index - L.w_offset) + "]";
      if (index >= L.b_offset && index < L.b_offset + L.c_out)
        return s.variable + ".layer" + std::to_string(l) + ".bias[" + std::to_string(index - L.b_offset) + "]";
    }
  return "param[" + std::to_string(index) + "]";
}

void Network::init_weights(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (const auto& s : subnets_)
    for (const auto& L : s.layers) {
      const double bound = std::sqrt(1.0 / (25.0 * static_cast<double>(L.c_in)));
      std::uniform_real_distribution<double> u(-bound, bound);
      for (std::size_t k = 0; k < L.n_weights(); ++k) params_[L.w_offset + k] = u(rng);
      for (std::size_t k = 0; k < L.c_out; ++k) params_[L.b_offset + k] = 0.0;
    }
}

Tensor Network::forward(const Tensor& input, Tape* tape, Kernels k) const {
  if (input.c != arch_.c_in)
    throw UsageError("network expects " + std::to_string(arch_.c_in) + " input channels, got " +
                     std::to_string(input.c));
  Tensor out(subnets_.size(), input.h, input.w);
  if (tape) {
    tape->inputs.assign(subnets_.size(), {});
    tape->pre.assign(subnets_.size(), {});
  }
  for (std::size_t s = 0; s < subnets_.size(); ++s) {
    Tensor x = input, z;
    for (const auto& L : subnets_[s].layers) {
      const double* w = params_.data() + L.w_offset;
      const double* b = params_.data() + L.b_offset;
      if (k == Kernels::optimized) conv::forward(x, w, b, L.c_out, z);
      else conv::ref::forward(x, w, b, L.c_out, z);
      if (tape) {
        tape->inputs[s].push_back(std::move(x));
        tape->pre[s].push_back(z);
      }
      activate(L.act, z, x);
    }
    std::copy(x.data.begin(), x.data.end(), out.channel(s));
  }
  return out;
}

void Network::backward(const Tape& tape, const Tensor& grad_out, std::vector<double>& grad, Kernels k) const {
  if (tape.inputs.size() != subnets_.size()) throw UsageError("backward called without a recorded forward pass");
  if (grad_out.c != subnets_.size()) throw UsageError("output gradient has the wrong channel count");
  if (grad.size() != params_.size()) grad.assign(params_.size(), 0.0);
  for (std::size_t s = 0; s < subnets_.size(); ++s) {
    const auto& layers = subnets_[s].layers;
    if (tape.inputs[s].size() != layers.size()) throw UsageError("incomplete tape");
    Tensor g(1, grad_out.h, grad_out.w);
    std::copy_n(grad_out.channel(s), grad_out.h * grad_out.w, g.data.begin());
    for (std::size_t l = layers.size(); l-- > 0;) {
      const auto& L = layers[l];
      activation_backward(L.act, tape.pre[s][l], g);
      const Tensor& in = tape.inputs[s][l];
      double* gw = grad.data() + L.w_offset;
      double* gb = grad.data() + L.b_offset;
      if (k == Kernels::optimized) conv::backward_weight(in, g, gw, gb);
      else conv::ref::backward_weight(in, g, gw, gb);
      if (l == 0) break;
      Tensor gi;
      const double* w = params_.data() + L.w_offset;
      if (k == Kernels::optimized) conv::backward_input(g, w, L.c_in, gi);
      else conv::ref::backward_input(g, w, L.c_in, gi);
      g = std::move(gi);
    }
  }
}

Adam::Adam(std::size_t n, double lr_, double beta1_, double beta2_, double eps_)
    : lr(lr_), beta1(beta1_), beta2(beta2_), eps(eps_), m(n, 0.0), v(n, 0.0) {
  if (!(lr > 0.0)) throw UsageError("learning rate must be positive");
}

void Adam::step(Network& net, const std::vector<double>& grad) {
  auto& p = net.params();
  if (grad.size() != p.size() || m.size() != p.size())
    throw UsageError("optimizer state does not match the parameter count");
  for (std::size_t k = 0; k < grad.size(); ++k)
    if (!std::isfinite(grad[k])) throw NumericalError("non-finite gradient at " + net.param_name(k));
  ++t;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (std::size_t k = 0; k < p.size(); ++k) {
    m[k] = beta1 * m[k] + (1.0 - beta1) * grad[k];
    v[k] = beta2 * v[k] + (1.0 - beta2) * grad[k] * grad[k];
    const double mh = m[k] / c1, vh = v[k] / c2;
    p[k] -= lr * mh / (std::sqrt(vh) + eps);
  }
}

std::string format_checkpoint(const Checkpoint& c) {
  const auto& a = c.net.architecture();
  std::ostringstream os;
  os << "geopinn-checkpoint 1\n";
  os << "architecture " << a.c_in << " " << activation_name(a.activation) << " " << a.hidden[0] << " "
     << a.hidden[1] << " " << a.hidden[2] << "\n";
  os << "variables " << a.variables.size();
  for (const auto& v : a.variables) os << " " << v;
  os << "\n";
  os << "iteration " << c.iteration << "\n";
  os << "adam " << c.adam.t << " " << io::format_double(c.adam.lr) << " " << io::format_double(c.adam.beta1) << " "
     << io::format_double(c.adam.beta2) << " " << io::format_double(c.adam.eps) << "\n";
  auto block = [&](const char* name, const std::vector<double>& v) {
    os << name << " " << v.size() << "\n";
    for (double x : v) os << io::format_double(x) << "\n";
  };
  block("params", c.net.params());
  block("adam_m", c.adam.m);
  block("adam_v", c.adam.v);
  return os.str();
}

Checkpoint parse_checkpoint(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  auto next = [&](const char* expect) {
    while (std::getline(in, line)) {
      auto tok = io::tokenize(line);
      if (tok.empty()) continue;
      if (tok[0] != expect) throw UsageError(std::string("checkpoint: expected '") + expect + "', got '" + tok[0] + "'");
      return tok;
    }
    throw UsageError(std::string("checkpoint: missing '") + expect + "'");
  };
  auto header = next("geopinn-checkpoint");
  if (header.size() != 2 || header[1] != "1") throw UsageError("checkpoint: unsupported version");
  auto arch_tok = next("architecture");
  if (arch_tok.size() != 6) throw UsageError("checkpoint: malformed architecture line");
  Architecture a;
  a.c_in = static_cast<std::size_t>(io::parse_long(arch_tok[1], "c_in"));
  a.activation = parse_activation(arch_tok[2]);
  for (int h = 0; h < 3; ++h) a.hidden[h] = static_cast<std::size_t>(io::parse_long(arch_tok[3 + h], "width"));
  auto var_tok = next("variables");
  const auto nv = static_cast<std::size_t>(io::parse_long(var_tok.at(1), "variable count"));
  if (var_tok.size() != nv + 2) throw UsageError("checkpoint: variable count mismatch");
  a.variables.assign(var_tok.begin() + 2, var_tok.end());

  Checkpoint c;
  c.iteration = static_cast<std::uint64_t>(io::parse_long(next("iteration").at(1), "iteration"));
  auto adam_tok = next("adam");
  if (adam_tok.size() != 6) throw UsageError("checkpoint: malformed adam line");
  c.net = Network(a);
  c.adam = Adam(c.net.n_params(), io::parse_double(adam_tok[2], "lr"), io::parse_double(adam_tok[3], "beta1"),
                io::parse_double(adam_tok[4], "beta2"), io::parse_double(adam_tok[5], "eps"));
  c.adam.t = static_cast<std::uint64_t>(io::parse_long(adam_tok[1], "adam step"));
  auto block = [&](const char* name, std::vector<double>& v) {
    auto tok = next(name);
    const auto n = static_cast<std::size_t>(io::parse_long(tok.at(1), "block size"));
    if (n != v.size()) throw UsageError(std::string("checkpoint: ") + name + " has the wrong size");
    for (std::size_t k = 0; k < n; ++k) {
      if (!std::getline(in, line)) throw UsageError(std::string("checkpoint: truncated ") + name);
      v[k] = io::parse_double(line, name);
    }
  };
  block("params", c.net.params());
  block("adam_m", c.adam.m);
  block("adam_v", c.adam.v);
  return c;
}

void save_checkpoint(const std::string& path, const Checkpoint& c) { io::write_text(path, format_checkpoint(c)); }

Checkpoint load_checkpoint(const std::string& path) { return parse_checkpoint(io::read_text(path)); }

}  // namespace geopinn::model

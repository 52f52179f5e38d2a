#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "geopinn/conv.hpp"

namespace geopinn::model {

using conv::Tensor;

enum class Activation { none, relu, tanh };

std::string activation_name(Activation a);
Activation parse_activation(const std::string& s);

/// 5x5 convolution, padding 2, stride 1. Parameters live in the owning
/// Network's flat vector at [w_offset, w_offset + c_out*c_in*25) and
/// [b_offset, b_offset + c_out).
struct ConvLayer {
  std::size_t c_in = 0, c_out = 0;
  Activation act = Activation::none;
  std::size_t w_offset = 0, b_offset = 0;

  std::size_t n_weights() const { return c_out * c_in * 25; }
};

/// Three hidden layers plus a linear single-channel output layer.
struct Subnet {
  std::string variable;
  std::vector<ConvLayer> layers;
};

struct Architecture {
  std::size_t c_in = 1;
  std::vector<std::string> variables;
  std::vector<std::size_t> hidden{16, 32, 16};
  Activation activation = Activation::relu;
  bool operator==(const Architecture&) const = default;
};

/// Activations retained by a forward pass for one input sample.
struct Tape {
  // per subnet: input to each layer, then the pre-activation of each layer
  std::vector<std::vector<Tensor>> inputs;
  std::vector<std::vector<Tensor>> pre;
};

/// Kernel implementation used by forward/backward.
enum class Kernels { optimized, reference };

class Network {
 public:
  Network() = default;
  explicit Network(const Architecture& arch);

  const Architecture& architecture() const { return arch_; }
  const std::vector<Subnet>& subnets() const { return subnets_; }
  std::size_t n_outputs() const { return subnets_.size(); }

  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  std::size_t n_params() const { return params_.size(); }
  /// Human-readable identifier of a flat parameter index.
  std::string param_name(std::size_t index) const;

  /// Weights ~ U(-sqrt(1/(25 c_in)), +sqrt(1/(25 c_in))) per layer, biases 0.
  void init_weights(std::uint64_t seed);

  /// One output channel per subnet; same spatial shape as the input.
  Tensor forward(const Tensor& input, Tape* tape = nullptr, Kernels k = Kernels::optimized) const;
  /// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(output).
  void backward(const Tape& tape, const Tensor& grad_out, std::vector<double>& grad,
                Kernels k = Kernels::optimized) const;

 private:
  Architecture arch_;
  std::vector<Subnet> subnets_;
  std::vector<double> params_;
};

/// Adam with bias-corrected moments.
class Adam {
 public:
  Adam() = default;
  Adam(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  /// Throws NumericalError naming the first non-finite gradient entry.
  void step(Network& net, const std::vector<double>& grad);

  double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::uint64_t t = 0;
  std::vector<double> m, v;
};

/// Text checkpoint with shortest round-trip number formatting.
struct Checkpoint {
  std::uint64_t iteration = 0;
  Network net;
  Adam adam;
};

std::string format_checkpoint(const Checkpoint& c);
Checkpoint parse_checkpoint(const std::string& text);
void save_checkpoint(const std::string& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace geopinn::model

#pragma once

#include <cstddef>
#include <vector>

namespace geopinn::conv {

constexpr int kKernel = 5;
constexpr int kPad = 2;

/// Channel-major activation block (c, h, w), row-major inside each channel.
struct Tensor {
  std::size_t c = 0, h = 0, w = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::size_t c_, std::size_t h_, std::size_t w_, double fill = 0.0)
      : c(c_), h(h_), w(w_), data(c_ * h_ * w_, fill) {}
  double* channel(std::size_t k) { return data.data() + k * h * w; }
  const double* channel(std::size_t k) const { return data.data() + k * h * w; }
  double& at(std::size_t k, std::size_t y, std::size_t x) { return data[(k * h + y) * w + x]; }
  double at(std::size_t k, std::size_t y, std::size_t x) const { return data[(k * h + y) * w + x]; }
  bool operator==(const Tensor&) const = default;
};

// Convolution with 5x5 kernels, zero padding 2, stride 1:
//   out[o][y][x] = b[o] + sum_{i,ky,kx} w[o][i][ky][kx] * in[i][y+ky-2][x+kx-2]
// Weights are laid out (c_out, c_in, 5, 5).

/// Naive serial reference kernels.
namespace ref {
void forward(const Tensor& in, const double* w, const double* b, std::size_t c_out, Tensor& out);
void backward_input(const Tensor& grad_out, const double* w, std::size_t c_in, Tensor& grad_in);
/// Accumulates into grad_w / grad_b.
void backward_weight(const Tensor& in, const Tensor& grad_out, double* grad_w, double* grad_b);
}  // namespace ref

/// OpenMP kernels. Every output element is owned by one thread and summed in
/// a fixed order, so results do not depend on the thread count.
void forward(const Tensor& in, const double* w, const double* b, std::size_t c_out, Tensor& out);
void backward_input(const Tensor& grad_out, const double* w, std::size_t c_in, Tensor& grad_in);
void backward_weight(const Tensor& in, const Tensor& grad_out, double* grad_w, double* grad_b);

/// FLOPs of one forward call.
double forward_flops(std::size_t c_in, std::size_t c_out, std::size_t h, std::size_t w);

}  // namespace geopinn::conv

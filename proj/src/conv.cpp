#include "geopinn/conv.hpp"

#include <algorithm>
#include <stdexcept>

#include "geopinn/grid.hpp"

namespace geopinn::conv {

namespace {

constexpr std::size_t K = kKernel;
constexpr std::size_t KK = K * K;

void check_out(const Tensor& in, std::size_t c_out, Tensor& out) {
  if (in.h == 0 || in.w == 0) throw UsageError("empty convolution input");
  if (out.c != c_out || out.h != in.h || out.w != in.w) out = Tensor(c_out, in.h, in.w);
}

/// Zero-padded copy with a border of 2 on every side.
std::vector<double> pad(const Tensor& in) {
  const std::size_t ph = in.h + 2 * kPad, pw = in.w + 2 * kPad;
  std::vector<double> p(in.c * ph * pw, 0.0);
  for (std::size_t k = 0; k < in.c; ++k)
    for (std::size_t y = 0; y < in.h; ++y)
      std::copy_n(in.channel(k) + y * in.w, in.w, p.data() + (k * ph + y + kPad) * pw + kPad);
  return p;
}

}  // namespace

double forward_flops(std::size_t c_in, std::size_t c_out, std::size_t h, std::size_t w) {
  return 2.0 * static_cast<double>(KK * c_in * c_out * h * w);
}

namespace ref {

void forward(const Tensor& in, const double* w, const double* b, std::size_t c_out, Tensor& out) {
  check_out(in, c_out, out);
  const long H = static_cast<long>(in.h), W = static_cast<long>(in.w);
  for (std::size_t o = 0; o < c_out; ++o)
    for (long y = 0; y < H; ++y)
      for (long x = 0; x < W; ++x) {
        double s = b ? b[o] : 0.0;
        for (std::size_t i = 0; i < in.c; ++i)
          for (long ky = 0; ky < 5; ++ky)
            for (long kx = 0; kx < 5; ++kx) {
              const long yy = y + ky - kPad, xx = x + kx - kPad;
              if (yy < 0 || yy >= H || xx < 0 || xx >= W) continue;
              s += w[((o * in.c + i) * 5 + static_cast<std::size_t>(ky)) * 5 + static_cast<std::size_t>(kx)] *
                   in.at(i, static_cast<std::size_t>(yy), static_cast<std::size_t>(xx));
            }
        out.at(o, static_cast<std::size_t>(y), static_cast<std::size_t>(x)) = s;
      }
}

void backward_input(const Tensor& grad_out, const double* w, std::size_t c_in, Tensor& grad_in) {
  check_out(grad_out, c_in, grad_in);
  std::fill(grad_in.data.begin(), grad_in.data.end(), 0.0);
  const long H = static_cast<long>(grad_out.h), W = static_cast<long>(grad_out.w);
  for (std::size_t o = 0; o < grad_out.c; ++o)
    for (long y = 0; y < H; ++y)
      for (long x = 0; x < W; ++x) {
        const double g = grad_out.at(o, static_cast<std::size_t>(y), static_cast<std::size_t>(x));
        for (std::size_t i = 0; i < c_in; ++i)
          for (long ky = 0; ky < 5; ++ky)
            for (long kx = 0; kx < 5; ++kx) {
              const long yy = y + ky - kPad, xx = x + kx - kPad;
              if (yy < 0 || yy >= H || xx < 0 || xx >= W) continue;
              grad_in.at(i, static_cast<std::size_t>(yy), static_cast<std::size_t>(xx)) +=
                  g * w[((o * c_in + i) * 5 + static_cast<std::size_t>(ky)) * 5 + static_cast<std::size_t>(kx)];
            }
      }
}

void backward_weight(const Tensor& in, const Tensor& grad_out, double* grad_w, double* grad_b) {
  const long H = static_cast<long>(in.h), W = static_cast<long>(in.w);
  for (std::size_t o = 0; o < grad_out.c; ++o)
    for (long y = 0; y < H; ++y)
      for (long x = 0; x < W; ++x) {
        const double g = grad_out.at(o, static_cast<std::size_t>(y), static_cast<std::size_t>(x));
        if (grad_b) grad_b[o] += g;
        for (std::size_t i = 0; i < in.c; ++i)
          for (long ky = 0; ky < 5; ++ky)
            for (long kx = 0; kx < 5; ++kx) {
              const long yy = y + ky - kPad, xx = x + kx - kPad;
              if (yy < 0 || yy >= H || xx < 0 || xx >= W) continue;
              grad_w[((o * in.c + i) * 5 + static_cast<std::size_t>(ky)) * 5 + static_cast<std::size_t>(kx)] +=
                  g * in.at(i, static_cast<std::size_t>(yy), static_cast<std::size_t>(xx));
            }
      }
}

}  // namespace ref

void forward(const Tensor& in, const double* w, const double* b, std::size_t c_out, Tensor& out) {
  check_out(in, c_out, out);
  const std::size_t H = in.h, W = in.w, C = in.c;
  const std::size_t ph = H + 2 * kPad, pw = W + 2 * kPad;
  const std::vector<double> p = pad(in);
  constexpr std::size_t OB = 4;  // output channels per block
  const long n_blocks = static_cast<long>((c_out + OB - 1) / OB);
  const long n_tasks = n_blocks * static_cast<long>(H);

#pragma omp parallel
  {
    std::vector<double> acc(OB * W);
#pragma omp for schedule(static)
    for (long task = 0; task < n_tasks; ++task) {
      const std::size_t ob = static_cast<std::size_t>(task) / H * OB;
      const std::size_t y = static_cast<std::size_t>(task) % H;
      const std::size_t nb = std::min(OB, c_out - ob);
      for (std::size_t q = 0; q < nb; ++q) std::fill_n(acc.data() + q * W, W, b ? b[ob + q] : 0.0);
      if (nb == OB) {
        double* a0 = acc.data();
        double* a1 = a0 + W;
        double* a2 = a1 + W;
        double* a3 = a2 + W;
        for (std::size_t i = 0; i < C; ++i) {
          const double* w0 = w + ((ob + 0) * C + i) * KK;
          const double* w1 = w + ((ob + 1) * C + i) * KK;
          const double* w2 = w + ((ob + 2) * C + i) * KK;
          const double* w3 = w + ((ob + 3) * C + i) * KK;
          for (std::size_t ky = 0; ky < K; ++ky) {
            const double* row = p.data() + (i * ph + y + ky) * pw;
            for (std::size_t kx = 0; kx < K; ++kx) {
              const std::size_t t = ky * K + kx;
              const double c0 = w0[t], c1 = w1[t], c2 = w2[t], c3 = w3[t];
              const double* s = row + kx;
#pragma omp simd
              for (std::size_t x = 0; x < W; ++x) {
                a0[x] += c0 * s[x];
                a1[x] += c1 * s[x];
                a2[x] += c2 * s[x];
                a3[x] += c3 * s[x];
              }
            }
          }
        }
      } else {
        for (std::size_t q = 0; q < nb; ++q) {
          double* a = acc.data() + q * W;
          for (std::size_t i = 0; i < C; ++i) {
            const double* wq = w + ((ob + q) * C + i) * KK;
            for (std::size_t ky = 0; ky < K; ++ky) {
              const double* row = p.data() + (i * ph + y + ky) * pw;
              for (std::size_t kx = 0; kx < K; ++kx) {
                const double c = wq[ky * K + kx];
                const double* s = row + kx;
#pragma omp simd
                for (std::size_t x = 0; x < W; ++x) a[x] += c * s[x];
              }
            }
          }
        }
      }
      for (std::size_t q = 0; q < nb; ++q) std::copy_n(acc.data() + q * W, W, out.channel(ob + q) + y * W);
    }
  }
}

void backward_input(const Tensor& grad_out, const double* w, std::size_t c_in, Tensor& grad_in) {
  // transposed, spatially flipped kernels turn the adjoint into a forward pass
  const std::size_t c_out = grad_out.c;
  std::vector<double> wf(c_in * c_out * KK);
  for (std::size_t o = 0; o < c_out; ++o)
    for (std::size_t i = 0; i < c_in; ++i)
      for (std::size_t t = 0; t < KK; ++t) wf[(i * c_out + o) * KK + (KK - 1 - t)] = w[(o * c_in + i) * KK + t];
  forward(grad_out, wf.data(), nullptr, c_in, grad_in);
}

void backward_weight(const Tensor& in, const Tensor& grad_out, double* grad_w, double* grad_b) {
  const std::size_t H = in.h, W = in.w, C = in.c, O = grad_out.c;
  const std::size_t ph = H + 2 * kPad, pw = W + 2 * kPad;
  const std::vector<double> p = pad(in);
  const long n_pairs = static_cast<long>(O * C);

#pragma omp parallel for schedule(static)
  for (long pair = 0; pair < n_pairs; ++pair) {
    const std::size_t o = static_cast<std::size_t>(pair) / C, i = static_cast<std::size_t>(pair) % C;
    double acc[KK] = {};
    const double* g = grad_out.channel(o);
    for (std::size_t y = 0; y < H; ++y) {
      const double* gr = g + y * W;
      for (std::size_t ky = 0; ky < K; ++ky) {
        const double* row = p.data() + (i * ph + y + ky) * pw;
        for (std::size_t kx = 0; kx < K; ++kx) {
          const double* s = row + kx;
          double d = 0.0;
#pragma omp simd reduction(+ : d)
          for (std::size_t x = 0; x < W; ++x) d += gr[x] * s[x];
          acc[ky * K + kx] += d;
        }
      }
    }
    double* gw = grad_w + (o * C + i) * KK;
    for (std::size_t t = 0; t < KK; ++t) gw[t] += acc[t];
  }
  if (grad_b) {
    for (std::size_t o = 0; o < O; ++o) {
      const double* g = grad_out.channel(o);
      double s = 0.0;
      for (std::size_t k = 0; k < H * W; ++k) s += g[k];
      grad_b[o] += s;
    }
  }
}

}  // namespace geopinn::conv

// Serial reference vs OpenMP convolution kernels on the layer shapes used by
// the solution subnets.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>

#include <omp.h>

#include "geopinn/conv.hpp"

using geopinn::conv::Tensor;
namespace conv = geopinn::conv;

namespace {

double seconds(const std::function<void()>& f, int reps) {
  f();  // warm-up
  const auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / reps;
}

double max_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.data.size(); ++k) m = std::max(m, std::abs(a.data[k] - b.data[k]));
  return m;
}

}  // namespace

int main(int argc, char** argv) {
  const int reps = argc > 1 ? std::atoi(argv[1]) : 20;
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  struct Shape {
    std::size_t ci, co, n;
  };
  const Shape shapes[] = {{2, 16, 32}, {16, 32, 32}, {32, 16, 32}, {16, 1, 32},
                          {1, 16, 64}, {16, 32, 64}, {32, 16, 64}};
  std::printf("threads %d\n", omp_get_max_threads());
  std::printf("%-14s %-9s %10s %10s %10s %8s %10s\n", "shape", "kernel", "ref ms", "omp ms", "omp GF/s",
              "speedup", "max diff");
  for (const auto& s : shapes) {
    Tensor in(s.ci, s.n, s.n), g(s.co, s.n, s.n);
    for (auto& v : in.data) v = u(rng);
    for (auto& v : g.data) v = u(rng);
    std::vector<double> w(s.co * s.ci * 25), b(s.co);
    for (auto& v : w) v = u(rng);
    for (auto& v : b) v = u(rng);
    const double flops = conv::forward_flops(s.ci, s.co, s.n, s.n);
    char name[32];
    std::snprintf(name, sizeof name, "%zux%zu %zu->%zu", s.n, s.n, s.ci, s.co);

    Tensor o1, o2;
    const double tr = seconds([&] { conv::ref::forward(in, w.data(), b.data(), s.co, o1); }, reps);
    const double to = seconds([&] { conv::forward(in, w.data(), b.data(), s.co, o2); }, reps);
    std::printf("%-14s %-9s %10.3f %10.3f %10.2f %8.2f %10.2e\n", name, "forward", tr * 1e3, to * 1e3,
                flops / to * 1e-9, tr / to, max_diff(o1, o2));

    Tensor gi1, gi2;
    const double br = seconds([&] { conv::ref::backward_input(g, w.data(), s.ci, gi1); }, reps);
    const double bo = seconds([&] { conv::backward_input(g, w.data(), s.ci, gi2); }, reps);
    std::printf("%-14s %-9s %10.3f %10.3f %10.2f %8.2f %10.2e\n", name, "grad-in", br * 1e3, bo * 1e3,
                flops / bo * 1e-9, br / bo, max_diff(gi1, gi2));

    std::vector<double> gw1(w.size()), gw2(w.size()), gb1(b.size()), gb2(b.size());
    const double wr = seconds([&] { conv::ref::backward_weight(in, g, gw1.data(), gb1.data()); }, reps);
    const double wo = seconds([&] { conv::backward_weight(in, g, gw2.data(), gb2.data()); }, reps);
    double dw = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) dw = std::max(dw, std::abs(gw1[k] - gw2[k]) / (reps + 1));
    std::printf("%-14s %-9s %10.3f %10.3f %10.2f %8.2f %10.2e\n", name, "grad-w", wr * 1e3, wo * 1e3,
                flops / wo * 1e-9, wr / wo, dw);
  }
}

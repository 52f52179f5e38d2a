#include <cmath>
#include <random>

#include "doctest.h"
#include "geopinn/gpfield.hpp"
#include "test_util.hpp"

using namespace geopinn;
using namespace geopinn::testing;
using meshgen::Point;

namespace {

meshgen::CurvilinearMesh square(std::size_t n, double side) {
  ReferenceGrid g(n, n);
  const double h = side / static_cast<double>(n - 1);
  return mapped_mesh(g, [h](double a, double b) { return Point{a * h, b * h}; });
}

}  // namespace

TEST_CASE("kernel matrix entries") {
  auto mesh = square(6, 1.0);
  gpfield::GPConfig cfg;
  auto K = gpfield::build_kernel_matrix(mesh, cfg);
  REQUIRE(K.n == 36);
  for (std::size_t i = 0; i < K.n; ++i) CHECK(K(i, i) == 10000.0);
  for (std::size_t i = 0; i < K.n; ++i)
    for (std::size_t j = 0; j < K.n; ++j) CHECK(K(i, j) == K(j, i));

  // decay along a row of nodes
  for (std::size_t j = 1; j + 1 < 6; ++j) CHECK(K(0, j + 1) < K(0, j));
  CHECK(K(0, 1) == doctest::Approx(1e4 * std::exp(-0.04 / 0.5)));

  // coincident nodes give identical rows
  auto ring = annulus_mesh(12, 6, 1e-8);
  auto Kr = gpfield::build_kernel_matrix(ring, cfg);
  const std::size_t a = 0, b = 11;  // seam copy of node a
  for (std::size_t q = 0; q < Kr.n; ++q) CHECK(Kr(a, q) == Kr(b, q));

  CHECK_THROWS_AS(gpfield::build_kernel_matrix(mesh, {-1.0, 0.5, 10}), UsageError);
  CHECK_THROWS_AS(gpfield::build_kernel_matrix(mesh, {100.0, 0.0, 10}), UsageError);
  CHECK_THROWS_AS(gpfield::build_kernel_matrix(mesh, {100.0, 0.5, 37}), UsageError);
}

TEST_CASE("identity kernel") {
  ReferenceGrid g(5, 5);
  gpfield::SymMatrix I{25, std::vector<double>(625, 0.0)};
  for (std::size_t i = 0; i < 25; ++i) I(i, i) = 1.0;
  auto b = gpfield::kl_decompose(I, 3, g);
  for (double l : b.eigenvalues) CHECK(l == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(b.energy_fraction == doctest::Approx(3.0 / 25.0).epsilon(1e-14));
  CHECK_THROWS_AS(gpfield::kl_decompose(I, 26, g), UsageError);
  CHECK_THROWS_AS(gpfield::kl_decompose(I, 3, ReferenceGrid(5, 6)), UsageError);

  // rank-one matrix cannot supply two modes
  gpfield::SymMatrix R{25, std::vector<double>(625, 1.0)};
  CHECK_NOTHROW(gpfield::kl_decompose(R, 1, g));
  CHECK_THROWS_AS(gpfield::kl_decompose(R, 2, g), NumericalError);
}

TEST_CASE("full spectrum reconstructs the kernel; modes are orthonormal") {
  auto mesh = square(10, 1.0);
  auto K = gpfield::build_kernel_matrix(mesh, {100.0, 0.5, 10});
  // full reconstruction needs every mode; the tail of a smooth kernel sits at
  // rounding level, so use a rougher kernel to keep the full spectrum positive
  auto Kr = gpfield::build_kernel_matrix(mesh, {100.0, 0.05, 10});
  auto full = gpfield::kl_decompose(Kr, 100, mesh.ref);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < 100; ++i)
    for (std::size_t j = 0; j < 100; ++j) {
      double s = 0.0;
      for (std::size_t q = 0; q < 100; ++q) s += full.eigenvalues[q] * full.modes[q][i] * full.modes[q][j];
      num += (s - Kr(i, j)) * (s - Kr(i, j));
      den += Kr(i, j) * Kr(i, j);
    }
  CHECK(std::sqrt(num / den) < 1e-8);

  auto b = gpfield::kl_decompose(K, 10, mesh.ref);
  for (std::size_t p = 0; p < 10; ++p) {
    if (p > 0) CHECK(b.eigenvalues[p] <= b.eigenvalues[p - 1]);
    for (std::size_t q = 0; q < 10; ++q) {
      const double d = dot(b.modes[p], b.modes[q]);
      if (p == q)
        CHECK(std::abs(d - 1.0) <= 1e-10);
      else
        CHECK(std::abs(d) <= 1e-10);
    }
  }
  // trace identity and the truncation error
  double tail = 0.0;
  for (std::size_t q = 10; q < b.spectrum.size(); ++q) tail += b.spectrum[q];
  double head = 0.0;
  for (double l : b.eigenvalues) head += l;
  CHECK(head + tail == doctest::Approx(b.trace).epsilon(1e-10));
  CHECK(b.trace == doctest::Approx(100 * 1e4));
}

TEST_CASE("source samples") {
  auto mesh = square(12, 1.0);
  auto K = gpfield::build_kernel_matrix(mesh, {100.0, 0.5, 10});
  auto b = gpfield::kl_decompose(K, 10, mesh.ref);

  CHECK(max_abs(gpfield::sample_source(b, std::vector<double>(10, 0.0))) == 0.0);
  std::vector<double> e1(10, 0.0);
  e1[0] = 1.0;
  auto f1 = gpfield::sample_source(b, e1);
  for (std::size_t k = 0; k < f1.size(); ++k) CHECK(f1[k] == std::sqrt(b.eigenvalues[0]) * b.modes[0][k]);
  CHECK_THROWS_AS(gpfield::sample_source(b, std::vector<double>(9, 0.0)), UsageError);

  // same seed, same field; different seeds differ
  CHECK(gpfield::sample_source(b, 7) == gpfield::sample_source(b, 7));
  CHECK_FALSE(gpfield::sample_source(b, 7) == gpfield::sample_source(b, 8));

  // Monte-Carlo nodal variance
  const std::size_t n = 10000;
  std::vector<double> s1(f1.size(), 0.0), s2(f1.size(), 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    auto f = gpfield::sample_source(b, 1000 + r);
    for (std::size_t k = 0; k < f.size(); ++k) {
      s1[k] += f[k];
      s2[k] += f[k] * f[k];
    }
  }
  std::size_t ok = 0;
  for (std::size_t k = 0; k < f1.size(); ++k) {
    double expect = 0.0;
    for (std::size_t q = 0; q < 10; ++q) expect += b.eigenvalues[q] * b.modes[q][k] * b.modes[q][k];
    const double mean = s1[k] / n;
    const double var = s2[k] / n - mean * mean;
    if (std::abs(var - expect) <= 0.05 * expect) ++ok;
  }
  CHECK(static_cast<double>(ok) >= 0.95 * static_cast<double>(f1.size()));
}

TEST_CASE("30x30 unit square keeps over 99% of the energy in 10 modes") {
  auto mesh = square(30, 1.0);
  auto K = gpfield::build_kernel_matrix(mesh, {100.0, 0.5, 10});
  auto b = gpfield::kl_decompose(K, 10, mesh.ref);
  MESSAGE("energy fraction " << b.energy_fraction);
  CHECK(b.energy_fraction >= 0.99);
}

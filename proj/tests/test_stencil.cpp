#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "geopinn/meshgen.hpp"
#include "geopinn/stencil.hpp"
#include "test_util.hpp"

using namespace geopinn;
using namespace geopinn::testing;
using std::numbers::pi;

namespace {

struct ZoneErrors {
  double interior = 0.0;
  double boundary = 0.0;
};

// Max error of d/dxi of sin(2 pi s) on the unit interval sampled with n nodes,
// split into the central zone and the two-node one-sided zones.
ZoneErrors sine_errors(std::size_t n, bool along_xi) {
  const double h = 1.0 / static_cast<double>(n - 1);
  ReferenceGrid g = along_xi ? ReferenceGrid(n, 7, {}, h, 1.0) : ReferenceGrid(7, n, {}, 1.0, h);
  auto f = sample(g, [&](double a, double b) { return std::sin(2 * pi * (along_xi ? a : b)); });
  Array2 d = along_xi ? stencil::d_dxi(f, g) : stencil::d_deta(f, g);
  ZoneErrors e;
  for (std::size_t j = 0; j < g.n_eta; ++j)
    for (std::size_t i = 0; i < g.n_xi; ++i) {
      const std::size_t k = along_xi ? i : j;
      const double s = static_cast<double>(k) * h;
      const double err = std::abs(d(j, i) - 2 * pi * std::cos(2 * pi * s));
      if (k < 2 || k + 2 >= n) e.boundary = std::max(e.boundary, err);
      else e.interior = std::max(e.interior, err);
    }
  return e;
}

}  // namespace

TEST_CASE("stencil tables are consistent first-derivative stencils") {
  for (const auto* s : {&stencil::central4(), &stencil::forward3(), &stencil::backward3()}) {
    double sum = 0.0, first = 0.0;
    for (const auto& t : s->taps) {
      sum += t.weight;
      first += t.weight * t.offset;
    }
    CHECK(sum == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(first == doctest::Approx(1.0).epsilon(1e-15));
    // exact on monomials up to the formal order
    for (int p = 2; p <= s->order; ++p) {
      double m = 0.0;
      for (const auto& t : s->taps) m += t.weight * std::pow(t.offset, p);
      CHECK(std::abs(m) < 1e-13);
    }
  }
}

TEST_CASE("d_dxi and d_deta of a constant vanish") {
  ReferenceGrid g(9, 11);
  Array2 c = g.make_array(3.7);
  CHECK(max_abs(stencil::d_dxi(c, g)) < 1e-14);
  CHECK(max_abs(stencil::d_deta(c, g)) < 1e-14);
}

TEST_CASE("cubics are differentiated exactly on every node") {
  ReferenceGrid g(12, 10);
  auto fx = sample(g, [](double a, double) { return a * a * a; });
  auto fy = sample(g, [](double, double b) { return b * b * b; });
  auto dx = stencil::d_dxi(fx, g);
  auto dy = stencil::d_deta(fy, g);
  for (std::size_t j = 0; j < g.n_eta; ++j)
    for (std::size_t i = 0; i < g.n_xi; ++i) {
      CHECK(dx(j, i) == doctest::Approx(3.0 * i * i).epsilon(1e-12));
      CHECK(dy(j, i) == doctest::Approx(3.0 * j * j).epsilon(1e-12));
    }
}

TEST_CASE("convergence slopes match the formal orders") {
  for (bool along_xi : {true, false}) {
    CAPTURE(along_xi);
    const auto e16 = sine_errors(16, along_xi);
    const auto e32 = sine_errors(32, along_xi);
    const auto e64 = sine_errors(64, along_xi);
    const double si1 = std::log2(e16.interior / e32.interior);
    const double si2 = std::log2(e32.interior / e64.interior);
    const double sb1 = std::log2(e16.boundary / e32.boundary);
    const double sb2 = std::log2(e32.boundary / e64.boundary);
    MESSAGE("interior slopes " << si1 << " " << si2 << ", boundary " << sb1 << " " << sb2);
    CHECK(si2 >= 3.7);
    CHECK(sb2 >= 2.7);
    CHECK(si1 >= 3.5);
    CHECK(sb1 >= 2.5);
  }
}

TEST_CASE("n < 5 is rejected") {
  CHECK_THROWS_AS(stencil::AxisOperator(4, false, 1.0), UsageError);
}

TEST_CASE("periodic axis differentiates across the seam at interior order") {
  auto seam_error = [](std::size_t n) {
    const std::size_t period = n - 1;
    const double h = 1.0 / static_cast<double>(period);
    ReferenceGrid g(n, 6, {true, false}, h, 1.0);
    auto f = sample(g, [](double a, double) { return std::sin(2 * pi * a); });
    auto d = stencil::d_dxi(f, g);
    double e = 0.0;
    for (std::size_t i : {std::size_t{0}, std::size_t{1}, n - 2, n - 1})
      e = std::max(e, std::abs(d(2, i) - 2 * pi * std::cos(2 * pi * static_cast<double>(i) * h)));
    return e;
  };
  const double e1 = seam_error(17), e2 = seam_error(33);
  CHECK(std::log2(e1 / e2) >= 3.7);

  ReferenceGrid g(9, 6, {true, false});
  CHECK(max_abs(stencil::d_dxi(g.make_array(2.0), g)) < 1e-14);
}

TEST_CASE("operators are linear and their adjoints are transposes") {
  std::mt19937_64 rng(7);
  for (Topology topo : {Topology{}, Topology{true, false}}) {
    ReferenceGrid g(11, 9, topo);
    auto mesh = mapped_mesh(g, [](double a, double b) {
      return meshgen::Point{a + 0.1 * std::sin(0.3 * b), b + 0.05 * a * a / 10.0};
    });
    if (topo.periodic_xi) mesh = annulus_mesh(11, 9);
    auto m = meshgen::compute_metrics(mesh);
    stencil::PhysicalOps ops(m);
    auto f = random_field(g, rng), h = random_field(g, rng), w = random_field(g, rng);
    const double a = 0.7, b = -1.3;
    Array2 combo = g.make_array();
    for (std::size_t k = 0; k < combo.size(); ++k) combo[k] = a * f[k] + b * h[k];

    using Op = Array2 (stencil::PhysicalOps::*)(const Array2&) const;
    const std::pair<Op, Op> pairs[] = {{&stencil::PhysicalOps::dxi, &stencil::PhysicalOps::dxi_t},
                                       {&stencil::PhysicalOps::deta, &stencil::PhysicalOps::deta_t},
                                       {&stencil::PhysicalOps::dx, &stencil::PhysicalOps::dx_t},
                                       {&stencil::PhysicalOps::dy, &stencil::PhysicalOps::dy_t},
                                       {&stencil::PhysicalOps::lap, &stencil::PhysicalOps::lap_t}};
    for (auto [op, adj] : pairs) {
      auto lhs = (ops.*op)(combo);
      auto of = (ops.*op)(f), oh = (ops.*op)(h);
      for (std::size_t k = 0; k < lhs.size(); ++k)
        CHECK(lhs[k] == doctest::Approx(a * of[k] + b * oh[k]).epsilon(1e-11).scale(1.0));
      const double left = dot(of, w);
      const double right = dot(f, (ops.*adj)(w));
      CHECK(left == doctest::Approx(right).epsilon(1e-12));
    }
  }
}

TEST_CASE("physical derivatives on identity and affine meshes") {
  ReferenceGrid g(10, 8);
  auto ident = meshgen::compute_metrics(mapped_mesh(g, [](double a, double b) { return meshgen::Point{a, b}; }));
  auto f = sample(g, [](double a, double) { return a * a; });
  auto d = stencil::d_dx(f, ident);
  for (std::size_t j = 0; j < g.n_eta; ++j)
    for (std::size_t i = 0; i < g.n_xi; ++i) CHECK(d(j, i) == doctest::Approx(2.0 * i).epsilon(1e-12));

  auto q = sample(g, [](double a, double b) { return a * a + b * b; });
  auto lap = stencil::laplacian(q, ident);
  for (std::size_t k = 0; k < lap.size(); ++k) CHECK(lap[k] == doctest::Approx(4.0).epsilon(1e-11));
  CHECK(max_abs(stencil::laplacian(g.make_array(5.0), ident)) < 1e-12);

  auto affine_mesh = mapped_mesh(g, [](double a, double b) { return meshgen::Point{2 * a, 3 * b}; });
  auto aff = meshgen::compute_metrics(affine_mesh);
  auto dxx = stencil::d_dx(affine_mesh.x, aff);
  auto dyy = stencil::d_dy(affine_mesh.y, aff);
  auto dxy = stencil::d_dx(affine_mesh.y, aff);
  for (std::size_t k = 0; k < dxx.size(); ++k) {
    CHECK(dxx[k] == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(dyy[k] == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(std::abs(dxy[k]) < 1e-13);
  }
}

TEST_CASE("affine change of variables commutes with the physical operators") {
  // x = 2 xi + 0.5 eta, y = -0.3 xi + 1.5 eta; for g(x, y) = x^2 - 3 x y the
  // physical gradient is known in closed form.
  ReferenceGrid g(9, 12);
  auto mesh = mapped_mesh(g, [](double a, double b) { return meshgen::Point{2 * a + 0.5 * b, -0.3 * a + 1.5 * b}; });
  auto m = meshgen::compute_metrics(mesh);
  auto f = sample_on(mesh, [](double x, double y) { return x * x - 3 * x * y; });
  auto gx = stencil::d_dx(f, m), gy = stencil::d_dy(f, m);
  for (std::size_t k = 0; k < f.size(); ++k) {
    CHECK(gx[k] == doctest::Approx(2 * mesh.x[k] - 3 * mesh.y[k]).epsilon(1e-11).scale(10.0));
    CHECK(gy[k] == doctest::Approx(-3 * mesh.x[k]).epsilon(1e-11).scale(10.0));
  }
}

TEST_CASE("annulus: physical derivatives converge, Laplacian of a harmonic function vanishes") {
  auto errors = [](std::size_t n) {
    auto mesh = annulus_mesh(n, n);
    auto m = meshgen::compute_metrics(mesh);
    auto r2 = sample_on(mesh, [](double x, double y) { return x * x + y * y; });
    auto dx = stencil::d_dx(r2, m), dy = stencil::d_dy(r2, m);
    double ex = 0.0, ey = 0.0;
    for (std::size_t k = 0; k < r2.size(); ++k) {
      ex = std::max(ex, std::abs(dx[k] - 2 * mesh.x[k]));
      ey = std::max(ey, std::abs(dy[k] - 2 * mesh.y[k]));
    }
    auto harm = sample_on(mesh, [](double x, double y) { return x * x - y * y; });
    auto lap = stencil::laplacian(harm, m);
    double el = 0.0;
    for (std::size_t k : loss_eligible_nodes(mesh.ref)) el = std::max(el, std::abs(lap[k]));
    return std::tuple{ex, ey, el};
  };
  auto [ex1, ey1, el1] = errors(17);
  auto [ex2, ey2, el2] = errors(33);
  auto [ex3, ey3, el3] = errors(65);
  MESSAGE("d_dx slopes " << std::log2(ex1 / ex2) << " " << std::log2(ex2 / ex3) << "; laplacian slopes "
                         << std::log2(el1 / el2) << " " << std::log2(el2 / el3));
  CHECK(std::log2(ex2 / ex3) >= 2.7);
  CHECK(std::log2(ey2 / ey3) >= 2.7);
  CHECK(std::log2(el2 / el3) >= 1.8);
}

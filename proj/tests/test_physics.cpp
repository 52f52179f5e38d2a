#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "geopinn/physics.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace geopinn;
using namespace geopinn::testing;
using meshgen::Point;
using std::numbers::pi;

namespace {

double eligible_max(const Array2& r, const ReferenceGrid& g) {
  double m = 0.0;
  for (std::size_t k : loss_eligible_nodes(g)) m = std::max(m, std::abs(r[k]));
  return m;
}

meshgen::CurvilinearMesh unit_square(std::size_t n) {
  const double h = 1.0 / static_cast<double>(n - 1);
  ReferenceGrid g(n, n);
  return mapped_mesh(g, [h](double a, double b) { return Point{a * h, b * h}; });
}

}  // namespace

TEST_CASE("heat residual of constants and harmonic functions") {
  auto mesh = annulus_mesh(24, 12, 1e-10);
  auto m = meshgen::compute_metrics(mesh);
  stencil::PhysicalOps ops(m);
  auto r = physics::heat_residual(m.grid.make_array(3.0), ops);
  CHECK(max_abs(r[0]) < 1e-10);

  auto err = [](std::size_t n) {
    auto mesh = annulus_mesh(n, n);
    auto m = meshgen::compute_metrics(mesh);
    stencil::PhysicalOps ops(m);
    auto T = sample_on(mesh, [](double x, double y) { return std::exp(x) * std::cos(y); });
    return eligible_max(physics::heat_residual(T, ops)[0], m.grid);
  };
  const double e1 = err(17), e2 = err(33);
  CHECK(e2 < e1);
  CHECK(std::log2(e1 / e2) >= 1.8);

  // residual is zero off the eligible mask
  auto T = sample_on(mesh, [](double x, double y) { return x * x * y; });
  auto res = physics::heat_residual(T, ops)[0];
  for (std::size_t k = 0; k < res.size(); ++k) {
    const auto c = classify_node(m.grid, k / m.grid.n_xi, k % m.grid.n_xi);
    if (c == NodeClass::boundary || c == NodeClass::periodic_mirror) CHECK(res[k] == 0.0);
  }
}

TEST_CASE("poisson manufactured solution converges") {
  auto err = [](std::size_t n) {
    auto mesh = unit_square(n);
    auto m = meshgen::compute_metrics(mesh);
    stencil::PhysicalOps ops(m);
    auto T = sample_on(mesh, [](double x, double y) { return std::sin(pi * x) * std::sin(pi * y); });
    auto f = sample_on(mesh, [](double x, double y) { return 2 * pi * pi * std::sin(pi * x) * std::sin(pi * y); });
    return eligible_max(physics::poisson_residual(T, f, ops)[0], m.grid);
  };
  const double e1 = err(17), e2 = err(33), e3 = err(65);
  MESSAGE("poisson slopes " << std::log2(e1 / e2) << " " << std::log2(e2 / e3));
  CHECK(std::log2(e2 / e3) >= 1.8);

  auto mesh = unit_square(9);
  auto m = meshgen::compute_metrics(mesh);
  stencil::PhysicalOps ops(m);
  CHECK(max_abs(physics::poisson_residual(m.grid.make_array(10.0), m.grid.make_array(), ops)[0]) < 1e-10);
}

TEST_CASE("navier-stokes residual: trivial flows") {
  auto mesh = unit_square(12);
  auto m = meshgen::compute_metrics(mesh);
  stencil::PhysicalOps ops(m);
  physics::FluidParams fp{0.05, 0.0, 1.0};
  const auto& g = m.grid;
  auto r0 = physics::ns_residual(g.make_array(), g.make_array(), g.make_array(2.0), fp, ops);
  for (std::size_t c = 0; c < 3; ++c) CHECK(max_abs(r0[c]) < 1e-10);
  auto r1 = physics::ns_residual(g.make_array(0.3), g.make_array(-1.2), g.make_array(-4.0), fp, ops);
  for (std::size_t c = 0; c < 3; ++c) CHECK(max_abs(r1[c]) < 1e-10);

  // adding a constant to p changes nothing
  std::mt19937_64 rng(3);
  auto u = random_field(g, rng), v = random_field(g, rng), p = random_field(g, rng);
  auto a = physics::ns_residual(u, v, p, fp, ops);
  for (std::size_t k = 0; k < p.size(); ++k) p[k] += 7.0;
  auto b = physics::ns_residual(u, v, p, fp, ops);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t k = 0; k < p.size(); ++k) CHECK(a[c][k] == doctest::Approx(b[c][k]).epsilon(1e-12).scale(1.0));
}

TEST_CASE("plane Poiseuille flow refines at second order") {
  const double e1 = poiseuille_rms(33), e2 = poiseuille_rms(65), e3 = poiseuille_rms(129);
  MESSAGE("poiseuille rms " << e1 << " " << e2 << " " << e3);
  CHECK(std::log2(e1 / e2) >= 2.0);
  CHECK(std::log2(e2 / e3) >= 2.0);

  // on an undistorted channel the quadratic profile is reproduced to rounding
  ReferenceGrid g(12, 12);
  auto mesh = mapped_mesh(g, [](double a, double b) { return Point{a / 11.0 - 0.5, 2.0 * b / 11.0}; });
  auto m = meshgen::compute_metrics(mesh);
  stencil::PhysicalOps ops(m);
  auto v = sample_on(mesh, [](double x, double) { return 1 - 4 * x * x; });
  auto p = sample_on(mesh, [](double, double y) { return -8 * 0.05 * y; });
  auto r = physics::ns_residual(g.make_array(), v, p, {0.05, 0.0, 1.0}, ops);
  for (std::size_t c = 0; c < 3; ++c) CHECK(max_abs(r[c]) < 1e-11);
}

TEST_CASE("residual adjoints match directional derivatives") {
  auto mesh = annulus_mesh(16, 10, 1e-10);
  auto m = meshgen::compute_metrics(mesh);
  stencil::PhysicalOps ops(m);
  const auto& g = m.grid;
  std::mt19937_64 rng(4);
  physics::FluidParams fp{0.07, 0.0, 1.0};
  for (physics::Pde pde : {physics::Pde::heat, physics::Pde::poisson, physics::Pde::ns}) {
    CAPTURE(physics::pde_name(pde));
    const auto vars = physics::solution_variables(pde);
    GridField sol, dir, gres;
    for (const auto& name : vars) {
      sol.add(name, random_field(g, rng));
      dir.add(name, random_field(g, rng));
    }
    const auto src = random_field(g, rng);
    for (const auto& name : physics::residual_names(pde)) gres.add(name, random_field(g, rng));
    auto shifted = [&](double eps) {
      GridField s = sol;
      for (std::size_t c = 0; c < s.n_channels(); ++c)
        for (std::size_t k = 0; k < s[c].size(); ++k) s[c][k] += eps * dir[c][k];
      return physics::residual(pde, s, &src, fp, ops);
    };
    // residuals are at most quadratic, so the central difference is exact up to rounding
    const double eps = 1e-3;
    auto rp = shifted(eps), rm = shifted(-eps);
    double lhs = 0.0;
    for (std::size_t c = 0; c < rp.n_channels(); ++c)
      for (std::size_t k = 0; k < rp[c].size(); ++k) lhs += (rp[c][k] - rm[c][k]) / (2 * eps) * gres[c][k];
    auto adj = physics::residual_adjoint(pde, sol, gres, fp, ops);
    double rhs = 0.0;
    for (std::size_t c = 0; c < adj.n_channels(); ++c) rhs += dot(adj[c], dir[c]);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
  }
}

TEST_CASE("physics loss") {
  ReferenceGrid g(8, 7);
  GridField zeros;
  zeros.add("r", g.make_array());
  CHECK(physics::physics_loss({zeros}, g).total == 0.0);
  GridField ones;
  ones.add("r", g.make_array(1.0));
  CHECK(physics::physics_loss({ones}, g).total == 1.0);
  CHECK(physics::physics_loss({ones, zeros}, g).total == 0.5);
  CHECK_THROWS_AS(physics::physics_loss({}, g), UsageError);

  // weights and gradient
  std::mt19937_64 rng(5);
  GridField a, b;
  a.add("c", random_field(g, rng));
  a.add("m", random_field(g, rng));
  b.add("c", random_field(g, rng));
  b.add("m", random_field(g, rng));
  const std::vector<double> w{1.0, 3.0};
  const double l = physics::physics_loss({a, b}, g, w).total;
  auto ga = physics::physics_loss_grad(a, g, 2, w);
  const double eps = 1e-6;
  const std::size_t k = loss_eligible_nodes(g)[5];
  GridField ap = a, am = a;
  ap[1][k] += eps;
  am[1][k] -= eps;
  const double fd = (physics::physics_loss({ap, b}, g, w).total - physics::physics_loss({am, b}, g, w).total) / (2 * eps);
  CHECK(fd == doctest::Approx(ga[1][k]).epsilon(1e-7));
  CHECK(l > 0.0);
}

TEST_CASE("relative error is the square root of the norm ratio") {
  ReferenceGrid g(6, 6, {true, false});
  std::mt19937_64 rng(6);
  auto ref = random_field(g, rng);
  CHECK(physics::relative_error(ref, ref, g) == 0.0);
  CHECK(physics::relative_error(g.make_array(), ref, g) == doctest::Approx(1.0).epsilon(1e-15));
  auto pred = ref;
  const double delta = 0.01;
  for (std::size_t k = 0; k < pred.size(); ++k) pred[k] *= 1 + delta;
  CHECK(physics::relative_error(pred, ref, g) == doctest::Approx(std::sqrt(delta)).epsilon(1e-10));
  CHECK(physics::relative_error_ratio(pred, ref, g) == doctest::Approx(delta).epsilon(1e-10));
  // duplicate seam nodes do not count
  auto mirrored = ref;
  for (std::size_t j = 0; j < 6; ++j) mirrored(j, 5) += 100.0;
  CHECK(physics::relative_error(mirrored, ref, g) == 0.0);
  CHECK_THROWS_AS(physics::relative_error(ref, g.make_array(), g), UsageError);
}

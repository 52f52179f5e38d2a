#include "geopinn/oracle.hpp"

#include <cmath>
#include <numbers>

namespace geopinn::oracle {

using bcpad::BCKind;
using meshgen::Edge;

namespace {

/// Per-node coefficients of J^2 lap T = a T_xixi - 2 b T_xieta + c T_etaeta + p T_xi + q T_eta.
struct Coef {
  double a, b, c, p, q, j2;
};

struct Lattice {
  const ReferenceGrid& g;
  std::size_t nx, ny;  // number of distinct columns / rows

  explicit Lattice(const ReferenceGrid& grid)
      : g(grid),
        nx(grid.topology.periodic_xi ? grid.n_xi - 1 : grid.n_xi),
        ny(grid.topology.periodic_eta ? grid.n_eta - 1 : grid.n_eta) {}

  // neighbour indices; only called where the neighbour exists
  std::size_t ip(std::size_t i) const { return g.topology.periodic_xi ? (i + 1) % nx : i + 1; }
  std::size_t im(std::size_t i) const { return g.topology.periodic_xi ? (i + nx - 1) % nx : i - 1; }
  std::size_t jp(std::size_t j) const { return g.topology.periodic_eta ? (j + 1) % ny : j + 1; }
  std::size_t jm(std::size_t j) const { return g.topology.periodic_eta ? (j + ny - 1) % ny : j - 1; }

  bool interior(std::size_t j, std::size_t i) const {
    const bool ix = g.topology.periodic_xi ? i < nx : (i > 0 && i + 1 < g.n_xi);
    const bool jx = g.topology.periodic_eta ? j < ny : (j > 0 && j + 1 < g.n_eta);
    return ix && jx;
  }
};

struct Stencil9 {
  double e, w, n, s, ne, nw, se, sw;
};

Stencil9 gather(const Array2& f, const Lattice& L, std::size_t j, std::size_t i) {
  const std::size_t a = L.ip(i), b = L.im(i), c = L.jp(j), d = L.jm(j);
  return {f(j, a), f(j, b), f(c, i), f(d, i), f(c, a), f(c, b), f(d, a), f(d, b)};
}

std::vector<Coef> build_coefficients(const meshgen::CurvilinearMesh& mesh, const Lattice& L) {
  const auto& g = L.g;
  std::vector<Coef> co(g.n_xi * g.n_eta, Coef{0, 0, 0, 0, 0, 0});
  int sign = 0;
  for (std::size_t j = 0; j < g.n_eta; ++j) {
    for (std::size_t i = 0; i < g.n_xi; ++i) {
      if (!L.interior(j, i)) continue;
      const Stencil9 X = gather(mesh.x, L, j, i), Y = gather(mesh.y, L, j, i);
      const double x0 = mesh.x(j, i), y0 = mesh.y(j, i);
      const double xx = 0.5 * (X.e - X.w), yx = 0.5 * (Y.e - Y.w);
      const double xe = 0.5 * (X.n - X.s), ye = 0.5 * (Y.n - Y.s);
      const double jac = xx * ye - xe * yx;
      const int sj = jac > 0 ? 1 : (jac < 0 ? -1 : 0);
      if (sj == 0 || (sign != 0 && sj != sign))
        throw NumericalError("oracle: mapping folds at node (" + std::to_string(j) + ", " + std::to_string(i) + ")");
      sign = sj;
      const double a = xe * xe + ye * ye, b = xx * xe + yx * ye, c = xx * xx + yx * yx;
      const double dx = a * (X.e - 2 * x0 + X.w) - 0.5 * b * (X.ne - X.nw - X.se + X.sw) + c * (X.n - 2 * x0 + X.s);
      const double dy = a * (Y.e - 2 * y0 + Y.w) - 0.5 * b * (Y.ne - Y.nw - Y.se + Y.sw) + c * (Y.n - 2 * y0 + Y.s);
      co[j * g.n_xi + i] = {a, b, c, (xe * dy - ye * dx) / jac, (yx * dx - xx * dy) / jac, jac * jac};
    }
  }
  return co;
}

/// J^2 (lap T + f) without the centre term, i.e. everything but -2(a+c) T.
double off_centre(const Array2& T, const Lattice& L, const Coef& k, std::size_t j, std::size_t i, double f) {
  const Stencil9 s = gather(T, L, j, i);
  return k.a * (s.e + s.w) + k.c * (s.n + s.s) - 0.5 * k.b * (s.ne - s.nw - s.se + s.sw) + 0.5 * k.p * (s.e - s.w) +
         0.5 * k.q * (s.n - s.s) + k.j2 * f;
}

void mirror(Array2& T, const ReferenceGrid& g) {
  if (g.topology.periodic_xi)
    for (std::size_t j = 0; j < g.n_eta; ++j) T(j, g.n_xi - 1) = T(j, 0);
  if (g.topology.periodic_eta)
    for (std::size_t i = 0; i < g.n_xi; ++i) T(g.n_eta - 1, i) = T(0, i);
}

OracleSolution solve(const meshgen::CurvilinearMesh& mesh, const bcpad::ChannelBC& bc, const Array2* f,
                     const OracleOptions& opt) {
  const ReferenceGrid& g = mesh.ref;
  bc.validate(g);
  for (Edge e : {Edge::bottom, Edge::right, Edge::top, Edge::left}) {
    const BCKind k = bc[e].kind;
    if (k != BCKind::dirichlet && k != BCKind::periodic)
      throw UsageError("oracle supports Dirichlet and periodic edges only; edge " + meshgen::edge_name(e) + " is " +
                       bcpad::kind_name(k));
  }
  if (f && !f->same_shape(g.make_array())) throw UsageError("oracle: source field does not match the grid");
  if (!(opt.tol > 0.0)) throw UsageError("oracle: tolerance must be positive");

  const Lattice L(g);
  const auto co = build_coefficients(mesh, L);

  // boundary values; eta edges are applied last so they own shared corners
  Array2 T = g.make_array();
  double bmax = 0.0, bsum = 0.0;
  std::size_t bcount = 0;
  for (Edge e : {Edge::left, Edge::right, Edge::bottom, Edge::top}) {
    if (bc[e].kind != BCKind::dirichlet) continue;
    for (double v : bc[e].values) {
      bmax = std::max(bmax, std::abs(v));
      bsum += v;
      ++bcount;
    }
  }
  const double guess = bcount ? bsum / static_cast<double>(bcount) : 0.0;
  for (std::size_t k = 0; k < T.size(); ++k) T[k] = guess;
  for (Edge e : {Edge::left, Edge::right, Edge::bottom, Edge::top})
    if (bc[e].kind == BCKind::dirichlet) bcpad::apply_dirichlet(T, g, e, bc[e].values);

  double xmin = mesh.x[0], xmax = xmin, ymin = mesh.y[0], ymax = ymin;
  for (std::size_t k = 0; k < mesh.x.size(); ++k) {
    xmin = std::min(xmin, mesh.x[k]);
    xmax = std::max(xmax, mesh.x[k]);
    ymin = std::min(ymin, mesh.y[k]);
    ymax = std::max(ymax, mesh.y[k]);
  }
  const double diam2 = (xmax - xmin) * (xmax - xmin) + (ymax - ymin) * (ymax - ymin);
  double fmax = 0.0;
  if (f)
    for (std::size_t k = 0; k < f->size(); ++k) fmax = std::max(fmax, std::abs((*f)[k]));
  double scale = std::max(fmax, bmax / diam2);
  if (!(scale > 0.0)) scale = 1.0;

  const double omega =
      opt.sor > 0.0 ? opt.sor
                    : 2.0 / (1.0 + std::sin(std::numbers::pi / static_cast<double>(std::max(g.n_xi, g.n_eta))));
  OracleSolution out;
  out.scale = scale;
  for (out.iterations = 1; out.iterations <= opt.max_iter; ++out.iterations) {
    double rmax = 0.0;
    for (std::size_t j = 0; j < L.ny; ++j) {
      for (std::size_t i = 0; i < L.nx; ++i) {
        if (!L.interior(j, i)) continue;
        const Coef& k = co[j * g.n_xi + i];
        const double diag = 2.0 * (k.a + k.c);
        const double s = off_centre(T, L, k, j, i, f ? (*f)(j, i) : 0.0);
        const double r = (s - diag * T(j, i)) / k.j2;
        rmax = std::max(rmax, std::abs(r));
        T(j, i) += omega * (s / diag - T(j, i));
      }
    }
    if (!std::isfinite(rmax)) throw NumericalError("oracle: iteration diverged");
    if (rmax <= opt.tol * scale) break;
  }
  mirror(T, g);
  const Array2 res = discrete_residual(mesh, T, f);
  for (std::size_t k = 0; k < res.size(); ++k) out.residual = std::max(out.residual, std::abs(res[k]));
  if (out.iterations > opt.max_iter && out.residual > opt.tol * scale)
    throw meshgen::ConvergenceError("oracle did not converge", out.residual, opt.max_iter);
  out.iterations = std::min(out.iterations, opt.max_iter);
  out.field = std::move(T);
  return out;
}

}  // namespace

Array2 discrete_residual(const meshgen::CurvilinearMesh& mesh, const Array2& T, const Array2* f) {
  const ReferenceGrid& g = mesh.ref;
  const Lattice L(g);
  const auto co = build_coefficients(mesh, L);
  Array2 r = g.make_array();
  for (std::size_t j = 0; j < L.ny; ++j)
    for (std::size_t i = 0; i < L.nx; ++i) {
      if (!L.interior(j, i)) continue;
      const Coef& k = co[j * g.n_xi + i];
      r(j, i) = (off_centre(T, L, k, j, i, f ? (*f)(j, i) : 0.0) - 2.0 * (k.a + k.c) * T(j, i)) / k.j2;
    }
  mirror(r, g);
  return r;
}

OracleSolution solve_heat(const meshgen::CurvilinearMesh& mesh, const bcpad::ChannelBC& bc, const OracleOptions& opt) {
  return solve(mesh, bc, nullptr, opt);
}

OracleSolution solve_poisson(const meshgen::CurvilinearMesh& mesh, const bcpad::ChannelBC& bc, const Array2& f,
                             const OracleOptions& opt) {
  return solve(mesh, bc, &f, opt);
}

}  // namespace geopinn::oracle

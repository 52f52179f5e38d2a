#include "geopinn/meshgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "geopinn/io.hpp"

namespace geopinn::meshgen {

std::string edge_name(Edge e) {
  switch (e) {
    case Edge::bottom: return "bottom";
    case Edge::right: return "right";
    case Edge::top: return "top";
    case Edge::left: return "left";
  }
  return "?";
}

Edge parse_edge(const std::string& s) {
  if (s == "0" || s == "bottom") return Edge::bottom;
  if (s == "1" || s == "right") return Edge::right;
  if (s == "2" || s == "top") return Edge::top;
  if (s == "3" || s == "left") return Edge::left;
  throw UsageError("unknown edge '" + s + "' (use 0-3 or bottom/right/top/left)");
}

bool is_eta_edge(Edge e) { return e == Edge::bottom || e == Edge::top; }

std::size_t edge_length(const ReferenceGrid& g, Edge e) {
  return is_eta_edge(e) ? g.n_xi : g.n_eta;
}

std::pair<std::size_t, std::size_t> edge_node(const ReferenceGrid& g, Edge e, std::size_t k) {
  switch (e) {
    case Edge::bottom: return {0, k};
    case Edge::top: return {g.n_eta - 1, k};
    case Edge::left: return {k, 0};
    case Edge::right: return {k, g.n_xi - 1};
  }
  return {0, 0};
}

Topology BoundaryCurves::topology() const {
  Topology t;
  if (periodic) {
    const auto [a, b] = *periodic;
    const bool xi_pair = (a == Edge::left && b == Edge::right) || (a == Edge::right && b == Edge::left);
    const bool eta_pair = (a == Edge::bottom && b == Edge::top) || (a == Edge::top && b == Edge::bottom);
    if (xi_pair) t.periodic_xi = true;
    else if (eta_pair) t.periodic_eta = true;
    else throw UsageError("periodic edges must be opposite edges");
  }
  return t;
}

ReferenceGrid BoundaryCurves::reference_grid() const {
  return ReferenceGrid(edge(Edge::bottom).size(), edge(Edge::left).size(), topology());
}

void BoundaryCurves::validate(const ReferenceGrid& g) const {
  for (Edge e : {Edge::bottom, Edge::right, Edge::top, Edge::left}) {
    if (edge(e).size() != edge_length(g, e))
      throw UsageError("edge " + edge_name(e) + " has " + std::to_string(edge(e).size()) +
                       " points, grid needs " + std::to_string(edge_length(g, e)));
  }
  const auto& b = edge(Edge::bottom);
  const auto& t = edge(Edge::top);
  const auto& l = edge(Edge::left);
  const auto& r = edge(Edge::right);
  if (!(b.front() == l.front() && b.back() == r.front() && t.front() == l.back() &&
        t.back() == r.back()))
    throw UsageError("boundary edges do not share corner points exactly");
  const Topology topo = topology();
  if (!(topo == g.topology)) throw UsageError("boundary topology does not match reference grid");
  if (topo.periodic_xi && l != r) throw UsageError("periodic edges left/right must coincide");
  if (topo.periodic_eta && b != t) throw UsageError("periodic edges bottom/top must coincide");
}

CurvilinearMesh transfinite_interpolation(const BoundaryCurves& bc, const ReferenceGrid& ref) {
  bc.validate(ref);
  const auto nx = ref.n_xi, ny = ref.n_eta;
  CurvilinearMesh m{ref.make_array(), ref.make_array(), ref};
  const auto& B = bc.edge(Edge::bottom);
  const auto& T = bc.edge(Edge::top);
  const auto& L = bc.edge(Edge::left);
  const auto& R = bc.edge(Edge::right);
  const Point p00 = B.front(), p10 = B.back(), p01 = T.front(), p11 = T.back();
  for (std::size_t j = 0; j < ny; ++j) {
    const double t = static_cast<double>(j) / static_cast<double>(ny - 1);
    for (std::size_t i = 0; i < nx; ++i) {
      const double s = static_cast<double>(i) / static_cast<double>(nx - 1);
      auto blend = [&](auto get) {
        return (1 - t) * get(B[i]) + t * get(T[i]) + (1 - s) * get(L[j]) + s * get(R[j]) -
               ((1 - s) * (1 - t) * get(p00) + s * (1 - t) * get(p10) + (1 - s) * t * get(p01) +
                s * t * get(p11));
      };
      m.x(j, i) = blend([](const Point& p) { return p.x; });
      m.y(j, i) = blend([](const Point& p) { return p.y; });
    }
  }
  // Boundary nodes are copied verbatim so they stay bitwise equal to the input.
  for (std::size_t i = 0; i < nx; ++i) {
    m.x(0, i) = B[i].x, m.y(0, i) = B[i].y;
    m.x(ny - 1, i) = T[i].x, m.y(ny - 1, i) = T[i].y;
  }
  for (std::size_t j = 0; j < ny; ++j) {
    m.x(j, 0) = L[j].x, m.y(j, 0) = L[j].y;
    m.x(j, nx - 1) = R[j].x, m.y(j, nx - 1) = R[j].y;
  }
  return m;
}

namespace {

// Index bookkeeping for the nodes the elliptic solver updates.
struct SolveRange {
  std::size_t i0, i1, j0, j1;  // inclusive-exclusive
  std::size_t px, py;          // periods (n or n-1)
  bool wrap_x, wrap_y;

  explicit SolveRange(const ReferenceGrid& g)
      : i0(g.topology.periodic_xi ? 0 : 1),
        i1(g.n_xi - 1),
        j0(g.topology.periodic_eta ? 0 : 1),
        j1(g.n_eta - 1),
        px(g.topology.periodic_xi ? g.n_xi - 1 : g.n_xi),
        py(g.topology.periodic_eta ? g.n_eta - 1 : g.n_eta),
        wrap_x(g.topology.periodic_xi),
        wrap_y(g.topology.periodic_eta) {}

  std::size_t ip(std::size_t i) const { return wrap_x ? (i + 1) % px : i + 1; }
  std::size_t im(std::size_t i) const { return wrap_x ? (i + px - 1) % px : i - 1; }
  std::size_t jp(std::size_t j) const { return wrap_y ? (j + 1) % py : j + 1; }
  std::size_t jm(std::size_t j) const { return wrap_y ? (j + py - 1) % py : j - 1; }
};

struct Coefficients {
  Array2 a, b, c;  // alpha/dxi^2, -beta/(2 dxi deta), gamma/deta^2
};

Coefficients coefficients(const CurvilinearMesh& m, const SolveRange& r) {
  const auto& g = m.ref;
  Coefficients k{g.make_array(), g.make_array(), g.make_array()};
  for (std::size_t j = r.j0; j < r.j1; ++j)
    for (std::size_t i = r.i0; i < r.i1; ++i) {
      const double x_xi = (m.x(j, r.ip(i)) - m.x(j, r.im(i))) / (2 * g.d_xi);
      const double y_xi = (m.y(j, r.ip(i)) - m.y(j, r.im(i))) / (2 * g.d_xi);
      const double x_eta = (m.x(r.jp(j), i) - m.x(r.jm(j), i)) / (2 * g.d_eta);
      const double y_eta = (m.y(r.jp(j), i) - m.y(r.jm(j), i)) / (2 * g.d_eta);
      const double alpha = x_eta * x_eta + y_eta * y_eta;
      const double gamma = x_xi * x_xi + y_xi * y_xi;
      const double beta = x_xi * x_eta + y_xi * y_eta;
      k.a(j, i) = alpha / (g.d_xi * g.d_xi);
      k.c(j, i) = gamma / (g.d_eta * g.d_eta);
      k.b(j, i) = -beta / (2 * g.d_xi * g.d_eta);
    }
  return k;
}

// Weighted neighbour sum a(E+W) + c(N+S) + b(NE - NW - SE + SW).
inline double neighbour_sum(const Array2& f, const Coefficients& k, const SolveRange& r,
                            std::size_t j, std::size_t i) {
  const std::size_t e = r.ip(i), w = r.im(i), n = r.jp(j), s = r.jm(j);
  return k.a(j, i) * (f(j, e) + f(j, w)) + k.c(j, i) * (f(n, i) + f(s, i)) +
         k.b(j, i) * (f(n, e) - f(n, w) - f(s, e) + f(s, w));
}

double residual_with(const CurvilinearMesh& m, const Coefficients& k, const SolveRange& r) {
  double worst = 0.0;
  for (std::size_t j = r.j0; j < r.j1; ++j)
    for (std::size_t i = r.i0; i < r.i1; ++i) {
      const double diag = 2 * (k.a(j, i) + k.c(j, i));
      const double rx = std::abs(neighbour_sum(m.x, k, r, j, i) - diag * m.x(j, i)) / diag;
      const double ry = std::abs(neighbour_sum(m.y, k, r, j, i) - diag * m.y(j, i)) / diag;
      worst = std::max({worst, rx, ry});
      if (!std::isfinite(rx) || !std::isfinite(ry)) return std::numeric_limits<double>::infinity();
    }
  return worst;
}

void sync_mirrors(CurvilinearMesh& m) {
  const auto& g = m.ref;
  if (g.topology.periodic_xi)
    for (std::size_t j = 0; j < g.n_eta; ++j) {
      m.x(j, g.n_xi - 1) = m.x(j, 0);
      m.y(j, g.n_xi - 1) = m.y(j, 0);
    }
  if (g.topology.periodic_eta)
    for (std::size_t i = 0; i < g.n_xi; ++i) {
      m.x(g.n_eta - 1, i) = m.x(0, i);
      m.y(g.n_eta - 1, i) = m.y(0, i);
    }
}

}  // namespace

double mapping_residual(const CurvilinearMesh& mesh) {
  SolveRange r(mesh.ref);
  return residual_with(mesh, coefficients(mesh, r), r);
}

CurvilinearMesh generate_mapping(const BoundaryCurves& bc, const ReferenceGrid& ref,
                                 const MappingOptions& opts, MappingReport* report) {
  if (!(opts.tol > 0.0)) throw UsageError("mapping tolerance must be positive");
  if (!(opts.sor > 0.0 && opts.sor < 2.0)) throw UsageError("SOR factor must lie in (0, 2)");
  CurvilinearMesh m = transfinite_interpolation(bc, ref);
  SolveRange r(ref);
  double res = 0.0;
  std::size_t it = 0;
  for (;; ++it) {
    const Coefficients k = coefficients(m, r);
    res = residual_with(m, k, r);
    if (!std::isfinite(res)) throw NumericalError("elliptic mapping diverged (non-finite residual)");
    if (res <= opts.tol) break;
    if (it >= opts.max_iter)
      throw ConvergenceError("elliptic mapping did not converge in " + std::to_string(it) +
                                 " sweeps (residual " + io::format_double(res) + ")",
                             res, it);
    for (std::size_t j = r.j0; j < r.j1; ++j)
      for (std::size_t i = r.i0; i < r.i1; ++i) {
        const double diag = 2 * (k.a(j, i) + k.c(j, i));
        const double xn = neighbour_sum(m.x, k, r, j, i) / diag;
        const double yn = neighbour_sum(m.y, k, r, j, i) / diag;
        m.x(j, i) += opts.sor * (xn - m.x(j, i));
        m.y(j, i) += opts.sor * (yn - m.y(j, i));
      }
    sync_mirrors(m);
  }
  check_unfolded(m);
  if (report) *report = {it, res};
  return m;
}

void check_unfolded(const CurvilinearMesh& mesh) {
  const auto& g = mesh.ref;
  int sign = 0;
  auto consider = [&](double v, const std::string& where) {
    if (!std::isfinite(v) || v == 0.0)
      throw NumericalError("degenerate mesh: zero or non-finite Jacobian at " + where);
    const int s = v > 0 ? 1 : -1;
    if (sign == 0) sign = s;
    else if (s != sign) throw NumericalError("folded mesh: Jacobian changes sign at " + where);
  };
  for (std::size_t j = 0; j + 1 < g.n_eta; ++j)
    for (std::size_t i = 0; i + 1 < g.n_xi; ++i) {
      // signed area of the cell (shoelace, counter-clockwise in reference space)
      const double xs[4] = {mesh.x(j, i), mesh.x(j, i + 1), mesh.x(j + 1, i + 1), mesh.x(j + 1, i)};
      const double ys[4] = {mesh.y(j, i), mesh.y(j, i + 1), mesh.y(j + 1, i + 1), mesh.y(j + 1, i)};
      double area = 0.0;
      for (int k = 0; k < 4; ++k) area += xs[k] * ys[(k + 1) % 4] - xs[(k + 1) % 4] * ys[k];
      consider(area, "cell (" + std::to_string(j) + "," + std::to_string(i) + ")");
    }
  SolveRange r(g);
  for (std::size_t j = r.j0; j < r.j1; ++j)
    for (std::size_t i = r.i0; i < r.i1; ++i) {
      const double x_xi = mesh.x(j, r.ip(i)) - mesh.x(j, r.im(i));
      const double y_xi = mesh.y(j, r.ip(i)) - mesh.y(j, r.im(i));
      const double x_eta = mesh.x(r.jp(j), i) - mesh.x(r.jm(j), i);
      const double y_eta = mesh.y(r.jp(j), i) - mesh.y(r.jm(j), i);
      consider(x_xi * y_eta - x_eta * y_xi, "node (" + std::to_string(j) + "," + std::to_string(i) + ")");
    }
}

TransformMetrics compute_metrics(const CurvilinearMesh& mesh, double jac_floor_rel) {
  const auto& g = mesh.ref;
  TransformMetrics m;
  m.grid = g;
  m.dx_dxi = stencil::d_dxi(mesh.x, g);
  m.dx_deta = stencil::d_deta(mesh.x, g);
  m.dy_dxi = stencil::d_dxi(mesh.y, g);
  m.dy_deta = stencil::d_deta(mesh.y, g);
  m.jac = g.make_array();
  for (std::size_t k = 0; k < m.jac.size(); ++k)
    m.jac[k] = m.dx_dxi[k] * m.dy_deta[k] - m.dx_deta[k] * m.dy_dxi[k];

  std::vector<double> mags;
  for (std::size_t k : unique_nodes(g)) mags.push_back(std::abs(m.jac[k]));
  std::nth_element(mags.begin(), mags.begin() + static_cast<long>(mags.size() / 2), mags.end());
  const double floor = jac_floor_rel * mags[mags.size() / 2];
  const double ref_sign = m.jac[g.n_xi * (g.n_eta / 2) + g.n_xi / 2] >= 0 ? 1.0 : -1.0;
  for (std::size_t j = 0; j < g.n_eta; ++j)
    for (std::size_t i = 0; i < g.n_xi; ++i) {
      const double J = m.jac(j, i);
      if (!(std::abs(J) > floor) || J * ref_sign < 0)
        throw NumericalError("Jacobian determinant " + io::format_double(J) +
                             " violates floor/sign at node (" + std::to_string(j) + "," +
                             std::to_string(i) + ")");
    }

  m.xi_x = g.make_array();
  m.eta_x = g.make_array();
  m.xi_y = g.make_array();
  m.eta_y = g.make_array();
  for (std::size_t k = 0; k < m.jac.size(); ++k) {
    const double inv = 1.0 / m.jac[k];
    m.xi_x[k] = m.dy_deta[k] * inv;
    m.eta_x[k] = -m.dy_dxi[k] * inv;
    m.xi_y[k] = -m.dx_deta[k] * inv;
    m.eta_y[k] = m.dx_dxi[k] * inv;
  }
  return m;
}

std::pair<double, double> verify_inverse_laplacian(const CurvilinearMesh& mesh,
                                                   const TransformMetrics& metrics) {
  const auto& g = mesh.ref;
  stencil::PhysicalOps ops(metrics);

  // Gradient of a normalized reference coordinate. On a non-periodic axis the
  // operator is applied to the sampled coordinate itself; on a periodic axis
  // the coordinate jumps at the seam, so its (exact) constant reference
  // derivative is used instead.
  auto gradient = [&](bool along_xi) {
    const std::size_t n = along_xi ? g.n_xi : g.n_eta;
    const bool periodic = along_xi ? g.topology.periodic_xi : g.topology.periodic_eta;
    if (!periodic) {
      Array2 f = g.make_array();
      for (std::size_t j = 0; j < g.n_eta; ++j)
        for (std::size_t i = 0; i < g.n_xi; ++i)
          f(j, i) = static_cast<double>(along_xi ? i : j) / static_cast<double>(n - 1);
      return std::pair{ops.dx(f), ops.dy(f)};
    }
    const double d = 1.0 / (static_cast<double>(n - 1) * (along_xi ? g.d_xi : g.d_eta));
    Array2 gx = g.make_array(), gy = g.make_array();
    const Array2& cx = along_xi ? metrics.xi_x : metrics.eta_x;
    const Array2& cy = along_xi ? metrics.xi_y : metrics.eta_y;
    for (std::size_t k = 0; k < gx.size(); ++k) {
      gx[k] = d * cx[k];
      gy[k] = d * cy[k];
    }
    return std::pair{gx, gy};
  };

  auto rms_laplacian = [&](bool along_xi) {
    auto [gx, gy] = gradient(along_xi);
    const Array2 lx = ops.dx(gx);
    const Array2 ly = ops.dy(gy);
    const auto nodes = loss_eligible_nodes(g);
    double s = 0.0;
    for (std::size_t k : nodes) {
      const double v = lx[k] + ly[k];
      s += v * v;
    }
    return std::sqrt(s / static_cast<double>(nodes.size()));
  };
  return {rms_laplacian(true), rms_laplacian(false)};
}

Polyline sample_curve(const std::function<Point(double)>& curve, std::size_t n) {
  if (n < 2) throw UsageError("curve sampling needs at least 2 points");
  constexpr std::size_t dense = 8192;
  std::vector<double> t(dense + 1), len(dense + 1, 0.0);
  Point prev = curve(0.0);
  for (std::size_t k = 0; k <= dense; ++k) {
    t[k] = static_cast<double>(k) / dense;
    const Point p = curve(t[k]);
    if (k) len[k] = len[k - 1] + std::hypot(p.x - prev.x, p.y - prev.y);
    prev = p;
  }
  Polyline out(n);
  out.front() = curve(0.0);
  out.back() = curve(1.0);
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const double target = len.back() * static_cast<double>(k) / static_cast<double>(n - 1);
    const auto it = std::lower_bound(len.begin(), len.end(), target);
    const std::size_t hi = static_cast<std::size_t>(std::max<long>(1, it - len.begin()));
    const double span = len[hi] - len[hi - 1];
    const double frac = span > 0 ? (target - len[hi - 1]) / span : 0.0;
    out[k] = curve(t[hi - 1] + frac * (t[hi] - t[hi - 1]));
  }
  return out;
}

Polyline resample_arclength(const Polyline& line, std::size_t n) {
  if (line.size() < 2) throw UsageError("polyline needs at least 2 points");
  std::vector<double> len(line.size(), 0.0);
  for (std::size_t k = 1; k < line.size(); ++k)
    len[k] = len[k - 1] + std::hypot(line[k].x - line[k - 1].x, line[k].y - line[k - 1].y);
  auto at = [&](double s) {
    const double target = s * len.back();
    auto it = std::lower_bound(len.begin(), len.end(), target);
    const std::size_t hi =
        std::min(line.size() - 1, static_cast<std::size_t>(std::max<long>(1, it - len.begin())));
    const double span = len[hi] - len[hi - 1];
    const double f = span > 0 ? (target - len[hi - 1]) / span : 0.0;
    return Point{line[hi - 1].x + f * (line[hi].x - line[hi - 1].x),
                 line[hi - 1].y + f * (line[hi].y - line[hi - 1].y)};
  };
  Polyline out(n);
  out.front() = line.front();
  out.back() = line.back();
  for (std::size_t k = 1; k + 1 < n; ++k) out[k] = at(static_cast<double>(k) / static_cast<double>(n - 1));
  return out;
}

BoundaryCurves parse_boundary(const std::string& text) {
  BoundaryCurves bc;
  std::array<bool, 4> seen{};
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& msg) {
    throw UsageError("boundary line " + std::to_string(lineno) + ": " + msg);
  };
  auto num = [&](const std::string& t, const char* what) {
    try {
      return io::parse_double(t, what);
    } catch (const UsageError& e) {
      fail(e.what());
    }
    return 0.0;
  };
  auto count = [&](const std::string& t, const char* what) {
    try {
      return io::parse_long(t, what);
    } catch (const UsageError& e) {
      fail(e.what());
    }
    return 0L;
  };
  while (std::getline(in, line)) {
    ++lineno;
    auto tok = io::tokenize(line);
    if (tok.empty()) continue;
    if (tok[0] == "edge") {
      if (tok.size() != 3) fail("expected 'edge <index> <n_points>'");
      const long idx = count(tok[1], "edge index");
      const long np = count(tok[2], "point count");
      if (idx < 0 || idx > 3) fail("edge index must be 0-3");
      if (np < 2) fail("edge needs at least 2 points");
      if (seen[static_cast<std::size_t>(idx)]) fail("edge " + tok[1] + " given twice");
      seen[static_cast<std::size_t>(idx)] = true;
      auto& poly = bc.edges[static_cast<std::size_t>(idx)];
      for (long k = 0; k < np; ++k) {
        std::string pl;
        std::vector<std::string> pt;
        while (pt.empty()) {
          if (!std::getline(in, pl)) fail("unexpected end of file inside edge " + tok[1]);
          ++lineno;
          pt = io::tokenize(pl);
        }
        if (pt.size() != 2) fail("expected 'x y'");
        poly.push_back({num(pt[0], "x"), num(pt[1], "y")});
      }
    } else if (tok[0] == "periodic") {
      if (tok.size() != 3) fail("expected 'periodic <i> <j>'");
      bc.periodic = std::pair{parse_edge(tok[1]), parse_edge(tok[2])};
    } else {
      fail("unknown directive '" + tok[0] + "'");
    }
  }
  for (int k = 0; k < 4; ++k)
    if (!seen[static_cast<std::size_t>(k)])
      throw UsageError("boundary file is missing edge " + std::to_string(k));
  return bc;
}

std::string format_boundary(const BoundaryCurves& bc) {
  std::string s;
  for (int e = 0; e < 4; ++e) {
    s += "edge " + std::to_string(e) + " " + std::to_string(bc.edges[static_cast<std::size_t>(e)].size()) + "\n";
    for (const auto& p : bc.edges[static_cast<std::size_t>(e)])
      s += io::format_double(p.x) + " " + io::format_double(p.y) + "\n";
  }
  if (bc.periodic)
    s += "periodic " + std::to_string(static_cast<int>(bc.periodic->first)) + " " +
         std::to_string(static_cast<int>(bc.periodic->second)) + "\n";
  return s;
}

std::string format_mesh(const CurvilinearMesh& mesh) {
  std::string s = "mesh " + std::to_string(mesh.ref.n_xi) + " " + std::to_string(mesh.ref.n_eta) + "\n";
  for (std::size_t k = 0; k < mesh.x.size(); ++k)
    s += io::format_double(mesh.x[k]) + " " + io::format_double(mesh.y[k]) + "\n";
  return s;
}

CurvilinearMesh parse_mesh(const std::string& text, Topology topology) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> head;
  while (head.empty() && std::getline(in, line)) head = io::tokenize(line);
  if (head.size() != 3 || head[0] != "mesh") throw UsageError("mesh file: expected 'mesh <n_xi> <n_eta>'");
  ReferenceGrid g(static_cast<std::size_t>(io::parse_long(head[1], "n_xi")),
                  static_cast<std::size_t>(io::parse_long(head[2], "n_eta")), topology);
  CurvilinearMesh m{g.make_array(), g.make_array(), g};
  std::string a, b;
  for (std::size_t k = 0; k < m.x.size(); ++k) {
    if (!(in >> a >> b)) throw UsageError("mesh file: too few coordinates");
    m.x[k] = io::parse_double(a, "x");
    m.y[k] = io::parse_double(b, "y");
  }
  if (in >> a) throw UsageError("mesh file: trailing data");
  return m;
}

}  // namespace geopinn::meshgen

#include "geopinn/bcpad.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <map>

namespace geopinn::bcpad {

std::string kind_name(BCKind k) {
  switch (k) {
    case BCKind::dirichlet: return "dirichlet";
    case BCKind::neumann: return "neumann";
    case BCKind::periodic: return "periodic";
    case BCKind::outflow: return "outflow";
  }
  return "?";
}

EdgeCondition EdgeCondition::dirichlet(std::vector<double> v) { return {BCKind::dirichlet, std::move(v), Edge::bottom}; }
EdgeCondition EdgeCondition::neumann(std::vector<double> v) { return {BCKind::neumann, std::move(v), Edge::bottom}; }
EdgeCondition EdgeCondition::periodic(Edge partner) { return {BCKind::periodic, {}, partner}; }
EdgeCondition EdgeCondition::outflow() { return {BCKind::outflow, {}, Edge::bottom}; }

EdgeCondition constant_dirichlet(const ReferenceGrid& g, Edge e, double v) {
  return EdgeCondition::dirichlet(std::vector<double>(meshgen::edge_length(g, e), v));
}

EdgeCondition constant_neumann(const ReferenceGrid& g, Edge e, double v) {
  return EdgeCondition::neumann(std::vector<double>(meshgen::edge_length(g, e), v));
}

namespace {

constexpr Edge kEdges[] = {Edge::bottom, Edge::right, Edge::top, Edge::left};

Edge opposite(Edge e) {
  switch (e) {
    case Edge::bottom: return Edge::top;
    case Edge::top: return Edge::bottom;
    case Edge::left: return Edge::right;
    case Edge::right: return Edge::left;
  }
  return e;
}

bool axis_periodic(const ReferenceGrid& g, Edge e) {
  return meshgen::is_eta_edge(e) ? g.topology.periodic_eta : g.topology.periodic_xi;
}

}  // namespace

void ChannelBC::validate(const ReferenceGrid& g) const {
  for (Edge e : kEdges) {
    const auto& c = (*this)[e];
    const std::size_t n = meshgen::edge_length(g, e);
    switch (c.kind) {
      case BCKind::dirichlet:
      case BCKind::neumann:
        if (c.values.size() != n)
          throw UsageError("edge " + meshgen::edge_name(e) + ": " + kind_name(c.kind) + " needs " +
                           std::to_string(n) + " values, got " + std::to_string(c.values.size()));
        if (axis_periodic(g, e))
          throw UsageError("edge " + meshgen::edge_name(e) + " lies on a periodic seam");
        break;
      case BCKind::periodic:
        if (c.partner != opposite(e) || (*this)[c.partner].kind != BCKind::periodic ||
            (*this)[c.partner].partner != e)
          throw UsageError("edge " + meshgen::edge_name(e) + ": periodic partner is not paired");
        if (!axis_periodic(g, e))
          throw UsageError("edge " + meshgen::edge_name(e) + " is periodic but the grid is not");
        break;
      case BCKind::outflow:
        if (axis_periodic(g, e))
          throw UsageError("edge " + meshgen::edge_name(e) + " lies on a periodic seam");
        break;
    }
  }
}

bool ChannelBC::same_layout(const ChannelBC& o) const {
  for (int k = 0; k < 4; ++k)
    if (edges[k].kind != o.edges[k].kind || edges[k].values.size() != o.edges[k].values.size())
      return false;
  return true;
}

void apply_dirichlet(Array2& f, const ReferenceGrid& g, Edge e, const std::vector<double>& values) {
  const std::size_t n = meshgen::edge_length(g, e);
  if (values.size() != n)
    throw UsageError("dirichlet values on " + meshgen::edge_name(e) + ": expected " + std::to_string(n) +
                     ", got " + std::to_string(values.size()));
  for (std::size_t k = 0; k < n; ++k) {
    const auto [j, i] = meshgen::edge_node(g, e, k);
    f(j, i) = values[k];
  }
}

void apply_periodic(Array2& f, const ReferenceGrid& g, Edge a, Edge b) {
  if (b != opposite(a) || !axis_periodic(g, a))
    throw UsageError("edges " + meshgen::edge_name(a) + "/" + meshgen::edge_name(b) + " are not a periodic pair");
  if (meshgen::is_eta_edge(a)) {
    for (std::size_t i = 0; i < g.n_xi; ++i) f(g.n_eta - 1, i) = f(0, i);
  } else {
    for (std::size_t j = 0; j < g.n_eta; ++j) f(j, g.n_xi - 1) = f(j, 0);
  }
}

meshgen::Point outward_normal(const TransformMetrics& m, Edge e, std::size_t k) {
  const auto [j, i] = meshgen::edge_node(m.grid, e, k);
  const bool eta_edge = meshgen::is_eta_edge(e);
  const double gx = eta_edge ? m.eta_x(j, i) : m.xi_x(j, i);
  const double gy = eta_edge ? m.eta_y(j, i) : m.xi_y(j, i);
  const double len = std::hypot(gx, gy);
  if (!(len > 0.0) || !std::isfinite(len))
    throw NumericalError("degenerate normal on edge " + meshgen::edge_name(e) + " at node (" +
                         std::to_string(j) + ", " + std::to_string(i) + ")");
  const double s = (e == Edge::bottom || e == Edge::left) ? -1.0 : 1.0;
  return {s * gx / len, s * gy / len};
}

std::vector<double> normal_derivative(const Array2& f, const TransformMetrics& m, Edge e) {
  const Array2 fx = stencil::d_dx(f, m);
  const Array2 fy = stencil::d_dy(f, m);
  const std::size_t n = meshgen::edge_length(m.grid, e);
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto [j, i] = meshgen::edge_node(m.grid, e, k);
    const auto nrm = outward_normal(m, e, k);
    out[k] = nrm.x * fx(j, i) + nrm.y * fy(j, i);
  }
  return out;
}

/// Linear system coupling the Neumann-owned nodes of a channel: for each row,
/// sum(A[r][c] u[c]) + sum(known weights * f) = flux[r].
struct NeumannSystem {
  std::vector<std::size_t> unknown;
  std::vector<std::vector<std::pair<std::size_t, double>>> known;
  Eigen::MatrixXd inverse;

  NeumannSystem(const TransformMetrics& m, const std::vector<Enforcer::Owned>& nodes) {
    const auto& g = m.grid;
    const stencil::DerivativeOps ops(g);
    const std::size_t n = nodes.size();
    std::map<std::size_t, std::size_t> column;
    for (std::size_t r = 0; r < n; ++r) {
      unknown.push_back(nodes[r].node);
      column[nodes[r].node] = r;
    }
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    known.resize(n);
    for (std::size_t r = 0; r < n; ++r) {
      const std::size_t j = nodes[r].node / g.n_xi, i = nodes[r].node % g.n_xi;
      const auto nrm = outward_normal(m, nodes[r].edge, nodes[r].k);
      const double wa = nrm.x * m.xi_x(j, i) + nrm.y * m.xi_y(j, i);
      const double wb = nrm.x * m.eta_x(j, i) + nrm.y * m.eta_y(j, i);
      std::map<std::size_t, double> row;
      const auto& ex = ops.xi.at(i);
      for (int t = 0; t < ex.count; ++t) row[j * g.n_xi + ex.index[t]] += wa * ex.weight[t];
      const auto& ee = ops.eta.at(j);
      for (int t = 0; t < ee.count; ++t) row[ee.index[t] * g.n_xi + i] += wb * ee.weight[t];
      for (const auto& [node, w] : row) {
        if (auto it = column.find(node); it != column.end())
          a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(it->second)) += w;
        else
          known[r].emplace_back(node, w);
      }
    }
    if (n == 0) return;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    const double rc = lu.rcond();
    if (!(rc > 1e-13))
      throw NumericalError("Neumann boundary system is singular (rcond " + std::to_string(rc) + ")");
    inverse = lu.inverse();
  }

  void solve(Array2& f, const std::vector<double>& flux) const {
    const std::size_t n = unknown.size();
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < n; ++r) {
      double s = flux[r];
      for (const auto& [node, w] : known[r]) s -= w * f[node];
      rhs[static_cast<Eigen::Index>(r)] = s;
    }
    const Eigen::VectorXd u = inverse * rhs;
    for (std::size_t r = 0; r < n; ++r) f[unknown[r]] = u[static_cast<Eigen::Index>(r)];
  }

  void adjoint(Array2& grad) const {
    const std::size_t n = unknown.size();
    Eigen::VectorXd gu(static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < n; ++r) {
      gu[static_cast<Eigen::Index>(r)] = grad[unknown[r]];
      grad[unknown[r]] = 0.0;
    }
    const Eigen::VectorXd lambda = inverse.transpose() * gu;
    for (std::size_t r = 0; r < n; ++r)
      for (const auto& [node, w] : known[r]) grad[node] -= w * lambda[static_cast<Eigen::Index>(r)];
  }
};

void apply_neumann(Array2& f, Edge e, const std::vector<double>& flux, const TransformMetrics& m) {
  const auto& g = m.grid;
  const std::size_t n = meshgen::edge_length(g, e);
  if (flux.size() != n)
    throw UsageError("neumann flux on " + meshgen::edge_name(e) + ": expected " + std::to_string(n) +
                     ", got " + std::to_string(flux.size()));
  if (axis_periodic(g, e)) throw UsageError("edge " + meshgen::edge_name(e) + " lies on a periodic seam");
  std::vector<Enforcer::Owned> nodes;
  std::vector<double> rhs;
  for (std::size_t k = 0; k < n; ++k) {
    const auto [j, i] = meshgen::edge_node(g, e, k);
    if (classify_node(g, j, i) == NodeClass::periodic_mirror) continue;
    nodes.push_back({j * g.n_xi + i, e, k});
    rhs.push_back(flux[k]);
  }
  NeumannSystem(m, nodes).solve(f, rhs);
}

Enforcer::Enforcer(const ChannelBC& bc, const TransformMetrics& m) : bc_(bc), grid_(m.grid), metrics_(&m) {
  const auto& g = grid_;
  bc.validate(g);
  for (std::size_t j = 0; j < g.n_eta; ++j) {
    for (std::size_t i = 0; i < g.n_xi; ++i) {
      const std::size_t node = j * g.n_xi + i;
      const NodeClass c = classify_node(g, j, i);
      if (c == NodeClass::periodic_mirror) {
        const std::size_t oj = (g.topology.periodic_eta && j == g.n_eta - 1) ? 0 : j;
        const std::size_t oi = (g.topology.periodic_xi && i == g.n_xi - 1) ? 0 : i;
        mirrors_.emplace_back(node, oj * g.n_xi + oi);
        continue;
      }
      if (c != NodeClass::boundary) continue;
      // candidate edges through this node, bottom/top first
      std::vector<std::pair<Edge, std::size_t>> cand;
      if (j == 0) cand.emplace_back(Edge::bottom, i);
      if (j == g.n_eta - 1) cand.emplace_back(Edge::top, i);
      if (i == 0) cand.emplace_back(Edge::left, j);
      if (i == g.n_xi - 1) cand.emplace_back(Edge::right, j);
      std::erase_if(cand, [&](const auto& p) { return bc[p.first].kind == BCKind::periodic; });
      if (cand.empty()) continue;
      auto pick = cand.front();
      for (const auto& p : cand)
        if (bc[p.first].kind == BCKind::dirichlet) {
          pick = p;
          break;
        }
      const Owned o{node, pick.first, pick.second};
      if (bc[pick.first].kind == BCKind::dirichlet) dirichlet_.push_back(o);
      else neumann_.push_back(o);
    }
  }
  system_ = std::make_shared<const NeumannSystem>(m, neumann_);
}

void Enforcer::apply(Array2& f, const ChannelBC& bc) const {
  if (!f.same_shape(grid_.make_array())) throw UsageError("field shape does not match the grid");
  if (&bc != &bc_ && !bc.same_layout(bc_)) throw UsageError("boundary values do not match the enforcer layout");
  for (const auto& o : dirichlet_) f[o.node] = bc[o.edge].values[o.k];
  if (!neumann_.empty()) {
    std::vector<double> flux(neumann_.size());
    for (std::size_t r = 0; r < neumann_.size(); ++r) {
      const auto& c = bc[neumann_[r].edge];
      flux[r] = c.kind == BCKind::outflow ? 0.0 : c.values[neumann_[r].k];
    }
    system_->solve(f, flux);
  }
  for (const auto& [copy, owner] : mirrors_) f[copy] = f[owner];
}

void Enforcer::backward(Array2& grad) const {
  for (auto it = mirrors_.rbegin(); it != mirrors_.rend(); ++it) {
    grad[it->second] += grad[it->first];
    grad[it->first] = 0.0;
  }
  if (!neumann_.empty()) system_->adjoint(grad);
  for (const auto& o : dirichlet_) grad[o.node] = 0.0;
}

double Enforcer::neumann_residual(const Array2& f, const ChannelBC& bc) const {
  double worst = 0.0;
  std::array<std::vector<double>, 4> nd;
  for (const auto& o : neumann_) {
    auto& d = nd[static_cast<int>(o.edge)];
    if (d.empty()) d = normal_derivative(f, *metrics_, o.edge);
    const auto& c = bc[o.edge];
    const double flux = c.kind == BCKind::outflow ? 0.0 : c.values[o.k];
    worst = std::max(worst, std::abs(d[o.k] - flux));
  }
  return worst;
}

}  // namespace geopinn::bcpad

#include "geopinn/grid.hpp"

namespace geopinn {

ReferenceGrid::ReferenceGrid(std::size_t nxi, std::size_t neta, Topology topo, double dxi,
                             double deta)
    : n_xi(nxi), n_eta(neta), d_xi(dxi), d_eta(deta), topology(topo) {
  if (nxi < 5 || neta < 5)
    throw UsageError("reference grid needs at least 5 nodes per axis, got " +
                     std::to_string(nxi) + "x" + std::to_string(neta));
  if (!(dxi > 0.0) || !(deta > 0.0)) throw UsageError("reference spacings must be positive");
}

NodeClass classify_node(const ReferenceGrid& g, std::size_t j, std::size_t i) {
  const auto& t = g.topology;
  if ((t.periodic_xi && i == g.n_xi - 1) || (t.periodic_eta && j == g.n_eta - 1))
    return NodeClass::periodic_mirror;
  const bool on_xi_edge = !t.periodic_xi && (i == 0 || i == g.n_xi - 1);
  const bool on_eta_edge = !t.periodic_eta && (j == 0 || j == g.n_eta - 1);
  if (on_xi_edge || on_eta_edge) return NodeClass::boundary;
  const bool near_xi = !t.periodic_xi && (i == 1 || i == g.n_xi - 2);
  const bool near_eta = !t.periodic_eta && (j == 1 || j == g.n_eta - 2);
  if (near_xi || near_eta) return NodeClass::near_boundary;
  return NodeClass::interior;
}

std::vector<std::size_t> loss_eligible_nodes(const ReferenceGrid& g) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < g.n_eta; ++j)
    for (std::size_t i = 0; i < g.n_xi; ++i) {
      const auto c = classify_node(g, j, i);
      if (c == NodeClass::interior || c == NodeClass::near_boundary) out.push_back(j * g.n_xi + i);
    }
  return out;
}

std::vector<std::size_t> unique_nodes(const ReferenceGrid& g) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < g.n_eta; ++j)
    for (std::size_t i = 0; i < g.n_xi; ++i)
      if (classify_node(g, j, i) != NodeClass::periodic_mirror) out.push_back(j * g.n_xi + i);
  return out;
}

}  // namespace geopinn

#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "geopinn/grid.hpp"
#include "geopinn/meshgen.hpp"
#include "geopinn/stencil.hpp"

namespace geopinn::bcpad {

using meshgen::Edge;

enum class BCKind { dirichlet, neumann, periodic, outflow };

std::string kind_name(BCKind k);

/// Condition on one edge of one variable. `values` holds one entry per edge
/// node (Dirichlet value or prescribed outward normal derivative); empty for
/// periodic and outflow.
struct EdgeCondition {
  BCKind kind = BCKind::dirichlet;
  std::vector<double> values;
  Edge partner = Edge::bottom;

  static EdgeCondition dirichlet(std::vector<double> v);
  static EdgeCondition neumann(std::vector<double> v);
  static EdgeCondition periodic(Edge partner);
  static EdgeCondition outflow();
};

/// Boundary conditions of one solution channel.
struct ChannelBC {
  std::array<EdgeCondition, 4> edges;

  EdgeCondition& operator[](Edge e) { return edges[static_cast<int>(e)]; }
  const EdgeCondition& operator[](Edge e) const { return edges[static_cast<int>(e)]; }
  /// Throws UsageError on length mismatches, unpaired periodic edges, or a
  /// periodic pairing that disagrees with the grid topology.
  void validate(const ReferenceGrid& g) const;
  /// True if both specs have the same condition kinds on every edge.
  bool same_layout(const ChannelBC& o) const;
};

/// Uniform-value helpers.
EdgeCondition constant_dirichlet(const ReferenceGrid& g, Edge e, double v);
EdgeCondition constant_neumann(const ReferenceGrid& g, Edge e, double v);

/// Overwrites the edge nodes with `values`.
void apply_dirichlet(Array2& f, const ReferenceGrid& g, Edge e, const std::vector<double>& values);

/// Sets the nodes of one edge so the outward normal derivative, evaluated with
/// the module stencils and metrics, equals `flux` at each of them. All other
/// nodes are treated as known. Seam copies of a periodic axis are skipped.
void apply_neumann(Array2& f, Edge e, const std::vector<double>& flux, const TransformMetrics& m);

/// Copies the owning seam onto its duplicate for a periodic edge pair.
void apply_periodic(Array2& f, const ReferenceGrid& g, Edge a, Edge b);

/// Unit outward normal at node k of an edge.
meshgen::Point outward_normal(const TransformMetrics& m, Edge e, std::size_t k);

/// n . grad f at every node of an edge, computed from the full physical
/// derivative fields.
std::vector<double> normal_derivative(const Array2& f, const TransformMetrics& m, Edge e);

struct NeumannSystem;

/// Hard enforcement of a ChannelBC: Dirichlet overwrite, then the coupled
/// Neumann solve, then periodic seam copy. The map from raw to enforced field
/// is affine, and backward() applies the transpose of its linear part.
///
/// Corner ownership: Dirichlet if either adjacent edge is Dirichlet (the
/// bottom/top edge value when both are); otherwise the bottom/top condition,
/// unless that edge is periodic.
class Enforcer {
 public:
  Enforcer(const ChannelBC& bc, const TransformMetrics& m);

  void apply(Array2& f) const { apply(f, bc_); }
  /// Enforce using the values of `bc`, which must share this enforcer's layout.
  void apply(Array2& f, const ChannelBC& bc) const;
  /// In place: gradient w.r.t. the enforced field -> gradient w.r.t. the raw field.
  void backward(Array2& grad) const;

  /// Flat indices of Dirichlet-owned nodes and their edge/position.
  struct Owned {
    std::size_t node;
    Edge edge;
    std::size_t k;
  };
  const std::vector<Owned>& dirichlet_nodes() const { return dirichlet_; }
  const std::vector<Owned>& neumann_nodes() const { return neumann_; }
  const ChannelBC& spec() const { return bc_; }

  /// max |n . grad f - flux| over Neumann-owned nodes, evaluated with
  /// normal_derivative.
  double neumann_residual(const Array2& f, const ChannelBC& bc) const;
  double neumann_residual(const Array2& f) const { return neumann_residual(f, bc_); }

 private:
  ChannelBC bc_;
  ReferenceGrid grid_;
  const TransformMetrics* metrics_;
  std::vector<Owned> dirichlet_;
  std::vector<Owned> neumann_;
  std::vector<std::pair<std::size_t, std::size_t>> mirrors_;  // (copy, owner)
  std::shared_ptr<const NeumannSystem> system_;
};

}  // namespace geopinn::bcpad

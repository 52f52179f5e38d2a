#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "geopinn/grid.hpp"
#include "geopinn/stencil.hpp"

namespace geopinn::meshgen {

/// Reference-rectangle edges. Every edge polyline runs in the direction of
/// increasing reference coordinate: bottom/top along xi, left/right along eta.
enum class Edge : int { bottom = 0, right = 1, top = 2, left = 3 };

std::string edge_name(Edge e);
Edge parse_edge(const std::string& s);
/// Number of lattice nodes on an edge.
std::size_t edge_length(const ReferenceGrid& g, Edge e);
/// (row, col) of the k-th node along an edge.
std::pair<std::size_t, std::size_t> edge_node(const ReferenceGrid& g, Edge e, std::size_t k);
bool is_eta_edge(Edge e);  // bottom or top (constant eta)

struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point&) const = default;
};
using Polyline = std::vector<Point>;

/// Physical boundary of the domain, one polyline per reference edge.
struct BoundaryCurves {
  std::array<Polyline, 4> edges;
  /// Two opposite edges identified as the cut of a doubly-connected domain.
  std::optional<std::pair<Edge, Edge>> periodic;

  const Polyline& edge(Edge e) const { return edges[static_cast<int>(e)]; }
  Polyline& edge(Edge e) { return edges[static_cast<int>(e)]; }
  Topology topology() const;
  /// Reference grid implied by the edge node counts.
  ReferenceGrid reference_grid() const;
  /// Throws UsageError if node counts, corners or periodic pairing are inconsistent.
  void validate(const ReferenceGrid& g) const;
};

struct CurvilinearMesh {
  Array2 x;
  Array2 y;
  ReferenceGrid ref;
};

struct MappingOptions {
  double tol = 1e-10;
  std::size_t max_iter = 200000;
  double sor = 1.0;
};

struct MappingReport {
  std::size_t iterations = 0;
  double residual = 0.0;
};

/// Thrown when the elliptic iteration stalls; carries the final residual.
class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, double residual, std::size_t iterations)
      : NumericalError(what), residual(residual), iterations(iterations) {}
  double residual;
  std::size_t iterations;
};

/// Solves the quasi-linear elliptic system
///   alpha x_xixi - 2 beta x_xieta + gamma x_etaeta = 0 (and likewise for y)
/// by Gauss-Seidel/SOR with alpha, beta, gamma frozen per sweep, starting from
/// transfinite interpolation of the boundary. Converged when the maximum nodal
/// residual, normalized by the diagonal coefficient, is below `opts.tol`.
CurvilinearMesh generate_mapping(const BoundaryCurves& bc, const ReferenceGrid& ref,
                                 const MappingOptions& opts = {},
                                 MappingReport* report = nullptr);

/// Transfinite (bilinear blending) interpolation of the boundary curves.
CurvilinearMesh transfinite_interpolation(const BoundaryCurves& bc, const ReferenceGrid& ref);

/// Max normalized residual of the discretized elliptic system over solved nodes.
double mapping_residual(const CurvilinearMesh& mesh);

/// Throws NumericalError if any cell corner has a Jacobian sign differing from the rest.
void check_unfolded(const CurvilinearMesh& mesh);

/// Metric terms from the stencil-module derivative operators.
/// `jac_floor_rel` scales the median |J| to give the rejection floor.
TransformMetrics compute_metrics(const CurvilinearMesh& mesh, double jac_floor_rel = 1e-12);

/// RMS over non-boundary nodes of the discrete Laplacians of the normalized
/// reference coordinates xi/(n_xi-1) and eta/(n_eta-1) in physical space.
/// Both vanish for an exact elliptic mapping.
std::pair<double, double> verify_inverse_laplacian(const CurvilinearMesh& mesh,
                                                   const TransformMetrics& metrics);

/// Parametric curve sampled uniformly in arc length; end points are exact.
Polyline sample_curve(const std::function<Point(double)>& curve, std::size_t n);
/// Arc-length resampling of a polyline to n points.
Polyline resample_arclength(const Polyline& line, std::size_t n);

// Boundary file: blocks `edge <index> <n_points>` followed by `x y` lines;
// optional `periodic <i> <j>`.
BoundaryCurves parse_boundary(const std::string& text);
std::string format_boundary(const BoundaryCurves& bc);

// Mesh file: `mesh <n_xi> <n_eta>` followed by row-major `x y` pairs.
std::string format_mesh(const CurvilinearMesh& mesh);
CurvilinearMesh parse_mesh(const std::string& text, Topology topology = {});

}  // namespace geopinn::meshgen

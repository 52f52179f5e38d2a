#pragma once

#include <cstdint>
#include <vector>

#include "geopinn/grid.hpp"
#include "geopinn/meshgen.hpp"

namespace geopinn::gpfield {

struct GPConfig {
  double sigma0 = 100.0;
  double length = 0.5;
  std::size_t k = 10;
  void validate(std::size_t n_nodes) const;
};

/// Dense symmetric matrix, row-major.
struct SymMatrix {
  std::size_t n = 0;
  std::vector<double> a;
  double operator()(std::size_t i, std::size_t j) const { return a[i * n + j]; }
  double& operator()(std::size_t i, std::size_t j) { return a[i * n + j]; }
};

struct KLBasis {
  ReferenceGrid grid;
  std::vector<double> eigenvalues;  // leading k, descending
  std::vector<Array2> modes;        // unit nodal 2-norm
  std::vector<double> spectrum;     // all eigenvalues, descending
  double trace = 0.0;
  double energy_fraction = 0.0;     // sum of leading k / trace
};

/// K_ij = sigma0^2 exp(-|x_i - x_j|^2 / (2 l^2)) over all mesh nodes in
/// row-major node order, using physical coordinates.
SymMatrix build_kernel_matrix(const meshgen::CurvilinearMesh& mesh, const GPConfig& cfg);

/// Leading k eigenpairs of K by a full symmetric eigensolver. `grid` gives the
/// mode shape and must have K.n nodes.
KLBasis kl_decompose(const SymMatrix& K, std::size_t k, const ReferenceGrid& grid);

/// f = sum_i sqrt(lambda_i) phi_i omega_i.
Array2 sample_source(const KLBasis& basis, const std::vector<double>& omega);
/// k independent standard normal draws from a seeded stream.
std::vector<double> draw_omega(std::size_t k, std::uint64_t seed);
Array2 sample_source(const KLBasis& basis, std::uint64_t seed);

/// Modes as a multi-channel field, named mode0, mode1, ...
GridField modes_field(const KLBasis& basis);

}  // namespace geopinn::gpfield

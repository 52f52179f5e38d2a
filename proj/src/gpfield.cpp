#include "geopinn/gpfield.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <random>

namespace geopinn::gpfield {

void GPConfig::validate(std::size_t n_nodes) const {
  if (!(sigma0 > 0.0)) throw UsageError("sigma0 must be positive");
  if (!(length > 0.0)) throw UsageError("length scale must be positive");
  if (k < 1 || k > n_nodes)
    throw UsageError("truncation k must lie in [1, " + std::to_string(n_nodes) + "], got " + std::to_string(k));
}

SymMatrix build_kernel_matrix(const meshgen::CurvilinearMesh& mesh, const GPConfig& cfg) {
  const std::size_t n = mesh.x.size();
  cfg.validate(n);
  SymMatrix K{n, std::vector<double>(n * n)};
  const double s2 = cfg.sigma0 * cfg.sigma0;
  const double inv = 1.0 / (2.0 * cfg.length * cfg.length);
  for (std::size_t i = 0; i < n; ++i) {
    K(i, i) = s2;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = mesh.x[i] - mesh.x[j], dy = mesh.y[i] - mesh.y[j];
      const double v = s2 * std::exp(-(dx * dx + dy * dy) * inv);
      K(i, j) = v;
      K(j, i) = v;
    }
  }
  return K;
}

KLBasis kl_decompose(const SymMatrix& K, std::size_t k, const ReferenceGrid& grid) {
  const std::size_t n = K.n;
  if (grid.n_xi * grid.n_eta != n) throw UsageError("grid node count does not match the kernel matrix");
  if (k < 1 || k > n) throw UsageError("truncation k exceeds the matrix size");
  const auto N = static_cast<Eigen::Index>(n);
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(K.a.data(), N, N);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  // Eigen returns ascending order
  const auto& vals = es.eigenvalues();
  const auto& vecs = es.eigenvectors();
  KLBasis b;
  b.grid = grid;
  for (Eigen::Index q = N - 1; q >= 0; --q) b.spectrum.push_back(vals[q]);
  for (std::size_t q = 0; q < n; ++q) b.trace += K(q, q);
  double top = 0.0;
  for (std::size_t q = 0; q < k; ++q) {
    const double lam = b.spectrum[q];
    if (!(lam > 1e-12 * b.spectrum[0]))
      throw NumericalError("truncation k = " + std::to_string(k) + " exceeds the numerical rank of the kernel");
    b.eigenvalues.push_back(lam);
    top += lam;
    Array2 mode = grid.make_array();
    const auto col = vecs.col(N - 1 - static_cast<Eigen::Index>(q));
    // fix the sign so the largest-magnitude entry is positive
    Eigen::Index arg = 0;
    col.cwiseAbs().maxCoeff(&arg);
    const double sgn = col[arg] < 0.0 ? -1.0 : 1.0;
    for (std::size_t p = 0; p < n; ++p) mode[p] = sgn * col[static_cast<Eigen::Index>(p)];
    b.modes.push_back(std::move(mode));
  }
  b.energy_fraction = top / b.trace;
  return b;
}

Array2 sample_source(const KLBasis& basis, const std::vector<double>& omega) {
  if (omega.size() != basis.eigenvalues.size())
    throw UsageError("omega has " + std::to_string(omega.size()) + " entries, basis has " +
                     std::to_string(basis.eigenvalues.size()) + " modes");
  Array2 f = basis.grid.make_array();
  for (std::size_t q = 0; q < omega.size(); ++q) {
    const double c = std::sqrt(basis.eigenvalues[q]) * omega[q];
    const Array2& phi = basis.modes[q];
    for (std::size_t p = 0; p < f.size(); ++p) f[p] += c * phi[p];
  }
  return f;
}

std::vector<double> draw_omega(std::size_t k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<double> w(k);
  for (double& v : w) v = n01(rng);
  return w;
}

Array2 sample_source(const KLBasis& basis, std::uint64_t seed) {
  return sample_source(basis, draw_omega(basis.eigenvalues.size(), seed));
}

GridField modes_field(const KLBasis& basis) {
  GridField f;
  for (std::size_t q = 0; q < basis.modes.size(); ++q) f.add("mode" + std::to_string(q), basis.modes[q]);
  return f;
}

}  // namespace geopinn::gpfield

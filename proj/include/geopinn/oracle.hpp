#pragma once

#include <string>

#include "geopinn/bcpad.hpp"
#include "geopinn/meshgen.hpp"

namespace geopinn::oracle {

struct OracleOptions {
  double tol = 1e-10;  // max nodal residual relative to the source/BC scale
  std::size_t max_iter = 1000000;
  double sor = 0.0;    // 0 picks 2 / (1 + sin(pi / n))
};

struct OracleSolution {
  Array2 field;
  std::size_t iterations = 0;
  double residual = 0.0;  // final max nodal residual, absolute
  double scale = 0.0;     // residual scale used by the stopping test
};

/// Second-order finite-difference solver of lap T + f = 0 on the mapped
/// grid. Metrics and stencils are built here from central differences of the
/// mesh coordinates; nothing is shared with the training operators. Only
/// Dirichlet and periodic edges are accepted.
OracleSolution solve_heat(const meshgen::CurvilinearMesh& mesh, const bcpad::ChannelBC& bc,
                          const OracleOptions& opt = {});
OracleSolution solve_poisson(const meshgen::CurvilinearMesh& mesh, const bcpad::ChannelBC& bc, const Array2& f,
                             const OracleOptions& opt = {});

/// lap T + f of the oracle's discrete operator at the solved nodes, zero
/// elsewhere.
Array2 discrete_residual(const meshgen::CurvilinearMesh& mesh, const Array2& T, const Array2* f);

inline const char* scheme_name() { return "fd2-chain-rule-9pt"; }

}  // namespace geopinn::oracle

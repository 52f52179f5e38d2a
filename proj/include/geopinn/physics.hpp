#pragma once

#include <string>
#include <vector>

#include "geopinn/grid.hpp"
#include "geopinn/stencil.hpp"

namespace geopinn::physics {

enum class Pde { heat, ns, poisson };

std::string pde_name(Pde p);
Pde parse_pde(const std::string& s);
/// Solution variables emitted by the network, in channel order.
std::vector<std::string> solution_variables(Pde p);
/// Residual channel names, in channel order.
std::vector<std::string> residual_names(Pde p);

struct FluidParams {
  double nu = 0.05;
  double inlet_u = 0.0, inlet_v = 1.0;
  /// Diagnostic only: |inlet| * length / nu.
  double reynolds(double length) const;
};

// Residual fields are zero outside the loss-eligible nodes.

/// lap T.
GridField heat_residual(const Array2& T, const stencil::PhysicalOps& ops);
/// lap T + f.
GridField poisson_residual(const Array2& T, const Array2& f, const stencil::PhysicalOps& ops);
/// continuity, x-momentum, y-momentum with central convection.
GridField ns_residual(const Array2& u, const Array2& v, const Array2& p, const FluidParams& fp,
                      const stencil::PhysicalOps& ops);

/// Residual for a solution GridField ordered as solution_variables(pde).
/// `source` is required for Poisson and ignored otherwise.
GridField residual(Pde pde, const GridField& sol, const Array2* source, const FluidParams& fp,
                   const stencil::PhysicalOps& ops);

/// Transpose of the residual's Jacobian w.r.t. the solution channels, applied
/// to `grad_res`; returns d(loss)/d(solution).
GridField residual_adjoint(Pde pde, const GridField& sol, const GridField& grad_res, const FluidParams& fp,
                           const stencil::PhysicalOps& ops);

struct LossValue {
  double total = 0.0;
  std::vector<double> per_channel;  // weighted mean squares, averaged over the batch
};

/// sum_c w_c * mean over eligible nodes of r_c^2, averaged over the batch.
/// Empty `weights` means 1 for every channel.
LossValue physics_loss(const std::vector<GridField>& batch, const ReferenceGrid& g,
                       const std::vector<double>& weights = {});

/// d(physics_loss)/d(residual) for one member of a batch of `batch_size`.
GridField physics_loss_grad(const GridField& res, const ReferenceGrid& g, std::size_t batch_size,
                            const std::vector<double>& weights = {});

/// sqrt(||pred - ref|| / ||ref||) with L2 norms over unique nodes.
double relative_error(const Array2& pred, const Array2& ref, const ReferenceGrid& g);
/// ||pred - ref|| / ||ref||, logged alongside for cross-checking.
double relative_error_ratio(const Array2& pred, const Array2& ref, const ReferenceGrid& g);

}  // namespace geopinn::physics

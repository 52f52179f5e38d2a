#pragma once

#include <array>
#include <string>
#include <vector>

#include "geopinn/grid.hpp"

namespace geopinn {

/// Precomputed mapping derivatives. Fields are in physical length per unit of
/// reference coordinate; the inverse metrics xi_x = y_eta/J, eta_x = -y_xi/J,
/// xi_y = -x_eta/J, eta_y = x_xi/J are cached for the physical operators.
struct TransformMetrics {
  ReferenceGrid grid;
  Array2 dx_dxi, dx_deta, dy_dxi, dy_deta;
  Array2 jac;
  Array2 xi_x, eta_x, xi_y, eta_y;
};

namespace stencil {

enum class Axis { xi, eta };

struct Tap {
  int offset;
  double weight;
};

/// A 1-D finite-difference stencil for a first derivative at unit spacing.
struct Stencil1D {
  std::vector<Tap> taps;
  int order;
  std::string name;
};

/// Fourth-order central difference: (-u[+2] + 8u[+1] - 8u[-1] + u[-2]) / 12.
const Stencil1D& central4();
/// Third-order one-sided forward difference: (-11u[0] + 18u[1] - 9u[2] + 2u[3]) / 6.
const Stencil1D& forward3();
/// Mirror image of forward3 for the high-index boundary.
const Stencil1D& backward3();

/// Tap weights of the derivative along one axis, resolved to absolute indices.
/// Index i < 2 uses forward3, i > n-3 uses backward3, otherwise central4.
/// A periodic axis uses central4 everywhere with wrap-around modulo n-1.
class AxisOperator {
 public:
  struct Entry {
    std::array<std::size_t, 4> index{};
    std::array<double, 4> weight{};
    int count = 0;
  };

  AxisOperator() = default;
  AxisOperator(std::size_t n, bool periodic, double spacing);

  std::size_t size() const { return entries_.size(); }
  bool periodic() const { return periodic_; }
  const Entry& at(std::size_t i) const { return entries_[i]; }

 private:
  std::vector<Entry> entries_;
  bool periodic_ = false;
};

/// Both reference-axis operators for one grid.
struct DerivativeOps {
  AxisOperator xi;
  AxisOperator eta;
  explicit DerivativeOps(const ReferenceGrid& g);
};

Array2 d_dxi(const Array2& f, const ReferenceGrid& g);
Array2 d_deta(const Array2& f, const ReferenceGrid& g);
Array2 d_dxi_adjoint(const Array2& g_out, const ReferenceGrid& g);
Array2 d_deta_adjoint(const Array2& g_out, const ReferenceGrid& g);

/// Physical x-derivative (1/J)(f_xi y_eta - f_eta y_xi).
Array2 d_dx(const Array2& f, const TransformMetrics& m);
/// Physical y-derivative (1/J)(f_eta x_xi - f_xi x_eta).
Array2 d_dy(const Array2& f, const TransformMetrics& m);
Array2 d_dx_adjoint(const Array2& g_out, const TransformMetrics& m);
Array2 d_dy_adjoint(const Array2& g_out, const TransformMetrics& m);

/// d_dx(d_dx(f)) + d_dy(d_dy(f)); second derivatives come from repeated
/// first-derivative application, never from a chain-rule expansion.
Array2 laplacian(const Array2& f, const TransformMetrics& m);
Array2 laplacian_adjoint(const Array2& g_out, const TransformMetrics& m);

/// Reusable operator set bound to one metrics object, avoiding table rebuilds
/// inside training loops.
class PhysicalOps {
 public:
  explicit PhysicalOps(const TransformMetrics& m);

  Array2 dxi(const Array2& f) const;
  Array2 deta(const Array2& f) const;
  Array2 dxi_t(const Array2& g) const;
  Array2 deta_t(const Array2& g) const;
  Array2 dx(const Array2& f) const;
  Array2 dy(const Array2& f) const;
  Array2 dx_t(const Array2& g) const;
  Array2 dy_t(const Array2& g) const;
  Array2 lap(const Array2& f) const;
  Array2 lap_t(const Array2& g) const;

  const TransformMetrics& metrics() const { return *m_; }
  const DerivativeOps& ops() const { return ops_; }

 private:
  const TransformMetrics* m_;
  DerivativeOps ops_;
};

/// Human-readable dump of the stencil tables.
std::string dump_tables();

}  // namespace stencil
}  // namespace geopinn

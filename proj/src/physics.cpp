#include "geopinn/physics.hpp"

#include <cmath>

namespace geopinn::physics {

std::string pde_name(Pde p) {
  switch (p) {
    case Pde::heat: return "heat";
    case Pde::ns: return "ns";
    case Pde::poisson: return "poisson";
  }
  return "?";
}

Pde parse_pde(const std::string& s) {
  if (s == "heat") return Pde::heat;
  if (s == "ns") return Pde::ns;
  if (s == "poisson") return Pde::poisson;
  throw UsageError("unknown pde '" + s + "' (heat|ns|poisson)");
}

std::vector<std::string> solution_variables(Pde p) {
  if (p == Pde::ns) return {"u", "v", "p"};
  return {"T"};
}

std::vector<std::string> residual_names(Pde p) {
  switch (p) {
    case Pde::heat: return {"laplace"};
    case Pde::ns: return {"continuity", "momentum_x", "momentum_y"};
    case Pde::poisson: return {"poisson"};
  }
  return {};
}

double FluidParams::reynolds(double length) const { return std::hypot(inlet_u, inlet_v) * length / nu; }

namespace {

/// Zero everything outside the loss-eligible nodes.
void mask(Array2& r, const ReferenceGrid& g) {
  Array2 out = g.make_array();
  for (std::size_t k : loss_eligible_nodes(g)) out[k] = r[k];
  r = std::move(out);
}

Array2 mul(const Array2& a, const Array2& b) {
  Array2 c = a;
  for (std::size_t k = 0; k < c.size(); ++k) c[k] *= b[k];
  return c;
}

void axpy(Array2& y, double a, const Array2& x) {
  for (std::size_t k = 0; k < y.size(); ++k) y[k] += a * x[k];
}

void check_shape(const Array2& f, const ReferenceGrid& g, const char* name) {
  if (f.rows() != g.n_eta || f.cols() != g.n_xi)
    throw UsageError(std::string("field '") + name + "' does not match the grid");
}

}  // namespace

GridField heat_residual(const Array2& T, const stencil::PhysicalOps& ops) {
  const auto& g = ops.metrics().grid;
  check_shape(T, g, "T");
  Array2 r = ops.lap(T);
  mask(r, g);
  GridField out;
  out.add("laplace", std::move(r));
  return out;
}

GridField poisson_residual(const Array2& T, const Array2& f, const stencil::PhysicalOps& ops) {
  const auto& g = ops.metrics().grid;
  check_shape(T, g, "T");
  check_shape(f, g, "f");
  Array2 r = ops.lap(T);
  axpy(r, 1.0, f);
  mask(r, g);
  GridField out;
  out.add("poisson", std::move(r));
  return out;
}

GridField ns_residual(const Array2& u, const Array2& v, const Array2& p, const FluidParams& fp,
                      const stencil::PhysicalOps& ops) {
  const auto& g = ops.metrics().grid;
  check_shape(u, g, "u");
  check_shape(v, g, "v");
  check_shape(p, g, "p");
  if (!(fp.nu > 0.0)) throw UsageError("viscosity must be positive");
  const Array2 ux = ops.dx(u), uy = ops.dy(u), vx = ops.dx(v), vy = ops.dy(v);
  const Array2 lu = ops.lap(u), lv = ops.lap(v), px = ops.dx(p), py = ops.dy(p);
  Array2 c = g.make_array(), mx = g.make_array(), my = g.make_array();
  for (std::size_t k = 0; k < c.size(); ++k) {
    c[k] = ux[k] + vy[k];
    mx[k] = u[k] * ux[k] + v[k] * uy[k] - fp.nu * lu[k] + px[k];
    my[k] = u[k] * vx[k] + v[k] * vy[k] - fp.nu * lv[k] + py[k];
  }
  mask(c, g);
  mask(mx, g);
  mask(my, g);
  GridField out;
  out.add("continuity", std::move(c));
  out.add("momentum_x", std::move(mx));
  out.add("momentum_y", std::move(my));
  return out;
}

GridField residual(Pde pde, const GridField& sol, const Array2* source, const FluidParams& fp,
                   const stencil::PhysicalOps& ops) {
  switch (pde) {
    case Pde::heat: return heat_residual(sol[0], ops);
    case Pde::poisson:
      if (!source) throw UsageError("poisson residual needs a source field");
      return poisson_residual(sol[0], *source, ops);
    case Pde::ns: return ns_residual(sol[0], sol[1], sol[2], fp, ops);
  }
  throw UsageError("unknown pde");
}

GridField residual_adjoint(Pde pde, const GridField& sol, const GridField& grad_res, const FluidParams& fp,
                           const stencil::PhysicalOps& ops) {
  const auto& g = ops.metrics().grid;
  GridField out;
  // the residual mask is a projection, so its adjoint is the same mask
  auto masked = [&](const Array2& a) {
    Array2 r = a;
    mask(r, g);
    return r;
  };
  if (pde == Pde::heat || pde == Pde::poisson) {
    out.add("T", ops.lap_t(masked(grad_res[0])));
    return out;
  }
  const Array2& u = sol[0];
  const Array2& v = sol[1];
  const Array2 g1 = masked(grad_res[0]), g2 = masked(grad_res[1]), g3 = masked(grad_res[2]);
  const Array2 ux = ops.dx(u), uy = ops.dy(u), vx = ops.dx(v), vy = ops.dy(v);

  Array2 du = ops.dx_t(g1);
  axpy(du, 1.0, mul(g2, ux));
  axpy(du, 1.0, ops.dx_t(mul(u, g2)));
  axpy(du, 1.0, ops.dy_t(mul(v, g2)));
  axpy(du, -fp.nu, ops.lap_t(g2));
  axpy(du, 1.0, mul(g3, vx));

  Array2 dv = ops.dy_t(g1);
  axpy(dv, 1.0, mul(g2, uy));
  axpy(dv, 1.0, mul(g3, vy));
  axpy(dv, 1.0, ops.dx_t(mul(u, g3)));
  axpy(dv, 1.0, ops.dy_t(mul(v, g3)));
  axpy(dv, -fp.nu, ops.lap_t(g3));

  Array2 dp = ops.dx_t(g2);
  axpy(dp, 1.0, ops.dy_t(g3));

  out.add("u", std::move(du));
  out.add("v", std::move(dv));
  out.add("p", std::move(dp));
  return out;
}

LossValue physics_loss(const std::vector<GridField>& batch, const ReferenceGrid& g,
                       const std::vector<double>& weights) {
  if (batch.empty()) throw UsageError("physics loss of an empty batch");
  const auto nodes = loss_eligible_nodes(g);
  if (nodes.empty()) throw UsageError("grid has no loss-eligible nodes");
  const std::size_t nc = batch.front().n_channels();
  if (!weights.empty() && weights.size() != nc) throw UsageError("loss weight count does not match residual channels");
  LossValue lv;
  lv.per_channel.assign(nc, 0.0);
  for (const auto& res : batch) {
    if (res.n_channels() != nc) throw UsageError("inconsistent residual channels in batch");
    for (std::size_t c = 0; c < nc; ++c) {
      double s = 0.0;
      for (std::size_t k : nodes) s += res[c][k] * res[c][k];
      const double w = weights.empty() ? 1.0 : weights[c];
      lv.per_channel[c] += w * s / static_cast<double>(nodes.size());
    }
  }
  for (double& v : lv.per_channel) {
    v /= static_cast<double>(batch.size());
    lv.total += v;
  }
  return lv;
}

GridField physics_loss_grad(const GridField& res, const ReferenceGrid& g, std::size_t batch_size,
                            const std::vector<double>& weights) {
  if (batch_size == 0) throw UsageError("physics loss of an empty batch");
  const auto nodes = loss_eligible_nodes(g);
  GridField out;
  for (std::size_t c = 0; c < res.n_channels(); ++c) {
    const double w = weights.empty() ? 1.0 : weights.at(c);
    const double scale = 2.0 * w / static_cast<double>(nodes.size()) / static_cast<double>(batch_size);
    Array2 gr = g.make_array();
    for (std::size_t k : nodes) gr[k] = scale * res[c][k];
    out.add(res.names.at(c), std::move(gr));
  }
  return out;
}

namespace {

std::pair<double, double> norms(const Array2& pred, const Array2& ref, const ReferenceGrid& g) {
  if (!pred.same_shape(ref)) throw UsageError("relative error: shape mismatch");
  double d = 0.0, r = 0.0;
  for (std::size_t k : unique_nodes(g)) {
    d += (pred[k] - ref[k]) * (pred[k] - ref[k]);
    r += ref[k] * ref[k];
  }
  if (!(r > 0.0)) throw UsageError("relative error: reference field has zero norm");
  return {std::sqrt(d), std::sqrt(r)};
}

}  // namespace

double relative_error(const Array2& pred, const Array2& ref, const ReferenceGrid& g) {
  const auto [d, r] = norms(pred, ref, g);
  return std::sqrt(d / r);
}

double relative_error_ratio(const Array2& pred, const Array2& ref, const ReferenceGrid& g) {
  const auto [d, r] = norms(pred, ref, g);
  return d / r;
}

}  // namespace geopinn::physics

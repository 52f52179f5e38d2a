#include "geopinn/stencil.hpp"

#include <sstream>

namespace geopinn::stencil {

const Stencil1D& central4() {
  static const Stencil1D s{
      {{-2, 1.0 / 12.0}, {-1, -8.0 / 12.0}, {1, 8.0 / 12.0}, {2, -1.0 / 12.0}}, 4, "central4"};
  return s;
}

const Stencil1D& forward3() {
  static const Stencil1D s{
      {{0, -11.0 / 6.0}, {1, 18.0 / 6.0}, {2, -9.0 / 6.0}, {3, 2.0 / 6.0}}, 3, "forward3"};
  return s;
}

const Stencil1D& backward3() {
  static const Stencil1D s{
      {{0, 11.0 / 6.0}, {-1, -18.0 / 6.0}, {-2, 9.0 / 6.0}, {-3, -2.0 / 6.0}}, 3, "backward3"};
  return s;
}

AxisOperator::AxisOperator(std::size_t n, bool periodic, double spacing)
    : entries_(n), periodic_(periodic) {
  if (n < 5)
    throw UsageError("derivative stencil needs at least 5 nodes along an axis, got " +
                     std::to_string(n));
  const double inv_h = 1.0 / spacing;
  const long period = static_cast<long>(n) - 1;
  for (std::size_t i = 0; i < n; ++i) {
    const Stencil1D* s = &central4();
    if (!periodic) {
      if (i < 2)
        s = &forward3();
      else if (i + 2 >= n)
        s = &backward3();
    }
    Entry& e = entries_[i];
    e.count = static_cast<int>(s->taps.size());
    for (std::size_t k = 0; k < s->taps.size(); ++k) {
      long idx = static_cast<long>(i) + s->taps[k].offset;
      if (periodic) idx = ((idx % period) + period) % period;
      e.index[k] = static_cast<std::size_t>(idx);
      e.weight[k] = s->taps[k].weight * inv_h;
    }
  }
}

DerivativeOps::DerivativeOps(const ReferenceGrid& g)
    : xi(g.n_xi, g.topology.periodic_xi, g.d_xi),
      eta(g.n_eta, g.topology.periodic_eta, g.d_eta) {}

namespace {

void check_shape(const Array2& f, std::size_t rows, std::size_t cols) {
  if (f.rows() != rows || f.cols() != cols)
    throw UsageError("field shape " + std::to_string(f.rows()) + "x" + std::to_string(f.cols()) +
                     " does not match grid " + std::to_string(rows) + "x" +
                     std::to_string(cols));
}

Array2 apply_xi(const AxisOperator& op, const Array2& f) {
  check_shape(f, f.rows(), op.size());
  Array2 out(f.rows(), f.cols());
  const std::size_t rows = f.rows(), cols = f.cols();
#pragma omp parallel for schedule(static)
  for (std::size_t j = 0; j < rows; ++j) {
    const double* row = f.data() + j * cols;
    double* o = out.data() + j * cols;
    for (std::size_t i = 0; i < cols; ++i) {
      const auto& e = op.at(i);
      double acc = 0.0;
      for (int k = 0; k < e.count; ++k) acc += e.weight[k] * row[e.index[k]];
      o[i] = acc;
    }
  }
  return out;
}

Array2 apply_eta(const AxisOperator& op, const Array2& f) {
  check_shape(f, op.size(), f.cols());
  Array2 out(f.rows(), f.cols());
  const std::size_t rows = f.rows(), cols = f.cols();
#pragma omp parallel for schedule(static)
  for (std::size_t j = 0; j < rows; ++j) {
    const auto& e = op.at(j);
    double* o = out.data() + j * cols;
    for (int k = 0; k < e.count; ++k) {
      const double w = e.weight[k];
      const double* src = f.data() + e.index[k] * cols;
      for (std::size_t i = 0; i < cols; ++i) o[i] += w * src[i];
    }
  }
  return out;
}

// Transposed applications scatter each output's weights back onto the inputs
// it read. Each row owns its output row along xi; along eta the scatter
// crosses rows, so it runs serially in fixed order.
Array2 apply_xi_t(const AxisOperator& op, const Array2& g) {
  check_shape(g, g.rows(), op.size());
  Array2 out(g.rows(), g.cols());
  const std::size_t rows = g.rows(), cols = g.cols();
#pragma omp parallel for schedule(static)
  for (std::size_t j = 0; j < rows; ++j) {
    const double* gr = g.data() + j * cols;
    double* o = out.data() + j * cols;
    for (std::size_t i = 0; i < cols; ++i) {
      const auto& e = op.at(i);
      for (int k = 0; k < e.count; ++k) o[e.index[k]] += e.weight[k] * gr[i];
    }
  }
  return out;
}

Array2 apply_eta_t(const AxisOperator& op, const Array2& g) {
  check_shape(g, op.size(), g.cols());
  Array2 out(g.rows(), g.cols());
  const std::size_t rows = g.rows(), cols = g.cols();
  for (std::size_t j = 0; j < rows; ++j) {
    const auto& e = op.at(j);
    const double* src = g.data() + j * cols;
    for (int k = 0; k < e.count; ++k) {
      const double w = e.weight[k];
      double* o = out.data() + e.index[k] * cols;
      for (std::size_t i = 0; i < cols; ++i) o[i] += w * src[i];
    }
  }
  return out;
}

// a*p + b*q, pointwise
Array2 combine(const Array2& a, const Array2& p, const Array2& b, const Array2& q) {
  Array2 out(p.rows(), p.cols());
  const std::size_t n = out.size();
  for (std::size_t k = 0; k < n; ++k) out[k] = a[k] * p[k] + b[k] * q[k];
  return out;
}

Array2 times(const Array2& a, const Array2& p) {
  Array2 out(p.rows(), p.cols());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = a[k] * p[k];
  return out;
}

Array2 add(Array2 a, const Array2& b) {
  for (std::size_t k = 0; k < a.size(); ++k) a[k] += b[k];
  return a;
}

}  // namespace

Array2 d_dxi(const Array2& f, const ReferenceGrid& g) {
  check_shape(f, g.n_eta, g.n_xi);
  return apply_xi(AxisOperator(g.n_xi, g.topology.periodic_xi, g.d_xi), f);
}

Array2 d_deta(const Array2& f, const ReferenceGrid& g) {
  check_shape(f, g.n_eta, g.n_xi);
  return apply_eta(AxisOperator(g.n_eta, g.topology.periodic_eta, g.d_eta), f);
}

Array2 d_dxi_adjoint(const Array2& g_out, const ReferenceGrid& g) {
  check_shape(g_out, g.n_eta, g.n_xi);
  return apply_xi_t(AxisOperator(g.n_xi, g.topology.periodic_xi, g.d_xi), g_out);
}

Array2 d_deta_adjoint(const Array2& g_out, const ReferenceGrid& g) {
  check_shape(g_out, g.n_eta, g.n_xi);
  return apply_eta_t(AxisOperator(g.n_eta, g.topology.periodic_eta, g.d_eta), g_out);
}

PhysicalOps::PhysicalOps(const TransformMetrics& m) : m_(&m), ops_(m.grid) {}

Array2 PhysicalOps::dxi(const Array2& f) const {
  check_shape(f, m_->grid.n_eta, m_->grid.n_xi);
  return apply_xi(ops_.xi, f);
}
Array2 PhysicalOps::deta(const Array2& f) const {
  check_shape(f, m_->grid.n_eta, m_->grid.n_xi);
  return apply_eta(ops_.eta, f);
}
Array2 PhysicalOps::dxi_t(const Array2& g) const { return apply_xi_t(ops_.xi, g); }
Array2 PhysicalOps::deta_t(const Array2& g) const { return apply_eta_t(ops_.eta, g); }

Array2 PhysicalOps::dx(const Array2& f) const {
  return combine(m_->xi_x, dxi(f), m_->eta_x, deta(f));
}
Array2 PhysicalOps::dy(const Array2& f) const {
  return combine(m_->xi_y, dxi(f), m_->eta_y, deta(f));
}
Array2 PhysicalOps::dx_t(const Array2& g) const {
  return add(dxi_t(times(m_->xi_x, g)), deta_t(times(m_->eta_x, g)));
}
Array2 PhysicalOps::dy_t(const Array2& g) const {
  return add(dxi_t(times(m_->xi_y, g)), deta_t(times(m_->eta_y, g)));
}
Array2 PhysicalOps::lap(const Array2& f) const { return add(dx(dx(f)), dy(dy(f))); }
Array2 PhysicalOps::lap_t(const Array2& g) const { return add(dx_t(dx_t(g)), dy_t(dy_t(g))); }

Array2 d_dx(const Array2& f, const TransformMetrics& m) { return PhysicalOps(m).dx(f); }
Array2 d_dy(const Array2& f, const TransformMetrics& m) { return PhysicalOps(m).dy(f); }
Array2 d_dx_adjoint(const Array2& g, const TransformMetrics& m) { return PhysicalOps(m).dx_t(g); }
Array2 d_dy_adjoint(const Array2& g, const TransformMetrics& m) { return PhysicalOps(m).dy_t(g); }
Array2 laplacian(const Array2& f, const TransformMetrics& m) { return PhysicalOps(m).lap(f); }
Array2 laplacian_adjoint(const Array2& g, const TransformMetrics& m) {
  return PhysicalOps(m).lap_t(g);
}

std::string dump_tables() {
  std::ostringstream os;
  for (const Stencil1D* s : {&central4(), &forward3(), &backward3()}) {
    os << s->name << " order " << s->order << "\n";
    for (const auto& t : s->taps) os << "  " << t.offset << " " << t.weight << "\n";
  }
  return os.str();
}

}  // namespace geopinn::stencil

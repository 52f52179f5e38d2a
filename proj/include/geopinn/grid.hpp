#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace geopinn {

/// Raised for malformed inputs and contract violations (CLI exit code 1).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a numerical procedure fails: non-convergence, folded mesh,
/// degenerate metrics, non-finite values (CLI exit code 2).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense 2-D array stored row-major with shape (rows, cols) = (n_eta, n_xi).
class Array2 {
 public:
  Array2() = default;
  Array2(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t j, std::size_t i) { return data_[j * cols_ + i]; }
  double operator()(std::size_t j, std::size_t i) const { return data_[j * cols_ + i]; }
  double& operator[](std::size_t k) { return data_[k]; }
  double operator[](std::size_t k) const { return data_[k]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  bool same_shape(const Array2& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  bool operator==(const Array2& o) const = default;

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Periodicity of the reference lattice. A periodic axis stores its seam twice:
/// index n-1 duplicates index 0, so the period is n-1 nodes.
struct Topology {
  bool periodic_xi = false;
  bool periodic_eta = false;
  bool operator==(const Topology&) const = default;
};

/// Uniform rectangular lattice of the reference domain.
struct ReferenceGrid {
  std::size_t n_xi = 0;
  std::size_t n_eta = 0;
  double d_xi = 1.0;
  double d_eta = 1.0;
  Topology topology{};

  ReferenceGrid() = default;
  ReferenceGrid(std::size_t nxi, std::size_t neta, Topology topo = {}, double dxi = 1.0,
                double deta = 1.0);

  Array2 make_array(double fill = 0.0) const { return Array2(n_eta, n_xi, fill); }
  bool operator==(const ReferenceGrid&) const = default;
};

/// Node classes used by residual masks: boundary nodes carry hard BCs,
/// near-boundary nodes sit in the one-sided stencil zone.
enum class NodeClass { boundary, near_boundary, interior, periodic_mirror };

NodeClass classify_node(const ReferenceGrid& g, std::size_t j, std::size_t i);

/// Nodes on which PDE residuals enter the loss: every non-boundary node
/// that is not a duplicate periodic seam copy.
std::vector<std::size_t> loss_eligible_nodes(const ReferenceGrid& g);

/// Nodes counted by field norms: everything except duplicate seam copies.
std::vector<std::size_t> unique_nodes(const ReferenceGrid& g);

/// Multi-channel scalar field on the reference lattice.
struct GridField {
  std::vector<std::string> names;
  std::vector<Array2> channels;

  std::size_t n_channels() const { return channels.size(); }
  Array2& operator[](std::size_t c) { return channels[c]; }
  const Array2& operator[](std::size_t c) const { return channels[c]; }
  void add(std::string name, Array2 values) {
    names.push_back(std::move(name));
    channels.push_back(std::move(values));
  }
};

}  // namespace geopinn

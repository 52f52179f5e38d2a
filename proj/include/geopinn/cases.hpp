#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "geopinn/config.hpp"
#include "geopinn/oracle.hpp"

namespace geopinn::cases {

// Parametric boundaries. Edge polylines follow the reference-edge direction.

/// Vessel family: x_l = s cos(2 pi y) - 0.5, x_r = -s cos(2 pi y) + 0.5,
/// y in [-0.25, 0.25]; inlet at the bottom, outlet at the top.
meshgen::BoundaryCurves vessel_boundary(double s, std::size_t n_xi, std::size_t n_eta);
/// Annulus cut along the positive x axis; xi runs clockwise around the ring,
/// eta from the inner circle (bottom) to the outer circle (top).
meshgen::BoundaryCurves annulus_boundary(double r_in, double r_out, double cx, double cy, std::size_t n_xi,
                                         std::size_t n_eta);
/// Straight channel x in [-w/2, w/2], y in [0, h] whose left wall is pushed
/// inward by a Gaussian bump of height `bulge` centred at y = bulge_y.
meshgen::BoundaryCurves channel_boundary(double width, double height, double bulge, double bulge_y, double bulge_w,
                                         std::size_t n_xi, std::size_t n_eta);
/// Rectangle [0, w] x [0, h] whose four sides carry sine waves of amplitude
/// `amp` (relative to the side length).
meshgen::BoundaryCurves wavy_boundary(double width, double height, double amp, std::size_t n_xi,
                                      std::size_t n_eta);

/// Mesh and everything derived from it. Not copyable: the operators keep
/// pointers into `metrics`.
struct Geometry {
  meshgen::CurvilinearMesh mesh;
  meshgen::MappingReport report;
  TransformMetrics metrics;
  std::unique_ptr<stencil::PhysicalOps> ops;
  std::vector<bcpad::Enforcer> enforcers;  // one per solution variable

  Geometry() = default;
  Geometry(const Geometry&) = delete;
  Geometry& operator=(const Geometry&) = delete;
};

/// One parameter point ready for the network.
struct Sample {
  double param = 0.0;  // T_in, s, or the source seed
  std::shared_ptr<const Geometry> geo;
  std::vector<bcpad::ChannelBC> bcs;  // per variable, parameter values filled in
  conv::Tensor input;
  Array2 source;  // poisson only
};

struct Case {
  CaseConfig config;
  std::vector<std::string> variables;
  std::shared_ptr<const Geometry> base;  // shared geometry (all kinds but vessel)
  std::shared_ptr<const gpfield::KLBasis> basis;
  std::vector<Sample> train, test;

  model::Architecture architecture() const;
  /// Builds a sample at any parameter value (vessel: builds its mesh).
  Sample make_sample(double param) const;
  /// Fresh network initialised from the config seed (or `seed`).
  model::Network make_network(std::optional<std::uint64_t> seed = {}) const;
};

/// Boundary curves of the case at parameter `param` (used by vessel only).
meshgen::BoundaryCurves case_boundary(const CaseConfig& c, double param);
std::shared_ptr<const Geometry> build_geometry(const CaseConfig& c, double param);

Case build_case(const CaseConfig& c);
Case build_case(const std::filesystem::path& config);

/// Network output with the hard boundary conditions applied.
GridField predict(const model::Network& net, const Case& c, const Sample& s, model::Tape* tape = nullptr);
GridField sample_residual(const Case& c, const Sample& s, const GridField& solution);

using Observer = std::function<void(const Sample&, const GridField& solution)>;

/// Mean batch loss. With `grad`, its gradient is added to *grad (sized to the
/// parameter count). Members are processed in order, so the sum is
/// reproducible.
physics::LossValue batch_loss(const Case& c, const model::Network& net, const std::vector<const Sample*>& batch,
                              std::vector<double>* grad = nullptr, const Observer& observe = {});

struct HistoryRow {
  std::size_t iteration = 0;
  double loss = 0.0;
  std::vector<double> per_channel;
};

struct TrainOptions {
  std::filesystem::path out_dir;  // empty: write nothing
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> iterations;
  /// Called with every enforced solution seen during training.
  std::function<void(std::size_t iteration, const Sample&, const GridField&)> observe;
  std::ostream* log = nullptr;
  std::size_t log_every = 100;
};

struct TrainResult {
  model::Checkpoint checkpoint;
  std::vector<HistoryRow> history;  // rows 0..N-1: batch loss before each step; row N: full train set at the end
};

/// Adam on the physics loss. Throws NumericalError on a non-finite loss or
/// gradient after saving the last good checkpoint (when out_dir is set).
TrainResult train(const Case& c, const TrainOptions& opt = {});

std::string format_history(const Case& c, const std::vector<HistoryRow>& rows);

bool has_oracle(const Case& c);
oracle::OracleSolution reference_solution(const Case& c, const Sample& s);

struct EvalRow {
  std::string set;  // train | test | custom
  double param = 0.0;
  std::string variable;
  double rel_error = 0.0;  // NaN when no oracle exists
  double loss = 0.0;       // physics loss of this sample
};

struct EvalOptions {
  std::filesystem::path out_dir;  // field files per sample when set
  std::vector<double> params;     // explicit parameters replace the sets
  bool train_set = true, test_set = true;
  std::size_t max_per_set = 0;  // 0: all
};

std::vector<EvalRow> evaluate(const Case& c, const model::Network& net, const EvalOptions& opt = {});
std::string format_eval(const std::vector<EvalRow>& rows);

struct GradCheckResult {
  std::size_t n_checked = 0;
  std::size_t n_kinks = 0;  // draws skipped because a ReLU switched within +-step
  double max_rel_error = 0.0;
  std::vector<std::string> worst;  // parameter names, worst first
};

/// Central differences of the full pipeline loss (network, hard BCs,
/// residual, loss) against the analytic gradient at `n` random parameters.
/// Draws whose +-step interval crosses a ReLU switch are skipped and counted.
GradCheckResult gradient_check(const Case& c, const model::Network& net, std::size_t n, double step,
                               std::uint64_t seed);

}  // namespace geopinn::cases

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "geopinn/bcpad.hpp"
#include "geopinn/gpfield.hpp"
#include "geopinn/model.hpp"
#include "geopinn/physics.hpp"

namespace geopinn::cases {

/// How the case is parameterized and what the network sees as input.
///   none   - one fixed problem; input = physical coordinates
///   tin    - Dirichlet value on the bottom edge; input = linear blend in eta
///            from the parameter to the top-edge value
///   vessel - wall parameter s of the vessel family; input = coordinates
///   source - Gaussian random source field; input = scaled source
enum class ParamKind { none, tin, vessel, source };

std::string param_kind_name(ParamKind k);
ParamKind parse_param_kind(const std::string& s);

struct MeshConfig {
  std::string generator = "file";  // file | annulus | vessel | channel | wavy
  std::filesystem::path boundary;  // generator file
  std::size_t n_xi = 32, n_eta = 32;
  std::map<std::string, double> geom;  // generator parameters
  meshgen::MappingOptions mapping{1e-10, 200000, 1.5};
};

/// One `bc` line. `value` is ignored for periodic/outflow; `from_param` marks
/// a Dirichlet value taken from the case parameter.
struct BCLine {
  std::string variable;
  meshgen::Edge edge = meshgen::Edge::bottom;
  bcpad::BCKind kind = bcpad::BCKind::dirichlet;
  double value = 0.0;
  bool from_param = false;
  meshgen::Edge partner = meshgen::Edge::bottom;
  std::size_t line = 0;
};

struct ParamConfig {
  ParamKind kind = ParamKind::none;
  std::vector<double> train{0.0};
  std::vector<double> test;
  // source kind
  gpfield::GPConfig gp;
  std::size_t train_sources = 256, test_sources = 744;
  std::uint64_t train_seed = 1, test_seed = 1000001;
};

struct TrainConfig {
  std::size_t iterations = 1000;
  std::size_t batch = 1;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  std::vector<std::size_t> hidden{16, 32, 16};
  model::Activation activation = model::Activation::relu;
  std::size_t checkpoint_every = 0;  // 0: final checkpoint only
  double input_scale = 1.0;
};

struct CaseConfig {
  std::string name = "case";
  std::filesystem::path source_path;  // config file, for relative paths
  MeshConfig mesh;
  physics::Pde pde = physics::Pde::heat;
  physics::FluidParams fluid;
  std::map<std::string, double> loss_weight;  // by residual channel name
  std::vector<BCLine> bcs;
  ParamConfig params;
  TrainConfig train;

  /// Loss weights in residual-channel order.
  std::vector<double> weights() const;
};

/// Parses the sectioned key-value format. Errors carry "config line N: ".
CaseConfig parse_config(const std::string& text, const std::filesystem::path& source = {});
CaseConfig load_config(const std::filesystem::path& path);

}  // namespace geopinn::cases

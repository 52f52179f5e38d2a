// geopinn command line: mesh, train, eval, oracle, sample-source.
// Exit codes: 0 success, 1 usage error, 2 numerical failure.

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "geopinn/cases.hpp"
#include "geopinn/io.hpp"

namespace fs = std::filesystem;
using namespace geopinn;

namespace {

fs::path out_or_default(const std::string& out, const cases::CaseConfig& c, const std::string& what) {
  return out.empty() ? fs::path("runs") / c.name / what : fs::path(out);
}

int cmd_mesh(const std::string& cfg_path, const std::string& out, const std::vector<double>& params) {
  const auto cfg = cases::load_config(cfg_path);
  const fs::path dir = out_or_default(out, cfg, "mesh");
  fs::create_directories(dir);
  std::vector<double> ps = params;
  if (ps.empty()) ps = cfg.params.kind == cases::ParamKind::vessel ? cfg.params.train : std::vector<double>{0.0};
  for (std::size_t k = 0; k < ps.size(); ++k) {
    auto geo = cases::build_geometry(cfg, ps[k]);
    const std::string name = ps.size() == 1 ? "mesh.txt" : "mesh_" + std::to_string(k) + ".txt";
    io::write_text(dir / name, meshgen::format_mesh(geo->mesh));
    std::cout << name << " param " << io::format_double(ps[k]) << " n_xi " << geo->mesh.ref.n_xi << " n_eta "
              << geo->mesh.ref.n_eta << " iterations " << geo->report.iterations << " residual "
              << io::format_double(geo->report.residual) << (geo->mesh.ref.topology.periodic_xi ? " periodic" : "") << '\n';
  }
  return 0;
}

int cmd_train(const std::string& cfg_path, const std::string& out, std::optional<std::uint64_t> seed,
              std::optional<std::size_t> iterations, std::size_t log_every) {
  const auto c = cases::build_case(fs::path(cfg_path));
  cases::TrainOptions opt;
  opt.out_dir = out_or_default(out, c.config, "train");
  opt.seed = seed;
  opt.iterations = iterations;
  opt.log = &std::cout;
  opt.log_every = log_every;
  const auto r = cases::train(c, opt);
  std::cout << "checkpoint " << (opt.out_dir / "checkpoint.txt").string() << '\n';
  std::cout << "history " << (opt.out_dir / "history.csv").string() << '\n';
  return r.history.empty() ? 2 : 0;
}

int cmd_eval(const std::string& cfg_path, const std::string& checkpoint, const std::string& out,
             const std::vector<double>& params, std::size_t max_per_set) {
  const auto c = cases::build_case(fs::path(cfg_path));
  const auto ck = model::load_checkpoint(checkpoint);
  cases::EvalOptions opt;
  opt.out_dir = out_or_default(out, c.config, "eval");
  opt.params = params;
  opt.max_per_set = max_per_set;
  const std::string table = cases::format_eval(cases::evaluate(c, ck.net, opt));
  io::write_text(opt.out_dir / "errors.csv", table);
  std::cout << table;
  return 0;
}

int cmd_oracle(const std::string& cfg_path, const std::string& out, const std::vector<double>& params) {
  const auto c = cases::build_case(fs::path(cfg_path));
  if (!cases::has_oracle(c)) throw UsageError("no oracle for pde " + physics::pde_name(c.config.pde));
  const fs::path dir = out_or_default(out, c.config, "oracle");
  fs::create_directories(dir);
  std::vector<const cases::Sample*> items;
  std::vector<cases::Sample> custom;
  for (double p : params) custom.push_back(c.make_sample(p));
  if (custom.empty())
    for (const auto& s : c.train) items.push_back(&s);
  else
    for (const auto& s : custom) items.push_back(&s);
  if (c.config.params.kind == cases::ParamKind::source && custom.empty()) items.resize(1);
  std::ostringstream log;
  log << "scheme " << oracle::scheme_name() << '\n' << "index,param,iterations,residual,scale\n";
  for (std::size_t k = 0; k < items.size(); ++k) {
    const auto& s = *items[k];
    const auto sol = cases::reference_solution(c, s);
    GridField f;
    f.add("T", sol.field);
    if (c.config.pde == physics::Pde::poisson) f.add("source", s.source);
    io::write_field(dir / ("oracle_" + std::to_string(k) + ".field"), f);
    io::write_text(dir / ("oracle_" + std::to_string(k) + ".mesh"), meshgen::format_mesh(s.geo->mesh));
    log << k << ',' << io::format_double(s.param) << ',' << sol.iterations << ',' << io::format_double(sol.residual)
        << ',' << io::format_double(sol.scale) << '\n';
  }
  io::write_text(dir / "convergence.log", log.str());
  std::cout << log.str();
  return 0;
}

int cmd_sample(const std::string& cfg_path, const std::string& out, std::uint64_t seed) {
  const auto cfg = cases::load_config(cfg_path);
  if (cfg.params.kind != cases::ParamKind::source) throw UsageError("sample-source needs a case of kind source");
  auto geo = cases::build_geometry(cfg, 0.0);
  auto gp = cfg.params.gp;
  gp.validate(geo->mesh.x.size());
  const auto basis = gpfield::kl_decompose(gpfield::build_kernel_matrix(geo->mesh, gp), gp.k, geo->mesh.ref);
  GridField f;
  f.add("source", gpfield::sample_source(basis, seed));
  const fs::path path = out.empty() ? fs::path("runs") / cfg.name / ("source_" + std::to_string(seed) + ".field")
                                    : fs::path(out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  io::write_field(path, f);
  std::cout << "energy_fraction " << io::format_double(basis.energy_fraction) << '\n'
            << "field " << path.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"geopinn: physics-constrained CNN surrogates on curvilinear meshes"};
  app.require_subcommand(1);

  std::string cfg, out, checkpoint;
  std::vector<double> params;
  std::uint64_t seed = 0;
  std::size_t iterations = 0, log_every = 100, max_per_set = 0;

  auto* mesh = app.add_subcommand("mesh", "generate and write the case mesh");
  mesh->add_option("config", cfg, "case config")->required();
  mesh->add_option("--out", out, "output directory");
  mesh->add_option("--params", params, "parameter values (vessel)");

  auto* train = app.add_subcommand("train", "train the case network");
  train->add_option("config", cfg, "case config")->required();
  auto* seed_opt = train->add_option("--seed", seed, "initialization seed");
  auto* it_opt = train->add_option("--iterations", iterations, "override the iteration budget");
  train->add_option("--out", out, "output directory");
  train->add_option("--log-every", log_every, "progress line interval (0: quiet)");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("config", cfg, "case config")->required();
  eval->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
  eval->add_option("--params", params, "parameters to evaluate instead of the train/test sets");
  eval->add_option("--out", out, "output directory");
  eval->add_option("--max-per-set", max_per_set, "limit samples per set (0: all)");

  auto* orc = app.add_subcommand("oracle", "reference finite-difference solution");
  orc->add_option("config", cfg, "case config")->required();
  orc->add_option("--out", out, "output directory");
  orc->add_option("--params", params, "parameter values");

  auto* smp = app.add_subcommand("sample-source", "draw one random source field");
  smp->add_option("config", cfg, "case config")->required();
  smp->add_option("--seed", seed, "sample seed")->required();
  smp->add_option("--out", out, "output field file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*mesh) return cmd_mesh(cfg, out, params);
    if (*train)
      return cmd_train(cfg, out, *seed_opt ? std::optional<std::uint64_t>(seed) : std::nullopt,
                       *it_opt ? std::optional<std::size_t>(iterations) : std::nullopt, log_every);
    if (*eval) return cmd_eval(cfg, checkpoint, out, params, max_per_set);
    if (*orc) return cmd_oracle(cfg, out, params);
    if (*smp) return cmd_sample(cfg, out, seed);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

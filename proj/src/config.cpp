#include "geopinn/config.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "geopinn/io.hpp"

namespace geopinn::cases {

using bcpad::BCKind;
using meshgen::Edge;

std::string param_kind_name(ParamKind k) {
  switch (k) {
    case ParamKind::none: return "none";
    case ParamKind::tin: return "tin";
    case ParamKind::vessel: return "vessel";
    case ParamKind::source: return "source";
  }
  return "?";
}

ParamKind parse_param_kind(const std::string& s) {
  if (s == "none") return ParamKind::none;
  if (s == "tin") return ParamKind::tin;
  if (s == "vessel") return ParamKind::vessel;
  if (s == "source") return ParamKind::source;
  throw UsageError("unknown parameter kind '" + s + "' (none|tin|vessel|source)");
}

std::vector<double> CaseConfig::weights() const {
  std::vector<double> w;
  for (const auto& name : physics::residual_names(pde)) {
    auto it = loss_weight.find(name);
    w.push_back(it == loss_weight.end() ? 1.0 : it->second);
  }
  return w;
}

namespace {

const std::map<std::string, std::set<std::string>> kGeomKeys = {
    {"file", {}},
    {"annulus", {"r_in", "r_out", "cx", "cy"}},
    {"vessel", {"s"}},
    {"channel", {"width", "height", "bulge", "bulge_y", "bulge_w"}},
    {"wavy", {"width", "height", "amp"}},
};

struct Parser {
  std::size_t lineno = 0;
  std::vector<std::string> tok;

  [[noreturn]] void fail(const std::string& msg) const {
    throw UsageError("config line " + std::to_string(lineno) + ": " + msg);
  }
  void arity(std::size_t n) const {
    if (tok.size() != n + 1) fail("'" + tok[0] + "' expects " + std::to_string(n) + " value(s)");
  }
  double num(std::size_t k) const {
    try {
      return io::parse_double(tok.at(k), tok[0].c_str());
    } catch (const UsageError& e) {
      fail(e.what());
    }
  }
  std::size_t count(std::size_t k) const {
    long v = 0;
    try {
      v = io::parse_long(tok.at(k), tok[0].c_str());
    } catch (const UsageError& e) {
      fail(e.what());
    }
    if (v < 0) fail("'" + tok[0] + "' must be non-negative");
    return static_cast<std::size_t>(v);
  }
  std::vector<double> nums() const {
    std::vector<double> v;
    for (std::size_t k = 1; k < tok.size(); ++k) v.push_back(num(k));
    return v;
  }
  template <class F>
  auto guarded(F&& f) const {
    try {
      return f();
    } catch (const UsageError& e) {
      fail(e.what());
    }
  }
};

void parse_bc(Parser& p, CaseConfig& c) {
  // bc <var> <edge> dirichlet <value|param> | neumann <value> | periodic <edge> | outflow
  if (p.tok.size() < 4) p.fail("expected 'bc <variable> <edge> <kind> [value]'");
  BCLine b;
  b.line = p.lineno;
  b.variable = p.tok[1];
  b.edge = p.guarded([&] { return meshgen::parse_edge(p.tok[2]); });
  const std::string& kind = p.tok[3];
  if (kind == "dirichlet") {
    if (p.tok.size() != 5) p.fail("dirichlet expects one value");
    b.kind = BCKind::dirichlet;
    if (p.tok[4] == "param")
      b.from_param = true;
    else
      b.value = p.num(4);
  } else if (kind == "neumann") {
    if (p.tok.size() != 5) p.fail("neumann expects one value");
    b.kind = BCKind::neumann;
    b.value = p.num(4);
  } else if (kind == "periodic") {
    if (p.tok.size() != 5) p.fail("periodic expects the partner edge");
    b.kind = BCKind::periodic;
    b.partner = p.guarded([&] { return meshgen::parse_edge(p.tok[4]); });
  } else if (kind == "outflow") {
    if (p.tok.size() != 4) p.fail("outflow takes no value");
    b.kind = BCKind::outflow;
  } else {
    p.fail("unknown boundary condition '" + kind + "' (dirichlet|neumann|periodic|outflow)");
  }
  c.bcs.push_back(b);
}

void validate(const CaseConfig& c, const std::map<std::string, std::size_t>& mesh_key_lines) {
  auto at = [](std::size_t line, const std::string& msg) {
    throw UsageError("config line " + std::to_string(line) + ": " + msg);
  };
  auto allowed = kGeomKeys.find(c.mesh.generator);
  if (allowed == kGeomKeys.end()) throw UsageError("unknown mesh generator '" + c.mesh.generator + "'");
  for (const auto& [key, line] : mesh_key_lines)
    if (!allowed->second.count(key)) at(line, "key '" + key + "' does not apply to generator " + c.mesh.generator);
  if (c.mesh.generator == "file" && c.mesh.boundary.empty())
    throw UsageError("mesh generator 'file' needs a 'boundary' path");
  if (c.mesh.n_xi < 5 || c.mesh.n_eta < 5) throw UsageError("mesh needs at least 5 nodes per axis");

  const auto vars = physics::solution_variables(c.pde);
  std::map<std::pair<std::string, int>, std::size_t> seen;
  for (const auto& b : c.bcs) {
    if (std::find(vars.begin(), vars.end(), b.variable) == vars.end())
      at(b.line, "variable '" + b.variable + "' is not solved by pde " + physics::pde_name(c.pde));
    auto key = std::pair{b.variable, static_cast<int>(b.edge)};
    if (seen.count(key)) at(b.line, "duplicate condition for " + b.variable + " on " + meshgen::edge_name(b.edge));
    seen[key] = b.line;
    if (b.from_param && c.params.kind != ParamKind::tin)
      at(b.line, "'param' boundary values need parameter kind tin");
  }
  for (const auto& v : vars)
    for (Edge e : {Edge::bottom, Edge::right, Edge::top, Edge::left})
      if (!seen.count({v, static_cast<int>(e)}))
        throw UsageError("missing boundary condition for " + v + " on the " + meshgen::edge_name(e) + " edge");

  const auto names = physics::residual_names(c.pde);
  for (const auto& [name, w] : c.loss_weight) {
    if (std::find(names.begin(), names.end(), name) == names.end())
      throw UsageError("loss_weight: unknown residual channel '" + name + "'");
    if (!(w >= 0.0)) throw UsageError("loss_weight must be non-negative");
  }

  const auto& p = c.params;
  if (p.kind == ParamKind::source) {
    if (c.pde != physics::Pde::poisson) throw UsageError("source parameters need pde poisson");
    if (p.train_sources == 0) throw UsageError("train_sources must be positive");
    // seed ranges are the identities of the sources; they must not overlap
    const std::uint64_t a0 = p.train_seed, a1 = p.train_seed + p.train_sources;
    const std::uint64_t b0 = p.test_seed, b1 = p.test_seed + p.test_sources;
    if (p.test_sources > 0 && a0 < b1 && b0 < a1) throw UsageError("train and test source seed ranges overlap");
  } else {
    if (p.train.empty()) throw UsageError("no training parameters");
    for (double t : p.test)
      if (std::find(p.train.begin(), p.train.end(), t) != p.train.end())
        throw UsageError("parameter " + io::format_double(t) + " is in both the train and the test set");
    std::set<double> uniq(p.train.begin(), p.train.end());
    if (uniq.size() != p.train.size()) throw UsageError("duplicate training parameter");
    if (p.kind == ParamKind::none && (p.train.size() != 1 || !p.test.empty()))
      throw UsageError("parameter kind none takes a single training point and no test set");
    if (p.kind == ParamKind::vessel)
      for (double s : p.train)
        if (std::abs(s) > 0.1) throw UsageError("vessel parameter s must lie in [-0.1, 0.1]");
    if (p.kind == ParamKind::vessel)
      for (double s : p.test)
        if (std::abs(s) > 0.1) throw UsageError("vessel parameter s must lie in [-0.1, 0.1]");
  }
  if (c.pde == physics::Pde::poisson && p.kind != ParamKind::source)
    throw UsageError("pde poisson needs parameter kind source");
  if (p.kind == ParamKind::vessel && c.mesh.generator != "vessel")
    throw UsageError("parameter kind vessel needs the vessel mesh generator");
  if (p.kind == ParamKind::tin) {
    bool any = false;
    for (const auto& b : c.bcs) any = any || b.from_param;
    if (!any) throw UsageError("parameter kind tin needs a 'dirichlet param' boundary line");
  }

  const auto& t = c.train;
  if (t.batch == 0) throw UsageError("batch must be positive");
  if (!(t.lr > 0.0)) throw UsageError("lr must be positive");
  if (t.hidden.size() != 3) throw UsageError("hidden expects three layer widths");
  for (auto h : t.hidden)
    if (h == 0) throw UsageError("hidden widths must be positive");
  if (!(t.input_scale > 0.0)) throw UsageError("input_scale must be positive");
  if (c.pde == physics::Pde::ns && !(c.fluid.nu > 0.0)) throw UsageError("nu must be positive");
}

}  // namespace

CaseConfig parse_config(const std::string& text, const std::filesystem::path& source) {
  CaseConfig c;
  c.source_path = source;
  Parser p;
  std::istringstream in(text);
  std::string line, section;
  std::map<std::string, std::size_t> mesh_key_lines;
  bool fluid_nu = false;
  while (std::getline(in, line)) {
    ++p.lineno;
    p.tok = io::tokenize(line);
    if (p.tok.empty()) continue;
    const std::string& key = p.tok[0];
    if (key.front() == '[') {
      if (p.tok.size() != 1 || key.back() != ']') p.fail("malformed section header");
      section = key.substr(1, key.size() - 2);
      static const std::set<std::string> known{"case", "mesh", "pde", "bc", "params", "train"};
      if (!known.count(section)) p.fail("unknown section [" + section + "]");
      continue;
    }
    if (section.empty()) p.fail("key outside of any section");

    if (section == "case") {
      if (key != "name") p.fail("unknown key '" + key + "' in [case]");
      p.arity(1);
      c.name = p.tok[1];
    } else if (section == "mesh") {
      auto& m = c.mesh;
      if (key == "generator") {
        p.arity(1);
        m.generator = p.tok[1];
        if (!kGeomKeys.count(m.generator)) p.fail("unknown mesh generator '" + m.generator + "'");
      } else if (key == "boundary") {
        p.arity(1);
        m.boundary = p.tok[1];
      } else if (key == "n_xi") {
        p.arity(1);
        m.n_xi = p.count(1);
      } else if (key == "n_eta") {
        p.arity(1);
        m.n_eta = p.count(1);
      } else if (key == "tol") {
        p.arity(1);
        m.mapping.tol = p.num(1);
      } else if (key == "max_iter") {
        p.arity(1);
        m.mapping.max_iter = p.count(1);
      } else if (key == "sor") {
        p.arity(1);
        m.mapping.sor = p.num(1);
      } else {
        bool geom = false;
        for (const auto& [g, keys] : kGeomKeys) geom = geom || keys.count(key);
        if (!geom) p.fail("unknown key '" + key + "' in [mesh]");
        p.arity(1);
        m.geom[key] = p.num(1);
        mesh_key_lines[key] = p.lineno;
      }
    } else if (section == "pde") {
      if (key == "pde") {
        p.arity(1);
        c.pde = p.guarded([&] { return physics::parse_pde(p.tok[1]); });
      } else if (key == "nu") {
        p.arity(1);
        c.fluid.nu = p.num(1);
        fluid_nu = true;
      } else if (key == "inlet") {
        p.arity(2);
        c.fluid.inlet_u = p.num(1);
        c.fluid.inlet_v = p.num(2);
      } else if (key == "loss_weight") {
        p.arity(2);
        c.loss_weight[p.tok[1]] = p.num(2);
      } else {
        p.fail("unknown key '" + key + "' in [pde]");
      }
    } else if (section == "bc") {
      if (key != "bc") p.fail("expected a 'bc' line");
      parse_bc(p, c);
    } else if (section == "params") {
      auto& pc = c.params;
      if (key == "kind") {
        p.arity(1);
        pc.kind = p.guarded([&] { return parse_param_kind(p.tok[1]); });
      } else if (key == "train") {
        if (p.tok.size() < 2) p.fail("train needs at least one value");
        pc.train = p.nums();
      } else if (key == "test") {
        pc.test = p.nums();
      } else if (key == "sigma0") {
        p.arity(1);
        pc.gp.sigma0 = p.num(1);
      } else if (key == "length") {
        p.arity(1);
        pc.gp.length = p.num(1);
      } else if (key == "modes") {
        p.arity(1);
        pc.gp.k = p.count(1);
      } else if (key == "train_sources") {
        p.arity(1);
        pc.train_sources = p.count(1);
      } else if (key == "test_sources") {
        p.arity(1);
        pc.test_sources = p.count(1);
      } else if (key == "train_seed") {
        p.arity(1);
        pc.train_seed = p.count(1);
      } else if (key == "test_seed") {
        p.arity(1);
        pc.test_seed = p.count(1);
      } else {
        p.fail("unknown key '" + key + "' in [params]");
      }
    } else if (section == "train") {
      auto& t = c.train;
      if (key == "iterations") {
        p.arity(1);
        t.iterations = p.count(1);
      } else if (key == "batch") {
        p.arity(1);
        t.batch = p.count(1);
      } else if (key == "lr") {
        p.arity(1);
        t.lr = p.num(1);
      } else if (key == "seed") {
        p.arity(1);
        t.seed = p.count(1);
      } else if (key == "hidden") {
        t.hidden.clear();
        for (std::size_t k = 1; k < p.tok.size(); ++k) t.hidden.push_back(p.count(k));
      } else if (key == "activation") {
        p.arity(1);
        t.activation = p.guarded([&] { return model::parse_activation(p.tok[1]); });
      } else if (key == "checkpoint_every") {
        p.arity(1);
        t.checkpoint_every = p.count(1);
      } else if (key == "input_scale") {
        p.arity(1);
        t.input_scale = p.num(1);
      } else {
        p.fail("unknown key '" + key + "' in [train]");
      }
    }
  }
  if (c.pde == physics::Pde::ns && !fluid_nu) throw UsageError("pde ns needs 'nu'");
  validate(c, mesh_key_lines);
  return c;
}

CaseConfig load_config(const std::filesystem::path& path) {
  return parse_config(io::read_text(path), path);
}

}  // namespace geopinn::cases

#include "geopinn/cases.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

#include "geopinn/io.hpp"

namespace geopinn::cases {

using bcpad::BCKind;
using meshgen::Edge;
using meshgen::Point;
using std::numbers::pi;

namespace {

constexpr std::array<Edge, 4> kEdges{Edge::bottom, Edge::right, Edge::top, Edge::left};

meshgen::Polyline segment(Point a, Point b, std::size_t n) {
  auto p = meshgen::sample_curve([&](double t) { return Point{a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)}; }, n);
  p.front() = a;
  p.back() = b;
  return p;
}

double geom(const CaseConfig& c, const std::string& key, double fallback) {
  auto it = c.mesh.geom.find(key);
  return it == c.mesh.geom.end() ? fallback : it->second;
}

}  // namespace

meshgen::BoundaryCurves vessel_boundary(double s, std::size_t n_xi, std::size_t n_eta) {
  if (std::abs(s) > 0.1) throw UsageError("vessel parameter s must lie in [-0.1, 0.1]");
  meshgen::BoundaryCurves bc;
  auto left = [s](double t) {
    const double y = -0.25 + 0.5 * t;
    return Point{s * std::cos(2 * pi * y) - 0.5, y};
  };
  auto right = [s](double t) {
    const double y = -0.25 + 0.5 * t;
    return Point{-s * std::cos(2 * pi * y) + 0.5, y};
  };
  bc.edge(Edge::left) = meshgen::sample_curve(left, n_eta);
  bc.edge(Edge::right) = meshgen::sample_curve(right, n_eta);
  bc.edge(Edge::bottom) = segment(bc.edge(Edge::left).front(), bc.edge(Edge::right).front(), n_xi);
  bc.edge(Edge::top) = segment(bc.edge(Edge::left).back(), bc.edge(Edge::right).back(), n_xi);
  return bc;
}

meshgen::BoundaryCurves annulus_boundary(double r_in, double r_out, double cx, double cy, std::size_t n_xi,
                                         std::size_t n_eta) {
  if (!(r_in > 0.0 && r_out > r_in)) throw UsageError("annulus needs 0 < r_in < r_out");
  meshgen::BoundaryCurves bc;
  auto ring = [&](double r) {
    meshgen::Polyline p(n_xi);
    for (std::size_t i = 0; i < n_xi; ++i) {
      const double th = -2.0 * pi * static_cast<double>(i) / static_cast<double>(n_xi - 1);
      p[i] = {cx + r * std::cos(th), cy + r * std::sin(th)};
    }
    p.back() = p.front();
    return p;
  };
  bc.edge(Edge::bottom) = ring(r_in);
  bc.edge(Edge::top) = ring(r_out);
  bc.edge(Edge::left) = segment(bc.edge(Edge::bottom).front(), bc.edge(Edge::top).front(), n_eta);
  bc.edge(Edge::right) = bc.edge(Edge::left);
  bc.periodic = std::pair{Edge::left, Edge::right};
  return bc;
}

meshgen::BoundaryCurves channel_boundary(double width, double height, double bulge, double bulge_y, double bulge_w,
                                         std::size_t n_xi, std::size_t n_eta) {
  if (!(width > 0.0 && height > 0.0 && bulge_w > 0.0)) throw UsageError("channel sizes must be positive");
  if (!(std::abs(bulge) < 0.5 * width)) throw UsageError("channel bulge must be smaller than half the width");
  meshgen::BoundaryCurves bc;
  auto left = [&](double t) {
    const double y = height * t;
    const double d = (y - bulge_y) / bulge_w;
    return Point{-0.5 * width + bulge * std::exp(-d * d), y};
  };
  bc.edge(Edge::left) = meshgen::sample_curve(left, n_eta);
  bc.edge(Edge::right) = segment({0.5 * width, 0.0}, {0.5 * width, height}, n_eta);
  bc.edge(Edge::bottom) = segment(bc.edge(Edge::left).front(), bc.edge(Edge::right).front(), n_xi);
  bc.edge(Edge::top) = segment(bc.edge(Edge::left).back(), bc.edge(Edge::right).back(), n_xi);
  return bc;
}

meshgen::BoundaryCurves wavy_boundary(double width, double height, double amp, std::size_t n_xi,
                                      std::size_t n_eta) {
  if (!(width > 0.0 && height > 0.0)) throw UsageError("wavy domain sizes must be positive");
  if (!(std::abs(amp) < 0.25)) throw UsageError("wavy amplitude must be below 0.25");
  meshgen::BoundaryCurves bc;
  const double ax = amp * width, ay = amp * height;
  bc.edge(Edge::bottom) =
      meshgen::sample_curve([&](double s) { return Point{width * s, ay * std::sin(2 * pi * s)}; }, n_xi);
  bc.edge(Edge::top) =
      meshgen::sample_curve([&](double s) { return Point{width * s, height + ay * std::sin(pi * s)}; }, n_xi);
  bc.edge(Edge::left) =
      meshgen::sample_curve([&](double t) { return Point{ax * std::sin(2 * pi * t), height * t}; }, n_eta);
  bc.edge(Edge::right) =
      meshgen::sample_curve([&](double t) { return Point{width - ax * std::sin(pi * t), height * t}; }, n_eta);
  for (Edge e : kEdges) {
    auto& p = bc.edge(e);
    const bool eta_edge = meshgen::is_eta_edge(e);
    const double y0 = e == Edge::top ? height : 0.0, x0 = e == Edge::right ? width : 0.0;
    p.front() = eta_edge ? Point{0.0, y0} : Point{x0, 0.0};
    p.back() = eta_edge ? Point{width, y0} : Point{x0, height};
  }
  return bc;
}

meshgen::BoundaryCurves case_boundary(const CaseConfig& c, double param) {
  const auto& m = c.mesh;
  if (m.generator == "vessel")
    return vessel_boundary(c.params.kind == ParamKind::vessel ? param : geom(c, "s", 0.0), m.n_xi, m.n_eta);
  if (m.generator == "annulus")
    return annulus_boundary(geom(c, "r_in", 0.5), geom(c, "r_out", 1.0), geom(c, "cx", 0.0), geom(c, "cy", 0.0),
                            m.n_xi, m.n_eta);
  if (m.generator == "channel")
    return channel_boundary(geom(c, "width", 1.0), geom(c, "height", 1.2), geom(c, "bulge", 0.15),
                            geom(c, "bulge_y", 0.8), geom(c, "bulge_w", 0.2), m.n_xi, m.n_eta);
  if (m.generator == "wavy")
    return wavy_boundary(geom(c, "width", 1.0), geom(c, "height", 1.0), geom(c, "amp", 0.08), m.n_xi, m.n_eta);
  if (m.generator == "file") {
    auto path = m.boundary;
    if (path.is_relative() && !c.source_path.empty()) path = c.source_path.parent_path() / path;
    auto bc = meshgen::parse_boundary(io::read_text(path));
    for (Edge e : kEdges) {
      const std::size_t n = meshgen::is_eta_edge(e) ? m.n_xi : m.n_eta;
      if (bc.edge(e).size() != n) bc.edge(e) = meshgen::resample_arclength(bc.edge(e), n);
    }
    return bc;
  }
  throw UsageError("unknown mesh generator '" + m.generator + "'");
}

namespace {

std::vector<bcpad::ChannelBC> channel_bcs(const CaseConfig& c, const ReferenceGrid& g, double param) {
  const auto vars = physics::solution_variables(c.pde);
  std::vector<bcpad::ChannelBC> out(vars.size());
  for (const auto& b : c.bcs) {
    const auto v = static_cast<std::size_t>(std::find(vars.begin(), vars.end(), b.variable) - vars.begin());
    auto& cond = out[v][b.edge];
    switch (b.kind) {
      case BCKind::dirichlet: cond = bcpad::constant_dirichlet(g, b.edge, b.from_param ? param : b.value); break;
      case BCKind::neumann: cond = bcpad::constant_neumann(g, b.edge, b.value); break;
      case BCKind::periodic: cond = bcpad::EdgeCondition::periodic(b.partner); break;
      case BCKind::outflow: cond = bcpad::EdgeCondition::outflow(); break;
    }
  }
  for (auto& bc : out) bc.validate(g);
  return out;
}

}  // namespace

std::shared_ptr<const Geometry> build_geometry(const CaseConfig& c, double param) {
  auto curves = case_boundary(c, param);
  const ReferenceGrid ref = curves.reference_grid();
  auto geo = std::make_shared<Geometry>();
  geo->mesh = meshgen::generate_mapping(curves, ref, c.mesh.mapping, &geo->report);
  meshgen::check_unfolded(geo->mesh);
  geo->metrics = meshgen::compute_metrics(geo->mesh);
  geo->ops = std::make_unique<stencil::PhysicalOps>(geo->metrics);
  for (const auto& bc : channel_bcs(c, ref, param)) geo->enforcers.emplace_back(bc, geo->metrics);
  return geo;
}

model::Architecture Case::architecture() const {
  model::Architecture a;
  a.variables = variables;
  a.hidden = config.train.hidden;
  a.activation = config.train.activation;
  switch (config.params.kind) {
    case ParamKind::none:
    case ParamKind::vessel: a.c_in = 2; break;
    case ParamKind::tin:
    case ParamKind::source: a.c_in = 1; break;
  }
  return a;
}

model::Network Case::make_network(std::optional<std::uint64_t> seed) const {
  model::Network net(architecture());
  net.init_weights(seed.value_or(config.train.seed));
  return net;
}

Sample Case::make_sample(double param) const {
  Sample s;
  s.param = param;
  s.geo = config.params.kind == ParamKind::vessel ? build_geometry(config, param) : base;
  const auto& mesh = s.geo->mesh;
  const auto& g = mesh.ref;
  s.bcs = channel_bcs(config, g, param);
  const double scale = config.train.input_scale;
  switch (config.params.kind) {
    case ParamKind::none:
    case ParamKind::vessel:
      s.input = conv::Tensor(2, g.n_eta, g.n_xi);
      for (std::size_t k = 0; k < mesh.x.size(); ++k) {
        s.input.data[k] = scale * mesh.x[k];
        s.input.data[mesh.x.size() + k] = scale * mesh.y[k];
      }
      break;
    case ParamKind::tin: {
      const auto& top = s.bcs[0][Edge::top];
      if (top.kind != BCKind::dirichlet) throw UsageError("parameter kind tin needs a Dirichlet top edge");
      const double outer = top.values.front();
      s.input = conv::Tensor(1, g.n_eta, g.n_xi);
      for (std::size_t j = 0; j < g.n_eta; ++j) {
        const double t = static_cast<double>(j) / static_cast<double>(g.n_eta - 1);
        for (std::size_t i = 0; i < g.n_xi; ++i) s.input.at(0, j, i) = scale * (param + t * (outer - param));
      }
      break;
    }
    case ParamKind::source: {
      if (!(param >= 0.0) || param != std::floor(param)) throw UsageError("source parameters are integer seeds");
      s.source = gpfield::sample_source(*basis, static_cast<std::uint64_t>(param));
      s.input = conv::Tensor(1, g.n_eta, g.n_xi);
      for (std::size_t k = 0; k < s.source.size(); ++k) s.input.data[k] = scale * s.source[k];
      break;
    }
  }
  return s;
}

Case build_case(const CaseConfig& cfg) {
  Case c;
  c.config = cfg;
  c.variables = physics::solution_variables(cfg.pde);
  const auto& p = cfg.params;
  if (p.kind != ParamKind::vessel) c.base = build_geometry(cfg, 0.0);
  if (p.kind == ParamKind::source) {
    auto gp = p.gp;
    gp.validate(c.base->mesh.x.size());
    auto K = gpfield::build_kernel_matrix(c.base->mesh, gp);
    c.basis = std::make_shared<gpfield::KLBasis>(gpfield::kl_decompose(K, gp.k, c.base->mesh.ref));
    for (std::size_t i = 0; i < p.train_sources; ++i)
      c.train.push_back(c.make_sample(static_cast<double>(p.train_seed + i)));
    for (std::size_t i = 0; i < p.test_sources; ++i)
      c.test.push_back(c.make_sample(static_cast<double>(p.test_seed + i)));
  } else {
    for (double v : p.train) c.train.push_back(c.make_sample(v));
    for (double v : p.test) c.test.push_back(c.make_sample(v));
  }
  return c;
}

Case build_case(const std::filesystem::path& config) { return build_case(load_config(config)); }

namespace {

// Columns of wrapped input added on each side of a periodic xi axis: the
// receptive field radius, so seam nodes see the same neighbourhood as interior
// nodes despite the zero padding inside the network.
std::size_t seam_halo(const model::Network& net, const ReferenceGrid& g) {
  if (!g.topology.periodic_xi) return 0;
  return static_cast<std::size_t>(conv::kPad) * (net.architecture().hidden.size() + 1);
}

conv::Tensor widen(const conv::Tensor& in, std::size_t halo) {
  if (halo == 0) return in;
  const std::size_t period = in.w - 1;
  conv::Tensor out(in.c, in.h, in.w + 2 * halo);
  for (std::size_t k = 0; k < in.c; ++k)
    for (std::size_t y = 0; y < in.h; ++y)
      for (std::size_t x = 0; x < out.w; ++x) {
        const std::size_t src = (x + period * (halo / period + 1) - halo) % period;
        out.at(k, y, x) = in.at(k, y, src);
      }
  return out;
}

}  // namespace

GridField predict(const model::Network& net, const Case& c, const Sample& s, model::Tape* tape) {
  const auto& g = s.geo->mesh.ref;
  const std::size_t halo = seam_halo(net, g);
  const conv::Tensor out = net.forward(widen(s.input, halo), tape);
  GridField sol;
  for (std::size_t v = 0; v < c.variables.size(); ++v) {
    Array2 f = g.make_array();
    for (std::size_t j = 0; j < g.n_eta; ++j)
      for (std::size_t i = 0; i < g.n_xi; ++i) f(j, i) = out.at(v, j, i + halo);
    s.geo->enforcers[v].apply(f, s.bcs[v]);
    sol.add(c.variables[v], std::move(f));
  }
  return sol;
}

GridField sample_residual(const Case& c, const Sample& s, const GridField& solution) {
  const Array2* src = c.config.pde == physics::Pde::poisson ? &s.source : nullptr;
  return physics::residual(c.config.pde, solution, src, c.config.fluid, *s.geo->ops);
}

physics::LossValue batch_loss(const Case& c, const model::Network& net, const std::vector<const Sample*>& batch,
                              std::vector<double>* grad, const Observer& observe) {
  if (batch.empty()) throw UsageError("empty batch");
  const auto w = c.config.weights();
  physics::LossValue total;
  total.per_channel.assign(w.size(), 0.0);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (const Sample* s : batch) {
    model::Tape tape;
    const GridField sol = predict(net, c, *s, grad ? &tape : nullptr);
    if (observe) observe(*s, sol);
    const GridField res = sample_residual(c, *s, sol);
    const auto& g = s->geo->mesh.ref;
    const auto lv = physics::physics_loss({res}, g, w);
    for (std::size_t k = 0; k < w.size(); ++k) total.per_channel[k] += lv.per_channel[k] * inv_b;
    if (!grad) continue;
    const GridField gres = physics::physics_loss_grad(res, g, batch.size(), w);
    GridField gsol = physics::residual_adjoint(c.config.pde, sol, gres, c.config.fluid, *s->geo->ops);
    const std::size_t halo = seam_halo(net, g);
    conv::Tensor gout(c.variables.size(), g.n_eta, g.n_xi + 2 * halo);
    for (std::size_t v = 0; v < c.variables.size(); ++v) {
      s->geo->enforcers[v].backward(gsol[v]);
      for (std::size_t j = 0; j < g.n_eta; ++j)
        for (std::size_t i = 0; i < g.n_xi; ++i) gout.at(v, j, i + halo) = gsol[v](j, i);
    }
    net.backward(tape, gout, *grad);
  }
  for (double v : total.per_channel) total.total += v;
  return total;
}

namespace {

void write_checkpoint(const std::filesystem::path& dir, const std::string& name, const model::Checkpoint& ck) {
  if (dir.empty()) return;
  model::save_checkpoint((dir / name).string(), ck);
}

bool finite(const physics::LossValue& lv) {
  if (!std::isfinite(lv.total)) return false;
  for (double v : lv.per_channel)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace

std::string format_history(const Case& c, const std::vector<HistoryRow>& rows) {
  std::ostringstream os;
  os << "iteration,loss";
  for (const auto& n : physics::residual_names(c.config.pde)) os << ',' << n;
  os << '\n';
  for (const auto& r : rows) {
    os << r.iteration << ',' << io::format_double(r.loss);
    for (double v : r.per_channel) os << ',' << io::format_double(v);
    os << '\n';
  }
  return os.str();
}

TrainResult train(const Case& c, const TrainOptions& opt) {
  const auto& tc = c.config.train;
  const std::size_t iterations = opt.iterations.value_or(tc.iterations);
  const std::uint64_t seed = opt.seed.value_or(tc.seed);
  if (c.train.empty()) throw UsageError("case has no training samples");
  if (!opt.out_dir.empty()) std::filesystem::create_directories(opt.out_dir);

  TrainResult r;
  r.checkpoint.net = c.make_network(seed);
  r.checkpoint.adam = model::Adam(r.checkpoint.net.n_params(), tc.lr);
  auto& net = r.checkpoint.net;
  auto& adam = r.checkpoint.adam;

  // full batches go in order; smaller batches walk a reshuffled permutation
  const std::size_t n = c.train.size();
  const std::size_t bsz = std::min(tc.batch, n);
  std::vector<std::size_t> order(n);
  for (std::size_t k = 0; k < n; ++k) order[k] = k;
  std::mt19937_64 shuffle_rng(seed ^ 0x5bd1e995ULL);
  std::size_t cursor = n;
  auto next_batch = [&] {
    if (bsz == n) cursor = 0;
    if (cursor + bsz > n) {
      if (bsz < n) std::shuffle(order.begin(), order.end(), shuffle_rng);
      cursor = 0;
    }
    std::vector<const Sample*> b;
    for (std::size_t k = 0; k < bsz; ++k) b.push_back(&c.train[order[cursor + k]]);
    cursor += bsz;
    return b;
  };

  auto fail = [&](const std::string& msg, const model::Checkpoint& good) {
    write_checkpoint(opt.out_dir, "checkpoint.txt", good);
    if (!opt.out_dir.empty()) io::write_text(opt.out_dir / "history.csv", format_history(c, r.history));
    throw NumericalError(msg);
  };

  std::vector<double> grad(net.n_params());
  for (std::size_t it = 0; it < iterations; ++it) {
    const auto batch = next_batch();
    std::fill(grad.begin(), grad.end(), 0.0);
    Observer obs;
    if (opt.observe) obs = [&](const Sample& s, const GridField& f) { opt.observe(it, s, f); };
    const auto lv = batch_loss(c, net, batch, &grad, obs);
    if (!finite(lv)) fail("non-finite loss at iteration " + std::to_string(it), r.checkpoint);
    r.history.push_back({it, lv.total, lv.per_channel});
    if (opt.log && opt.log_every && it % opt.log_every == 0)
      *opt.log << "iteration " << it << " loss " << io::format_double(lv.total) << std::endl;
    const model::Checkpoint good = r.checkpoint;
    try {
      adam.step(net, grad);
    } catch (const NumericalError& e) {
      fail(std::string(e.what()) + " at iteration " + std::to_string(it), good);
    }
    r.checkpoint.iteration = it + 1;
    if (tc.checkpoint_every && (it + 1) % tc.checkpoint_every == 0 && it + 1 < iterations)
      write_checkpoint(opt.out_dir, "checkpoint_" + std::to_string(it + 1) + ".txt", r.checkpoint);
  }
  std::vector<const Sample*> all;
  for (const auto& s : c.train) all.push_back(&s);
  const auto fin = batch_loss(c, net, all);
  r.history.push_back({iterations, fin.total, fin.per_channel});
  if (opt.log) *opt.log << "final loss " << io::format_double(fin.total) << std::endl;
  if (!finite(fin)) fail("non-finite loss after training", r.checkpoint);
  write_checkpoint(opt.out_dir, "checkpoint.txt", r.checkpoint);
  if (!opt.out_dir.empty()) io::write_text(opt.out_dir / "history.csv", format_history(c, r.history));
  return r;
}

bool has_oracle(const Case& c) {
  if (c.config.pde == physics::Pde::ns) return false;
  for (const auto& b : c.config.bcs)
    if (b.kind != BCKind::dirichlet && b.kind != BCKind::periodic) return false;
  return true;
}

oracle::OracleSolution reference_solution(const Case& c, const Sample& s) {
  if (!has_oracle(c)) throw UsageError("no oracle for this case (pde " + physics::pde_name(c.config.pde) + ")");
  if (c.config.pde == physics::Pde::poisson) return oracle::solve_poisson(s.geo->mesh, s.bcs[0], s.source);
  return oracle::solve_heat(s.geo->mesh, s.bcs[0]);
}

std::vector<EvalRow> evaluate(const Case& c, const model::Network& net, const EvalOptions& opt) {
  if (!(net.architecture() == c.architecture())) throw UsageError("checkpoint architecture does not match the case");
  struct Item {
    std::string set;
    const Sample* s;
  };
  std::vector<Sample> custom;
  std::vector<Item> items;
  if (!opt.params.empty()) {
    custom.reserve(opt.params.size());
    for (double p : opt.params) custom.push_back(c.make_sample(p));
    for (const auto& s : custom) items.push_back({"custom", &s});
  } else {
    auto add = [&](const std::string& name, const std::vector<Sample>& v) {
      const std::size_t m = opt.max_per_set ? std::min(opt.max_per_set, v.size()) : v.size();
      for (std::size_t k = 0; k < m; ++k) items.push_back({name, &v[k]});
    };
    if (opt.train_set) add("train", c.train);
    if (opt.test_set) add("test", c.test);
  }
  if (!opt.out_dir.empty()) std::filesystem::create_directories(opt.out_dir);
  const bool oracle_ok = has_oracle(c);
  std::vector<EvalRow> rows;
  std::size_t idx = 0;
  for (const auto& item : items) {
    const Sample& s = *item.s;
    const GridField sol = predict(net, c, s);
    const auto& g = s.geo->mesh.ref;
    const double loss = physics::physics_loss({sample_residual(c, s, sol)}, g, c.config.weights()).total;
    GridField out = sol;
    if (oracle_ok) {
      const auto ref = reference_solution(c, s);
      rows.push_back({item.set, s.param, c.variables[0], physics::relative_error(sol[0], ref.field, g), loss});
      out.add("oracle", ref.field);
    } else {
      for (const auto& v : c.variables)
        rows.push_back({item.set, s.param, v, std::numeric_limits<double>::quiet_NaN(), loss});
    }
    if (c.config.pde == physics::Pde::poisson) out.add("source", s.source);
    if (!opt.out_dir.empty()) {
      const std::string stem = item.set + "_" + std::to_string(idx);
      io::write_field(opt.out_dir / (stem + ".field"), out);
      io::write_text(opt.out_dir / (stem + ".mesh"), meshgen::format_mesh(s.geo->mesh));
    }
    ++idx;
  }
  return rows;
}

std::string format_eval(const std::vector<EvalRow>& rows) {
  std::ostringstream os;
  os << "set,param,variable,relative_error,loss\n";
  for (const auto& r : rows) {
    os << r.set << ',' << io::format_double(r.param) << ',' << r.variable << ',';
    if (std::isnan(r.rel_error))
      os << "property-only";
    else
      os << io::format_double(r.rel_error);
    os << ',' << io::format_double(r.loss) << '\n';
  }
  return os.str();
}

namespace {

// Signs of every hidden pre-activation over the batch. Two parameter vectors
// with the same pattern lie in one linear piece of each ReLU.
std::vector<bool> relu_pattern(const Case& c, const model::Network& net, const std::vector<const Sample*>& batch) {
  std::vector<bool> bits;
  for (const Sample* s : batch) {
    model::Tape tape;
    predict(net, c, *s, &tape);
    for (const auto& layers : tape.pre)
      for (std::size_t l = 0; l + 1 < layers.size(); ++l)
        for (double z : layers[l].data) bits.push_back(z > 0.0);
  }
  return bits;
}

}  // namespace

GradCheckResult gradient_check(const Case& c, const model::Network& net, std::size_t n, double step,
                               std::uint64_t seed) {
  std::vector<const Sample*> batch;
  for (std::size_t k = 0; k < std::min<std::size_t>(c.train.size(), c.config.train.batch); ++k)
    batch.push_back(&c.train[k]);
  std::vector<double> grad(net.n_params(), 0.0);
  batch_loss(c, net, batch, &grad);
  const bool relu = net.architecture().activation == model::Activation::relu;
  const auto base = relu ? relu_pattern(c, net, batch) : std::vector<bool>{};
  model::Network probe = net;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, net.n_params() - 1);
  GradCheckResult r;
  std::vector<std::pair<double, std::string>> errs;
  double gmax = 0.0;
  for (double v : grad) gmax = std::max(gmax, std::abs(v));
  for (std::size_t draws = 0; r.n_checked < n && draws < 50 * n; ++draws) {
    const std::size_t k = pick(rng);
    const double p0 = probe.params()[k];
    probe.params()[k] = p0 + step;
    const double lp = batch_loss(c, probe, batch).total;
    const bool kink_p = relu && relu_pattern(c, probe, batch) != base;
    probe.params()[k] = p0 - step;
    const double lm = batch_loss(c, probe, batch).total;
    const bool kink_m = relu && relu_pattern(c, probe, batch) != base;
    probe.params()[k] = p0;
    // the loss is not differentiable across a ReLU switch inside the stencil
    if (kink_p || kink_m) {
      ++r.n_kinks;
      continue;
    }
    const double fd = (lp - lm) / (2 * step);
    // relative to the larger of the two, floored at a small fraction of the
    // largest gradient entry so entries that are zero up to rounding pass
    const double denom = std::max({std::abs(fd), std::abs(grad[k]), 1e-6 * gmax});
    const double rel = std::abs(fd - grad[k]) / denom;
    errs.emplace_back(rel, net.param_name(k));
    r.max_rel_error = std::max(r.max_rel_error, rel);
    ++r.n_checked;
  }
  std::sort(errs.begin(), errs.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; k < std::min<std::size_t>(3, errs.size()); ++k)
    r.worst.push_back(errs[k].second + " " + io::format_double(errs[k].first));
  return r;
}

}  // namespace geopinn::cases

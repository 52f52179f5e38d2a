#include <cmath>
#include <sstream>

#include "doctest.h"
#include "geopinn/cases.hpp"
#include "geopinn/io.hpp"
#include "test_util.hpp"

using namespace geopinn;
using namespace geopinn::cases;
using meshgen::Edge;

namespace {

const std::string kHeat = R"(
[case]
name tiny_heat
[mesh]
generator annulus
r_in 0.5
r_out 1.0
n_xi 16
n_eta 8
[pde]
pde heat
[bc]
bc T bottom dirichlet param
bc T top dirichlet 0
bc T left periodic right
bc T right periodic left
[params]
kind tin
train 1 7
test 2 3 4 5 6
[train]
iterations 5
batch 2
hidden 4 6 4
)";

const std::string kFlow = R"(
[case]
name tiny_flow
[mesh]
generator vessel
n_xi 12
n_eta 9
[pde]
pde ns
nu 0.02
inlet 0 0.4
[bc]
bc u bottom dirichlet 0
bc v bottom dirichlet 0.4
bc u left dirichlet 0
bc v left dirichlet 0
bc u right dirichlet 0
bc v right dirichlet 0
bc u top outflow
bc v top outflow
bc p bottom neumann 0
bc p left neumann 0
bc p right neumann 0
bc p top dirichlet 0
[params]
kind vessel
train -0.1 0 0.1
test -0.05 0.05
[train]
iterations 3
batch 3
hidden 3 4 3
)";

const std::string kSource = R"(
[case]
name tiny_source
[mesh]
generator wavy
n_xi 10
n_eta 10
[pde]
pde poisson
[bc]
bc T bottom dirichlet 10
bc T right dirichlet 10
bc T top dirichlet 10
bc T left dirichlet 10
[params]
kind source
modes 4
train_sources 6
test_sources 4
train_seed 1
test_seed 100
[train]
iterations 4
batch 3
hidden 3 4 3
input_scale 0.01
)";

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto k = s.find(from);
  REQUIRE(k != std::string::npos);
  return s.replace(k, from.size(), to);
}

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const UsageError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("config diagnostics name the line") {
  CHECK(error_of(kHeat) == "");
  const std::string bad = replace(kHeat, "bc T top dirichlet 0", "bc T top sideways 0");
  const std::string msg = error_of(bad);
  CHECK(msg.find("config line 14") != std::string::npos);
  CHECK(msg.find("sideways") != std::string::npos);

  CHECK(error_of(replace(kHeat, "bc T top dirichlet 0", "bc T top dirichlet")).find("config line 14") !=
        std::string::npos);
  CHECK(error_of(replace(kHeat, "n_eta 8", "n_eta eight")).find("config line 9") != std::string::npos);
  CHECK(error_of(replace(kHeat, "[train]", "[training]")).find("config line") != std::string::npos);
  CHECK(error_of(replace(kHeat, "r_in 0.5", "bulge 0.5")) != "");
  // every variable needs all four edges
  CHECK(error_of(replace(kHeat, "bc T top dirichlet 0\n", "")) != "");
  // train and test must be disjoint
  CHECK(error_of(replace(kHeat, "test 2 3 4 5 6", "test 2 7")) != "");
  CHECK(error_of(replace(kSource, "test_seed 100", "test_seed 4")) != "");
  CHECK(error_of(replace(kFlow, "nu 0.02\n", "")) != "");
}

TEST_CASE("annulus case: periodic topology and interpolated input") {
  const Case c = build_case(parse_config(kHeat));
  const auto& g = c.base->mesh.ref;
  CHECK(g.topology.periodic_xi);
  CHECK_FALSE(g.topology.periodic_eta);
  REQUIRE(c.train.size() == 2);
  REQUIRE(c.test.size() == 5);
  CHECK(c.architecture().c_in == 1);
  for (const auto& s : c.train) {
    CHECK(s.geo == c.base);
    for (std::size_t i = 0; i < g.n_xi; ++i) {
      CHECK(s.input.at(0, 0, i) == s.param);
      CHECK(s.input.at(0, g.n_eta - 1, i) == 0.0);
      CHECK(s.input.at(0, 3, i) == doctest::Approx(s.param * (1.0 - 3.0 / 7.0)));
    }
  }
  // input is constant along xi, so with the seam halo every column of the
  // prediction matches
  const auto net = c.make_network();
  const auto sol = predict(net, c, c.train[1]);
  for (std::size_t j = 0; j < g.n_eta; ++j)
    for (std::size_t i = 1; i < g.n_xi; ++i) CHECK(sol[0](j, i) == sol[0](j, 0));
}

TEST_CASE("vessel case builds one mesh per wall shape") {
  const Case c = build_case(parse_config(kFlow));
  CHECK(c.base == nullptr);
  REQUIRE(c.train.size() == 3);
  CHECK(c.train[0].geo != c.train[1].geo);
  CHECK(c.train[1].geo != c.train[2].geo);
  CHECK(c.architecture().c_in == 2);
  CHECK(c.variables == std::vector<std::string>{"u", "v", "p"});
  for (const auto& s : c.train) {
    const auto& m = s.geo->mesh;
    for (std::size_t k = 0; k < m.x.size(); ++k) {
      CHECK(s.input.data[k] == m.x[k]);
      CHECK(s.input.data[m.x.size() + k] == m.y[k]);
    }
  }
  // narrowest section at mid height: s = 0.1 is a stenosis
  const auto& st = c.train[2].geo->mesh;
  const std::size_t mid = st.ref.n_eta / 2;
  CHECK(st.x(mid, st.ref.n_xi - 1) - st.x(mid, 0) == doctest::Approx(0.8));
}

TEST_CASE("boundary generators") {
  for (double s : {-0.1, -0.03, 0.0, 0.07, 0.1}) {
    auto bc = vessel_boundary(s, 9, 21);
    for (std::size_t k = 0; k < 21; ++k) CHECK(bc.edge(Edge::left)[k].x < bc.edge(Edge::right)[k].x);
    CHECK(bc.edge(Edge::bottom).front().y == -0.25);
    CHECK(bc.edge(Edge::top).back().y == 0.25);
  }
  CHECK_THROWS_AS(vessel_boundary(0.11, 9, 9), UsageError);
  CHECK_THROWS_AS(annulus_boundary(1.0, 0.5, 0, 0, 9, 5), UsageError);
  CHECK_THROWS_AS(channel_boundary(1.0, 1.0, 0.6, 0.5, 0.1, 9, 9), UsageError);

  auto w = wavy_boundary(1.0, 1.0, 0.08, 12, 12);
  CHECK(w.edge(Edge::bottom).back().x == w.edge(Edge::right).front().x);
  CHECK(w.edge(Edge::bottom).back().y == w.edge(Edge::right).front().y);
  CHECK(w.edge(Edge::left).back().x == w.edge(Edge::top).front().x);

  auto a = annulus_boundary(0.5, 1.0, 0.0, 0.0, 13, 5);
  REQUIRE(a.periodic.has_value());
  const auto& inner = a.edge(Edge::bottom);
  CHECK(inner.front().x == inner.back().x);
  for (const auto& p : inner) CHECK(std::hypot(p.x, p.y) == doctest::Approx(0.5));
}

TEST_CASE("source case: KL basis and seeded samples") {
  const Case c = build_case(parse_config(kSource));
  REQUIRE(c.basis != nullptr);
  CHECK(c.basis->eigenvalues.size() == 4);
  REQUIRE(c.train.size() == 6);
  REQUIRE(c.test.size() == 4);
  CHECK(c.train[0].param == 1.0);
  CHECK(c.test[0].param == 100.0);
  const auto& s = c.train[2];
  CHECK(s.source == gpfield::sample_source(*c.basis, 3));
  for (std::size_t k = 0; k < s.source.size(); ++k) CHECK(s.input.data[k] == 0.01 * s.source[k]);
  CHECK_THROWS_AS(c.make_sample(2.5), UsageError);
}

TEST_CASE("zero iterations keep the initialization") {
  const Case c = build_case(parse_config(kHeat));
  TrainOptions opt;
  opt.iterations = 0;
  const auto r = train(c, opt);
  CHECK(r.checkpoint.iteration == 0);
  CHECK(r.checkpoint.net.params() == c.make_network().params());
  REQUIRE(r.history.size() == 1);
  CHECK(r.history[0].iteration == 0);
}

TEST_CASE("training is reproducible and history rows are well formed") {
  const Case c = build_case(parse_config(kHeat));
  const auto a = train(c), b = train(c);
  CHECK(format_history(c, a.history) == format_history(c, b.history));
  CHECK(model::format_checkpoint(a.checkpoint) == model::format_checkpoint(b.checkpoint));
  REQUIRE(a.history.size() == 6);
  for (std::size_t k = 0; k < a.history.size(); ++k) CHECK(a.history[k].iteration == k);
  const auto text = format_history(c, a.history);
  CHECK(text.rfind("iteration,loss,laplace\n", 0) == 0);

  TrainOptions other;
  other.seed = 5;
  CHECK(format_history(c, train(c, other).history) != format_history(c, a.history));
}

TEST_CASE("checkpoints written to disk reload to the same predictions") {
  const Case c = build_case(parse_config(kHeat));
  const auto dir = std::filesystem::temp_directory_path() / "geopinn_test_cases";
  std::filesystem::remove_all(dir);
  TrainOptions opt;
  opt.out_dir = dir;
  const auto r = train(c, opt);
  const auto ck = model::load_checkpoint((dir / "checkpoint.txt").string());
  CHECK(ck.net.params() == r.checkpoint.net.params());
  CHECK(io::read_text(dir / "history.csv") == format_history(c, r.history));

  // evaluating at a training parameter reproduces the training-time pass
  EvalOptions eo;
  eo.test_set = false;
  const auto rows = evaluate(c, ck.net, eo);
  REQUIRE(rows.size() == 2);
  for (std::size_t k = 0; k < 2; ++k) {
    const auto lv = batch_loss(c, r.checkpoint.net, {&c.train[k]});
    CHECK(rows[k].loss == lv.total);
    CHECK(std::isfinite(rows[k].rel_error));
  }
  const auto table = format_eval(rows);
  CHECK(table.rfind("set,param,variable,relative_error,loss\n", 0) == 0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("flow evaluation is marked property-only") {
  const Case c = build_case(parse_config(kFlow));
  CHECK_FALSE(has_oracle(c));
  EvalOptions eo;
  eo.params = {0.02};
  const auto rows = evaluate(c, c.make_network(), eo);
  REQUIRE(rows.size() == 3);
  for (const auto& r : rows) CHECK(std::isnan(r.rel_error));
  CHECK(format_eval(rows).find("property-only") != std::string::npos);
  CHECK_THROWS_AS(reference_solution(c, c.train[0]), UsageError);
}

TEST_CASE("end-to-end gradient matches central differences") {
  for (const std::string* text : {&kHeat, &kFlow, &kSource}) {
    const Case c = build_case(parse_config(*text));
    const auto net = c.make_network(3);
    const auto r = gradient_check(c, net, 12, 1e-4, 11);
    INFO(c.config.name << " worst " << (r.worst.empty() ? "" : r.worst.front()));
    CHECK(r.n_checked == 12);
    CHECK(r.max_rel_error <= 1e-5);
  }
}

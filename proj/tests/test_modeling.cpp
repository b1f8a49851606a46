#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gls/gen.hpp"
#include "gls/ipm.hpp"
#include "gls/modeling.hpp"
#include "gls/rng.hpp"
#include "support/oracles.hpp"

using gls::Instance;
using gls::Vec;
using gls::WeightedGraph;

namespace {

gls::SolverChoice ipm_choice(double eps = 0.25) {
  gls::SolverChoice c;
  c.kind = gls::SolverChoice::Kind::ipm;
  c.eps = eps;
  return c;
}

Vec solve_reduction(const Instance& inst, double eps = 0.25) {
  gls::IpmConfig cfg;
  cfg.eps = eps;
  return gls::solve_ipm(inst, cfg).x;
}

gls::GenOptions gopts(int n, int k) {
  gls::GenOptions o;
  o.n = n;
  o.k = k;
  return o;
}

}  // namespace

TEST_CASE("parse_graph") {
  WeightedGraph g = gls::parse_graph("graph 3 2\n0 1 1.5\n# comment\n1 2 2\n");
  CHECK(g.n == 3);
  REQUIRE(g.edges.size() == 2);
  CHECK(g.edges[1].value == 2.0);
  CHECK_THROWS_AS(gls::parse_graph("graph 2 1\n0 0 1\n"), std::invalid_argument);
  CHECK_THROWS_AS(gls::parse_graph("graph 2 2\n0 1 1\n"), std::invalid_argument);
  CHECK_THROWS_AS(gls::parse_graph("nope\n"), std::invalid_argument);
}

TEST_CASE("shortest path reduction") {
  SUBCASE("single edge") {
    WeightedGraph g;
    g.n = 2;
    g.edges = {{0, 1, 3.0}};
    auto enc = gls::shortest_path_instance(g, 0, 1);
    CHECK(enc.inst.n == 1);
    CHECK(enc.inst.k() == 2);
    const double dec = enc.decode(solve_reduction(enc.inst));
    CHECK(std::abs(dec - 3.0) <= 1.0);
  }
  SUBCASE("triangle picks the two-hop route") {
    WeightedGraph g;
    g.n = 3;
    g.edges = {{0, 1, 3.0}, {0, 2, 1.0}, {2, 1, 1.0}};
    auto enc = gls::shortest_path_instance(g, 0, 1);
    const double dec = enc.decode(solve_reduction(enc.inst));
    CHECK(std::abs(dec - 2.0) <= 1.0);
  }
  SUBCASE("random graphs stay within one of the true distance") {
    for (int trial = 0; trial < 12; ++trial) {
      WeightedGraph g = gls::gen_random_graph(4200 + trial, 6 + trial, 0.3, 10);
      auto enc = gls::shortest_path_instance(g, 0, g.n - 1);
      const double dec = enc.decode(solve_reduction(enc.inst));
      const double want = oracle::dijkstra(g, 0)[g.n - 1];
      CHECK(std::abs(dec - want) <= 1.0);
    }
  }
  SUBCASE("encoder soundness: a unit path flow scores its length") {
    WeightedGraph g = gls::gen_random_graph(99, 9, 0.25, 7);
    auto enc = gls::shortest_path_instance(g, 0, g.n - 1);
    // The reference flow stored in the conservation group is a feasible
    // path; at that flow the conservation norm vanishes.
    Vec f(enc.inst.n, 0.0);
    const gls::SparseVec& ref = enc.inst.groups[0].s;
    for (std::size_t j = 0; j < ref.idx.size(); ++j) f[ref.idx[j]] = ref.val[j];
    double length = 0;
    for (std::size_t e = 0; e < enc.lengths.size(); ++e)
      length += enc.lengths[e] * std::abs(f[e]);
    CHECK(gls::obj(enc.inst, f) == doctest::Approx(length).epsilon(1e-9));
  }
  SUBCASE("doubling the penalty moves the estimate by at most one") {
    for (int trial = 0; trial < 5; ++trial) {
      WeightedGraph g = gls::gen_random_graph(4300 + trial, 8, 0.35, 9);
      auto e1 = gls::shortest_path_instance(g, 0, g.n - 1);
      auto e2 = gls::shortest_path_instance(g, 0, g.n - 1, 2.0 * e1.penalty);
      const double d1 = e1.decode(solve_reduction(e1.inst));
      const double d2 = e2.decode(solve_reduction(e2.inst));
      CHECK(std::abs(d1 - d2) <= 1.0);
    }
  }
  SUBCASE("errors") {
    WeightedGraph g;
    g.n = 4;
    g.edges = {{0, 1, 1.0}, {2, 3, 1.0}};
    CHECK_THROWS_AS(gls::shortest_path_instance(g, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(gls::shortest_path_instance(g, 0, 3), std::invalid_argument);
  }
}

TEST_CASE("min cut reduction") {
  SUBCASE("single s-t edge folds into the constant") {
    WeightedGraph g;
    g.n = 2;
    g.edges = {{0, 1, 5.0}};
    auto enc = gls::mincut_instance(g, 0, 1);
    CHECK(enc.st_constant == 5.0);
    auto dec = enc.decode(Vec(enc.inst.n, 0.0));
    CHECK(dec.value == doctest::Approx(5.0));
  }
  SUBCASE("two-edge path cuts the weaker edge") {
    WeightedGraph g;
    g.n = 3;
    g.edges = {{0, 1, 2.0}, {1, 2, 7.0}};
    auto enc = gls::mincut_instance(g, 0, 2);
    auto dec = enc.decode(solve_reduction(enc.inst));
    CHECK(dec.value == doctest::Approx(2.0));
    CHECK(dec.side[1] == 1);  // the middle vertex stays with the sink
  }
  SUBCASE("random graphs match the max-flow oracle") {
    for (int trial = 0; trial < 12; ++trial) {
      WeightedGraph g = gls::gen_random_graph(4400 + trial, 5 + (trial % 8), 0.4, 10);
      auto enc = gls::mincut_instance(g, 0, g.n - 1);
      Vec x = solve_reduction(enc.inst);
      auto dec = enc.decode(x);
      const double want = oracle::edmonds_karp(g, 0, g.n - 1);
      CHECK(std::abs(dec.value - want) <= 1.0);
      // the returned partition's cut equals the decoded value exactly
      double cut = 0;
      for (const auto& e : g.edges) {
        if (dec.side[e.u] != dec.side[e.v]) cut += e.value;
      }
      CHECK(cut == doctest::Approx(dec.value));
      // thresholding never exceeds the fractional objective
      CHECK(dec.value <= gls::obj(enc.inst, x) + enc.st_constant + 1e-9);
    }
  }
  SUBCASE("0/1 labelings reproduce their cut exactly") {
    gls::Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
      WeightedGraph g = gls::gen_random_graph(4500 + trial, 7, 0.5, 6);
      auto enc = gls::mincut_instance(g, 0, g.n - 1);
      Vec x(enc.inst.n);
      for (double& v : x) v = rng.uniform_int(0, 1);
      double cut = 0;
      for (const auto& e : g.edges) {
        auto label = [&](int v) {
          if (v == 0) return 0.0;
          if (v == g.n - 1) return 1.0;
          return x[enc.var_of_vertex[v]];
        };
        if (label(e.u) != label(e.v)) cut += e.value;
      }
      CHECK(gls::obj(enc.inst, x) + enc.st_constant == doctest::Approx(cut).epsilon(1e-9));
    }
  }
}

TEST_CASE("squared-fidelity solve by nested search") {
  SUBCASE("no tension: returns s0 exactly") {
    Instance smooth;
    smooth.n = 2;
    gls::Group g;
    g.L = gls::assemble_laplacian(2, {{0, 1, 1.0}}, {});
    smooth.groups = {g};
    const Vec s0 = {0.7, 0.7};
    auto sol = gls::l22_fidelity_solve(smooth, s0, ipm_choice(1e-6), 1e-4);
    CHECK(sol.objective == doctest::Approx(0.0).scale(1.0));
    CHECK(sol.x[0] == doctest::Approx(0.7));
    CHECK(sol.x[1] == doctest::Approx(0.7));
  }
  SUBCASE("one dimensional: (x-4)^2 + |x|") {
    Instance smooth;
    smooth.n = 1;
    gls::Group g;
    g.L = gls::assemble_laplacian(1, {}, {{0, 1.0}});
    smooth.groups = {g};
    auto sol = gls::l22_fidelity_solve(smooth, {4.0}, ipm_choice(1e-7), 1e-5);
    CHECK(sol.x[0] == doctest::Approx(3.5).epsilon(1e-3));
    CHECK(sol.objective == doctest::Approx(3.75).epsilon(1e-6));
  }
  SUBCASE("two-variable toy against a grid scan") {
    Instance smooth;
    smooth.n = 2;
    gls::Group g;
    g.L = gls::assemble_laplacian(2, {{0, 1, 1.0}}, {});
    smooth.groups = {g};
    auto sol = gls::l22_fidelity_solve(smooth, {0.0, 2.0}, ipm_choice(1e-7), 1e-5);
    double best = std::numeric_limits<double>::infinity();
    for (double x0 = -0.5; x0 <= 2.5; x0 += 0.001) {
      for (double x1 = x0; x1 <= 2.5; x1 += 0.001) {
        best = std::min(best, x0 * x0 + (x1 - 2) * (x1 - 2) + std::abs(x0 - x1));
      }
    }
    CHECK(sol.objective == doctest::Approx(best).epsilon(1e-3));
  }
}

TEST_CASE("l1 expansion") {
  SUBCASE("zero-smoothness base fits its anchor exactly") {
    Instance base;
    base.n = 2;
    gls::Group zero;
    zero.L.n = 2;
    zero.L.diag.push_back({0, 0.0});
    base.groups = {zero};
    Instance ex = gls::l1_expand(base, {1.0, 2.0});
    CHECK(ex.k() == 3);
    CHECK(gls::obj(ex, {1.0, 2.0}) == doctest::Approx(0.0));
  }
  SUBCASE("group count grows by the dimension") {
    Instance base = gls::gen_random_instance(12, gopts(5, 3));
    Instance ex = gls::l1_expand(base, Vec(5, 0.0));
    CHECK(ex.k() == 8);
  }
  SUBCASE("objective identity on random points") {
    gls::Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
      Instance base = gls::gen_random_instance(800 + trial, gopts(6, 3));
      Vec s(6);
      for (double& v : s) v = rng.uniform(-2.0, 2.0);
      Instance ex = gls::l1_expand(base, s);
      Vec x(6);
      for (double& v : x) v = rng.uniform(-3.0, 3.0);
      double l1 = 0;
      for (int i = 0; i < 6; ++i) l1 += std::abs(x[i] - s[i]);
      CHECK(gls::obj(ex, x) == doctest::Approx(gls::obj(base, x) + l1).epsilon(1e-12));
    }
  }
}

TEST_CASE("clustering") {
  SUBCASE("lambda zero keeps the points") {
    gls::PointSet ps;
    ps.d = 2;
    ps.points = {{0.0, 1.0}, {2.0, -1.0}, {0.5, 0.5}};
    ps.pair_weights = {{0, 1, 1.0}, {1, 2, 1.0}};
    auto centers = gls::solve_clustering(ps, 0.0, ipm_choice(1e-6), 1e-5);
    for (int i = 0; i < 3; ++i) {
      CHECK(centers[i][0] == doctest::Approx(ps.points[i][0]).epsilon(1e-8));
      CHECK(centers[i][1] == doctest::Approx(ps.points[i][1]).epsilon(1e-8));
    }
  }
  SUBCASE("huge pair weight merges two points at the midpoint") {
    gls::PointSet ps;
    ps.d = 2;
    ps.points = {{0.0, 0.0}, {2.0, 2.0}};
    ps.pair_weights = {{0, 1, 50.0}};
    auto centers = gls::solve_clustering(ps, 1.0, ipm_choice(1e-7), 1e-5);
    const double gap = std::hypot(centers[0][0] - centers[1][0], centers[0][1] - centers[1][1]);
    CHECK(gap <= 1e-3);
    CHECK(centers[0][0] == doctest::Approx(1.0).epsilon(1e-3));
  }
  SUBCASE("three colinear points against the subgradient oracle") {
    gls::PointSet ps;
    ps.d = 1;
    ps.points = {{0.0}, {1.0}, {2.0}};
    ps.pair_weights = {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}};
    auto enc = gls::clustering_instance(ps, 1.0);
    auto sol = gls::l22_fidelity_solve(enc.smooth, enc.s0, ipm_choice(1e-7), 1e-5);
    auto sub = oracle::subgradient_l22_minimize(enc.smooth, enc.s0, enc.s0, 1000000);
    CHECK(std::abs(sol.objective - sub.value) <= 1e-2);
  }
  SUBCASE("empty point set is rejected") {
    gls::PointSet ps;
    ps.d = 2;
    CHECK_THROWS_AS(gls::clustering_instance(ps, 1.0), std::invalid_argument);
  }
}

TEST_CASE("parse_points") {
  gls::PointSet ps = gls::parse_points("points 2 2\n0 1\n2 3\nw 0 1 0.5\n");
  CHECK(ps.d == 2);
  CHECK(ps.points[1][0] == 2.0);
  REQUIRE(ps.pair_weights.size() == 1);
  CHECK(std::get<2>(ps.pair_weights[0]) == 0.5);
  CHECK_THROWS_AS(gls::parse_points("points 1 1\n"), std::invalid_argument);
  CHECK_THROWS_AS(gls::parse_points("points 2 1\n0\n1\nw 0 0 1\n"), std::invalid_argument);
}

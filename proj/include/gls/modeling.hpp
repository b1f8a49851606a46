#pragma once

#include <functional>
#include <string>
#include <tuple>
#include <vector>

#include "gls/instance.hpp"

namespace gls {

// Undirected graph; value is a length (shortest path) or capacity (min cut).
struct WeightedGraph {
  struct Edge {
    int u = 0, v = 0;
    double value = 0;
  };
  int n = 0;
  std::vector<Edge> edges;
};

// Graph file: line 1 `graph <n> <m>`, then m lines `<u> <v> <value>`,
// '#' comments allowed.
WeightedGraph parse_graph(const std::string& text);

// Flow encoding of s-t shortest path: one variable per edge, one
// conservation group P^2 * B B' around a feasible path flow, and one
// single-variable group per edge whose norm is l_e * |f_e|.
struct ShortestPathEncoding {
  Instance inst;
  std::vector<double> lengths;  // per edge
  double penalty = 0;
  double decode(const Vec& f) const;  // sum_e l_e |f_e|
};

// penalty <= 0 selects the default 4 * n * max_length * sqrt(m).
ShortestPathEncoding shortest_path_instance(const WeightedGraph& g, int s, int t,
                                            double penalty = 0);

// Fused encoding of s-t min cut: labels on V \ {s,t}; each edge becomes its
// own group (Laplacian between free vertices, diagonal pin to 0 toward s and
// to 1 toward t). Direct s-t edges fold into a constant.
struct MincutEncoding {
  Instance inst;
  std::vector<int> var_of_vertex;  // -1 for s and t
  int s = 0, t = 0;
  double st_constant = 0;  // capacity of direct s-t edges
  WeightedGraph graph_copy;

  struct Decoded {
    double value = 0;                // best thresholded cut, s-t edges included
    std::vector<int> side;           // per vertex: 0 = source side, 1 = sink side
  };
  Decoded decode(const Vec& x) const;
};

MincutEncoding mincut_instance(const WeightedGraph& g, int s, int t);

// Minimizes ||x - s0||_2^2 + sum_i ||x - s_i||_{L_i} by nested ternary
// search: outer on the fidelity magnitude t, inner maximizing the Lagrangian
// over lambda >= 0, each evaluation solving the instance plus a lambda^2 * I
// fidelity group. Returns the best x found, scored by the true objective.
Solution l22_fidelity_solve(const Instance& smooth_groups, const Vec& s0,
                            const SolverChoice& solver, double search_tol = 1e-4);

// Adds one single-coordinate diagonal group per coordinate, with fixed value
// s[u], so the objective gains sum_u |x_u - s_u|.
Instance l1_expand(const Instance& base, const Vec& l1_fidelity_s);

struct PointSet {
  int d = 0;
  std::vector<Vec> points;
  // (i, j, w_ij): symmetric association weights, canonicalized to i < j.
  std::vector<std::tuple<int, int, double>> pair_weights;
};

// Points file: `points <n> <d>`, n coordinate lines, then optional
// `w <i> <j> <val>` lines.
PointSet parse_points(const std::string& text);

// Convex clustering smoothness groups over n*d variables: one group of d
// coordinate-difference edges per weighted pair, scaled by (lambda * w_ij)^2.
struct ClusteringEncoding {
  Instance smooth;
  int num_points = 0;
  int dim = 0;
  Vec s0;  // flattened input points
  std::vector<Vec> decode(const Vec& x) const;
};

ClusteringEncoding clustering_instance(const PointSet& ps, double lambda);

// Full clustering solve through the squared-fidelity wrapper.
std::vector<Vec> solve_clustering(const PointSet& ps, double lambda, const SolverChoice& solver,
                                  double search_tol = 1e-4);

}  // namespace gls

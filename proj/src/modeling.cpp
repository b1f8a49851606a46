#include "gls/modeling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <sstream>
#include <tuple>

namespace gls {

namespace {

std::vector<std::string> split_tokens(const std::string& line) {
  std::istringstream ls(line);
  std::vector<std::string> toks;
  std::string t;
  while (ls >> t) toks.push_back(t);
  return toks;
}

// Line-based reader shared by the graph and points parsers.
struct LineReader {
  std::istringstream in;
  int line_no = 0;
  explicit LineReader(const std::string& text) : in(text) {}
  bool next(std::vector<std::string>& toks) {
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.resize(hash);
      toks = split_tokens(line);
      if (!toks.empty()) return true;
    }
    return false;
  }
};

[[noreturn]] void fail(int line, const std::string& msg) {
  throw std::invalid_argument("line " + std::to_string(line) + ": " + msg);
}

int to_int(const std::string& s, int line) {
  try {
    std::size_t pos = 0;
    long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("");
    return static_cast<int>(v);
  } catch (...) {
    fail(line, "expected integer, got '" + s + "'");
  }
}

double to_real(const std::string& s, int line) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size() || !std::isfinite(v)) throw std::invalid_argument("");
    return v;
  } catch (...) {
    fail(line, "expected real, got '" + s + "'");
  }
}

}  // namespace

WeightedGraph parse_graph(const std::string& text) {
  LineReader rd(text);
  std::vector<std::string> toks;
  if (!rd.next(toks)) throw std::invalid_argument("empty graph file");
  if (toks.size() != 3 || toks[0] != "graph") fail(rd.line_no, "expected 'graph <n> <m>'");
  WeightedGraph g;
  g.n = to_int(toks[1], rd.line_no);
  const int m = to_int(toks[2], rd.line_no);
  if (g.n < 1) fail(rd.line_no, "vertex count must be positive");
  for (int i = 0; i < m; ++i) {
    if (!rd.next(toks)) fail(rd.line_no, "expected " + std::to_string(m) + " edges");
    if (toks.size() != 3) fail(rd.line_no, "expected '<u> <v> <value>'");
    WeightedGraph::Edge e;
    e.u = to_int(toks[0], rd.line_no);
    e.v = to_int(toks[1], rd.line_no);
    e.value = to_real(toks[2], rd.line_no);
    if (e.u < 0 || e.u >= g.n || e.v < 0 || e.v >= g.n) fail(rd.line_no, "vertex out of range");
    if (e.u == e.v) fail(rd.line_no, "self-loop");
    if (!(e.value > 0)) fail(rd.line_no, "edge value must be positive");
    g.edges.push_back(e);
  }
  if (rd.next(toks)) fail(rd.line_no, "trailing content after edge list");
  return g;
}

double ShortestPathEncoding::decode(const Vec& f) const {
  if (f.size() != lengths.size())
    throw std::invalid_argument("shortest-path decode: dimension mismatch");
  double total = 0.0;
  for (std::size_t e = 0; e < lengths.size(); ++e) total += lengths[e] * std::abs(f[e]);
  return total;
}

ShortestPathEncoding shortest_path_instance(const WeightedGraph& g, int s, int t,
                                            double penalty) {
  if (s == t) throw std::invalid_argument("shortest_path_instance: s and t must differ");
  if (s < 0 || s >= g.n || t < 0 || t >= g.n)
    throw std::invalid_argument("shortest_path_instance: terminal out of range");
  const int m = static_cast<int>(g.edges.size());

  // BFS path from s to t for the feasible reference flow.
  std::vector<std::vector<std::pair<int, int>>> adj(g.n);  // (neighbor, edge id)
  for (int e = 0; e < m; ++e) {
    adj[g.edges[e].u].push_back({g.edges[e].v, e});
    adj[g.edges[e].v].push_back({g.edges[e].u, e});
  }
  std::vector<int> prev_edge(g.n, -1), prev_vertex(g.n, -1);
  std::vector<char> seen(g.n, 0);
  std::queue<int> bfs;
  bfs.push(s);
  seen[s] = 1;
  while (!bfs.empty()) {
    const int u = bfs.front();
    bfs.pop();
    for (const auto& [v, e] : adj[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        prev_edge[v] = e;
        prev_vertex[v] = u;
        bfs.push(v);
      }
    }
  }
  if (!seen[t]) throw std::invalid_argument("shortest_path_instance: s and t are not connected");

  double max_len = 0.0;
  for (const auto& e : g.edges) max_len = std::max(max_len, e.value);
  if (penalty <= 0) penalty = 4.0 * g.n * max_len * std::sqrt(double(std::max(m, 1)));

  // Reference unit flow along the BFS path; +1 means stored u -> v direction.
  std::vector<std::pair<int, double>> ref;
  for (int v = t; v != s; v = prev_vertex[v]) {
    const int e = prev_edge[v];
    ref.emplace_back(e, g.edges[e].u == prev_vertex[v] ? 1.0 : -1.0);
  }

  ShortestPathEncoding enc;
  enc.penalty = penalty;
  enc.lengths.resize(m);
  for (int e = 0; e < m; ++e) enc.lengths[e] = g.edges[e].value;

  enc.inst.n = m;
  Group conservation;
  conservation.L.n = m;
  for (int v = 0; v < g.n; ++v) {
    FactorRow row;
    for (const auto& [nbr, e] : adj[v]) {
      (void)nbr;
      row.idx.push_back(e);
      // +penalty at the stored tail, -penalty at the stored head.
      row.val.push_back(g.edges[e].u == v ? penalty : -penalty);
    }
    if (!row.idx.empty()) conservation.L.rows.push_back(std::move(row));
  }
  conservation.s = SparseVec::from_pairs(ref);
  enc.inst.groups.push_back(std::move(conservation));

  for (int e = 0; e < m; ++e) {
    Group ge;
    ge.L.n = m;
    ge.L.diag.push_back({e, enc.lengths[e] * enc.lengths[e]});
    enc.inst.groups.push_back(std::move(ge));
  }
  return enc;
}

MincutEncoding::Decoded MincutEncoding::decode(const Vec& x) const {
  const WeightedGraph& g = graph_copy;
  std::vector<double> label(g.n, 0.0);
  for (int v = 0; v < g.n; ++v) {
    if (v == s) {
      label[v] = 0.0;
    } else if (v == t) {
      label[v] = 1.0;
    } else {
      const int var = var_of_vertex[v];
      label[v] = var >= 0 ? std::clamp(x[var], 0.0, 1.0) : 0.0;
    }
  }
  // Candidate thresholds: midpoints between consecutive distinct labels.
  std::vector<double> vals(label);
  vals.push_back(0.0);
  vals.push_back(1.0);
  std::sort(vals.begin(), vals.end());
  vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
  std::vector<double> thetas;
  for (std::size_t i = 0; i + 1 < vals.size(); ++i)
    thetas.push_back(0.5 * (vals[i] + vals[i + 1]));
  if (thetas.empty()) thetas.push_back(0.5);

  Decoded best;
  best.value = std::numeric_limits<double>::infinity();
  for (double theta : thetas) {
    double cut = 0.0;
    for (const auto& e : g.edges) {
      const bool a = label[e.u] <= theta && e.u != t;
      const bool b = label[e.v] <= theta && e.v != t;
      const bool src_a = a || e.u == s;
      const bool src_b = b || e.v == s;
      if (src_a != src_b) cut += e.value;
    }
    if (cut < best.value) {
      best.value = cut;
      best.side.assign(g.n, 1);
      for (int v = 0; v < g.n; ++v) {
        if (v == s || (v != t && label[v] <= theta)) best.side[v] = 0;
      }
    }
  }
  return best;
}

MincutEncoding mincut_instance(const WeightedGraph& g, int s, int t) {
  if (s == t) throw std::invalid_argument("mincut_instance: s and t must differ");
  if (s < 0 || s >= g.n || t < 0 || t >= g.n)
    throw std::invalid_argument("mincut_instance: terminal out of range");

  MincutEncoding enc;
  enc.s = s;
  enc.t = t;
  enc.graph_copy = g;
  enc.var_of_vertex.assign(g.n, -1);
  int nv = 0;
  for (int v = 0; v < g.n; ++v) {
    if (v != s && v != t) enc.var_of_vertex[v] = nv++;
  }
  enc.inst.n = std::max(nv, 1);

  for (const auto& e : g.edges) {
    const double c2 = e.value * e.value;
    const bool u_term = (e.u == s || e.u == t);
    const bool v_term = (e.v == s || e.v == t);
    if (u_term && v_term) {
      enc.st_constant += e.value;
      continue;
    }
    Group grp;
    grp.L.n = enc.inst.n;
    if (!u_term && !v_term) {
      grp.L.edges.push_back({std::min(enc.var_of_vertex[e.u], enc.var_of_vertex[e.v]),
                             std::max(enc.var_of_vertex[e.u], enc.var_of_vertex[e.v]), c2});
    } else {
      const int free_v = u_term ? enc.var_of_vertex[e.v] : enc.var_of_vertex[e.u];
      const int term = u_term ? e.u : e.v;
      grp.L.diag.push_back({free_v, c2});
      if (term == t) grp.s = SparseVec::from_pairs({{free_v, 1.0}});
    }
    enc.inst.groups.push_back(std::move(grp));
  }
  if (enc.inst.groups.empty()) {
    Group zero;
    zero.L.n = enc.inst.n;
    zero.L.diag.push_back({0, 0.0});
    enc.inst.groups.push_back(std::move(zero));
  }
  return enc;
}

namespace {

struct TernaryResult {
  double arg = 0;
  double value = 0;
};

// Ternary search over [lo, hi]; maximize = true seeks the maximum of a
// concave function, otherwise the minimum of a convex one.
TernaryResult ternary_search(double lo, double hi, bool maximize, double tol_abs,
                             const std::function<double(double)>& f) {
  const int max_iters = 60;
  for (int i = 0; i < max_iters && hi - lo > tol_abs; ++i) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    const double f1 = f(m1);
    const double f2 = f(m2);
    const bool move_lo = maximize ? (f1 < f2) : (f1 > f2);
    if (move_lo)
      lo = m1;
    else
      hi = m2;
  }
  const double mid = 0.5 * (lo + hi);
  return {mid, f(mid)};
}

}  // namespace

Solution l22_fidelity_solve(const Instance& smooth_groups, const Vec& s0,
                            const SolverChoice& solver, double search_tol) {
  validate_instance(smooth_groups);
  if (static_cast<int>(s0.size()) != smooth_groups.n)
    throw std::invalid_argument("l22_fidelity_solve: s0 dimension mismatch");
  if (!(search_tol > 0)) throw std::invalid_argument("l22_fidelity_solve: bad tolerance");

  const int n = smooth_groups.n;
  auto true_objective = [&](const Vec& x) {
    double fid = 0.0;
    for (int i = 0; i < n; ++i) fid += (x[i] - s0[i]) * (x[i] - s0[i]);
    return fid + obj(smooth_groups, x);
  };

  Vec best_x = s0;
  double best_f = true_objective(s0);
  int solves = 0;

  // Instance with the fidelity group appended last; its matrix is rebuilt
  // per lambda.
  Instance work = smooth_groups;
  {
    Group fid;
    fid.L.n = n;
    fid.s = SparseVec::from_dense(s0);
    work.groups.push_back(std::move(fid));
  }
  auto solve_lambda = [&](double lambda) {
    Group& fid = work.groups.back();
    fid.L.diag.clear();
    const double l2 = std::max(lambda * lambda, 1e-300);
    for (int i = 0; i < n; ++i) fid.L.diag.push_back({i, l2});
    Solution sol = run_solver(work, solver);
    ++solves;
    const double f = true_objective(sol.x);
    if (f < best_f) {
      best_f = f;
      best_x = sol.x;
    }
    // Lagrangian inner value: sum of smooth norms + lambda * ||x - s0||_2.
    double fid_norm = 0.0;
    for (int i = 0; i < n; ++i) fid_norm += (sol.x[i] - s0[i]) * (sol.x[i] - s0[i]);
    return obj(smooth_groups, sol.x) + lambda * std::sqrt(fid_norm);
  };

  double norm_s0 = 0.0;
  for (double v : s0) norm_s0 += v * v;
  norm_s0 = std::sqrt(norm_s0);
  double smooth_at_s0 = obj(smooth_groups, s0);
  double max_norm = std::max(1.0, norm_s0);
  for (const Group& grp : smooth_groups.groups)
    max_norm = std::max(max_norm, group_norm(grp, s0));

  const double t_max =
      norm_s0 + smooth_at_s0 + std::sqrt(std::max(smooth_at_s0, 0.0)) + 1.0;
  const double lambda_max = 2.0 * n * max_norm;

  auto dual_at_t = [&](double t) {
    auto inner = [&](double lambda) { return -lambda * t + solve_lambda(lambda); };
    TernaryResult r = ternary_search(0.0, lambda_max, true, search_tol * lambda_max, inner);
    return t * t + r.value;
  };
  ternary_search(0.0, t_max, false, search_tol * t_max, dual_at_t);

  // The dual search pins the value but its inner solutions sit on optimal
  // faces, not at the constrained minimizer. Polish with the reweighted
  // quadratic upper bound ||r||^2/(2c) + c/2, which decreases the true
  // objective monotonically and shares the same linear-system oracle.
  {
    const int k = smooth_groups.k();
    Instance full = smooth_groups;
    Group fid;
    fid.L.n = n;
    for (int i = 0; i < n; ++i) fid.L.diag.push_back({i, 1.0});
    fid.s = SparseVec::from_dense(s0);
    full.groups.push_back(std::move(fid));
    InstanceOperator op(full);
    Vec x = best_x;
    for (int it = 0; it < 2000; ++it) {
      Vec wv(k + 1);
      for (int i = 0; i < k; ++i)
        wv[i] = 2.0 * std::max(group_norm(smooth_groups.groups[i], x), 1e-10);
      wv[k] = 1.0;  // exact quadratic fidelity
      QuadMinResult qm = quad_min_with(full, op, Weights(wv), 1e-11);
      double move = 0.0, scale = 1.0;
      for (int i = 0; i < n; ++i) {
        move = std::max(move, std::abs(qm.x[i] - x[i]));
        scale = std::max(scale, std::abs(qm.x[i]));
      }
      x = std::move(qm.x);
      const double f = true_objective(x);
      if (f < best_f) {
        best_f = f;
        best_x = x;
      }
      if (move <= 1e-10 * scale) break;
    }
  }

  Solution out;
  out.x = std::move(best_x);
  out.objective = best_f;
  out.iterations = solves;
  out.solver_tag = "l22-search";
  return out;
}

Instance l1_expand(const Instance& base, const Vec& l1_fidelity_s) {
  validate_instance(base);
  if (static_cast<int>(l1_fidelity_s.size()) != base.n)
    throw std::invalid_argument("l1_expand: dimension mismatch");
  Instance out = base;
  for (int u = 0; u < base.n; ++u) {
    Group g;
    g.L.n = base.n;
    g.L.diag.push_back({u, 1.0});
    if (l1_fidelity_s[u] != 0.0) g.s = SparseVec::from_pairs({{u, l1_fidelity_s[u]}});
    out.groups.push_back(std::move(g));
  }
  return out;
}

PointSet parse_points(const std::string& text) {
  LineReader rd(text);
  std::vector<std::string> toks;
  if (!rd.next(toks)) throw std::invalid_argument("empty points file");
  if (toks.size() != 3 || toks[0] != "points") fail(rd.line_no, "expected 'points <n> <d>'");
  PointSet ps;
  const int n = to_int(toks[1], rd.line_no);
  ps.d = to_int(toks[2], rd.line_no);
  if (n < 1 || ps.d < 1) fail(rd.line_no, "counts must be positive");
  for (int i = 0; i < n; ++i) {
    if (!rd.next(toks)) fail(rd.line_no, "expected " + std::to_string(n) + " points");
    if (static_cast<int>(toks.size()) != ps.d) fail(rd.line_no, "wrong coordinate count");
    Vec p(ps.d);
    for (int a = 0; a < ps.d; ++a) p[a] = to_real(toks[a], rd.line_no);
    ps.points.push_back(std::move(p));
  }
  std::map<std::pair<int, int>, double> weights;
  while (rd.next(toks)) {
    if (toks.size() != 4 || toks[0] != "w") fail(rd.line_no, "expected 'w <i> <j> <val>'");
    const int i = to_int(toks[1], rd.line_no);
    const int j = to_int(toks[2], rd.line_no);
    const double w = to_real(toks[3], rd.line_no);
    if (i < 0 || i >= n || j < 0 || j >= n || i == j) fail(rd.line_no, "bad pair");
    if (w < 0) fail(rd.line_no, "pair weight must be nonnegative");
    weights[{std::min(i, j), std::max(i, j)}] += w;
  }
  for (const auto& [key, w] : weights) ps.pair_weights.emplace_back(key.first, key.second, w);
  return ps;
}

std::vector<Vec> ClusteringEncoding::decode(const Vec& x) const {
  std::vector<Vec> centers(num_points, Vec(dim, 0.0));
  for (int i = 0; i < num_points; ++i) {
    for (int a = 0; a < dim; ++a) centers[i][a] = x[std::size_t(i) * dim + a];
  }
  return centers;
}

ClusteringEncoding clustering_instance(const PointSet& ps, double lambda) {
  if (ps.points.empty()) throw std::invalid_argument("clustering_instance: empty point set");
  if (lambda < 0) throw std::invalid_argument("clustering_instance: lambda must be nonnegative");
  const int n = static_cast<int>(ps.points.size());
  const int d = ps.d;
  for (const Vec& p : ps.points) {
    if (static_cast<int>(p.size()) != d)
      throw std::invalid_argument("clustering_instance: point dimension mismatch");
  }

  ClusteringEncoding enc;
  enc.num_points = n;
  enc.dim = d;
  enc.smooth.n = n * d;
  enc.s0.resize(std::size_t(n) * d);
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < d; ++a) enc.s0[std::size_t(i) * d + a] = ps.points[i][a];
  }

  for (const auto& [i, j, w] : ps.pair_weights) {
    const double scaled = lambda * w;
    if (!(scaled > 0)) continue;
    Group g;
    g.L.n = enc.smooth.n;
    for (int a = 0; a < d; ++a) {
      g.L.edges.push_back({i * d + a, j * d + a, scaled * scaled});
    }
    enc.smooth.groups.push_back(std::move(g));
  }
  if (enc.smooth.groups.empty()) {
    Group zero;
    zero.L.n = enc.smooth.n;
    zero.L.diag.push_back({0, 0.0});
    enc.smooth.groups.push_back(std::move(zero));
  }
  return enc;
}

std::vector<Vec> solve_clustering(const PointSet& ps, double lambda, const SolverChoice& solver,
                                  double search_tol) {
  ClusteringEncoding enc = clustering_instance(ps, lambda);
  Solution sol = l22_fidelity_solve(enc.smooth, enc.s0, solver, search_tol);
  return enc.decode(sol.x);
}

}  // namespace gls

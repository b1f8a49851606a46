#include "gls/gen.hpp"

#include <algorithm>
#include <cmath>

#include "gls/rng.hpp"

namespace gls {

namespace {

std::vector<int> random_subset(Rng& rng, int n, int count) {
  std::vector<int> all(n);
  for (int i = 0; i < n; ++i) all[i] = i;
  // Fisher-Yates prefix
  for (int i = 0; i < count; ++i) {
    const int j = rng.uniform_int(i, n - 1);
    std::swap(all[i], all[j]);
  }
  all.resize(count);
  return all;
}

}  // namespace

Instance gen_random_instance(std::uint64_t seed, const GenOptions& opt) {
  if (opt.n < 2 || opt.k < 1) throw std::invalid_argument("gen_random_instance: bad sizes");
  Rng rng(seed);
  Instance inst;
  inst.n = opt.n;
  bool anchored = false;

  for (int g = 0; g < opt.k; ++g) {
    Group grp;
    std::vector<LapEdge> edges;
    std::vector<DiagEntry> diag;
    const int type = rng.uniform_int(0, 3);
    if (type == 0) {
      // path over a random subset
      const int len = rng.uniform_int(2, std::min(opt.n, 6));
      std::vector<int> verts = random_subset(rng, opt.n, len);
      for (int i = 0; i + 1 < len; ++i)
        edges.push_back({verts[i], verts[i + 1], rng.uniform(0.2, 5.0)});
    } else if (type == 1) {
      const int count = rng.uniform_int(1, 2 * opt.n);
      for (int i = 0; i < count; ++i) {
        const int u = rng.uniform_int(0, opt.n - 1);
        int v = rng.uniform_int(0, opt.n - 2);
        if (v >= u) ++v;
        edges.push_back({u, v, rng.uniform(0.2, 5.0)});
      }
      if (rng.uniform() < 0.3) diag.push_back({rng.uniform_int(0, opt.n - 1), rng.uniform(0.1, 2.0)});
    } else if (type == 2) {
      const int count = rng.uniform_int(1, std::min(opt.n, 5));
      std::vector<int> verts = random_subset(rng, opt.n, count);
      for (int u : verts) diag.push_back({u, rng.uniform(0.2, 5.0)});
      anchored = true;
    } else {
      const int u = rng.uniform_int(0, opt.n - 1);
      int v = rng.uniform_int(0, opt.n - 2);
      if (v >= u) ++v;
      edges.push_back({u, v, rng.uniform(0.2, 5.0)});
    }
    grp.L = assemble_laplacian(opt.n, edges, diag);
    if (rng.uniform() < 0.7) {
      const int count = rng.uniform_int(1, std::min(opt.n, 4));
      std::vector<int> verts = random_subset(rng, opt.n, count);
      std::vector<std::pair<int, double>> sv;
      for (int u : verts) sv.emplace_back(u, rng.uniform(-2.0, 2.0));
      grp.s = SparseVec::from_pairs(std::move(sv));
    }
    inst.groups.push_back(std::move(grp));
  }

  (void)anchored;
  if (opt.ensure_anchor) {
    // Full-support diagonal group: every variable is tied down, so the
    // aggregate system is positive definite for any weights.
    Group grp;
    std::vector<DiagEntry> diag;
    for (int u = 0; u < opt.n; ++u) diag.push_back({u, rng.uniform(0.2, 1.0)});
    grp.L = assemble_laplacian(opt.n, {}, diag);
    std::vector<std::pair<int, double>> sv;
    for (int u = 0; u < std::min(opt.n, 3); ++u) sv.emplace_back(u, rng.uniform(-1.0, 1.0));
    grp.s = SparseVec::from_pairs(std::move(sv));
    inst.groups.back() = std::move(grp);
  }
  validate_instance(inst);
  return inst;
}

Instance gen_tv_instance(std::uint64_t seed, int size, double lambda, TvMode mode) {
  Image img = synthetic_test_image(size, size);
  add_gaussian_noise(img, 0.25, seed);
  Instance inst = grid_instance(img, mode, lambda);
  Group fid;
  fid.L.n = inst.n;
  for (int i = 0; i < inst.n; ++i) fid.L.diag.push_back({i, 1.0});
  fid.s = SparseVec::from_dense(img.data);
  inst.groups.push_back(std::move(fid));
  return inst;
}

WeightedGraph gen_random_graph(std::uint64_t seed, int n, double edge_prob, int max_value) {
  Rng rng(seed);
  WeightedGraph g;
  g.n = n;
  // Random spanning tree first, extra edges by probability.
  for (int v = 1; v < n; ++v) {
    const int u = rng.uniform_int(0, v - 1);
    g.edges.push_back({u, v, double(rng.uniform_int(1, max_value))});
  }
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      if (rng.uniform() < edge_prob) {
        g.edges.push_back({u, v, double(rng.uniform_int(1, max_value))});
      }
    }
  }
  return g;
}

}  // namespace gls

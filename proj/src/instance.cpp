#include "gls/instance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gls/kernels.hpp"

namespace gls {

SparseVec SparseVec::from_pairs(std::vector<std::pair<int, double>> pairs) {
  std::sort(pairs.begin(), pairs.end());
  SparseVec s;
  for (const auto& [i, v] : pairs) {
    if (!s.idx.empty() && s.idx.back() == i) {
      s.val.back() = v;  // last write wins
    } else {
      s.idx.push_back(i);
      s.val.push_back(v);
    }
  }
  return s;
}

SparseVec SparseVec::from_dense(const Vec& v) {
  SparseVec s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] != 0.0) {
      s.idx.push_back(static_cast<int>(i));
      s.val.push_back(v[i]);
    }
  }
  return s;
}

double SparseVec::at(int i) const {
  auto it = std::lower_bound(idx.begin(), idx.end(), i);
  if (it == idx.end() || *it != i) return 0.0;
  return val[static_cast<std::size_t>(it - idx.begin())];
}

Vec SparseVec::dense(int n) const {
  Vec v(n, 0.0);
  for (std::size_t j = 0; j < idx.size(); ++j) v[idx[j]] = val[j];
  return v;
}

void validate_instance(const Instance& inst) {
  if (inst.k() < 1) throw std::invalid_argument("instance must have at least one group");
  if (inst.n < 1) throw std::invalid_argument("instance dimension must be positive");
  for (const Group& g : inst.groups) {
    if (g.L.n != inst.n) throw std::invalid_argument("group matrix dimension mismatch");
    for (std::size_t j = 0; j < g.s.idx.size(); ++j) {
      if (g.s.idx[j] < 0 || g.s.idx[j] >= inst.n)
        throw std::invalid_argument("fixed potential index out of range");
      if (!std::isfinite(g.s.val[j]))
        throw std::invalid_argument("fixed potential must be finite");
    }
  }
}

Weights::Weights(Vec values) : w(std::move(values)) {
  for (double x : w) {
    if (!(x > 0) || !std::isfinite(x))
      throw std::invalid_argument("weights must be positive and finite");
  }
}

Weights Weights::ones(int k) {
  Weights r;
  r.w.assign(k, 1.0);
  return r;
}

double group_quad(const Group& g, const Vec& x) {
  double q = 0.0;
  for (const LapEdge& e : g.L.edges) {
    const double d = (x[e.u] - g.s.at(e.u)) - (x[e.v] - g.s.at(e.v));
    q += e.w * d * d;
  }
  for (const DiagEntry& d : g.L.diag) {
    const double z = x[d.u] - g.s.at(d.u);
    q += d.d * z * z;
  }
  for (const FactorRow& r : g.L.rows) {
    double t = 0.0;
    for (std::size_t j = 0; j < r.idx.size(); ++j)
      t += r.val[j] * (x[r.idx[j]] - g.s.at(r.idx[j]));
    q += t * t;
  }
  return std::max(0.0, q);
}

double group_norm(const Group& g, const Vec& x) { return std::sqrt(group_quad(g, x)); }

void group_apply_residual(const Group& g, const Vec& x, double c, Vec& y) {
  for (const LapEdge& e : g.L.edges) {
    const double d = c * e.w * ((x[e.u] - g.s.at(e.u)) - (x[e.v] - g.s.at(e.v)));
    y[e.u] += d;
    y[e.v] -= d;
  }
  for (const DiagEntry& d : g.L.diag) y[d.u] += c * d.d * (x[d.u] - g.s.at(d.u));
  for (const FactorRow& r : g.L.rows) {
    double t = 0.0;
    for (std::size_t j = 0; j < r.idx.size(); ++j)
      t += r.val[j] * (x[r.idx[j]] - g.s.at(r.idx[j]));
    t *= c;
    for (std::size_t j = 0; j < r.idx.size(); ++j) y[r.idx[j]] += r.val[j] * t;
  }
}

double obj(const Instance& inst, const Vec& x) {
  if (static_cast<int>(x.size()) != inst.n) throw std::invalid_argument("obj: dimension mismatch");
  double total = 0.0;
  for (const Group& g : inst.groups) total += group_norm(g, x);
  return total;
}

double obj2(const Instance& inst, const Vec& x, const Weights& w) {
  if (static_cast<int>(x.size()) != inst.n)
    throw std::invalid_argument("obj2: dimension mismatch");
  if (w.size() != inst.k()) throw std::invalid_argument("obj2: weight count mismatch");
  double total = 0.0;
  for (int i = 0; i < inst.k(); ++i) {
    if (!(w.w[i] > 0)) throw std::invalid_argument("obj2: weights must be positive");
    total += group_quad(inst.groups[i], x) / w.w[i];
  }
  return total;
}

InstanceOperator::InstanceOperator(const Instance& inst) : n_(inst.n), k_(inst.k()) {
  validate_instance(inst);
  alpha_.assign(k_, 1.0);
  for (int g = 0; g < k_; ++g) {
    const Group& grp = inst.groups[g];
    for (const LapEdge& e : grp.L.edges) edges_.push_back({e.u, e.v, g, e.w});
    for (const DiagEntry& d : grp.L.diag) diags_.push_back({d.u, g, d.d});
    for (const FactorRow& r : grp.L.rows) rows_.push_back({g, r});
    // Cache L_i s_i for the normal-equation right-hand side.
    if (grp.s.empty()) {
      ls_.push_back({});
    } else {
      ls_.push_back(SparseVec::from_dense(gls::apply(grp.L, grp.s.dense(inst.n))));
    }
  }

  // Deflation classes across the union structure of all groups.
  std::vector<int> parent(n_);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (const TaggedEdge& e : edges_) parent[find(e.u)] = find(e.v);
  for (const TaggedRow& r : rows_) {
    for (std::size_t j = 1; j < r.row.idx.size(); ++j)
      parent[find(r.row.idx[j - 1])] = find(r.row.idx[j]);
  }
  std::vector<char> anchored(n_, 0);
  for (const TaggedDiag& d : diags_) {
    if (d.d > 0) anchored[find(d.u)] = 1;
  }
  for (const TaggedRow& r : rows_) {
    for (int i : r.row.idx) anchored[find(i)] = 1;
  }
  defl_.cls.assign(n_, -1);
  std::vector<int> class_of_root(n_, -1);
  for (int i = 0; i < n_; ++i) {
    const int root = find(i);
    if (anchored[root]) continue;
    if (class_of_root[root] < 0) class_of_root[root] = defl_.num_classes++;
    defl_.cls[i] = class_of_root[root];
  }
}

void InstanceOperator::set_coeffs(Vec alpha) {
  if (static_cast<int>(alpha.size()) != k_)
    throw std::invalid_argument("InstanceOperator: coefficient count mismatch");
  alpha_ = std::move(alpha);
}

void InstanceOperator::apply(const double* x, double* y) const {
  std::fill(y, y + n_, 0.0);
  for (const TaggedEdge& e : edges_) {
    const double c = alpha_[e.g] * e.w * (x[e.u] - x[e.v]);
    y[e.u] += c;
    y[e.v] -= c;
  }
  for (const TaggedDiag& d : diags_) y[d.u] += alpha_[d.g] * d.d * x[d.u];
  for (const TaggedRow& r : rows_) {
    double t = 0.0;
    for (std::size_t j = 0; j < r.row.idx.size(); ++j) t += r.row.val[j] * x[r.row.idx[j]];
    t *= alpha_[r.g];
    for (std::size_t j = 0; j < r.row.idx.size(); ++j) y[r.row.idx[j]] += r.row.val[j] * t;
  }
}

void InstanceOperator::jacobi_diag(double* d) const {
  std::fill(d, d + n_, 0.0);
  for (const TaggedEdge& e : edges_) {
    const double c = alpha_[e.g] * e.w;
    d[e.u] += c;
    d[e.v] += c;
  }
  for (const TaggedDiag& de : diags_) d[de.u] += alpha_[de.g] * de.d;
  for (const TaggedRow& r : rows_) {
    for (std::size_t j = 0; j < r.row.idx.size(); ++j)
      d[r.row.idx[j]] += alpha_[r.g] * r.row.val[j] * r.row.val[j];
  }
}

Vec InstanceOperator::weighted_rhs(const Vec& alpha) const {
  Vec b(n_, 0.0);
  for (int g = 0; g < k_; ++g) {
    const SparseVec& ls = ls_[g];
    for (std::size_t j = 0; j < ls.idx.size(); ++j) b[ls.idx[j]] += alpha[g] * ls.val[j];
  }
  return b;
}

DenseMatrix InstanceOperator::dense() const {
  DenseMatrix a(n_, n_);
  for (const TaggedEdge& e : edges_) {
    const double c = alpha_[e.g] * e.w;
    a.at(e.u, e.u) += c;
    a.at(e.v, e.v) += c;
    a.at(e.u, e.v) -= c;
    a.at(e.v, e.u) -= c;
  }
  for (const TaggedDiag& d : diags_) a.at(d.u, d.u) += alpha_[d.g] * d.d;
  for (const TaggedRow& r : rows_) {
    for (std::size_t i = 0; i < r.row.idx.size(); ++i) {
      for (std::size_t j = 0; j < r.row.idx.size(); ++j) {
        a.at(r.row.idx[i], r.row.idx[j]) += alpha_[r.g] * r.row.val[i] * r.row.val[j];
      }
    }
  }
  return a;
}

namespace {

constexpr int kDenseSolveLimit = 600;

}  // namespace

QuadMinResult quad_min_with(const Instance& inst, InstanceOperator& op, const Weights& w,
                            double tol, QuadMethod method) {
  if (w.size() != inst.k()) throw std::invalid_argument("quad_min: weight count mismatch");
  Vec alpha(inst.k());
  for (int i = 0; i < inst.k(); ++i) alpha[i] = 1.0 / w.w[i];
  op.set_coeffs(alpha);
  Vec b = op.weighted_rhs(alpha);

  QuadMinResult res;
  const bool can_dense = inst.n <= kDenseSolveLimit && op.deflation().empty();
  const bool use_dense =
      method == QuadMethod::dense || (method == QuadMethod::automatic && can_dense);
  if (use_dense) {
    DenseLu lu(op.dense());
    res.x = lu.solve(b);
    res.iterations = 0;
  } else {
    const Deflation& defl = op.deflation();
    CgReport rep = cg_solve(op, b, tol, 20 * inst.n + 400, defl.empty() ? nullptr : &defl, false);
    res.x = std::move(rep.x);
    res.iterations = rep.iterations;
  }

  // True residual of the normal equations.
  Vec ax(inst.n);
  op.apply(res.x.data(), ax.data());
  double r2 = 0.0, b2 = 0.0;
  for (int i = 0; i < inst.n; ++i) {
    const double d = ax[i] - b[i];
    r2 += d * d;
    b2 += b[i] * b[i];
  }
  res.relative_residual = b2 > 0 ? std::sqrt(r2 / b2) : std::sqrt(r2);
  res.opt2 = obj2(inst, res.x, w);
  return res;
}

QuadMinResult quad_min(const Instance& inst, const Weights& w, double tol, QuadMethod method) {
  InstanceOperator op(inst);
  return quad_min_with(inst, op, w, tol, method);
}

}  // namespace gls

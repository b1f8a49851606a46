#include "gls/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "gls/kernels.hpp"

namespace gls {

namespace {

void check_finite(const Vec& v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw SolveError(std::string(what) + " contains a non-finite value");
  }
}

}  // namespace

SddMatrix assemble_laplacian(int n, const std::vector<LapEdge>& edges,
                             const std::vector<DiagEntry>& diag) {
  if (n < 0) throw std::invalid_argument("assemble_laplacian: negative dimension");
  std::map<std::pair<int, int>, double> merged;
  for (const LapEdge& e : edges) {
    if (e.u < 0 || e.u >= n || e.v < 0 || e.v >= n)
      throw std::invalid_argument("assemble_laplacian: edge index out of range");
    if (e.u == e.v) throw std::invalid_argument("assemble_laplacian: self-loop");
    if (!(e.w > 0) || !std::isfinite(e.w))
      throw std::invalid_argument("assemble_laplacian: edge weight must be positive");
    merged[{std::min(e.u, e.v), std::max(e.u, e.v)}] += e.w;
  }
  std::map<int, double> dmerged;
  for (const DiagEntry& d : diag) {
    if (d.u < 0 || d.u >= n)
      throw std::invalid_argument("assemble_laplacian: diagonal index out of range");
    if (d.d < 0 || !std::isfinite(d.d))
      throw std::invalid_argument("assemble_laplacian: diagonal entry must be nonnegative");
    dmerged[d.u] += d.d;
  }
  SddMatrix m;
  m.n = n;
  m.edges.reserve(merged.size());
  for (const auto& [key, w] : merged) m.edges.push_back({key.first, key.second, w});
  m.diag.reserve(dmerged.size());
  for (const auto& [u, d] : dmerged) m.diag.push_back({u, d});
  return m;
}

void add_factor_row(SddMatrix& m, std::vector<int> idx, std::vector<double> val) {
  if (idx.size() != val.size()) throw std::invalid_argument("add_factor_row: length mismatch");
  for (int i : idx) {
    if (i < 0 || i >= m.n) throw std::invalid_argument("add_factor_row: index out of range");
  }
  for (double v : val) {
    if (!std::isfinite(v)) throw std::invalid_argument("add_factor_row: non-finite coefficient");
  }
  m.rows.push_back({std::move(idx), std::move(val)});
}

Vec apply(const SddMatrix& m, const Vec& x) {
  if (static_cast<int>(x.size()) != m.n) throw std::invalid_argument("apply: dimension mismatch");
  Vec y(m.n, 0.0);
  for (const LapEdge& e : m.edges) {
    const double c = e.w * (x[e.u] - x[e.v]);
    y[e.u] += c;
    y[e.v] -= c;
  }
  for (const DiagEntry& d : m.diag) y[d.u] += d.d * x[d.u];
  for (const FactorRow& r : m.rows) {
    double t = 0.0;
    for (std::size_t j = 0; j < r.idx.size(); ++j) t += r.val[j] * x[r.idx[j]];
    for (std::size_t j = 0; j < r.idx.size(); ++j) y[r.idx[j]] += r.val[j] * t;
  }
  return y;
}

double quad_norm(const SddMatrix& m, const Vec& z) {
  if (static_cast<int>(z.size()) != m.n)
    throw std::invalid_argument("quad_norm: dimension mismatch");
  double q = 0.0;
  for (const LapEdge& e : m.edges) {
    const double d = z[e.u] - z[e.v];
    q += e.w * d * d;
  }
  for (const DiagEntry& d : m.diag) q += d.d * z[d.u] * z[d.u];
  for (const FactorRow& r : m.rows) {
    double t = 0.0;
    for (std::size_t j = 0; j < r.idx.size(); ++j) t += r.val[j] * z[r.idx[j]];
    q += t * t;
  }
  return std::sqrt(std::max(0.0, q));
}

DenseMatrix dense_from(const SddMatrix& m) {
  DenseMatrix a(m.n, m.n);
  for (const LapEdge& e : m.edges) {
    a.at(e.u, e.u) += e.w;
    a.at(e.v, e.v) += e.w;
    a.at(e.u, e.v) -= e.w;
    a.at(e.v, e.u) -= e.w;
  }
  for (const DiagEntry& d : m.diag) a.at(d.u, d.u) += d.d;
  for (const FactorRow& r : m.rows) {
    for (std::size_t i = 0; i < r.idx.size(); ++i) {
      for (std::size_t j = 0; j < r.idx.size(); ++j) {
        a.at(r.idx[i], r.idx[j]) += r.val[i] * r.val[j];
      }
    }
  }
  return a;
}

DenseLu::DenseLu(const DenseMatrix& a) : original_(a), lu_(a) {
  if (a.rows != a.cols) throw std::invalid_argument("DenseLu: matrix must be square");
  const int n = a.rows;
  perm_.resize(n);
  std::iota(perm_.begin(), perm_.end(), 0);
  double scale = 0.0;
  for (double v : a.a) scale = std::max(scale, std::abs(v));
  const double tiny = std::max(scale, 1.0) * 1e-300;
  for (int col = 0; col < n; ++col) {
    int piv = col;
    double best = std::abs(lu_.at(col, col));
    for (int r = col + 1; r < n; ++r) {
      const double cand = std::abs(lu_.at(r, col));
      if (cand > best) {
        best = cand;
        piv = r;
      }
    }
    if (best <= tiny) throw SolveError("dense_solve: matrix is singular to working precision");
    if (piv != col) {
      for (int j = 0; j < n; ++j) std::swap(lu_.at(piv, j), lu_.at(col, j));
      std::swap(perm_[piv], perm_[col]);
    }
    const double inv = 1.0 / lu_.at(col, col);
    for (int r = col + 1; r < n; ++r) {
      const double f = lu_.at(r, col) * inv;
      lu_.at(r, col) = f;
      if (f == 0.0) continue;
      for (int j = col + 1; j < n; ++j) lu_.at(r, j) -= f * lu_.at(col, j);
    }
  }
}

Vec DenseLu::solve_raw(const Vec& b) const {
  const int n = lu_.rows;
  if (static_cast<int>(b.size()) != n)
    throw std::invalid_argument("dense_solve: dimension mismatch");
  Vec x(n);
  for (int i = 0; i < n; ++i) x[i] = b[perm_[i]];
  for (int i = 0; i < n; ++i) {
    double s = x[i];
    for (int j = 0; j < i; ++j) s -= lu_.at(i, j) * x[j];
    x[i] = s;
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = x[i];
    for (int j = i + 1; j < n; ++j) s -= lu_.at(i, j) * x[j];
    x[i] = s / lu_.at(i, i);
  }
  return x;
}

Vec DenseLu::solve(const Vec& b) const {
  const int n = lu_.rows;
  Vec x = solve_raw(b);
  // One refinement pass keeps the residual near machine precision even for
  // ill-conditioned systems.
  Vec r(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double s = b[i];
    const double* row = &original_.a[std::size_t(i) * n];
    s -= kern::dot(row, x.data(), n);
    r[i] = s;
  }
  Vec dx = solve_raw(r);
  for (int i = 0; i < n; ++i) x[i] += dx[i];
  return x;
}

Vec dense_solve(const DenseMatrix& a, const Vec& b) {
  check_finite(b, "dense_solve rhs");
  DenseLu lu(a);
  return lu.solve(b);
}

void deflate(const Deflation& defl, Vec& v) {
  if (defl.empty()) return;
  thread_local Vec acc;
  thread_local std::vector<int> cnt;
  acc.assign(defl.num_classes, 0.0);
  cnt.assign(defl.num_classes, 0);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const int c = defl.cls[i];
    if (c >= 0) {
      acc[c] += v[i];
      ++cnt[c];
    }
  }
  for (int c = 0; c < defl.num_classes; ++c) acc[c] = cnt[c] > 0 ? acc[c] / cnt[c] : 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const int c = defl.cls[i];
    if (c >= 0) v[i] -= acc[c];
  }
}

CgReport cg_solve(const LinearOperator& op, const Vec& b, double tol, int max_iters,
                  const Deflation* defl, bool check_consistency) {
  const int n = op.dim();
  if (static_cast<int>(b.size()) != n) throw std::invalid_argument("cg_solve: dimension mismatch");
  check_finite(b, "cg_solve rhs");

  const double bnorm = std::sqrt(kern::dot(b.data(), b.data(), n));
  CgReport rep;
  rep.x.assign(n, 0.0);
  if (bnorm == 0.0) return rep;

  Vec r = b;
  if (defl != nullptr && !defl->empty()) {
    deflate(*defl, r);
    if (check_consistency) {
      // Component means of b must be ~0 for the system to be consistent.
      double drop2 = 0.0;
      for (int i = 0; i < n; ++i) {
        const double d = b[i] - r[i];
        drop2 += d * d;
      }
      if (std::sqrt(drop2) > std::max(tol, 1e-12) * bnorm * 10.0) {
        throw SolveError(
            "cg_solve: inconsistent right-hand side (singular component carries mass)");
      }
    }
  }

  Vec invdiag(n);
  op.jacobi_diag(invdiag.data());
  for (int i = 0; i < n; ++i) invdiag[i] = invdiag[i] > 0.0 ? 1.0 / invdiag[i] : 1.0;

  Vec z(n), p(n), q(n);
  kern::hadamard(invdiag.data(), r.data(), z.data(), n);
  if (defl != nullptr) deflate(*defl, z);
  p = z;
  double rz = kern::dot(r.data(), z.data(), n);

  const double target = tol * bnorm;
  double rnorm = std::sqrt(kern::dot(r.data(), r.data(), n));
  int it = 0;
  while (rnorm > target && it < max_iters) {
    op.apply(p.data(), q.data());
    const double pq = kern::dot(p.data(), q.data(), n);
    if (!(pq > 0.0)) break;  // operator not positive along p: stop with best iterate
    const double alpha = rz / pq;
    kern::axpy(alpha, p.data(), rep.x.data(), n);
    kern::axpy(-alpha, q.data(), r.data(), n);
    if (defl != nullptr) deflate(*defl, r);
    kern::hadamard(invdiag.data(), r.data(), z.data(), n);
    if (defl != nullptr) deflate(*defl, z);
    const double rz_next = kern::dot(r.data(), z.data(), n);
    kern::xpay(z.data(), rz_next / rz, p.data(), n);
    rz = rz_next;
    rnorm = std::sqrt(kern::dot(r.data(), r.data(), n));
    ++it;
  }

  // Report the true residual, not the recurrence value.
  op.apply(rep.x.data(), q.data());
  kern::sub(b.data(), q.data(), r.data(), n);
  if (defl != nullptr) deflate(*defl, r);
  rep.relative_residual = std::sqrt(kern::dot(r.data(), r.data(), n)) / bnorm;
  rep.iterations = it;
  return rep;
}

namespace {

class SddOperator final : public LinearOperator {
 public:
  explicit SddOperator(const SddMatrix& m) : m_(m) {}
  int dim() const override { return m_.n; }
  void apply(const double* x, double* y) const override {
    std::fill(y, y + m_.n, 0.0);
    for (const LapEdge& e : m_.edges) {
      const double c = e.w * (x[e.u] - x[e.v]);
      y[e.u] += c;
      y[e.v] -= c;
    }
    for (const DiagEntry& d : m_.diag) y[d.u] += d.d * x[d.u];
    for (const FactorRow& r : m_.rows) {
      double t = 0.0;
      for (std::size_t j = 0; j < r.idx.size(); ++j) t += r.val[j] * x[r.idx[j]];
      for (std::size_t j = 0; j < r.idx.size(); ++j) y[r.idx[j]] += r.val[j] * t;
    }
  }
  void jacobi_diag(double* d) const override {
    std::fill(d, d + m_.n, 0.0);
    for (const LapEdge& e : m_.edges) {
      d[e.u] += e.w;
      d[e.v] += e.w;
    }
    for (const DiagEntry& de : m_.diag) d[de.u] += de.d;
    for (const FactorRow& r : m_.rows) {
      for (std::size_t j = 0; j < r.idx.size(); ++j) d[r.idx[j]] += r.val[j] * r.val[j];
    }
  }

 private:
  const SddMatrix& m_;
};

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

// Connected components of the Laplacian structure that carry no diagonal mass
// and no factor rows are singular; their constants get projected out.
Deflation sdd_deflation(const SddMatrix& m) {
  UnionFind uf(m.n);
  for (const LapEdge& e : m.edges) uf.unite(e.u, e.v);
  std::vector<char> anchored(m.n, 0);
  for (const DiagEntry& d : m.diag) {
    if (d.d > 0.0) anchored[uf.find(d.u)] = 1;
  }
  for (const FactorRow& r : m.rows) {
    for (int i : r.idx) anchored[uf.find(i)] = 1;
  }
  Deflation defl;
  defl.cls.assign(m.n, -1);
  std::vector<int> class_of_root(m.n, -1);
  for (int i = 0; i < m.n; ++i) {
    const int root = uf.find(i);
    if (anchored[root]) continue;
    if (class_of_root[root] < 0) class_of_root[root] = defl.num_classes++;
    defl.cls[i] = class_of_root[root];
  }
  return defl;
}

CgReport solve_sdd(const SddMatrix& m, const Vec& b, double tol, int max_iters) {
  if (max_iters < 0) max_iters = 10 * m.n + 200;
  if (!(tol > 0)) throw std::invalid_argument("solve_sdd: tolerance must be positive");
  SddOperator op(m);
  Deflation defl = sdd_deflation(m);
  return cg_solve(op, b, tol, max_iters, defl.empty() ? nullptr : &defl);
}

}  // namespace gls

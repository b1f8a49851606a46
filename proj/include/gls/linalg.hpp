#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace gls {

using Vec = std::vector<double>;

// Raised when a linear solve cannot meet its contract (inconsistent
// right-hand side, singular dense system, non-finite input).
struct SolveError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LapEdge {
  int u = 0, v = 0;
  double w = 0;
};

struct DiagEntry {
  int u = 0;
  double d = 0;
};

// Signed incidence row: contributes (sum_j val[j] * x[idx[j]])^2 to the
// quadratic form.
struct FactorRow {
  std::vector<int> idx;
  std::vector<double> val;
};

// Sparse symmetric PSD matrix stored as a weighted graph Laplacian plus a
// nonnegative diagonal. Quadratic form:
//   z'Mz = sum_edges w*(z_u - z_v)^2 + sum_diag d*z_u^2 + sum_rows (r'z)^2.
// The optional signed rows cover PSD couplings (flow conservation) that have
// no representation with nonpositive off-diagonals; matrices produced by
// assemble_laplacian never carry rows, and for those the assembled form is
// SDD with row sums equal to the extra diagonal.
struct SddMatrix {
  int n = 0;
  std::vector<LapEdge> edges;   // canonical u < v, merged duplicates
  std::vector<DiagEntry> diag;  // unique u, d >= 0
  std::vector<FactorRow> rows;

  bool laplacian_plus_diag() const { return rows.empty(); }
};

// Validates and canonicalizes; duplicate (u,v) edges merge by weight
// addition, duplicate diagonal entries by addition.
SddMatrix assemble_laplacian(int n, const std::vector<LapEdge>& edges,
                             const std::vector<DiagEntry>& diag);

void add_factor_row(SddMatrix& m, std::vector<int> idx, std::vector<double> val);

// y = M x, computed from the sparse form.
Vec apply(const SddMatrix& m, const Vec& x);

// sqrt(z'Mz); tiny negative rounding artifacts clamp to zero.
double quad_norm(const SddMatrix& m, const Vec& z);

struct DenseMatrix {
  int rows = 0, cols = 0;
  std::vector<double> a;  // row-major

  DenseMatrix() = default;
  DenseMatrix(int r, int c) : rows(r), cols(c), a(std::size_t(r) * c, 0.0) {}
  double& at(int i, int j) { return a[std::size_t(i) * cols + j]; }
  double at(int i, int j) const { return a[std::size_t(i) * cols + j]; }
};

DenseMatrix dense_from(const SddMatrix& m);

// LU with partial pivoting plus iterative refinement. Throws SolveError if
// singular to working precision.
Vec dense_solve(const DenseMatrix& a, const Vec& b);

// Reusable LU factorization for repeated right-hand sides.
class DenseLu {
 public:
  explicit DenseLu(const DenseMatrix& a);
  Vec solve(const Vec& b) const;           // with one refinement pass
  Vec solve_raw(const Vec& b) const;       // plain back-substitution

 private:
  DenseMatrix original_;
  DenseMatrix lu_;
  std::vector<int> perm_;
};

// Matrix-free operator used by the conjugate gradient solver.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;
  virtual int dim() const = 0;
  virtual void apply(const double* x, double* y) const = 0;  // y = Mx
  virtual void jacobi_diag(double* d) const = 0;             // d = diag(M)
};

// Mean-deflation classes for singular systems: cls[i] >= 0 assigns variable i
// to a class whose mean is projected out each iteration, -1 leaves it alone.
struct Deflation {
  std::vector<int> cls;
  int num_classes = 0;
  bool empty() const { return num_classes == 0; }
};

void deflate(const Deflation& defl, Vec& v);

struct CgReport {
  Vec x;
  double relative_residual = 0;
  int iterations = 0;
};

// Jacobi-preconditioned conjugate gradient; zero diagonal entries
// precondition with 1. With check_consistency set, right-hand sides whose
// deflated components carry mass above the tolerance floor raise SolveError;
// callers that build provably consistent systems pass false and the mass is
// silently projected out.
CgReport cg_solve(const LinearOperator& op, const Vec& b, double tol, int max_iters,
                  const Deflation* defl = nullptr, bool check_consistency = true);

// Deflation classes for a single matrix: Laplacian components with no
// diagonal mass and no factor rows.
Deflation sdd_deflation(const SddMatrix& m);

// Conjugate gradient solve of M x = b. Default tolerance 1e-9, default
// iteration cap 10n + 200. Pure Laplacian components are handled by
// projecting out per-component constants.
CgReport solve_sdd(const SddMatrix& m, const Vec& b, double tol = 1e-9, int max_iters = -1);

}  // namespace gls

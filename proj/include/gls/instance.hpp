#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "gls/linalg.hpp"

namespace gls {

// Sparse vector with default 0; indices sorted.
struct SparseVec {
  std::vector<int> idx;
  std::vector<double> val;

  static SparseVec from_pairs(std::vector<std::pair<int, double>> pairs);
  static SparseVec from_dense(const Vec& v);
  double at(int i) const;
  Vec dense(int n) const;
  bool empty() const { return idx.empty(); }
};

// One objective term: the norm ||x - s||_L.
struct Group {
  SddMatrix L;
  SparseVec s;
};

struct Instance {
  int n = 0;
  std::vector<Group> groups;
  int k() const { return static_cast<int>(groups.size()); }
};

// Checks k >= 1, matching dimensions, finite fixed potentials.
void validate_instance(const Instance& inst);

struct Weights {
  Vec w;

  Weights() = default;
  explicit Weights(Vec values);
  static Weights ones(int k);
  int size() const { return static_cast<int>(w.size()); }
};

struct Solution {
  Vec x;
  double objective = 0;
  int iterations = 0;
  std::vector<std::string> trace_columns;
  std::vector<Vec> trace;
  std::string solver_tag;
};

// ||x - s||_L^2 and its square root for one group.
double group_quad(const Group& g, const Vec& x);
double group_norm(const Group& g, const Vec& x);
// y += c * L (x - s)
void group_apply_residual(const Group& g, const Vec& x, double c, Vec& y);

// sum_i ||x - s_i||_{L_i}
double obj(const Instance& inst, const Vec& x);
// sum_i (1/w_i) ||x - s_i||^2_{L_i}
double obj2(const Instance& inst, const Vec& x, const Weights& w);

// Aggregate operator sum_i alpha_i L_i with per-group coefficients, shared by
// the iterative solvers. Immutable structure; coefficients swap per call.
class InstanceOperator final : public LinearOperator {
 public:
  explicit InstanceOperator(const Instance& inst);

  void set_coeffs(Vec alpha);
  const Vec& coeffs() const { return alpha_; }

  int dim() const override { return n_; }
  void apply(const double* x, double* y) const override;
  void jacobi_diag(double* d) const override;

  // sum_i alpha_i L_i s_i
  Vec weighted_rhs(const Vec& alpha) const;
  DenseMatrix dense() const;  // with current coefficients
  const Deflation& deflation() const { return defl_; }

 private:
  struct TaggedEdge {
    int u, v, g;
    double w;
  };
  struct TaggedDiag {
    int u, g;
    double d;
  };
  struct TaggedRow {
    int g;
    FactorRow row;
  };

  int n_ = 0;
  int k_ = 0;
  Vec alpha_;
  std::vector<TaggedEdge> edges_;
  std::vector<TaggedDiag> diags_;
  std::vector<TaggedRow> rows_;
  std::vector<SparseVec> ls_;  // cached L_i s_i
  Deflation defl_;
};

struct QuadMinResult {
  Vec x;
  double opt2 = 0;
  double relative_residual = 0;
  int iterations = 0;
};

enum class QuadMethod { automatic, cg, dense };

// Minimizes sum_i (1/w_i)||x - s_i||^2 by solving the normal equations
//   (sum_i (1/w_i) L_i) x = sum_i (1/w_i) L_i s_i.
// opt2 is recomputed from the returned x.
QuadMinResult quad_min(const Instance& inst, const Weights& w, double tol = 1e-9,
                       QuadMethod method = QuadMethod::automatic);

// Same solve against a prebuilt operator (hot loops). Leaves the operator's
// coefficients set to 1/w.
QuadMinResult quad_min_with(const Instance& inst, InstanceOperator& op, const Weights& w,
                            double tol, QuadMethod method = QuadMethod::automatic);

// Solver selection passed through the higher-level front ends.
struct SolverChoice {
  enum class Kind { mw, ipm };
  Kind kind = Kind::mw;
  double eps = 0.1;
  bool strict = false;
};

Solution run_solver(const Instance& inst, const SolverChoice& choice);

}  // namespace gls

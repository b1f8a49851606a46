#include "gls/ipm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gls/kernels.hpp"

namespace gls {

namespace {

// Per-group barrier state at a point.
struct GroupEval {
  double q = 0;      // ||x - s||^2
  double D = 0;      // y^2 - q
  double ypq = 0;    // y^2 + q
  double alpha = 0;  // 2 / D
  double beta = 0;   // 4 / (D * ypq)
  Vec u;             // L (x - s) on the support
};

// Shared machinery for repeated Newton solves on one instance.
class IpmWork {
 public:
  explicit IpmWork(const Instance& inst) : inst_(inst), op_(inst) {
    supports_.resize(inst.k());
    for (int g = 0; g < inst.k(); ++g) {
      std::vector<int> s;
      for (const LapEdge& e : inst.groups[g].L.edges) {
        s.push_back(e.u);
        s.push_back(e.v);
      }
      for (const DiagEntry& d : inst.groups[g].L.diag) s.push_back(d.u);
      for (const FactorRow& r : inst.groups[g].L.rows)
        s.insert(s.end(), r.idx.begin(), r.idx.end());
      std::sort(s.begin(), s.end());
      s.erase(std::unique(s.begin(), s.end()), s.end());
      supports_[g] = std::move(s);
    }
  }

  const Instance& inst() const { return inst_; }
  InstanceOperator& op() { return op_; }
  const InstanceOperator& op() const { return op_; }
  const std::vector<int>& support(int g) const { return supports_[g]; }

  // Evaluate q_i, u_i and the derived coefficients; throws if infeasible.
  void eval(const BarrierPoint& p, std::vector<GroupEval>& out) const {
    const int k = inst_.k();
    out.resize(k);
    for (int g = 0; g < k; ++g) {
      GroupEval& ge = out[g];
      ge.q = group_quad(inst_.groups[g], p.x);
      const double y = p.y[g];
      ge.D = y * y - ge.q;
      if (!(y > 0) || !(ge.D > 0))
        throw SolveError("barrier point is not strictly feasible");
      ge.ypq = y * y + ge.q;
      ge.alpha = 2.0 / ge.D;
      ge.beta = 4.0 / (ge.D * ge.ypq);
      const std::vector<int>& sup = supports_[g];
      ge.u.assign(sup.size(), 0.0);
      accumulate_u(g, p.x, ge.u);
    }
  }

  // u = L_g (x - s_g) restricted to the support.
  void accumulate_u(int g, const Vec& x, Vec& u) const {
    const Group& grp = inst_.groups[g];
    const std::vector<int>& sup = supports_[g];
    auto slot = [&](int global) {
      return std::lower_bound(sup.begin(), sup.end(), global) - sup.begin();
    };
    for (const LapEdge& e : grp.L.edges) {
      const double c = e.w * ((x[e.u] - grp.s.at(e.u)) - (x[e.v] - grp.s.at(e.v)));
      u[slot(e.u)] += c;
      u[slot(e.v)] -= c;
    }
    for (const DiagEntry& d : grp.L.diag) u[slot(d.u)] += d.d * (x[d.u] - grp.s.at(d.u));
    for (const FactorRow& r : grp.L.rows) {
      double t = 0.0;
      for (std::size_t j = 0; j < r.idx.size(); ++j)
        t += r.val[j] * (x[r.idx[j]] - grp.s.at(r.idx[j]));
      for (std::size_t j = 0; j < r.idx.size(); ++j) u[slot(r.idx[j])] += r.val[j] * t;
    }
  }

  double u_dot(int g, const GroupEval& ge, const double* x) const {
    const std::vector<int>& sup = supports_[g];
    double acc = 0.0;
    for (std::size_t j = 0; j < sup.size(); ++j) acc += ge.u[j] * x[sup[j]];
    return acc;
  }

  void u_axpy(int g, const GroupEval& ge, double c, double* y) const {
    const std::vector<int>& sup = supports_[g];
    for (std::size_t j = 0; j < sup.size(); ++j) y[sup[j]] += c * ge.u[j];
  }

 private:
  const Instance& inst_;
  InstanceOperator op_;
  std::vector<std::vector<int>> supports_;
};

// Pivoted operator S = sum alpha_i L_i - sum beta_i u_i u_i'.
class SchurOperator final : public LinearOperator {
 public:
  SchurOperator(const IpmWork& work, const std::vector<GroupEval>& ge)
      : work_(work), ge_(ge) {}
  int dim() const override { return work_.inst().n; }
  void apply(const double* x, double* y) const override {
    work_.op().apply(x, y);
    for (int g = 0; g < work_.inst().k(); ++g) {
      const double c = ge_[g].beta * work_.u_dot(g, ge_[g], x);
      work_.u_axpy(g, ge_[g], -c, y);
    }
  }
  void jacobi_diag(double* d) const override {
    work_.op().jacobi_diag(d);
    for (int g = 0; g < work_.inst().k(); ++g) {
      const std::vector<int>& sup = work_.support(g);
      for (std::size_t j = 0; j < sup.size(); ++j)
        d[sup[j]] -= ge_[g].beta * ge_[g].u[j] * ge_[g].u[j];
    }
    for (int i = 0; i < dim(); ++i) d[i] = std::max(d[i], 0.0);
  }

 private:
  const IpmWork& work_;
  const std::vector<GroupEval>& ge_;
};

void set_alpha(IpmWork& work, const std::vector<GroupEval>& ge) {
  Vec alpha(work.inst().k());
  for (int g = 0; g < work.inst().k(); ++g) alpha[g] = ge[g].alpha;
  work.op().set_coeffs(std::move(alpha));
}

// rhs_x' = rhs_x + sum_i (2 y_i / (y_i^2 + q_i)) rhs_y[i] u_i
Vec folded_rhs(const IpmWork& work, const std::vector<GroupEval>& ge, const BarrierPoint& p,
               const Vec& rhs_x, const Vec& rhs_y) {
  Vec r = rhs_x;
  for (int g = 0; g < work.inst().k(); ++g)
    work.u_axpy(g, ge[g], 2.0 * p.y[g] / ge[g].ypq * rhs_y[g], r.data());
  return r;
}

// dy_i = (D_i^2 rhs_y[i] + 4 y_i u_i'dx) / (2 (y_i^2 + q_i))
Vec back_substitute(const IpmWork& work, const std::vector<GroupEval>& ge, const BarrierPoint& p,
                    const Vec& rhs_y, const Vec& dx) {
  const int k = work.inst().k();
  Vec dy(k);
  for (int g = 0; g < k; ++g) {
    const double udx = work.u_dot(g, ge[g], dx.data());
    dy[g] = (ge[g].D * ge[g].D * rhs_y[g] + 4.0 * p.y[g] * udx) / (2.0 * ge[g].ypq);
  }
  return dy;
}

// Residual of the full (n+k) Newton system, relative to the rhs norm.
double full_residual(const IpmWork& work, const std::vector<GroupEval>& ge,
                     const BarrierPoint& p, const Vec& rhs_x, const Vec& rhs_y, const Vec& dx,
                     const Vec& dy) {
  const int n = work.inst().n;
  const int k = work.inst().k();
  Vec rx(n);
  work.op().apply(dx.data(), rx.data());  // sum alpha_i L_i dx
  double r2 = 0.0, b2 = 0.0;
  for (int g = 0; g < k; ++g) {
    const double udx = work.u_dot(g, ge[g], dx.data());
    const double d2 = ge[g].D * ge[g].D;
    // x-block: + (4/D^2) u (u'dx) - (4y/D^2) u dy
    work.u_axpy(g, ge[g], 4.0 / d2 * udx - 4.0 * p.y[g] / d2 * dy[g], rx.data());
    // y-block row
    const double ry =
        -4.0 * p.y[g] / d2 * udx + 2.0 / d2 * ge[g].ypq * dy[g] - rhs_y[g];
    r2 += ry * ry;
    b2 += rhs_y[g] * rhs_y[g];
  }
  for (int i = 0; i < n; ++i) {
    const double d = rx[i] - rhs_x[i];
    r2 += d * d;
    b2 += rhs_x[i] * rhs_x[i];
  }
  return b2 > 0 ? std::sqrt(r2 / b2) : std::sqrt(r2);
}

constexpr int kDenseLimit = 600;
constexpr int kSmwGroupLimit = 64;

Vec solve_pivoted(IpmWork& work, const std::vector<GroupEval>& ge, const Vec& rhs,
                  HessianRoute route) {
  const Instance& inst = work.inst();
  const int n = inst.n;
  const int k = inst.k();
  const bool singular = !work.op().deflation().empty();
  if (route == HessianRoute::automatic) {
    if (singular)
      route = HessianRoute::schur_cg;
    else if (n <= kDenseLimit)
      route = HessianRoute::dense;
    else if (k <= kSmwGroupLimit)
      route = HessianRoute::smw;
    else
      route = HessianRoute::schur_cg;
  }

  if (route == HessianRoute::dense) {
    DenseMatrix s = work.op().dense();
    for (int g = 0; g < k; ++g) {
      const std::vector<int>& sup = work.support(g);
      const Vec& u = ge[g].u;
      for (std::size_t a = 0; a < sup.size(); ++a) {
        for (std::size_t b = 0; b < sup.size(); ++b) {
          s.at(sup[a], sup[b]) -= ge[g].beta * u[a] * u[b];
        }
      }
    }
    DenseLu lu(s);
    return lu.solve(rhs);
  }

  if (route == HessianRoute::schur_cg) {
    SchurOperator sop(work, ge);
    const Deflation& defl = work.op().deflation();
    CgReport rep = cg_solve(sop, rhs, 1e-11, 40 * n + 1000, defl.empty() ? nullptr : &defl, false);
    return rep.x;
  }

  // Sherman-Morrison-Woodbury over the base A = sum alpha_i L_i with the
  // rank-k correction -sum beta_i u_i u_i'.
  const Deflation& defl = work.op().deflation();
  const Deflation* dp = defl.empty() ? nullptr : &defl;
  auto solve_a = [&](const Vec& b) {
    CgReport rep = cg_solve(work.op(), b, 1e-12, 40 * n + 1000, dp, false);
    return rep.x;
  };
  Vec w = solve_a(rhs);
  std::vector<Vec> z(k);
  std::vector<Vec> scaled_u(k);
  for (int g = 0; g < k; ++g) {
    Vec ug(n, 0.0);
    work.u_axpy(g, ge[g], std::sqrt(ge[g].beta), ug.data());
    scaled_u[g] = ug;
    z[g] = solve_a(ug);
  }
  DenseMatrix m(k, k);
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b)
      m.at(a, b) = kern::dot(scaled_u[a].data(), z[b].data(), n) - (a == b ? 1.0 : 0.0);
  }
  Vec utw(k);
  for (int g = 0; g < k; ++g) utw[g] = kern::dot(scaled_u[g].data(), w.data(), n);
  Vec coef;
  try {
    coef = dense_solve(m, utw);
  } catch (const SolveError&) {
    throw SolveError("hessian_solve: rank-k correction is singular (near-infeasible point)");
  }
  Vec dx = w;
  for (int g = 0; g < k; ++g) kern::axpy(-coef[g], z[g].data(), dx.data(), n);
  return dx;
}

HessianSolveResult hessian_solve_with(IpmWork& work, const std::vector<GroupEval>& ge,
                                      const BarrierPoint& p, const Vec& rhs_x, const Vec& rhs_y,
                                      HessianRoute route) {
  set_alpha(work, ge);
  Vec folded = folded_rhs(work, ge, p, rhs_x, rhs_y);
  HessianSolveResult res;
  res.dx = solve_pivoted(work, ge, folded, route);
  res.dy = back_substitute(work, ge, p, rhs_y, res.dx);
  res.relative_residual = full_residual(work, ge, p, rhs_x, rhs_y, res.dx, res.dy);
  return res;
}

}  // namespace

BarrierPoint feasible_init(const Instance& inst) {
  validate_instance(inst);
  QuadMinResult qm = quad_min(inst, Weights::ones(inst.k()));
  BarrierPoint p;
  p.x = std::move(qm.x);
  p.y.resize(inst.k());
  for (int g = 0; g < inst.k(); ++g) p.y[g] = group_norm(inst.groups[g], p.x) + 1.0;
  p.t = 1.0;
  return p;
}

void barrier_grad(const Instance& inst, const BarrierPoint& p, Vec& g_x, Vec& g_y) {
  if (static_cast<int>(p.x.size()) != inst.n ||
      static_cast<int>(p.y.size()) != inst.k())
    throw std::invalid_argument("barrier_grad: dimension mismatch");
  g_x.assign(inst.n, 0.0);
  g_y.assign(inst.k(), 0.0);
  for (int g = 0; g < inst.k(); ++g) {
    const double q = group_quad(inst.groups[g], p.x);
    const double y = p.y[g];
    const double d = y * y - q;
    if (!(y > 0) || !(d > 0)) throw SolveError("barrier_grad: point is not strictly feasible");
    group_apply_residual(inst.groups[g], p.x, 2.0 / d, g_x);
    g_y[g] = p.t - 2.0 * y / d;
  }
}

double barrier_value(const Instance& inst, const BarrierPoint& p) {
  double f = 0.0;
  for (int g = 0; g < inst.k(); ++g) {
    const double q = group_quad(inst.groups[g], p.x);
    const double y = p.y[g];
    const double d = y * y - q;
    if (!(y > 0) || !(d > y * y * 1e-14)) return std::numeric_limits<double>::infinity();
    f += p.t * y - std::log(d);
  }
  return f;
}

HessianSolveResult hessian_solve(const Instance& inst, const BarrierPoint& p, const Vec& rhs_x,
                                 const Vec& rhs_y, HessianRoute route) {
  if (static_cast<int>(rhs_x.size()) != inst.n ||
      static_cast<int>(rhs_y.size()) != inst.k())
    throw std::invalid_argument("hessian_solve: dimension mismatch");
  IpmWork work(inst);
  std::vector<GroupEval> ge;
  work.eval(p, ge);
  return hessian_solve_with(work, ge, p, rhs_x, rhs_y, route);
}

Solution solve_ipm(const Instance& inst, const IpmConfig& cfg) {
  validate_instance(inst);
  if (!(cfg.eps > 0)) throw std::invalid_argument("solve_ipm: eps must be positive");
  if (!(cfg.t_factor > 1)) throw std::invalid_argument("solve_ipm: t_factor must exceed 1");
  if (!(cfg.ls_alpha > 0 && cfg.ls_alpha < 0.5 && cfg.ls_beta > 0 && cfg.ls_beta < 1))
    throw std::invalid_argument("solve_ipm: invalid line search parameters");

  const int n = inst.n;
  const int k = inst.k();
  IpmWork work(inst);
  BarrierPoint p = feasible_init(inst);
  p.t = cfg.t0 > 0 ? cfg.t0 : k / std::max(1.0, obj(inst, p.x));

  Solution sol;
  sol.solver_tag = "ipm";
  sol.trace_columns = {"t", "newton_steps", "grad_norm", "sum_y"};

  std::vector<GroupEval> ge;
  Vec gx(n), gy(k), rhs_x(n), rhs_y(k);
  int total_steps = 0;
  bool diverged = false;

  for (int stage = 0; stage < 64; ++stage) {
    int steps = 0;
    double gnorm = 0.0;
    for (int it = 0; it < cfg.max_newton; ++it) {
      work.eval(p, ge);
      gx.assign(n, 0.0);
      for (int g = 0; g < k; ++g) work.u_axpy(g, ge[g], ge[g].alpha, gx.data());
      for (int g = 0; g < k; ++g) gy[g] = p.t - 2.0 * p.y[g] / ge[g].D;
      gnorm = std::sqrt(kern::dot(gx.data(), gx.data(), n) +
                        kern::dot(gy.data(), gy.data(), k));
      if (cfg.newton_tol > 0 && gnorm <= cfg.newton_tol) break;

      for (int i = 0; i < n; ++i) rhs_x[i] = -gx[i];
      for (int g = 0; g < k; ++g) rhs_y[g] = -gy[g];
      HessianSolveResult dir =
          hessian_solve_with(work, ge, p, rhs_x, rhs_y, HessianRoute::automatic);

      const double slope = kern::dot(gx.data(), dir.dx.data(), n) +
                           kern::dot(gy.data(), dir.dy.data(), k);
      const double dec2 = std::max(0.0, -slope);
      if (dec2 / 2.0 <= 1e-10) break;  // centered

      const double f0 = barrier_value(inst, p);
      double step = 1.0;
      bool accepted = false;
      BarrierPoint cand = p;
      while (step >= 1e-14) {
        cand.x = p.x;
        cand.y = p.y;
        kern::axpy(step, dir.dx.data(), cand.x.data(), n);
        kern::axpy(step, dir.dy.data(), cand.y.data(), k);
        const double f1 = barrier_value(inst, cand);
        if (f1 <= f0 + cfg.ls_alpha * step * slope) {
          accepted = true;
          break;
        }
        step *= cfg.ls_beta;
      }
      if (!accepted) {
        diverged = true;
        break;
      }
      p.x.swap(cand.x);
      p.y.swap(cand.y);
      ++steps;
      ++total_steps;
    }
    sol.trace.push_back({p.t, double(steps), gnorm, kern::sum(p.y.data(), k)});
    if (diverged) break;
    if (k / p.t <= cfg.eps) break;
    p.t *= cfg.t_factor;
  }

  sol.x = p.x;
  sol.objective = obj(inst, sol.x);
  sol.iterations = total_steps;
  return sol;
}

}  // namespace gls

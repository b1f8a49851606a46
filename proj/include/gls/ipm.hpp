#pragma once

#include "gls/instance.hpp"

namespace gls {

// Strictly feasible barrier iterate: y_i^2 > ||x - s_i||^2 and y_i > 0.
struct BarrierPoint {
  Vec x;
  Vec y;
  double t = 1.0;  // barrier parameter
};

struct IpmConfig {
  double eps = 1e-6;       // target additive suboptimality (k / t_final)
  double t0 = 0;           // initial barrier parameter; <= 0 picks k/max(1, obj)
  double t_factor = 20;    // growth per outer stage
  double newton_tol = 0;   // optional gradient-norm stop; 0 disables
  int max_newton = 50;
  double ls_beta = 0.5;    // backtracking factor
  double ls_alpha = 0.1;   // acceptance slope
};

// x from the unit-weight quadratic minimizer, y_i = ||x - s_i|| + 1.
BarrierPoint feasible_init(const Instance& inst);

// Gradient of f(t,x,y) = t*sum(y) - sum(log(y_i^2 - ||x - s_i||^2)):
//   g_x = sum_i (2/D_i) L_i (x - s_i),   g_y[i] = t - 2 y_i / D_i,
// with D_i = y_i^2 - ||x - s_i||^2. Throws SolveError at infeasible points.
void barrier_grad(const Instance& inst, const BarrierPoint& p, Vec& g_x, Vec& g_y);

// Barrier value f(t,x,y); +inf if infeasible.
double barrier_value(const Instance& inst, const BarrierPoint& p);

enum class HessianRoute {
  smw,       // eliminate y, then Sherman-Morrison-Woodbury over sum_i alpha_i L_i
  dense,     // eliminate y, assemble the n x n system densely
  schur_cg,  // eliminate y, conjugate gradient on the pivoted operator
  automatic,
};

struct HessianSolveResult {
  Vec dx;
  Vec dy;
  double relative_residual = 0;
};

// Solves the (n+k)-dimensional Newton system of the barrier Hessian at p.
// The scalar y-blocks are eliminated first, leaving
//   S = sum_i alpha_i L_i - beta_i u_i u_i',  u_i = L_i (x - s_i),
//   alpha_i = 2/D_i,  beta_i = 4 / (D_i (y_i^2 + q_i)),
// which is PSD; dy back-substitutes from dx.
HessianSolveResult hessian_solve(const Instance& inst, const BarrierPoint& p, const Vec& rhs_x,
                                 const Vec& rhs_y, HessianRoute route = HessianRoute::smw);

// Log-barrier solve: damped Newton inner loop, multiplicative t schedule,
// stop when k/t <= eps. At a centered point sum(y) is within k/t of the
// optimum. Trace columns: t, newton_steps, grad_norm, sum_y.
Solution solve_ipm(const Instance& inst, const IpmConfig& cfg = {});

}  // namespace gls

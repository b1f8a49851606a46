#include "gls/mw.hpp"

#include <algorithm>
#include <cmath>

#include "gls/ipm.hpp"

namespace gls {

MwState mw_init(const Instance& inst) {
  validate_instance(inst);
  MwState st;
  st.w = Weights::ones(inst.k());
  st.mu = inst.k();
  st.t = 0;
  st.best_obj = std::numeric_limits<double>::infinity();
  return st;
}

std::pair<double, int> mw_defaults(const Instance& inst, double eps) {
  if (!(eps > 0)) throw std::invalid_argument("mw_defaults: eps must be positive");
  const double k = inst.k();
  const double rho = 2.0 * std::cbrt(k) * std::pow(eps, -2.0 / 3.0);
  const double logn = std::log(std::max(inst.n, 2));
  const int iters = static_cast<int>(std::ceil(10.0 * rho * logn / (eps * eps)));
  return {rho, iters};
}

namespace {

MwStepResult mw_step_with(const Instance& inst, InstanceOperator& op, MwState& state, double rho,
                          double eps) {
  const int k = inst.k();
  const double mu_prev = state.mu;

  QuadMinResult qm = quad_min_with(inst, op, state.w, 1e-9);
  MwStepResult out;
  out.x = std::move(qm.x);
  out.opt2 = obj2(inst, out.x, state.w);
  out.lambda = std::sqrt(std::max(0.0, mu_prev * out.opt2));

  double total = 0.0;
  std::vector<double> norms(k);
  for (int i = 0; i < k; ++i) {
    norms[i] = group_norm(inst.groups[i], out.x);
    total += norms[i];
  }
  out.obj_value = total;

  if (out.lambda > 0) {
    const double floor_inc = 2.0 * eps * eps / (k * rho) * mu_prev;
    double mu = 0.0;
    for (int i = 0; i < k; ++i) {
      state.w.w[i] += (eps / rho) * (norms[i] / out.lambda) * mu_prev + floor_inc;
      mu += state.w.w[i];
    }
    state.mu = mu;
  }
  state.t += 1;
  if (out.obj_value < state.best_obj) {
    state.best_obj = out.obj_value;
    state.best_x = out.x;
  }
  return out;
}

}  // namespace

MwStepResult mw_step(const Instance& inst, MwState& state, double rho, double eps) {
  InstanceOperator op(inst);
  return mw_step_with(inst, op, state, rho, eps);
}

Solution solve_mw(const Instance& inst, const MwConfig& cfg) {
  if (!(cfg.eps > 0) || cfg.eps > 0.5)
    throw std::invalid_argument("solve_mw: eps must lie in (0, 0.5]");
  validate_instance(inst);

  const auto [rho_theory, n_theory] = mw_defaults(inst, cfg.eps);
  // The theoretical width makes per-iteration weight motion O(eps/rho); the
  // observed fast regime needs full-strength reweighting, so the default mode
  // runs with rho = eps and relies on best-iterate selection.
  double rho = cfg.strict_mode ? rho_theory : cfg.eps;
  if (cfg.rho_override) rho = *cfg.rho_override;
  int budget = cfg.strict_mode ? n_theory : 1000;
  if (cfg.max_iters_override) budget = *cfg.max_iters_override;
  const double stop_rel = cfg.early_stop_rel.value_or(1e-4);

  MwState st = mw_init(inst);
  InstanceOperator op(inst);

  Solution sol;
  sol.solver_tag = cfg.strict_mode ? "mw-strict" : "mw";
  sol.trace_columns = {"t", "mu", "lambda", "obj", "opt2", "wmin"};

  int stalls = 0;
  for (int t = 1; t <= budget; ++t) {
    const double mu_prev = st.mu;
    const double prev_best = st.best_obj;
    MwStepResult step = mw_step_with(inst, op, st, rho, cfg.eps);
    const double wmin = *std::min_element(st.w.w.begin(), st.w.w.end());
    sol.trace.push_back({double(t), mu_prev, step.lambda, step.obj_value, step.opt2, wmin});
    if (step.lambda == 0.0) break;  // exact fit
    if (!cfg.strict_mode) {
      const double impr = prev_best - st.best_obj;
      if (impr <= stop_rel * std::max(std::abs(prev_best), 1e-300)) {
        if (++stalls >= 10) break;
      } else {
        stalls = 0;
      }
    }
  }

  sol.x = st.best_x;
  sol.objective = obj(inst, sol.x);
  sol.iterations = st.t;
  return sol;
}

double kl_potential(const Instance& inst, const Weights& w, const Vec& xbar, double opt_val) {
  if (!(opt_val > 0)) throw std::invalid_argument("kl_potential: opt_val must be positive");
  if (w.size() != inst.k()) throw std::invalid_argument("kl_potential: weight count mismatch");
  double acc = 0.0;
  for (int i = 0; i < inst.k(); ++i)
    acc += group_norm(inst.groups[i], xbar) * std::log(w.w[i]);
  return acc / opt_val;
}

Solution run_solver(const Instance& inst, const SolverChoice& choice) {
  if (choice.kind == SolverChoice::Kind::mw) {
    MwConfig cfg;
    cfg.eps = choice.eps;
    cfg.strict_mode = choice.strict;
    return solve_mw(inst, cfg);
  }
  IpmConfig cfg;
  cfg.eps = choice.eps;
  return solve_ipm(inst, cfg);
}

}  // namespace gls

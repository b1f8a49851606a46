#pragma once

#include <optional>

#include "gls/instance.hpp"

namespace gls {

struct MwConfig {
  double eps = 0.1;                        // in (0, 0.5]
  std::optional<double> rho_override;      // width parameter
  std::optional<int> max_iters_override;   // iteration budget
  std::optional<double> early_stop_rel;    // relative improvement threshold
  bool strict_mode = false;                // run the full theoretical schedule
};

struct MwState {
  Weights w;
  double mu = 0;  // sum of weights
  int t = 0;
  Vec best_x;
  double best_obj = 0;
};

MwState mw_init(const Instance& inst);

// Width parameter and iteration count for a given accuracy:
//   rho = 2 k^{1/3} eps^{-2/3},  N = ceil(10 rho ln(n) / eps^2).
std::pair<double, int> mw_defaults(const Instance& inst, double eps);

struct MwStepResult {
  Vec x;
  double lambda = 0;
  double obj_value = 0;
  double opt2 = 0;
};

// One reweighting step: solve the weighted quadratic, form
// lambda = sqrt(mu * OBJ2(x)), then grow every weight by
//   (eps/rho * ||x - s_i|| / lambda + 2 eps^2 / (k rho)) * mu.
// Advances the state in place. lambda == 0 signals an exact fit.
MwStepResult mw_step(const Instance& inst, MwState& state, double rho, double eps);

// Iteratively reweighted solve returning the best iterate by objective.
// Strict mode runs the full theoretical schedule; the default mode uses an
// aggressive width (rho = eps) and stops once the best objective stalls.
Solution solve_mw(const Instance& inst, const MwConfig& cfg = {});

// Diagnostic potential (1/opt_val) * sum_i ||xbar - s_i|| * log(w_i).
double kl_potential(const Instance& inst, const Weights& w, const Vec& xbar, double opt_val);

}  // namespace gls

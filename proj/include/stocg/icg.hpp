#pragma once

#include <functional>

#include "stocg/feasible_set.hpp"

namespace stocg {

/// Quadratic subproblem min_{y in X} <z, y - x> + (beta/2)||y - x||^2,
/// solved approximately with `budget` conditional-gradient steps.
struct IcgRequest {
  Vec x;         // center, feasible
  Vec z;         // gradient estimate
  double beta = 1.0;
  int budget = 0;     // number of LMO calls allowed
  double delta = 0.0; // LMO inexactness
};

struct IcgResult {
  Vec w;
  int lmo_calls = 0;
  double final_dual_gap_estimate = 0.0;  // <grad H(w^t), w^t - v^t> at the last call
};

struct IcgOptions {
  LmoMode lmo_mode = LmoMode::exact;
  /// Called with (t, w^t) for t = 0 and after every update.
  std::function<void(int, const Vec&)> observer;
};

/// H(y; x, z, beta).
double subproblem_value(const IcgRequest& req, const Vec& y);

/// Conditional gradient with exact line search on H, w^0 = x.
IcgResult run_icg(const FeasibleSet& set, const IcgRequest& req,
                  const IcgOptions& opts = {});

/// proj_X(x - z / beta), the exact minimizer of H. Test oracle and
/// diagnostics only; the solvers never call it.
Vec exact_subproblem_solution(const FeasibleSet& set, const Vec& x,
                              const Vec& z, double beta);

}  // namespace stocg

#include "stocg/icg.hpp"

#include <algorithm>
#include <cmath>

#include "stocg/errors.hpp"

namespace stocg {

namespace {

// Below this squared step length v^t and w^t coincide.
constexpr double kDegenerateStep = 1e-14;

void validate(const FeasibleSet& set, const IcgRequest& req) {
  if (req.x.size() != set.dim() || req.z.size() != set.dim())
    throw ContractError("ICG request dimensions do not match the set");
  if (!(req.beta > 0.0) || !std::isfinite(req.beta))
    throw ContractError("ICG beta must be positive and finite");
  if (req.budget < 0) throw ContractError("ICG budget must be nonnegative");
  if (!(req.delta >= 0.0)) throw ContractError("ICG delta must be nonnegative");
  if (!req.z.allFinite()) throw NumericalError("ICG gradient estimate is not finite");
}

}  // namespace

double subproblem_value(const IcgRequest& req, const Vec& y) {
  if (y.size() != req.x.size() || req.z.size() != req.x.size())
    throw ContractError("subproblem_value dimensions do not match");
  const Vec d = y - req.x;
  return req.z.dot(d) + 0.5 * req.beta * d.squaredNorm();
}

IcgResult run_icg(const FeasibleSet& set, const IcgRequest& req,
                  const IcgOptions& opts) {
  validate(set, req);
  IcgResult res;
  res.w = req.x;
  if (opts.observer) opts.observer(0, res.w);
  const double d2 = set.diameter() * set.diameter();

  for (int t = 0; t < req.budget; ++t) {
    const Vec grad = req.z + req.beta * (res.w - req.x);
    const double slack = req.beta * d2 * req.delta / (t + 2.0);
    const Vec v = set.lmo_approx(grad, slack, opts.lmo_mode);
    ++res.lmo_calls;
    const Vec dir = v - res.w;
    res.final_dual_gap_estimate = -grad.dot(dir);
    const double dd = dir.squaredNorm();
    // A degenerate step leaves w unchanged; the call still counts so that
    // the budget is always spent in full.
    if (dd > kDegenerateStep) {
      // Exact line search: <beta(x - w) - z, v - w> / (beta ||v - w||^2).
      const double mu = std::clamp(-grad.dot(dir) / (req.beta * dd), 0.0, 1.0);
      res.w += mu * dir;
    }
    if (!res.w.allFinite()) throw NumericalError("ICG iterate became non-finite");
    if (opts.observer) opts.observer(t + 1, res.w);
  }
  return res;
}

Vec exact_subproblem_solution(const FeasibleSet& set, const Vec& x,
                              const Vec& z, double beta) {
  if (!(beta > 0.0)) throw ContractError("beta must be positive");
  return set.project(x - z / beta);
}

}  // namespace stocg

#include "stocg/solvers.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <random>

#include "stocg/errors.hpp"
#include "stocg/rng.hpp"

namespace stocg {

namespace {

constexpr double kFeasibilityTol = 1e-9;

void check_depth(Algorithm algo, const StochasticOracle& oracle) {
  const auto need = required_depth(algo);
  if (need && oracle.depth() != *need)
    throw ConfigError(std::string(to_string(algo)) + " requires T = " +
                      std::to_string(*need) + ", problem has T = " +
                      std::to_string(oracle.depth()));
}

void check_step_pre(const SolverState& state, const FeasibleSet& set,
                    const StochasticOracle& oracle, const Schedule& sched) {
  sched.validate();
  if (state.k < 0 || state.k >= sched.n_iters)
    throw ContractError("step called with k = " + std::to_string(state.k) +
                        " outside [0, N) for N = " + std::to_string(sched.n_iters));
  const int d = oracle.problem().dim();
  if (state.x.size() != d || state.z.size() != d || set.dim() != d)
    throw ContractError("solver state does not match the problem dimension");
}

// Steps 1 of every algorithm: ICG on the quadratic model, then the convex
// x-update.
Vec advance_x(const SolverState& state, const FeasibleSet& set,
              const Schedule& sched, const SolverOptions& opts,
              StepReport* report, double tau, int budget) {
  IcgRequest req{state.x, state.z, sched.beta, budget, sched.delta};
  IcgOptions iopts;
  iopts.lmo_mode = opts.lmo_mode;
  IcgResult icg = run_icg(set, req, iopts);
  Vec x_next = state.x + tau * (icg.w - state.x);
  if (!x_next.allFinite()) throw NumericalError("iterate became non-finite");
  if (!set.contains(x_next, kFeasibilityTol))
    throw InvariantError("iterate left the feasible set at k = " +
                         std::to_string(state.k + 1));
  if (report) {
    report->icg_request = std::move(req);
    report->icg = icg;
  }
  return x_next;
}

}  // namespace

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::linasa: return "linasa";
    case Algorithm::nasa2: return "nasa2";
    case Algorithm::asa1: return "asa1";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view name) {
  if (name == "linasa") return Algorithm::linasa;
  if (name == "nasa2") return Algorithm::nasa2;
  if (name == "asa1") return Algorithm::asa1;
  throw ConfigError("unknown algorithm '" + std::string(name) +
                    "' (expected linasa, nasa2 or asa1)");
}

std::optional<int> required_depth(Algorithm a) {
  switch (a) {
    case Algorithm::linasa: return std::nullopt;
    case Algorithm::nasa2: return 2;
    case Algorithm::asa1: return 1;
  }
  return std::nullopt;
}

std::int64_t ceil_sqrt(std::int64_t k) {
  if (k <= 0) return 0;
  auto m = static_cast<std::int64_t>(std::sqrt(static_cast<double>(k)));
  while (m * m < k) ++m;
  while (m > 0 && (m - 1) * (m - 1) >= k) --m;
  return m;
}

std::int64_t total_lmo_calls(std::int64_t n) {
  std::int64_t s = 0;
  for (std::int64_t k = 0; k < n; ++k) s += ceil_sqrt(k);
  return s;
}

double Schedule::tau(std::int64_t k) const {
  if (k == 0) return 1.0;
  return 1.0 / std::sqrt(static_cast<double>(n_iters));
}

int Schedule::icg_budget(std::int64_t k) const {
  return static_cast<int>(ceil_sqrt(k));
}

void Schedule::validate() const {
  if (n_iters < 1) throw ConfigError("N must be positive");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ConfigError("beta must be positive");
  if (!(delta >= 0.0)) throw ConfigError("delta must be nonnegative");
}

SolverState step_linasa(const SolverState& state, const FeasibleSet& set,
                        StochasticOracle& oracle, const Schedule& sched,
                        const SolverOptions& opts, StepReport* report) {
  check_step_pre(state, set, oracle, sched);
  const int t = oracle.depth();
  if (static_cast<int>(state.u.size()) != t)
    throw ContractError("linasa state needs u_1..u_T");
  const double tau = sched.tau(state.k);
  StepReport local;
  StepReport* rep = report ? report : &local;
  const Vec x_next =
      advance_x(state, set, sched, opts, rep, tau, sched.icg_budget(state.k));

  // Samples at the old points u_{i+1}^k, with u_{T+1}^k = x^k.
  std::vector<Vec> points(t);
  for (int i = 1; i <= t; ++i) points[i - 1] = i == t ? state.x : state.u[i];
  const ChainSample s = oracle.chain_sample(points);

  SolverState next;
  next.x = x_next;
  next.z = (1.0 - tau) * state.z + tau * s.product;
  next.u.resize(t);
  // Descending sweep: u_i^{k+1} reads u_{i+1}^{k+1}.
  for (int i = t; i >= 1; --i) {
    const Vec& fresh = i == t ? next.x : next.u[i];
    const Vec& stale = i == t ? state.x : state.u[i];
    const auto& lv = s.levels[i - 1];
    next.u[i - 1] = (1.0 - tau) * state.u[i - 1] + tau * lv.value +
                    lv.jacobian_t.transpose() * (fresh - stale);
  }
  next.k = state.k + 1;
  next.sfo_calls = state.sfo_calls + 2 * t;
  next.lmo_calls = state.lmo_calls + rep->icg.lmo_calls;
  return next;
}

SolverState step_nasa2(const SolverState& state, const FeasibleSet& set,
                       StochasticOracle& oracle, const Schedule& sched,
                       const SolverOptions& opts, StepReport* report) {
  check_depth(Algorithm::nasa2, oracle);
  check_step_pre(state, set, oracle, sched);
  if (state.u.size() != 2 || state.u[1].size() != oracle.problem().level_dim(1))
    throw ContractError("nasa2 state needs u_2");
  const double tau = sched.tau(state.k);
  StepReport local;
  StepReport* rep = report ? report : &local;
  const Vec x_next =
      advance_x(state, set, sched, opts, rep, tau, sched.icg_budget(state.k));

  const LevelSample s2 = oracle.sample_level(2, state.x);
  const Mat j1 = oracle.sample_jacobian_t(1, state.u[1]);
  std::int64_t sfo = 3;
  if (!opts.lean_sfo) {
    oracle.sample_value(1, state.u[1]);  // drawn for SFO parity, unused
    ++sfo;
  }
  const Mat chain[] = {j1, s2.jacobian_t};

  SolverState next;
  next.x = x_next;
  next.z = (1.0 - tau) * state.z + tau * chain_product(chain);
  next.u = {Vec(), (1.0 - tau) * state.u[1] + tau * s2.value};
  next.k = state.k + 1;
  next.sfo_calls = state.sfo_calls + sfo;
  next.lmo_calls = state.lmo_calls + rep->icg.lmo_calls;
  return next;
}

SolverState step_asa1(const SolverState& state, const FeasibleSet& set,
                      StochasticOracle& oracle, const Schedule& sched,
                      const SolverOptions& opts, StepReport* report) {
  check_depth(Algorithm::asa1, oracle);
  check_step_pre(state, set, oracle, sched);
  const double tau = sched.tau(state.k);
  StepReport local;
  StepReport* rep = report ? report : &local;
  const Vec x_next =
      advance_x(state, set, sched, opts, rep, tau, sched.icg_budget(state.k));

  const Mat j1 = oracle.sample_jacobian_t(1, state.x);
  std::int64_t sfo = 1;
  if (!opts.lean_sfo) {
    oracle.sample_value(1, state.x);  // drawn for SFO parity, unused
    ++sfo;
  }
  const Mat chain[] = {j1};

  SolverState next;
  next.x = x_next;
  next.z = (1.0 - tau) * state.z + tau * chain_product(chain);
  next.k = state.k + 1;
  next.sfo_calls = state.sfo_calls + sfo;
  next.lmo_calls = state.lmo_calls + rep->icg.lmo_calls;
  return next;
}

SolverState step(Algorithm algo, const SolverState& state,
                 const FeasibleSet& set, StochasticOracle& oracle,
                 const Schedule& sched, const SolverOptions& opts,
                 StepReport* report) {
  switch (algo) {
    case Algorithm::linasa: return step_linasa(state, set, oracle, sched, opts, report);
    case Algorithm::nasa2: return step_nasa2(state, set, oracle, sched, opts, report);
    case Algorithm::asa1: return step_asa1(state, set, oracle, sched, opts, report);
  }
  throw ConfigError("unknown algorithm");
}

SolverState initial_state(Algorithm algo, const Vec& x0, const FeasibleSet& set,
                          StochasticOracle& oracle) {
  check_depth(algo, oracle);
  const auto& problem = oracle.problem();
  if (x0.size() != problem.dim() || set.dim() != problem.dim())
    throw ContractError("initial point does not match the problem dimension");
  if (!set.contains(x0, kFeasibilityTol))
    throw ContractError("initial point is not feasible");
  SolverState s;
  s.x = x0;
  s.z = Vec::Zero(x0.size());
  const int t = problem.depth();
  switch (algo) {
    case Algorithm::linasa: {
      s.u.resize(t);
      for (int i = t; i >= 1; --i)
        s.u[i - 1] = oracle.sample_value(i, i == t ? x0 : s.u[i]);
      break;
    }
    case Algorithm::nasa2:
      s.u = {Vec(), oracle.sample_value(2, x0)};
      break;
    case Algorithm::asa1:
      break;
  }
  return s;
}

TraceRecord diagnose(const CompositionProblem& problem, const FeasibleSet& set,
                     const SolverState& state, double beta) {
  TraceRecord rec;
  rec.k = state.k;
  rec.sfo = state.sfo_calls;
  rec.lmo = state.lmo_calls;
  rec.inner_err_sq.assign(problem.depth(), std::nullopt);
  if (!problem.exact_available()) return rec;
  const Vec g = problem.gradient(state.x);
  rec.grad_map_sq = gradient_mapping(set, state.x, g, beta).squaredNorm();
  rec.fw_gap = fw_gap(set, state.x, g);
  rec.z_err_sq = (g - state.z).squaredNorm();
  rec.inner_err_sq = inner_errors(problem, state.x, state.u);
  return rec;
}

std::optional<double> nasa2_beta_threshold(const CompositionProblem& problem) {
  if (problem.depth() != 2) return std::nullopt;
  const auto& f1 = problem.level(1);
  const auto& f2 = problem.level(2);
  if (!f1.lip_grad || !f2.lip_value || !f1.lip_value || !f2.lip_grad)
    return std::nullopt;
  const double lgf = chain_constants(problem).lip_grad_F;
  const double q = *f1.lip_grad * *f2.lip_value * *f2.lip_value;
  const double a = 6.0 * lgf + 2.0 * q;
  const double b = 2.0 * q / 3.0;
  return 2.0 * std::sqrt(a * b);
}

RunResult run(Algorithm algo, const Vec& x0, const FeasibleSet& set,
              StochasticOracle& oracle, const Schedule& sched,
              const RunOptions& opts) {
  sched.validate();
  check_depth(algo, oracle);
  const auto& problem = oracle.problem();
  if (!set.contains(x0, kFeasibilityTol) || x0.size() != problem.dim())
    throw ContractError("initial point is not feasible");
  if (opts.diagnostics.stride < 1) throw ConfigError("trace stride must be positive");

  RunResult res;
  if (algo == Algorithm::nasa2) {
    if (const auto thr = nasa2_beta_threshold(problem); thr && sched.beta < *thr) {
      res.warnings.push_back(
          "nasa2: beta = " + format_double(sched.beta) +
          " is below the analyzed threshold " + format_double(*thr) +
          "; convergence guarantees do not apply");
      spdlog::warn("{}", res.warnings.back());
    }
  }

  Engine r_engine(derive_seed(
      {oracle.master_seed(), static_cast<std::uint64_t>(StreamKind::output_index)}));
  std::uniform_int_distribution<std::int64_t> pick(1, sched.n_iters);
  res.output_index = pick(r_engine);

  const std::int64_t value_before = oracle.value_calls();
  SolverState state = initial_state(algo, x0, set, oracle);
  res.init_sfo_calls = oracle.value_calls() - value_before;
  if (opts.z0) {
    if (opts.z0->size() != x0.size()) throw ContractError("z0 has the wrong dimension");
    state.z = *opts.z0;
  }
  if (opts.u0) {
    if (opts.u0->size() != state.u.size()) throw ContractError("u0 has the wrong length");
    for (std::size_t i = 0; i < state.u.size(); ++i)
      if ((*opts.u0)[i].size() != state.u[i].size())
        throw ContractError("u0 entry has the wrong dimension");
    state.u = *opts.u0;
  }

  const std::int64_t n = sched.n_iters;
  res.trace.reserve(static_cast<std::size_t>(n + 1));
  for (std::int64_t k = 0; k <= n; ++k) {
    const bool diag_row = opts.diagnostics.enabled &&
                          (k % opts.diagnostics.stride == 0 ||
                           k == res.output_index || k == n);
    TraceRecord rec;
    if (diag_row) {
      rec = diagnose(problem, set, state, sched.beta);
    } else {
      rec.k = k;
      rec.sfo = state.sfo_calls;
      rec.lmo = state.lmo_calls;
      rec.inner_err_sq.assign(problem.depth(), std::nullopt);
    }
    rec.tau = sched.tau(k);
    rec.t_icg = sched.icg_budget(k);
    if (k == res.output_index) {
      res.x_R = state.x;
      res.z_R = state.z;
      res.u_R = state.u;
    }
    if (k < n) {
      StepReport report;
      SolverState next = step(algo, state, set, oracle, sched, opts.solver, &report);
      if (diag_row) {
        const Vec y = exact_subproblem_solution(set, state.x, state.z, sched.beta);
        rec.h_gap = subproblem_value(report.icg_request, report.icg.w) -
                    subproblem_value(report.icg_request, y);
      }
      if (opts.on_record) opts.on_record(rec, state);
      res.trace.push_back(std::move(rec));
      state = std::move(next);
    } else {
      if (opts.on_record) opts.on_record(rec, state);
      res.trace.push_back(std::move(rec));
    }
  }
  res.final_state = std::move(state);
  return res;
}

}  // namespace stocg

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stocg/composition.hpp"
#include "stocg/diagnostics.hpp"
#include "stocg/feasible_set.hpp"
#include "stocg/icg.hpp"

namespace stocg {

enum class Algorithm { linasa, nasa2, asa1 };

std::string_view to_string(Algorithm a);
Algorithm parse_algorithm(std::string_view name);
/// Composition depth an algorithm is restricted to, or nullopt for any.
std::optional<int> required_depth(Algorithm a);

/**
 * Step sizes and inner budgets: tau_0 = 1, tau_k = 1/sqrt(N) for k >= 1,
 * t_0 = 0, t_k = ceil(sqrt(k)), constant beta.
 */
struct Schedule {
  std::int64_t n_iters = 1;
  double beta = 1.0;
  double delta = 0.0;

  double tau(std::int64_t k) const;
  int icg_budget(std::int64_t k) const;
  void validate() const;
};

/// Smallest m with m * m >= k.
std::int64_t ceil_sqrt(std::int64_t k);

/// sum_{k=0}^{n-1} ceil(sqrt(k)), the LMO calls of an n-step run.
std::int64_t total_lmo_calls(std::int64_t n);

struct SolverState {
  Vec x;
  Vec z;
  /// u_1..u_T (outermost first); u_i lives in the codomain of f_i. Entries
  /// that an algorithm does not maintain are empty vectors, and the whole
  /// list is empty for the one-level algorithm.
  std::vector<Vec> u;
  std::int64_t k = 0;
  std::int64_t sfo_calls = 0;
  std::int64_t lmo_calls = 0;
};

struct SolverOptions {
  /// Skip value samples that the update rules never read (asa1 and nasa2).
  bool lean_sfo = false;
  LmoMode lmo_mode = LmoMode::exact;
};

/// Side products of one outer step, for diagnostics.
struct StepReport {
  IcgRequest icg_request;
  IcgResult icg;
};

SolverState step_linasa(const SolverState& state, const FeasibleSet& set,
                        StochasticOracle& oracle, const Schedule& sched,
                        const SolverOptions& opts = {},
                        StepReport* report = nullptr);

SolverState step_nasa2(const SolverState& state, const FeasibleSet& set,
                       StochasticOracle& oracle, const Schedule& sched,
                       const SolverOptions& opts = {},
                       StepReport* report = nullptr);

SolverState step_asa1(const SolverState& state, const FeasibleSet& set,
                      StochasticOracle& oracle, const Schedule& sched,
                      const SolverOptions& opts = {},
                      StepReport* report = nullptr);

SolverState step(Algorithm algo, const SolverState& state,
                 const FeasibleSet& set, StochasticOracle& oracle,
                 const Schedule& sched, const SolverOptions& opts = {},
                 StepReport* report = nullptr);

/// z^0 = 0 and u^0 from one noisy forward pass through the oracle.
SolverState initial_state(Algorithm algo, const Vec& x0, const FeasibleSet& set,
                          StochasticOracle& oracle);

struct DiagnosticsOptions {
  bool enabled = true;
  /// Exact diagnostics on rows with k % stride == 0, plus rows R and N.
  std::int64_t stride = 1;
};

struct RunOptions {
  SolverOptions solver;
  DiagnosticsOptions diagnostics;
  /// Overrides for the initial z and u; the defaults follow initial_state.
  std::optional<Vec> z0;
  std::optional<std::vector<Vec>> u0;
  /// Called once per trace row with the state that row describes.
  std::function<void(const TraceRecord&, const SolverState&)> on_record;
};

struct RunResult {
  std::vector<TraceRecord> trace;  // k = 0..N
  std::int64_t output_index = 0;   // R, uniform on {1..N}
  Vec x_R;
  Vec z_R;
  std::vector<Vec> u_R;
  SolverState final_state;
  std::int64_t init_sfo_calls = 0;  // value draws spent on u^0
  std::vector<std::string> warnings;
};

/// Runs N outer steps from x0 and returns the trace plus the snapshot at a
/// uniformly drawn R. R comes from its own stream derived from the oracle's
/// master seed, so it never perturbs the sample streams.
RunResult run(Algorithm algo, const Vec& x0, const FeasibleSet& set,
              StochasticOracle& oracle, const Schedule& sched,
              const RunOptions& opts = {});

/// Smallest beta admitted by the two-level step-size condition
/// beta >= 6 rho L_{grad F} + (2 rho + 2/(3 rho)) L_{grad f_1} L_{f_2}^2,
/// minimized over rho > 0. Nullopt when constants are missing.
std::optional<double> nasa2_beta_threshold(const CompositionProblem& problem);

/// Exact diagnostics of one state (fields stay empty when the problem has
/// no exact evaluators).
TraceRecord diagnose(const CompositionProblem& problem, const FeasibleSet& set,
                     const SolverState& state, double beta);

}  // namespace stocg

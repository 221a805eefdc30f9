#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "stocg/composition.hpp"
#include "stocg/feasible_set.hpp"

namespace stocg {

/// beta (x - proj_X(x - g / beta)).
Vec gradient_mapping(const FeasibleSet& set, const Vec& x, const Vec& g,
                     double beta);

/// max_{y in X} <g, x - y>.
double fw_gap(const FeasibleSet& set, const Vec& x, const Vec& g);

/// min_{y in X} <z, y - x> + (beta/2)||y - x||^2, evaluated exactly by
/// projection. Always <= 0 for feasible x.
double eta(const FeasibleSet& set, const Vec& x, const Vec& z, double beta);

/// Smoothness constants derived from per-level Lipschitz constants.
struct ChainConstants {
  double lip_grad_F = 0.0;               // L_{grad F} = L_{grad F_1}
  std::vector<double> lip_grad_partial;  // L_{grad F_i}, i = 1..T
  std::vector<double> r;                 // R_j, j = 1..T-1 (index j-1)
  std::vector<double> c;                 // C_j, j = 2..T (index j-2)
  double lip_value_product = 0.0;        // prod_i L_{f_i}
};

ChainConstants chain_constants(const CompositionProblem& problem);

/// Lipschitz constant of grad eta in (x, z) for a fixed beta.
double lip_grad_eta(double beta);

/// Weights of the merit function W_{alpha,gamma}.
struct MeritConfig {
  double beta = 1.0;
  double alpha = 0.0;
  std::vector<double> gamma;  // gamma_1..gamma_T
  double lip_grad_F = 0.0;
  std::vector<double> chain_c;  // C_2..C_T

  /// alpha = beta / (20 L^2), gamma_1 = beta / 2,
  /// gamma_j = (2 alpha + 1 / (4 alpha L^2)) (T - 1) C_j^2 + beta / 2.
  static MeritConfig defaults(const CompositionProblem& problem, double beta);
};

/// W = F(x) - F* - eta(x, z) + alpha ||grad F(x) - z||^2
///       + sum_i gamma_i ||f_i(u_{i+1}) - u_i||^2, with u_{T+1} = x.
/// `u` holds u_1..u_T (outermost first); an empty u skips the sum.
double merit_value(const MeritConfig& cfg, const CompositionProblem& problem,
                   const FeasibleSet& set, const Vec& x, const Vec& z,
                   const std::vector<Vec>& u);

/// Per-level tracking errors ||f_i(u_{i+1}) - u_i||^2, nullopt where u_i is
/// not maintained (empty vector).
std::vector<std::optional<double>> inner_errors(const CompositionProblem& problem,
                                                const Vec& x,
                                                const std::vector<Vec>& u);

struct TraceRecord {
  std::int64_t k = 0;
  double tau = 0.0;
  std::int64_t t_icg = 0;
  std::optional<double> grad_map_sq;
  std::optional<double> fw_gap;
  std::optional<double> z_err_sq;
  std::vector<std::optional<double>> inner_err_sq;  // one slot per level
  std::optional<double> h_gap;
  std::int64_t sfo = 0;
  std::int64_t lmo = 0;

  bool operator==(const TraceRecord&) const = default;
};

/// `k,tau,t_icg,grad_map_sq,fw_gap,z_err_sq,inner_err_1..inner_err_T,H_gap,sfo,lmo`
std::string trace_csv_header(int depth);
std::string trace_csv_row(const TraceRecord& rec);
void write_trace_csv(std::ostream& os, int depth,
                     const std::vector<TraceRecord>& trace);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

struct RatePoint {
  std::int64_t n = 0;
  double mean = 0.0;
  int replications = 0;
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  bool operator==(const RateFit&) const = default;
};

inline constexpr int kRateFitMinPoints = 3;
inline constexpr int kRateFitMinReplications = 20;

/// Ordinary least squares of log(mean) on log(N).
RateFit rate_fit(const std::vector<RatePoint>& points);

/// Plain OLS of y on x; r^2 is 1 for an exact fit and for constant y.
RateFit ols_fit(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace stocg

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stocg/composition.hpp"
#include "stocg/feasible_set.hpp"

namespace stocg {

/// A problem instance together with its sampler stack and a default
/// constraint set and starting point.
struct Benchmark {
  std::shared_ptr<const CompositionProblem> problem;
  std::vector<std::shared_ptr<const LevelSampler>> samplers;
  FeasibleSet default_set;
  Vec x0;
  /// Known stationary point, when the construction provides one.
  std::optional<Vec> stationary_point;
  /// Resolved construction parameters (defaults filled in).
  nlohmann::json params;

  StochasticOracle oracle(std::uint64_t seed) const {
    return StochasticOracle(problem, samplers, seed);
  }
};

/// Mean-deviation risk-averse phase retrieval, T = 3.
///
/// Data follow b = <a, x*>^2 + zeta with a ~ N(0, I), zeta ~ N(0, noise_std^2)
/// and loss U(x; a, b) = (b - <a, x>^2)^2. The stack is
///   f_3(x)      = (E U(x), x)                  R^d     -> R^{1+d}
///   f_2(s, x)   = (s, E (s - U(x))^2)          R^{1+d} -> R^2
///   f_1(y1, y2) = y1 - rho sqrt(y2 + smoothing) R^2     -> R
/// where the x-carrier in f_3's output lets f_2 read both s and x. Below
/// y2 = 0 the square root is continued linearly so that estimates driven
/// negative by the linearization term stay finite; the map is unchanged on
/// the image of f_2.
///
/// Exact evaluators use a frozen empirical measure of `reference_samples`
/// draws; the stochastic oracle draws a fresh (a, b) per sample.
struct MeanDeviationSpec {
  int d = 10;
  double rho = 1.0;
  double smoothing = 1e-2;
  double noise_std = 0.1;
  int sparsity = 2;
  /// Planted solution; generated from `seed` with `sparsity` nonzeros of
  /// magnitude 1/sparsity when absent.
  std::optional<Vec> x_star;
  /// Defaults to 1.5 ||x*||_1.
  std::optional<double> l1_radius;
  int reference_samples = 10000;
  std::uint64_t seed = 20240601;
};

/// T = 2 instance f_1(f_2(x)) with f_2(x) = A x + b and the nonconvex
/// f_1(y) = sum_j log(1 + y_j^2) / 2. Gaussian additive oracle noise.
struct TwoLevelSpec {
  int d = 5;
  double conditioning = 2.0;  // singular values of A spread over [1, conditioning]
  bool identity = false;      // A = I, b = 0
  // Noise scale small enough that N >= 100 is past the start-up transient.
  std::vector<double> sigma_value{0.2, 0.2};     // per level, outermost first
  std::vector<double> sigma_jacobian{0.2, 0.2};  // per level, outermost first
  std::optional<std::string> set_spec;           // default l2:1
  std::uint64_t seed = 20240602;
};

/// T = 1 instance F(x) = x'Qx/2 + c'x with Gaussian additive noise.
struct QuadraticSpec {
  std::string name = "quadratic";
  Mat q;
  Vec c;
  FeasibleSet set;
  double sigma_value = 0.0;
  double sigma_jacobian = 0.0;
  std::optional<Vec> x0;
  std::optional<Vec> stationary_point;
};

Benchmark build_mean_deviation(const MeanDeviationSpec& spec);
Benchmark build_two_level(const TwoLevelSpec& spec);
Benchmark build_quadratic(const QuadraticSpec& spec);

/// Frozen (a, b) sample behind the exact evaluators of a mean-deviation
/// instance, plus its planted solution.
struct PhaseSample {
  Mat a;  // reference_samples x d
  Vec b;
  Vec x_star;
};
PhaseSample mean_deviation_reference(const MeanDeviationSpec& spec);

/// Exact single-expression mean-deviation objective over an explicit sample
/// (independent of the level stack; used to cross-check it).
double mean_deviation_direct(const Mat& a, const Vec& b, const Vec& x,
                             double rho, double smoothing);

/// Registry: "meandev", "twolevel", "quadbox", "quadball".
std::vector<std::string> benchmark_names();
Benchmark make_benchmark(const std::string& name,
                         const nlohmann::json& params = nlohmann::json::object());

}  // namespace stocg

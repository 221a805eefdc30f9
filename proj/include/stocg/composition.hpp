#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stocg/rng.hpp"

namespace stocg {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/**
 * One level f_i : R^{in_dim} -> R^{out_dim} of a composition.
 *
 * The Jacobian is always stored transposed: `jacobian_t(y)` returns the
 * in_dim x out_dim matrix whose columns are the gradients of the output
 * coordinates. Every product in the library uses this orientation.
 */
struct SmoothMap {
  std::string name;
  int in_dim = 0;
  int out_dim = 0;
  std::function<Vec(const Vec&)> value;
  std::function<Mat(const Vec&)> jacobian_t;
  std::optional<double> lip_value;  // L_f over the region of interest
  std::optional<double> lip_grad;   // L_{grad f}
};

/**
 * F = f_1 o f_2 o ... o f_T. `levels()[0]` is the outermost map f_1 and
 * `levels().back()` is f_T, which consumes the decision variable x.
 */
class CompositionProblem {
 public:
  CompositionProblem(std::string name, std::vector<SmoothMap> levels,
                     std::optional<double> f_star_lower_bound = std::nullopt,
                     bool exact_available = true);

  const std::string& name() const { return name_; }
  int depth() const { return static_cast<int>(levels_.size()); }
  /// Ambient dimension d = d_T.
  int dim() const { return levels_.back().in_dim; }
  /// d_i for i = 0..T, with d_0 = 1 and d_T = dim().
  int level_dim(int i) const;
  /// Level i in 1..T.
  const SmoothMap& level(int i) const;
  const std::vector<SmoothMap>& levels() const { return levels_; }
  std::optional<double> f_star() const { return f_star_; }
  void set_f_star(double v) { f_star_ = v; }
  /// False for black-box problems whose maps are only reachable by sampling.
  bool exact_available() const { return exact_available_; }

  /// Evaluation points y_{i+1} = f_{i+1} o ... o f_T(x) for i = 1..T; entry
  /// i-1 is the input of level i, so the last entry is x itself.
  std::vector<Vec> inner_points(const Vec& x) const;

  double value(const Vec& x) const;
  Vec gradient(const Vec& x) const;

  /// Level i evaluated with finiteness and dimension checks.
  Vec level_value(int i, const Vec& point) const;
  Mat level_jacobian_t(int i, const Vec& point) const;

 private:
  std::string name_;
  std::vector<SmoothMap> levels_;
  std::optional<double> f_star_;
  bool exact_available_;
};

double exact_value(const CompositionProblem& problem, const Vec& x);
Vec exact_gradient(const CompositionProblem& problem, const Vec& x);

/// J_T J_{T-1} ... J_1 for transposed Jacobians ordered outermost first
/// (jacs[0] = J_1). Evaluated right to left with matrix-vector products.
Vec chain_product(std::span<const Mat> jacs);

/// Additive i.i.d. Gaussian perturbation of values and Jacobian entries.
struct NoiseModel {
  enum class Kind { none, gaussian_additive };
  Kind kind = Kind::none;
  std::vector<double> sigma_value;     // per level, outermost first
  std::vector<double> sigma_jacobian;  // per level, outermost first

  static NoiseModel none(int depth);
  static NoiseModel gaussian(std::vector<double> sigma_value,
                             std::vector<double> sigma_jacobian);
  /// Same sigmas at every level.
  static NoiseModel gaussian(int depth, double sigma_value,
                             double sigma_jacobian);
  void validate(int depth) const;
};

/// A random stream drawing standard normals.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}
  double normal() { return dist_(engine_); }
  double uniform() { return unif_(engine_); }
  Engine& engine() { return engine_; }

 private:
  Engine engine_;
  std::normal_distribution<double> dist_{0.0, 1.0};
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
};

/**
 * Stochastic first-order information for a single level. Implementations
 * must be unbiased for the level's exact value and transposed Jacobian and
 * may only draw randomness from the stream they are handed.
 */
class LevelSampler {
 public:
  virtual ~LevelSampler() = default;
  virtual Vec sample_value(const Vec& point, GaussianStream& stream) const = 0;
  virtual Mat sample_jacobian_t(const Vec& point,
                                GaussianStream& stream) const = 0;
};

/// Exact map plus additive Gaussian noise; sigma 0 is a passthrough.
class AdditiveGaussianSampler : public LevelSampler {
 public:
  AdditiveGaussianSampler(std::shared_ptr<const CompositionProblem> problem,
                          int level, double sigma_value, double sigma_jacobian);
  Vec sample_value(const Vec& point, GaussianStream& stream) const override;
  Mat sample_jacobian_t(const Vec& point,
                        GaussianStream& stream) const override;

 private:
  std::shared_ptr<const CompositionProblem> problem_;
  int level_;
  double sigma_value_;
  double sigma_jacobian_;
};

struct LevelSample {
  Vec value;       // G_i, dimension d_{i-1}
  Mat jacobian_t;  // J_i, d_i x d_{i-1}
};

struct ChainSample {
  std::vector<LevelSample> levels;  // outermost first
  Vec product;                      // J_T ... J_1, dimension d
};

/**
 * Stochastic oracle over a composition. Owns 2T independent streams, one
 * per (level, value|Jacobian), each seeded from (master_seed, level, kind).
 * Not safe to share between threads; use `reseeded` to get a per-worker
 * clone.
 */
class StochasticOracle {
 public:
  StochasticOracle(std::shared_ptr<const CompositionProblem> problem,
                   std::vector<std::shared_ptr<const LevelSampler>> samplers,
                   std::uint64_t master_seed);

  /// Additive Gaussian oracle (or exact passthrough for NoiseModel::none).
  static StochasticOracle gaussian(
      std::shared_ptr<const CompositionProblem> problem,
      const NoiseModel& noise, std::uint64_t master_seed);

  const CompositionProblem& problem() const { return *problem_; }
  std::shared_ptr<const CompositionProblem> problem_ptr() const {
    return problem_;
  }
  int depth() const { return problem_->depth(); }
  std::uint64_t master_seed() const { return master_seed_; }

  /// Fresh oracle over the same problem and samplers with new streams.
  StochasticOracle reseeded(std::uint64_t master_seed) const;

  /// One value draw and one Jacobian draw at level i (1..T).
  LevelSample sample_level(int level, const Vec& point);
  Vec sample_value(int level, const Vec& point);
  Mat sample_jacobian_t(int level, const Vec& point);

  /// One fresh sample per level; points[i-1] is the input of level i.
  ChainSample chain_sample(std::span<const Vec> points);

  std::int64_t value_calls() const { return value_calls_; }
  std::int64_t jacobian_calls() const { return jacobian_calls_; }

 private:
  void check_point(int level, const Vec& point) const;

  std::shared_ptr<const CompositionProblem> problem_;
  std::vector<std::shared_ptr<const LevelSampler>> samplers_;
  std::uint64_t master_seed_;
  std::vector<GaussianStream> value_streams_;
  std::vector<GaussianStream> jacobian_streams_;
  std::int64_t value_calls_ = 0;
  std::int64_t jacobian_calls_ = 0;
};

/// Central-difference transposed Jacobian, used by tests and audits.
Mat finite_difference_jacobian_t(const SmoothMap& map, const Vec& y,
                                 double step = 1e-6);

}  // namespace stocg

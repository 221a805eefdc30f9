#include "stocg/composition.hpp"

#include <string>
#include <utility>

#include "stocg/errors.hpp"

namespace stocg {

namespace {

std::string level_tag(const CompositionProblem& p, int i) {
  const auto& m = p.level(i);
  std::string tag = "level " + std::to_string(i);
  if (!m.name.empty()) tag += " (" + m.name + ")";
  return tag;
}

}  // namespace

CompositionProblem::CompositionProblem(std::string name,
                                       std::vector<SmoothMap> levels,
                                       std::optional<double> f_star_lower_bound,
                                       bool exact_available)
    : name_(std::move(name)),
      levels_(std::move(levels)),
      f_star_(f_star_lower_bound),
      exact_available_(exact_available) {
  if (levels_.empty()) throw ConfigError("composition needs at least one level");
  if (levels_.front().out_dim != 1)
    throw ConfigError("outermost level must be scalar-valued");
  for (std::size_t i = 0; i < levels_.size(); ++i) {
    const auto& m = levels_[i];
    if (m.in_dim <= 0 || m.out_dim <= 0)
      throw ConfigError("level " + std::to_string(i + 1) +
                        " has a non-positive dimension");
    if (!m.value || !m.jacobian_t)
      throw ConfigError("level " + std::to_string(i + 1) +
                        " is missing an evaluator");
    if (i + 1 < levels_.size() && m.in_dim != levels_[i + 1].out_dim)
      throw ConfigError("dimension chain broken between levels " +
                        std::to_string(i + 1) + " and " +
                        std::to_string(i + 2));
  }
}

int CompositionProblem::level_dim(int i) const {
  if (i < 0 || i > depth()) throw ContractError("level_dim index out of range");
  if (i == 0) return 1;
  return levels_[i - 1].in_dim;
}

const SmoothMap& CompositionProblem::level(int i) const {
  if (i < 1 || i > depth()) throw ContractError("level index out of range");
  return levels_[i - 1];
}

Vec CompositionProblem::level_value(int i, const Vec& point) const {
  const auto& m = level(i);
  if (point.size() != m.in_dim)
    throw ContractError(level_tag(*this, i) + ": input has dimension " +
                        std::to_string(point.size()) + ", expected " +
                        std::to_string(m.in_dim));
  Vec out = m.value(point);
  if (out.size() != m.out_dim)
    throw ContractError(level_tag(*this, i) + ": value has wrong dimension");
  if (!out.allFinite())
    throw NumericalError(level_tag(*this, i) + ": non-finite value");
  return out;
}

Mat CompositionProblem::level_jacobian_t(int i, const Vec& point) const {
  const auto& m = level(i);
  if (point.size() != m.in_dim)
    throw ContractError(level_tag(*this, i) + ": input has dimension " +
                        std::to_string(point.size()) + ", expected " +
                        std::to_string(m.in_dim));
  Mat jt = m.jacobian_t(point);
  if (jt.rows() != m.in_dim || jt.cols() != m.out_dim)
    throw ContractError(level_tag(*this, i) + ": Jacobian has wrong shape");
  if (!jt.allFinite())
    throw NumericalError(level_tag(*this, i) + ": non-finite Jacobian");
  return jt;
}

std::vector<Vec> CompositionProblem::inner_points(const Vec& x) const {
  if (x.size() != dim())
    throw ContractError("point has dimension " + std::to_string(x.size()) +
                        ", problem expects " + std::to_string(dim()));
  const int t = depth();
  std::vector<Vec> pts(t);
  pts[t - 1] = x;
  for (int i = t - 1; i >= 1; --i) pts[i - 1] = level_value(i + 1, pts[i]);
  return pts;
}

double CompositionProblem::value(const Vec& x) const {
  const auto pts = inner_points(x);
  return level_value(1, pts[0])(0);
}

Vec CompositionProblem::gradient(const Vec& x) const {
  const auto pts = inner_points(x);
  std::vector<Mat> jacs;
  jacs.reserve(pts.size());
  for (int i = 1; i <= depth(); ++i) jacs.push_back(level_jacobian_t(i, pts[i - 1]));
  return chain_product(jacs);
}

double exact_value(const CompositionProblem& problem, const Vec& x) {
  return problem.value(x);
}

Vec exact_gradient(const CompositionProblem& problem, const Vec& x) {
  return problem.gradient(x);
}

Vec chain_product(std::span<const Mat> jacs) {
  if (jacs.empty()) throw ContractError("empty Jacobian chain");
  if (jacs[0].cols() != 1)
    throw ContractError("outermost Jacobian must have a single column");
  Vec v = jacs[0].col(0);
  for (std::size_t i = 1; i < jacs.size(); ++i) {
    if (jacs[i].cols() != v.size())
      throw ContractError("Jacobian chain dimensions do not match");
    v = jacs[i] * v;
  }
  return v;
}

NoiseModel NoiseModel::none(int depth) {
  NoiseModel m;
  m.kind = Kind::none;
  m.sigma_value.assign(depth, 0.0);
  m.sigma_jacobian.assign(depth, 0.0);
  return m;
}

NoiseModel NoiseModel::gaussian(std::vector<double> sigma_value,
                                std::vector<double> sigma_jacobian) {
  NoiseModel m;
  m.kind = Kind::gaussian_additive;
  m.sigma_value = std::move(sigma_value);
  m.sigma_jacobian = std::move(sigma_jacobian);
  return m;
}

NoiseModel NoiseModel::gaussian(int depth, double sigma_value,
                                double sigma_jacobian) {
  return gaussian(std::vector<double>(depth, sigma_value),
                  std::vector<double>(depth, sigma_jacobian));
}

void NoiseModel::validate(int depth) const {
  if (static_cast<int>(sigma_value.size()) != depth ||
      static_cast<int>(sigma_jacobian.size()) != depth)
    throw ConfigError("noise model needs one sigma pair per level");
  for (int i = 0; i < depth; ++i) {
    if (!(sigma_value[i] >= 0.0) || !(sigma_jacobian[i] >= 0.0))
      throw ConfigError("noise sigmas must be nonnegative");
    if (kind == Kind::none && (sigma_value[i] != 0.0 || sigma_jacobian[i] != 0.0))
      throw ConfigError("noise kind 'none' requires zero sigmas");
  }
}

AdditiveGaussianSampler::AdditiveGaussianSampler(
    std::shared_ptr<const CompositionProblem> problem, int level,
    double sigma_value, double sigma_jacobian)
    : problem_(std::move(problem)),
      level_(level),
      sigma_value_(sigma_value),
      sigma_jacobian_(sigma_jacobian) {}

Vec AdditiveGaussianSampler::sample_value(const Vec& point,
                                          GaussianStream& stream) const {
  Vec g = problem_->level_value(level_, point);
  if (sigma_value_ > 0.0)
    for (Eigen::Index j = 0; j < g.size(); ++j)
      g(j) += sigma_value_ * stream.normal();
  return g;
}

Mat AdditiveGaussianSampler::sample_jacobian_t(const Vec& point,
                                               GaussianStream& stream) const {
  Mat jt = problem_->level_jacobian_t(level_, point);
  if (sigma_jacobian_ > 0.0)
    for (Eigen::Index c = 0; c < jt.cols(); ++c)
      for (Eigen::Index r = 0; r < jt.rows(); ++r)
        jt(r, c) += sigma_jacobian_ * stream.normal();
  return jt;
}

StochasticOracle::StochasticOracle(
    std::shared_ptr<const CompositionProblem> problem,
    std::vector<std::shared_ptr<const LevelSampler>> samplers,
    std::uint64_t master_seed)
    : problem_(std::move(problem)),
      samplers_(std::move(samplers)),
      master_seed_(master_seed) {
  if (!problem_) throw ContractError("oracle needs a problem");
  if (static_cast<int>(samplers_.size()) != problem_->depth())
    throw ConfigError("oracle needs exactly one sampler per level");
  for (int i = 1; i <= problem_->depth(); ++i) {
    const auto lvl = static_cast<std::uint64_t>(i);
    value_streams_.emplace_back(derive_seed(
        {master_seed_, lvl, static_cast<std::uint64_t>(StreamKind::value)}));
    jacobian_streams_.emplace_back(derive_seed(
        {master_seed_, lvl, static_cast<std::uint64_t>(StreamKind::jacobian)}));
  }
}

StochasticOracle StochasticOracle::gaussian(
    std::shared_ptr<const CompositionProblem> problem, const NoiseModel& noise,
    std::uint64_t master_seed) {
  noise.validate(problem->depth());
  std::vector<std::shared_ptr<const LevelSampler>> samplers;
  for (int i = 1; i <= problem->depth(); ++i)
    samplers.push_back(std::make_shared<AdditiveGaussianSampler>(
        problem, i, noise.sigma_value[i - 1], noise.sigma_jacobian[i - 1]));
  return StochasticOracle(std::move(problem), std::move(samplers), master_seed);
}

StochasticOracle StochasticOracle::reseeded(std::uint64_t master_seed) const {
  return StochasticOracle(problem_, samplers_, master_seed);
}

void StochasticOracle::check_point(int level, const Vec& point) const {
  const auto& m = problem_->level(level);
  if (point.size() != m.in_dim)
    throw ContractError("level " + std::to_string(level) +
                        ": sample point has dimension " +
                        std::to_string(point.size()) + ", expected " +
                        std::to_string(m.in_dim));
}

Vec StochasticOracle::sample_value(int level, const Vec& point) {
  check_point(level, point);
  Vec g = samplers_[level - 1]->sample_value(point, value_streams_[level - 1]);
  ++value_calls_;
  if (g.size() != problem_->level(level).out_dim)
    throw ContractError("level " + std::to_string(level) +
                        ": sampler returned wrong value dimension");
  if (!g.allFinite())
    throw NumericalError("level " + std::to_string(level) +
                         ": non-finite sampled value");
  return g;
}

Mat StochasticOracle::sample_jacobian_t(int level, const Vec& point) {
  check_point(level, point);
  Mat j = samplers_[level - 1]->sample_jacobian_t(point,
                                                  jacobian_streams_[level - 1]);
  ++jacobian_calls_;
  const auto& m = problem_->level(level);
  if (j.rows() != m.in_dim || j.cols() != m.out_dim)
    throw ContractError("level " + std::to_string(level) +
                        ": sampler returned wrong Jacobian shape");
  if (!j.allFinite())
    throw NumericalError("level " + std::to_string(level) +
                         ": non-finite sampled Jacobian");
  return j;
}

LevelSample StochasticOracle::sample_level(int level, const Vec& point) {
  LevelSample s;
  s.value = sample_value(level, point);
  s.jacobian_t = sample_jacobian_t(level, point);
  return s;
}

ChainSample StochasticOracle::chain_sample(std::span<const Vec> points) {
  if (static_cast<int>(points.size()) != depth())
    throw ContractError("chain_sample needs one evaluation point per level");
  ChainSample out;
  out.levels.reserve(points.size());
  std::vector<Mat> jacs;
  jacs.reserve(points.size());
  for (int i = 1; i <= depth(); ++i) {
    out.levels.push_back(sample_level(i, points[i - 1]));
    jacs.push_back(out.levels.back().jacobian_t);
  }
  out.product = chain_product(jacs);
  return out;
}

Mat finite_difference_jacobian_t(const SmoothMap& map, const Vec& y,
                                 double step) {
  Mat jt(map.in_dim, map.out_dim);
  Vec yp = y;
  for (int j = 0; j < map.in_dim; ++j) {
    const double h = step * std::max(1.0, std::abs(y(j)));
    yp(j) = y(j) + h;
    const Vec fp = map.value(yp);
    yp(j) = y(j) - h;
    const Vec fm = map.value(yp);
    yp(j) = y(j);
    jt.row(j) = ((fp - fm) / (2.0 * h)).transpose();
  }
  return jt;
}

}  // namespace stocg

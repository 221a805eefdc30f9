#pragma once

#include <memory>
#include <random>

#include "stocg/composition.hpp"

namespace testing_helpers {

using stocg::Mat;
using stocg::SmoothMap;
using stocg::Vec;

inline Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double e : v) out(i++) = e;
  return out;
}

// y -> A y + b
inline SmoothMap linear_map(const Mat& a, const Vec& b, std::string name = "linear") {
  SmoothMap m;
  m.name = std::move(name);
  m.in_dim = static_cast<int>(a.cols());
  m.out_dim = static_cast<int>(a.rows());
  m.value = [a, b](const Vec& y) -> Vec { return a * y + b; };
  m.jacobian_t = [a](const Vec&) -> Mat { return a.transpose(); };
  m.lip_value = a.norm();  // Frobenius, an upper bound on the spectral norm
  m.lip_grad = 0.0;
  return m;
}

// y -> scale * ||y||^2
inline SmoothMap sq_norm_map(int dim, double scale = 1.0) {
  SmoothMap m;
  m.name = "sq_norm";
  m.in_dim = dim;
  m.out_dim = 1;
  m.value = [scale](const Vec& y) -> Vec { return Vec::Constant(1, scale * y.squaredNorm()); };
  m.jacobian_t = [scale](const Vec& y) -> Mat { return 2.0 * scale * y; };
  m.lip_grad = 2.0 * scale;
  return m;
}

// Elementwise sin, a nonlinear square map.
inline SmoothMap sin_map(int dim) {
  SmoothMap m;
  m.name = "sin";
  m.in_dim = dim;
  m.out_dim = dim;
  m.value = [](const Vec& y) -> Vec { return y.array().sin().matrix(); };
  m.jacobian_t = [](const Vec& y) -> Mat { return Mat(y.array().cos().matrix().asDiagonal()); };
  m.lip_value = 1.0;
  m.lip_grad = 1.0;
  return m;
}

inline Vec random_vec(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = nd(rng);
  return v;
}

inline Mat random_mat(int r, int c, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = nd(rng);
  return m;
}

inline std::shared_ptr<const stocg::CompositionProblem> make_problem(
    std::vector<SmoothMap> levels, std::optional<double> f_star = std::nullopt) {
  return std::make_shared<const stocg::CompositionProblem>("test", std::move(levels), f_star);
}

// Central-difference gradient of a scalar function.
template <class F>
Vec numeric_gradient(F&& f, const Vec& x, double h = 1e-6) {
  Vec g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    g(i) = (f(xp) - f(xm)) / (2 * h);
  }
  return g;
}

}  // namespace testing_helpers

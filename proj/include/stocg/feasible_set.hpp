#pragma once

#include <string>
#include <string_view>

#include "stocg/composition.hpp"

namespace stocg {

/// How `lmo_approx` spends its slack.
enum class LmoMode {
  exact,        // always return the exact minimizer
  adversarial,  // move toward the worst point until the slack is used up
};

/**
 * Closed convex set with a linear minimization oracle. Supported shapes are
 * the l1 ball, l2 ball, scaled probability simplex {v >= 0, sum v = r} and
 * axis-aligned boxes. Immutable; every member is safe to call concurrently.
 */
class FeasibleSet {
 public:
  enum class Kind { l1_ball, l2_ball, simplex, box };

  static FeasibleSet l1_ball(int dim, double radius);
  static FeasibleSet l2_ball(int dim, double radius);
  static FeasibleSet simplex(int dim, double radius);
  static FeasibleSet box(int dim, double lo, double hi);
  static FeasibleSet box(Vec lo, Vec hi);

  /// Parses "l1:1.0", "l2:2.0", "simplex:1.0" or "box:0:1".
  static FeasibleSet parse(std::string_view spec, int dim);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  double radius() const { return radius_; }
  const Vec& lower() const { return lo_; }
  const Vec& upper() const { return hi_; }
  /// Upper bound on max ||a - b|| over the set.
  double diameter() const { return diameter_; }
  /// Canonical spec string, parseable by `parse`.
  std::string spec() const;

  /// Center of balls and boxes, first vertex of the simplex.
  Vec canonical_point() const;

  /// Exact argmin over the set of <g, v>. Ties go to the lowest index.
  Vec lmo(const Vec& g) const;
  /// A point whose objective is within `slack` of the exact LMO value.
  Vec lmo_approx(const Vec& g, double slack,
                 LmoMode mode = LmoMode::exact) const;
  /// Euclidean projection.
  Vec project(const Vec& y) const;
  bool contains(const Vec& v, double tol = 1e-9) const;

 private:
  FeasibleSet(Kind kind, int dim, double radius, Vec lo, Vec hi);
  void check_dim(const Vec& v, const char* what) const;

  Kind kind_;
  int dim_;
  double radius_ = 0.0;
  Vec lo_, hi_;
  double diameter_ = 0.0;
};

/// Projection of y onto {v >= 0, sum v = radius} by sort and threshold.
Vec project_simplex(const Vec& y, double radius);

}  // namespace stocg

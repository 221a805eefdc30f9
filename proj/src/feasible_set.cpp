#include "stocg/feasible_set.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "stocg/errors.hpp"

namespace stocg {

namespace {

double parse_number(std::string_view tok, std::string_view spec) {
  double v = 0.0;
  const auto* first = tok.data();
  const auto* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v))
    throw ConfigError("bad number '" + std::string(tok) + "' in set spec '" +
                      std::string(spec) + "'");
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

FeasibleSet::FeasibleSet(Kind kind, int dim, double radius, Vec lo, Vec hi)
    : kind_(kind), dim_(dim), radius_(radius), lo_(std::move(lo)), hi_(std::move(hi)) {
  if (dim_ <= 0) throw ConfigError("set dimension must be positive");
  switch (kind_) {
    case Kind::l1_ball:
    case Kind::l2_ball:
      if (!(radius_ > 0.0) || !std::isfinite(radius_))
        throw ConfigError("ball radius must be positive and finite");
      diameter_ = 2.0 * radius_;
      break;
    case Kind::simplex:
      if (!(radius_ > 0.0) || !std::isfinite(radius_))
        throw ConfigError("simplex radius must be positive and finite");
      diameter_ = radius_ * std::sqrt(2.0);
      break;
    case Kind::box:
      if (lo_.size() != dim_ || hi_.size() != dim_)
        throw ConfigError("box bounds must match the dimension");
      if (!lo_.allFinite() || !hi_.allFinite() || (hi_.array() < lo_.array()).any())
        throw ConfigError("box bounds must be finite with lo <= hi");
      diameter_ = (hi_ - lo_).norm();
      break;
  }
}

FeasibleSet FeasibleSet::l1_ball(int dim, double radius) {
  return FeasibleSet(Kind::l1_ball, dim, radius, Vec(), Vec());
}

FeasibleSet FeasibleSet::l2_ball(int dim, double radius) {
  return FeasibleSet(Kind::l2_ball, dim, radius, Vec(), Vec());
}

FeasibleSet FeasibleSet::simplex(int dim, double radius) {
  return FeasibleSet(Kind::simplex, dim, radius, Vec(), Vec());
}

FeasibleSet FeasibleSet::box(int dim, double lo, double hi) {
  if (dim <= 0) throw ConfigError("set dimension must be positive");
  return FeasibleSet(Kind::box, dim, 0.0, Vec::Constant(dim, lo),
                     Vec::Constant(dim, hi));
}

FeasibleSet FeasibleSet::box(Vec lo, Vec hi) {
  const int dim = static_cast<int>(lo.size());
  return FeasibleSet(Kind::box, dim, 0.0, std::move(lo), std::move(hi));
}

FeasibleSet FeasibleSet::parse(std::string_view spec, int dim) {
  const auto parts = split(spec, ':');
  const auto& name = parts[0];
  if ((name == "l1" || name == "l2" || name == "simplex") && parts.size() == 2) {
    const double r = parse_number(parts[1], spec);
    if (name == "l1") return l1_ball(dim, r);
    if (name == "l2") return l2_ball(dim, r);
    return simplex(dim, r);
  }
  if (name == "box" && parts.size() == 3)
    return box(dim, parse_number(parts[1], spec), parse_number(parts[2], spec));
  throw ConfigError("unrecognized set spec '" + std::string(spec) +
                    "' (expected l1:r, l2:r, simplex:r or box:lo:hi)");
}

std::string FeasibleSet::spec() const {
  switch (kind_) {
    case Kind::l1_ball: return "l1:" + fmt_double(radius_);
    case Kind::l2_ball: return "l2:" + fmt_double(radius_);
    case Kind::simplex: return "simplex:" + fmt_double(radius_);
    case Kind::box: {
      const bool uniform = (lo_.array() == lo_(0)).all() && (hi_.array() == hi_(0)).all();
      if (uniform) return "box:" + fmt_double(lo_(0)) + ":" + fmt_double(hi_(0));
      return "box:nonuniform";
    }
  }
  return {};
}

void FeasibleSet::check_dim(const Vec& v, const char* what) const {
  if (v.size() != dim_)
    throw ContractError(std::string(what) + " has dimension " +
                        std::to_string(v.size()) + ", set has " +
                        std::to_string(dim_));
}

Vec FeasibleSet::canonical_point() const {
  switch (kind_) {
    case Kind::l1_ball:
    case Kind::l2_ball:
      return Vec::Zero(dim_);
    case Kind::simplex: {
      Vec v = Vec::Zero(dim_);
      v(0) = radius_;
      return v;
    }
    case Kind::box:
      return 0.5 * (lo_ + hi_);
  }
  return {};
}

Vec FeasibleSet::lmo(const Vec& g) const {
  check_dim(g, "LMO direction");
  if (!g.allFinite()) throw ContractError("LMO direction must be finite");
  switch (kind_) {
    case Kind::l1_ball: {
      Eigen::Index j = 0;
      const double m = g.cwiseAbs().maxCoeff(&j);  // first maximal index
      Vec v = Vec::Zero(dim_);
      if (m > 0.0) v(j) = g(j) > 0.0 ? -radius_ : radius_;
      return v;
    }
    case Kind::l2_ball: {
      const double n = g.norm();
      if (n == 0.0) return Vec::Zero(dim_);
      return (-radius_ / n) * g;
    }
    case Kind::simplex: {
      Eigen::Index j = 0;
      g.minCoeff(&j);
      Vec v = Vec::Zero(dim_);
      v(j) = radius_;
      return v;
    }
    case Kind::box: {
      Vec v(dim_);
      for (int j = 0; j < dim_; ++j) {
        if (g(j) > 0.0) v(j) = lo_(j);
        else if (g(j) < 0.0) v(j) = hi_(j);
        else v(j) = 0.5 * (lo_(j) + hi_(j));
      }
      return v;
    }
  }
  return {};
}

Vec FeasibleSet::lmo_approx(const Vec& g, double slack, LmoMode mode) const {
  if (!(slack >= 0.0)) throw ContractError("LMO slack must be nonnegative");
  Vec best = lmo(g);
  if (slack == 0.0 || mode == LmoMode::exact) return best;
  // Slide from the exact vertex toward the maximizer of <g, .>; the
  // objective grows linearly along the segment, so stop when it reaches
  // the slack.
  const Vec worst = lmo(-g);
  const double spread = g.dot(worst - best);
  if (!(spread > 0.0)) return best;
  const double theta = std::min(1.0, slack / spread);
  return best + theta * (worst - best);
}

Vec project_simplex(const Vec& y, double radius) {
  const auto n = y.size();
  std::vector<double> s(y.data(), y.data() + n);
  std::sort(s.begin(), s.end(), std::greater<>());
  double cumsum = 0.0;
  double theta = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    cumsum += s[i];
    const double t = (cumsum - radius) / static_cast<double>(i + 1);
    if (s[i] - t > 0.0) theta = t;
  }
  return (y.array() - theta).max(0.0).matrix();
}

Vec FeasibleSet::project(const Vec& y) const {
  check_dim(y, "projection input");
  if (!y.allFinite()) throw ContractError("projection input must be finite");
  switch (kind_) {
    case Kind::l1_ball: {
      if (y.lpNorm<1>() <= radius_) return y;
      const Vec mag = project_simplex(y.cwiseAbs(), radius_);
      Vec out(dim_);
      for (int j = 0; j < dim_; ++j) out(j) = y(j) < 0.0 ? -mag(j) : mag(j);
      return out;
    }
    case Kind::l2_ball: {
      const double n = y.norm();
      if (n <= radius_) return y;
      return (radius_ / n) * y;
    }
    case Kind::simplex:
      return project_simplex(y, radius_);
    case Kind::box:
      return y.cwiseMax(lo_).cwiseMin(hi_);
  }
  return {};
}

bool FeasibleSet::contains(const Vec& v, double tol) const {
  if (v.size() != dim_ || !v.allFinite()) return false;
  switch (kind_) {
    case Kind::l1_ball:
      return v.lpNorm<1>() <= radius_ + tol;
    case Kind::l2_ball:
      return v.norm() <= radius_ + tol;
    case Kind::simplex:
      return v.minCoeff() >= -tol && std::abs(v.sum() - radius_) <= tol;
    case Kind::box:
      return ((v - lo_).array() >= -tol).all() && ((hi_ - v).array() >= -tol).all();
  }
  return false;
}

}  // namespace stocg

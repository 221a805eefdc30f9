#include "stocg/benchmarks.hpp"

#include <algorithm>
#include <cmath>

#include "stocg/errors.hpp"
#include "stocg/rng.hpp"

namespace stocg {

namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Mean-deviation phase retrieval

struct PhaseData {
  Mat a;  // n x d
  Vec b;  // n
};

void draw_pair(GaussianStream& s, const Vec& x_star, double noise_std, Vec& a,
               double& b) {
  for (Eigen::Index j = 0; j < a.size(); ++j) a(j) = s.normal();
  const double t = a.dot(x_star);
  b = t * t + noise_std * s.normal();
}

PhaseData draw_reference(const MeanDeviationSpec& spec, const Vec& x_star) {
  GaussianStream s(derive_seed({spec.seed, 0x7265666572ULL}));
  PhaseData data{Mat(spec.reference_samples, spec.d), Vec(spec.reference_samples)};
  Vec a(spec.d);
  for (int i = 0; i < spec.reference_samples; ++i) {
    double b = 0.0;
    draw_pair(s, x_star, spec.noise_std, a, b);
    data.a.row(i) = a.transpose();
    data.b(i) = b;
  }
  return data;
}

// Loss and its x-gradient for one pair.
double loss(const Vec& a, double b, const Vec& x, Vec* grad) {
  const double t = a.dot(x);
  const double r = b - t * t;
  if (grad) *grad = (-4.0 * r * t) * a;
  return r * r;
}

// sqrt(y + smoothing) for y >= 0, continued linearly below 0.
double smooth_root(double y, double smoothing) {
  if (y >= 0.0) return std::sqrt(y + smoothing);
  return std::sqrt(smoothing) + y / (2.0 * std::sqrt(smoothing));
}

double smooth_root_derivative(double y, double smoothing) {
  return 0.5 / std::sqrt(std::max(y, 0.0) + smoothing);
}

class PhaseInnerSampler : public LevelSampler {
 public:
  PhaseInnerSampler(Vec x_star, double noise_std)
      : x_star_(std::move(x_star)), noise_std_(noise_std) {}

  Vec sample_value(const Vec& x, GaussianStream& s) const override {
    Vec a(x.size());
    double b = 0.0;
    draw_pair(s, x_star_, noise_std_, a, b);
    Vec out(1 + x.size());
    out(0) = loss(a, b, x, nullptr);
    out.tail(x.size()) = x;
    return out;
  }

  Mat sample_jacobian_t(const Vec& x, GaussianStream& s) const override {
    Vec a(x.size());
    double b = 0.0;
    draw_pair(s, x_star_, noise_std_, a, b);
    Vec g;
    loss(a, b, x, &g);
    Mat jt = Mat::Zero(x.size(), 1 + x.size());
    jt.col(0) = g;
    jt.rightCols(x.size()).setIdentity();
    return jt;
  }

 private:
  Vec x_star_;
  double noise_std_;
};

class PhaseDeviationSampler : public LevelSampler {
 public:
  PhaseDeviationSampler(Vec x_star, double noise_std)
      : x_star_(std::move(x_star)), noise_std_(noise_std) {}

  Vec sample_value(const Vec& sx, GaussianStream& s) const override {
    const Eigen::Index d = sx.size() - 1;
    const Vec x = sx.tail(d);
    Vec a(d);
    double b = 0.0;
    draw_pair(s, x_star_, noise_std_, a, b);
    const double e = sx(0) - loss(a, b, x, nullptr);
    Vec out(2);
    out << sx(0), e * e;
    return out;
  }

  Mat sample_jacobian_t(const Vec& sx, GaussianStream& s) const override {
    const Eigen::Index d = sx.size() - 1;
    const Vec x = sx.tail(d);
    Vec a(d);
    double b = 0.0;
    draw_pair(s, x_star_, noise_std_, a, b);
    Vec g;
    const double e = sx(0) - loss(a, b, x, &g);
    Mat jt = Mat::Zero(1 + d, 2);
    jt(0, 0) = 1.0;
    jt(0, 1) = 2.0 * e;
    jt.col(1).tail(d) = -2.0 * e * g;
    return jt;
  }

 private:
  Vec x_star_;
  double noise_std_;
};

class ExactSampler : public LevelSampler {
 public:
  ExactSampler(std::shared_ptr<const CompositionProblem> p, int level)
      : p_(std::move(p)), level_(level) {}
  Vec sample_value(const Vec& y, GaussianStream&) const override {
    return p_->level_value(level_, y);
  }
  Mat sample_jacobian_t(const Vec& y, GaussianStream&) const override {
    return p_->level_jacobian_t(level_, y);
  }

 private:
  std::shared_ptr<const CompositionProblem> p_;
  int level_;
};

// Losses and per-sample gradient weights over the frozen sample:
// U_j = r_j^2 and grad U_j = w_j a_j with w_j = -4 r_j t_j.
struct PhaseEval {
  Vec u;
  Vec w;
};

PhaseEval eval_phase(const PhaseData& data, const Vec& x) {
  const Vec t = data.a * x;
  const Vec r = data.b - t.cwiseProduct(t);
  return {r.cwiseProduct(r), (-4.0 * r.array() * t.array()).matrix()};
}

Vec planted_solution(const MeanDeviationSpec& spec) {
  if (spec.x_star) return *spec.x_star;
  if (spec.sparsity < 1 || spec.sparsity > spec.d)
    throw ConfigError("meandev sparsity must lie in [1, d]");
  Engine eng(derive_seed({spec.seed, 0x706c616e74ULL}));
  std::vector<int> idx(spec.d);
  for (int i = 0; i < spec.d; ++i) idx[i] = i;
  std::shuffle(idx.begin(), idx.end(), eng);
  Vec x = Vec::Zero(spec.d);
  for (int i = 0; i < spec.sparsity; ++i)
    x(idx[i]) = ((eng() & 1U) ? 1.0 : -1.0) / spec.sparsity;
  return x;
}

// ---------------------------------------------------------------------------
// Two-level synthetic

Mat random_orthogonal(int d, Engine& eng) {
  std::normal_distribution<double> nd;
  Mat g(d, d);
  for (int c = 0; c < d; ++c)
    for (int r = 0; r < d; ++r) g(r, c) = nd(eng);
  Eigen::HouseholderQR<Mat> qr(g);
  return qr.householderQ() * Mat::Identity(d, d);
}

double max_norm_over(const FeasibleSet& set) {
  switch (set.kind()) {
    case FeasibleSet::Kind::l1_ball:
    case FeasibleSet::Kind::l2_ball:
    case FeasibleSet::Kind::simplex:
      return set.radius();
    case FeasibleSet::Kind::box:
      return set.lower().cwiseAbs().cwiseMax(set.upper().cwiseAbs()).norm();
  }
  return 0.0;
}

template <class T>
T param_or(const json& p, const char* key, T fallback) {
  return p.contains(key) ? p.at(key).get<T>() : fallback;
}

void check_known_keys(const json& p, std::initializer_list<const char*> keys,
                      const std::string& name) {
  if (!p.is_object()) throw ConfigError("benchmark parameters must be an object");
  for (const auto& [k, v] : p.items()) {
    bool ok = false;
    for (const char* key : keys) ok = ok || k == key;
    if (!ok) throw ConfigError("unknown parameter '" + k + "' for benchmark " + name);
  }
}

Vec vec_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json vec_to_json(const Vec& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

Benchmark build_mean_deviation(const MeanDeviationSpec& spec) {
  if (spec.d < 1) throw ConfigError("meandev dimension must be positive");
  if (!(spec.rho > 0.0)) throw ConfigError("meandev rho must be positive");
  if (!(spec.smoothing > 0.0)) throw ConfigError("meandev smoothing must be positive");
  if (!(spec.noise_std >= 0.0)) throw ConfigError("meandev noise_std must be nonnegative");
  if (spec.reference_samples < 1)
    throw ConfigError("meandev needs at least one reference sample");
  const Vec x_star = planted_solution(spec);
  if (x_star.size() != spec.d) throw ConfigError("meandev x_star has the wrong dimension");
  const double radius = spec.l1_radius.value_or(1.5 * x_star.lpNorm<1>());
  if (!(radius > 0.0)) throw ConfigError("meandev l1 radius must be positive");
  if (x_star.lpNorm<1>() > radius + 1e-12)
    throw ConfigError("meandev planted solution lies outside the l1 ball");

  auto data = std::make_shared<const PhaseData>(draw_reference(spec, x_star));
  const int d = spec.d;
  const double rho = spec.rho;
  const double sm = spec.smoothing;
  const double n = static_cast<double>(spec.reference_samples);

  // Lipschitz bounds over the l1 ball using |<a, x>| <= ||a||_inf r.
  double s_bound = 0.0, g_bound = 0.0, h_bound = 0.0, sq_bound = 0.0;
  std::vector<double> u_max(spec.reference_samples), gu_max(spec.reference_samples),
      hu_max(spec.reference_samples);
  for (int j = 0; j < spec.reference_samples; ++j) {
    const double bt = data->a.row(j).cwiseAbs().maxCoeff() * radius;
    const double an = data->a.row(j).norm();
    const double bb = std::abs(data->b(j)) + bt * bt;
    u_max[j] = bb * bb;
    gu_max[j] = 4.0 * bb * bt * an;
    hu_max[j] = 4.0 * (std::abs(data->b(j)) + 3.0 * bt * bt) * an * an;
    s_bound += u_max[j] / n;
    g_bound += gu_max[j] / n;
    h_bound += hu_max[j] / n;
    sq_bound += u_max[j] * u_max[j] / n;
  }
  double dev_bound = 0.0, dev_grad = 0.0, dev_hess = 0.0;
  for (int j = 0; j < spec.reference_samples; ++j) {
    const double dj = std::max(s_bound, u_max[j]);
    dev_bound += 2.0 * dj / n;
    dev_grad += 2.0 * dj * gu_max[j] / n;
    dev_hess += (2.0 * gu_max[j] * gu_max[j] + 2.0 * dj * hu_max[j]) / n;
  }

  SmoothMap f3;
  f3.name = "mean-loss+carrier";
  f3.in_dim = d;
  f3.out_dim = 1 + d;
  f3.value = [data, d](const Vec& x) {
    const auto ev = eval_phase(*data, x);
    Vec out(1 + d);
    out(0) = ev.u.mean();
    out.tail(d) = x;
    return out;
  };
  f3.jacobian_t = [data, d](const Vec& x) {
    const auto ev = eval_phase(*data, x);
    Mat jt = Mat::Zero(d, 1 + d);
    jt.col(0) = data->a.transpose() * ev.w / static_cast<double>(data->b.size());
    jt.rightCols(d).setIdentity();
    return jt;
  };
  f3.lip_value = std::sqrt(1.0 + g_bound * g_bound);
  f3.lip_grad = h_bound;

  SmoothMap f2;
  f2.name = "deviation";
  f2.in_dim = 1 + d;
  f2.out_dim = 2;
  f2.value = [data, d](const Vec& sx) {
    const auto ev = eval_phase(*data, sx.tail(d));
    Vec out(2);
    out << sx(0), (sx(0) - ev.u.array()).square().mean();
    return out;
  };
  f2.jacobian_t = [data, d](const Vec& sx) {
    const auto ev = eval_phase(*data, sx.tail(d));
    const double m = static_cast<double>(data->b.size());
    const Vec e = (sx(0) - ev.u.array()).matrix();
    Mat jt = Mat::Zero(1 + d, 2);
    jt(0, 0) = 1.0;
    jt(0, 1) = 2.0 * e.mean();
    jt.col(1).tail(d) = data->a.transpose() * (-2.0 * e.cwiseProduct(ev.w)) / m;
    return jt;
  };
  f2.lip_value = 1.0 + std::hypot(dev_bound, dev_grad);
  f2.lip_grad = 2.0 + 2.0 * g_bound + dev_hess;

  SmoothMap f1;
  f1.name = "mean-minus-deviation";
  f1.in_dim = 2;
  f1.out_dim = 1;
  f1.value = [rho, sm](const Vec& y) {
    Vec out(1);
    out(0) = y(0) - rho * smooth_root(y(1), sm);
    return out;
  };
  f1.jacobian_t = [rho, sm](const Vec& y) {
    Mat jt(2, 1);
    jt << 1.0, -rho * smooth_root_derivative(y(1), sm);
    return jt;
  };
  f1.lip_value = std::hypot(1.0, rho / (2.0 * std::sqrt(sm)));
  f1.lip_grad = rho / (4.0 * sm * std::sqrt(sm));

  // Variance <= second moment, so F >= -rho sqrt(E U^2 + smoothing).
  const double f_lower = -rho * std::sqrt(sq_bound + sm);
  auto problem = std::make_shared<const CompositionProblem>(
      "meandev", std::vector<SmoothMap>{f1, f2, f3}, f_lower);

  Benchmark bm{problem,
               {std::make_shared<ExactSampler>(problem, 1),
                std::make_shared<PhaseDeviationSampler>(x_star, spec.noise_std),
                std::make_shared<PhaseInnerSampler>(x_star, spec.noise_std)},
               FeasibleSet::l1_ball(d, radius),
               Vec::Constant(d, radius / (2.0 * d)),
               std::nullopt,
               json::object()};
  bm.params = {{"d", d},
               {"rho", rho},
               {"smoothing", sm},
               {"noise_std", spec.noise_std},
               {"sparsity", spec.sparsity},
               {"x_star", vec_to_json(x_star)},
               {"l1_radius", radius},
               {"reference_samples", spec.reference_samples},
               {"seed", spec.seed}};
  return bm;
}

PhaseSample mean_deviation_reference(const MeanDeviationSpec& spec) {
  const Vec x_star = planted_solution(spec);
  PhaseData data = draw_reference(spec, x_star);
  return {std::move(data.a), std::move(data.b), x_star};
}

double mean_deviation_direct(const Mat& a, const Vec& b, const Vec& x,
                             double rho, double smoothing) {
  const auto n = b.size();
  std::vector<double> losses(n);
  double mean = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double t = a.row(j).dot(x);
    losses[j] = (b(j) - t * t) * (b(j) - t * t);
    mean += losses[j];
  }
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double l : losses) var += (l - mean) * (l - mean);
  var /= static_cast<double>(n);
  return mean - rho * std::sqrt(var + smoothing);
}

Benchmark build_two_level(const TwoLevelSpec& spec) {
  if (spec.d < 2) throw ConfigError("twolevel needs d >= 2");
  if (!(spec.conditioning >= 1.0)) throw ConfigError("twolevel conditioning must be >= 1");
  if (spec.sigma_value.size() != 2 || spec.sigma_jacobian.size() != 2)
    throw ConfigError("twolevel needs two sigma values per kind");
  const int d = spec.d;
  Engine eng(derive_seed({spec.seed, 0x74776fULL}));
  Mat a;
  Vec b;
  if (spec.identity) {
    a = Mat::Identity(d, d);
    b = Vec::Zero(d);
  } else {
    Vec s(d);
    for (int i = 0; i < d; ++i)
      s(i) = d == 1 ? 1.0 : 1.0 + (spec.conditioning - 1.0) * i / (d - 1.0);
    a = random_orthogonal(d, eng) * s.asDiagonal() * random_orthogonal(d, eng).transpose();
    std::normal_distribution<double> nd(0.0, 0.5);
    b.resize(d);
    for (int i = 0; i < d; ++i) b(i) = nd(eng);
  }
  const double a_norm = Eigen::JacobiSVD<Mat>(a).singularValues()(0);

  SmoothMap f2;
  f2.name = "affine";
  f2.in_dim = d;
  f2.out_dim = d;
  f2.value = [a, b](const Vec& x) -> Vec { return a * x + b; };
  f2.jacobian_t = [a](const Vec&) -> Mat { return a.transpose(); };
  f2.lip_value = a_norm;
  f2.lip_grad = 0.0;

  SmoothMap f1;
  f1.name = "log-cosh-like";
  f1.in_dim = d;
  f1.out_dim = 1;
  f1.value = [](const Vec& y) {
    Vec out(1);
    out(0) = 0.5 * (1.0 + y.array().square()).log().sum();
    return out;
  };
  f1.jacobian_t = [](const Vec& y) -> Mat {
    return (y.array() / (1.0 + y.array().square())).matrix();
  };
  // |phi'| <= 1/2 per coordinate, |phi''| <= 1.
  f1.lip_value = 0.5 * std::sqrt(static_cast<double>(d));
  f1.lip_grad = 1.0;

  auto problem = std::make_shared<const CompositionProblem>(
      "twolevel", std::vector<SmoothMap>{f1, f2}, 0.0);
  const FeasibleSet set = FeasibleSet::parse(spec.set_spec.value_or("l2:1"), d);
  Benchmark bm{problem,
               {std::make_shared<AdditiveGaussianSampler>(
                    problem, 1, spec.sigma_value[0], spec.sigma_jacobian[0]),
                std::make_shared<AdditiveGaussianSampler>(
                    problem, 2, spec.sigma_value[1], spec.sigma_jacobian[1])},
               set,
               set.lmo(-Vec::Ones(d)) * 0.5 + set.canonical_point() * 0.5,
               std::nullopt,
               json::object()};
  bm.params = {{"d", d},
               {"conditioning", spec.conditioning},
               {"identity", spec.identity},
               {"sigma_value", spec.sigma_value},
               {"sigma_jacobian", spec.sigma_jacobian},
               {"set", set.spec()},
               {"seed", spec.seed}};
  return bm;
}

Benchmark build_quadratic(const QuadraticSpec& spec) {
  const int d = static_cast<int>(spec.c.size());
  if (d < 1 || spec.q.rows() != d || spec.q.cols() != d)
    throw ConfigError("quadratic Q and c dimensions do not match");
  if (!spec.q.isApprox(spec.q.transpose(), 1e-12))
    throw ConfigError("quadratic Q must be symmetric");
  if (spec.set.dim() != d) throw ConfigError("quadratic set has the wrong dimension");
  Eigen::SelfAdjointEigenSolver<Mat> eig(spec.q);
  const double q_norm = eig.eigenvalues().cwiseAbs().maxCoeff();
  const double r = max_norm_over(spec.set);

  const Mat q = spec.q;
  const Vec c = spec.c;
  SmoothMap f;
  f.name = spec.name;
  f.in_dim = d;
  f.out_dim = 1;
  f.value = [q, c](const Vec& x) {
    Vec out(1);
    out(0) = 0.5 * x.dot(q * x) + c.dot(x);
    return out;
  };
  f.jacobian_t = [q, c](const Vec& x) -> Mat { return q * x + c; };
  f.lip_value = q_norm * r + c.norm();
  f.lip_grad = q_norm;

  // Global minimum when convex with a known stationary point, otherwise a
  // crude lower bound over the ball of radius r.
  double f_star = -0.5 * q_norm * r * r - c.norm() * r;
  if (spec.stationary_point && eig.eigenvalues().minCoeff() >= 0.0)
    f_star = f.value(*spec.stationary_point)(0);

  auto problem = std::make_shared<const CompositionProblem>(
      spec.name, std::vector<SmoothMap>{f}, f_star);
  const Vec x0 = spec.x0.value_or(spec.set.canonical_point());
  if (!spec.set.contains(x0)) throw ConfigError("quadratic x0 is infeasible");
  Benchmark bm{problem,
               {std::make_shared<AdditiveGaussianSampler>(
                   problem, 1, spec.sigma_value, spec.sigma_jacobian)},
               spec.set,
               x0,
               spec.stationary_point,
               json::object()};
  bm.params = {{"d", d},
               {"sigma_value", spec.sigma_value},
               {"sigma_jacobian", spec.sigma_jacobian},
               {"set", spec.set.spec()}};
  return bm;
}

std::vector<std::string> benchmark_names() {
  return {"meandev", "twolevel", "quadbox", "quadball"};
}

Benchmark make_benchmark(const std::string& name, const json& p) {
  if (name == "meandev") {
    check_known_keys(p, {"d", "rho", "smoothing", "noise_std", "sparsity", "x_star",
                         "l1_radius", "reference_samples", "seed"},
                     name);
    MeanDeviationSpec s;
    s.d = param_or(p, "d", s.d);
    s.rho = param_or(p, "rho", s.rho);
    s.smoothing = param_or(p, "smoothing", s.smoothing);
    s.noise_std = param_or(p, "noise_std", s.noise_std);
    s.sparsity = param_or(p, "sparsity", s.sparsity);
    if (p.contains("x_star")) s.x_star = vec_from_json(p.at("x_star"));
    if (p.contains("l1_radius")) s.l1_radius = p.at("l1_radius").get<double>();
    s.reference_samples = param_or(p, "reference_samples", s.reference_samples);
    s.seed = param_or(p, "seed", s.seed);
    if (s.x_star) s.d = static_cast<int>(s.x_star->size());
    return build_mean_deviation(s);
  }
  if (name == "twolevel") {
    check_known_keys(p, {"d", "conditioning", "identity", "sigma", "sigma_value",
                         "sigma_jacobian", "set", "seed"},
                     name);
    TwoLevelSpec s;
    s.d = param_or(p, "d", s.d);
    s.conditioning = param_or(p, "conditioning", s.conditioning);
    s.identity = param_or(p, "identity", s.identity);
    if (p.contains("sigma")) {
      const double sg = p.at("sigma").get<double>();
      s.sigma_value = {sg, sg};
      s.sigma_jacobian = {sg, sg};
    }
    s.sigma_value = param_or(p, "sigma_value", s.sigma_value);
    s.sigma_jacobian = param_or(p, "sigma_jacobian", s.sigma_jacobian);
    if (p.contains("set")) s.set_spec = p.at("set").get<std::string>();
    s.seed = param_or(p, "seed", s.seed);
    return build_two_level(s);
  }
  if (name == "quadbox") {
    check_known_keys(p, {"d", "conditioning", "center", "sigma_value", "sigma_jacobian",
                         "lo", "hi"},
                     name);
    const int d = param_or(p, "d", 10);
    const double cond = param_or(p, "conditioning", 1.0);
    const double center = param_or(p, "center", 0.5);
    const double lo = param_or(p, "lo", -1.0);
    const double hi = param_or(p, "hi", 1.0);
    if (d < 1) throw ConfigError("quadbox dimension must be positive");
    if (!(cond >= 1.0)) throw ConfigError("quadbox conditioning must be >= 1");
    Vec diag(d);
    for (int i = 0; i < d; ++i) diag(i) = d == 1 ? 1.0 : 1.0 + (cond - 1.0) * i / (d - 1.0);
    // F = sum_i diag_i (x_i - center)^2 / 2 up to a constant; the box
    // minimizer is the clamped center.
    const Vec c = -center * diag;
    const FeasibleSet set = FeasibleSet::box(d, lo, hi);
    QuadraticSpec s{"quadbox",
                    Mat(diag.asDiagonal()),
                    c,
                    set,
                    param_or(p, "sigma_value", 1.0),
                    param_or(p, "sigma_jacobian", 1.0),
                    std::nullopt,
                    Vec::Constant(d, std::clamp(center, lo, hi))};
    Benchmark bm = build_quadratic(s);
    bm.params["conditioning"] = cond;
    bm.params["center"] = center;
    bm.params["lo"] = lo;
    bm.params["hi"] = hi;
    bm.params.erase("set");
    return bm;
  }
  if (name == "quadball") {
    check_known_keys(p, {"sigma_value", "sigma_jacobian", "radius"}, name);
    const double radius = param_or(p, "radius", 1.0);
    Mat q(2, 2);
    q << 1.0, 0.0, 0.0, -1.0;
    QuadraticSpec s{"quadball",
                    q,
                    Vec::Zero(2),
                    FeasibleSet::l2_ball(2, radius),
                    param_or(p, "sigma_value", 0.0),
                    param_or(p, "sigma_jacobian", 0.0),
                    Vec((Vec(2) << 0.3 * radius, 0.1 * radius).finished()),
                    std::nullopt};
    Benchmark bm = build_quadratic(s);
    bm.params["radius"] = radius;
    bm.params.erase("d");
    bm.params.erase("set");
    return bm;
  }
  throw ConfigError("unknown benchmark '" + name +
                    "' (expected meandev, twolevel, quadbox or quadball)");
}

}  // namespace stocg

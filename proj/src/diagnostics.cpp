#include "stocg/diagnostics.hpp"

#include <charconv>
#include <cmath>
#include <set>

#include "stocg/errors.hpp"

namespace stocg {

Vec gradient_mapping(const FeasibleSet& set, const Vec& x, const Vec& g,
                     double beta) {
  if (!(beta > 0.0)) throw ContractError("gradient mapping needs beta > 0");
  return beta * (x - set.project(x - g / beta));
}

double fw_gap(const FeasibleSet& set, const Vec& x, const Vec& g) {
  return g.dot(x - set.lmo(g));
}

double eta(const FeasibleSet& set, const Vec& x, const Vec& z, double beta) {
  if (!(beta > 0.0)) throw ContractError("eta needs beta > 0");
  const Vec d = set.project(x - z / beta) - x;
  return z.dot(d) + 0.5 * beta * d.squaredNorm();
}

ChainConstants chain_constants(const CompositionProblem& problem) {
  const int t = problem.depth();
  std::vector<double> lf(t + 1), lg(t + 1);  // 1-based
  for (int i = 1; i <= t; ++i) {
    const auto& m = problem.level(i);
    if (!m.lip_value || !m.lip_grad)
      throw ConfigError("level " + std::to_string(i) +
                        " is missing its Lipschitz constants");
    lf[i] = *m.lip_value;
    lg[i] = *m.lip_grad;
  }
  auto prod_lf = [&](int from, int to, int power) {
    double p = 1.0;
    for (int l = from; l <= to; ++l) p *= power == 2 ? lf[l] * lf[l] : lf[l];
    return p;
  };

  ChainConstants out;
  out.lip_grad_partial.resize(t);
  for (int i = 1; i <= t; ++i) {
    double s = 0.0;
    for (int j = i; j <= t; ++j)
      s += lg[j] * prod_lf(i, j - 1, 1) * prod_lf(j + 1, t, 2);
    out.lip_grad_partial[i - 1] = s;
  }
  out.lip_grad_F = out.lip_grad_partial[0];
  out.lip_value_product = prod_lf(1, t, 1);

  // R_1 = L'_1 L_2 ... L_T; R_j = (prod_{l != j} L_l) L'_j for 2 <= j <= T-1.
  for (int j = 1; j <= t - 1; ++j) {
    double p = lg[j];
    for (int l = 1; l <= t; ++l)
      if (l != j) p *= lf[l];
    out.r.push_back(p);
  }
  // C_2 = R_1; C_j = sum_{i=1}^{j-2} R_i prod_{l=i+1}^{j-1} L_l for j >= 3.
  for (int j = 2; j <= t; ++j) {
    if (j == 2) {
      out.c.push_back(out.r[0]);
      continue;
    }
    double s = 0.0;
    for (int i = 1; i <= j - 2; ++i) s += out.r[i - 1] * prod_lf(i + 1, j - 1, 1);
    out.c.push_back(s);
  }
  return out;
}

double lip_grad_eta(double beta) {
  if (!(beta > 0.0)) throw ContractError("beta must be positive");
  const double a = 1.0 + beta;
  const double b = 1.0 + 1.0 / (2.0 * beta);
  return 2.0 * std::sqrt(a * a + b * b);
}

MeritConfig MeritConfig::defaults(const CompositionProblem& problem, double beta) {
  if (!(beta > 0.0)) throw ConfigError("beta must be positive");
  const auto cc = chain_constants(problem);
  if (!(cc.lip_grad_F > 0.0))
    throw ConfigError("merit weights need a positive L_{grad F}");
  const int t = problem.depth();
  const double l2 = cc.lip_grad_F * cc.lip_grad_F;
  MeritConfig cfg;
  cfg.beta = beta;
  cfg.lip_grad_F = cc.lip_grad_F;
  cfg.chain_c = cc.c;
  cfg.alpha = beta / (20.0 * l2);
  cfg.gamma.assign(t, beta / 2.0);
  for (int j = 2; j <= t; ++j) {
    const double cj = cc.c[j - 2];
    cfg.gamma[j - 1] =
        (2.0 * cfg.alpha + 1.0 / (4.0 * cfg.alpha * l2)) * (t - 1) * cj * cj +
        beta / 2.0;
  }
  return cfg;
}

std::vector<std::optional<double>> inner_errors(const CompositionProblem& problem,
                                                const Vec& x,
                                                const std::vector<Vec>& u) {
  const int t = problem.depth();
  std::vector<std::optional<double>> out(t);
  if (u.empty()) return out;
  if (static_cast<int>(u.size()) != t)
    throw ContractError("inner_errors needs one u slot per level");
  for (int i = 1; i <= t; ++i) {
    if (u[i - 1].size() == 0) continue;
    const Vec& arg = i == t ? x : u[i];
    if (arg.size() == 0) continue;
    out[i - 1] = (problem.level_value(i, arg) - u[i - 1]).squaredNorm();
  }
  return out;
}

double merit_value(const MeritConfig& cfg, const CompositionProblem& problem,
                   const FeasibleSet& set, const Vec& x, const Vec& z,
                   const std::vector<Vec>& u) {
  if (!problem.f_star())
    throw ConfigError("merit value needs a lower bound F* for " + problem.name());
  if (!problem.exact_available())
    throw ConfigError("merit value needs exact evaluators");
  double w = problem.value(x) - *problem.f_star() - eta(set, x, z, cfg.beta) +
             cfg.alpha * (problem.gradient(x) - z).squaredNorm();
  const auto errs = inner_errors(problem, x, u);
  for (std::size_t i = 0; i < errs.size(); ++i)
    if (errs[i]) w += cfg.gamma.at(i) * *errs[i];
  return w;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string trace_csv_header(int depth) {
  std::string h = "k,tau,t_icg,grad_map_sq,fw_gap,z_err_sq";
  for (int i = 1; i <= depth; ++i) h += ",inner_err_" + std::to_string(i);
  h += ",H_gap,sfo,lmo";
  return h;
}

namespace {

void append_opt(std::string& s, const std::optional<double>& v) {
  s += ',';
  if (v) s += format_double(*v);
}

}  // namespace

std::string trace_csv_row(const TraceRecord& rec) {
  std::string s = std::to_string(rec.k);
  s += ',' + format_double(rec.tau);
  s += ',' + std::to_string(rec.t_icg);
  append_opt(s, rec.grad_map_sq);
  append_opt(s, rec.fw_gap);
  append_opt(s, rec.z_err_sq);
  for (const auto& e : rec.inner_err_sq) append_opt(s, e);
  append_opt(s, rec.h_gap);
  s += ',' + std::to_string(rec.sfo);
  s += ',' + std::to_string(rec.lmo);
  return s;
}

void write_trace_csv(std::ostream& os, int depth,
                     const std::vector<TraceRecord>& trace) {
  os << trace_csv_header(depth) << '\n';
  for (const auto& r : trace) os << trace_csv_row(r) << '\n';
}

RateFit ols_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw DataError("least squares needs at least two paired points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw DataError("least squares needs distinct abscissae");
  RateFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    sse += r * r;
  }
  f.r_squared = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  return f;
}

RateFit rate_fit(const std::vector<RatePoint>& points) {
  std::set<std::int64_t> distinct;
  std::vector<double> lx, ly;
  for (const auto& p : points) {
    if (p.n <= 0) throw DataError("rate fit needs positive N");
    if (!(p.mean > 0.0) || !std::isfinite(p.mean))
      throw DataError("rate fit needs positive finite means");
    if (p.replications < kRateFitMinReplications)
      throw DataError("rate fit needs at least " +
                      std::to_string(kRateFitMinReplications) +
                      " replications per N");
    distinct.insert(p.n);
    lx.push_back(std::log(static_cast<double>(p.n)));
    ly.push_back(std::log(p.mean));
  }
  if (static_cast<int>(distinct.size()) < kRateFitMinPoints)
    throw DataError("rate fit needs at least " + std::to_string(kRateFitMinPoints) +
                    " distinct N values");
  return ols_fit(lx, ly);
}

}  // namespace stocg

#include "stocg/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "stocg/errors.hpp"
#include "stocg/rng.hpp"

#ifndef STOCG_VERSION
#define STOCG_VERSION "unknown"
#endif

namespace stocg {

using nlohmann::json;

namespace {

template <class T>
json opt_to_json(const std::optional<T>& v) {
  if (!v) return nullptr;
  return json(*v);
}

template <class T>
std::optional<T> opt_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<T>();
}

json opt_vec_to_json(const std::vector<std::optional<double>>& v) {
  json out = json::array();
  for (const auto& e : v) out.push_back(opt_to_json(e));
  return out;
}

std::vector<std::optional<double>> opt_vec_from_json(const json& j) {
  std::vector<std::optional<double>> out;
  for (const auto& e : j) out.push_back(opt_from_json<double>(e));
  return out;
}

json moments_to_json(const std::optional<Moments>& m) {
  if (!m) return nullptr;
  return json{{"mean", m->mean}, {"std_error", opt_to_json(m->std_error)},
              {"count", m->count}};
}

std::optional<Moments> moments_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  Moments m;
  m.mean = j.at("mean").get<double>();
  m.std_error = opt_from_json<double>(j.at("std_error"));
  m.count = j.at("count").get<int>();
  return m;
}

json fit_to_json(const std::optional<RateFit>& f) {
  if (!f) return nullptr;
  return json{{"slope", f->slope}, {"intercept", f->intercept},
              {"r_squared", f->r_squared}};
}

std::optional<RateFit> fit_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  RateFit f;
  f.slope = j.at("slope").get<double>();
  f.intercept = j.at("intercept").get<double>();
  f.r_squared = j.at("r_squared").get<double>();
  return f;
}

std::string_view format_name(OutputFormat f) {
  return f == OutputFormat::csv ? "csv" : "json";
}

OutputFormat parse_format(const std::string& s) {
  if (s == "csv") return OutputFormat::csv;
  if (s == "json") return OutputFormat::json;
  throw ConfigError("unknown output format '" + s + "' (expected csv or json)");
}

json run_to_json(const RunSummary& s) {
  return json{{"n", s.n},
              {"replication", s.replication},
              {"seed", s.seed},
              {"output_index", s.output_index},
              {"grad_map_sq", opt_to_json(s.grad_map_sq)},
              {"fw_gap", opt_to_json(s.fw_gap)},
              {"z_err_sq", opt_to_json(s.z_err_sq)},
              {"inner_err_sq", opt_vec_to_json(s.inner_err_sq)},
              {"min_grad_map_sq", opt_to_json(s.min_grad_map_sq)},
              {"sfo", s.sfo},
              {"lmo", s.lmo},
              {"error", opt_to_json(s.error)}};
}

RunSummary run_from_json(const json& j) {
  RunSummary s;
  s.n = j.at("n").get<std::int64_t>();
  s.replication = j.at("replication").get<int>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.output_index = j.at("output_index").get<std::int64_t>();
  s.grad_map_sq = opt_from_json<double>(j.at("grad_map_sq"));
  s.fw_gap = opt_from_json<double>(j.at("fw_gap"));
  s.z_err_sq = opt_from_json<double>(j.at("z_err_sq"));
  s.inner_err_sq = opt_vec_from_json(j.at("inner_err_sq"));
  s.min_grad_map_sq = opt_from_json<double>(j.at("min_grad_map_sq"));
  s.sfo = j.at("sfo").get<std::int64_t>();
  s.lmo = j.at("lmo").get<std::int64_t>();
  s.error = opt_from_json<std::string>(j.at("error"));
  return s;
}

json horizon_to_json(const HorizonAggregate& h) {
  json inner = json::array();
  for (const auto& m : h.inner_err_sq) inner.push_back(moments_to_json(m));
  return json{{"n", h.n},
              {"runs_ok", h.runs_ok},
              {"grad_map_sq", moments_to_json(h.grad_map_sq)},
              {"fw_gap", moments_to_json(h.fw_gap)},
              {"z_err_sq", moments_to_json(h.z_err_sq)},
              {"inner_err_sq", inner},
              {"sfo", h.sfo},
              {"lmo", h.lmo}};
}

HorizonAggregate horizon_from_json(const json& j) {
  HorizonAggregate h;
  h.n = j.at("n").get<std::int64_t>();
  h.runs_ok = j.at("runs_ok").get<int>();
  h.grad_map_sq = moments_from_json(j.at("grad_map_sq"));
  h.fw_gap = moments_from_json(j.at("fw_gap"));
  h.z_err_sq = moments_from_json(j.at("z_err_sq"));
  for (const auto& e : j.at("inner_err_sq")) h.inner_err_sq.push_back(moments_from_json(e));
  h.sfo = j.at("sfo").get<std::int64_t>();
  h.lmo = j.at("lmo").get<std::int64_t>();
  return h;
}

std::string csv_opt(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

// Quotes a CSV field when it contains a separator, quote or newline.
std::string csv_text(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_runs_csv(std::ostream& os, int depth, const std::vector<RunSummary>& runs) {
  os << "n,replication,seed,output_index,grad_map_sq,fw_gap,z_err_sq";
  for (int i = 1; i <= depth; ++i) os << ",inner_err_" << i;
  os << ",min_grad_map_sq,sfo,lmo,error\n";
  for (const auto& s : runs) {
    os << s.n << ',' << s.replication << ',' << s.seed << ',' << s.output_index << ','
       << csv_opt(s.grad_map_sq) << ',' << csv_opt(s.fw_gap) << ',' << csv_opt(s.z_err_sq);
    for (int i = 0; i < depth; ++i) {
      os << ',';
      if (static_cast<std::size_t>(i) < s.inner_err_sq.size()) os << csv_opt(s.inner_err_sq[i]);
    }
    os << ',' << csv_opt(s.min_grad_map_sq) << ',' << s.sfo << ',' << s.lmo << ','
       << (s.error ? csv_text(*s.error) : std::string()) << '\n';
  }
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  return os;
}

void finish_write(std::ofstream& os, const std::filesystem::path& path) {
  os.flush();
  if (!os) throw IoError("write to " + path.string() + " failed");
}

struct Setup {
  Benchmark bench;
  FeasibleSet set;
  Vec x0;
};

Setup make_setup(const ExperimentConfig& cfg) {
  Benchmark bench = make_benchmark(cfg.problem, cfg.problem_params);
  FeasibleSet set = cfg.set_spec ? FeasibleSet::parse(*cfg.set_spec, bench.problem->dim())
                                 : bench.default_set;
  Vec x0 = set.contains(bench.x0) ? bench.x0 : set.project(bench.x0);
  return Setup{std::move(bench), std::move(set), std::move(x0)};
}

RunSummary run_cell(const Setup& setup, const ExperimentConfig& cfg, std::int64_t n, int r,
                    const TraceSink& sink, std::vector<std::string>& warnings) {
  RunSummary s;
  s.n = n;
  s.replication = r;
  s.seed = replication_seed(cfg.master_seed, n, r);
  const int depth = setup.bench.problem->depth();
  s.inner_err_sq.assign(depth, std::nullopt);
  try {
    StochasticOracle oracle = setup.bench.oracle(s.seed);
    Schedule sched{n, cfg.beta, cfg.delta};
    RunOptions opts;
    opts.solver.lean_sfo = cfg.lean_sfo;
    opts.diagnostics.stride = cfg.trace_stride;
    RunResult res = run(cfg.algorithm, setup.x0, setup.set, oracle, sched, opts);
    const TraceRecord& at_r = res.trace.at(static_cast<std::size_t>(res.output_index));
    s.output_index = res.output_index;
    s.grad_map_sq = at_r.grad_map_sq;
    s.fw_gap = at_r.fw_gap;
    s.z_err_sq = at_r.z_err_sq;
    s.inner_err_sq = at_r.inner_err_sq;
    std::optional<double> best;
    for (std::size_t k = 1; k < res.trace.size(); ++k) {
      const auto& g = res.trace[k].grad_map_sq;
      if (!g) {
        best.reset();
        break;
      }
      best = best ? std::min(*best, *g) : *g;
    }
    s.min_grad_map_sq = best;
    s.sfo = res.final_state.sfo_calls;
    s.lmo = res.final_state.lmo_calls;
    warnings = std::move(res.warnings);
    if (sink) sink(n, r, res.trace);
  } catch (const std::exception& e) {
    s.error = e.what();
  }
  return s;
}

}  // namespace

void to_json(json& j, const ExperimentConfig& c) {
  j = json{{"problem", c.problem},
           {"problem_params", c.problem_params},
           {"algorithm", std::string(to_string(c.algorithm))},
           {"set", opt_to_json(c.set_spec)},
           {"n", c.n_values},
           {"beta", c.beta},
           {"delta", c.delta},
           {"replications", c.replications},
           {"master_seed", c.master_seed},
           {"format", std::string(format_name(c.format))},
           {"workers", c.workers},
           {"lean_sfo", c.lean_sfo},
           {"trace_stride", c.trace_stride}};
}

void from_json(const json& j, ExperimentConfig& c) {
  static const std::set<std::string> known{
      "problem", "problem_params", "algorithm", "set",     "n",        "beta",        "delta",
      "replications", "master_seed", "format", "workers", "lean_sfo", "trace_stride"};
  if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");
  try {
    ExperimentConfig out;
    if (j.contains("problem")) out.problem = j["problem"].get<std::string>();
    if (j.contains("problem_params")) out.problem_params = j["problem_params"];
    if (j.contains("algorithm")) out.algorithm = parse_algorithm(j["algorithm"].get<std::string>());
    if (j.contains("set")) out.set_spec = opt_from_json<std::string>(j["set"]);
    if (j.contains("n")) out.n_values = j["n"].get<std::vector<std::int64_t>>();
    if (j.contains("beta")) out.beta = j["beta"].get<double>();
    if (j.contains("delta")) out.delta = j["delta"].get<double>();
    if (j.contains("replications")) out.replications = j["replications"].get<int>();
    if (j.contains("master_seed")) out.master_seed = j["master_seed"].get<std::uint64_t>();
    if (j.contains("format")) out.format = parse_format(j["format"].get<std::string>());
    if (j.contains("workers")) out.workers = j["workers"].get<int>();
    if (j.contains("lean_sfo")) out.lean_sfo = j["lean_sfo"].get<bool>();
    if (j.contains("trace_stride")) out.trace_stride = j["trace_stride"].get<std::int64_t>();
    c = std::move(out);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad experiment config: ") + e.what());
  }
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.n_values.empty()) throw ConfigError("at least one N is required");
  for (auto n : cfg.n_values)
    if (n < 1) throw ConfigError("N values must be positive");
  if (cfg.replications < 1) throw ConfigError("replications must be at least 1");
  if (cfg.workers < 1) throw ConfigError("workers must be at least 1");
  if (cfg.trace_stride < 1) throw ConfigError("trace stride must be positive");
  Schedule{1, cfg.beta, cfg.delta}.validate();
  const Setup setup = make_setup(cfg);
  const int depth = setup.bench.problem->depth();
  if (auto need = required_depth(cfg.algorithm); need && *need != depth)
    throw ConfigError(std::string(to_string(cfg.algorithm)) + " needs a depth-" +
                      std::to_string(*need) + " problem but '" + cfg.problem + "' has depth " +
                      std::to_string(depth));
}

std::uint64_t replication_seed(std::uint64_t master_seed, std::int64_t n, int r) {
  return derive_seed({master_seed, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(r),
                      static_cast<std::uint64_t>(StreamKind::replication)});
}

double pairwise_sum(const double* values, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += values[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(values, half) + pairwise_sum(values + half, n - half);
}

std::optional<Moments> summarize(const std::vector<double>& values) {
  if (values.empty()) return std::nullopt;
  Moments m;
  m.count = static_cast<int>(values.size());
  m.mean = pairwise_sum(values.data(), values.size()) / m.count;
  if (m.count >= 2) {
    std::vector<double> sq(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) sq[i] = (values[i] - m.mean) * (values[i] - m.mean);
    const double var = pairwise_sum(sq.data(), sq.size()) / (m.count - 1);
    m.std_error = std::sqrt(var / m.count);
  }
  if (!std::isfinite(m.mean)) throw NumericalError("non-finite mean in aggregate");
  return m;
}

AggregateReport run_experiment(const ExperimentConfig& cfg, const TraceSink& sink) {
  const auto started = std::chrono::steady_clock::now();
  validate(cfg);
  const Setup setup = make_setup(cfg);
  const int depth = setup.bench.problem->depth();

  AggregateReport report;
  report.version = version_string();
  report.config = cfg;
  report.resolved_params = setup.bench.params;
  report.set_spec = setup.set.spec();
  report.depth = depth;

  struct Cell {
    std::int64_t n;
    int r;
  };
  std::vector<Cell> cells;
  for (auto n : cfg.n_values)
    for (int r = 0; r < cfg.replications; ++r) cells.push_back({n, r});

  std::vector<RunSummary> results(cells.size());
  std::vector<std::vector<std::string>> warnings(cells.size());
  std::vector<char> done(cells.size(), 0);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};

  auto worker = [&] {
    for (;;) {
      if (abort.load()) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      results[i] = run_cell(setup, cfg, cells[i].n, cells[i].r, sink, warnings[i]);
      done[i] = 1;
      if (results[i].error) {
        spdlog::error("run N={} r={} failed: {}", cells[i].n, cells[i].r, *results[i].error);
        abort.store(true);
      }
    }
  };
  const int n_workers =
      std::max(1, std::min<int>(cfg.workers, static_cast<int>(cells.size())));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // Reduction in fixed (n, replication) order.
  std::set<std::string> seen_warnings;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!done[i]) {
      report.complete = false;
      report.failures.push_back("N=" + std::to_string(cells[i].n) + " r=" +
                                std::to_string(cells[i].r) + ": not run (aborted)");
      continue;
    }
    for (auto& w : warnings[i])
      if (seen_warnings.insert(w).second) report.warnings.push_back(w);
    if (results[i].error) {
      report.complete = false;
      report.failures.push_back("N=" + std::to_string(cells[i].n) + " r=" +
                                std::to_string(cells[i].r) + ": " + *results[i].error);
    }
    report.runs.push_back(results[i]);
  }

  std::vector<RatePoint> pts_g, pts_z;
  std::vector<std::vector<RatePoint>> pts_inner(depth);
  for (auto n : cfg.n_values) {
    HorizonAggregate h;
    h.n = n;
    std::vector<double> g, fw, z;
    std::vector<std::vector<double>> inner(depth);
    for (const auto& s : report.runs) {
      if (s.n != n || s.error) continue;
      ++h.runs_ok;
      h.sfo += s.sfo;
      h.lmo += s.lmo;
      if (s.grad_map_sq) g.push_back(*s.grad_map_sq);
      if (s.fw_gap) fw.push_back(*s.fw_gap);
      if (s.z_err_sq) z.push_back(*s.z_err_sq);
      for (int i = 0; i < depth; ++i)
        if (s.inner_err_sq[i]) inner[i].push_back(*s.inner_err_sq[i]);
    }
    h.grad_map_sq = summarize(g);
    h.fw_gap = summarize(fw);
    h.z_err_sq = summarize(z);
    for (int i = 0; i < depth; ++i) h.inner_err_sq.push_back(summarize(inner[i]));
    if (h.grad_map_sq) pts_g.push_back({n, h.grad_map_sq->mean, h.grad_map_sq->count});
    if (h.z_err_sq) pts_z.push_back({n, h.z_err_sq->mean, h.z_err_sq->count});
    for (int i = 0; i < depth; ++i)
      if (h.inner_err_sq[i])
        pts_inner[i].push_back({n, h.inner_err_sq[i]->mean, h.inner_err_sq[i]->count});
    report.total_sfo += h.sfo;
    report.total_lmo += h.lmo;
    report.horizons.push_back(std::move(h));
  }

  auto try_fit = [](const std::vector<RatePoint>& pts) -> std::optional<RateFit> {
    try {
      return rate_fit(pts);
    } catch (const DataError&) {
      return std::nullopt;
    }
  };
  report.rate_grad_map_sq = try_fit(pts_g);
  report.rate_z_err_sq = try_fit(pts_z);
  for (int i = 0; i < depth; ++i) report.rate_inner_err_sq.push_back(try_fit(pts_inner[i]));

  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

void to_json(json& j, const AggregateReport& r) {
  json horizons = json::array();
  for (const auto& h : r.horizons) horizons.push_back(horizon_to_json(h));
  json inner_rates = json::array();
  for (const auto& f : r.rate_inner_err_sq) inner_rates.push_back(fit_to_json(f));
  json runs = json::array();
  for (const auto& s : r.runs) runs.push_back(run_to_json(s));
  j = json{{"schema_version", r.schema_version},
           {"version", r.version},
           {"config", r.config},
           {"resolved_params", r.resolved_params},
           {"set", r.set_spec},
           {"depth", r.depth},
           {"horizons", horizons},
           {"rate_grad_map_sq", fit_to_json(r.rate_grad_map_sq)},
           {"rate_z_err_sq", fit_to_json(r.rate_z_err_sq)},
           {"rate_inner_err_sq", inner_rates},
           {"total_sfo", r.total_sfo},
           {"total_lmo", r.total_lmo},
           {"complete", r.complete},
           {"failures", r.failures},
           {"warnings", r.warnings},
           {"runs", runs},
           {"wall_clock_seconds", r.wall_clock_seconds}};
}

void from_json(const json& j, AggregateReport& r) {
  try {
    AggregateReport out;
    out.schema_version = j.at("schema_version").get<int>();
    if (out.schema_version != kReportSchemaVersion)
      throw DataError("unsupported report schema version " + std::to_string(out.schema_version));
    out.version = j.at("version").get<std::string>();
    out.config = j.at("config").get<ExperimentConfig>();
    out.resolved_params = j.at("resolved_params");
    out.set_spec = j.at("set").get<std::string>();
    out.depth = j.at("depth").get<int>();
    for (const auto& h : j.at("horizons")) out.horizons.push_back(horizon_from_json(h));
    out.rate_grad_map_sq = fit_from_json(j.at("rate_grad_map_sq"));
    out.rate_z_err_sq = fit_from_json(j.at("rate_z_err_sq"));
    for (const auto& f : j.at("rate_inner_err_sq")) out.rate_inner_err_sq.push_back(fit_from_json(f));
    out.total_sfo = j.at("total_sfo").get<std::int64_t>();
    out.total_lmo = j.at("total_lmo").get<std::int64_t>();
    out.complete = j.at("complete").get<bool>();
    out.failures = j.at("failures").get<std::vector<std::string>>();
    out.warnings = j.at("warnings").get<std::vector<std::string>>();
    for (const auto& s : j.at("runs")) out.runs.push_back(run_from_json(s));
    out.wall_clock_seconds = j.at("wall_clock_seconds").get<double>();
    r = std::move(out);
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
}

std::string version_string() { return STOCG_VERSION; }

void emit(const AggregateReport& report, const std::filesystem::path& dir) {
  {
    const auto path = dir / "aggregate.json";
    auto os = open_for_write(path);
    os << json(report).dump(2) << '\n';
    finish_write(os, path);
  }
  if (report.config.format == OutputFormat::csv) {
    const auto path = dir / "runs.csv";
    auto os = open_for_write(path);
    write_runs_csv(os, report.depth, report.runs);
    finish_write(os, path);
  } else {
    const auto path = dir / "runs.json";
    json runs = json::array();
    for (const auto& s : report.runs) runs.push_back(run_to_json(s));
    auto os = open_for_write(path);
    os << runs.dump(2) << '\n';
    finish_write(os, path);
  }
}

std::filesystem::path trace_path(const std::filesystem::path& dir, std::int64_t n,
                                 int replication, OutputFormat format) {
  return dir / "traces" /
         ("n" + std::to_string(n) + "_r" + std::to_string(replication) + "." +
          std::string(format_name(format)));
}

void write_trace(const std::filesystem::path& path, int depth,
                 const std::vector<TraceRecord>& trace, OutputFormat format) {
  auto os = open_for_write(path);
  if (format == OutputFormat::csv) {
    write_trace_csv(os, depth, trace);
  } else {
    json rows = json::array();
    for (const auto& rec : trace)
      rows.push_back(json{{"k", rec.k},
                          {"tau", rec.tau},
                          {"t_icg", rec.t_icg},
                          {"grad_map_sq", opt_to_json(rec.grad_map_sq)},
                          {"fw_gap", opt_to_json(rec.fw_gap)},
                          {"z_err_sq", opt_to_json(rec.z_err_sq)},
                          {"inner_err_sq", opt_vec_to_json(rec.inner_err_sq)},
                          {"H_gap", opt_to_json(rec.h_gap)},
                          {"sfo", rec.sfo},
                          {"lmo", rec.lmo}});
    os << rows.dump(1) << '\n';
  }
  finish_write(os, path);
}

TraceSink file_trace_sink(const std::filesystem::path& dir, int depth, OutputFormat format) {
  return [dir, depth, format](std::int64_t n, int r, const std::vector<TraceRecord>& trace) {
    write_trace(trace_path(dir, n, r, format), depth, trace, format);
  };
}

double empirical_quantile(std::vector<double> values, double p) {
  if (values.empty()) throw DataError("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw ContractError("quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

QuantileLawFit fit_quantile_law(const std::vector<QuantileRow>& rows) {
  if (rows.empty()) throw DataError("no quantile rows to fit");
  std::set<std::int64_t> ns;
  std::set<double> ds;
  for (const auto& row : rows) {
    if (!(row.quantile > 0.0)) throw DataError("quantiles must be positive to fit a power law");
    if (!(row.delta > 0.0 && row.delta < 1.0))
      throw DataError("delta must lie in (0, 1) to fit the log(1/delta) law");
    ns.insert(row.n);
    ds.insert(row.delta);
  }
  const bool fit_n = ns.size() >= 2;
  const bool fit_d = ds.size() >= 2;
  const int cols = 1 + (fit_n ? 1 : 0) + (fit_d ? 1 : 0);
  Mat a(static_cast<Eigen::Index>(rows.size()), cols);
  Vec y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    int c = 0;
    a(r, c++) = 1.0;
    if (fit_n) a(r, c++) = std::log(static_cast<double>(rows[i].n));
    if (fit_d) a(r, c++) = std::log(std::log(1.0 / rows[i].delta));
    y(r) = std::log(rows[i].quantile);
  }
  const Vec coef = a.colPivHouseholderQr().solve(y);
  QuantileLawFit fit;
  int c = 0;
  fit.intercept = coef(c++);
  if (fit_n) fit.n_exponent = coef(c++);
  if (fit_d) fit.log_delta_exponent = coef(c++);
  return fit;
}

QuantileReport quantile_study(const ExperimentConfig& cfg, const std::vector<double>& deltas,
                              const TraceSink& sink) {
  if (cfg.algorithm != Algorithm::asa1)
    throw ConfigError("quantile study requires the asa1 algorithm");
  if (cfg.replications < kQuantileMinReplications)
    throw StatisticalPowerError("quantile study needs at least " +
                                std::to_string(kQuantileMinReplications) +
                                " replications, got " + std::to_string(cfg.replications));
  if (cfg.trace_stride != 1)
    throw ConfigError("quantile study needs every row diagnosed (trace stride 1)");
  if (deltas.empty()) throw ConfigError("at least one confidence level is required");
  for (double d : deltas)
    if (!(d >= 0.0 && d <= 1.0)) throw ConfigError("confidence levels must lie in [0, 1]");

  QuantileReport out;
  out.experiment = run_experiment(cfg, sink);
  if (!out.experiment.complete) throw DataError("quantile study aborted: a replication failed");
  for (auto n : cfg.n_values) {
    std::vector<double> mins;
    for (const auto& s : out.experiment.runs) {
      if (s.n != n) continue;
      if (!s.min_grad_map_sq)
        throw ConfigError("problem '" + cfg.problem + "' has no exact diagnostics");
      mins.push_back(*s.min_grad_map_sq);
    }
    for (double d : deltas) out.rows.push_back({n, d, empirical_quantile(mins, 1.0 - d)});
  }
  std::vector<QuantileRow> fit_rows;
  for (const auto& row : out.rows)
    if (row.delta > 0.0 && row.delta < 1.0 && row.quantile > 0.0) fit_rows.push_back(row);
  if (!fit_rows.empty()) out.fit = fit_quantile_law(fit_rows);
  return out;
}

void to_json(json& j, const QuantileReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows)
    rows.push_back(json{{"n", row.n}, {"delta", row.delta}, {"quantile", row.quantile}});
  j = json{{"experiment", r.experiment},
           {"rows", rows},
           {"fit", json{{"n_exponent", opt_to_json(r.fit.n_exponent)},
                        {"log_delta_exponent", opt_to_json(r.fit.log_delta_exponent)},
                        {"intercept", r.fit.intercept}}}};
}

}  // namespace stocg

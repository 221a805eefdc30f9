// Command-line front end: `stocg run ...` and `stocg quantiles ...`.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "stocg/errors.hpp"
#include "stocg/experiment.hpp"

namespace {

using nlohmann::json;

enum ExitCode { kOk = 0, kOther = 1, kConfig = 2, kNumerical = 3, kIo = 4 };

struct Flags {
  std::string config_file;
  std::string problem;
  std::vector<std::string> params;
  std::string algo;
  std::string set;
  std::vector<std::int64_t> n;
  double beta = 1.0;
  double delta = 0.0;
  int reps = 1;
  std::uint64_t seed = 0;
  std::string out = "out";
  std::string format;
  int workers = 1;
  std::int64_t stride = 1;
  bool lean_sfo = false;
  bool no_traces = false;
  std::vector<double> levels{0.5, 0.1, 0.01};
};

void setup_logging() {
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("STOCG_LOG")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to off; only honor an explicit "off".
    if (level != spdlog::level::off || std::string(env) == "off")
      spdlog::set_level(level);
    else
      spdlog::warn("ignoring unknown STOCG_LOG level '{}'", env);
  }
}

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config_file, "JSON experiment config; flags override it");
  cmd->add_option("--problem", f.problem, "Benchmark name (meandev, twolevel, quadbox, quadball)");
  cmd->add_option("--param", f.params, "Benchmark parameter key=value (value parsed as JSON)");
  cmd->add_option("--algo", f.algo, "linasa | nasa2 | asa1");
  cmd->add_option("--set", f.set, "Feasible set, e.g. l1:1.0, l2:1, simplex:1, box:-1:1");
  cmd->add_option("--n", f.n, "Horizons N")->delimiter(',');
  cmd->add_option("--beta", f.beta, "Quadratic weight beta");
  cmd->add_option("--delta", f.delta, "LMO inexactness delta");
  cmd->add_option("--reps", f.reps, "Replications per N");
  cmd->add_option("--seed", f.seed, "Master seed");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--format", f.format, "csv | json");
  cmd->add_option("--workers", f.workers, "Worker threads");
  cmd->add_option("--stride", f.stride, "Diagnose every k-th trace row");
  cmd->add_flag("--lean-sfo", f.lean_sfo, "Skip value samples that the update never reads");
  cmd->add_flag("--no-traces", f.no_traces, "Do not write per-run traces");
}

stocg::ExperimentConfig build_config(const CLI::App* cmd, const Flags& f) {
  stocg::ExperimentConfig cfg;
  if (!f.config_file.empty()) {
    std::ifstream is(f.config_file);
    if (!is) throw stocg::IoError("cannot read config file " + f.config_file);
    json j;
    try {
      j = json::parse(is);
    } catch (const json::exception& e) {
      throw stocg::ConfigError("config file is not valid JSON: " + std::string(e.what()));
    }
    cfg = j.get<stocg::ExperimentConfig>();
  }
  auto given = [cmd](const char* name) { return cmd->count(name) > 0; };
  if (given("--problem")) cfg.problem = f.problem;
  for (const auto& kv : f.params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
      throw stocg::ConfigError("--param expects key=value, got '" + kv + "'");
    const std::string key = kv.substr(0, eq), text = kv.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    cfg.problem_params[key] = value;
  }
  if (given("--algo")) cfg.algorithm = stocg::parse_algorithm(f.algo);
  if (given("--set")) cfg.set_spec = f.set;
  if (given("--n")) cfg.n_values = f.n;
  if (given("--beta")) cfg.beta = f.beta;
  if (given("--delta")) cfg.delta = f.delta;
  if (given("--reps")) cfg.replications = f.reps;
  if (given("--seed")) cfg.master_seed = f.seed;
  if (given("--format")) {
    if (f.format == "csv")
      cfg.format = stocg::OutputFormat::csv;
    else if (f.format == "json")
      cfg.format = stocg::OutputFormat::json;
    else
      throw stocg::ConfigError("unknown format '" + f.format + "'");
  }
  if (given("--workers")) cfg.workers = f.workers;
  if (given("--stride")) cfg.trace_stride = f.stride;
  if (given("--lean-sfo")) cfg.lean_sfo = f.lean_sfo;
  return cfg;
}

void print_summary(const stocg::AggregateReport& r) {
  std::cout << "problem " << r.config.problem << ", " << stocg::to_string(r.config.algorithm)
            << ", set " << r.set_spec << ", depth " << r.depth << '\n';
  for (const auto& h : r.horizons) {
    std::cout << "  N=" << h.n << " runs=" << h.runs_ok;
    if (h.grad_map_sq) std::cout << " grad_map_sq=" << stocg::format_double(h.grad_map_sq->mean);
    if (h.grad_map_sq && h.grad_map_sq->std_error)
      std::cout << " (se " << stocg::format_double(*h.grad_map_sq->std_error) << ")";
    std::cout << " sfo=" << h.sfo << " lmo=" << h.lmo << '\n';
  }
  if (r.rate_grad_map_sq)
    std::cout << "  slope grad_map_sq: " << stocg::format_double(r.rate_grad_map_sq->slope)
              << '\n';
  for (const auto& w : r.warnings) std::cout << "  warning: " << w << '\n';
  if (!r.complete) std::cout << "  INCOMPLETE: " << r.failures.size() << " failure(s)\n";
}

stocg::TraceSink sink_for(const Flags& f, const stocg::ExperimentConfig& cfg) {
  if (f.no_traces) return {};
  const int depth = stocg::make_benchmark(cfg.problem, cfg.problem_params).problem->depth();
  return stocg::file_trace_sink(f.out, depth, cfg.format);
}

int run_command(const CLI::App* cmd, const Flags& f) {
  const auto cfg = build_config(cmd, f);
  stocg::validate(cfg);
  const auto report = stocg::run_experiment(cfg, sink_for(f, cfg));
  stocg::emit(report, f.out);
  print_summary(report);
  return report.complete ? kOk : kNumerical;
}

int quantiles_command(const CLI::App* cmd, const Flags& f) {
  const auto cfg = build_config(cmd, f);
  stocg::validate(cfg);
  const auto q = stocg::quantile_study(cfg, f.levels, sink_for(f, cfg));
  stocg::emit(q.experiment, f.out);
  const auto path = std::filesystem::path(f.out) / "quantiles.json";
  std::ofstream os(path);
  if (!os) throw stocg::IoError("cannot open " + path.string() + " for writing");
  os << json(q).dump(2) << '\n';
  if (!os) throw stocg::IoError("write to " + path.string() + " failed");
  for (const auto& row : q.rows)
    std::cout << "N=" << row.n << " delta=" << row.delta
              << " quantile=" << stocg::format_double(row.quantile) << '\n';
  if (q.fit.n_exponent) std::cout << "N exponent: " << *q.fit.n_exponent << '\n';
  if (q.fit.log_delta_exponent)
    std::cout << "log(1/delta) exponent: " << *q.fit.log_delta_exponent << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Stochastic compositional conditional-gradient experiments"};
  app.require_subcommand(1);
  Flags flags;
  auto* run = app.add_subcommand("run", "Run seeded replications and aggregate");
  add_common(run, flags);
  auto* quant = app.add_subcommand("quantiles", "High-probability quantile study (asa1)");
  add_common(quant, flags);
  quant->add_option("--levels", flags.levels, "Confidence levels delta")->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (run->parsed()) return run_command(run, flags);
    return quantiles_command(quant, flags);
  } catch (const stocg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const stocg::IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const stocg::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
}

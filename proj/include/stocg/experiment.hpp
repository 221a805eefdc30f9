#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "stocg/benchmarks.hpp"
#include "stocg/diagnostics.hpp"
#include "stocg/solvers.hpp"

namespace stocg {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr int kQuantileMinReplications = 200;

enum class OutputFormat { csv, json };

struct ExperimentConfig {
  std::string problem = "quadbox";
  nlohmann::json problem_params = nlohmann::json::object();
  Algorithm algorithm = Algorithm::asa1;
  std::optional<std::string> set_spec;  // benchmark default when absent
  std::vector<std::int64_t> n_values{100};
  double beta = 1.0;
  double delta = 0.0;
  int replications = 1;
  std::uint64_t master_seed = 0;
  OutputFormat format = OutputFormat::csv;
  int workers = 1;
  bool lean_sfo = false;
  std::int64_t trace_stride = 1;

  bool operator==(const ExperimentConfig&) const = default;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);

/// Throws ConfigError for anything that would fail before the first run:
/// bad N or replication counts, unknown problem, algorithm/depth mismatch.
void validate(const ExperimentConfig& cfg);

/// Seed of replication r at horizon n; pure in (master_seed, n, r).
std::uint64_t replication_seed(std::uint64_t master_seed, std::int64_t n, int r);

/// Diagnostics of one replication at its output index R.
struct RunSummary {
  std::int64_t n = 0;
  int replication = 0;
  std::uint64_t seed = 0;
  std::int64_t output_index = 0;
  std::optional<double> grad_map_sq;
  std::optional<double> fw_gap;
  std::optional<double> z_err_sq;
  std::vector<std::optional<double>> inner_err_sq;
  /// min over k = 1..N of the gradient-mapping norm, when every row was
  /// diagnosed.
  std::optional<double> min_grad_map_sq;
  std::int64_t sfo = 0;
  std::int64_t lmo = 0;
  std::optional<std::string> error;

  bool operator==(const RunSummary&) const = default;
};

struct Moments {
  double mean = 0.0;
  std::optional<double> std_error;  // needs at least two values
  int count = 0;
  bool operator==(const Moments&) const = default;
};

/// Mean and standard error with pairwise summation in the given order.
std::optional<Moments> summarize(const std::vector<double>& values);

/// Pairwise (cascade) summation.
double pairwise_sum(const double* values, std::size_t n);

struct HorizonAggregate {
  std::int64_t n = 0;
  int runs_ok = 0;
  std::optional<Moments> grad_map_sq;
  std::optional<Moments> fw_gap;
  std::optional<Moments> z_err_sq;
  std::vector<std::optional<Moments>> inner_err_sq;
  std::int64_t sfo = 0;
  std::int64_t lmo = 0;
  bool operator==(const HorizonAggregate&) const = default;
};

struct AggregateReport {
  int schema_version = kReportSchemaVersion;
  std::string version;
  ExperimentConfig config;
  nlohmann::json resolved_params;
  std::string set_spec;
  int depth = 1;
  std::vector<HorizonAggregate> horizons;
  std::optional<RateFit> rate_grad_map_sq;
  std::optional<RateFit> rate_z_err_sq;
  std::vector<std::optional<RateFit>> rate_inner_err_sq;
  std::int64_t total_sfo = 0;
  std::int64_t total_lmo = 0;
  bool complete = true;
  std::vector<std::string> failures;
  std::vector<std::string> warnings;
  std::vector<RunSummary> runs;  // ordered by (n, replication)
  double wall_clock_seconds = 0.0;  // excluded from determinism

  bool operator==(const AggregateReport&) const = default;
};

void to_json(nlohmann::json& j, const AggregateReport& r);
void from_json(const nlohmann::json& j, AggregateReport& r);

/// Receives each finished trace; called from worker threads.
using TraceSink = std::function<void(std::int64_t n, int replication,
                                     const std::vector<TraceRecord>& trace)>;

/// Runs every (N, replication) cell and reduces them in fixed order, so the
/// report does not depend on the worker count.
AggregateReport run_experiment(const ExperimentConfig& cfg,
                               const TraceSink& sink = {});

/// Version string baked in at configure time (git describe when available).
std::string version_string();

/// Writes aggregate.json plus runs.csv or runs.json into `dir`.
void emit(const AggregateReport& report, const std::filesystem::path& dir);

/// Path of one replication's trace inside an output directory.
std::filesystem::path trace_path(const std::filesystem::path& dir, std::int64_t n,
                                 int replication, OutputFormat format);
void write_trace(const std::filesystem::path& path, int depth,
                 const std::vector<TraceRecord>& trace, OutputFormat format);

/// Sink that writes every trace under `dir/traces`.
TraceSink file_trace_sink(const std::filesystem::path& dir, int depth,
                          OutputFormat format);

/// Linear-interpolation empirical quantile (numpy's default), p in [0, 1].
double empirical_quantile(std::vector<double> values, double p);

struct QuantileRow {
  std::int64_t n = 0;
  double delta = 0.0;  // the row is the (1 - delta)-quantile
  double quantile = 0.0;
};

/// Fit of log q = a + b log N + c log log(1/delta). Exponents that the data
/// cannot identify (a single N or a single delta) stay empty.
struct QuantileLawFit {
  std::optional<double> n_exponent;
  std::optional<double> log_delta_exponent;
  double intercept = 0.0;
};

QuantileLawFit fit_quantile_law(const std::vector<QuantileRow>& rows);

struct QuantileReport {
  AggregateReport experiment;
  std::vector<QuantileRow> rows;
  QuantileLawFit fit;
};

/// (1 - delta)-quantiles of min_k ||G_X(x^k)||^2 across replications for
/// every N in the config. Requires asa1, exact diagnostics and at least
/// kQuantileMinReplications replications.
QuantileReport quantile_study(const ExperimentConfig& cfg,
                              const std::vector<double>& deltas,
                              const TraceSink& sink = {});

void to_json(nlohmann::json& j, const QuantileReport& r);

}  // namespace stocg

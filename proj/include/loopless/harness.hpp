#ifndef LOOPLESS_HARNESS_HPP
#define LOOPLESS_HARNESS_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "loopless/diagnostics.hpp"
#include "loopless/optimizers.hpp"
#include "loopless/runner.hpp"

namespace loopless::harness {

enum class Diagnostics { none, distance, lyapunov, lemmas };

std::string_view to_string(Diagnostics level) noexcept;
Diagnostics diagnostics_from_string(std::string_view name);

struct SyntheticSpec {
  std::size_t n = 0;
  std::size_t d = 0;
  double kappa = 1.0;
  std::uint64_t seed = 0;
};

/// Parses "n,d,kappa" or "n,d,kappa,seed".
SyntheticSpec parse_synthetic_spec(const std::string& text);

struct RunConfig {
  std::optional<std::filesystem::path> data_path;
  std::optional<SyntheticSpec> synthetic;
  std::optional<std::size_t> dim;  // pad the feature dimension of a file dataset
  bool normalize = false;          // scale rows to unit norm
  LossKind loss = LossKind::logistic;
  std::optional<double> mu;  // defaults: synthetic -> 1/kappa, file -> 1e-3
  Algorithm algorithm = Algorithm::lsvrg;
  bool theory_preset = true;
  MethodParams params;
  double epochs = 30.0;
  double checkpoint_every = 1.0;
  std::uint64_t seed = 0;
  Diagnostics diagnostics = Diagnostics::distance;
  std::filesystem::path out = ".";
  std::optional<std::string> run_id;
  std::optional<std::vector<double>> x0;
  double reference_tolerance = 1e-10;
  double reference_max_epochs = 1e5;
};

/// Throws ConfigError when an invariant of the configuration is violated.
void validate(const RunConfig& config);

/// Reads the keys of a JSON config object on top of `base`. Unknown keys are
/// a ConfigError.
RunConfig config_from_json(const nlohmann::json& j, RunConfig base = {});
nlohmann::json config_to_json(const RunConfig& config);

struct Problem {
  std::shared_ptr<const Oracle> oracle;
  std::optional<Vector> known_minimizer;
  std::string source;
};

/// Loads or synthesises the dataset and builds the oracle. Throws DataError /
/// ParseError for data problems.
Problem build_problem(const RunConfig& config);

/// Ridge problems use the normal equations, logistic problems gradient descent.
ReferenceSolution build_reference(const Problem& problem, const RunConfig& config);

ResolvedParams resolve(const RunConfig& config, const Oracle& oracle);

struct RunResult {
  std::string run_id;
  ResolvedParams params;
  std::vector<TraceRecord> trace;
};

/// Runs one configuration. `ref` may be null only when diagnostics == none.
RunResult execute(const RunConfig& config, const Problem& problem, const ReferenceSolution* ref,
                  const RunOptions* override_options = nullptr);

// ---------------------------------------------------------------------------
// Output formats

/// Fixed trace CSV header, in column order.
const std::vector<std::string>& trace_columns();

void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace);

nlohmann::json sidecar(const RunConfig& config, const Problem& problem, const ResolvedParams& params,
                       const ReferenceSolution* ref, const std::string& run_id);

/// Writes <out>/<run_id>.csv and <out>/<run_id>.json; returns the CSV path.
std::filesystem::path write_run(const RunConfig& config, const Problem& problem, const ReferenceSolution* ref,
                                const RunResult& result);

// ---------------------------------------------------------------------------
// Commands

std::filesystem::path cli_run(const RunConfig& config);

/// Log-spaced loop lengths n, (kappa n^3)^(1/4), (kappa n)^(1/2),
/// (kappa^3 n)^(1/4), kappa, rounded to the nearest integer, clamped to >= 1
/// and de-duplicated in that order. Clamps are reported through `warnings`.
std::vector<std::uint64_t> loop_length_grid(std::size_t n, double kappa, std::vector<std::string>* warnings = nullptr);

/// L-SVRG with p = 1/l and loopy SVRG with m = l for every grid entry.
std::vector<std::filesystem::path> cli_sweep_p(const RunConfig& base,
                                               const std::optional<std::vector<std::uint64_t>>& grid = std::nullopt);

/// First epoch at which dist_sq / dist_sq(initial) <= threshold; +inf if never.
double epochs_to_threshold(const std::vector<TraceRecord>& trace, double relative_threshold);

struct CompareOptions {
  std::vector<Algorithm> algorithms{Algorithm::gd, Algorithm::svrg, Algorithm::lsvrg, Algorithm::katyusha,
                                    Algorithm::lkatyusha};
  std::vector<std::uint64_t> seeds;  // empty -> 10 seeds starting at config.seed
  std::vector<double> thresholds{1e-4, 1e-8};
  bool write_traces = true;
};

struct CompareRow {
  Algorithm algorithm;
  std::uint64_t seed;
  double threshold;
  double epochs;  // +inf when not reached
};

std::vector<CompareRow> compare_all(const RunConfig& base, const CompareOptions& options);
void write_compare_csv(std::ostream& out, const std::vector<CompareRow>& rows);
std::filesystem::path cli_compare_all(const RunConfig& base, const CompareOptions& options);

/// Long format (run_id, algorithm, epoch, metric, value), one row per
/// non-empty selected metric cell. The algorithm comes from the sibling JSON
/// sidecar when present.
void emit_plotdata(const std::vector<std::filesystem::path>& traces, const std::vector<std::string>& metrics,
                   std::ostream& out);

/// Solves and writes <out>/reference.json.
std::filesystem::path cli_solve_ref(const RunConfig& config);

}  // namespace loopless::harness

#endif

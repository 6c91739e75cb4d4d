#pragma once

// Synchronous round engine: delivers last round's messages along the current
// edge set, advances every robot, audits the network invariants and records
// metrics.

#include "swarmopt/algorithms.hpp"
#include "swarmopt/graph_kit.hpp"
#include "swarmopt/oracle.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace swarmopt::netsim {

enum class Algorithm { kDualDecomposition, kPrimalDecomposition, kTracking, kFrankWolfe, kAdmm };

/// Short tags used in file names and specs: dd, pd, pat, fw, admm.
std::string tag(Algorithm a);
Algorithm algorithm_from_tag(const std::string& tag);

using Problem = std::variant<problems::ConstraintCoupledProblem, problems::MilpProblem, problems::AggregativeProblem>;

struct StepParams {
  /// Dual and primal decomposition use gamma_t = step_scale / (t + 1).
  double step_scale = 1.0;
  double pat_gamma = 0.01;
  double pat_delta = 0.01;
  /// Frank-Wolfe uses gamma_t = 1 / sqrt(t + fw_offset), t = 0, 1, ...
  double fw_offset = 1.0;
  algo::AdmmOptions admm;
  /// Primal decomposition penalty; 0 selects the default 100 (1 + max |c_i|).
  double pd_penalty = 0.0;
  /// Primal decomposition starting shares; empty selects the equal split.
  std::vector<Vec> pd_y0;

  nlohmann::json to_json() const;
  static StepParams from_json(const nlohmann::json& doc);
  bool operator==(const StepParams& other) const;
};

struct RunConfig {
  Algorithm algorithm = Algorithm::kTracking;
  Problem problem;
  graph::TopologySchedule topology = graph::TopologySchedule::fixed(graph::Topology::complete(1));
  StepParams params;
  long rounds = 1;
  std::uint64_t seed = 0;
  /// Rounds between recorded rows; 0 selects the default cadence.
  long cadence = 0;
  /// Keep per-robot state snapshots in the trace (for JSON-lines output).
  bool keep_snapshots = false;
  /// Throw when an audit exceeds its tolerance; otherwise only record it.
  bool strict_audits = true;
  double tracker_tolerance = 1e-10;
  double allocation_tolerance = 1e-9;
};

/// Every round for T <= 1000, else every ceil(T / 1000) rounds.
long default_cadence(long rounds);

/// Throws ConfigError for incompatible pairings, bad step parameters or a
/// topology of the wrong size or kind.
void validate(const RunConfig& config);

struct RoundTrace {
  long t = 0;
  Vec x;      // stacked x^t
  Vec sigma;  // aggregate, for aggregative problems
  double consensus_spread = 0.0;
  double audit = 0.0;  // worst audit value of the round
  nlohmann::json snapshots;  // per-robot states when requested
};

struct MetricsRow {
  long t = 0;
  double cost_error = 0.0;
  double coupling_violation = 0.0;
  double consensus_error = 0.0;
  double opt_error = 0.0;
};

struct AuditSummary {
  double max_sigma_error = 0.0;
  double max_gradient_error = 0.0;
  double max_allocation_error = 0.0;
};

struct RunResult {
  std::vector<RoundTrace> trace;
  std::vector<MetricsRow> metrics;
  AuditSummary audits;
  /// Final per-robot decisions: the running average (dd), the recovered
  /// mixed-integer point (pd) or the current iterate (others).
  std::vector<Vec> final_x;
};

/// Runs T rounds. `reference` enables the cost and optimality columns; they
/// are NaN without it.
RunResult run(const RunConfig& config, const std::optional<oracle::OracleSolution>& reference = std::nullopt);

/// Metrics for one recorded round.
MetricsRow compute_metrics(const RoundTrace& round, const Problem& problem,
                           const std::optional<oracle::OracleSolution>& reference);

/// Sum of local costs at a stacked point.
double total_cost(const Problem& problem, const Vec& stacked);
/// Positive part of the coupling residual (0 for aggregative problems).
double coupling_violation(const Problem& problem, const Vec& stacked);

// Output formats.
extern const char* const kMetricsHeader;
std::string format_metrics_csv(const std::vector<MetricsRow>& rows);
void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path);
/// One JSON object per recorded round.
void write_trace_jsonl(const std::filesystem::path& path, const std::vector<RoundTrace>& trace);
/// Writes through a temporary file and renames it into place.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace swarmopt::netsim

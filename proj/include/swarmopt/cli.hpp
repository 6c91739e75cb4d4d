#pragma once

// Experiment runner behind the swarm-opt tool: JSON experiment specs, scenario
// builders, oracle fixtures, CSV and SVG output.

#include "swarmopt/netsim.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace swarmopt::cli {

enum class Scenario { kTaskAssignment, kPev, kSurveillance, kResourceAllocation, kCustom };

std::string tag(Scenario s);
Scenario scenario_from_tag(const std::string& tag);

struct TopologySpec {
  /// complete, ring, path, erdos_renyi (drawn once per seed) or
  /// random_per_round (a fresh Erdos-Renyi graph every round).
  std::string kind = "erdos_renyi";
  double p = 0.2;

  nlohmann::json to_json() const;
  static TopologySpec from_json(const nlohmann::json& doc);
  bool operator==(const TopologySpec& other) const = default;
};

struct ExperimentSpec {
  Scenario scenario = Scenario::kResourceAllocation;
  std::vector<netsim::Algorithm> algorithms;
  int robots = 0;
  long rounds = 100;
  std::vector<std::uint64_t> seeds = {0};
  netsim::StepParams params;
  TopologySpec topology;
  long cadence = 0;
  std::string output_dir = "out";
  // Scenario knobs.
  double budget = 100.0;  // resource allocation B
  double x_max = 100.0;   // resource allocation upper bound
  int horizon = 24;       // PEV time slots
  /// Custom scenario only: {"type": "constraint_coupled" | "milp" |
  /// "aggregative", "data": <serialized problem>}.
  nlohmann::json problem;

  nlohmann::json to_json() const;
  /// Throws ConfigError on unknown keys, bad values or a bad pairing.
  static ExperimentSpec from_json(const nlohmann::json& doc);
  bool operator==(const ExperimentSpec& other) const;
};

ExperimentSpec load_spec(const std::filesystem::path& path);

/// Algorithms a scenario accepts; for custom specs this depends on the
/// problem type.
std::vector<netsim::Algorithm> compatible_algorithms(const ExperimentSpec& spec);
/// Throws ConfigError naming the rule when an algorithm is not accepted.
void check_compatibility(const ExperimentSpec& spec);

/// Uniform [0, 1) assignment costs, n robots by n tasks.
Mat random_assignment_costs(int n, std::uint64_t seed);

netsim::Problem build_problem(const ExperimentSpec& spec, std::uint64_t seed);
/// Graph draws use derive_seed(seed, 1) so they do not share a stream with
/// the problem data.
graph::TopologySchedule build_topology(const TopologySpec& spec, int robots, std::uint64_t seed);
netsim::RunConfig make_run_config(const ExperimentSpec& spec, netsim::Algorithm algorithm, std::uint64_t seed);

std::string problem_hash(const netsim::Problem& problem);
/// Stacked LP/QP, exhaustive MILP scan or projected gradient, by problem type.
oracle::OracleSolution solve_reference(const netsim::Problem& problem);

/// Fixture directory: the flag, else $SWARMOPT_FIXTURES, else <out>/fixtures.
std::filesystem::path resolve_fixtures_dir(const std::optional<std::filesystem::path>& flag,
                                           const std::filesystem::path& out_dir);

/// Per-round maximum over seeds. Rows must share their t columns; NaN wins.
std::vector<netsim::MetricsRow> max_over_seeds(const std::vector<std::vector<netsim::MetricsRow>>& runs);

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Line chart. With `log_y`, nonpositive and non-finite points are dropped.
std::string svg_line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<Series>& series, bool log_y);

struct CommandOptions {
  std::filesystem::path spec;
  std::optional<std::filesystem::path> out;
  std::optional<std::filesystem::path> fixtures_dir;
  bool quiet = false;
};

// Exit codes: 0 ok, 1 runtime failure, 2 validation failure.
int cmd_run(const CommandOptions& options, std::ostream& out, std::ostream& err);
int cmd_oracle(const CommandOptions& options, std::ostream& out, std::ostream& err);
int cmd_sigma_trace(const CommandOptions& options, std::ostream& out, std::ostream& err);

/// Parses argv (run | oracle | sigma-trace --spec <file> ...) and dispatches.
int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace swarmopt::cli

#pragma once

// Centralized reference solutions used to score the distributed runs.

#include "swarmopt/problems.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace swarmopt::oracle {

struct OracleSolution {
  Vec x_star;  // all robots' variables stacked
  double f_star = 0.0;
  std::string method;
  double residual = 0.0;
};

/// Stacks every robot into one LP (or QP when any cost is quadratic).
/// Throws InfeasibleError / UnboundedError on the matching status.
OracleSolution solve_cc_centralized(const problems::ConstraintCoupledProblem& problem);

struct ProjectedGradientOptions {
  double tol = 1e-10;
  long max_iterations = 2000000;
};

/// Projected gradient with backtracking on the stacked vector, stopped when
/// |x - P(x - grad F(x))| <= tol. Throws ResourceError on budget exhaustion.
OracleSolution solve_agg_centralized(const problems::AggregativeProblem& problem,
                                     const ProjectedGradientOptions& options = {});

/// Exhaustive scan of the integer coordinates with an LP over the continuous
/// remainder. Throws ResourceError above `max_integer_bits` (log2 of the
/// number of integer assignments) and InfeasibleError when nothing fits.
OracleSolution enumerate_milp(const problems::MilpProblem& problem, int max_integer_bits = 20);

/// Splits a stacked vector into per-robot blocks of the given sizes.
std::vector<Vec> split_blocks(const Vec& stacked, const std::vector<int>& dims);
Vec stack_blocks(const std::vector<Vec>& blocks);

std::vector<int> robot_dims(const problems::ConstraintCoupledProblem& p);
std::vector<int> robot_dims(const problems::AggregativeProblem& p);
std::vector<int> robot_dims(const problems::MilpProblem& p);

// Fixture files: <dir>/<problem_hash>.json holding
// {problem_hash, x_star, f_star, method, residual}.

nlohmann::json fixture_to_json(const std::string& problem_hash, const OracleSolution& sol);
OracleSolution fixture_from_json(const nlohmann::json& doc);

std::filesystem::path fixture_path(const std::filesystem::path& dir, const std::string& problem_hash);
/// Written through a temporary file and renamed into place.
void save_fixture(const std::filesystem::path& dir, const std::string& problem_hash, const OracleSolution& sol);
/// Empty when no fixture exists; throws ConfigError when the file is
/// malformed or belongs to a different hash.
std::optional<OracleSolution> load_fixture(const std::filesystem::path& dir, const std::string& problem_hash);

}  // namespace swarmopt::oracle

#pragma once

#include "swarmopt/local_solvers.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace swarmopt::problems {

using solvers::IntegralityMask;
using solvers::Polytope;
using solvers::ScalarFunction;

// ---------------------------------------------------------------------------
// Constraint-coupled setup: min sum f_i(x_i) s.t. sum g_i(x_i) <= 0, x_i in X_i.

enum class CostKind { kLinear, kQuadratic };

/// One robot's data. The cost is c'x (+ 1/2 x'Qx for quadratic costs) and the
/// coupling map is affine, g_i(x) = G x - h.
struct CoupledRobot {
  CostKind kind = CostKind::kLinear;
  Vec c;
  Mat q;
  Mat g;
  Vec h;
  Polytope x_set;
  IntegralityMask mask;

  int dim() const { return x_set.dim(); }
  double cost(const Vec& x) const;
  Vec cost_gradient(const Vec& x) const;
  Vec coupling(const Vec& x) const { return g * x - h; }
};

struct ConstraintCoupledProblem {
  std::vector<CoupledRobot> robots;
  int coupling_dim = 0;
  /// Rows of the coupling constraint that hold with equality.
  std::vector<bool> equality_rows;
  /// Total resource, when the instance was built from one.
  Vec resource;

  int size() const { return static_cast<int>(robots.size()); }
  bool mixed_integer() const;
  void validate() const;

  double total_cost(const std::vector<Vec>& x) const;
  Vec total_coupling(const std::vector<Vec>& x) const;
  /// Norm of the violated part of sum g_i(x_i); equality rows count both signs.
  double coupling_violation(const std::vector<Vec>& x) const;
};

// ---------------------------------------------------------------------------
// Mixed-integer linear program with coupling sum A_i x_i <= b.

struct MilpRobot {
  Vec c;
  Mat a;
  Polytope x_set;
  IntegralityMask mask;

  int dim() const { return x_set.dim(); }
};

struct MilpProblem {
  std::vector<MilpRobot> robots;
  Vec b;
  /// Restriction subtracted from b so that recovered integer points fit.
  Vec sigma_ft;

  int size() const { return static_cast<int>(robots.size()); }
  int coupling_dim() const { return static_cast<int>(b.size()); }
  void validate() const;
  Vec total_coupling(const std::vector<Vec>& x) const;
  double total_cost(const std::vector<Vec>& x) const;
};

// ---------------------------------------------------------------------------
// Aggregative setup: min sum f_i(x_i, sigma(x)), sigma = (1/N) sum phi_i(x_i).

/// f_i(x, s) = 1/2 x'Qx + l'x + k + w * sum_k h_k(s_k),  phi_i(x) = Phi x.
struct AggregativeRobot {
  Mat q;
  Vec lin;
  double constant = 0.0;
  double sigma_weight = 1.0;
  std::vector<ScalarFunction> sigma_terms;
  Mat phi;
  Polytope x_set;

  int dim() const { return x_set.dim(); }
  double value(const Vec& x, const Vec& s) const;
  Vec grad_local(const Vec& x, const Vec& s) const;
  Vec grad_sigma(const Vec& x, const Vec& s) const;
  Vec aggregate(const Vec& x) const { return phi * x; }
  const Mat& aggregate_jacobian() const { return phi; }
};

struct AggregativeProblem {
  std::vector<AggregativeRobot> robots;
  int aggregate_dim = 0;
  /// Reference the aggregate is compared against when reporting (B for
  /// resource allocation, the target r0 for surveillance).
  Vec sigma_reference;

  int size() const { return static_cast<int>(robots.size()); }
  void validate() const;

  Vec sigma(const std::vector<Vec>& x) const;
  double total_cost(const std::vector<Vec>& x) const;
  /// Gradient of the global cost with respect to robot i's block.
  Vec gradient_block(const std::vector<Vec>& x, int i) const;

  /// True when every robot shares the same sigma terms, so the cost splits
  /// as sum_i l_i(x_i) + G(sigma).
  bool admm_compatible() const;
  /// The shared term G = (sum_i w_i) h_k, one function per component.
  std::vector<ScalarFunction> shared_sigma_terms() const;
};

// ---------------------------------------------------------------------------
// Builders.

/// Cost table with a mask of allowed (robot, task) pairs; an empty mask
/// allows every pair.
ConstraintCoupledProblem build_task_assignment(const Mat& cost, const std::vector<std::vector<bool>>& allowed = {});

/// Column of the cost table, i.e. task index, for every variable of robot i.
std::vector<int> task_indices(const ConstraintCoupledProblem& problem, int robot);

struct PevRobotData {
  double power = 0.0;  // P_i
  double e_min = 0.0;
  double e_max = 0.0;
  double e_init = 0.0;
  double e_ref = 0.0;
};

struct PevData {
  int horizon = 24;   // T
  double dt = 1.0 / 3.0;
  Vec prices;         // C_u, length T
  double p_max = 0.0;
  std::vector<PevRobotData> robots;
};

/// Random fleet with prices and limits drawn from fixed uniform ranges.
PevData random_pev_data(int n, std::uint64_t seed, int horizon = 24);

/// x_i = (e_i in R^{T+1}, u_i in [0,1]^T); coupling sum P_i u_i <= P_max.
ConstraintCoupledProblem build_pev_charging(const PevData& data);

struct SurveillanceData {
  Vec r0;                     // target
  std::vector<Vec> intruders; // r_i
  Vec weights;                // w_i
  Vec betas;                  // beta_i
  Vec eps;                    // per-axis tolerance
};

SurveillanceData random_surveillance_data(int n, std::uint64_t seed);

AggregativeProblem build_target_surveillance(const SurveillanceData& data);

struct ResourceAllocationData {
  Vec q;
  Vec r;
  double budget = 100.0;  // B
  double x_max = 100.0;
};

/// q_i ~ U[1, 10], r_i ~ U[-100, 0].
ResourceAllocationData random_resource_allocation_data(int n, std::uint64_t seed, double budget = 100.0,
                                                       double x_max = 100.0);

AggregativeProblem build_resource_allocation(const ResourceAllocationData& data);

// ---------------------------------------------------------------------------
// Gaussian quality-of-service model.

struct GaussianQoS {
  Vec mean;
  Mat covariance;
  double weight = 1.0;

  void validate() const;
};

/// KL(p || q) between the two Gaussians plus ln(w_p / w_q).
double kl_gaussian(const GaussianQoS& p, const GaussianQoS& q);

/// Entry (i, j) = kl_gaussian(clusters[j], robots[i]).
Mat qos_assignment_costs(const std::vector<GaussianQoS>& robots, const std::vector<GaussianQoS>& clusters);

/// The four-robot, four-cluster planar example used in the task-allocation demo.
std::vector<GaussianQoS> demo_qos_robots();
std::vector<GaussianQoS> demo_qos_clusters();

// ---------------------------------------------------------------------------
// Random mixed-integer instances for primal decomposition.

struct RandomMilpOptions {
  int robots = 4;
  int coupling_dim = 2;
  int max_binaries = 4;
  double margin = 0.05;  // added on top of the computed restriction
};

/// Binary robots with c ~ U[-1, 0], A ~ U[0, 1], per-robot cardinality rows,
/// and b leaving half of every coupling row's range. sigma_ft is set to
/// S * max_i(range of A_i x over X_i) + margin, the restriction that makes
/// every recovered point fit.
MilpProblem random_milp(std::uint64_t seed, const RandomMilpOptions& options = {});

// ---------------------------------------------------------------------------
// Serialization.

nlohmann::json to_json(const ConstraintCoupledProblem& p);
ConstraintCoupledProblem cc_problem_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const MilpProblem& p);
MilpProblem milp_problem_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const AggregativeProblem& p);
AggregativeProblem aggregative_problem_from_json(const nlohmann::json& doc);

/// FNV-1a hash of the canonical JSON dump, as 16 hex digits.
std::string problem_hash(const nlohmann::json& doc);

}  // namespace swarmopt::problems

#pragma once

#include "swarmopt/core.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace swarmopt::solvers {

/// { x : A_ineq x <= b_ineq, A_eq x = b_eq, lower <= x <= upper }.
/// Infinite bounds are allowed.
struct Polytope {
  Mat a_ineq;
  Vec b_ineq;
  Mat a_eq;
  Vec b_eq;
  Vec lower;
  Vec upper;

  /// Unconstrained R^n.
  static Polytope free_space(int n);
  static Polytope box(Vec lower, Vec upper);
  /// Probability simplex {x >= 0, 1'x = 1}.
  static Polytope simplex(int n);

  int dim() const { return static_cast<int>(lower.size()); }
  int ineq_rows() const { return static_cast<int>(a_ineq.rows()); }
  int eq_rows() const { return static_cast<int>(a_eq.rows()); }
  bool bounds_only() const { return a_ineq.rows() == 0 && a_eq.rows() == 0; }
  bool bounded() const { return lower.allFinite() && upper.allFinite(); }

  /// Throws ParameterError on inconsistent dimensions or lower > upper.
  void validate() const;

  /// Largest violation of any constraint (0 when feasible).
  double violation(const Vec& x) const;
  bool contains(const Vec& x, double tol = tol::kFeasibility) const { return violation(x) <= tol; }

  void add_inequality(const Vec& row, double rhs);
  void add_equality(const Vec& row, double rhs);
};

/// Integer-constrained coordinates of a decision vector.
class IntegralityMask {
 public:
  IntegralityMask() = default;
  explicit IntegralityMask(int n, bool all_integer = false)
      : flags_(static_cast<std::size_t>(n), all_integer) {}
  explicit IntegralityMask(std::vector<bool> flags) : flags_(std::move(flags)) {}

  int size() const { return static_cast<int>(flags_.size()); }
  bool operator[](int j) const { return flags_[static_cast<std::size_t>(j)]; }
  void set(int j, bool v) { flags_[static_cast<std::size_t>(j)] = v; }
  int count() const;
  bool any() const { return count() > 0; }
  const std::vector<bool>& flags() const { return flags_; }

 private:
  std::vector<bool> flags_;
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded };

std::string to_string(LpStatus s);

/// Primal solution plus the multipliers of every constraint family, with
/// sign convention  c + A_ineq' l + A_eq' nu - z_lower + z_upper = 0,
/// l, z_lower, z_upper >= 0.
struct LpSolution {
  LpStatus status = LpStatus::kInfeasible;
  Vec x;
  double objective = 0.0;
  Vec ineq_multipliers;
  Vec eq_multipliers;
  Vec lower_multipliers;
  Vec upper_multipliers;
  int iterations = 0;

  bool optimal() const { return status == LpStatus::kOptimal; }
};

/// Worst violation over stationarity, primal feasibility, dual feasibility
/// and complementarity. `q` may be empty for a linear objective.
double kkt_residual(const Mat& q, const Vec& c, const Polytope& p, const LpSolution& sol);

Vec project_box(const Vec& x, const Vec& lower, const Vec& upper);

/// Euclidean projection; throws InfeasibleError when P is empty.
Vec project_polytope(const Vec& x, const Polytope& p);

/// Dense two-phase bounded-variable simplex with Bland's rule.
/// Infeasible and unbounded problems are reported through the status.
LpSolution solve_lp(const Vec& c, const Polytope& p);

/// Primal active-set method for min 1/2 x'Qx + c'x over P with Q PSD.
/// Throws InfeasibleError, UnboundedError, or ParameterError (Q not PSD).
LpSolution solve_qp(const Mat& q, const Vec& c, const Polytope& p);

struct BranchAndBoundOptions {
  long node_budget = 200000;
};

/// Raised when the node budget runs out; carries the best incumbent found.
class NodeBudgetExceeded : public ResourceError {
 public:
  NodeBudgetExceeded(const std::string& what, std::optional<LpSolution> incumbent)
      : ResourceError(what), incumbent_(std::move(incumbent)) {}
  const std::optional<LpSolution>& incumbent() const { return incumbent_; }

 private:
  std::optional<LpSolution> incumbent_;
};

struct MilpSolution {
  LpSolution solution;
  long nodes = 0;
};

/// Best-first branch and bound over LP relaxations; branches on the most
/// fractional masked coordinate (ties to the lowest index).
MilpSolution solve_milp_bb(const Vec& c, const Polytope& p, const IntegralityMask& mask,
                           const BranchAndBoundOptions& options = {});

struct LexMinResult {
  Vec x;
  double rho = 0.0;
  double cost = 0.0;
};

/// Two-stage recovery: minimize rho >= 0 subject to A x <= y + rho 1 over the
/// mixed-integer set, then the linear cost with rho held at its optimum.
LexMinResult lex_min_recovery(const Vec& c, const Mat& a, const Vec& y, const Polytope& p,
                              const IntegralityMask& mask,
                              const BranchAndBoundOptions& options = {});

/// Vertex minimizer of d'z over a compact polytope.
Vec linear_min_oracle(const Vec& d, const Polytope& p);

/// One-dimensional convex functions with a proximal operator.
struct ScalarFunction {
  enum class Kind { kAffine, kQuadratic, kExpShifted };

  Kind kind = Kind::kAffine;
  double a = 0.0;      // slope (affine) or curvature (quadratic)
  double b = 0.0;      // offset (affine) or linear coefficient (quadratic)
  double shift = 0.0;  // exp(u - shift)

  static ScalarFunction zero() { return {}; }
  static ScalarFunction affine(double slope, double offset) { return {Kind::kAffine, slope, offset, 0.0}; }
  /// 1/2 a u^2 + b u
  static ScalarFunction quadratic(double a, double b) { return {Kind::kQuadratic, a, b, 0.0}; }
  static ScalarFunction exp_shifted(double shift) { return {Kind::kExpShifted, 0.0, 0.0, shift}; }
  /// Builds from a tag ("affine", "quadratic", "exp_shifted") and parameters.
  static ScalarFunction from_tag(const std::string& tag, const nlohmann::json& params);

  double value(double u) const;
  double derivative(double u) const;
  std::string tag() const;
  nlohmann::json params() const;
};

/// argmin_u g(u) + (u - v)^2 / (2 lambda).
double prox_scalar(const ScalarFunction& g, double lambda, double v);

nlohmann::json to_json(const Polytope& p);
Polytope polytope_from_json(const nlohmann::json& doc);

nlohmann::json vec_to_json(const Vec& v);
Vec vec_from_json(const nlohmann::json& doc);
nlohmann::json mat_to_json(const Mat& m);
Mat mat_from_json(const nlohmann::json& doc, Eigen::Index cols_if_empty = 0);

}  // namespace swarmopt::solvers

#include "swarmopt/local_solvers.hpp"

#include <cmath>
#include <queue>

namespace swarmopt::solvers {

namespace {

struct Node {
  double bound;
  long id;
  Vec lower;
  Vec upper;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.id > b.id;
  }
};

// Index of the most fractional integer coordinate, or -1 when integral.
int branching_index(const Vec& x, const IntegralityMask& mask) {
  int best = -1;
  double best_gap = tol::kIntegrality;
  for (int j = 0; j < mask.size(); ++j) {
    if (!mask[j]) continue;
    const double frac = x(j) - std::floor(x(j));
    const double gap = std::min(frac, 1.0 - frac);
    if (gap > best_gap) {
      best_gap = gap;
      best = j;
    }
  }
  return best;
}

}  // namespace

MilpSolution solve_milp_bb(const Vec& c, const Polytope& p, const IntegralityMask& mask,
                           const BranchAndBoundOptions& options) {
  p.validate();
  if (mask.size() != p.dim()) throw ParameterError("integrality mask has wrong length");
  if (c.size() != p.dim()) throw ParameterError("cost dimension does not match polytope");

  MilpSolution result;
  std::optional<LpSolution> incumbent;
  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  long next_id = 0;

  Polytope work = p;
  for (int j = 0; j < mask.size(); ++j) {
    if (!mask[j]) continue;
    work.lower(j) = std::ceil(work.lower(j) - tol::kIntegrality);
    work.upper(j) = std::floor(work.upper(j) + tol::kIntegrality);
    if (work.lower(j) > work.upper(j)) {
      result.solution.status = LpStatus::kInfeasible;
      result.solution.x = Vec::Zero(p.dim());
      return result;
    }
  }
  open.push({-kInf, next_id++, work.lower, work.upper});

  while (!open.empty()) {
    Node node = open.top();
    open.pop();
    if (incumbent && node.bound >= incumbent->objective - 1e-9 * (1.0 + std::abs(incumbent->objective))) {
      continue;
    }
    if (result.nodes >= options.node_budget) {
      throw NodeBudgetExceeded("branch-and-bound node budget exhausted", incumbent);
    }
    ++result.nodes;

    work.lower = node.lower;
    work.upper = node.upper;
    LpSolution relax = solve_lp(c, work);
    if (relax.status == LpStatus::kInfeasible) continue;
    if (relax.status == LpStatus::kUnbounded) {
      result.solution = relax;
      return result;
    }
    if (incumbent && relax.objective >= incumbent->objective - 1e-9 * (1.0 + std::abs(incumbent->objective))) {
      continue;
    }

    const int j = branching_index(relax.x, mask);
    if (j < 0) {
      // Snap the integer part and re-optimize the continuous part exactly.
      for (int k = 0; k < mask.size(); ++k) {
        if (!mask[k]) continue;
        const double v = std::round(relax.x(k));
        work.lower(k) = v;
        work.upper(k) = v;
      }
      LpSolution fixed = solve_lp(c, work);
      if (!fixed.optimal()) fixed = relax;
      if (!incumbent || fixed.objective < incumbent->objective) incumbent = fixed;
      continue;
    }

    const double v = relax.x(j);
    Node down{relax.objective, next_id++, node.lower, node.upper};
    down.upper(j) = std::floor(v);
    Node up{relax.objective, next_id++, node.lower, node.upper};
    up.lower(j) = std::ceil(v);
    if (down.lower(j) <= down.upper(j)) open.push(std::move(down));
    if (up.lower(j) <= up.upper(j)) open.push(std::move(up));
  }

  if (incumbent) {
    result.solution = *incumbent;
  } else {
    result.solution.status = LpStatus::kInfeasible;
    result.solution.x = Vec::Zero(p.dim());
  }
  return result;
}

LexMinResult lex_min_recovery(const Vec& c, const Mat& a, const Vec& y, const Polytope& p,
                              const IntegralityMask& mask, const BranchAndBoundOptions& options) {
  const int n = p.dim();
  if (a.cols() != n || a.rows() != y.size()) throw ParameterError("coupling block dimensions do not match");
  if (c.size() != n) throw ParameterError("cost dimension does not match polytope");

  // Augmented variable z = (x, rho).
  Polytope aug;
  aug.lower.resize(n + 1);
  aug.upper.resize(n + 1);
  aug.lower << p.lower, 0.0;
  aug.upper << p.upper, kInf;
  aug.a_ineq = Mat::Zero(p.ineq_rows() + a.rows(), n + 1);
  aug.b_ineq.resize(p.ineq_rows() + a.rows());
  if (p.ineq_rows() > 0) {
    aug.a_ineq.topLeftCorner(p.ineq_rows(), n) = p.a_ineq;
    aug.b_ineq.head(p.ineq_rows()) = p.b_ineq;
  }
  aug.a_ineq.bottomLeftCorner(a.rows(), n) = a;
  aug.a_ineq.bottomRightCorner(a.rows(), 1).setConstant(-1.0);
  aug.b_ineq.tail(a.rows()) = y;
  aug.a_eq = Mat::Zero(p.eq_rows(), n + 1);
  if (p.eq_rows() > 0) aug.a_eq.leftCols(n) = p.a_eq;
  aug.b_eq = p.b_eq;

  std::vector<bool> flags = mask.flags();
  flags.push_back(false);
  const IntegralityMask aug_mask(flags);

  Vec stage1 = Vec::Zero(n + 1);
  stage1(n) = 1.0;
  const MilpSolution first = solve_milp_bb(stage1, aug, aug_mask, options);
  if (first.solution.status == LpStatus::kInfeasible) throw InfeasibleError("local feasible set is empty");
  if (!first.solution.optimal()) throw InternalError("recovery violation stage did not converge");
  const double rho_star = std::max(0.0, first.solution.x(n));

  aug.upper(n) = rho_star + 1e-9;
  Vec stage2 = Vec::Zero(n + 1);
  stage2.head(n) = c;
  const MilpSolution second = solve_milp_bb(stage2, aug, aug_mask, options);
  const LpSolution& best = second.solution.optimal() ? second.solution : first.solution;

  LexMinResult out;
  out.x = best.x.head(n);
  out.rho = rho_star;
  out.cost = c.dot(out.x);
  return out;
}

}  // namespace swarmopt::solvers

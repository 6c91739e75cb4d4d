#include "swarmopt/algorithms.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace swarmopt::algo {

using problems::AggregativeProblem;
using problems::ConstraintCoupledProblem;
using problems::MilpProblem;
using solvers::LpSolution;
using solvers::LpStatus;
using solvers::Polytope;

namespace {

Vec feasible_point(const Polytope& x_set, int i) {
  const LpSolution sol = solvers::solve_lp(Vec::Zero(x_set.dim()), x_set);
  if (!sol.optimal()) throw InfeasibleError("robot " + std::to_string(i) + ": local set is empty");
  return sol.x;
}

void check_robot(int i, int n) {
  if (i < 0 || i >= n) throw ParameterError("robot index " + std::to_string(i) + " out of range");
}

double weight_sum(const Inbox& inbox) {
  double w = 0.0;
  for (const auto& e : inbox) w += e.weight;
  return w;
}

void check_mixing_row(const Inbox& inbox, int i) {
  if (std::abs(weight_sum(inbox) - 1.0) > 1e-9) {
    throw ParameterError("robot " + std::to_string(i) + ": inbox weights do not sum to one");
  }
}

Vec project(const Vec& x, const Polytope& p) {
  return p.bounds_only() ? solvers::project_box(x, p.lower, p.upper) : solvers::project_polytope(x, p);
}

void throw_status(LpStatus status, int i, const char* what) {
  const std::string who = "robot " + std::to_string(i) + ": ";
  if (status == LpStatus::kUnbounded) throw UnboundedError(who + what + " is unbounded");
  throw InfeasibleError(who + what + " is infeasible");
}

struct PenalizedLp {
  Vec x;
  double v = 0.0;
  Vec mu;
};

// min c'x + M v  s.t. A x - v 1 <= y, x in relaxed P_i, v >= 0.
PenalizedLp penalized_lp(const MilpProblem& problem, int i, const Vec& y, double penalty) {
  const auto& r = problem.robots[static_cast<std::size_t>(i)];
  const Polytope& p = r.x_set;
  const int n = p.dim();
  const int s = problem.coupling_dim();
  Polytope aug;
  aug.lower.resize(n + 1);
  aug.upper.resize(n + 1);
  aug.lower << p.lower, 0.0;
  aug.upper << p.upper, kInf;
  aug.a_ineq = Mat::Zero(p.ineq_rows() + s, n + 1);
  aug.b_ineq.resize(p.ineq_rows() + s);
  aug.a_ineq.topLeftCorner(p.ineq_rows(), n) = p.a_ineq;
  aug.a_ineq.bottomLeftCorner(s, n) = r.a;
  aug.a_ineq.bottomRightCorner(s, 1).setConstant(-1.0);
  aug.b_ineq << p.b_ineq, y;
  aug.a_eq = Mat::Zero(p.eq_rows(), n + 1);
  aug.a_eq.leftCols(n) = p.a_eq;
  aug.b_eq = p.b_eq;
  Vec c(n + 1);
  c << r.c, penalty;
  const LpSolution sol = solvers::solve_lp(c, aug);
  if (!sol.optimal()) {
    throw InternalError("robot " + std::to_string(i) + ": penalized allocation LP reported " + to_string(sol.status));
  }
  return {sol.x.head(n), sol.x(n), sol.ineq_multipliers.tail(s)};
}

}  // namespace

// ---------------------------------------------------------------------------

DualDecompState dd_init(const ConstraintCoupledProblem& problem, int i) {
  check_robot(i, problem.size());
  const auto& r = problem.robots[static_cast<std::size_t>(i)];
  if (r.mask.any()) throw UnsupportedError("dual decomposition needs continuous local sets");
  DualDecompState st;
  st.x_running = feasible_point(r.x_set, i);
  st.x_hat = st.x_running;
  st.mu = Vec::Zero(problem.coupling_dim);
  return st;
}

Envelope dd_message(const DualDecompState& state, int i) { return {i, 0.0, state.mu, {}}; }

Step<DualDecompState> dd_step(const DualDecompState& state, const Inbox& inbox, double gamma,
                              const ConstraintCoupledProblem& problem, int i) {
  check_robot(i, problem.size());
  check_mixing_row(inbox, i);
  if (!(gamma > 0.0)) throw ParameterError("dual decomposition step must be positive");
  const auto& r = problem.robots[static_cast<std::size_t>(i)];

  Vec v = Vec::Zero(problem.coupling_dim);
  for (const auto& e : inbox) v += e.weight * e.first;

  const Vec lin = r.c + r.g.transpose() * v;
  const LpSolution sol = r.kind == problems::CostKind::kQuadratic ? solvers::solve_qp(r.q, lin, r.x_set)
                                                                   : solvers::solve_lp(lin, r.x_set);
  if (!sol.optimal()) throw_status(sol.status, i, "Lagrangian subproblem");

  Step<DualDecompState> out{state, {}};
  DualDecompState& st = out.state;
  st.x_hat = sol.x;
  const Vec g = r.coupling(sol.x);
  st.mu = v + gamma * g;
  for (int k = 0; k < problem.coupling_dim; ++k) {
    if (!problem.equality_rows[static_cast<std::size_t>(k)]) st.mu(k) = std::max(0.0, st.mu(k));
  }
  st.step_weight_sum += gamma;
  st.x_running += (gamma / st.step_weight_sum) * (st.x_hat - st.x_running);
  out.outbox = dd_message(st, i);
  return out;
}

// ---------------------------------------------------------------------------

double pd_default_penalty(const MilpProblem& problem) {
  double m = 0.0;
  for (const auto& r : problem.robots) m = std::max(m, r.c.lpNorm<Eigen::Infinity>());
  return 100.0 * (1.0 + m);
}

Vec pd_equal_split(const MilpProblem& problem) {
  return (problem.b - problem.sigma_ft) / static_cast<double>(problem.size());
}

PrimalDecompState pd_init(const MilpProblem& problem, int i, const Vec& y0, double penalty) {
  check_robot(i, problem.size());
  if (y0.size() != problem.coupling_dim()) throw ParameterError("initial allocation has the wrong length");
  if (!(penalty > 0.0)) throw ParameterError("penalty weight must be positive");
  PrimalDecompState st;
  st.y_alloc = y0;
  const PenalizedLp lp = penalized_lp(problem, i, y0, penalty);
  st.mu = lp.mu;
  st.x_lp = lp.x;
  st.violation = lp.v;
  return st;
}

Envelope pd_message(const PrimalDecompState& state, int i) { return {i, 0.0, state.mu, {}}; }

Step<PrimalDecompState> pd_step(const PrimalDecompState& state, const Inbox& inbox, double alpha,
                                const MilpProblem& problem, int i, double penalty) {
  check_robot(i, problem.size());
  if (!(alpha > 0.0)) throw ParameterError("allocation step must be positive");
  Step<PrimalDecompState> out{state, {}};
  PrimalDecompState& st = out.state;
  for (const auto& e : inbox) {
    if (e.from != i) st.y_alloc += alpha * (state.mu - e.first);
  }
  const PenalizedLp lp = penalized_lp(problem, i, st.y_alloc, penalty);
  st.mu = lp.mu;
  st.x_lp = lp.x;
  st.violation = lp.v;
  ++st.round;
  out.outbox = pd_message(st, i);
  return out;
}

Vec pd_finalize(const PrimalDecompState& state, const MilpProblem& problem, int i) {
  check_robot(i, problem.size());
  const auto& r = problem.robots[static_cast<std::size_t>(i)];
  return solvers::lex_min_recovery(r.c, r.a, state.y_alloc, r.x_set, r.mask).x;
}

// ---------------------------------------------------------------------------

TrackingState tracking_init(const AggregativeProblem& problem, int i) {
  check_robot(i, problem.size());
  const auto& r = problem.robots[static_cast<std::size_t>(i)];
  TrackingState st;
  st.x = feasible_point(r.x_set, i);
  st.s_tracker = r.aggregate(st.x);
  st.y_tracker = r.grad_sigma(st.x, st.s_tracker);
  return st;
}

Envelope tracking_message(const TrackingState& state, int i) { return {i, 0.0, state.s_tracker, state.y_tracker}; }

namespace {

// Shared tail of both tracking methods: mix the trackers and add the local
// innovation from x to x_next.
Step<TrackingState> advance_trackers(const TrackingState& state, const Vec& x_next, const Inbox& inbox,
                                     const problems::AggregativeRobot& r, int i) {
  Step<TrackingState> out{state, {}};
  TrackingState& st = out.state;
  Vec s_mix = Vec::Zero(state.s_tracker.size());
  Vec y_mix = Vec::Zero(state.y_tracker.size());
  for (const auto& e : inbox) {
    s_mix += e.weight * e.first;
    y_mix += e.weight * e.second;
  }
  st.x = x_next;
  st.s_tracker = s_mix + r.aggregate(x_next) - r.aggregate(state.x);
  st.y_tracker = y_mix + r.grad_sigma(x_next, st.s_tracker) - r.grad_sigma(state.x, state.s_tracker);
  ++st.round;
  out.outbox = tracking_message(st, i);
  return out;
}

Vec tracking_direction(const TrackingState& state, const problems::AggregativeRobot& r) {
  return r.grad_local(state.x, state.s_tracker) + r.aggregate_jacobian().transpose() * state.y_tracker;
}

}  // namespace

Step<PatState> pat_step(const PatState& state, const Inbox& inbox, double gamma, double delta,
                        const AggregativeProblem& problem, int i) {
  check_robot(i, problem.size());
  check_mixing_row(inbox, i);
  if (!(gamma > 0.0)) throw ParameterError("tracking step gamma must be positive");
  if (!(delta > 0.0 && delta <= 1.0)) throw ParameterError("tracking step delta must lie in (0, 1]");
  const auto& r = problem.robots[static_cast<std::size_t>(i)];
  const Vec dir = tracking_direction(state, r);
  if (!dir.allFinite()) throw NumericError("robot " + std::to_string(i) + ": non-finite gradient");
  const Vec x_tilde = project(state.x - gamma * dir, r.x_set);
  return advance_trackers(state, state.x + delta * (x_tilde - state.x), inbox, r, i);
}

Step<FwState> fw_step(const FwState& state, const Inbox& inbox, double gamma, const AggregativeProblem& problem,
                      int i) {
  check_robot(i, problem.size());
  check_mixing_row(inbox, i);
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ParameterError("Frank-Wolfe step must lie in [0, 1]");
  const auto& r = problem.robots[static_cast<std::size_t>(i)];
  const Vec dir = tracking_direction(state, r);
  if (!dir.allFinite()) throw NumericError("robot " + std::to_string(i) + ": non-finite gradient");
  const Vec z = solvers::linear_min_oracle(dir, r.x_set);
  return advance_trackers(state, (1.0 - gamma) * state.x + gamma * z, inbox, r, i);
}

// ---------------------------------------------------------------------------

AdmmState admm_init(const AggregativeProblem& problem, int i, const AdmmOptions& options) {
  check_robot(i, problem.size());
  if (!problem.admm_compatible()) throw UnsupportedError("problem does not split into local costs plus a shared term");
  if (!(options.rho > 0.0 && options.xi > 0.0)) throw ParameterError("ADMM penalties must be positive");
  if (!(options.initial_box > 0.0)) throw ParameterError("ADMM initial box must be positive");
  const int m = problem.aggregate_dim;
  AdmmState st;
  st.p = Vec::Zero(m);
  st.s = Vec::Zero(m);
  st.y = Vec::Zero(m);
  st.z = Vec::Zero(m);
  st.x = feasible_point(problem.robots[static_cast<std::size_t>(i)].x_set, i);
  st.box_bound = options.initial_box;
  return st;
}

Envelope admm_message(const AdmmState& state, int i) { return {i, 0.0, state.y, {}}; }

Step<AdmmState> admm_step(const AdmmState& state, const Inbox& inbox, const AggregativeProblem& problem, int i,
                          const AdmmOptions& options) {
  check_robot(i, problem.size());
  const auto& r = problem.robots[static_cast<std::size_t>(i)];
  const double rho = options.rho;
  const double xi = options.xi;
  const int m = problem.aggregate_dim;

  int degree = 0;
  Vec y_sum = Vec::Zero(m);
  for (const auto& e : inbox) {
    if (e.from == i) continue;
    ++degree;
    y_sum += e.first;
  }

  Step<AdmmState> out{state, {}};
  AdmmState& st = out.state;
  st.p = state.p + rho * (degree * state.y - y_sum);
  st.s = state.s + xi * (state.y - state.z);
  const Vec rv = rho * (degree * state.y + y_sum) + xi * state.z - st.p - st.s;
  const double c = xi + 2.0 * rho * degree;

  // min 1/2 x'Qx + l'x + |Phi x + r|^2 / (2c) over X_i and |x|_inf <= M.
  const Mat& phi = r.aggregate_jacobian();
  const Mat h = r.q + phi.transpose() * phi / c;
  const Vec g = r.lin + phi.transpose() * rv / c;
  for (;;) {
    const double big = st.box_bound;
    Polytope boxed = r.x_set;
    boxed.lower = r.x_set.lower.cwiseMax(-big);
    boxed.upper = r.x_set.upper.cwiseMin(big);
    if ((boxed.lower.array() > boxed.upper.array()).any()) {
      // The box misses X_i entirely; grow it.
      st.box_bound *= 2.0;
    } else {
      const LpSolution sol = solvers::solve_qp(h, g, boxed);
      bool box_active = false;
      for (int j = 0; j < r.dim(); ++j) {
        if (big < r.x_set.upper(j) && sol.x(j) >= big - tol::kFeasibility) box_active = true;
        if (-big > r.x_set.lower(j) && sol.x(j) <= -big + tol::kFeasibility) box_active = true;
      }
      if (!box_active) {
        st.x = sol.x;
        break;
      }
      st.box_bound *= 2.0;
    }
    if (st.box_bound > options.box_ceiling) {
      throw NumericError("robot " + std::to_string(i) + ": ADMM box bound passed its ceiling");
    }
  }

  st.y = (phi * st.x + rv) / c;
  const auto shared = problem.shared_sigma_terms();
  const double lambda = xi / static_cast<double>(problem.size());
  st.z.resize(m);
  for (int k = 0; k < m; ++k) {
    const double arg = st.s(k) + xi * st.y(k);
    st.z(k) = st.y(k) + st.s(k) / xi - solvers::prox_scalar(shared[static_cast<std::size_t>(k)], lambda, arg) / xi;
  }
  out.outbox = admm_message(st, i);
  return out;
}

// ---------------------------------------------------------------------------

TrackerAudit audit_trackers(const std::vector<TrackingState>& states, const AggregativeProblem& problem) {
  if (static_cast<int>(states.size()) != problem.size()) throw ParameterError("one state per robot expected");
  const double n = static_cast<double>(problem.size());
  std::vector<Vec> x;
  Vec s_mean = Vec::Zero(problem.aggregate_dim);
  Vec y_mean = Vec::Zero(problem.aggregate_dim);
  Vec g_mean = Vec::Zero(problem.aggregate_dim);
  for (std::size_t i = 0; i < states.size(); ++i) {
    x.push_back(states[i].x);
    s_mean += states[i].s_tracker / n;
    y_mean += states[i].y_tracker / n;
    g_mean += problem.robots[i].grad_sigma(states[i].x, states[i].s_tracker) / n;
  }
  return {(s_mean - problem.sigma(x)).norm(), (y_mean - g_mean).norm()};
}

double audit_allocation(const std::vector<PrimalDecompState>& states, const MilpProblem& problem) {
  Vec sum = Vec::Zero(problem.coupling_dim());
  for (const auto& s : states) sum += s.y_alloc;
  return (sum - (problem.b - problem.sigma_ft)).lpNorm<Eigen::Infinity>();
}

}  // namespace swarmopt::algo

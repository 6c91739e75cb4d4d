#pragma once

// Per-robot transition functions. Every step is pure: it reads the robot's
// state, the messages delivered this round and the step parameters, and
// returns the next state plus the message to broadcast.

#include "swarmopt/problems.hpp"

#include <vector>

namespace swarmopt::algo {

/// One delivered message. `weight` is the receiver's consensus weight for the
/// sender (zero when the algorithm does not mix). The payload holds one or two
/// vectors: mu for the decomposition methods, (s, y) for the trackers, y for
/// ADMM.
struct Envelope {
  int from = -1;
  double weight = 0.0;
  Vec first;
  Vec second;
};

/// Messages delivered to one robot in one round. Mixing algorithms expect the
/// robot's own message among them (with the self weight); neighbor sums skip
/// entries with from == self.
using Inbox = std::vector<Envelope>;

template <class State>
struct Step {
  State state;
  Envelope outbox;
};

// ---------------------------------------------------------------------------
// Distributed dual decomposition.

struct DualDecompState {
  Vec x_running;
  Vec x_hat;
  Vec mu;
  double step_weight_sum = 0.0;
};

DualDecompState dd_init(const problems::ConstraintCoupledProblem& problem, int i);
Envelope dd_message(const DualDecompState& state, int i);
/// v = sum_j a_ij mu_j; x_hat minimizes the local Lagrangian at v; mu is the
/// prox step max(0, v + gamma g_i(x_hat)) (no projection on equality rows);
/// x_running is the gamma-weighted average of the x_hat iterates.
Step<DualDecompState> dd_step(const DualDecompState& state, const Inbox& inbox, double gamma,
                              const problems::ConstraintCoupledProblem& problem, int i);

// ---------------------------------------------------------------------------
// Primal decomposition for mixed-integer programs.

struct PrimalDecompState {
  Vec y_alloc;
  Vec mu;
  long round = 0;
  /// Solution of the last penalized LP, kept for reporting.
  Vec x_lp;
  double violation = 0.0;
};

/// Default penalty weight 100 (1 + max_i |c_i|_inf).
double pd_default_penalty(const problems::MilpProblem& problem);
/// Equal split of b - sigma_ft.
Vec pd_equal_split(const problems::MilpProblem& problem);

/// Stores y0 and computes the multipliers of the first penalized LP.
PrimalDecompState pd_init(const problems::MilpProblem& problem, int i, const Vec& y0, double penalty);
Envelope pd_message(const PrimalDecompState& state, int i);
/// y+ = y + alpha sum_{j != i} (mu_i - mu_j), then the penalized LP
/// min c'x + M v  s.t. A x <= y+ + v 1, x in P_i, v >= 0 gives the new mu.
Step<PrimalDecompState> pd_step(const PrimalDecompState& state, const Inbox& inbox, double alpha,
                                const problems::MilpProblem& problem, int i, double penalty);
/// Lexicographic recovery of the mixed-integer point for the final allocation.
Vec pd_finalize(const PrimalDecompState& state, const problems::MilpProblem& problem, int i);

// ---------------------------------------------------------------------------
// Projected aggregative tracking and distributed Frank-Wolfe.

struct TrackingState {
  Vec x;
  Vec s_tracker;
  Vec y_tracker;
  long round = 0;
};
using PatState = TrackingState;
using FwState = TrackingState;

/// x0 is the zero-cost LP vertex of X_i, s0 = phi_i(x0), y0 = grad_2 f_i(x0, s0).
TrackingState tracking_init(const problems::AggregativeProblem& problem, int i);
inline PatState pat_init(const problems::AggregativeProblem& problem, int i) { return tracking_init(problem, i); }
inline FwState fw_init(const problems::AggregativeProblem& problem, int i) { return tracking_init(problem, i); }
Envelope tracking_message(const TrackingState& state, int i);

Step<PatState> pat_step(const PatState& state, const Inbox& inbox, double gamma, double delta,
                        const problems::AggregativeProblem& problem, int i);
Step<FwState> fw_step(const FwState& state, const Inbox& inbox, double gamma,
                      const problems::AggregativeProblem& problem, int i);

// ---------------------------------------------------------------------------
// Dual consensus ADMM.

struct AdmmOptions {
  double rho = 0.1;
  double xi = 0.1;
  double initial_box = 1.0;
  double box_ceiling = 1152921504606846976.0;  // 2^60
};

struct AdmmState {
  Vec p;
  Vec s;
  Vec y;
  Vec z;
  Vec x;
  double box_bound = 1.0;
};

AdmmState admm_init(const problems::AggregativeProblem& problem, int i, const AdmmOptions& options = {});
Envelope admm_message(const AdmmState& state, int i);
/// Requires problem.admm_compatible(). Throws NumericError when the box bound
/// passes the ceiling.
Step<AdmmState> admm_step(const AdmmState& state, const Inbox& inbox, const problems::AggregativeProblem& problem,
                          int i, const AdmmOptions& options = {});

// ---------------------------------------------------------------------------
// Network-wide audits evaluated by the engine.

struct TrackerAudit {
  double sigma_error = 0.0;     // |mean_i s_i - sigma(x)|
  double gradient_error = 0.0;  // |mean_i y_i - mean_i grad_2 f_i(x_i, s_i)|
};

TrackerAudit audit_trackers(const std::vector<TrackingState>& states, const problems::AggregativeProblem& problem);

/// |sum_i y_i - (b - sigma_ft)|_inf.
double audit_allocation(const std::vector<PrimalDecompState>& states, const problems::MilpProblem& problem);

}  // namespace swarmopt::algo

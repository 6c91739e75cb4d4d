#include "swarmopt/problems.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace swarmopt::problems {

using solvers::mat_from_json;
using solvers::mat_to_json;
using solvers::polytope_from_json;
using solvers::vec_from_json;
using solvers::vec_to_json;

// ---------------------------------------------------------------------------
// Constraint-coupled problems.

double CoupledRobot::cost(const Vec& x) const {
  double f = c.dot(x);
  if (kind == CostKind::kQuadratic) f += 0.5 * x.dot(q * x);
  return f;
}

Vec CoupledRobot::cost_gradient(const Vec& x) const {
  if (kind == CostKind::kQuadratic) return c + q * x;
  return c;
}

bool ConstraintCoupledProblem::mixed_integer() const {
  return std::any_of(robots.begin(), robots.end(), [](const CoupledRobot& r) { return r.mask.any(); });
}

void ConstraintCoupledProblem::validate() const {
  if (robots.empty()) throw ParameterError("problem needs at least one robot");
  if (static_cast<int>(equality_rows.size()) != coupling_dim) {
    throw ParameterError("equality flags do not match the coupling dimension");
  }
  for (std::size_t i = 0; i < robots.size(); ++i) {
    const CoupledRobot& r = robots[i];
    r.x_set.validate();
    const int n = r.dim();
    const std::string who = "robot " + std::to_string(i) + ": ";
    if (r.c.size() != n) throw ParameterError(who + "cost vector has wrong length");
    if (r.kind == CostKind::kQuadratic && (r.q.rows() != n || r.q.cols() != n)) {
      throw ParameterError(who + "quadratic cost has wrong shape");
    }
    if (r.g.rows() != coupling_dim || r.g.cols() != n || r.h.size() != coupling_dim) {
      throw ParameterError(who + "coupling map output dimension differs from S");
    }
    if (r.mask.size() != 0 && r.mask.size() != n) throw ParameterError(who + "integrality mask has wrong length");
  }
}

double ConstraintCoupledProblem::total_cost(const std::vector<Vec>& x) const {
  double f = 0.0;
  for (std::size_t i = 0; i < robots.size(); ++i) f += robots[i].cost(x[i]);
  return f;
}

Vec ConstraintCoupledProblem::total_coupling(const std::vector<Vec>& x) const {
  Vec g = Vec::Zero(coupling_dim);
  for (std::size_t i = 0; i < robots.size(); ++i) g += robots[i].coupling(x[i]);
  return g;
}

double ConstraintCoupledProblem::coupling_violation(const std::vector<Vec>& x) const {
  Vec g = total_coupling(x);
  for (int k = 0; k < coupling_dim; ++k) {
    g(k) = equality_rows[static_cast<std::size_t>(k)] ? std::abs(g(k)) : std::max(0.0, g(k));
  }
  return g.norm();
}

// ---------------------------------------------------------------------------
// MILP problems.

void MilpProblem::validate() const {
  if (robots.empty()) throw ParameterError("problem needs at least one robot");
  const int s = coupling_dim();
  if (sigma_ft.size() != s) throw ParameterError("restriction has wrong length");
  if ((sigma_ft.array() < 0.0).any()) throw ParameterError("restriction must be nonnegative");
  for (std::size_t i = 0; i < robots.size(); ++i) {
    const MilpRobot& r = robots[i];
    r.x_set.validate();
    const std::string who = "robot " + std::to_string(i) + ": ";
    if (r.c.size() != r.dim()) throw ParameterError(who + "cost vector has wrong length");
    if (r.a.rows() != s || r.a.cols() != r.dim()) throw ParameterError(who + "coupling block has wrong shape");
    if (r.mask.size() != r.dim()) throw ParameterError(who + "integrality mask has wrong length");
  }
}

Vec MilpProblem::total_coupling(const std::vector<Vec>& x) const {
  Vec g = Vec::Zero(coupling_dim());
  for (std::size_t i = 0; i < robots.size(); ++i) g += robots[i].a * x[i];
  return g;
}

double MilpProblem::total_cost(const std::vector<Vec>& x) const {
  double f = 0.0;
  for (std::size_t i = 0; i < robots.size(); ++i) f += robots[i].c.dot(x[i]);
  return f;
}

// ---------------------------------------------------------------------------
// Aggregative problems.

double AggregativeRobot::value(const Vec& x, const Vec& s) const {
  double f = 0.5 * x.dot(q * x) + lin.dot(x) + constant;
  for (std::size_t k = 0; k < sigma_terms.size(); ++k) {
    f += sigma_weight * sigma_terms[k].value(s(static_cast<Eigen::Index>(k)));
  }
  return f;
}

Vec AggregativeRobot::grad_local(const Vec& x, const Vec& /*s*/) const { return q * x + lin; }

Vec AggregativeRobot::grad_sigma(const Vec& /*x*/, const Vec& s) const {
  Vec g(s.size());
  for (Eigen::Index k = 0; k < s.size(); ++k) {
    g(k) = sigma_weight * sigma_terms[static_cast<std::size_t>(k)].derivative(s(k));
  }
  return g;
}

void AggregativeProblem::validate() const {
  if (robots.empty()) throw ParameterError("problem needs at least one robot");
  for (std::size_t i = 0; i < robots.size(); ++i) {
    const AggregativeRobot& r = robots[i];
    r.x_set.validate();
    const int n = r.dim();
    const std::string who = "robot " + std::to_string(i) + ": ";
    if (r.q.rows() != n || r.q.cols() != n) throw ParameterError(who + "quadratic term has wrong shape");
    if (r.lin.size() != n) throw ParameterError(who + "linear term has wrong length");
    if (r.phi.rows() != aggregate_dim || r.phi.cols() != n) throw ParameterError(who + "aggregation map has wrong shape");
    if (static_cast<int>(r.sigma_terms.size()) != aggregate_dim) {
      throw ParameterError(who + "one aggregate term per component is required");
    }
  }
  if (sigma_reference.size() != 0 && sigma_reference.size() != aggregate_dim) {
    throw ParameterError("aggregate reference has wrong length");
  }
}

Vec AggregativeProblem::sigma(const std::vector<Vec>& x) const {
  Vec s = Vec::Zero(aggregate_dim);
  for (std::size_t i = 0; i < robots.size(); ++i) s += robots[i].aggregate(x[i]);
  return s / static_cast<double>(robots.size());
}

double AggregativeProblem::total_cost(const std::vector<Vec>& x) const {
  const Vec s = sigma(x);
  double f = 0.0;
  for (std::size_t i = 0; i < robots.size(); ++i) f += robots[i].value(x[i], s);
  return f;
}

Vec AggregativeProblem::gradient_block(const std::vector<Vec>& x, int i) const {
  const Vec s = sigma(x);
  Vec mean_grad = Vec::Zero(aggregate_dim);
  for (std::size_t j = 0; j < robots.size(); ++j) mean_grad += robots[j].grad_sigma(x[j], s);
  mean_grad /= static_cast<double>(robots.size());
  const AggregativeRobot& r = robots[static_cast<std::size_t>(i)];
  return r.grad_local(x[static_cast<std::size_t>(i)], s) + r.phi.transpose() * mean_grad;
}

namespace {

bool same_function(const ScalarFunction& a, const ScalarFunction& b) {
  return a.kind == b.kind && a.a == b.a && a.b == b.b && a.shift == b.shift;
}

ScalarFunction scaled(const ScalarFunction& f, double w) {
  switch (f.kind) {
    case ScalarFunction::Kind::kAffine: return ScalarFunction::affine(w * f.a, w * f.b);
    case ScalarFunction::Kind::kQuadratic: return ScalarFunction::quadratic(w * f.a, w * f.b);
    case ScalarFunction::Kind::kExpShifted: return ScalarFunction::exp_shifted(f.shift - std::log(w));
  }
  return f;
}

}  // namespace

bool AggregativeProblem::admm_compatible() const {
  for (const auto& r : robots) {
    if (r.sigma_weight <= 0.0) return false;
    for (std::size_t k = 0; k < r.sigma_terms.size(); ++k) {
      if (!same_function(r.sigma_terms[k], robots.front().sigma_terms[k])) return false;
    }
  }
  return true;
}

std::vector<ScalarFunction> AggregativeProblem::shared_sigma_terms() const {
  if (!admm_compatible()) throw UnsupportedError("aggregate terms differ across robots");
  double w = 0.0;
  for (const auto& r : robots) w += r.sigma_weight;
  std::vector<ScalarFunction> out;
  for (const auto& f : robots.front().sigma_terms) out.push_back(scaled(f, w));
  return out;
}

// ---------------------------------------------------------------------------
// Task assignment.

ConstraintCoupledProblem build_task_assignment(const Mat& cost, const std::vector<std::vector<bool>>& allowed) {
  const int n = static_cast<int>(cost.rows());
  if (n < 1 || cost.cols() != n) throw ParameterError("cost table must be square and nonempty");
  if (!cost.allFinite()) throw ParameterError("cost table has non-finite entries");
  auto ok = [&](int i, int j) {
    return allowed.empty() || allowed[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  };
  if (!allowed.empty()) {
    if (static_cast<int>(allowed.size()) != n) throw ParameterError("allowed-pair mask has wrong shape");
    for (const auto& row : allowed) {
      if (static_cast<int>(row.size()) != n) throw ParameterError("allowed-pair mask has wrong shape");
    }
  }
  for (int j = 0; j < n; ++j) {
    bool covered = false;
    for (int i = 0; i < n; ++i) covered = covered || ok(i, j);
    if (!covered) throw InfeasibleError("task " + std::to_string(j) + " has no allowed robot");
  }

  ConstraintCoupledProblem p;
  p.coupling_dim = n;
  p.equality_rows.assign(static_cast<std::size_t>(n), true);
  p.resource = Vec::Ones(n);
  for (int i = 0; i < n; ++i) {
    std::vector<int> tasks;
    for (int j = 0; j < n; ++j) {
      if (ok(i, j)) tasks.push_back(j);
    }
    if (tasks.empty()) throw InfeasibleError("robot " + std::to_string(i) + " has no allowed task");
    const int ni = static_cast<int>(tasks.size());
    CoupledRobot r;
    r.c = Vec(ni);
    r.g = Mat::Zero(n, ni);
    for (int k = 0; k < ni; ++k) {
      r.c(k) = cost(i, tasks[static_cast<std::size_t>(k)]);
      r.g(tasks[static_cast<std::size_t>(k)], k) = 1.0;
    }
    r.h = Vec::Constant(n, 1.0 / n);
    r.x_set = Polytope::box(Vec::Zero(ni), Vec::Ones(ni));
    r.x_set.add_equality(Vec::Ones(ni), 1.0);
    r.mask = IntegralityMask(ni);
    p.robots.push_back(std::move(r));
  }
  return p;
}

std::vector<int> task_indices(const ConstraintCoupledProblem& problem, int robot) {
  const CoupledRobot& r = problem.robots.at(static_cast<std::size_t>(robot));
  std::vector<int> out;
  for (int k = 0; k < r.dim(); ++k) {
    Eigen::Index row = 0;
    r.g.col(k).maxCoeff(&row);
    out.push_back(static_cast<int>(row));
  }
  return out;
}

// ---------------------------------------------------------------------------
// PEV charging.

PevData random_pev_data(int n, std::uint64_t seed, int horizon) {
  if (n < 1 || horizon < 1) throw ParameterError("fleet size and horizon must be positive");
  Rng rng(seed);
  PevData d;
  d.horizon = horizon;
  d.dt = 1.0 / 3.0;
  d.prices = Vec(horizon);
  for (int k = 0; k < horizon; ++k) d.prices(k) = rng.uniform(19.0, 35.0);
  double total_power = 0.0;
  for (int i = 0; i < n; ++i) {
    PevRobotData r;
    r.power = rng.uniform(3.0, 5.0);
    r.e_max = rng.uniform(8.0, 16.0);
    r.e_min = 0.0;
    r.e_init = rng.uniform(0.2, 0.5) * r.e_max;
    r.e_ref = rng.uniform(0.55, 0.8) * r.e_max;
    total_power += r.power;
    d.robots.push_back(r);
  }
  d.p_max = 0.3 * total_power;
  return d;
}

ConstraintCoupledProblem build_pev_charging(const PevData& data) {
  const int n = static_cast<int>(data.robots.size());
  const int t = data.horizon;
  if (n < 1) throw ParameterError("fleet is empty");
  if (data.prices.size() != t) throw ParameterError("price vector must have one entry per slot");
  if (!(data.dt > 0.0) || !(data.p_max > 0.0)) throw ParameterError("slot length and power limit must be positive");

  ConstraintCoupledProblem p;
  p.coupling_dim = t;
  p.equality_rows.assign(static_cast<std::size_t>(t), false);
  p.resource = Vec::Constant(t, data.p_max);
  const int ni = 2 * t + 1;  // e_0..e_T, u_0..u_{T-1}
  for (int i = 0; i < n; ++i) {
    const PevRobotData& d = data.robots[static_cast<std::size_t>(i)];
    const std::string who = "robot " + std::to_string(i) + ": ";
    if (!(d.power > 0.0)) throw ParameterError(who + "charging power must be positive");
    if (d.e_init < d.e_min || d.e_init > d.e_max) throw InfeasibleError(who + "initial charge outside capacity");
    if (d.e_ref > d.e_max) throw InfeasibleError(who + "reference charge exceeds capacity");
    if (d.e_init + d.power * data.dt * t < d.e_ref) throw InfeasibleError(who + "reference charge is unreachable");

    CoupledRobot r;
    r.c = Vec::Zero(ni);
    r.c.tail(t) = d.power * data.prices;
    Vec lower(ni), upper(ni);
    lower.head(t + 1).setConstant(d.e_min);
    upper.head(t + 1).setConstant(d.e_max);
    lower(t) = std::max(d.e_min, d.e_ref);
    lower.tail(t).setZero();
    upper.tail(t).setOnes();
    r.x_set = Polytope::box(lower, upper);
    r.x_set.add_equality(Vec::Unit(ni, 0), d.e_init);
    for (int k = 0; k < t; ++k) {
      Vec row = Vec::Zero(ni);
      row(k + 1) = 1.0;
      row(k) = -1.0;
      row(t + 1 + k) = -d.power * data.dt;
      r.x_set.add_equality(row, 0.0);
    }
    r.g = Mat::Zero(t, ni);
    for (int k = 0; k < t; ++k) r.g(k, t + 1 + k) = d.power;
    r.h = Vec::Constant(t, data.p_max / n);
    r.mask = IntegralityMask(ni);
    p.robots.push_back(std::move(r));
  }
  return p;
}

// ---------------------------------------------------------------------------
// Target surveillance.

SurveillanceData random_surveillance_data(int n, std::uint64_t seed) {
  if (n < 1) throw ParameterError("team size must be positive");
  Rng rng(seed);
  SurveillanceData d;
  d.r0 = Vec::Zero(3);
  d.eps = Vec::Constant(3, 0.2);
  d.weights = Vec(n);
  d.betas = Vec(n);
  for (int i = 0; i < n; ++i) {
    Vec ri(3);
    for (int c = 0; c < 3; ++c) {
      const double side = rng.uniform() < 0.5 ? -1.0 : 1.0;
      ri(c) = side * rng.uniform(2.0, 5.0);
    }
    d.intruders.push_back(ri);
    d.weights(i) = rng.uniform(0.5, 1.5);
    d.betas(i) = rng.uniform(0.5, 1.5);
  }
  return d;
}

AggregativeProblem build_target_surveillance(const SurveillanceData& data) {
  const int n = static_cast<int>(data.intruders.size());
  const int dim = static_cast<int>(data.r0.size());
  if (n < 1) throw ParameterError("team size must be positive");
  if (data.weights.size() != n || data.betas.size() != n) throw ParameterError("one weight and one beta per robot");
  if (data.eps.size() != dim) throw ParameterError("tolerance must have one entry per axis");
  if ((data.eps.array() <= 0.0).any()) throw ParameterError("tolerances must be positive");

  AggregativeProblem p;
  p.aggregate_dim = dim;
  p.sigma_reference = data.r0;
  for (int i = 0; i < n; ++i) {
    const Vec& ri = data.intruders[static_cast<std::size_t>(i)];
    const double w = data.weights(i);
    const double beta = data.betas(i);
    if (ri.size() != dim) throw ParameterError("intruder positions must match the target dimension");
    if (!(w > 0.0) || !(beta > 0.0)) throw ParameterError("weights and betas must be positive");
    Vec lower(dim), upper(dim);
    for (int c = 0; c < dim; ++c) {
      if (ri(c) <= data.r0(c)) {
        lower(c) = ri(c) + data.eps(c);
        upper(c) = data.r0(c);
      } else {
        lower(c) = data.r0(c);
        upper(c) = ri(c) - data.eps(c);
      }
      if (lower(c) > upper(c)) {
        throw InfeasibleError("robot " + std::to_string(i) + ": empty box on axis " + std::to_string(c));
      }
    }
    AggregativeRobot r;
    r.q = 2.0 * w * Mat::Identity(dim, dim);
    r.lin = -2.0 * w * ri;
    r.constant = w * ri.squaredNorm() + data.r0.squaredNorm();
    r.sigma_weight = 1.0;
    for (int c = 0; c < dim; ++c) r.sigma_terms.push_back(ScalarFunction::quadratic(2.0, -2.0 * data.r0(c)));
    r.phi = beta * Mat::Identity(dim, dim);
    r.x_set = Polytope::box(lower, upper);
    p.robots.push_back(std::move(r));
  }
  return p;
}

// ---------------------------------------------------------------------------
// Resource allocation.

ResourceAllocationData random_resource_allocation_data(int n, std::uint64_t seed, double budget, double x_max) {
  if (n < 1) throw ParameterError("team size must be positive");
  Rng rng(seed);
  ResourceAllocationData d;
  d.q = Vec(n);
  d.r = Vec(n);
  for (int i = 0; i < n; ++i) d.q(i) = rng.uniform(1.0, 10.0);
  for (int i = 0; i < n; ++i) d.r(i) = rng.uniform(-100.0, 0.0);
  d.budget = budget;
  d.x_max = x_max;
  return d;
}

AggregativeProblem build_resource_allocation(const ResourceAllocationData& data) {
  const int n = static_cast<int>(data.q.size());
  if (n < 1 || data.r.size() != n) throw ParameterError("q and r must have one entry per robot");
  if ((data.q.array() <= 0.0).any()) throw ParameterError("q must be positive");
  if (!(data.x_max > 0.0)) throw ParameterError("x_max must be positive");

  AggregativeProblem p;
  p.aggregate_dim = 1;
  p.sigma_reference = Vec::Constant(1, data.budget);
  for (int i = 0; i < n; ++i) {
    AggregativeRobot r;
    r.q = Mat::Constant(1, 1, data.q(i) * data.q(i));
    r.lin = Vec::Constant(1, data.r(i));
    r.sigma_weight = 1.0 / n;
    r.sigma_terms = {ScalarFunction::exp_shifted(data.budget)};
    r.phi = Mat::Constant(1, 1, static_cast<double>(n));
    r.x_set = Polytope::box(Vec::Zero(1), Vec::Constant(1, data.x_max));
    p.robots.push_back(std::move(r));
  }
  return p;
}

// ---------------------------------------------------------------------------
// Gaussian QoS.

void GaussianQoS::validate() const {
  const auto k = mean.size();
  if (k < 1 || covariance.rows() != k || covariance.cols() != k) {
    throw ParameterError("covariance shape does not match the mean");
  }
  if ((covariance - covariance.transpose()).lpNorm<Eigen::Infinity>() > 1e-12 * (1.0 + covariance.lpNorm<Eigen::Infinity>())) {
    throw ParameterError("covariance must be symmetric");
  }
  if (!(weight > 0.0)) throw ParameterError("weight must be positive");
}

double kl_gaussian(const GaussianQoS& p, const GaussianQoS& q) {
  p.validate();
  q.validate();
  if (p.mean.size() != q.mean.size()) throw ParameterError("Gaussians live in different dimensions");
  const Eigen::LLT<Mat> lp(p.covariance);
  const Eigen::LLT<Mat> lq(q.covariance);
  if (lp.info() != Eigen::Success || lq.info() != Eigen::Success) {
    throw NumericError("covariance is not positive definite");
  }
  const auto k = static_cast<double>(p.mean.size());
  const Vec diff = q.mean - p.mean;
  const double trace = lq.solve(p.covariance).trace();
  const double maha = diff.dot(lq.solve(diff));
  const Mat lpm = lp.matrixL();
  const Mat lqm = lq.matrixL();
  const double logdet_p = 2.0 * lpm.diagonal().array().log().sum();
  const double logdet_q = 2.0 * lqm.diagonal().array().log().sum();
  return 0.5 * (trace + maha - k + logdet_q - logdet_p) + std::log(p.weight / q.weight);
}

Mat qos_assignment_costs(const std::vector<GaussianQoS>& robots, const std::vector<GaussianQoS>& clusters) {
  if (robots.size() != clusters.size()) throw ParameterError("robot and cluster counts differ");
  const auto n = static_cast<Eigen::Index>(robots.size());
  Mat c(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      c(i, j) = kl_gaussian(clusters[static_cast<std::size_t>(j)], robots[static_cast<std::size_t>(i)]);
    }
  }
  return c;
}

namespace {

GaussianQoS planar(double mx, double my, double sx, double sy, double w) {
  GaussianQoS g;
  g.mean = Vec(2);
  g.mean << mx, my;
  g.covariance = Mat::Zero(2, 2);
  g.covariance.diagonal() << sx, sy;
  g.weight = w;
  return g;
}

}  // namespace

std::vector<GaussianQoS> demo_qos_robots() {
  // Robots wait at the origin with unrotated service ellipses.
  return {planar(0, 0, 1.0, 2.0, 0.25), planar(0, 0, 3.0, 1.5, 0.25), planar(0, 0, 1.5, 2.5, 0.25),
          planar(0, 0, 1.0, 2.0, 0.25)};
}

std::vector<GaussianQoS> demo_qos_clusters() {
  return {planar(0.0, 0.0, 0.3, 0.4, 0.25), planar(2.0 / 3.0, 2.0 / 3.0, 0.6, 0.8, 0.25),
          planar(-2.0 / 3.0, -2.0 / 3.0, 0.1, 0.5, 0.25), planar(1.0 / 3.0, -1.0 / 3.0, 0.8, 0.2, 0.25)};
}

// ---------------------------------------------------------------------------
// Random MILP instances.

MilpProblem random_milp(std::uint64_t seed, const RandomMilpOptions& options) {
  if (options.robots < 1 || options.coupling_dim < 1 || options.max_binaries < 1) {
    throw ParameterError("random MILP sizes must be positive");
  }
  Rng rng(seed);
  const int s = options.coupling_dim;
  MilpProblem p;
  Vec spread_max = Vec::Zero(s);
  Vec row_sums = Vec::Zero(s);
  for (int i = 0; i < options.robots; ++i) {
    const int n = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(options.max_binaries)));
    MilpRobot r;
    r.c = Vec(n);
    for (int j = 0; j < n; ++j) r.c(j) = rng.uniform(-1.0, 0.0);
    r.a = Mat(s, n);
    for (int k = 0; k < s; ++k) {
      for (int j = 0; j < n; ++j) r.a(k, j) = rng.uniform(0.0, 1.0);
    }
    r.x_set = Polytope::box(Vec::Zero(n), Vec::Ones(n));
    // At most ceil(n/2) items per robot.
    r.x_set.add_inequality(Vec::Ones(n), std::ceil(0.5 * n));
    r.mask = IntegralityMask(n, true);
    // A >= 0 and x = 0 is feasible, so the range of row k over X_i is
    // [0, max_x a_k'x], the largest sum of ceil(n/2) entries.
    for (int k = 0; k < s; ++k) {
      Vec row = r.a.row(k).transpose();
      std::sort(row.data(), row.data() + n, std::greater<>());
      const double top = row.head(static_cast<Eigen::Index>(std::ceil(0.5 * n))).sum();
      spread_max(k) = std::max(spread_max(k), top);
      row_sums(k) += r.a.row(k).sum();
    }
    p.robots.push_back(std::move(r));
  }
  p.sigma_ft = static_cast<double>(s) * spread_max + Vec::Constant(s, options.margin);
  p.b = p.sigma_ft + 0.5 * row_sums;
  return p;
}

// ---------------------------------------------------------------------------
// Serialization.

namespace {

nlohmann::json mask_to_json(const IntegralityMask& m) {
  nlohmann::json out = nlohmann::json::array();
  for (int j = 0; j < m.size(); ++j) out.push_back(m[j]);
  return out;
}

IntegralityMask mask_from_json(const nlohmann::json& doc, int n) {
  if (doc.is_null()) return IntegralityMask(n);
  std::vector<bool> flags;
  for (const auto& e : doc) flags.push_back(e.get<bool>());
  return IntegralityMask(flags);
}

void expect_type(const nlohmann::json& doc, const char* type) {
  if (!doc.is_object() || doc.value("type", std::string()) != type) {
    throw ParameterError(std::string("expected a problem document of type '") + type + "'");
  }
}

template <typename F>
auto wrap_json(F&& f) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("malformed problem document: ") + e.what());
  }
}

}  // namespace

nlohmann::json to_json(const ConstraintCoupledProblem& p) {
  nlohmann::json robots = nlohmann::json::array();
  for (const auto& r : p.robots) {
    robots.push_back({{"cost_kind", r.kind == CostKind::kLinear ? "linear" : "quadratic"},
                      {"c", vec_to_json(r.c)},
                      {"q", mat_to_json(r.kind == CostKind::kQuadratic ? r.q : Mat(0, 0))},
                      {"g", mat_to_json(r.g)},
                      {"h", vec_to_json(r.h)},
                      {"x_set", solvers::to_json(r.x_set)},
                      {"integer", mask_to_json(r.mask)}});
  }
  return {{"type", "constraint_coupled"},
          {"coupling_dim", p.coupling_dim},
          {"equality_rows", p.equality_rows},
          {"resource", vec_to_json(p.resource)},
          {"robots", robots}};
}

ConstraintCoupledProblem cc_problem_from_json(const nlohmann::json& doc) {
  expect_type(doc, "constraint_coupled");
  return wrap_json([&] {
    ConstraintCoupledProblem p;
    p.coupling_dim = doc.at("coupling_dim").get<int>();
    p.equality_rows = doc.at("equality_rows").get<std::vector<bool>>();
    p.resource = vec_from_json(doc.value("resource", nlohmann::json::array()));
    for (const auto& e : doc.at("robots")) {
      CoupledRobot r;
      const std::string kind = e.at("cost_kind").get<std::string>();
      if (kind != "linear" && kind != "quadratic") throw ParameterError("unknown cost kind '" + kind + "'");
      r.kind = kind == "linear" ? CostKind::kLinear : CostKind::kQuadratic;
      r.x_set = polytope_from_json(e.at("x_set"));
      const int n = r.x_set.dim();
      r.c = vec_from_json(e.at("c"));
      if (r.kind == CostKind::kQuadratic) r.q = mat_from_json(e.at("q"), n);
      r.g = mat_from_json(e.at("g"), n);
      r.h = vec_from_json(e.at("h"));
      r.mask = mask_from_json(e.value("integer", nlohmann::json()), n);
      p.robots.push_back(std::move(r));
    }
    p.validate();
    return p;
  });
}

nlohmann::json to_json(const MilpProblem& p) {
  nlohmann::json robots = nlohmann::json::array();
  for (const auto& r : p.robots) {
    robots.push_back({{"c", vec_to_json(r.c)},
                      {"a", mat_to_json(r.a)},
                      {"x_set", solvers::to_json(r.x_set)},
                      {"integer", mask_to_json(r.mask)}});
  }
  return {{"type", "milp"}, {"b", vec_to_json(p.b)}, {"sigma_ft", vec_to_json(p.sigma_ft)}, {"robots", robots}};
}

MilpProblem milp_problem_from_json(const nlohmann::json& doc) {
  expect_type(doc, "milp");
  return wrap_json([&] {
    MilpProblem p;
    p.b = vec_from_json(doc.at("b"));
    p.sigma_ft = doc.contains("sigma_ft") ? vec_from_json(doc.at("sigma_ft")) : Vec::Zero(p.b.size());
    for (const auto& e : doc.at("robots")) {
      MilpRobot r;
      r.x_set = polytope_from_json(e.at("x_set"));
      const int n = r.x_set.dim();
      r.c = vec_from_json(e.at("c"));
      r.a = mat_from_json(e.at("a"), n);
      r.mask = mask_from_json(e.value("integer", nlohmann::json()), n);
      p.robots.push_back(std::move(r));
    }
    p.validate();
    return p;
  });
}

nlohmann::json to_json(const AggregativeProblem& p) {
  nlohmann::json robots = nlohmann::json::array();
  for (const auto& r : p.robots) {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& f : r.sigma_terms) terms.push_back({{"kind", f.tag()}, {"params", f.params()}});
    robots.push_back({{"q", mat_to_json(r.q)},
                      {"lin", vec_to_json(r.lin)},
                      {"constant", r.constant},
                      {"sigma_weight", r.sigma_weight},
                      {"sigma_terms", terms},
                      {"phi", mat_to_json(r.phi)},
                      {"x_set", solvers::to_json(r.x_set)}});
  }
  return {{"type", "aggregative"},
          {"aggregate_dim", p.aggregate_dim},
          {"sigma_reference", vec_to_json(p.sigma_reference)},
          {"robots", robots}};
}

AggregativeProblem aggregative_problem_from_json(const nlohmann::json& doc) {
  expect_type(doc, "aggregative");
  return wrap_json([&] {
    AggregativeProblem p;
    p.aggregate_dim = doc.at("aggregate_dim").get<int>();
    p.sigma_reference = vec_from_json(doc.value("sigma_reference", nlohmann::json::array()));
    for (const auto& e : doc.at("robots")) {
      AggregativeRobot r;
      r.x_set = polytope_from_json(e.at("x_set"));
      const int n = r.x_set.dim();
      r.q = mat_from_json(e.at("q"), n);
      r.lin = vec_from_json(e.at("lin"));
      r.constant = e.value("constant", 0.0);
      r.sigma_weight = e.value("sigma_weight", 1.0);
      for (const auto& t : e.at("sigma_terms")) {
        r.sigma_terms.push_back(ScalarFunction::from_tag(t.at("kind").get<std::string>(), t.at("params")));
      }
      r.phi = mat_from_json(e.at("phi"), n);
      p.robots.push_back(std::move(r));
    }
    p.validate();
    return p;
  });
}

std::string problem_hash(const nlohmann::json& doc) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : doc.dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace swarmopt::problems

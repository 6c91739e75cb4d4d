#include "swarmopt/problems.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace swarmopt;
using namespace swarmopt::problems;
using solvers::LpSolution;
using solvers::solve_lp;

namespace {

// Stacks a constraint-coupled LP into one polytope (independent of the
// oracle module) and solves it.
LpSolution solve_stacked(const ConstraintCoupledProblem& p) {
  int n = 0;
  for (const auto& r : p.robots) n += r.dim();
  Polytope big = Polytope::box(Vec::Zero(n), Vec::Zero(n));
  Vec c(n);
  Mat g = Mat::Zero(p.coupling_dim, n);
  Vec h = Vec::Zero(p.coupling_dim);
  int off = 0;
  for (const auto& r : p.robots) {
    const int ni = r.dim();
    big.lower.segment(off, ni) = r.x_set.lower;
    big.upper.segment(off, ni) = r.x_set.upper;
    c.segment(off, ni) = r.c;
    for (int k = 0; k < r.x_set.eq_rows(); ++k) {
      Vec row = Vec::Zero(n);
      row.segment(off, ni) = r.x_set.a_eq.row(k).transpose();
      big.add_equality(row, r.x_set.b_eq(k));
    }
    for (int k = 0; k < r.x_set.ineq_rows(); ++k) {
      Vec row = Vec::Zero(n);
      row.segment(off, ni) = r.x_set.a_ineq.row(k).transpose();
      big.add_inequality(row, r.x_set.b_ineq(k));
    }
    g.middleCols(off, ni) = r.g;
    h += r.h;
    off += ni;
  }
  for (int k = 0; k < p.coupling_dim; ++k) {
    if (p.equality_rows[static_cast<std::size_t>(k)]) {
      big.add_equality(g.row(k).transpose(), h(k));
    } else {
      big.add_inequality(g.row(k).transpose(), h(k));
    }
  }
  return solve_lp(c, big);
}

Mat random_costs(Rng& rng, int n) {
  Mat c(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) c(i, j) = rng.uniform();
  }
  return c;
}

double relative_gradient_error(const Vec& analytic, const Vec& numeric) {
  return (analytic - numeric).norm() / std::max(1.0, numeric.norm());
}

}  // namespace

TEST_CASE("two-by-two task assignment has optimal cost 2") {
  Mat c(2, 2);
  c << 1, 2, 3, 1;
  const ConstraintCoupledProblem p = build_task_assignment(c);
  CHECK(p.size() == 2);
  CHECK(p.coupling_dim == 2);
  const LpSolution s = solve_stacked(p);
  REQUIRE(s.optimal());
  CHECK(s.objective == doctest::Approx(2.0));
  CHECK(testing_oracles::assignment_by_permutations(c).cost == doctest::Approx(2.0));
}

TEST_CASE("single robot single task") {
  const ConstraintCoupledProblem p = build_task_assignment(Mat::Constant(1, 1, 5.0));
  const LpSolution s = solve_stacked(p);
  REQUIRE(s.optimal());
  CHECK(s.x(0) == doctest::Approx(1.0));
  CHECK(s.objective == doctest::Approx(5.0));
}

TEST_CASE("task assignment relaxation is integral and matches the Hungarian method") {
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const Mat c = random_costs(rng, 4);
    const ConstraintCoupledProblem p = build_task_assignment(c);
    const LpSolution s = solve_stacked(p);
    REQUIRE(s.optimal());
    CHECK((s.x.array() - s.x.array().round()).abs().maxCoeff() <= 1e-6);
    const auto h = testing_oracles::hungarian(c);
    CHECK(std::abs(s.objective - h.cost) <= 1e-9);
    CHECK(std::abs(h.cost - testing_oracles::assignment_by_permutations(c).cost) <= 1e-12);
  }
}

TEST_CASE("task assignment honours the allowed-pair mask") {
  Mat c(2, 2);
  c << 1, 2, 3, 1;
  const std::vector<std::vector<bool>> allowed{{false, true}, {true, true}};
  const ConstraintCoupledProblem p = build_task_assignment(c, allowed);
  CHECK(p.robots[0].dim() == 1);
  CHECK(task_indices(p, 0) == std::vector<int>{1});
  CHECK(task_indices(p, 1) == std::vector<int>{0, 1});
  const LpSolution s = solve_stacked(p);
  CHECK(s.objective == doctest::Approx(5.0));

  const std::vector<std::vector<bool>> uncovered{{true, false}, {true, false}};
  CHECK_THROWS_AS(build_task_assignment(c, uncovered), InfeasibleError);
}

TEST_CASE("PEV with a flat price and a loose power limit") {
  PevData d;
  d.horizon = 6;
  d.dt = 0.5;
  d.prices = Vec::Constant(6, 10.0);
  d.p_max = 1e6;
  d.robots = {{2.0, 0.0, 10.0, 1.0, 4.0}};
  const ConstraintCoupledProblem p = build_pev_charging(d);
  const LpSolution s = solve_stacked(p);
  REQUIRE(s.optimal());
  // Energy needed 3 at rate P dt = 1 per full slot; cost = C * (E_ref - E_init) / dt.
  CHECK(s.objective == doctest::Approx(10.0 * 3.0 / 0.5));
}

TEST_CASE("PEV already charged costs nothing") {
  PevData d = random_pev_data(1, 4, 8);
  d.robots[0].e_ref = d.robots[0].e_init;
  const LpSolution s = solve_stacked(build_pev_charging(d));
  REQUIRE(s.optimal());
  CHECK(std::abs(s.objective) <= 1e-9);
}

TEST_CASE("PEV state recursion holds as equalities") {
  const PevData d = random_pev_data(3, 11);
  const ConstraintCoupledProblem p = build_pev_charging(d);
  Rng rng(1);
  for (int i = 0; i < 3; ++i) {
    const auto& rd = d.robots[static_cast<std::size_t>(i)];
    const int t = d.horizon;
    Vec x(2 * t + 1);
    x(0) = rd.e_init;
    for (int k = 0; k < t; ++k) {
      x(t + 1 + k) = rng.uniform();
      x(k + 1) = x(k) + rd.power * d.dt * x(t + 1 + k);
    }
    const auto& xs = p.robots[static_cast<std::size_t>(i)].x_set;
    CHECK((xs.a_eq * x - xs.b_eq).lpNorm<Eigen::Infinity>() <= 1e-12);
  }
}

TEST_CASE("PEV builder rejects unreachable targets") {
  PevData d = random_pev_data(2, 1, 4);
  d.robots[1].e_ref = d.robots[1].e_max;
  d.robots[1].e_init = 0.0;
  d.robots[1].power = 0.1;
  CHECK_THROWS_AS(build_pev_charging(d), InfeasibleError);
}

TEST_CASE("PEV random fleet has a binding power limit") {
  const PevData d = random_pev_data(5, 11);
  const ConstraintCoupledProblem p = build_pev_charging(d);
  const LpSolution s = solve_stacked(p);
  REQUIRE(s.optimal());
  // Dropping the coupling rows makes the problem strictly cheaper.
  ConstraintCoupledProblem loose = p;
  for (auto& r : loose.robots) r.h = Vec::Constant(d.horizon, 1e6);
  CHECK(solve_stacked(loose).objective < s.objective - 1e-6);
}

TEST_CASE("single-robot surveillance matches the clipped midpoint") {
  SurveillanceData d;
  d.r0 = Vec::Zero(3);
  Vec r1(3);
  r1 << 2.0, -3.0, 4.0;
  d.intruders = {r1};
  d.weights = Vec::Ones(1);
  d.betas = Vec::Ones(1);
  d.eps = Vec::Constant(3, 0.1);
  const AggregativeProblem p = build_target_surveillance(d);
  // f(x) = |x - r1|^2 + |x - r0|^2 is minimized at the midpoint.
  const Vec mid = 0.5 * (r1 + d.r0);
  const Vec expected = mid.cwiseMax(p.robots[0].x_set.lower).cwiseMin(p.robots[0].x_set.upper);
  CHECK(p.robots[0].x_set.contains(expected));
  const Vec g = p.gradient_block({expected}, 0);
  CHECK(g.norm() <= 1e-12);
}

TEST_CASE("surveillance box follows the intruder side per axis") {
  SurveillanceData d;
  d.r0 = Vec::Zero(2);
  Vec r1(2);
  r1 << 2.0, -3.0;
  d.intruders = {r1};
  d.weights = Vec::Ones(1);
  d.betas = Vec::Ones(1);
  d.eps = Vec::Constant(2, 0.5);
  const AggregativeProblem p = build_target_surveillance(d);
  CHECK(p.robots[0].x_set.lower(0) == 0.0);
  CHECK(p.robots[0].x_set.upper(0) == 1.5);
  CHECK(p.robots[0].x_set.lower(1) == -2.5);
  CHECK(p.robots[0].x_set.upper(1) == 0.0);
  d.eps(0) = 3.0;
  CHECK_THROWS_AS(build_target_surveillance(d), InfeasibleError);
}

TEST_CASE("surveillance aggregate gradient at the start") {
  const AggregativeProblem p = build_target_surveillance(random_surveillance_data(4, 2));
  const Vec x = p.robots[1].x_set.lower;
  const Vec s = p.robots[1].aggregate(x);
  CHECK((p.robots[1].grad_sigma(x, s) - 2.0 * (s - p.sigma_reference)).norm() <= 1e-12);
}

TEST_CASE("resource allocation gradients at the origin") {
  const ResourceAllocationData d = random_resource_allocation_data(10, 5);
  const AggregativeProblem p = build_resource_allocation(d);
  const Vec x = Vec::Zero(1);
  const Vec s = p.robots[0].aggregate(x);
  CHECK(s(0) == 0.0);
  CHECK(p.robots[0].grad_sigma(x, s)(0) == doctest::Approx(std::exp(-100.0) / 10.0).epsilon(1e-14));
  CHECK(p.admm_compatible());
  const auto shared = p.shared_sigma_terms();
  CHECK(shared[0].value(120.0) == doctest::Approx(std::exp(20.0)).epsilon(1e-13));
}

TEST_CASE("resource allocation with zero linear utilities is optimal at zero") {
  ResourceAllocationData d = random_resource_allocation_data(3, 1);
  d.r.setZero();
  const AggregativeProblem p = build_resource_allocation(d);
  const std::vector<Vec> x(3, Vec::Zero(1));
  for (int i = 0; i < 3; ++i) CHECK(p.gradient_block(x, i)(0) >= 0.0);
}

TEST_CASE("gradient audit on every aggregative builder") {
  Rng rng(17);
  // Sample from the part of each box where the exponential penalty stays
  // moderate; far above the budget central differences lose every digit.
  const std::vector<std::pair<AggregativeProblem, double>> problems{
      {build_resource_allocation(random_resource_allocation_data(10, 5)), 0.1},
      {build_resource_allocation(random_resource_allocation_data(4, 8, 5.0, 3.0)), 1.0},
      {build_target_surveillance(random_surveillance_data(5, 3)), 1.0}};
  for (const auto& [p, fraction] : problems) {
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<Vec> x;
      for (const auto& r : p.robots) {
        Vec xi(r.dim());
        for (int j = 0; j < r.dim(); ++j) {
          const double lo = r.x_set.lower(j);
          xi(j) = rng.uniform(lo, lo + fraction * (r.x_set.upper(j) - lo));
        }
        x.push_back(xi);
      }
      const Vec s = p.sigma(x);
      for (int i = 0; i < p.size(); ++i) {
        const auto& r = p.robots[static_cast<std::size_t>(i)];
        const Vec& xi = x[static_cast<std::size_t>(i)];
        const Vec g1 = testing_oracles::numeric_gradient([&](const Vec& v) { return r.value(v, s); }, xi);
        CHECK(relative_gradient_error(r.grad_local(xi, s), g1) <= 1e-5);
        const Vec g2 = testing_oracles::numeric_gradient([&](const Vec& v) { return r.value(xi, v); }, s);
        CHECK(relative_gradient_error(r.grad_sigma(xi, s), g2) <= 1e-5);
        const Vec gf = testing_oracles::numeric_gradient(
            [&](const Vec& v) {
              std::vector<Vec> y = x;
              y[static_cast<std::size_t>(i)] = v;
              return p.total_cost(y);
            },
            xi);
        CHECK(relative_gradient_error(p.gradient_block(x, i), gf) <= 1e-5);
      }
    }
  }
}

TEST_CASE("gradient audit on constraint-coupled builders") {
  const ConstraintCoupledProblem p = build_pev_charging(random_pev_data(2, 9));
  Rng rng(4);
  for (const auto& r : p.robots) {
    Vec x(r.dim());
    for (int j = 0; j < r.dim(); ++j) x(j) = rng.uniform(r.x_set.lower(j), r.x_set.upper(j));
    const Vec g = testing_oracles::numeric_gradient([&](const Vec& v) { return r.cost(v); }, x);
    CHECK(relative_gradient_error(r.cost_gradient(x), g) <= 1e-5);
  }
}

TEST_CASE("KL divergence closed form") {
  GaussianQoS a{Vec::Zero(1), Mat::Identity(1, 1), 1.0};
  GaussianQoS b{Vec::Ones(1), Mat::Identity(1, 1), 1.0};
  CHECK(kl_gaussian(a, b) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(std::abs(kl_gaussian(a, a)) <= 1e-15);

  GaussianQoS singular{Vec::Zero(2), Mat::Zero(2, 2), 1.0};
  GaussianQoS ok{Vec::Zero(2), Mat::Identity(2, 2), 1.0};
  CHECK_THROWS_AS(kl_gaussian(singular, ok), NumericError);
}

TEST_CASE("KL divergence is nonnegative and agrees with sampling") {
  Rng rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    auto random_pd = [&] {
      Mat m(2, 2);
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) m(i, j) = rng.normal();
      }
      return Mat(m * m.transpose() + 0.3 * Mat::Identity(2, 2));
    };
    GaussianQoS p{Vec::Zero(2), random_pd(), 1.0};
    GaussianQoS q{Vec::Zero(2), random_pd(), 1.0};
    p.mean << rng.normal(), rng.normal();
    q.mean << rng.normal(), rng.normal();
    const double kl = kl_gaussian(p, q);
    CHECK(kl >= 0.0);
    CHECK(std::abs(kl_gaussian(p, p)) <= 1e-12);
    const double mc = testing_oracles::kl_monte_carlo(p.mean, p.covariance, q.mean, q.covariance, 200000,
                                                      static_cast<std::uint64_t>(trial));
    CHECK(std::abs(kl - mc) <= 0.05 * (1.0 + kl));
  }
}

TEST_CASE("QoS cost table for matched distributions has a zero diagonal") {
  const auto clusters = demo_qos_clusters();
  const Mat c = qos_assignment_costs(clusters, clusters);
  for (int i = 0; i < 4; ++i) CHECK(std::abs(c(i, i)) <= 1e-12);
  const auto best = testing_oracles::assignment_by_permutations(c);
  CHECK(best.column_of_row == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("demo QoS table assignment is the permutation minimum") {
  const Mat c = qos_assignment_costs(demo_qos_robots(), demo_qos_clusters());
  const ConstraintCoupledProblem p = build_task_assignment(c);
  const LpSolution s = solve_stacked(p);
  REQUIRE(s.optimal());
  CHECK(s.objective == doctest::Approx(testing_oracles::assignment_by_permutations(c).cost));
}

TEST_CASE("scaling robot weights leaves the assignment unchanged") {
  auto robots = demo_qos_robots();
  const Mat c = qos_assignment_costs(robots, demo_qos_clusters());
  for (auto& r : robots) r.weight *= 3.0;
  const Mat c3 = qos_assignment_costs(robots, demo_qos_clusters());
  CHECK(((c - c3).array() - std::log(3.0)).abs().maxCoeff() <= 1e-12);
  CHECK(testing_oracles::assignment_by_permutations(c).column_of_row ==
        testing_oracles::assignment_by_permutations(c3).column_of_row);
}

TEST_CASE("random MILP restriction leaves a strictly feasible restricted LP") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const MilpProblem p = random_milp(seed);
    CHECK_NOTHROW(p.validate());
    CHECK(p.size() == 4);
    CHECK(p.coupling_dim() == 2);
    for (const auto& r : p.robots) CHECK(r.dim() <= 4);
    // x = 0 is in every X_i and leaves the slack b - sigma_ft > 0.
    CHECK(((p.b - p.sigma_ft).array() > 0.0).all());
  }
}

TEST_CASE("problem documents round trip through JSON") {
  const ConstraintCoupledProblem cc = build_pev_charging(random_pev_data(2, 3, 5));
  const auto doc = to_json(cc);
  CHECK(to_json(cc_problem_from_json(nlohmann::json::parse(doc.dump()))) == doc);

  const AggregativeProblem ag = build_target_surveillance(random_surveillance_data(3, 1));
  const auto adoc = to_json(ag);
  CHECK(to_json(aggregative_problem_from_json(nlohmann::json::parse(adoc.dump()))) == adoc);

  const MilpProblem mp = random_milp(4);
  const auto mdoc = to_json(mp);
  CHECK(to_json(milp_problem_from_json(mdoc)) == mdoc);

  CHECK(problem_hash(doc) == problem_hash(nlohmann::json::parse(doc.dump())));
  CHECK(problem_hash(doc) != problem_hash(adoc));
  CHECK(problem_hash(doc).size() == 16);
  CHECK_THROWS_AS(cc_problem_from_json(adoc), ParameterError);
}

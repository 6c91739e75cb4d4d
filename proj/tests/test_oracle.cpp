#include "swarmopt/oracle.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace swarmopt;
using namespace swarmopt::oracle;
using problems::AggregativeProblem;
using problems::ConstraintCoupledProblem;
using problems::CoupledRobot;
using problems::MilpProblem;
using problems::MilpRobot;
using solvers::Polytope;

namespace {

CoupledRobot box_robot(const Vec& c, const Mat& g, const Vec& h, const Vec& lo, const Vec& hi) {
  CoupledRobot r;
  r.c = c;
  r.g = g;
  r.h = h;
  r.x_set = Polytope::box(lo, hi);
  r.mask = solvers::IntegralityMask(static_cast<int>(c.size()));
  return r;
}

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

// Two planar robots in boxes sharing one budget row.
ConstraintCoupledProblem two_box_problem(Rng& rng, double budget) {
  ConstraintCoupledProblem p;
  p.coupling_dim = 1;
  p.equality_rows = {false};
  for (int i = 0; i < 2; ++i) {
    Mat g(1, 2);
    g << rng.uniform(0.2, 1.0), rng.uniform(0.2, 1.0);
    p.robots.push_back(box_robot(v2(-rng.uniform(), -rng.uniform()), g, Vec::Constant(1, budget / 2.0),
                                 Vec::Zero(2), v2(rng.uniform(1.0, 3.0), rng.uniform(1.0, 3.0))));
  }
  return p;
}

Polytope stacked_polytope(const ConstraintCoupledProblem& p) {
  Polytope big = Polytope::box(Vec::Zero(4), Vec::Zero(4));
  big.lower << p.robots[0].x_set.lower, p.robots[1].x_set.lower;
  big.upper << p.robots[0].x_set.upper, p.robots[1].x_set.upper;
  Vec row(4);
  row << p.robots[0].g.row(0).transpose(), p.robots[1].g.row(0).transpose();
  big.add_inequality(row, p.robots[0].h(0) + p.robots[1].h(0));
  return big;
}

double newton_scalar(double q2, double r, double b) {
  // Root of q2 x + r + exp(x - b) = 0.
  double x = 0.0;
  for (int k = 0; k < 100; ++k) x -= (q2 * x + r + std::exp(x - b)) / (q2 + std::exp(x - b));
  return x;
}

}  // namespace

TEST_CASE("stacked LP oracle agrees with vertex enumeration") {
  Rng rng(12);
  for (int trial = 0; trial < 40; ++trial) {
    const auto p = two_box_problem(rng, rng.uniform(0.5, 3.0));
    const OracleSolution sol = solve_cc_centralized(p);
    Vec c(4);
    c << p.robots[0].c, p.robots[1].c;
    const auto ref = testing_oracles::lp_by_vertices(c, stacked_polytope(p));
    REQUIRE(ref.has_value());
    CHECK(std::abs(sol.f_star - *ref) <= 1e-8);
    CHECK(sol.residual <= 1e-8);
    CHECK(sol.method == "stacked_lp");
  }
}

TEST_CASE("slack coupling separates into per-robot optima") {
  Rng rng(5);
  const auto p = two_box_problem(rng, 1e6);
  const OracleSolution sol = solve_cc_centralized(p);
  double separate = 0.0;
  for (const auto& r : p.robots) separate += solvers::solve_lp(r.c, r.x_set).objective;
  CHECK(sol.f_star == doctest::Approx(separate).epsilon(1e-12));
}

TEST_CASE("task assignment oracle equals the Hungarian method") {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    Mat c(4, 4);
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) c(i, j) = rng.uniform();
    }
    const OracleSolution sol = solve_cc_centralized(problems::build_task_assignment(c));
    CHECK(std::abs(sol.f_star - testing_oracles::hungarian(c).cost) <= 1e-9);
  }
}

TEST_CASE("stacked oracle reports infeasible coupling") {
  Rng rng(2);
  auto p = two_box_problem(rng, -1.0);
  CHECK_THROWS_AS(solve_cc_centralized(p), InfeasibleError);
}

TEST_CASE("quadratic local costs go through the stacked QP") {
  Rng rng(3);
  auto p = two_box_problem(rng, 1.0);
  for (auto& r : p.robots) {
    r.kind = problems::CostKind::kQuadratic;
    r.q = Mat::Identity(2, 2);
  }
  const OracleSolution sol = solve_cc_centralized(p);
  CHECK(sol.method == "stacked_qp");
  CHECK(sol.residual <= 1e-8);
}

TEST_CASE("one-robot resource allocation matches scalar Newton") {
  problems::ResourceAllocationData d;
  d.q = Vec::Ones(1);
  d.r = Vec::Constant(1, -1.0);
  d.budget = 1e3;
  const OracleSolution sol = solve_agg_centralized(problems::build_resource_allocation(d));
  CHECK(std::abs(sol.x_star(0) - 1.0) <= 1e-9);

  d.budget = 1.5;
  const OracleSolution tight = solve_agg_centralized(problems::build_resource_allocation(d));
  CHECK(std::abs(tight.x_star(0) - newton_scalar(1.0, -1.0, 1.5)) <= 1e-9);
}

TEST_CASE("ten-robot resource allocation satisfies stationarity") {
  const auto data = problems::random_resource_allocation_data(10, 5);
  const auto p = problems::build_resource_allocation(data);
  const OracleSolution sol = solve_agg_centralized(p);
  CHECK(sol.residual <= 1e-10);
  const double s = sol.x_star.sum();
  for (int i = 0; i < 10; ++i) {
    // Scalar stationarity with the shared penalty held at its optimum.
    const double xi = std::clamp(-(data.r(i) + std::exp(s - data.budget)) / (data.q(i) * data.q(i)), 0.0, 100.0);
    CHECK(std::abs(sol.x_star(i) - xi) <= 1e-9);
  }
}

TEST_CASE("identical surveillance robots land on the same point") {
  auto d = problems::random_surveillance_data(3, 6);
  d.intruders[1] = d.intruders[0];
  d.intruders[2] = d.intruders[0];
  d.weights.setConstant(d.weights(0));
  d.betas.setConstant(d.betas(0));
  const auto p = problems::build_target_surveillance(d);
  const OracleSolution sol = solve_agg_centralized(p);
  CHECK((sol.x_star.segment(0, 3) - sol.x_star.segment(3, 3)).norm() <= 1e-8);
  CHECK((sol.x_star.segment(0, 3) - sol.x_star.segment(6, 3)).norm() <= 1e-8);
}

TEST_CASE("projected gradient agrees with the stacked QP on a quadratic instance") {
  const auto p = problems::build_target_surveillance(problems::random_surveillance_data(4, 9));
  const OracleSolution pg = solve_agg_centralized(p);
  // The cost is quadratic, so its Hessian columns are gradient differences.
  const std::vector<int> dims = robot_dims(p);
  const int n = 12;
  auto grad = [&](const Vec& x) {
    const auto blocks = split_blocks(x, dims);
    std::vector<Vec> g;
    for (int i = 0; i < p.size(); ++i) g.push_back(p.gradient_block(blocks, i));
    return stack_blocks(g);
  };
  const Vec g0 = grad(Vec::Zero(n));
  Mat h(n, n);
  for (int j = 0; j < n; ++j) h.col(j) = grad(Vec::Unit(n, j)) - g0;
  Polytope box = Polytope::box(Vec::Zero(n), Vec::Zero(n));
  for (int i = 0; i < 4; ++i) {
    box.lower.segment(3 * i, 3) = p.robots[static_cast<std::size_t>(i)].x_set.lower;
    box.upper.segment(3 * i, 3) = p.robots[static_cast<std::size_t>(i)].x_set.upper;
  }
  const auto qp = solvers::solve_qp(0.5 * (h + h.transpose()), g0, box);
  CHECK((qp.x - pg.x_star).norm() <= 1e-8);
}

TEST_CASE("a stationary start returns immediately") {
  problems::ResourceAllocationData d;
  d.q = Vec::Ones(3);
  d.r = Vec::Zero(3);
  ProjectedGradientOptions opts;
  opts.max_iterations = 0;
  const OracleSolution sol = solve_agg_centralized(problems::build_resource_allocation(d), opts);
  CHECK(sol.x_star.isZero());
  CHECK(sol.residual == 0.0);
}

TEST_CASE("MILP enumeration agrees with branch and bound") {
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    const MilpProblem p = problems::random_milp(seed);
    const OracleSolution en = enumerate_milp(p);
    // Stack into one MILP for the branch-and-bound solver.
    std::vector<Vec> cs;
    int n = 0;
    for (const auto& r : p.robots) n += r.dim();
    Polytope big = Polytope::box(Vec::Zero(n), Vec::Ones(n));
    Vec c(n);
    Mat a(p.coupling_dim(), n);
    int off = 0;
    for (const auto& r : p.robots) {
      c.segment(off, r.dim()) = r.c;
      a.middleCols(off, r.dim()) = r.a;
      for (int k = 0; k < r.x_set.ineq_rows(); ++k) {
        Vec row = Vec::Zero(n);
        row.segment(off, r.dim()) = r.x_set.a_ineq.row(k).transpose();
        big.add_inequality(row, r.x_set.b_ineq(k));
      }
      off += r.dim();
    }
    for (int k = 0; k < p.coupling_dim(); ++k) big.add_inequality(a.row(k).transpose(), p.b(k));
    const auto bb = solvers::solve_milp_bb(c, big, solvers::IntegralityMask(n, true));
    CHECK(std::abs(en.f_star - bb.solution.objective) <= 1e-9);
    CHECK(((a * en.x_star - p.b).array() <= 1e-9).all());
  }
}

TEST_CASE("MILP enumeration edge cases") {
  MilpRobot r;
  r.c = v2(-1.0, -2.0);
  r.x_set = Polytope::box(Vec::Zero(2), Vec::Ones(2));
  r.x_set.add_inequality(Vec::Ones(2), 1.0);
  r.mask = solvers::IntegralityMask(2, true);
  r.a = Mat::Zero(0, 2);
  MilpProblem single;
  single.robots = {r};
  single.b = Vec::Zero(0);
  single.sigma_ft = Vec::Zero(0);
  const OracleSolution s = enumerate_milp(single);
  CHECK(s.f_star == -2.0);
  CHECK(s.x_star == v2(0.0, 1.0));

  MilpProblem blocked = single;
  blocked.robots[0].a = Mat::Constant(1, 2, -1.0);
  blocked.b = Vec::Constant(1, -3.0);
  blocked.sigma_ft = Vec::Zero(1);
  CHECK_THROWS_AS(enumerate_milp(blocked), InfeasibleError);

  MilpProblem wide;
  for (int i = 0; i < 6; ++i) {
    MilpRobot w;
    w.c = -Vec::Ones(4);
    w.x_set = Polytope::box(Vec::Zero(4), Vec::Ones(4));
    w.mask = solvers::IntegralityMask(4, true);
    w.a = Mat::Ones(1, 4);
    wide.robots.push_back(w);
  }
  wide.b = Vec::Constant(1, 100.0);
  wide.sigma_ft = Vec::Zero(1);
  CHECK_THROWS_AS(enumerate_milp(wide), ResourceError);
}

TEST_CASE("MILP enumeration with a continuous remainder") {
  MilpRobot r;
  r.c = v2(-1.0, -1.0);
  r.x_set = Polytope::box(Vec::Zero(2), v2(1.0, 2.5));
  r.mask = solvers::IntegralityMask(std::vector<bool>{true, false});
  r.a = Mat::Ones(1, 2);
  MilpProblem p;
  p.robots = {r, r};
  p.b = Vec::Constant(1, 4.2);
  p.sigma_ft = Vec::Zero(1);
  const OracleSolution s = enumerate_milp(p);
  CHECK(s.f_star == doctest::Approx(-4.2));
}

TEST_CASE("fixtures persist by problem hash") {
  const auto dir = std::filesystem::temp_directory_path() / "swarmopt_fixture_test";
  std::filesystem::remove_all(dir);
  const auto p = problems::build_resource_allocation(problems::random_resource_allocation_data(3, 1));
  const std::string hash = problems::problem_hash(problems::to_json(p));
  CHECK_FALSE(load_fixture(dir, hash).has_value());
  const OracleSolution sol = solve_agg_centralized(p);
  save_fixture(dir, hash, sol);
  const auto back = load_fixture(dir, hash);
  REQUIRE(back.has_value());
  CHECK(back->x_star == sol.x_star);
  CHECK(back->f_star == sol.f_star);
  CHECK(back->method == sol.method);
  CHECK(back->residual == sol.residual);

  std::filesystem::copy_file(fixture_path(dir, hash), fixture_path(dir, "0000000000000000"));
  CHECK_THROWS_AS(load_fixture(dir, "0000000000000000"), ConfigError);
  std::ofstream(fixture_path(dir, "1111111111111111")) << "{ not json";
  CHECK_THROWS_AS(load_fixture(dir, "1111111111111111"), ConfigError);
  std::filesystem::remove_all(dir);
}

#include "swarmopt/oracle.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace swarmopt::oracle {

using problems::AggregativeProblem;
using problems::ConstraintCoupledProblem;
using problems::MilpProblem;
using solvers::LpSolution;
using solvers::LpStatus;
using solvers::Polytope;

namespace {

// Block-diagonal product of the local sets; coupling rows are added by callers.
Polytope product_set(const std::vector<const Polytope*>& sets) {
  int n = 0;
  int ni = 0;
  int ne = 0;
  for (const Polytope* p : sets) {
    n += p->dim();
    ni += p->ineq_rows();
    ne += p->eq_rows();
  }
  Polytope out;
  out.lower.resize(n);
  out.upper.resize(n);
  out.a_ineq = Mat::Zero(ni, n);
  out.b_ineq.resize(ni);
  out.a_eq = Mat::Zero(ne, n);
  out.b_eq.resize(ne);
  int col = 0;
  int ri = 0;
  int re = 0;
  for (const Polytope* p : sets) {
    const int d = p->dim();
    out.lower.segment(col, d) = p->lower;
    out.upper.segment(col, d) = p->upper;
    out.a_ineq.block(ri, col, p->ineq_rows(), d) = p->a_ineq;
    out.b_ineq.segment(ri, p->ineq_rows()) = p->b_ineq;
    out.a_eq.block(re, col, p->eq_rows(), d) = p->a_eq;
    out.b_eq.segment(re, p->eq_rows()) = p->b_eq;
    col += d;
    ri += p->ineq_rows();
    re += p->eq_rows();
  }
  return out;
}

void append_rows(Polytope& p, const Mat& a, const Vec& b, bool equality) {
  Mat& dst = equality ? p.a_eq : p.a_ineq;
  Vec& rhs = equality ? p.b_eq : p.b_ineq;
  const Eigen::Index old = dst.rows();
  dst.conservativeResize(old + a.rows(), Eigen::NoChange);
  dst.bottomRows(a.rows()) = a;
  rhs.conservativeResize(old + b.size());
  rhs.tail(b.size()) = b;
}

void throw_status(LpStatus status, const char* what) {
  if (status == LpStatus::kUnbounded) throw UnboundedError(std::string(what) + " is unbounded");
  throw InfeasibleError(std::string(what) + " is infeasible");
}

}  // namespace

std::vector<Vec> split_blocks(const Vec& stacked, const std::vector<int>& dims) {
  std::vector<Vec> out;
  Eigen::Index off = 0;
  for (int d : dims) {
    if (off + d > stacked.size()) throw ParameterError("stacked vector is shorter than the block sizes");
    out.emplace_back(stacked.segment(off, d));
    off += d;
  }
  if (off != stacked.size()) throw ParameterError("stacked vector is longer than the block sizes");
  return out;
}

Vec stack_blocks(const std::vector<Vec>& blocks) {
  Eigen::Index n = 0;
  for (const Vec& b : blocks) n += b.size();
  Vec out(n);
  Eigen::Index off = 0;
  for (const Vec& b : blocks) {
    out.segment(off, b.size()) = b;
    off += b.size();
  }
  return out;
}

std::vector<int> robot_dims(const ConstraintCoupledProblem& p) {
  std::vector<int> d;
  for (const auto& r : p.robots) d.push_back(r.dim());
  return d;
}

std::vector<int> robot_dims(const AggregativeProblem& p) {
  std::vector<int> d;
  for (const auto& r : p.robots) d.push_back(r.dim());
  return d;
}

std::vector<int> robot_dims(const MilpProblem& p) {
  std::vector<int> d;
  for (const auto& r : p.robots) d.push_back(r.dim());
  return d;
}

// ---------------------------------------------------------------------------

OracleSolution solve_cc_centralized(const ConstraintCoupledProblem& problem) {
  problem.validate();
  if (problem.mixed_integer()) throw UnsupportedError("centralized oracle needs continuous local sets");
  std::vector<const Polytope*> sets;
  for (const auto& r : problem.robots) sets.push_back(&r.x_set);
  Polytope big = product_set(sets);
  const int n = big.dim();

  Vec c(n);
  Mat g(problem.coupling_dim, n);
  Vec h = Vec::Zero(problem.coupling_dim);
  Mat q = Mat::Zero(n, n);
  bool quadratic = false;
  int off = 0;
  for (const auto& r : problem.robots) {
    const int d = r.dim();
    c.segment(off, d) = r.c;
    g.middleCols(off, d) = r.g;
    h += r.h;
    if (r.kind == problems::CostKind::kQuadratic) {
      q.block(off, off, d, d) = r.q;
      quadratic = true;
    }
    off += d;
  }
  for (int k = 0; k < problem.coupling_dim; ++k) {
    append_rows(big, g.row(k), Vec::Constant(1, h(k)), problem.equality_rows[static_cast<std::size_t>(k)]);
  }

  const LpSolution sol = quadratic ? solvers::solve_qp(q, c, big) : solvers::solve_lp(c, big);
  if (!sol.optimal()) throw_status(sol.status, "stacked problem");
  OracleSolution out;
  out.x_star = sol.x;
  out.f_star = problem.total_cost(split_blocks(sol.x, robot_dims(problem)));
  out.method = quadratic ? "stacked_qp" : "stacked_lp";
  out.residual = solvers::kkt_residual(quadratic ? q : Mat(), c, big, sol);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

Vec project_product(const AggregativeProblem& p, const Vec& x, const std::vector<int>& dims) {
  std::vector<Vec> blocks = split_blocks(x, dims);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const Polytope& set = p.robots[i].x_set;
    blocks[i] = set.bounds_only() ? solvers::project_box(blocks[i], set.lower, set.upper)
                                  : solvers::project_polytope(blocks[i], set);
  }
  return stack_blocks(blocks);
}

Vec full_gradient(const AggregativeProblem& p, const Vec& x, const std::vector<int>& dims) {
  const std::vector<Vec> blocks = split_blocks(x, dims);
  const Vec s = p.sigma(blocks);
  Vec mean_grad = Vec::Zero(p.aggregate_dim);
  for (std::size_t j = 0; j < blocks.size(); ++j) mean_grad += p.robots[j].grad_sigma(blocks[j], s);
  mean_grad /= static_cast<double>(blocks.size());
  std::vector<Vec> g(blocks.size());
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    g[i] = p.robots[i].grad_local(blocks[i], s) + p.robots[i].phi.transpose() * mean_grad;
  }
  return stack_blocks(g);
}

}  // namespace

OracleSolution solve_agg_centralized(const AggregativeProblem& problem, const ProjectedGradientOptions& options) {
  problem.validate();
  const std::vector<int> dims = robot_dims(problem);
  const int n = [&] {
    int total = 0;
    for (int d : dims) total += d;
    return total;
  }();

  Vec x = project_product(problem, Vec::Zero(n), dims);
  Vec g = full_gradient(problem, x, dims);
  double step = 1.0;
  double residual = (x - project_product(problem, x - g, dims)).norm();
  long it = 0;
  while (residual > options.tol) {
    if (++it > options.max_iterations) {
      throw ResourceError("projected gradient stopped at residual " + std::to_string(residual));
    }
    if (!g.allFinite()) throw NumericError("projected gradient produced a non-finite gradient");
    // Backtrack until the gradient change over the step is bounded by 1/step,
    // a local Lipschitz test that stays meaningful near the optimum where
    // function differences drown in rounding.
    Vec x_new;
    Vec g_new;
    for (int tries = 0;; ++tries) {
      x_new = project_product(problem, x - step * g, dims);
      g_new = full_gradient(problem, x_new, dims);
      const double d = (x_new - x).norm();
      if (g_new.allFinite() && step * (g_new - g).norm() <= d) break;
      step *= 0.5;
      if (tries > 200) throw NumericError("projected gradient backtracking failed");
    }
    x = std::move(x_new);
    g = std::move(g_new);
    step *= 1.25;
    residual = (x - project_product(problem, x - g, dims)).norm();
  }
  OracleSolution out;
  out.x_star = x;
  out.f_star = problem.total_cost(split_blocks(x, dims));
  out.method = "projected_gradient";
  out.residual = residual;
  return out;
}

// ---------------------------------------------------------------------------

OracleSolution enumerate_milp(const MilpProblem& problem, int max_integer_bits) {
  problem.validate();
  const std::vector<int> dims = robot_dims(problem);
  std::vector<const Polytope*> sets;
  for (const auto& r : problem.robots) sets.push_back(&r.x_set);
  const Polytope base = product_set(sets);
  const int n = base.dim();
  const int s = problem.coupling_dim();

  Vec c(n);
  Mat a(s, n);
  std::vector<int> int_cols;
  std::vector<long> lo;
  std::vector<long> count;
  double bits = 0.0;
  int off = 0;
  for (const auto& r : problem.robots) {
    c.segment(off, r.dim()) = r.c;
    a.middleCols(off, r.dim()) = r.a;
    for (int j = 0; j < r.dim(); ++j) {
      if (!r.mask[j]) continue;
      const double l = std::ceil(r.x_set.lower(j) - tol::kIntegrality);
      const double u = std::floor(r.x_set.upper(j) + tol::kIntegrality);
      if (!std::isfinite(l) || !std::isfinite(u)) throw ResourceError("integer coordinate without finite bounds");
      if (u < l) throw InfeasibleError("integer coordinate has an empty range");
      int_cols.push_back(off + j);
      lo.push_back(static_cast<long>(l));
      count.push_back(static_cast<long>(u - l) + 1);
      bits += std::log2(static_cast<double>(count.back()));
    }
    off += r.dim();
  }
  if (bits > max_integer_bits + 1e-9) {
    throw ResourceError("enumeration needs " + std::to_string(bits) + " integer bits, budget " +
                        std::to_string(max_integer_bits));
  }
  const bool pure = static_cast<int>(int_cols.size()) == n;

  Polytope fixed = base;
  append_rows(fixed, a, problem.b, false);

  OracleSolution best;
  best.f_star = kInf;
  std::vector<long> digit(int_cols.size(), 0);
  Vec x(n);
  for (;;) {
    for (std::size_t k = 0; k < int_cols.size(); ++k) {
      const double v = static_cast<double>(lo[k] + digit[k]);
      fixed.lower(int_cols[k]) = v;
      fixed.upper(int_cols[k]) = v;
      x(int_cols[k]) = v;
    }
    if (pure) {
      if (fixed.contains(x) && c.dot(x) < best.f_star) {
        best.f_star = c.dot(x);
        best.x_star = x;
      }
    } else {
      const LpSolution sol = solvers::solve_lp(c, fixed);
      if (sol.status == LpStatus::kUnbounded) throw UnboundedError("continuous remainder is unbounded");
      if (sol.optimal() && sol.objective < best.f_star) {
        best.f_star = sol.objective;
        best.x_star = sol.x;
      }
    }
    std::size_t k = 0;
    while (k < digit.size() && ++digit[k] == count[k]) digit[k++] = 0;
    if (k == digit.size()) break;
  }
  if (!std::isfinite(best.f_star)) throw InfeasibleError("no integer assignment satisfies the constraints");
  best.f_star = problem.total_cost(split_blocks(best.x_star, dims));
  best.method = "enumeration";
  best.residual = 0.0;
  return best;
}

// ---------------------------------------------------------------------------

nlohmann::json fixture_to_json(const std::string& problem_hash, const OracleSolution& sol) {
  return {{"problem_hash", problem_hash},
          {"x_star", solvers::vec_to_json(sol.x_star)},
          {"f_star", sol.f_star},
          {"method", sol.method},
          {"residual", sol.residual}};
}

OracleSolution fixture_from_json(const nlohmann::json& doc) {
  try {
    OracleSolution s;
    s.x_star = solvers::vec_from_json(doc.at("x_star"));
    s.f_star = doc.at("f_star").get<double>();
    s.method = doc.at("method").get<std::string>();
    s.residual = doc.at("residual").get<double>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed fixture: ") + e.what());
  }
}

std::filesystem::path fixture_path(const std::filesystem::path& dir, const std::string& problem_hash) {
  return dir / (problem_hash + ".json");
}

void save_fixture(const std::filesystem::path& dir, const std::string& problem_hash, const OracleSolution& sol) {
  std::filesystem::create_directories(dir);
  const auto target = fixture_path(dir, problem_hash);
  auto tmp = target;
  tmp += ".tmp";
  {
    std::ofstream f(tmp);
    if (!f) throw ResourceError("cannot write " + tmp.string());
    f << fixture_to_json(problem_hash, sol).dump(2) << '\n';
    if (!f) throw ResourceError("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, target);
}

std::optional<OracleSolution> load_fixture(const std::filesystem::path& dir, const std::string& problem_hash) {
  const auto path = fixture_path(dir, problem_hash);
  if (!std::filesystem::exists(path)) return std::nullopt;
  std::ifstream f(path);
  nlohmann::json doc;
  try {
    f >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
  if (doc.value("problem_hash", std::string()) != problem_hash) {
    throw ConfigError(path.string() + " belongs to a different problem");
  }
  return fixture_from_json(doc);
}

}  // namespace swarmopt::oracle

// Primal active-set method for convex quadratic programs.
//
// All constraints (rows and finite bounds) are collected as a_k' x <= b_k or
// a_k' x = b_k. Starting from a feasible vertex produced by the simplex, the
// method minimizes over the null space of the working set, adds the first
// blocking constraint, and drops the working constraint with the most
// negative multiplier. Zero-curvature directions are followed to the
// boundary, which is how PSD (not only PD) Hessians are handled.

#include "swarmopt/local_solvers.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>

namespace swarmopt::solvers {

namespace {

enum class Family { kIneq, kEq, kLower, kUpper };

struct Row {
  Family family;
  int index;
  Vec a;
  double b;
};

std::vector<Row> collect_rows(const Polytope& p) {
  std::vector<Row> rows;
  const int n = p.dim();
  for (int i = 0; i < p.eq_rows(); ++i) rows.push_back({Family::kEq, i, p.a_eq.row(i).transpose(), p.b_eq(i)});
  for (int i = 0; i < p.ineq_rows(); ++i) {
    rows.push_back({Family::kIneq, i, p.a_ineq.row(i).transpose(), p.b_ineq(i)});
  }
  for (int j = 0; j < n; ++j) {
    if (std::isfinite(p.lower(j))) rows.push_back({Family::kLower, j, -Vec::Unit(n, j), -p.lower(j)});
    if (std::isfinite(p.upper(j))) rows.push_back({Family::kUpper, j, Vec::Unit(n, j), p.upper(j)});
  }
  return rows;
}

Mat stack_rows(const std::vector<Row>& rows, const std::vector<int>& work, int n) {
  Mat a(static_cast<Eigen::Index>(work.size()), n);
  for (std::size_t k = 0; k < work.size(); ++k) a.row(static_cast<Eigen::Index>(k)) = rows[static_cast<std::size_t>(work[k])].a.transpose();
  return a;
}

// Orthonormal basis of {p : A p = 0}.
Mat null_space(const Mat& a, int n) {
  if (a.rows() == 0) return Mat::Identity(n, n);
  Eigen::FullPivHouseholderQR<Mat> qr(a.transpose());
  qr.setThreshold(1e-10);
  const auto rank = qr.rank();
  const Mat q = qr.matrixQ();
  return q.rightCols(n - rank);
}

int matrix_rank(const Mat& a) {
  if (a.rows() == 0) return 0;
  Eigen::FullPivHouseholderQR<Mat> qr(a);
  qr.setThreshold(1e-10);
  return static_cast<int>(qr.rank());
}

// Bounds-only problem with diagonal Hessian: coordinatewise clamp.
LpSolution solve_separable(const Mat& q, const Vec& c, const Polytope& p) {
  const int n = p.dim();
  LpSolution out;
  out.x = Vec(n);
  out.ineq_multipliers = Vec(0);
  out.eq_multipliers = Vec(0);
  out.lower_multipliers = Vec::Zero(n);
  out.upper_multipliers = Vec::Zero(n);
  for (int j = 0; j < n; ++j) {
    const double d = q(j, j);
    double x;
    if (d > 0.0) {
      x = std::clamp(-c(j) / d, p.lower(j), p.upper(j));
    } else if (c(j) > 0.0) {
      x = p.lower(j);
    } else if (c(j) < 0.0) {
      x = p.upper(j);
    } else {
      x = std::clamp(0.0, p.lower(j), p.upper(j));
    }
    if (!std::isfinite(x)) throw UnboundedError("quadratic program is unbounded below");
    out.x(j) = x;
    const double r = d * x + c(j);
    if (r > 0.0) out.lower_multipliers(j) = r;
    if (r < 0.0) out.upper_multipliers(j) = -r;
  }
  out.objective = 0.5 * out.x.dot(q * out.x) + c.dot(out.x);
  out.status = LpStatus::kOptimal;
  return out;
}

}  // namespace

LpSolution solve_qp(const Mat& q, const Vec& c, const Polytope& p) {
  p.validate();
  const int n = p.dim();
  if (q.rows() != n || q.cols() != n || c.size() != n) {
    throw ParameterError("quadratic program dimensions do not match polytope");
  }
  const Mat qs = 0.5 * (q + q.transpose());
  const double qscale = std::max(1.0, qs.size() ? qs.lpNorm<Eigen::Infinity>() : 0.0);
  if (n > 0) {
    Eigen::SelfAdjointEigenSolver<Mat> eig(qs, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -tol::kPsd) {
      throw ParameterError("quadratic term is not positive semidefinite");
    }
  }
  const bool diagonal = (qs - Mat(qs.diagonal().asDiagonal())).lpNorm<Eigen::Infinity>() == 0.0;
  if (p.bounds_only() && diagonal) return solve_separable(qs, c, p);

  // Feasible starting vertex.
  LpSolution start = solve_lp(c, p);
  if (start.status == LpStatus::kUnbounded) start = solve_lp(Vec::Zero(n), p);
  if (start.status == LpStatus::kInfeasible) throw InfeasibleError("quadratic program is infeasible");
  Vec x = start.x;

  const std::vector<Row> rows = collect_rows(p);
  const int m = static_cast<int>(rows.size());
  auto scale_of = [](const Row& r) { return 1.0 + std::abs(r.b); };

  // Initial working set: equalities, then active inequalities, kept
  // linearly independent.
  std::vector<int> work;
  std::vector<bool> in_work(static_cast<std::size_t>(m), false);
  for (int k = 0; k < m; ++k) {
    const Row& r = rows[static_cast<std::size_t>(k)];
    const bool active = r.family == Family::kEq || std::abs(r.a.dot(x) - r.b) <= 1e-9 * scale_of(r);
    if (!active) continue;
    std::vector<int> trial = work;
    trial.push_back(k);
    if (matrix_rank(stack_rows(rows, trial, n)) == static_cast<int>(trial.size())) {
      work = std::move(trial);
      in_work[static_cast<std::size_t>(k)] = true;
    }
  }

  const int cap = 50 * (n + m) + 1000;
  Vec lambda;
  bool converged = false;
  for (int iter = 0; iter < cap; ++iter) {
    const Vec g = qs * x + c;
    const double gscale = 1.0 + g.lpNorm<Eigen::Infinity>();
    const Mat aw = stack_rows(rows, work, n);
    const Mat z = null_space(aw, n);

    Vec step = Vec::Zero(n);
    bool unbounded_ray = false;
    if (z.cols() > 0) {
      const Vec gz = z.transpose() * g;
      const Mat h = z.transpose() * qs * z;
      Eigen::SelfAdjointEigenSolver<Mat> eig(h);
      const Vec& ev = eig.eigenvalues();
      const Mat& vecs = eig.eigenvectors();
      Vec ray = Vec::Zero(z.cols());
      Vec newton = Vec::Zero(z.cols());
      for (Eigen::Index k = 0; k < ev.size(); ++k) {
        const double proj = vecs.col(k).dot(gz);
        if (ev(k) > 1e-10 * qscale) {
          newton -= (proj / ev(k)) * vecs.col(k);
        } else if (std::abs(proj) > 1e-11 * gscale) {
          ray -= proj * vecs.col(k);
        }
      }
      if (ray.size() > 0 && ray.norm() > 0.0) {
        step = z * ray;
        unbounded_ray = true;
      } else {
        step = z * newton;
      }
    }

    if (!unbounded_ray && step.lpNorm<Eigen::Infinity>() <= 1e-13 * (1.0 + x.lpNorm<Eigen::Infinity>())) {
      // Stationary on the working set: check multiplier signs.
      if (work.empty()) {
        lambda = Vec(0);
        converged = true;
        break;
      }
      lambda = aw.transpose().completeOrthogonalDecomposition().solve(-g);
      int drop = -1;
      double most_negative = -1e-10 * gscale;
      for (std::size_t k = 0; k < work.size(); ++k) {
        if (rows[static_cast<std::size_t>(work[k])].family == Family::kEq) continue;
        if (lambda(static_cast<Eigen::Index>(k)) < most_negative) {
          most_negative = lambda(static_cast<Eigen::Index>(k));
          drop = static_cast<int>(k);
        }
      }
      if (drop < 0) {
        converged = true;
        break;
      }
      in_work[static_cast<std::size_t>(work[static_cast<std::size_t>(drop)])] = false;
      work.erase(work.begin() + drop);
      continue;
    }

    // Ratio test against constraints outside the working set.
    double alpha = unbounded_ray ? kInf : 1.0;
    int blocking = -1;
    const double pnorm = step.norm();
    for (int k = 0; k < m; ++k) {
      if (in_work[static_cast<std::size_t>(k)]) continue;
      const Row& r = rows[static_cast<std::size_t>(k)];
      if (r.family == Family::kEq) continue;
      const double ap = r.a.dot(step);
      if (ap <= 1e-12 * pnorm * r.a.norm()) continue;
      const double t = std::max(0.0, r.b - r.a.dot(x)) / ap;
      if (t < alpha) {
        alpha = t;
        blocking = k;
      }
    }
    if (!std::isfinite(alpha)) throw UnboundedError("quadratic program is unbounded below");
    x += alpha * step;
    if (blocking >= 0) {
      work.push_back(blocking);
      in_work[static_cast<std::size_t>(blocking)] = true;
    }
  }
  if (!converged) throw InternalError("active-set iteration cap exceeded");

  // Polish: re-solve the KKT system of the final working set and keep the
  // result when it stays feasible and is at least as good.
  const Mat aw = stack_rows(rows, work, n);
  const int w = static_cast<int>(work.size());
  {
    Mat kkt = Mat::Zero(n + w, n + w);
    kkt.topLeftCorner(n, n) = qs;
    kkt.topRightCorner(n, w) = aw.transpose();
    kkt.bottomLeftCorner(w, n) = aw;
    Vec rhs(n + w);
    rhs.head(n) = -c;
    for (int k = 0; k < w; ++k) rhs(n + k) = rows[static_cast<std::size_t>(work[static_cast<std::size_t>(k)])].b;
    const Vec sol = kkt.completeOrthogonalDecomposition().solve(rhs);
    const Vec xp = sol.head(n);
    auto obj = [&](const Vec& v) { return 0.5 * v.dot(qs * v) + c.dot(v); };
    if (sol.allFinite() && p.violation(xp) <= std::max(p.violation(x), 1e-14) &&
        obj(xp) <= obj(x) + 1e-14 * (1.0 + std::abs(obj(x)))) {
      x = xp;
    }
  }
  const Vec g = qs * x + c;
  lambda = w > 0 ? Vec(aw.transpose().completeOrthogonalDecomposition().solve(-g)) : Vec(0);

  LpSolution out;
  out.status = LpStatus::kOptimal;
  out.x = x;
  out.objective = 0.5 * x.dot(qs * x) + c.dot(x);
  out.ineq_multipliers = Vec::Zero(p.ineq_rows());
  out.eq_multipliers = Vec::Zero(p.eq_rows());
  out.lower_multipliers = Vec::Zero(n);
  out.upper_multipliers = Vec::Zero(n);
  for (int k = 0; k < w; ++k) {
    const Row& r = rows[static_cast<std::size_t>(work[static_cast<std::size_t>(k)])];
    const double l = lambda(k);
    switch (r.family) {
      case Family::kEq: out.eq_multipliers(r.index) = l; break;
      case Family::kIneq: out.ineq_multipliers(r.index) = std::max(0.0, l); break;
      case Family::kLower: out.lower_multipliers(r.index) = std::max(0.0, l); break;
      case Family::kUpper: out.upper_multipliers(r.index) = std::max(0.0, l); break;
    }
  }
  return out;
}

}  // namespace swarmopt::solvers

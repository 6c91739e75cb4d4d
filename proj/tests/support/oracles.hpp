#pragma once

// Independent brute-force references used to check the solvers. None of
// these call into the library's optimization code.

#include "swarmopt/local_solvers.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <algorithm>
#include <cstdint>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

namespace testing_oracles {

using swarmopt::Mat;
using swarmopt::Vec;
using swarmopt::solvers::Polytope;

struct Halfspace {
  Vec a;
  double b;
  bool equality;
};

inline std::vector<Halfspace> halfspaces(const Polytope& p) {
  std::vector<Halfspace> rows;
  const int n = p.dim();
  for (int i = 0; i < p.eq_rows(); ++i) rows.push_back({p.a_eq.row(i).transpose(), p.b_eq(i), true});
  for (int i = 0; i < p.ineq_rows(); ++i) rows.push_back({p.a_ineq.row(i).transpose(), p.b_ineq(i), false});
  for (int j = 0; j < n; ++j) {
    if (std::isfinite(p.lower(j))) rows.push_back({-Vec::Unit(n, j), -p.lower(j), false});
    if (std::isfinite(p.upper(j))) rows.push_back({Vec::Unit(n, j), p.upper(j), false});
  }
  return rows;
}

inline bool feasible(const Polytope& p, const Vec& x, double tol) {
  for (const auto& h : halfspaces(p)) {
    const double r = h.a.dot(x) - h.b;
    if (h.equality ? std::abs(r) > tol : r > tol) return false;
  }
  return true;
}

/// Every vertex of a polytope, found by solving each n-subset of
/// constraints (equalities always included) as a square system.
inline std::vector<Vec> enumerate_vertices(const Polytope& p, double tol = 1e-9) {
  const int n = p.dim();
  const auto rows = halfspaces(p);
  std::vector<int> eq;
  std::vector<int> ineq;
  for (int k = 0; k < static_cast<int>(rows.size()); ++k) (rows[static_cast<std::size_t>(k)].equality ? eq : ineq).push_back(k);
  std::vector<Vec> out;
  const int need = n - static_cast<int>(eq.size());
  if (need < 0 || need > static_cast<int>(ineq.size())) return out;

  std::vector<bool> pick(ineq.size(), false);
  std::fill(pick.begin(), pick.begin() + need, true);
  do {
    Mat a(n, n);
    Vec b(n);
    int r = 0;
    for (int k : eq) {
      a.row(r) = rows[static_cast<std::size_t>(k)].a.transpose();
      b(r++) = rows[static_cast<std::size_t>(k)].b;
    }
    for (std::size_t k = 0; k < ineq.size(); ++k) {
      if (!pick[k]) continue;
      a.row(r) = rows[static_cast<std::size_t>(ineq[k])].a.transpose();
      b(r++) = rows[static_cast<std::size_t>(ineq[k])].b;
    }
    Eigen::FullPivLU<Mat> lu(a);
    if (lu.rank() < n) continue;
    const Vec x = lu.solve(b);
    if (feasible(p, x, tol)) out.push_back(x);
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return out;
}

/// Minimum of c'x over a bounded polytope by vertex enumeration.
inline std::optional<double> lp_by_vertices(const Vec& c, const Polytope& p) {
  std::optional<double> best;
  for (const Vec& v : enumerate_vertices(p)) {
    const double f = c.dot(v);
    if (!best || f < *best) best = f;
  }
  return best;
}

/// Minimum of c'x over all 0/1 points of a pure binary problem.
inline std::optional<double> binary_by_enumeration(const Vec& c, const Polytope& p, double tol = 1e-9) {
  const int n = p.dim();
  std::optional<double> best;
  for (long bits = 0; bits < (1L << n); ++bits) {
    Vec x(n);
    for (int j = 0; j < n; ++j) x(j) = static_cast<double>((bits >> j) & 1L);
    if (!feasible(p, x, tol)) continue;
    const double f = c.dot(x);
    if (!best || f < *best) best = f;
  }
  return best;
}

/// Optimal assignment cost and column per row, by trying every permutation.
struct Assignment {
  std::vector<int> column_of_row;
  double cost = std::numeric_limits<double>::infinity();
};

inline Assignment assignment_by_permutations(const Mat& cost) {
  const int n = static_cast<int>(cost.rows());
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  Assignment best;
  do {
    double f = 0.0;
    for (int i = 0; i < n; ++i) f += cost(i, perm[static_cast<std::size_t>(i)]);
    if (f < best.cost) {
      best.cost = f;
      best.column_of_row = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

/// Central-difference gradient.
inline Vec numeric_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h = 1e-6) {
  Vec g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Vec xp = x;
    Vec xm = x;
    const double step = h * std::max(1.0, std::abs(x(j)));
    xp(j) += step;
    xm(j) -= step;
    g(j) = (f(xp) - f(xm)) / (2.0 * step);
  }
  return g;
}

/// Hungarian method (shortest augmenting paths with potentials), O(n^3).
inline Assignment hungarian(const Mat& cost) {
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0), v(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<int> p(static_cast<std::size_t>(n + 1), 0), way(static_cast<std::size_t>(n + 1), 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n + 1), inf);
    std::vector<bool> used(static_cast<std::size_t>(n + 1), false);
    do {
      used[static_cast<std::size_t>(j0)] = true;
      const int i0 = p[static_cast<std::size_t>(j0)];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  Assignment out;
  out.column_of_row.assign(static_cast<std::size_t>(n), -1);
  out.cost = 0.0;
  for (int j = 1; j <= n; ++j) {
    out.column_of_row[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
  }
  for (int i = 0; i < n; ++i) out.cost += cost(i, out.column_of_row[static_cast<std::size_t>(i)]);
  return out;
}

/// Monte-Carlo estimate of E_p[log p(X) - log q(X)] for Gaussians, using
/// its own sampler (Box-Muller over a 64-bit LCG) and density code.
inline double kl_monte_carlo(const Vec& mp, const Mat& sp, const Vec& mq, const Mat& sq, long samples,
                             std::uint64_t seed) {
  const auto k = mp.size();
  const Eigen::LLT<Mat> lp(sp);
  const Eigen::LLT<Mat> lq(sq);
  const Mat chol = lp.matrixL();
  const Mat lqm = lq.matrixL();
  auto logdet = [](const Mat& l) { return 2.0 * l.diagonal().array().log().sum(); };
  const double ldp = logdet(chol);
  const double ldq = logdet(lqm);
  std::uint64_t state = seed * 2862933555777941757ULL + 3037000493ULL;
  auto unif = [&] {
    state = state * 6364136223846793005ULL + 1442695040888963407ULL;
    return (static_cast<double>(state >> 11) + 0.5) * 0x1.0p-53;
  };
  const double two_pi = 6.283185307179586476925286766559;
  double acc = 0.0;
  Vec z(k);
  for (long n = 0; n < samples; ++n) {
    for (Eigen::Index j = 0; j < k; ++j) {
      const double r = std::sqrt(-2.0 * std::log(unif()));
      z(j) = r * std::cos(two_pi * unif());
    }
    const Vec x = mp + chol * z;
    const Vec dq = lqm.triangularView<Eigen::Lower>().solve(Vec(x - mq));
    // log p(x) - log q(x); the normalizing (2 pi)^k terms cancel.
    acc += -0.5 * z.squaredNorm() - 0.5 * ldp + 0.5 * dq.squaredNorm() + 0.5 * ldq;
  }
  return acc / static_cast<double>(samples);
}

}  // namespace testing_oracles

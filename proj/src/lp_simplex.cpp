// Dense bounded-variable primal simplex.
//
// The polytope is rewritten with every internal column in [0, ub] (ub may be
// +inf): finite-lower variables are shifted, upper-only variables are
// mirrored and free variables are split. Inequality rows get a slack; rows
// with a negative right-hand side are negated so that the initial basis of
// slacks and artificials is feasible. Both phases use Bland's rule: the
// lowest-index improving column enters and ratio-test ties leave by lowest
// basic index. The final basis is re-solved with an LU factorization so the
// returned primal and dual values do not carry tableau drift.

#include "swarmopt/local_solvers.hpp"

#include <algorithm>
#include <cmath>

namespace swarmopt::solvers {

namespace {

enum class ColStatus : unsigned char { kBasic, kAtLower, kAtUpper };

struct VarMap {
  int col = -1;      // internal column
  int neg_col = -1;  // second column for a split free variable
  double offset = 0.0;
  double sign = 1.0;  // x = offset + sign * z[col] - z[neg_col]
};

class BoundedSimplex {
 public:
  BoundedSimplex(const Vec& c, const Polytope& p) : p_(p) { build(c); }

  LpSolution solve();

 private:
  void build(const Vec& c);
  void reset_reduced_costs(const Vec& cost);
  void pivot(int row, int col);
  // Returns false when the problem is unbounded in the current phase.
  bool iterate();
  double nonbasic_value(int j) const { return status_[j] == ColStatus::kAtUpper ? ub_[j] : 0.0; }
  void refine_and_extract(LpSolution& out, const Vec& cost);

  const Polytope& p_;
  int n_ = 0;       // original variables
  int m_ = 0;       // rows
  int cols_ = 0;    // internal columns
  int first_art_ = 0;
  std::vector<VarMap> vars_;
  Mat a_;            // m x cols, original internal matrix (after flips)
  Vec rhs_;          // m
  Vec cost_;         // phase two cost per column
  Vec ub_;
  std::vector<double> row_flip_;
  std::vector<int> row_slack_;  // slack column per row or -1

  Mat tab_;  // B^{-1} A
  Vec d_;    // reduced costs
  Vec xb_;   // basic values per row
  std::vector<int> basis_;
  std::vector<ColStatus> status_;
  std::vector<bool> can_enter_;
  int iterations_ = 0;
  double dtol_ = 1e-9;
};

void BoundedSimplex::build(const Vec& c) {
  p_.validate();
  n_ = p_.dim();
  if (c.size() != n_) throw ParameterError("cost dimension does not match polytope");

  vars_.resize(static_cast<std::size_t>(n_));
  std::vector<double> col_ub;
  std::vector<double> col_cost;
  for (int j = 0; j < n_; ++j) {
    const double l = p_.lower(j);
    const double u = p_.upper(j);
    VarMap& v = vars_[static_cast<std::size_t>(j)];
    if (std::isfinite(l)) {
      v.col = static_cast<int>(col_ub.size());
      v.offset = l;
      v.sign = 1.0;
      col_ub.push_back(std::isfinite(u) ? u - l : kInf);
      col_cost.push_back(c(j));
    } else if (std::isfinite(u)) {
      v.col = static_cast<int>(col_ub.size());
      v.offset = u;
      v.sign = -1.0;
      col_ub.push_back(kInf);
      col_cost.push_back(-c(j));
    } else {
      v.col = static_cast<int>(col_ub.size());
      col_ub.push_back(kInf);
      col_cost.push_back(c(j));
      v.neg_col = static_cast<int>(col_ub.size());
      col_ub.push_back(kInf);
      col_cost.push_back(-c(j));
    }
  }
  const int structural = static_cast<int>(col_ub.size());
  const int n_ineq = p_.ineq_rows();
  const int n_eq = p_.eq_rows();
  m_ = n_ineq + n_eq;

  // Structural block of every row plus its shifted right-hand side.
  Mat rows = Mat::Zero(m_, structural);
  rhs_ = Vec::Zero(m_);
  auto fill_row = [&](int r, const auto& coeffs, double b) {
    double shifted = b;
    for (int j = 0; j < n_; ++j) {
      const double a = coeffs(j);
      if (a == 0.0) continue;
      const VarMap& v = vars_[static_cast<std::size_t>(j)];
      rows(r, v.col) += a * v.sign;
      if (v.neg_col >= 0) rows(r, v.neg_col) -= a;
      shifted -= a * v.offset;
    }
    rhs_(r) = shifted;
  };
  for (int i = 0; i < n_ineq; ++i) fill_row(i, p_.a_ineq.row(i), p_.b_ineq(i));
  for (int i = 0; i < n_eq; ++i) fill_row(n_ineq + i, p_.a_eq.row(i), p_.b_eq(i));

  row_flip_.assign(static_cast<std::size_t>(m_), 1.0);
  for (int r = 0; r < m_; ++r) {
    if (rhs_(r) < 0.0) row_flip_[static_cast<std::size_t>(r)] = -1.0;
  }

  // Slack columns for inequality rows, then one artificial per row whose
  // slack cannot start basic.
  row_slack_.assign(static_cast<std::size_t>(m_), -1);
  int next = structural;
  for (int i = 0; i < n_ineq; ++i) row_slack_[static_cast<std::size_t>(i)] = next++;
  first_art_ = next;
  std::vector<int> art_row;
  for (int r = 0; r < m_; ++r) {
    const bool slack_basic = row_slack_[static_cast<std::size_t>(r)] >= 0 &&
                             row_flip_[static_cast<std::size_t>(r)] > 0.0;
    if (!slack_basic) art_row.push_back(r);
  }
  cols_ = first_art_ + static_cast<int>(art_row.size());

  a_ = Mat::Zero(m_, cols_);
  a_.leftCols(structural) = rows;
  for (int i = 0; i < n_ineq; ++i) a_(i, row_slack_[static_cast<std::size_t>(i)]) = 1.0;
  for (int r = 0; r < m_; ++r) {
    const double f = row_flip_[static_cast<std::size_t>(r)];
    a_.row(r) *= f;
    rhs_(r) *= f;
  }
  basis_.assign(static_cast<std::size_t>(m_), -1);
  for (int r = 0; r < m_; ++r) {
    const int s = row_slack_[static_cast<std::size_t>(r)];
    if (s >= 0 && row_flip_[static_cast<std::size_t>(r)] > 0.0) basis_[static_cast<std::size_t>(r)] = s;
  }
  for (std::size_t k = 0; k < art_row.size(); ++k) {
    const int col = first_art_ + static_cast<int>(k);
    a_(art_row[k], col) = 1.0;
    basis_[static_cast<std::size_t>(art_row[k])] = col;
  }

  ub_ = Vec::Constant(cols_, kInf);
  cost_ = Vec::Zero(cols_);
  for (int j = 0; j < structural; ++j) {
    ub_(j) = col_ub[static_cast<std::size_t>(j)];
    cost_(j) = col_cost[static_cast<std::size_t>(j)];
  }

  status_.assign(static_cast<std::size_t>(cols_), ColStatus::kAtLower);
  for (int b : basis_) status_[static_cast<std::size_t>(b)] = ColStatus::kBasic;
  can_enter_.assign(static_cast<std::size_t>(cols_), true);

  tab_ = a_;  // initial basis is the identity
  xb_ = rhs_;
  const double cscale = cost_.size() ? cost_.lpNorm<Eigen::Infinity>() : 0.0;
  dtol_ = 1e-9 * std::max(1.0, cscale);
}

void BoundedSimplex::reset_reduced_costs(const Vec& cost) {
  Vec cb(m_);
  for (int r = 0; r < m_; ++r) cb(r) = cost(basis_[static_cast<std::size_t>(r)]);
  d_ = cost - tab_.transpose() * cb;
  for (int r = 0; r < m_; ++r) d_(basis_[static_cast<std::size_t>(r)]) = 0.0;
}

void BoundedSimplex::pivot(int row, int col) {
  const double piv = tab_(row, col);
  tab_.row(row) /= piv;
  Vec column = tab_.col(col);
  column(row) = 0.0;
  const Eigen::RowVectorXd pivot_row = tab_.row(row);
  tab_.noalias() -= column * pivot_row;
  const double dc = d_(col);
  d_.noalias() -= dc * pivot_row.transpose();
  tab_(row, col) = 1.0;
  d_(col) = 0.0;
}

bool BoundedSimplex::iterate() {
  const long cap = 200L * (m_ + cols_) + 5000;
  constexpr double kPivTol = 1e-9;
  for (;;) {
    if (++iterations_ > cap) throw InternalError("simplex iteration cap exceeded");

    int enter = -1;
    for (int j = 0; j < cols_; ++j) {
      const auto s = status_[static_cast<std::size_t>(j)];
      if (s == ColStatus::kBasic || !can_enter_[static_cast<std::size_t>(j)]) continue;
      if ((s == ColStatus::kAtLower && d_(j) < -dtol_ && ub_(j) > 0.0) ||
          (s == ColStatus::kAtUpper && d_(j) > dtol_)) {
        enter = j;
        break;
      }
    }
    if (enter < 0) return true;

    const double dir = status_[static_cast<std::size_t>(enter)] == ColStatus::kAtLower ? 1.0 : -1.0;
    double theta = ub_(enter);  // bound flip distance
    int leave_row = -1;
    bool leave_to_upper = false;
    for (int r = 0; r < m_; ++r) {
      const double a = tab_(r, enter) * dir;  // basic value moves by -theta * a
      const int bvar = basis_[static_cast<std::size_t>(r)];
      double limit = kInf;
      bool to_upper = false;
      if (a > kPivTol) {
        limit = std::max(xb_(r), 0.0) / a;
      } else if (a < -kPivTol && std::isfinite(ub_(bvar))) {
        limit = std::max(ub_(bvar) - xb_(r), 0.0) / (-a);
        to_upper = true;
      } else {
        continue;
      }
      bool better;
      if (leave_row < 0) {
        better = limit < theta;  // strictly shorter than the bound flip
      } else {
        better = limit < theta - 1e-13 ||
                 (limit <= theta + 1e-13 && bvar < basis_[static_cast<std::size_t>(leave_row)]);
      }
      if (better) {
        theta = limit;
        leave_row = r;
        leave_to_upper = to_upper;
      }
    }
    if (!std::isfinite(theta)) return false;

    if (theta != 0.0) xb_.noalias() -= (theta * dir) * tab_.col(enter);
    if (leave_row < 0) {
      // Bound flip: the entering column reaches its own opposite bound.
      status_[static_cast<std::size_t>(enter)] =
          dir > 0 ? ColStatus::kAtUpper : ColStatus::kAtLower;
      continue;
    }
    const double enter_value = nonbasic_value(enter) + dir * theta;
    const int leaving = basis_[static_cast<std::size_t>(leave_row)];
    status_[static_cast<std::size_t>(leaving)] =
        leave_to_upper ? ColStatus::kAtUpper : ColStatus::kAtLower;
    status_[static_cast<std::size_t>(enter)] = ColStatus::kBasic;
    basis_[static_cast<std::size_t>(leave_row)] = enter;
    pivot(leave_row, enter);
    xb_(leave_row) = enter_value;
  }
}

void BoundedSimplex::refine_and_extract(LpSolution& out, const Vec& cost) {
  // Re-solve the final basis directly from the original data.
  Mat b(m_, m_);
  Vec cb(m_);
  Vec r = rhs_;
  for (int j = 0; j < cols_; ++j) {
    if (status_[static_cast<std::size_t>(j)] == ColStatus::kAtUpper) r -= a_.col(j) * ub_(j);
  }
  for (int k = 0; k < m_; ++k) {
    b.col(k) = a_.col(basis_[static_cast<std::size_t>(k)]);
    cb(k) = cost(basis_[static_cast<std::size_t>(k)]);
  }
  Vec y = Vec::Zero(m_);
  if (m_ > 0) {
    Eigen::PartialPivLU<Mat> lu(b);
    Vec xb = lu.solve(r);
    if (xb.allFinite() && (b * xb - r).lpNorm<Eigen::Infinity>() <= 1e-9 * (1.0 + r.lpNorm<Eigen::Infinity>())) {
      xb_ = xb;
    }
    Vec yy = lu.transpose().solve(cb);
    if (!yy.allFinite()) throw NumericError("singular simplex basis");
    y = yy;
  }

  Vec z = Vec::Zero(cols_);
  for (int j = 0; j < cols_; ++j) {
    if (status_[static_cast<std::size_t>(j)] == ColStatus::kAtUpper) z(j) = ub_(j);
  }
  for (int k = 0; k < m_; ++k) {
    const int j = basis_[static_cast<std::size_t>(k)];
    z(j) = std::clamp(xb_(k), 0.0, ub_(j));
  }

  out.x = Vec(n_);
  for (int j = 0; j < n_; ++j) {
    const VarMap& v = vars_[static_cast<std::size_t>(j)];
    double x = v.offset + v.sign * z(v.col);
    if (v.neg_col >= 0) x -= z(v.neg_col);
    out.x(j) = std::clamp(x, p_.lower(j), p_.upper(j));
  }

  const int n_ineq = p_.ineq_rows();
  const int n_eq = p_.eq_rows();
  out.ineq_multipliers = Vec::Zero(n_ineq);
  out.eq_multipliers = Vec::Zero(n_eq);
  for (int i = 0; i < n_ineq; ++i) {
    out.ineq_multipliers(i) = std::max(0.0, -row_flip_[static_cast<std::size_t>(i)] * y(i));
  }
  for (int i = 0; i < n_eq; ++i) {
    out.eq_multipliers(i) = -row_flip_[static_cast<std::size_t>(n_ineq + i)] * y(n_ineq + i);
  }
}

LpSolution BoundedSimplex::solve() {
  LpSolution out;

  // Phase one: minimize the sum of artificials.
  Vec phase1 = Vec::Zero(cols_);
  for (int j = first_art_; j < cols_; ++j) phase1(j) = 1.0;
  if (first_art_ < cols_) {
    reset_reduced_costs(phase1);
    iterate();
    double infeas = 0.0;
    for (int r = 0; r < m_; ++r) {
      if (basis_[static_cast<std::size_t>(r)] >= first_art_) infeas += std::max(0.0, xb_(r));
    }
    const double scale = std::max(1.0, rhs_.size() ? rhs_.lpNorm<Eigen::Infinity>() : 0.0);
    if (infeas > tol::kFeasibility * scale) {
      out.status = LpStatus::kInfeasible;
      out.iterations = iterations_;
      out.x = Vec::Zero(n_);
      return out;
    }
    // Artificials are pinned at zero for phase two.
    for (int j = first_art_; j < cols_; ++j) {
      ub_(j) = 0.0;
      can_enter_[static_cast<std::size_t>(j)] = false;
    }
    for (int r = 0; r < m_; ++r) {
      if (basis_[static_cast<std::size_t>(r)] >= first_art_) xb_(r) = 0.0;
    }
  }

  reset_reduced_costs(cost_);
  const bool bounded = iterate();
  out.iterations = iterations_;
  refine_and_extract(out, cost_);
  if (!bounded) {
    out.status = LpStatus::kUnbounded;
    out.objective = -kInf;
    return out;
  }
  out.status = LpStatus::kOptimal;

  // Bound multipliers from the reduced gradient in the original space.
  Vec grad = Vec::Zero(n_);
  // The cost vector in original coordinates is recovered from the mapping.
  for (int j = 0; j < n_; ++j) {
    const VarMap& v = vars_[static_cast<std::size_t>(j)];
    grad(j) = v.sign * cost_(v.col);
  }
  Vec r = grad;
  if (p_.ineq_rows() > 0) r += p_.a_ineq.transpose() * out.ineq_multipliers;
  if (p_.eq_rows() > 0) r += p_.a_eq.transpose() * out.eq_multipliers;
  out.lower_multipliers = Vec::Zero(n_);
  out.upper_multipliers = Vec::Zero(n_);
  for (int j = 0; j < n_; ++j) {
    if (r(j) > 0.0 && std::isfinite(p_.lower(j))) out.lower_multipliers(j) = r(j);
    if (r(j) < 0.0 && std::isfinite(p_.upper(j))) out.upper_multipliers(j) = -r(j);
  }
  out.objective = grad.dot(out.x);
  return out;
}

}  // namespace

LpSolution solve_lp(const Vec& c, const Polytope& p) {
  BoundedSimplex simplex(c, p);
  return simplex.solve();
}

}  // namespace swarmopt::solvers

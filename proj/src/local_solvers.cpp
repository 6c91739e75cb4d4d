#include "swarmopt/local_solvers.hpp"

#include <algorithm>
#include <cmath>

namespace swarmopt::solvers {

Polytope Polytope::free_space(int n) {
  Polytope p;
  p.a_ineq = Mat(0, n);
  p.b_ineq = Vec(0);
  p.a_eq = Mat(0, n);
  p.b_eq = Vec(0);
  p.lower = Vec::Constant(n, -kInf);
  p.upper = Vec::Constant(n, kInf);
  return p;
}

Polytope Polytope::box(Vec lower, Vec upper) {
  Polytope p = free_space(static_cast<int>(lower.size()));
  p.lower = std::move(lower);
  p.upper = std::move(upper);
  p.validate();
  return p;
}

Polytope Polytope::simplex(int n) {
  Polytope p = box(Vec::Zero(n), Vec::Constant(n, kInf));
  p.add_equality(Vec::Ones(n), 1.0);
  return p;
}

void Polytope::validate() const {
  const auto n = lower.size();
  if (upper.size() != n) throw ParameterError("polytope bound dimensions differ");
  if (a_ineq.cols() != n && a_ineq.rows() > 0) throw ParameterError("inequality matrix has wrong width");
  if (a_eq.cols() != n && a_eq.rows() > 0) throw ParameterError("equality matrix has wrong width");
  if (a_ineq.rows() != b_ineq.size()) throw ParameterError("inequality rhs has wrong length");
  if (a_eq.rows() != b_eq.size()) throw ParameterError("equality rhs has wrong length");
  for (Eigen::Index j = 0; j < n; ++j) {
    if (std::isnan(lower(j)) || std::isnan(upper(j))) throw ParameterError("NaN bound");
    if (lower(j) > upper(j)) throw ParameterError("lower bound exceeds upper bound");
  }
  if (!a_ineq.allFinite() || !b_ineq.allFinite() || !a_eq.allFinite() || !b_eq.allFinite()) {
    throw ParameterError("non-finite constraint data");
  }
}

double Polytope::violation(const Vec& x) const {
  double v = 0.0;
  if (a_ineq.rows() > 0) v = std::max(v, (a_ineq * x - b_ineq).maxCoeff());
  if (a_eq.rows() > 0) v = std::max(v, (a_eq * x - b_eq).lpNorm<Eigen::Infinity>());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    v = std::max({v, lower(j) - x(j), x(j) - upper(j)});
  }
  return v;
}

void Polytope::add_inequality(const Vec& row, double rhs) {
  const auto n = lower.size();
  if (row.size() != n) throw ParameterError("constraint row has wrong width");
  a_ineq.conservativeResize(a_ineq.rows() + 1, n);
  a_ineq.row(a_ineq.rows() - 1) = row.transpose();
  b_ineq.conservativeResize(b_ineq.size() + 1);
  b_ineq(b_ineq.size() - 1) = rhs;
}

void Polytope::add_equality(const Vec& row, double rhs) {
  const auto n = lower.size();
  if (row.size() != n) throw ParameterError("constraint row has wrong width");
  a_eq.conservativeResize(a_eq.rows() + 1, n);
  a_eq.row(a_eq.rows() - 1) = row.transpose();
  b_eq.conservativeResize(b_eq.size() + 1);
  b_eq(b_eq.size() - 1) = rhs;
}

int IntegralityMask::count() const {
  return static_cast<int>(std::count(flags_.begin(), flags_.end(), true));
}

std::string to_string(LpStatus s) {
  switch (s) {
    case LpStatus::kOptimal: return "optimal";
    case LpStatus::kInfeasible: return "infeasible";
    case LpStatus::kUnbounded: return "unbounded";
  }
  return "unknown";
}

double kkt_residual(const Mat& q, const Vec& c, const Polytope& p, const LpSolution& sol) {
  const Vec& x = sol.x;
  Vec grad = c;
  if (q.size() > 0) grad += q * x;
  double res = 0.0;
  if (p.ineq_rows() > 0) {
    grad += p.a_ineq.transpose() * sol.ineq_multipliers;
    const Vec slack = p.b_ineq - p.a_ineq * x;
    for (int i = 0; i < p.ineq_rows(); ++i) {
      res = std::max(res, -sol.ineq_multipliers(i));
      res = std::max(res, std::abs(sol.ineq_multipliers(i) * slack(i)));
    }
  }
  if (p.eq_rows() > 0) grad += p.a_eq.transpose() * sol.eq_multipliers;
  grad -= sol.lower_multipliers;
  grad += sol.upper_multipliers;
  for (int j = 0; j < p.dim(); ++j) {
    res = std::max({res, -sol.lower_multipliers(j), -sol.upper_multipliers(j)});
    if (std::isfinite(p.lower(j))) {
      res = std::max(res, std::abs(sol.lower_multipliers(j) * (x(j) - p.lower(j))));
    } else {
      res = std::max(res, std::abs(sol.lower_multipliers(j)));
    }
    if (std::isfinite(p.upper(j))) {
      res = std::max(res, std::abs(sol.upper_multipliers(j) * (p.upper(j) - x(j))));
    } else {
      res = std::max(res, std::abs(sol.upper_multipliers(j)));
    }
  }
  res = std::max(res, grad.lpNorm<Eigen::Infinity>());
  res = std::max(res, p.violation(x));
  return res;
}

Vec project_box(const Vec& x, const Vec& lower, const Vec& upper) {
  if (x.size() != lower.size() || x.size() != upper.size()) {
    throw ParameterError("box dimensions do not match point");
  }
  return x.cwiseMax(lower).cwiseMin(upper);
}

Vec project_polytope(const Vec& x, const Polytope& p) {
  if (x.size() != p.dim()) throw ParameterError("point dimension does not match polytope");
  if (p.bounds_only()) {
    p.validate();
    return project_box(x, p.lower, p.upper);
  }
  const int n = p.dim();
  return solve_qp(Mat::Identity(n, n), -x, p).x;
}

Vec linear_min_oracle(const Vec& d, const Polytope& p) {
  if (d.size() != p.dim()) throw ParameterError("direction dimension does not match polytope");
  if (p.bounds_only()) {
    p.validate();
    Vec z(p.dim());
    for (int j = 0; j < p.dim(); ++j) {
      const double pick = d(j) < 0.0 ? p.upper(j) : p.lower(j);
      if (!std::isfinite(pick)) throw UnboundedError("linear minimization over an unbounded set");
      z(j) = pick;
    }
    return z;
  }
  LpSolution sol = solve_lp(d, p);
  if (sol.status == LpStatus::kInfeasible) throw InfeasibleError("empty feasible set");
  if (sol.status == LpStatus::kUnbounded) throw UnboundedError("linear minimization over an unbounded set");
  return sol.x;
}

// ---------------------------------------------------------------------------
// Scalar functions and their proximal operators.

ScalarFunction ScalarFunction::from_tag(const std::string& tag, const nlohmann::json& params) {
  try {
    if (tag == "affine") return affine(params.value("a", 0.0), params.value("b", 0.0));
    if (tag == "quadratic") return quadratic(params.at("a").get<double>(), params.value("b", 0.0));
    if (tag == "exp_shifted") return exp_shifted(params.at("shift").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("bad scalar function parameters: ") + e.what());
  }
  throw ParameterError("unknown scalar function '" + tag + "'");
}

double ScalarFunction::value(double u) const {
  switch (kind) {
    case Kind::kAffine: return a * u + b;
    case Kind::kQuadratic: return 0.5 * a * u * u + b * u;
    case Kind::kExpShifted: return std::exp(u - shift);
  }
  return 0.0;
}

double ScalarFunction::derivative(double u) const {
  switch (kind) {
    case Kind::kAffine: return a;
    case Kind::kQuadratic: return a * u + b;
    case Kind::kExpShifted: return std::exp(u - shift);
  }
  return 0.0;
}

std::string ScalarFunction::tag() const {
  switch (kind) {
    case Kind::kAffine: return "affine";
    case Kind::kQuadratic: return "quadratic";
    case Kind::kExpShifted: return "exp_shifted";
  }
  return "affine";
}

nlohmann::json ScalarFunction::params() const {
  if (kind == Kind::kExpShifted) return {{"shift", shift}};
  return {{"a", a}, {"b", b}};
}

namespace {

// Principal branch of Lambert W evaluated at exp(log_z), accurate for tiny
// arguments and for arguments too large to represent.
double lambert_w_exp(double log_z) {
  if (log_z < 1.0) {
    const double z = std::exp(log_z);
    double w = std::log1p(z);
    for (int k = 0; k < 100; ++k) {
      const double ew = std::exp(w);
      const double f = w * ew - z;
      const double step = f / (ew * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0));  // Halley
      w -= step;
      if (std::abs(step) <= 1e-16 * std::max(std::abs(w), 1e-300)) break;
    }
    return w;
  }
  // Solve w + log w = log_z.
  double w = log_z > 3.0 ? log_z - std::log(log_z) : 1.0;
  for (int k = 0; k < 100; ++k) {
    const double f = w + std::log(w) - log_z;
    const double step = f / (1.0 + 1.0 / w);
    w -= step;
    if (w <= 0.0) w = 1e-3;
    if (std::abs(step) <= 1e-16 * w) break;
  }
  return w;
}

}  // namespace

double prox_scalar(const ScalarFunction& g, double lambda, double v) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ParameterError("prox step must be positive");
  switch (g.kind) {
    case ScalarFunction::Kind::kAffine:
      return v - lambda * g.a;
    case ScalarFunction::Kind::kQuadratic: {
      const double denom = 1.0 + lambda * g.a;
      if (g.a < 0.0 || denom <= 0.0) throw ParameterError("quadratic prox needs nonnegative curvature");
      return (v - lambda * g.b) / denom;
    }
    case ScalarFunction::Kind::kExpShifted:
      // u = v - t with t e^t = lambda exp(v - shift).
      return v - lambert_w_exp(std::log(lambda) + v - g.shift);
  }
  return v;
}

// ---------------------------------------------------------------------------
// JSON helpers. Non-finite entries are written as strings so that bounds
// survive a round trip.

nlohmann::json vec_to_json(const Vec& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double x = v(i);
    if (std::isfinite(x)) {
      out.push_back(x);
    } else if (std::isnan(x)) {
      out.push_back("nan");
    } else {
      out.push_back(x > 0 ? "inf" : "-inf");
    }
  }
  return out;
}

namespace {

double scalar_from_json(const nlohmann::json& e) {
  if (e.is_number()) return e.get<double>();
  if (e.is_string()) {
    const auto s = e.get<std::string>();
    if (s == "inf" || s == "+inf") return kInf;
    if (s == "-inf") return -kInf;
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw ParameterError("expected a number, got " + e.dump());
}

}  // namespace

Vec vec_from_json(const nlohmann::json& doc) {
  if (!doc.is_array()) throw ParameterError("expected an array of numbers");
  Vec v(static_cast<Eigen::Index>(doc.size()));
  for (std::size_t i = 0; i < doc.size(); ++i) v(static_cast<Eigen::Index>(i)) = scalar_from_json(doc[i]);
  return v;
}

nlohmann::json mat_to_json(const Mat& m) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(vec_to_json(m.row(i).transpose()));
  return out;
}

Mat mat_from_json(const nlohmann::json& doc, Eigen::Index cols_if_empty) {
  if (!doc.is_array()) throw ParameterError("expected an array of rows");
  if (doc.empty()) return Mat(0, cols_if_empty);
  const auto rows = static_cast<Eigen::Index>(doc.size());
  const auto cols = static_cast<Eigen::Index>(doc[0].size());
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Vec r = vec_from_json(doc[static_cast<std::size_t>(i)]);
    if (r.size() != cols) throw ParameterError("ragged matrix rows");
    m.row(i) = r.transpose();
  }
  return m;
}

nlohmann::json to_json(const Polytope& p) {
  return {{"a_ineq", mat_to_json(p.a_ineq)}, {"b_ineq", vec_to_json(p.b_ineq)},
          {"a_eq", mat_to_json(p.a_eq)},     {"b_eq", vec_to_json(p.b_eq)},
          {"lower", vec_to_json(p.lower)},   {"upper", vec_to_json(p.upper)}};
}

Polytope polytope_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ParameterError("polytope must be a JSON object");
  Polytope p;
  if (!doc.contains("lower") || !doc.contains("upper")) {
    throw ParameterError("polytope needs 'lower' and 'upper'");
  }
  p.lower = vec_from_json(doc.at("lower"));
  p.upper = vec_from_json(doc.at("upper"));
  const auto n = p.lower.size();
  auto get = [&](const char* key) { return doc.contains(key) ? doc.at(key) : nlohmann::json::array(); };
  p.a_ineq = mat_from_json(get("a_ineq"), n);
  p.b_ineq = vec_from_json(get("b_ineq"));
  p.a_eq = mat_from_json(get("a_eq"), n);
  p.b_eq = vec_from_json(get("b_eq"));
  p.validate();
  return p;
}

}  // namespace swarmopt::solvers

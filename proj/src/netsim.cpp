#include "swarmopt/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace swarmopt::netsim {

using problems::AggregativeProblem;
using problems::ConstraintCoupledProblem;
using problems::MilpProblem;
using solvers::vec_from_json;
using solvers::vec_to_json;

std::string tag(Algorithm a) {
  switch (a) {
    case Algorithm::kDualDecomposition: return "dd";
    case Algorithm::kPrimalDecomposition: return "pd";
    case Algorithm::kTracking: return "pat";
    case Algorithm::kFrankWolfe: return "fw";
    case Algorithm::kAdmm: return "admm";
  }
  throw InternalError("unknown algorithm");
}

Algorithm algorithm_from_tag(const std::string& t) {
  for (Algorithm a : {Algorithm::kDualDecomposition, Algorithm::kPrimalDecomposition, Algorithm::kTracking,
                      Algorithm::kFrankWolfe, Algorithm::kAdmm}) {
    if (tag(a) == t) return a;
  }
  throw ConfigError("unknown algorithm tag '" + t + "' (expected dd, pd, pat, fw or admm)");
}

// ---------------------------------------------------------------------------

nlohmann::json StepParams::to_json() const {
  nlohmann::json y0 = nlohmann::json::array();
  for (const Vec& v : pd_y0) y0.push_back(vec_to_json(v));
  return {{"step_scale", step_scale},
          {"pat_gamma", pat_gamma},
          {"pat_delta", pat_delta},
          {"fw_offset", fw_offset},
          {"admm_rho", admm.rho},
          {"admm_xi", admm.xi},
          {"admm_initial_box", admm.initial_box},
          {"admm_box_ceiling", admm.box_ceiling},
          {"pd_penalty", pd_penalty},
          {"pd_y0", y0}};
}

StepParams StepParams::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("step parameters must be an object");
  static const char* const known[] = {"step_scale", "pat_gamma",        "pat_delta",        "fw_offset",
                                      "admm_rho",   "admm_xi",          "admm_initial_box", "admm_box_ceiling",
                                      "pd_penalty", "pd_y0"};
  for (const auto& item : doc.items()) {
    if (std::find(std::begin(known), std::end(known), item.key()) == std::end(known)) {
      throw ConfigError("unknown step parameter '" + item.key() + "'");
    }
  }
  try {
    StepParams p;
    p.step_scale = doc.value("step_scale", p.step_scale);
    p.pat_gamma = doc.value("pat_gamma", p.pat_gamma);
    p.pat_delta = doc.value("pat_delta", p.pat_delta);
    p.fw_offset = doc.value("fw_offset", p.fw_offset);
    p.admm.rho = doc.value("admm_rho", p.admm.rho);
    p.admm.xi = doc.value("admm_xi", p.admm.xi);
    p.admm.initial_box = doc.value("admm_initial_box", p.admm.initial_box);
    p.admm.box_ceiling = doc.value("admm_box_ceiling", p.admm.box_ceiling);
    p.pd_penalty = doc.value("pd_penalty", p.pd_penalty);
    if (doc.contains("pd_y0")) {
      for (const auto& v : doc.at("pd_y0")) p.pd_y0.push_back(vec_from_json(v));
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad step parameters: ") + e.what());
  }
}

bool StepParams::operator==(const StepParams& o) const {
  return step_scale == o.step_scale && pat_gamma == o.pat_gamma && pat_delta == o.pat_delta &&
         fw_offset == o.fw_offset && admm.rho == o.admm.rho && admm.xi == o.admm.xi &&
         admm.initial_box == o.admm.initial_box && admm.box_ceiling == o.admm.box_ceiling &&
         pd_penalty == o.pd_penalty && pd_y0 == o.pd_y0;
}

long default_cadence(long rounds) { return rounds <= 1000 ? 1 : (rounds + 999) / 1000; }

namespace {

int problem_size(const Problem& p) {
  return std::visit([](const auto& q) { return q.size(); }, p);
}

}  // namespace

void validate(const RunConfig& c) {
  if (c.rounds < 1) throw ConfigError("the run needs at least one round");
  if (c.cadence < 0) throw ConfigError("cadence must be nonnegative");
  try {
    std::visit([](const auto& q) { q.validate(); }, c.problem);
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("invalid problem: ") + e.what());
  }
  const int n = problem_size(c.problem);
  if (c.topology.size() != n) {
    throw ConfigError("topology has " + std::to_string(c.topology.size()) + " robots, problem has " +
                      std::to_string(n));
  }
  const std::string name = tag(c.algorithm);
  auto need = [&](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("algorithm " + name + " " + what);
  };
  switch (c.algorithm) {
    case Algorithm::kDualDecomposition:
      need(std::holds_alternative<ConstraintCoupledProblem>(c.problem), "needs a constraint-coupled problem");
      need(!std::get<ConstraintCoupledProblem>(c.problem).mixed_integer(), "needs continuous local sets");
      need(c.params.step_scale > 0.0, "needs a positive step scale");
      break;
    case Algorithm::kPrimalDecomposition: {
      need(std::holds_alternative<MilpProblem>(c.problem), "needs a mixed-integer program");
      need(c.params.step_scale > 0.0, "needs a positive step scale");
      need(c.params.pd_penalty >= 0.0, "needs a nonnegative penalty");
      need(c.topology.at(0).undirected(), "needs an undirected topology");
      const auto& m = std::get<MilpProblem>(c.problem);
      if (!c.params.pd_y0.empty()) {
        need(static_cast<int>(c.params.pd_y0.size()) == n, "needs one starting share per robot");
        Vec sum = Vec::Zero(m.coupling_dim());
        for (const Vec& y : c.params.pd_y0) {
          need(y.size() == m.coupling_dim(), "needs starting shares of the coupling size");
          sum += y;
        }
        need((sum - (m.b - m.sigma_ft)).lpNorm<Eigen::Infinity>() <= 1e-9,
             "needs starting shares summing to b - sigma_ft");
      }
      break;
    }
    case Algorithm::kTracking:
      need(std::holds_alternative<AggregativeProblem>(c.problem), "needs an aggregative problem");
      need(c.params.pat_gamma > 0.0, "needs gamma > 0");
      need(c.params.pat_delta > 0.0 && c.params.pat_delta <= 1.0, "needs delta in (0, 1]");
      break;
    case Algorithm::kFrankWolfe:
      need(std::holds_alternative<AggregativeProblem>(c.problem), "needs an aggregative problem");
      need(c.params.fw_offset >= 1.0, "needs fw_offset >= 1 so that steps stay in [0, 1]");
      for (const auto& r : std::get<AggregativeProblem>(c.problem).robots) {
        need(r.x_set.bounded(), "needs bounded local sets");
      }
      break;
    case Algorithm::kAdmm:
      need(std::holds_alternative<AggregativeProblem>(c.problem), "needs an aggregative problem");
      need(std::get<AggregativeProblem>(c.problem).admm_compatible(),
           "needs local costs plus one shared aggregate term");
      need(c.params.admm.rho > 0.0 && c.params.admm.xi > 0.0, "needs rho > 0 and xi > 0");
      need(c.params.admm.initial_box > 0.0, "needs a positive initial box");
      need(c.topology.at(0).undirected(), "needs an undirected topology");
      break;
  }
}

// ---------------------------------------------------------------------------

double total_cost(const Problem& problem, const Vec& stacked) {
  return std::visit(
      [&](const auto& p) { return p.total_cost(oracle::split_blocks(stacked, oracle::robot_dims(p))); }, problem);
}

double coupling_violation(const Problem& problem, const Vec& stacked) {
  if (const auto* cc = std::get_if<ConstraintCoupledProblem>(&problem)) {
    return cc->coupling_violation(oracle::split_blocks(stacked, oracle::robot_dims(*cc)));
  }
  if (const auto* m = std::get_if<MilpProblem>(&problem)) {
    const Vec g = m->total_coupling(oracle::split_blocks(stacked, oracle::robot_dims(*m))) - m->b;
    return g.cwiseMax(0.0).norm();
  }
  return 0.0;
}

MetricsRow compute_metrics(const RoundTrace& round, const Problem& problem,
                           const std::optional<oracle::OracleSolution>& reference) {
  MetricsRow row;
  row.t = round.t;
  row.coupling_violation = coupling_violation(problem, round.x);
  row.consensus_error = round.consensus_spread;
  if (reference) {
    if (reference->x_star.size() != round.x.size()) throw ParameterError("reference solution has the wrong size");
    const double f = total_cost(problem, round.x);
    row.cost_error = std::abs(f - reference->f_star) / std::max(1.0, std::abs(reference->f_star));
    const double scale = reference->x_star.norm();
    const double dist = (round.x - reference->x_star).norm();
    row.opt_error = scale > 0.0 ? dist / scale : dist;
  } else {
    row.cost_error = std::numeric_limits<double>::quiet_NaN();
    row.opt_error = std::numeric_limits<double>::quiet_NaN();
  }
  return row;
}

// ---------------------------------------------------------------------------

namespace {

double max_pairwise(const std::vector<Vec>& v) {
  double worst = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    for (std::size_t j = i + 1; j < v.size(); ++j) worst = std::max(worst, (v[i] - v[j]).norm());
  }
  return worst;
}

[[noreturn]] void rethrow_at_round(long t) {
  const std::string at = "round " + std::to_string(t) + ": ";
  try {
    throw;
  } catch (const ParameterError& e) {
    throw ParameterError(at + e.what());
  } catch (const InfeasibleError& e) {
    throw InfeasibleError(at + e.what());
  } catch (const UnboundedError& e) {
    throw UnboundedError(at + e.what());
  } catch (const NumericError& e) {
    throw NumericError(at + e.what());
  } catch (const UnsupportedError& e) {
    throw UnsupportedError(at + e.what());
  } catch (const ResourceError& e) {
    throw ResourceError(at + e.what());
  } catch (const Error& e) {
    throw InternalError(at + e.what());
  }
}

// Inbox of robot i in round t: its own message with the self weight, then
// every in-neighbor's message with the weight i puts on it.
algo::Inbox deliver(const graph::Topology& topo, const graph::WeightMatrix& w, const std::vector<algo::Envelope>& msgs,
                    int i) {
  algo::Inbox inbox;
  inbox.reserve(topo.in_neighbors(i).size() + 1);
  algo::Envelope self = msgs[static_cast<std::size_t>(i)];
  self.weight = w.entries(i, i);
  inbox.push_back(std::move(self));
  for (int j : topo.in_neighbors(i)) {
    algo::Envelope e = msgs[static_cast<std::size_t>(j)];
    if (e.from != j) throw InternalError("message routed from the wrong robot");
    e.weight = w.entries(i, j);
    inbox.push_back(std::move(e));
  }
  return inbox;
}

nlohmann::json snapshot(const algo::DualDecompState& s) {
  return {{"x_running", vec_to_json(s.x_running)},
          {"x_hat", vec_to_json(s.x_hat)},
          {"mu", vec_to_json(s.mu)},
          {"step_weight_sum", s.step_weight_sum}};
}

nlohmann::json snapshot(const algo::PrimalDecompState& s) {
  return {{"y_alloc", vec_to_json(s.y_alloc)}, {"mu", vec_to_json(s.mu)}, {"round", s.round},
          {"x_lp", vec_to_json(s.x_lp)},       {"violation", s.violation}};
}

nlohmann::json snapshot(const algo::TrackingState& s) {
  return {{"x", vec_to_json(s.x)},
          {"s", vec_to_json(s.s_tracker)},
          {"y", vec_to_json(s.y_tracker)},
          {"round", s.round}};
}

nlohmann::json snapshot(const algo::AdmmState& s) {
  return {{"p", vec_to_json(s.p)}, {"s", vec_to_json(s.s)},          {"y", vec_to_json(s.y)},
          {"z", vec_to_json(s.z)}, {"x", vec_to_json(s.x)},          {"box_bound", s.box_bound}};
}

template <class State>
nlohmann::json snapshots(const std::vector<State>& states) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& s : states) a.push_back(snapshot(s));
  return a;
}

// Shared round loop. `Ops` supplies init, message, step, observe (x, sigma,
// spread), audit and finish for one algorithm.
template <class State, class Ops>
RunResult drive(const RunConfig& config, const std::optional<oracle::OracleSolution>& reference, Ops& ops) {
  const int n = problem_size(config.problem);
  const long cadence = config.cadence > 0 ? config.cadence : default_cadence(config.rounds);
  RunResult result;

  std::vector<State> states;
  std::vector<algo::Envelope> msgs;
  try {
    for (int i = 0; i < n; ++i) {
      states.push_back(ops.init(i));
      msgs.push_back(ops.message(states.back(), i));
    }
  } catch (const Error&) {
    rethrow_at_round(0);
  }

  auto record = [&](long t) {
    RoundTrace tr;
    tr.t = t;
    ops.observe(states, tr);
    if (config.keep_snapshots) tr.snapshots = snapshots(states);
    result.metrics.push_back(compute_metrics(tr, config.problem, reference));
    result.trace.push_back(std::move(tr));
  };
  auto audit = [&](long t) {
    const double a = ops.audit(states, result.audits);
    if (config.strict_audits && !(a <= ops.tolerance())) {
      throw NumericError("round " + std::to_string(t) + ": conservation audit " + std::to_string(a) +
                         " exceeds tolerance");
    }
    return a;
  };

  audit(0);
  record(0);
  for (long t = 0; t < config.rounds; ++t) {
    const graph::Topology topo = config.topology.at(t);
    const graph::WeightMatrix w = config.topology.weights_at(t);
    std::vector<State> next;
    next.reserve(states.size());
    std::vector<algo::Envelope> next_msgs;
    next_msgs.reserve(states.size());
    try {
      for (int i = 0; i < n; ++i) {
        auto step = ops.step(states[static_cast<std::size_t>(i)], deliver(topo, w, msgs, i), t, i);
        next.push_back(std::move(step.state));
        next_msgs.push_back(std::move(step.outbox));
      }
    } catch (const Error&) {
      rethrow_at_round(t + 1);
    }
    states = std::move(next);
    msgs = std::move(next_msgs);
    const double a = audit(t + 1);
    if ((t + 1) % cadence == 0 || t + 1 == config.rounds) {
      record(t + 1);
      result.trace.back().audit = a;
    }
  }
  try {
    result.final_x = ops.finish(states);
  } catch (const Error&) {
    rethrow_at_round(config.rounds);
  }
  return result;
}

struct DdOps {
  const ConstraintCoupledProblem& p;
  const StepParams& sp;
  algo::DualDecompState init(int i) { return algo::dd_init(p, i); }
  algo::Envelope message(const algo::DualDecompState& s, int i) { return algo::dd_message(s, i); }
  algo::Step<algo::DualDecompState> step(const algo::DualDecompState& s, const algo::Inbox& in, long t, int i) {
    return algo::dd_step(s, in, sp.step_scale / static_cast<double>(t + 1), p, i);
  }
  void observe(const std::vector<algo::DualDecompState>& st, RoundTrace& tr) {
    std::vector<Vec> x;
    std::vector<Vec> mu;
    for (const auto& s : st) {
      x.push_back(s.x_running);
      mu.push_back(s.mu);
    }
    tr.x = oracle::stack_blocks(x);
    tr.consensus_spread = max_pairwise(mu);
  }
  double audit(const std::vector<algo::DualDecompState>&, AuditSummary&) { return 0.0; }
  double tolerance() const { return 0.0; }
  std::vector<Vec> finish(const std::vector<algo::DualDecompState>& st) {
    std::vector<Vec> x;
    for (const auto& s : st) x.push_back(s.x_running);
    return x;
  }
};

struct PdOps {
  const MilpProblem& p;
  const StepParams& sp;
  double penalty;
  double tol;
  algo::PrimalDecompState init(int i) {
    const Vec y0 = sp.pd_y0.empty() ? algo::pd_equal_split(p) : sp.pd_y0[static_cast<std::size_t>(i)];
    return algo::pd_init(p, i, y0, penalty);
  }
  algo::Envelope message(const algo::PrimalDecompState& s, int i) { return algo::pd_message(s, i); }
  algo::Step<algo::PrimalDecompState> step(const algo::PrimalDecompState& s, const algo::Inbox& in, long t, int i) {
    return algo::pd_step(s, in, sp.step_scale / static_cast<double>(t + 1), p, i, penalty);
  }
  void observe(const std::vector<algo::PrimalDecompState>& st, RoundTrace& tr) {
    std::vector<Vec> x;
    std::vector<Vec> mu;
    for (const auto& s : st) {
      x.push_back(s.x_lp);
      mu.push_back(s.mu);
    }
    tr.x = oracle::stack_blocks(x);
    tr.consensus_spread = max_pairwise(mu);
  }
  double audit(const std::vector<algo::PrimalDecompState>& st, AuditSummary& sum) {
    const double a = algo::audit_allocation(st, p);
    sum.max_allocation_error = std::max(sum.max_allocation_error, a);
    return a;
  }
  double tolerance() const { return tol; }
  std::vector<Vec> finish(const std::vector<algo::PrimalDecompState>& st) {
    std::vector<Vec> x;
    for (int i = 0; i < p.size(); ++i) x.push_back(algo::pd_finalize(st[static_cast<std::size_t>(i)], p, i));
    return x;
  }
};

struct TrackingOps {
  const AggregativeProblem& p;
  const StepParams& sp;
  bool frank_wolfe;
  double tol;
  algo::TrackingState init(int i) { return algo::tracking_init(p, i); }
  algo::Envelope message(const algo::TrackingState& s, int i) { return algo::tracking_message(s, i); }
  algo::Step<algo::TrackingState> step(const algo::TrackingState& s, const algo::Inbox& in, long t, int i) {
    if (frank_wolfe) {
      return algo::fw_step(s, in, 1.0 / std::sqrt(static_cast<double>(t) + sp.fw_offset), p, i);
    }
    return algo::pat_step(s, in, sp.pat_gamma, sp.pat_delta, p, i);
  }
  void observe(const std::vector<algo::TrackingState>& st, RoundTrace& tr) {
    std::vector<Vec> x;
    std::vector<Vec> trackers;
    for (const auto& s : st) {
      x.push_back(s.x);
      trackers.push_back(s.s_tracker);
    }
    tr.x = oracle::stack_blocks(x);
    tr.sigma = p.sigma(x);
    tr.consensus_spread = max_pairwise(trackers);
  }
  double audit(const std::vector<algo::TrackingState>& st, AuditSummary& sum) {
    const auto a = algo::audit_trackers(st, p);
    // NaN must not slip through std::max.
    auto worse = [](double cur, double v) { return std::isnan(v) ? v : std::max(cur, v); };
    sum.max_sigma_error = worse(sum.max_sigma_error, a.sigma_error);
    sum.max_gradient_error = worse(sum.max_gradient_error, a.gradient_error);
    return worse(a.sigma_error, a.gradient_error);
  }
  double tolerance() const { return tol; }
  std::vector<Vec> finish(const std::vector<algo::TrackingState>& st) {
    std::vector<Vec> x;
    for (const auto& s : st) x.push_back(s.x);
    return x;
  }
};

struct AdmmOps {
  const AggregativeProblem& p;
  const StepParams& sp;
  algo::AdmmState init(int i) { return algo::admm_init(p, i, sp.admm); }
  algo::Envelope message(const algo::AdmmState& s, int i) { return algo::admm_message(s, i); }
  algo::Step<algo::AdmmState> step(const algo::AdmmState& s, const algo::Inbox& in, long, int i) {
    return algo::admm_step(s, in, p, i, sp.admm);
  }
  void observe(const std::vector<algo::AdmmState>& st, RoundTrace& tr) {
    std::vector<Vec> x;
    std::vector<Vec> y;
    for (const auto& s : st) {
      x.push_back(s.x);
      y.push_back(s.y);
    }
    tr.x = oracle::stack_blocks(x);
    tr.sigma = p.sigma(x);
    tr.consensus_spread = max_pairwise(y);
  }
  double audit(const std::vector<algo::AdmmState>&, AuditSummary&) { return 0.0; }
  double tolerance() const { return 0.0; }
  std::vector<Vec> finish(const std::vector<algo::AdmmState>& st) {
    std::vector<Vec> x;
    for (const auto& s : st) x.push_back(s.x);
    return x;
  }
};

}  // namespace

RunResult run(const RunConfig& config, const std::optional<oracle::OracleSolution>& reference) {
  validate(config);
  switch (config.algorithm) {
    case Algorithm::kDualDecomposition: {
      DdOps ops{std::get<ConstraintCoupledProblem>(config.problem), config.params};
      return drive<algo::DualDecompState>(config, reference, ops);
    }
    case Algorithm::kPrimalDecomposition: {
      const auto& m = std::get<MilpProblem>(config.problem);
      const double penalty = config.params.pd_penalty > 0.0 ? config.params.pd_penalty : algo::pd_default_penalty(m);
      PdOps ops{m, config.params, penalty, config.allocation_tolerance};
      return drive<algo::PrimalDecompState>(config, reference, ops);
    }
    case Algorithm::kTracking:
    case Algorithm::kFrankWolfe: {
      TrackingOps ops{std::get<AggregativeProblem>(config.problem), config.params,
                      config.algorithm == Algorithm::kFrankWolfe, config.tracker_tolerance};
      return drive<algo::TrackingState>(config, reference, ops);
    }
    case Algorithm::kAdmm: {
      AdmmOps ops{std::get<AggregativeProblem>(config.problem), config.params};
      return drive<algo::AdmmState>(config, reference, ops);
    }
  }
  throw InternalError("unknown algorithm");
}

// ---------------------------------------------------------------------------

const char* const kMetricsHeader = "t,cost_error,coupling_violation,consensus_error,opt_error";

namespace {

void append_number(std::string& out, double v) {
  if (std::isnan(v)) {
    out += "nan";
    return;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

}  // namespace

std::string format_metrics_csv(const std::vector<MetricsRow>& rows) {
  std::string out = kMetricsHeader;
  out += '\n';
  for (const auto& r : rows) {
    out += std::to_string(r.t);
    for (double v : {r.cost_error, r.coupling_violation, r.consensus_error, r.opt_error}) {
      out += ',';
      append_number(out, v);
    }
    out += '\n';
  }
  return out;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    f << text;
    if (!f) throw ResourceError("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& rows) {
  write_text_atomic(path, format_metrics_csv(rows));
}

std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ResourceError("cannot read " + path.string());
  std::string line;
  if (!std::getline(f, line) || line != kMetricsHeader) throw ConfigError(path.string() + ": unexpected header");
  std::vector<MetricsRow> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 5) throw ConfigError(path.string() + ": expected 5 columns in '" + line + "'");
    MetricsRow r;
    try {
      r.t = std::stol(cells[0]);
    } catch (const std::exception&) {
      throw ConfigError(path.string() + ": bad round index '" + cells[0] + "'");
    }
    double* fields[] = {&r.cost_error, &r.coupling_violation, &r.consensus_error, &r.opt_error};
    for (int k = 0; k < 4; ++k) {
      char* end = nullptr;
      *fields[k] = std::strtod(cells[static_cast<std::size_t>(k + 1)].c_str(), &end);
      if (end == cells[static_cast<std::size_t>(k + 1)].c_str() || *end != '\0') {
        throw ConfigError(path.string() + ": bad number '" + cells[static_cast<std::size_t>(k + 1)] + "'");
      }
    }
    rows.push_back(r);
  }
  return rows;
}

void write_trace_jsonl(const std::filesystem::path& path, const std::vector<RoundTrace>& trace) {
  std::string out;
  for (const auto& r : trace) {
    nlohmann::json line = {{"t", r.t},
                           {"x", vec_to_json(r.x)},
                           {"consensus_spread", r.consensus_spread},
                           {"audit", r.audit}};
    if (r.sigma.size() > 0) line["sigma"] = vec_to_json(r.sigma);
    if (!r.snapshots.is_null()) line["states"] = r.snapshots;
    out += line.dump();
    out += '\n';
  }
  write_text_atomic(path, out);
}

}  // namespace swarmopt::netsim

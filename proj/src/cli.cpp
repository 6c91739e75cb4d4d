#include "swarmopt/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace swarmopt::cli {

using netsim::Algorithm;

std::string tag(Scenario s) {
  switch (s) {
    case Scenario::kTaskAssignment: return "task_assignment";
    case Scenario::kPev: return "pev";
    case Scenario::kSurveillance: return "surveillance";
    case Scenario::kResourceAllocation: return "resource_allocation";
    case Scenario::kCustom: return "custom";
  }
  throw InternalError("unknown scenario");
}

Scenario scenario_from_tag(const std::string& t) {
  for (Scenario s : {Scenario::kTaskAssignment, Scenario::kPev, Scenario::kSurveillance, Scenario::kResourceAllocation,
                     Scenario::kCustom}) {
    if (tag(s) == t) return s;
  }
  throw ConfigError("unknown scenario '" + t +
                    "' (expected task_assignment, pev, surveillance, resource_allocation or custom)");
}

// ---------------------------------------------------------------------------

nlohmann::json TopologySpec::to_json() const { return {{"kind", kind}, {"p", p}}; }

TopologySpec TopologySpec::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("topology must be an object");
  for (const auto& item : doc.items()) {
    if (item.key() != "kind" && item.key() != "p") throw ConfigError("unknown topology key '" + item.key() + "'");
  }
  TopologySpec t;
  try {
    t.kind = doc.value("kind", t.kind);
    t.p = doc.value("p", t.p);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad topology: ") + e.what());
  }
  static const char* const kinds[] = {"complete", "ring", "path", "erdos_renyi", "random_per_round"};
  if (std::find(std::begin(kinds), std::end(kinds), t.kind) == std::end(kinds)) {
    throw ConfigError("unknown topology kind '" + t.kind +
                      "' (expected complete, ring, path, erdos_renyi or random_per_round)");
  }
  if (!(t.p > 0.0 && t.p <= 1.0)) throw ConfigError("topology p must lie in (0, 1]");
  return t;
}

// ---------------------------------------------------------------------------

namespace {

const char* const kProblemTypes[] = {"constraint_coupled", "milp", "aggregative"};

netsim::Problem parse_custom_problem(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("type") || !doc.contains("data")) {
    throw ConfigError("custom scenario needs problem = {\"type\": ..., \"data\": ...}");
  }
  const std::string type = doc.at("type").is_string() ? doc.at("type").get<std::string>() : "";
  try {
    netsim::Problem p;
    if (type == "constraint_coupled") {
      p = problems::cc_problem_from_json(doc.at("data"));
    } else if (type == "milp") {
      p = problems::milp_problem_from_json(doc.at("data"));
    } else if (type == "aggregative") {
      p = problems::aggregative_problem_from_json(doc.at("data"));
    } else {
      throw ConfigError("unknown problem type '" + type + "' (expected constraint_coupled, milp or aggregative)");
    }
    std::visit([](const auto& q) { q.validate(); }, p);
    return p;
  } catch (const ConfigError&) {
    throw;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad custom problem: ") + e.what());
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("bad custom problem: ") + e.what());
  }
}

std::string join_tags(const std::vector<Algorithm>& algs) {
  std::string out;
  for (std::size_t k = 0; k < algs.size(); ++k) {
    if (k > 0) out += k + 1 == algs.size() ? " or " : ", ";
    out += netsim::tag(algs[k]);
  }
  return out;
}

}  // namespace

nlohmann::json ExperimentSpec::to_json() const {
  nlohmann::json algs = nlohmann::json::array();
  for (Algorithm a : algorithms) algs.push_back(netsim::tag(a));
  nlohmann::json doc = {{"scenario", tag(scenario)},
                        {"algorithms", algs},
                        {"robots", robots},
                        {"rounds", rounds},
                        {"seeds", seeds},
                        {"params", params.to_json()},
                        {"topology", topology.to_json()},
                        {"cadence", cadence},
                        {"output_dir", output_dir},
                        {"budget", budget},
                        {"x_max", x_max},
                        {"horizon", horizon}};
  if (!problem.is_null()) doc["problem"] = problem;
  return doc;
}

ExperimentSpec ExperimentSpec::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("experiment spec must be a JSON object");
  static const char* const known[] = {"scenario", "algorithm", "algorithms", "robots", "rounds",
                                      "seeds",    "params",    "topology",   "cadence", "output_dir",
                                      "budget",   "x_max",     "horizon",    "problem"};
  for (const auto& item : doc.items()) {
    if (std::find(std::begin(known), std::end(known), item.key()) == std::end(known)) {
      throw ConfigError("unknown spec key '" + item.key() + "'");
    }
  }
  ExperimentSpec s;
  try {
    if (!doc.contains("scenario")) throw ConfigError("spec needs a scenario");
    s.scenario = scenario_from_tag(doc.at("scenario").get<std::string>());
    if (doc.contains("algorithm") && doc.contains("algorithms")) {
      throw ConfigError("give either algorithm or algorithms, not both");
    }
    if (doc.contains("algorithm")) {
      s.algorithms.push_back(netsim::algorithm_from_tag(doc.at("algorithm").get<std::string>()));
    } else if (doc.contains("algorithms")) {
      for (const auto& a : doc.at("algorithms")) s.algorithms.push_back(netsim::algorithm_from_tag(a.get<std::string>()));
    }
    s.robots = doc.value("robots", s.robots);
    s.rounds = doc.value("rounds", s.rounds);
    if (doc.contains("seeds")) s.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
    if (doc.contains("params")) s.params = netsim::StepParams::from_json(doc.at("params"));
    if (doc.contains("topology")) s.topology = TopologySpec::from_json(doc.at("topology"));
    s.cadence = doc.value("cadence", s.cadence);
    s.output_dir = doc.value("output_dir", s.output_dir);
    s.budget = doc.value("budget", s.budget);
    s.x_max = doc.value("x_max", s.x_max);
    s.horizon = doc.value("horizon", s.horizon);
    if (doc.contains("problem")) s.problem = doc.at("problem");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad spec: ") + e.what());
  }

  if (s.algorithms.empty()) throw ConfigError("spec needs at least one algorithm");
  if (s.rounds < 1) throw ConfigError("rounds must be at least 1");
  if (s.seeds.empty()) throw ConfigError("seeds must not be empty");
  if (s.cadence < 0) throw ConfigError("cadence must be nonnegative");
  if (s.output_dir.empty()) throw ConfigError("output_dir must not be empty");
  if (s.scenario == Scenario::kCustom) {
    const int n = std::visit([](const auto& q) { return q.size(); }, parse_custom_problem(s.problem));
    if (s.robots != 0 && s.robots != n) {
      throw ConfigError("robots = " + std::to_string(s.robots) + " but the custom problem has " + std::to_string(n));
    }
  } else {
    if (!s.problem.is_null()) throw ConfigError("problem is only read by the custom scenario");
    if (s.robots < 1) throw ConfigError("robots must be at least 1");
    if (s.scenario == Scenario::kPev && s.horizon < 1) throw ConfigError("horizon must be at least 1");
    if (s.scenario == Scenario::kResourceAllocation && !(s.x_max > 0.0)) throw ConfigError("x_max must be positive");
  }
  check_compatibility(s);
  return s;
}

bool ExperimentSpec::operator==(const ExperimentSpec& other) const { return to_json() == other.to_json(); }

ExperimentSpec load_spec(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read spec " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return ExperimentSpec::from_json(doc);
}

std::vector<Algorithm> compatible_algorithms(const ExperimentSpec& spec) {
  const std::vector<Algorithm> aggregative = {Algorithm::kTracking, Algorithm::kFrankWolfe, Algorithm::kAdmm};
  switch (spec.scenario) {
    case Scenario::kTaskAssignment:
    case Scenario::kPev: return {Algorithm::kDualDecomposition};
    case Scenario::kSurveillance:
    case Scenario::kResourceAllocation: return aggregative;
    case Scenario::kCustom: {
      const std::string type = spec.problem.value("type", "");
      if (type == "constraint_coupled") return {Algorithm::kDualDecomposition};
      if (type == "milp") return {Algorithm::kPrimalDecomposition};
      if (type == "aggregative") return aggregative;
      return {};
    }
  }
  throw InternalError("unknown scenario");
}

void check_compatibility(const ExperimentSpec& spec) {
  const auto ok = compatible_algorithms(spec);
  std::string subject = "scenario " + tag(spec.scenario);
  if (spec.scenario == Scenario::kCustom) subject += " with a " + spec.problem.value("type", std::string("?")) + " problem";
  for (Algorithm a : spec.algorithms) {
    if (std::find(ok.begin(), ok.end(), a) == ok.end()) {
      throw ConfigError("incompatible pairing: " + subject + " runs only " + join_tags(ok) + ", not " +
                        netsim::tag(a));
    }
  }
}

// ---------------------------------------------------------------------------

Mat random_assignment_costs(int n, std::uint64_t seed) {
  Rng rng(seed);
  Mat c(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) c(i, j) = rng.uniform();
  }
  return c;
}

netsim::Problem build_problem(const ExperimentSpec& spec, std::uint64_t seed) {
  const int n = spec.robots;
  switch (spec.scenario) {
    case Scenario::kTaskAssignment: return problems::build_task_assignment(random_assignment_costs(n, seed));
    case Scenario::kPev: return problems::build_pev_charging(problems::random_pev_data(n, seed, spec.horizon));
    case Scenario::kSurveillance:
      return problems::build_target_surveillance(problems::random_surveillance_data(n, seed));
    case Scenario::kResourceAllocation:
      return problems::build_resource_allocation(
          problems::random_resource_allocation_data(n, seed, spec.budget, spec.x_max));
    case Scenario::kCustom: return parse_custom_problem(spec.problem);
  }
  throw InternalError("unknown scenario");
}

graph::TopologySchedule build_topology(const TopologySpec& spec, int robots, std::uint64_t seed) {
  const std::uint64_t graph_seed = derive_seed(seed, 1);
  if (spec.kind == "complete") return graph::TopologySchedule::fixed(graph::Topology::complete(robots));
  if (spec.kind == "ring") return graph::TopologySchedule::fixed(graph::Topology::ring(robots));
  if (spec.kind == "path") return graph::TopologySchedule::fixed(graph::Topology::path(robots));
  if (spec.kind == "erdos_renyi") {
    return graph::TopologySchedule::fixed(graph::build_erdos_renyi(robots, spec.p, graph_seed));
  }
  if (spec.kind == "random_per_round") return graph::TopologySchedule::random_per_round(robots, spec.p, graph_seed);
  throw ConfigError("unknown topology kind '" + spec.kind + "'");
}

netsim::RunConfig make_run_config(const ExperimentSpec& spec, Algorithm algorithm, std::uint64_t seed) {
  netsim::RunConfig c;
  c.algorithm = algorithm;
  c.problem = build_problem(spec, seed);
  const int n = std::visit([](const auto& q) { return q.size(); }, c.problem);
  c.topology = build_topology(spec.topology, n, seed);
  c.params = spec.params;
  c.rounds = spec.rounds;
  c.seed = seed;
  c.cadence = spec.cadence;
  return c;
}

std::string problem_hash(const netsim::Problem& problem) {
  return std::visit([](const auto& q) { return problems::problem_hash(problems::to_json(q)); }, problem);
}

oracle::OracleSolution solve_reference(const netsim::Problem& problem) {
  if (const auto* cc = std::get_if<problems::ConstraintCoupledProblem>(&problem)) {
    return oracle::solve_cc_centralized(*cc);
  }
  if (const auto* m = std::get_if<problems::MilpProblem>(&problem)) return oracle::enumerate_milp(*m);
  return oracle::solve_agg_centralized(std::get<problems::AggregativeProblem>(problem));
}

std::filesystem::path resolve_fixtures_dir(const std::optional<std::filesystem::path>& flag,
                                           const std::filesystem::path& out_dir) {
  if (flag) return *flag;
  if (const char* env = std::getenv("SWARMOPT_FIXTURES"); env != nullptr && *env != '\0') return env;
  return out_dir / "fixtures";
}

std::vector<netsim::MetricsRow> max_over_seeds(const std::vector<std::vector<netsim::MetricsRow>>& runs) {
  if (runs.empty()) return {};
  std::vector<netsim::MetricsRow> out = runs.front();
  auto worse = [](double a, double b) { return std::isnan(a) || std::isnan(b) ? NAN : std::max(a, b); };
  for (std::size_t k = 1; k < runs.size(); ++k) {
    if (runs[k].size() != out.size()) throw InternalError("seed runs recorded different rounds");
    for (std::size_t r = 0; r < out.size(); ++r) {
      const auto& row = runs[k][r];
      if (row.t != out[r].t) throw InternalError("seed runs recorded different rounds");
      out[r].cost_error = worse(out[r].cost_error, row.cost_error);
      out[r].coupling_violation = worse(out[r].coupling_violation, row.coupling_violation);
      out[r].consensus_error = worse(out[r].consensus_error, row.consensus_error);
      out[r].opt_error = worse(out[r].opt_error, row.opt_error);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// SVG charts.

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

}  // namespace

std::string svg_line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<Series>& series, bool log_y) {
  constexpr double kW = 760, kH = 460, kLeft = 80, kRight = 150, kTop = 40, kBottom = 60;
  const double pw = kW - kLeft - kRight;
  const double ph = kH - kTop - kBottom;

  // Drawable points in plot coordinates before scaling.
  std::vector<std::vector<std::pair<double, double>>> pts(series.size());
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& ser = series[s];
    for (std::size_t k = 0; k < std::min(ser.x.size(), ser.y.size()); ++k) {
      double y = ser.y[k];
      if (!std::isfinite(y) || !std::isfinite(ser.x[k]) || (log_y && y <= 0.0)) {
        pts[s].push_back({NAN, NAN});  // gap marker
        continue;
      }
      if (log_y) y = std::log10(y);
      pts[s].push_back({ser.x[k], y});
      x0 = std::min(x0, ser.x[k]);
      x1 = std::max(x1, ser.x[k]);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  const bool empty = !(x0 <= x1);
  if (empty) {
    x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  }
  if (x1 == x0) x1 = x0 + 1;
  if (log_y) {
    y0 = std::floor(y0);
    y1 = std::ceil(y1);
    if (y1 == y0) y1 = y0 + 1;
  } else {
    const double pad = y1 > y0 ? 0.05 * (y1 - y0) : std::max(1.0, std::abs(y0) * 0.1);
    y0 -= pad;
    y1 += pad;
  }
  auto sx = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
  auto sy = [&](double y) { return kTop + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\" viewBox=\"0 0 " << kW
    << ' ' << kH << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << kW / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << xml_escape(title)
    << "</text>\n";
  o << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";

  // y ticks: decades on a log axis (thinned to at most 10), 5 steps otherwise.
  if (log_y) {
    const int decades = static_cast<int>(y1 - y0);
    const int step = std::max(1, (decades + 9) / 10);
    for (int e = static_cast<int>(y0); e <= static_cast<int>(y1); e += step) {
      const double y = sy(e);
      o << "<line x1=\"" << kLeft << "\" x2=\"" << kLeft + pw << "\" y1=\"" << y << "\" y2=\"" << y
        << "\" stroke=\"#dddddd\"/>\n";
      o << "<text x=\"" << kLeft - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">1e" << e << "</text>\n";
    }
  } else {
    for (int k = 0; k <= 5; ++k) {
      const double v = y0 + (y1 - y0) * k / 5.0;
      const double y = sy(v);
      o << "<line x1=\"" << kLeft << "\" x2=\"" << kLeft + pw << "\" y1=\"" << y << "\" y2=\"" << y
        << "\" stroke=\"#dddddd\"/>\n";
      o << "<text x=\"" << kLeft - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << fmt("%.4g", v)
        << "</text>\n";
    }
  }
  for (int k = 0; k <= 5; ++k) {
    const double v = x0 + (x1 - x0) * k / 5.0;
    o << "<text x=\"" << sx(v) << "\" y=\"" << kTop + ph + 18 << "\" text-anchor=\"middle\">" << fmt("%.6g", v)
      << "</text>\n";
  }
  o << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kH - 16 << "\" text-anchor=\"middle\">" << xml_escape(x_label)
    << "</text>\n";
  o << "<text transform=\"translate(18 " << kTop + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
    << xml_escape(y_label) << (log_y ? " (log scale)" : "") << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % std::size(kPalette)];
    std::string line;
    auto flush = [&] {
      if (!line.empty()) {
        o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"" << line << "\"/>\n";
      }
      line.clear();
    };
    for (const auto& [x, y] : pts[s]) {
      if (std::isnan(x)) {
        flush();
        continue;
      }
      if (!line.empty()) line += ' ';
      line += fmt("%.2f", sx(x)) + "," + fmt("%.2f", sy(y));
    }
    flush();
    const double ly = kTop + 16 + 18 * static_cast<double>(s);
    o << "<line x1=\"" << kLeft + pw + 12 << "\" x2=\"" << kLeft + pw + 36 << "\" y1=\"" << ly - 4 << "\" y2=\""
      << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << kLeft + pw + 42 << "\" y=\"" << ly << "\">" << xml_escape(series[s].label) << "</text>\n";
  }
  if (empty) {
    o << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\">"
      << (log_y ? "no positive values to plot" : "no values to plot") << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

// ---------------------------------------------------------------------------
// Commands.

namespace {

struct Context {
  ExperimentSpec spec;
  std::filesystem::path out_dir;
  std::filesystem::path fixtures_dir;
};

Context prepare(const CommandOptions& options) {
  Context c;
  c.spec = load_spec(options.spec);
  c.out_dir = options.out ? *options.out : std::filesystem::path(c.spec.output_dir);
  c.fixtures_dir = resolve_fixtures_dir(options.fixtures_dir, c.out_dir);
  // Validate every run up front so a bad parameter fails before any work.
  for (std::uint64_t seed : c.spec.seeds) {
    for (Algorithm a : c.spec.algorithms) netsim::validate(make_run_config(c.spec, a, seed));
  }
  return c;
}

template <typename Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

// Loads the fixture when present, otherwise solves. Empty when the oracle
// gives up on size; other failures propagate.
std::optional<oracle::OracleSolution> reference_for(const netsim::Problem& problem, const Context& ctx,
                                                    std::ostream& err) {
  const std::string hash = problem_hash(problem);
  if (auto cached = oracle::load_fixture(ctx.fixtures_dir, hash)) return cached;
  try {
    return solve_reference(problem);
  } catch (const ResourceError& e) {
    err << "warning: no reference for problem " << hash << " (" << e.what()
        << "); cost_error and opt_error are nan\n";
    return std::nullopt;
  }
}

std::string series_label(Algorithm a, std::size_t seeds) {
  return seeds > 1 ? netsim::tag(a) + " (max of " + std::to_string(seeds) + " seeds)" : netsim::tag(a);
}

Series metric_series(const std::string& label, const std::vector<netsim::MetricsRow>& rows,
                     double netsim::MetricsRow::*field) {
  Series s;
  s.label = label;
  for (const auto& r : rows) {
    s.x.push_back(static_cast<double>(r.t));
    s.y.push_back(r.*field);
  }
  return s;
}

bool aggregative(const netsim::Problem& p) { return std::holds_alternative<problems::AggregativeProblem>(p); }

}  // namespace

int cmd_run(const CommandOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Context ctx = prepare(options);
    const auto& spec = ctx.spec;
    std::filesystem::create_directories(ctx.out_dir);

    std::map<Algorithm, std::vector<std::vector<netsim::MetricsRow>>> per_alg;
    bool failed = false;
    bool agg = false;
    int files = 0;
    for (std::uint64_t seed : spec.seeds) {
      const netsim::Problem problem = build_problem(spec, seed);
      agg = aggregative(problem);
      const auto ref = reference_for(problem, ctx, err);
      for (Algorithm a : spec.algorithms) {
        const std::string name = netsim::tag(a);
        try {
          const auto result = netsim::run(make_run_config(spec, a, seed), ref);
          netsim::write_metrics_csv(ctx.out_dir / ("metrics_" + name + "_seed" + std::to_string(seed) + ".csv"),
                                    result.metrics);
          ++files;
          const auto& last = result.metrics.back();
          if (!options.quiet) {
            out << name << " seed " << seed << ": t=" << last.t << " cost_error=" << last.cost_error
                << " coupling_violation=" << last.coupling_violation << " opt_error=" << last.opt_error << '\n';
          }
          per_alg[a].push_back(result.metrics);
        } catch (const Error& e) {
          err << "error: " << name << " seed " << seed << ": " << e.what() << '\n';
          failed = true;
        }
      }
    }

    std::vector<Series> cost, second;
    for (Algorithm a : spec.algorithms) {
      const auto it = per_alg.find(a);
      if (it == per_alg.end()) continue;
      const auto rows = max_over_seeds(it->second);
      netsim::write_metrics_csv(ctx.out_dir / ("metrics_" + netsim::tag(a) + "_max.csv"), rows);
      ++files;
      const std::string label = series_label(a, it->second.size());
      cost.push_back(metric_series(label, rows, &netsim::MetricsRow::cost_error));
      second.push_back(metric_series(label, rows, agg ? &netsim::MetricsRow::opt_error
                                                      : &netsim::MetricsRow::coupling_violation));
    }
    const std::string title = tag(spec.scenario) + ", N = " + std::to_string(spec.robots);
    netsim::write_text_atomic(ctx.out_dir / "cost_error.svg",
                              svg_line_chart("Cost error, " + title, "round t", "cost error", cost, true));
    if (agg) {
      netsim::write_text_atomic(
          ctx.out_dir / "opt_error.svg",
          svg_line_chart("Relative optimality error, " + title, "round t", "opt error", second, true));
    } else {
      netsim::write_text_atomic(ctx.out_dir / "coupling_violation.svg",
                                svg_line_chart("Coupling violation, " + title, "round t", "violation", second, true));
    }
    if (!options.quiet) out << "wrote " << files << " CSV files and 2 SVG files to " << ctx.out_dir.string() << '\n';
    return failed ? 1 : 0;
  });
}

int cmd_oracle(const CommandOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Context ctx = prepare(options);
    int cached = 0;
    int computed = 0;
    for (std::uint64_t seed : ctx.spec.seeds) {
      const netsim::Problem problem = build_problem(ctx.spec, seed);
      const std::string hash = problem_hash(problem);
      if (oracle::load_fixture(ctx.fixtures_dir, hash)) {
        ++cached;
        if (!options.quiet) out << "seed " << seed << ": cached " << hash << '\n';
        continue;
      }
      const auto sol = solve_reference(problem);
      oracle::save_fixture(ctx.fixtures_dir, hash, sol);
      ++computed;
      if (!options.quiet) {
        out << "seed " << seed << ": computed " << hash << " f*=" << sol.f_star << " residual=" << sol.residual
            << " (" << sol.method << ")\n";
      }
    }
    out << (cached + computed) << " fixtures in " << ctx.fixtures_dir.string() << ": " << cached << " cached, "
        << computed << " computed\n";
    return 0;
  });
}

int cmd_sigma_trace(const CommandOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Context ctx = prepare(options);
    const auto& spec = ctx.spec;
    std::filesystem::create_directories(ctx.out_dir);
    bool failed = false;
    for (std::uint64_t seed : spec.seeds) {
      const netsim::Problem problem = build_problem(spec, seed);
      const auto* agg = std::get_if<problems::AggregativeProblem>(&problem);
      if (agg == nullptr) throw ConfigError("sigma-trace needs an aggregative scenario");
      const int dim = agg->aggregate_dim;
      const Vec ref = agg->sigma_reference.size() == dim ? agg->sigma_reference : Vec::Zero(dim);

      std::vector<std::string> columns;
      std::vector<long> ts;
      std::vector<std::vector<double>> values;  // one per column
      std::vector<Series> series;
      for (Algorithm a : spec.algorithms) {
        const std::string name = netsim::tag(a);
        netsim::RunResult result;
        try {
          result = netsim::run(make_run_config(spec, a, seed));
        } catch (const Error& e) {
          err << "error: " << name << " seed " << seed << ": " << e.what() << '\n';
          failed = true;
          continue;
        }
        if (ts.empty()) {
          for (const auto& r : result.trace) ts.push_back(r.t);
        }
        for (int c = 0; c < dim; ++c) {
          const std::string col = dim == 1 ? name : name + "_" + std::to_string(c);
          std::vector<double> v;
          Series s;
          s.label = col;
          for (const auto& r : result.trace) {
            v.push_back(r.sigma(c) - ref(c));
            s.x.push_back(static_cast<double>(r.t));
            s.y.push_back(v.back());
          }
          columns.push_back(col);
          values.push_back(std::move(v));
          series.push_back(std::move(s));
        }
      }
      if (columns.empty()) continue;

      std::string csv = "t";
      for (const auto& c : columns) csv += "," + c;
      csv += '\n';
      for (std::size_t r = 0; r < ts.size(); ++r) {
        csv += std::to_string(ts[r]);
        for (const auto& v : values) csv += "," + fmt("%.17g", v[r]);
        csv += '\n';
      }
      const std::string stem = "sigma_trace_seed" + std::to_string(seed);
      netsim::write_text_atomic(ctx.out_dir / (stem + ".csv"), csv);
      netsim::write_text_atomic(ctx.out_dir / (stem + ".svg"),
                                svg_line_chart("sigma(x^t) - reference, " + tag(spec.scenario) + ", seed " +
                                                   std::to_string(seed),
                                               "round t", "sigma - reference", series, false));
      if (!options.quiet) out << "wrote " << stem << ".csv and " << stem << ".svg\n";
    }
    if (!options.quiet) {
      out << "note: positive values are legal; the budget enters the cost as a penalty, so configurations above it "
             "are not forbidden\n";
    }
    return failed ? 1 : 0;
  });
}

int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"swarm-opt: distributed optimization experiments over a simulated robot network"};
  app.name("swarm-opt");
  app.require_subcommand(1);

  CommandOptions options;
  std::string spec, out_dir, fixtures;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--spec", spec, "experiment spec (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory (overrides output_dir)");
    sub->add_option("--fixtures-dir", fixtures, "oracle fixture directory (default $SWARMOPT_FIXTURES or <out>/fixtures)");
    sub->add_flag("--quiet", options.quiet, "only report errors and the summary");
  };
  CLI::App* run = app.add_subcommand("run", "run the algorithms and write metrics CSVs and SVG plots");
  CLI::App* orc = app.add_subcommand("oracle", "solve the centralized references and cache them as fixtures");
  CLI::App* sig = app.add_subcommand("sigma-trace", "write sigma(x^t) - reference per algorithm");
  for (CLI::App* sub : {run, orc, sig}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }
  options.spec = spec;
  if (!out_dir.empty()) options.out = out_dir;
  if (!fixtures.empty()) options.fixtures_dir = fixtures;

  if (run->parsed()) return cmd_run(options, out, err);
  if (orc->parsed()) return cmd_oracle(options, out, err);
  return cmd_sigma_trace(options, out, err);
}

}  // namespace swarmopt::cli

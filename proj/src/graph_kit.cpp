#include "swarmopt/graph_kit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

namespace swarmopt::graph {

Topology::Topology(int n_robots, std::set<Edge> edges, bool undirected)
    : n_(n_robots), undirected_(undirected), edges_(std::move(edges)) {
  if (n_ < 1) throw ParameterError("topology needs at least one robot");
  for (const auto& [i, j] : edges_) {
    if (i == j) throw ParameterError("self-loop on robot " + std::to_string(i));
    if (i < 0 || j < 0 || i >= n_ || j >= n_) {
      throw ParameterError("edge (" + std::to_string(i) + "," + std::to_string(j) +
                           ") out of range for n=" + std::to_string(n_));
    }
  }
  if (undirected_) {
    for (const auto& [i, j] : edges_) {
      if (!edges_.count({j, i})) {
        throw ParameterError("undirected topology missing reverse of (" + std::to_string(i) + "," +
                             std::to_string(j) + ")");
      }
    }
  }
  in_.assign(static_cast<std::size_t>(n_), {});
  out_.assign(static_cast<std::size_t>(n_), {});
  for (const auto& [i, j] : edges_) {
    out_[static_cast<std::size_t>(i)].push_back(j);
    in_[static_cast<std::size_t>(j)].push_back(i);
  }
  for (auto& v : in_) std::sort(v.begin(), v.end());
}

namespace {

std::set<Topology::Edge> symmetric(const std::vector<Topology::Edge>& pairs) {
  std::set<Topology::Edge> out;
  for (const auto& [i, j] : pairs) {
    out.insert({i, j});
    out.insert({j, i});
  }
  return out;
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(static_cast<std::size_t>(n)) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      auto& p = parent[static_cast<std::size_t>(x)];
      p = parent[static_cast<std::size_t>(p)];
      x = p;
    }
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[static_cast<std::size_t>(b)] = a;
    return true;
  }
};

std::vector<bool> reach(const Topology& topo, int start, bool forward) {
  std::vector<bool> seen(static_cast<std::size_t>(topo.size()), false);
  std::queue<int> q;
  q.push(start);
  seen[static_cast<std::size_t>(start)] = true;
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    const auto& next = forward ? topo.out_neighbors(u) : topo.in_neighbors(u);
    for (int v : next) {
      if (!seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = true;
        q.push(v);
      }
    }
  }
  return seen;
}

}  // namespace

Topology Topology::path(int n) {
  std::vector<Topology::Edge> pairs;
  for (int i = 0; i + 1 < n; ++i) pairs.emplace_back(i, i + 1);
  return Topology(n, symmetric(pairs), true);
}

Topology Topology::complete(int n) {
  std::vector<Topology::Edge> pairs;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  return Topology(n, symmetric(pairs), true);
}

Topology Topology::ring(int n) {
  std::vector<Topology::Edge> pairs;
  for (int i = 0; i < n; ++i) {
    if (n > 1 && (i + 1) % n != i) pairs.emplace_back(i, (i + 1) % n);
  }
  return Topology(n, symmetric(pairs), true);
}

Topology build_erdos_renyi(int n, double p, std::uint64_t seed) {
  if (n < 2) throw ParameterError("erdos-renyi needs n >= 2");
  if (!(p > 0.0 && p <= 1.0)) throw ParameterError("erdos-renyi needs 0 < p <= 1");

  Rng rng(seed);
  std::vector<Topology::Edge> pairs;
  UnionFind uf(n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (rng.uniform() < p) {
        pairs.emplace_back(i, j);
        uf.unite(i, j);
      }
    }
  }

  // Repair: walk a random spanning tree (random attachment order) and keep
  // only the tree edges that merge two components.
  Rng tree_rng(derive_seed(seed, 1));
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t k = order.size() - 1; k > 0; --k) {
    std::swap(order[k], order[tree_rng.below(k + 1)]);
  }
  for (std::size_t k = 1; k < order.size(); ++k) {
    const int child = order[k];
    const int parent = order[tree_rng.below(k)];
    if (uf.unite(child, parent)) pairs.emplace_back(std::min(child, parent), std::max(child, parent));
  }
  return Topology(n, symmetric(pairs), true);
}

WeightMatrix metropolis_weights(const Topology& topo) {
  if (!topo.undirected()) {
    throw UnsupportedError("metropolis weights require an undirected topology");
  }
  const int n = topo.size();
  Mat w = Mat::Zero(n, n);
  for (const auto& [i, j] : topo.edges()) {
    w(i, j) = 1.0 / (1.0 + std::max(topo.degree(i), topo.degree(j)));
  }
  for (int i = 0; i < n; ++i) {
    double off = 0.0;
    for (int j : topo.in_neighbors(i)) off += w(i, j);
    w(i, i) = 1.0 - off;
  }
  return WeightMatrix{std::move(w)};
}

bool is_strongly_connected(const Topology& topo) {
  const auto fwd = reach(topo, 0, true);
  const auto bwd = reach(topo, 0, false);
  return std::all_of(fwd.begin(), fwd.end(), [](bool b) { return b; }) &&
         std::all_of(bwd.begin(), bwd.end(), [](bool b) { return b; });
}

bool check_doubly_stochastic(const WeightMatrix& w, double tol) {
  const Mat& a = w.entries;
  if (a.rows() != a.cols()) return false;
  if ((a.array() < 0.0).any()) return false;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    if (std::abs(a.row(i).sum() - 1.0) > tol) return false;
    if (std::abs(a.col(i).sum() - 1.0) > tol) return false;
  }
  return true;
}

bool respects_sparsity(const WeightMatrix& w, const Topology& topo) {
  for (int i = 0; i < w.size(); ++i) {
    for (int j = 0; j < w.size(); ++j) {
      if (i != j && w.entries(i, j) > 0.0 && !topo.has_edge(j, i)) return false;
    }
  }
  return true;
}

TopologySchedule TopologySchedule::fixed(Topology topo) {
  return periodic({std::move(topo)});
}

TopologySchedule TopologySchedule::periodic(std::vector<Topology> cycle) {
  if (cycle.empty()) throw ParameterError("topology schedule needs at least one topology");
  TopologySchedule s;
  s.mode_ = cycle.size() == 1 ? Mode::kStatic : Mode::kPeriodic;
  s.n_ = cycle.front().size();
  for (const auto& t : cycle) {
    if (t.size() != s.n_) throw ParameterError("topology schedule mixes robot counts");
  }
  for (const auto& t : cycle) {
    // Weights only exist for undirected members; directed ones are allowed in
    // the schedule but cannot drive a weighted algorithm.
    s.cycle_weights_.push_back(t.undirected() ? metropolis_weights(t) : WeightMatrix{Mat()});
  }
  s.cycle_ = std::move(cycle);
  return s;
}

TopologySchedule TopologySchedule::random_per_round(int n, double p, std::uint64_t seed) {
  if (n < 2) throw ParameterError("random schedule needs n >= 2");
  if (!(p > 0.0 && p <= 1.0)) throw ParameterError("random schedule needs 0 < p <= 1");
  TopologySchedule s;
  s.mode_ = Mode::kRandomPerRound;
  s.n_ = n;
  s.p_ = p;
  s.seed_ = seed;
  return s;
}

Topology TopologySchedule::at(long t) const {
  if (t < 0) throw ParameterError("negative round index");
  if (mode_ == Mode::kRandomPerRound) {
    return build_erdos_renyi(n_, p_, derive_seed(seed_, static_cast<std::uint64_t>(t)));
  }
  return cycle_[static_cast<std::size_t>(t) % cycle_.size()];
}

WeightMatrix TopologySchedule::weights_at(long t) const {
  if (mode_ == Mode::kRandomPerRound) return metropolis_weights(at(t));
  const auto& w = cycle_weights_[static_cast<std::size_t>(t) % cycle_.size()];
  if (w.entries.size() == 0) throw UnsupportedError("no weights for a directed topology");
  return w;
}

bool TopologySchedule::is_jointly_connected(int window, long horizon) const {
  if (window < 1) throw ParameterError("window must be positive");
  for (long t0 = 0; t0 < horizon; ++t0) {
    std::set<Topology::Edge> all;
    bool undirected = true;
    for (long t = t0; t < t0 + window; ++t) {
      const Topology topo = at(t);
      undirected = undirected && topo.undirected();
      all.insert(topo.edges().begin(), topo.edges().end());
    }
    if (!is_strongly_connected(Topology(n_, all, undirected))) return false;
  }
  return true;
}

nlohmann::json to_json(const Topology& topo) {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [i, j] : topo.edges()) edges.push_back({i, j});
  return {{"n", topo.size()}, {"undirected", topo.undirected()}, {"edges", edges}};
}

Topology topology_from_json(const nlohmann::json& doc) {
  try {
    std::set<Topology::Edge> edges;
    for (const auto& e : doc.at("edges")) edges.insert({e.at(0).get<int>(), e.at(1).get<int>()});
    return Topology(doc.at("n").get<int>(), std::move(edges), doc.at("undirected").get<bool>());
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("malformed topology document: ") + e.what());
  }
}

}  // namespace swarmopt::graph

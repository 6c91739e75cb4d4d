#pragma once

#include "swarmopt/core.hpp"

#include <json.hpp>

#include <cstdint>
#include <set>
#include <utility>
#include <vector>

namespace swarmopt::graph {

/// Communication digraph over robots 0..n-1. An edge (i, j) means robot i
/// can send to robot j, so j's in-neighbors are {i : (i, j) in edges}.
class Topology {
 public:
  using Edge = std::pair<int, int>;

  Topology(int n_robots, std::set<Edge> edges, bool undirected);

  int size() const { return n_; }
  bool undirected() const { return undirected_; }
  const std::set<Edge>& edges() const { return edges_; }
  bool has_edge(int from, int to) const { return edges_.count({from, to}) > 0; }

  /// In-neighbors of `i`, ascending.
  const std::vector<int>& in_neighbors(int i) const { return in_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& out_neighbors(int i) const { return out_[static_cast<std::size_t>(i)]; }
  int degree(int i) const { return static_cast<int>(in_neighbors(i).size()); }

  /// Number of unordered pairs for undirected graphs, ordered pairs otherwise.
  std::size_t edge_count() const { return undirected_ ? edges_.size() / 2 : edges_.size(); }

  bool operator==(const Topology& other) const {
    return n_ == other.n_ && undirected_ == other.undirected_ && edges_ == other.edges_;
  }

  static Topology path(int n);
  static Topology complete(int n);
  static Topology ring(int n);

 private:
  int n_;
  bool undirected_;
  std::set<Edge> edges_;
  std::vector<std::vector<int>> in_;
  std::vector<std::vector<int>> out_;
};

/// Row-stochastic and column-stochastic weights; entry (i, j) is the weight
/// robot i puts on robot j's value.
struct WeightMatrix {
  Mat entries;
  int size() const { return static_cast<int>(entries.rows()); }
};

Topology build_erdos_renyi(int n, double p, std::uint64_t seed);

WeightMatrix metropolis_weights(const Topology& topo);

bool is_strongly_connected(const Topology& topo);

bool check_doubly_stochastic(const WeightMatrix& w, double tol);

/// Checks that w_ij > 0 only on i == j or where (j, i) is an edge.
bool respects_sparsity(const WeightMatrix& w, const Topology& topo);

/// Time-indexed sequence of topologies sharing one robot count.
class TopologySchedule {
 public:
  enum class Mode { kStatic, kPeriodic, kRandomPerRound };

  static TopologySchedule fixed(Topology topo);
  static TopologySchedule periodic(std::vector<Topology> cycle);
  /// A fresh connected ER draw per round, seeded from (seed, t).
  static TopologySchedule random_per_round(int n, double p, std::uint64_t seed);

  Mode mode() const { return mode_; }
  int size() const { return n_; }
  Topology at(long t) const;
  /// Metropolis weights for round t (cached for static and periodic modes).
  WeightMatrix weights_at(long t) const;

  /// True when the union of every `window` consecutive rounds starting at
  /// 0..horizon-1 is strongly connected.
  bool is_jointly_connected(int window, long horizon) const;

 private:
  Mode mode_ = Mode::kStatic;
  int n_ = 0;
  std::vector<Topology> cycle_;
  std::vector<WeightMatrix> cycle_weights_;
  double p_ = 0.0;
  std::uint64_t seed_ = 0;
};

nlohmann::json to_json(const Topology& topo);
Topology topology_from_json(const nlohmann::json& doc);

}  // namespace swarmopt::graph

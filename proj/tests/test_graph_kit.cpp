#include "swarmopt/graph_kit.hpp"

#include <doctest.h>

using namespace swarmopt;
using namespace swarmopt::graph;

TEST_CASE("complete ER graph on two robots is a single undirected edge") {
  const Topology t = build_erdos_renyi(2, 1.0, 0);
  CHECK(t.undirected());
  CHECK(t.edge_count() == 1);
  CHECK(t.has_edge(0, 1));
  CHECK(t.has_edge(1, 0));
}

TEST_CASE("ER draw with seed 7 is connected") {
  const Topology t = build_erdos_renyi(10, 0.2, 7);
  CHECK(t.size() == 10);
  CHECK(is_strongly_connected(t));
}

TEST_CASE("near-empty ER draw is repaired into a spanning tree") {
  const Topology t = build_erdos_renyi(5, 1e-6, 1);
  CHECK(is_strongly_connected(t));
  CHECK(t.edge_count() == 4);
}

TEST_CASE("ER draws are reproducible") {
  CHECK(build_erdos_renyi(12, 0.3, 42) == build_erdos_renyi(12, 0.3, 42));
}

TEST_CASE("ER rejects bad parameters") {
  CHECK_THROWS_AS(build_erdos_renyi(0, 0.5, 1), ParameterError);
  CHECK_THROWS_AS(build_erdos_renyi(4, 1.5, 1), ParameterError);
}

TEST_CASE("Metropolis weights on a three-node path") {
  const WeightMatrix w = metropolis_weights(Topology::path(3));
  const Mat& e = w.entries;
  CHECK(e(0, 1) == doctest::Approx(1.0 / 3.0));
  CHECK(e(1, 2) == doctest::Approx(1.0 / 3.0));
  CHECK(e(0, 0) == doctest::Approx(2.0 / 3.0));
  CHECK(e(2, 2) == doctest::Approx(2.0 / 3.0));
  CHECK(e(1, 1) == doctest::Approx(1.0 / 3.0));
  CHECK(e(0, 2) == 0.0);
  CHECK(check_doubly_stochastic(w, 1e-12));
}

TEST_CASE("Metropolis weights on a single robot") {
  const WeightMatrix w = metropolis_weights(Topology(1, {}, true));
  REQUIRE(w.size() == 1);
  CHECK(w.entries(0, 0) == 1.0);
}

TEST_CASE("Metropolis weights on a triangle are uniform") {
  const WeightMatrix w = metropolis_weights(Topology::complete(3));
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) CHECK(w.entries(i, j) == doctest::Approx(1.0 / 3.0));
  }
}

TEST_CASE("Metropolis weights refuse directed graphs") {
  const Topology directed(3, {{0, 1}, {1, 2}, {2, 0}}, false);
  CHECK_THROWS_AS(metropolis_weights(directed), UnsupportedError);
}

TEST_CASE("Metropolis weights are doubly stochastic and sparse on random graphs") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const Topology t = build_erdos_renyi(15, 0.15, seed);
    const WeightMatrix w = metropolis_weights(t);
    CHECK(check_doubly_stochastic(w, 1e-12));
    CHECK(respects_sparsity(w, t));
    CHECK((w.entries - w.entries.transpose()).lpNorm<Eigen::Infinity>() == 0.0);
  }
}

TEST_CASE("row-stochastic but not column-stochastic matrix is rejected") {
  WeightMatrix w;
  w.entries = Mat(2, 2);
  w.entries << 0.5, 0.5, 0.25, 0.75;
  CHECK_FALSE(check_doubly_stochastic(w, 1e-9));
}

TEST_CASE("strong connectivity of directed graphs") {
  CHECK(is_strongly_connected(Topology(3, {{0, 1}, {1, 2}, {2, 0}}, false)));
  CHECK_FALSE(is_strongly_connected(Topology(3, {{0, 1}, {1, 2}}, false)));
  CHECK_FALSE(is_strongly_connected(Topology(4, {{0, 1}, {1, 0}, {2, 3}, {3, 2}}, true)));
}

TEST_CASE("topology validation") {
  CHECK_THROWS_AS(Topology(2, {{0, 0}}, false), ParameterError);
  CHECK_THROWS_AS(Topology(2, {{0, 2}}, false), ParameterError);
  CHECK_THROWS_AS(Topology(2, {{0, 1}}, true), ParameterError);
}

TEST_CASE("topology JSON round trip") {
  const Topology t = build_erdos_renyi(8, 0.3, 3);
  const auto doc = to_json(t);
  CHECK(doc.at("n").get<int>() == 8);
  CHECK(topology_from_json(doc) == t);
  CHECK_THROWS_AS(topology_from_json(nlohmann::json::parse(R"({"n": 2})")), ParameterError);
}

TEST_CASE("periodic schedule cycles and is jointly connected") {
  const Topology a(4, {{0, 1}, {1, 0}, {2, 3}, {3, 2}}, true);
  const Topology b(4, {{1, 2}, {2, 1}}, true);
  const TopologySchedule s = TopologySchedule::periodic({a, b});
  CHECK(s.at(0) == a);
  CHECK(s.at(1) == b);
  CHECK(s.at(4) == a);
  CHECK(s.is_jointly_connected(2, 10));
  CHECK_FALSE(s.is_jointly_connected(1, 10));
  CHECK(check_doubly_stochastic(s.weights_at(3), 1e-12));
}

TEST_CASE("random per-round schedule is connected every round and reproducible") {
  const TopologySchedule s = TopologySchedule::random_per_round(6, 0.2, 11);
  const TopologySchedule s2 = TopologySchedule::random_per_round(6, 0.2, 11);
  bool differs = false;
  for (long t = 0; t < 20; ++t) {
    CHECK(is_strongly_connected(s.at(t)));
    CHECK(s.at(t) == s2.at(t));
    differs = differs || !(s.at(t) == s.at(0));
  }
  CHECK(differs);
}

#include <catch2/catch_amalgamated.hpp>

#include "qbn/graphs.hpp"
#include "qbn/json_io.hpp"

using namespace qbn;

namespace {

Graph make_graph(std::vector<std::vector<int>> parents) {
  const int n = static_cast<int>(parents.size());
  Graph g(n);
  for (int j = 0; j < n; ++j) g.parents[j] = list_to_mask(parents[j]);
  return g;
}

// The eight natural-order three-node DAGs, written (pa_0, pa_1, pa_2).
const std::vector<Graph> kDag3Table = {
    make_graph({{}, {}, {}}),     make_graph({{}, {0}, {}}),     make_graph({{}, {}, {1}}),
    make_graph({{}, {0}, {1}}),   make_graph({{}, {}, {0}}),     make_graph({{}, {0}, {0}}),
    make_graph({{}, {}, {0, 1}}), make_graph({{}, {0}, {0, 1}}),
};

}  // namespace

TEST_CASE("is_dag detects cycles and self-loops") {
  CHECK(is_dag(make_graph({{}, {}, {}})));
  CHECK(is_dag(make_graph({{}, {0}, {0, 1}})));
  CHECK_FALSE(is_dag(make_graph({{1}, {0}})));
  CHECK_FALSE(is_dag(make_graph({{0}, {}})));
  CHECK_FALSE(is_dag(make_graph({{1}, {2}, {0}})));
}

TEST_CASE("is_dag counts all labeled acyclic graphs") {
  // Every member of the full product set, acyclicity checked one by one.
  auto count_acyclic = [](int n) {
    Graph full(n);
    const NodeMask everything = bit(n) - 1;
    for (int j = 0; j < n; ++j) full.parents[j] = everything;
    int count = 0;
    for (const Graph& g : enumerate_subgraphs(full))
      if (is_dag(g)) ++count;
    return count;
  };
  CHECK(count_acyclic(2) == 3);
  CHECK(count_acyclic(3) == 25);
  CHECK(count_acyclic(4) == 543);
}

TEST_CASE("enumerate_dags reproduces the three-node table") {
  const auto dags = enumerate_dags(3);
  REQUIRE(dags.size() == 8);
  for (std::size_t i = 0; i < 8; ++i) CHECK(dags[i] == kDag3Table[i]);
}

TEST_CASE("enumerate_dags corner cases and counts") {
  CHECK(enumerate_dags(1) == std::vector<Graph>{Graph(1)});
  CHECK(enumerate_dags(4).size() == 64);
  for (int n = 1; n <= 5; ++n)
    CHECK(enumerate_dags(n).size() == (std::uint64_t{1} << (n * (n - 1) / 2)));
  CHECK_THROWS_AS(enumerate_dags(9), SizeError);
}

TEST_CASE("enumerate_dags agrees with subgraphs of the fully connected DAG") {
  const auto listed = enumerate_dags(4);
  auto direct = enumerate_subgraphs(fully_connected_graph(4));
  REQUIRE(direct.size() == listed.size());
  auto key = [](const Graph& g) { return g.parents; };
  std::vector<std::vector<NodeMask>> a, b;
  for (const auto& g : listed) a.push_back(key(g));
  for (const auto& g : direct) b.push_back(key(g));
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  CHECK(a == b);
  for (const auto& g : direct) CHECK(is_dag(g));
}

TEST_CASE("fcg_for_permutation matches the six three-node rows") {
  const std::vector<std::pair<std::vector<int>, Graph>> rows = {
      {{0, 1, 2}, make_graph({{}, {0}, {0, 1}})},  {{0, 2, 1}, make_graph({{}, {0, 2}, {0}})},
      {{1, 0, 2}, make_graph({{1}, {}, {0, 1}})},  {{2, 0, 1}, make_graph({{2}, {0, 2}, {}})},
      {{1, 2, 0}, make_graph({{1, 2}, {}, {1}})},  {{2, 1, 0}, make_graph({{1, 2}, {2}, {}})},
  };
  for (const auto& [image, expected] : rows) {
    const Graph got = fcg_for_permutation(Permutation(image));
    CHECK(got == expected);
    CHECK(is_dag(got));
  }
}

TEST_CASE("every permutation induces a full-count DAG family") {
  for (const Permutation& p : enumerate_permutations(4)) {
    const Graph frame = fcg_for_permutation(p);
    CHECK(is_dag(frame));
    auto family = enumerate_subgraphs(frame);
    CHECK(family.size() == 64);
    for (const Graph& g : family) CHECK(consistent(g, p));
  }
}

TEST_CASE("consistent checks containment in the induced frame") {
  const Permutation id = Permutation::identity(3);
  CHECK(consistent(fcg_for_permutation(id), id));
  CHECK(consistent(Graph(3), Permutation({2, 0, 1})));

  // Four-node example: order (3, 1, 0, 2) read off the inverse map.
  const Graph g = make_graph({{1}, {3}, {1, 3}, {}});
  std::vector<int> tau = {2, 1, 3, 0};
  std::vector<int> sigma(4);
  for (int j = 0; j < 4; ++j) sigma[tau[j]] = j;
  CHECK(consistent(g, Permutation(sigma)));
}

TEST_CASE("consistent_permutations brute force") {
  CHECK(consistent_permutations(Graph(3)).size() == 6);

  const auto only_id = consistent_permutations(fully_connected_graph(3));
  REQUIRE(only_id.size() == 1);
  CHECK(only_id[0] == Permutation::identity(3));

  // Node 0 feeding both others admits exactly the two orders that
  // start with 0.
  const auto fork = consistent_permutations(make_graph({{}, {0}, {0}}));
  REQUIRE(fork.size() == 2);
  CHECK(fork[0] == Permutation({0, 1, 2}));
  CHECK(fork[1] == Permutation({0, 2, 1}));
}

TEST_CASE("consistency round-trips through the permutation list") {
  for (const Graph& g : enumerate_dags(4)) {
    const auto orders = consistent_permutations(g);
    CHECK_FALSE(orders.empty());
    std::size_t member = 0;
    for (const Permutation& p : enumerate_permutations(4)) {
      const bool listed = std::find(orders.begin(), orders.end(), p) != orders.end();
      CHECK(consistent(g, p) == listed);
      if (listed) ++member;
    }
    CHECK(member == orders.size());
  }
}

TEST_CASE("combinations listing") {
  const std::vector<std::vector<int>> table = {
      {0, 1, 2}, {0, 1, 3}, {0, 1, 4}, {0, 2, 3}, {0, 2, 4},
      {0, 3, 4}, {1, 2, 3}, {1, 2, 4}, {1, 3, 4}, {2, 3, 4},
  };
  CHECK(combinations(5, 3) == table);
  CHECK(combinations(4, 0) == std::vector<std::vector<int>>{{}});
  CHECK(combinations(4, 4) == std::vector<std::vector<int>>{{0, 1, 2, 3}});
}

TEST_CASE("combinations size and ordering") {
  for (int n = 1; n <= 7; ++n) {
    for (int l = 0; l <= n; ++l) {
      const auto combos = combinations(n, l);
      CHECK(combos.size() == binomial(n, l));
      for (std::size_t i = 1; i < combos.size(); ++i) CHECK(combos[i - 1] < combos[i]);
    }
  }
  CHECK_THROWS_AS(combinations(3, 4), SizeError);
}

TEST_CASE("edge_feature membership") {
  const auto f = edge_feature(0, 2, 3);
  CHECK(f.node_allows(2, list_to_mask({0, 1})));
  CHECK_FALSE(f.node_allows(2, list_to_mask({1})));
  CHECK(f.node_allows(1, 0));

  CHECK(f.contains(make_graph({{}, {0}, {0, 1}})));
  CHECK_FALSE(edge_feature(1, 0, 3).contains(make_graph({{}, {0}, {}})));
  CHECK_THROWS_AS(edge_feature(1, 1, 3), InvalidFeatureError);
}

TEST_CASE("graph and feature serialization round-trips") {
  const Graph g = make_graph({{1}, {3}, {1, 3}, {}});
  CHECK(graph_from_json(to_json(g)) == g);

  const Permutation p({2, 0, 3, 1});
  CHECK(permutation_from_json(to_json(p)) == p);

  const auto edge = edge_feature(0, 2, 4);
  const auto edge_back = feature_from_json(to_json(edge));
  const auto trivial_back = feature_from_json(to_json(ModularFeatureSet::trivial(4)));
  auto explicit_set = ModularFeatureSet::trivial(3);
  explicit_set.per_node[1] = NodePredicate::explicit_masks({0, list_to_mask({0, 2})});
  const auto explicit_back = feature_from_json(to_json(explicit_set));
  for (const Graph& candidate : enumerate_dags(4)) {
    CHECK(edge.contains(candidate) == edge_back.contains(candidate));
    CHECK(trivial_back.contains(candidate));
  }
  for (const Graph& candidate : enumerate_dags(3))
    CHECK(explicit_set.contains(candidate) == explicit_back.contains(candidate));
}

TEST_CASE("stirling helper approximates log factorial") {
  for (int n : {4, 10, 40, 200}) {
    const double exact = log_factorial(n);
    const double approx = stirling_log_factorial(static_cast<double>(n));
    CHECK(std::abs(exact - approx) / exact < 0.01);
  }
}

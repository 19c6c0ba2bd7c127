#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <vector>

#include "qbn/common.hpp"

namespace qbn {

// A directed graph on nodes 0..n-1, identified with its tuple of parent
// sets. Any subset of {0..n-1} is a legal parent set here, including
// self-loops; acyclicity is a separate predicate (is_dag).
struct Graph {
  int n = 0;
  std::vector<NodeMask> parents;  // parents[j] = pa_j as a bit mask

  Graph() = default;
  explicit Graph(int node_count) : n(node_count), parents(node_count, 0) {
    check_node_count(node_count);
  }
  Graph(int node_count, std::vector<NodeMask> parent_masks)
      : n(node_count), parents(std::move(parent_masks)) {
    check_node_count(node_count);
    if (static_cast<int>(parents.size()) != n)
      throw DimensionError("graph needs one parent set per node");
    const NodeMask full = (n == 64) ? ~NodeMask{0} : (bit(n) - 1);
    for (NodeMask pa : parents)
      if ((pa & ~full) != 0) throw DimensionError("parent set outside node range");
  }

  bool operator==(const Graph& other) const = default;

  static void check_node_count(int n) {
    if (n < 1 || n > 64) throw SizeError("node count must be in 1..64");
  }
};

// Componentwise subset order on graphs.
inline bool subgraph_of(const Graph& g, const Graph& h) {
  if (g.n != h.n) return false;
  for (int j = 0; j < g.n; ++j)
    if ((g.parents[j] & ~h.parents[j]) != 0) return false;
  return true;
}

// A bijection on {0..n-1}; sigma[j] is the node placed at position j and
// tau is the cached inverse (tau[sigma[j]] = j).
struct Permutation {
  int n = 0;
  std::vector<int> sigma;
  std::vector<int> tau;

  Permutation() = default;
  explicit Permutation(std::vector<int> image) : n(static_cast<int>(image.size())), sigma(std::move(image)) {
    tau.assign(n, -1);
    for (int j = 0; j < n; ++j) {
      int v = sigma[j];
      if (v < 0 || v >= n || tau[v] != -1) throw DimensionError("permutation image is not a bijection");
      tau[v] = j;
    }
  }

  static Permutation identity(int n) {
    std::vector<int> image(n);
    std::iota(image.begin(), image.end(), 0);
    return Permutation(std::move(image));
  }

  // Image of a node set under sigma.
  NodeMask map_set(NodeMask s) const {
    NodeMask out = 0;
    for (int k : mask_to_list(s)) out |= bit(sigma[k]);
    return out;
  }

  bool operator==(const Permutation& other) const { return sigma == other.sigma; }
};

// All permutations of {0..n-1} in lexicographic order of the image tuple.
inline std::vector<Permutation> enumerate_permutations(int n, int bound = 8) {
  if (n < 1) throw SizeError("need at least one node");
  if (n > bound) throw SizeError("permutation enumeration limited to n <= " + std::to_string(bound));
  std::vector<int> image(n);
  std::iota(image.begin(), image.end(), 0);
  std::vector<Permutation> out;
  do {
    out.emplace_back(image);
  } while (std::next_permutation(image.begin(), image.end()));
  return out;
}

// True iff the edge relation k -> j for k in parents[j] has no directed
// cycle. Iteratively peels nodes whose remaining parent set is empty.
inline bool is_dag(const Graph& g) {
  NodeMask alive = (g.n == 64) ? ~NodeMask{0} : (bit(g.n) - 1);
  bool progress = true;
  while (alive != 0 && progress) {
    progress = false;
    for (int j = 0; j < g.n; ++j) {
      if (!has_bit(alive, j)) continue;
      if ((g.parents[j] & alive) == 0) {
        alive &= ~bit(j);
        progress = true;
      }
    }
  }
  return alive == 0;
}

// The unique fully connected DAG in the natural order: pa_j = {0..j-1}.
inline Graph fully_connected_graph(int n) {
  Graph g(n);
  for (int j = 0; j < n; ++j) g.parents[j] = bit(j) - 1;
  return g;
}

// The fully connected DAG induced by a permutation: node sigma[k] sits at
// position k and takes all earlier-placed nodes as parents.
inline Graph fcg_for_permutation(const Permutation& p) {
  Graph g(p.n);
  NodeMask placed = 0;
  for (int k = 0; k < p.n; ++k) {
    g.parents[p.sigma[k]] = placed;
    placed |= bit(p.sigma[k]);
  }
  return g;
}

// G is consistent with sigma when every parent set is contained in the
// corresponding parent set of fcg_for_permutation(sigma).
inline bool consistent(const Graph& g, const Permutation& p) {
  if (g.n != p.n) throw DimensionError("graph and permutation sizes differ");
  return subgraph_of(g, fcg_for_permutation(p));
}

// All permutations consistent with g, i.e. the topological orders of g.
inline std::vector<Permutation> consistent_permutations(const Graph& g, int bound = 8) {
  std::vector<Permutation> out;
  for (const Permutation& p : enumerate_permutations(g.n, bound))
    if (consistent(g, p)) out.push_back(p);
  return out;
}

// Natural-order DAGs (pa_j subset of {0..j-1}), in the table order used
// throughout: pa_{n-1} varies slowest, and within a node the rank of
// pa_j counts element 0 as the most significant indicator bit.
inline std::vector<Graph> enumerate_dags(int n, int bound = 5) {
  Graph::check_node_count(n);
  if (n > bound) throw SizeError("DAG enumeration limited to n <= " + std::to_string(bound));
  const int total_bits = n * (n - 1) / 2;
  const std::uint64_t total = std::uint64_t{1} << total_bits;
  std::vector<Graph> out;
  out.reserve(total);
  for (std::uint64_t idx = 0; idx < total; ++idx) {
    Graph g(n);
    int shift = total_bits;
    for (int j = n - 1; j >= 1; --j) {
      shift -= j;
      const std::uint64_t rank = (idx >> shift) & ((std::uint64_t{1} << j) - 1);
      NodeMask pa = 0;
      for (int b = 0; b < j; ++b)
        if ((rank >> b) & 1u) pa |= bit(j - 1 - b);
      g.parents[j] = pa;
    }
    out.push_back(std::move(g));
  }
  return out;
}

// All subgraphs of g (every componentwise subset of its parent sets).
inline std::vector<Graph> enumerate_subgraphs(const Graph& g, int edge_bound = 22) {
  int edge_bits = 0;
  for (NodeMask pa : g.parents) edge_bits += popcount(pa);
  if (edge_bits > edge_bound) throw SizeError("too many edges for subgraph enumeration");
  std::vector<Graph> out;
  Graph cur(g.n);
  // Per-node submask counters, advanced odometer style.
  std::vector<NodeMask> sub(g.n, 0);
  while (true) {
    cur.parents = sub;
    out.push_back(cur);
    int j = 0;
    for (; j < g.n; ++j) {
      if (sub[j] == g.parents[j]) {
        sub[j] = 0;
        continue;
      }
      // Next submask of parents[j] in increasing order.
      sub[j] = (sub[j] - g.parents[j]) & g.parents[j];
      break;
    }
    if (j == g.n) break;
  }
  return out;
}

// All l-subsets of {0..n-1} in lexicographic order (first element varies
// slowest).
inline std::vector<std::vector<int>> combinations(int n, int l) {
  if (l < 0 || l > n) throw SizeError("need 0 <= l <= n");
  std::vector<std::vector<int>> out;
  std::vector<int> cur(l);
  std::iota(cur.begin(), cur.end(), 0);
  if (l == 0) {
    out.push_back({});
    return out;
  }
  while (true) {
    out.push_back(cur);
    int i = l - 1;
    while (i >= 0 && cur[i] == n - l + i) --i;
    if (i < 0) break;
    ++cur[i];
    for (int k = i + 1; k < l; ++k) cur[k] = cur[k - 1] + 1;
  }
  return out;
}

// l-subsets of an arbitrary (ascending) item list, lexicographic in the
// item order.
inline std::vector<NodeMask> subset_masks(const std::vector<int>& items, int l) {
  std::vector<NodeMask> out;
  for (const auto& combo : combinations(static_cast<int>(items.size()), l)) {
    NodeMask m = 0;
    for (int idx : combo) m |= bit(items[idx]);
    out.push_back(m);
  }
  return out;
}

// Per-node membership predicate of a modular feature set.
struct NodePredicate {
  enum class Kind { All, RequireParent, Explicit };
  Kind kind = Kind::All;
  int required_parent = -1;          // RequireParent
  std::vector<NodeMask> allowed;     // Explicit, sorted ascending

  bool operator()(NodeMask pa) const {
    switch (kind) {
      case Kind::All:
        return true;
      case Kind::RequireParent:
        return has_bit(pa, required_parent);
      case Kind::Explicit:
        return std::binary_search(allowed.begin(), allowed.end(), pa);
    }
    return false;
  }

  static NodePredicate all() { return {}; }
  static NodePredicate require_parent(int k) {
    NodePredicate p;
    p.kind = Kind::RequireParent;
    p.required_parent = k;
    return p;
  }
  static NodePredicate explicit_masks(std::vector<NodeMask> masks) {
    NodePredicate p;
    p.kind = Kind::Explicit;
    std::sort(masks.begin(), masks.end());
    masks.erase(std::unique(masks.begin(), masks.end()), masks.end());
    p.allowed = std::move(masks);
    return p;
  }
};

// A cartesian-product feature set: its indicator factorizes over nodes.
// The trivial set (all predicates constantly true) covers every graph.
struct ModularFeatureSet {
  int n = 0;
  std::vector<NodePredicate> per_node;

  static ModularFeatureSet trivial(int n) {
    ModularFeatureSet f;
    f.n = n;
    f.per_node.assign(n, NodePredicate::all());
    return f;
  }

  bool node_allows(int j, NodeMask pa) const { return per_node[j](pa); }

  bool contains(const Graph& g) const {
    if (g.n != n) throw DimensionError("feature and graph sizes differ");
    for (int j = 0; j < n; ++j)
      if (!per_node[j](g.parents[j])) return false;
    return true;
  }

  bool is_trivial() const {
    for (const auto& p : per_node)
      if (p.kind != NodePredicate::Kind::All) return false;
    return true;
  }
};

// Feature set of a single directed edge j1 -> j2: node j2 must list j1
// among its parents, all other nodes are unconstrained.
inline ModularFeatureSet edge_feature(int j1, int j2, int n) {
  if (j1 == j2) throw InvalidFeatureError("edge endpoints must differ");
  if (j1 < 0 || j1 >= n || j2 < 0 || j2 >= n) throw InvalidFeatureError("edge endpoint outside node range");
  ModularFeatureSet f = ModularFeatureSet::trivial(n);
  f.per_node[j2] = NodePredicate::require_parent(j1);
  return f;
}

}  // namespace qbn

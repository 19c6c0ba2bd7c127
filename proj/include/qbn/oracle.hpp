#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <vector>

#include "qbn/common.hpp"
#include "qbn/graphs.hpp"
#include "qbn/scoring.hpp"

namespace qbn {

enum class ModelKind { Unordered, Ordered };

// Result of an exact posterior computation. feature_value is
// exp(numerator_log - denominator_log); per_graph, when filled, is a full
// posterior over the model's support and sums to 1.
struct PosteriorReport {
  ModelKind model = ModelKind::Unordered;
  double feature_value = 0.0;
  double numerator_log = kNegInf;
  double denominator_log = kNegInf;
  std::optional<std::vector<std::pair<Graph, double>>> per_graph;
};

namespace detail {

// log beta_j(pa_j) = log P(x_j | pa_j) + log P(pa_j) with the parent
// prior conditioned on the natural set {0..j-1}.
inline double log_beta_unordered(const Dataset& d, const PriorSpec& prior, int j, NodeMask pa) {
  const NodeMask natural = bit(j) - 1;
  if ((pa & ~natural) != 0) return kNegInf;
  return log_local_likelihood(d, j, pa) + prior.log_parent_prior(pa, natural);
}

inline void check_graph_bound(int n, int bound) {
  if (n > bound) throw SizeError("graph enumeration limited to n <= " + std::to_string(bound));
}

}  // namespace detail

// Product-form feature posterior of the unordered model: per node, sum
// beta over the feature-allowed subsets of {0..j-1}; the denominator is
// the same product with the feature dropped.
inline PosteriorReport unordered_feature_posterior(const Dataset& d, const PriorSpec& prior,
                                                   const ModularFeatureSet& f, int graph_bound = 5) {
  if (f.n != d.n) throw DimensionError("feature set and dataset sizes differ");
  detail::check_graph_bound(d.n, graph_bound);
  PosteriorReport r;
  r.model = ModelKind::Unordered;
  r.numerator_log = 0.0;
  r.denominator_log = 0.0;
  std::vector<double> on_terms, all_terms;
  for (int j = 0; j < d.n; ++j) {
    const NodeMask natural = bit(j) - 1;
    on_terms.clear();
    all_terms.clear();
    for (NodeMask pa = natural;; pa = (pa - 1) & natural) {
      const double b = detail::log_beta_unordered(d, prior, j, pa);
      all_terms.push_back(b);
      if (f.node_allows(j, pa)) on_terms.push_back(b);
      if (pa == 0) break;
    }
    r.numerator_log += log_sum_exp(on_terms);
    r.denominator_log += log_sum_exp(all_terms);
  }
  r.feature_value = std::exp(r.numerator_log - r.denominator_log);
  return r;
}

// Same quantity by direct summation over every subgraph of the fully
// connected natural-order DAG. Kept as an independent route for
// cross-checking the product form.
inline PosteriorReport unordered_feature_posterior_direct(const Dataset& d, const PriorSpec& prior,
                                                          const ModularFeatureSet& f, int graph_bound = 5) {
  if (f.n != d.n) throw DimensionError("feature set and dataset sizes differ");
  detail::check_graph_bound(d.n, graph_bound);
  PosteriorReport r;
  r.model = ModelKind::Unordered;
  std::vector<double> on_terms, all_terms;
  for (const Graph& g : enumerate_subgraphs(fully_connected_graph(d.n))) {
    double w = 0.0;
    for (int j = 0; j < d.n; ++j) w += detail::log_beta_unordered(d, prior, j, g.parents[j]);
    all_terms.push_back(w);
    if (f.contains(g)) on_terms.push_back(w);
  }
  r.numerator_log = log_sum_exp(on_terms);
  r.denominator_log = log_sum_exp(all_terms);
  r.feature_value = std::exp(r.numerator_log - r.denominator_log);
  return r;
}

// log sum over all permutations of the per-order product of local scores.
// A table restricted to levels <= lmax contributes a factor 1 for every
// position above the bound, matching the restricted-circuit convention.
inline double ordered_sum_log(const LocalScoreTable& t, int perm_bound = 8) {
  std::vector<double> terms;
  for (const Permutation& p : enumerate_permutations(t.n, perm_bound)) {
    double w = 0.0;
    NodeMask placed = 0;
    for (int k = 0; k < t.n && w != kNegInf; ++k) {
      if (t.keeps_level(k)) w += t.log_score(p.sigma[k], placed);
      placed |= bit(p.sigma[k]);
    }
    terms.push_back(w);
  }
  return log_sum_exp(terms);
}

// The grouped three-node evaluation: terms sharing their final node are
// factored, giving sum = A + B + C with
//   A = h(2|{0,1}) (h(1|{0}) h(0) + h(0|{1}) h(1)), etc.
inline double ordered_sum_grouped3_log(const LocalScoreTable& t) {
  if (t.n != 3) throw DimensionError("grouped evaluation is specific to n = 3");
  auto h = [&](int j, NodeMask s) { return t.keeps_level(popcount(s)) ? t.log_score(j, s) : 0.0; };
  auto pair_sum = [&](int last) {
    const int a = last == 0 ? 1 : 0;
    const int b = last == 2 ? 1 : 2;
    const double first_a = h(a, 0) + h(b, bit(a));
    const double first_b = h(b, 0) + h(a, bit(b));
    return h(last, bit(a) | bit(b)) + log_add(first_a, first_b);
  };
  return log_sum_exp(std::vector<double>{pair_sum(2), pair_sum(1), pair_sum(0)});
}

// Ordered-model feature posterior: numerator and denominator are ordered
// sums of score tables built with and without the feature folded in. For
// n = 3 the grouped evaluation is recomputed and must agree.
inline PosteriorReport ordered_feature_posterior(const Dataset& d, const PriorSpec& prior,
                                                 const ModularFeatureSet& f,
                                                 std::optional<int> lmax = std::nullopt, int perm_bound = 8) {
  if (f.n != d.n) throw DimensionError("feature set and dataset sizes differ");
  if (d.n > perm_bound) throw SizeError("permutation enumeration limited to n <= " + std::to_string(perm_bound));

  const LocalScoreTable num_table = build_score_table(d, prior, &f, lmax);
  const LocalScoreTable den_table = build_score_table(d, prior, nullptr, lmax);

  PosteriorReport r;
  r.model = ModelKind::Ordered;
  r.numerator_log = ordered_sum_log(num_table, perm_bound);
  r.denominator_log = ordered_sum_log(den_table, perm_bound);

  if (d.n == 3) {
    for (const auto* t : {&num_table, &den_table}) {
      const double direct = ordered_sum_log(*t, perm_bound);
      const double grouped = ordered_sum_grouped3_log(*t);
      const bool both_zero = direct == kNegInf && grouped == kNegInf;
      if (!both_zero && std::abs(direct - grouped) > 1e-12)
        throw StateStructureError("grouped order sum disagrees with the direct sum");
    }
  }

  r.feature_value = std::exp(r.numerator_log - r.denominator_log);
  return r;
}

// Full per-graph posterior. Unordered support: subgraphs of the natural
// fully connected DAG. Ordered support: the union over permutations of
// the graphs consistent with each, i.e. all DAGs.
inline PosteriorReport graph_posterior(const Dataset& d, const PriorSpec& prior, ModelKind model,
                                       int graph_bound = 4, int perm_bound = 8) {
  detail::check_graph_bound(d.n, graph_bound);
  std::map<std::vector<NodeMask>, double> weight;  // parents -> log weight

  if (model == ModelKind::Unordered) {
    for (const Graph& g : enumerate_subgraphs(fully_connected_graph(d.n))) {
      double w = 0.0;
      for (int j = 0; j < d.n; ++j) w += detail::log_beta_unordered(d, prior, j, g.parents[j]);
      weight[g.parents] = w;
    }
  } else {
    for (const Permutation& p : enumerate_permutations(d.n, perm_bound)) {
      const Graph frame = fcg_for_permutation(p);
      double phi_w = 0.0;
      NodeMask placed = 0;
      for (int k = 0; k < d.n; ++k) {
        phi_w += prior.log_phi(p.sigma[k], placed);
        placed |= bit(p.sigma[k]);
      }
      if (phi_w == kNegInf) continue;
      for (const Graph& g : enumerate_subgraphs(frame)) {
        double w = phi_w;
        for (int j = 0; j < d.n; ++j)
          w += log_local_likelihood(d, j, g.parents[j]) +
               prior.log_parent_prior(g.parents[j], frame.parents[j]);
        auto [it, fresh] = weight.try_emplace(g.parents, kNegInf);
        it->second = log_add(it->second, w);
      }
    }
  }

  std::vector<double> terms;
  terms.reserve(weight.size());
  for (const auto& [parents, w] : weight) terms.push_back(w);
  const double total = log_sum_exp(terms);
  if (total == kNegInf) throw DegenerateDataError("posterior support is empty");

  PosteriorReport r;
  r.model = model;
  r.numerator_log = total;
  r.denominator_log = total;
  r.feature_value = 1.0;
  r.per_graph.emplace();
  for (const auto& [parents, w] : weight)
    r.per_graph->emplace_back(Graph(d.n, parents), std::exp(w - total));
  return r;
}

}  // namespace qbn

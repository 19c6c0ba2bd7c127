#pragma once

#include <cmath>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "qbn/common.hpp"
#include "qbn/graphs.hpp"

namespace qbn {

// Categorical records: values[m][j] is the dense category index of column
// j in record m, always < cardinality[j].
struct Dataset {
  int n = 0;        // column count
  int records = 0;  // M
  std::vector<int> cardinality;
  std::vector<std::vector<int>> values;  // [record][column]
  std::vector<std::string> column_names;
  std::vector<std::vector<std::string>> level_names;  // token per dense index

  void validate() const {
    if (n < 1) throw DimensionError("dataset needs at least one column");
    if (records < 1) throw DimensionError("dataset needs at least one record");
    for (const auto& row : values) {
      if (static_cast<int>(row.size()) != n) throw DimensionError("ragged dataset row");
      for (int j = 0; j < n; ++j)
        if (row[j] < 0 || row[j] >= cardinality[j]) throw DimensionError("value outside column cardinality");
    }
  }
};

struct LoadOptions {
  char delimiter = '\0';  // '\0' = infer from first header line (tab else comma)
  std::vector<int> cardinality_override;  // empty = infer per column
};

namespace detail {
inline std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == delim) {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}
}  // namespace detail

// Reads delimited text with a header row; tokens in each column map to
// dense indices in first-appearance order.
inline Dataset load_dataset(std::istream& in, const LoadOptions& opts = {}) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty input, header row required", 1);
  char delim = opts.delimiter;
  if (delim == '\0') delim = line.find('\t') != std::string::npos ? '\t' : ',';

  Dataset d;
  d.column_names = detail::split_line(line, delim);
  d.n = static_cast<int>(d.column_names.size());
  if (d.n > 64) throw ParseError("more than 64 columns", 1, 65);
  d.level_names.assign(d.n, {});
  std::vector<std::unordered_map<std::string, int>> index(d.n);

  int row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty()) continue;
    auto tokens = detail::split_line(line, delim);
    if (static_cast<int>(tokens.size()) != d.n)
      throw ParseError("expected " + std::to_string(d.n) + " fields, found " + std::to_string(tokens.size()),
                       row_no, static_cast<int>(tokens.size()));
    std::vector<int> row(d.n);
    for (int j = 0; j < d.n; ++j) {
      auto [it, fresh] = index[j].try_emplace(tokens[j], static_cast<int>(d.level_names[j].size()));
      if (fresh) d.level_names[j].push_back(tokens[j]);
      row[j] = it->second;
    }
    d.values.push_back(std::move(row));
  }
  d.records = static_cast<int>(d.values.size());
  if (d.records == 0) throw ParseError("no data rows after header", 1);

  d.cardinality.resize(d.n);
  for (int j = 0; j < d.n; ++j) {
    int inferred = static_cast<int>(d.level_names[j].size());
    int card = inferred;
    if (static_cast<int>(opts.cardinality_override.size()) > j && opts.cardinality_override[j] > 0)
      card = opts.cardinality_override[j];
    if (card < inferred)
      throw ParseError("cardinality override below observed levels in column " + d.column_names[j], 1, j + 1);
    d.cardinality[j] = card;
  }
  d.validate();
  return d;
}

// Joint counts for one node: per observed parent-value configuration, a
// histogram over the node's values. Configurations are keyed by the value
// tuple of the parent columns in ascending column order.
struct CountTable {
  int node = 0;
  std::vector<int> parent_columns;
  std::map<std::vector<int>, std::vector<std::int64_t>> per_config;

  std::int64_t total() const {
    std::int64_t t = 0;
    for (const auto& [cfg, hist] : per_config)
      for (auto c : hist) t += c;
    return t;
  }
};

inline CountTable counts(const Dataset& d, int j, NodeMask pa) {
  if (j < 0 || j >= d.n) throw DimensionError("node index outside dataset");
  if (has_bit(pa, j)) throw DimensionError("node cannot be its own parent");
  if (d.n < 64 && (pa >> d.n) != 0) throw DimensionError("parent set outside dataset columns");
  CountTable t;
  t.node = j;
  t.parent_columns = mask_to_list(pa);
  std::vector<int> cfg(t.parent_columns.size());
  for (const auto& row : d.values) {
    for (std::size_t k = 0; k < t.parent_columns.size(); ++k) cfg[k] = row[t.parent_columns[k]];
    auto [it, fresh] = t.per_config.try_emplace(cfg, std::vector<std::int64_t>(d.cardinality[j], 0));
    ++it->second[row[j]];
  }
  return t;
}

// Dirichlet-uniform marginal likelihood log P(x_j | pa_j): per parent
// configuration,
//   (N_x - 1)! / (N_cfg + N_x - 1)! * prod_v N(v)!,
// multiplied over configurations. Unobserved configurations contribute 1.
inline double log_local_likelihood(const Dataset& d, int j, NodeMask pa) {
  const CountTable t = counts(d, j, pa);
  const double card = static_cast<double>(d.cardinality[j]);
  double total = 0.0;
  for (const auto& [cfg, hist] : t.per_config) {
    std::int64_t n_cfg = 0;
    double sum_counts = 0.0;
    for (auto c : hist) {
      n_cfg += c;
      sum_counts += std::lgamma(static_cast<double>(c) + 1.0);
    }
    total += std::lgamma(card) - std::lgamma(static_cast<double>(n_cfg) + card) + sum_counts;
  }
  return total;
}

enum class ParentPrior { UniformSubsets, UniformSizes };
enum class OrderPotential { Constant, DeltaNatural, Table };

// Prior choices: the conditional parent prior P(pa | S) over subsets of a
// conditioning set S, and the order potential Phi(j | S) that shapes the
// distribution over node orders. Dirichlet hyperparameters are fixed to 1.
struct PriorSpec {
  ParentPrior parent_prior = ParentPrior::UniformSubsets;
  OrderPotential phi = OrderPotential::Constant;
  std::map<std::pair<int, NodeMask>, double> phi_table;  // (j, S) -> Phi value

  // log P(pa | S); normalizes to 1 over pa subset of S.
  double log_parent_prior(NodeMask pa, NodeMask s) const {
    if ((pa & ~s) != 0) return kNegInf;
    const int size = popcount(s);
    switch (parent_prior) {
      case ParentPrior::UniformSubsets:
        return -static_cast<double>(size) * std::log(2.0);
      case ParentPrior::UniformSizes: {
        const int k = popcount(pa);
        return -std::log(static_cast<double>(size + 1)) - std::log(static_cast<double>(binomial(size, k)));
      }
    }
    return kNegInf;
  }

  double log_phi(int j, NodeMask s) const {
    switch (phi) {
      case OrderPotential::Constant:
        return 0.0;
      case OrderPotential::DeltaNatural:
        return s == (bit(j) - 1) ? 0.0 : kNegInf;
      case OrderPotential::Table: {
        auto it = phi_table.find({j, s});
        if (it == phi_table.end() || it->second <= 0.0) return kNegInf;
        return std::log(it->second);
      }
    }
    return kNegInf;
  }
};

// Local evidence table: log h(j | S) for every node j and conditioning
// set S not containing j (restricted to |S| <= lmax when set). Values may
// be -inf. level_scale_log records any per-level rescale applied
// downstream so amplitudes can be mapped back to raw sums.
struct LocalScoreTable {
  int n = 0;
  int lmax = -1;  // -1 = unrestricted (all levels 0..n-1)
  bool feature_applied = false;
  std::vector<double> log_h;           // dense, n * 2^(n-1), -inf default
  std::vector<double> level_scale_log;  // one entry per kept level

  int max_level() const { return lmax < 0 ? n - 1 : lmax; }
  bool keeps_level(int level) const { return level <= max_level(); }

  // Index of (j, S): squeeze bit j out of S.
  static std::size_t compress(int j, NodeMask s) {
    const NodeMask low = s & (bit(j) - 1);
    const NodeMask high = (s >> (j + 1)) << j;
    return static_cast<std::size_t>(low | high);
  }

  std::size_t slot(int j, NodeMask s) const {
    return static_cast<std::size_t>(j) * (std::size_t{1} << (n - 1)) + compress(j, s);
  }

  double log_score(int j, NodeMask s) const {
    if (has_bit(s, j)) throw DimensionError("conditioning set contains the node");
    if (!keeps_level(popcount(s))) throw DimensionError("conditioning set above level bound");
    return log_h[slot(j, s)];
  }

  void set_log_score(int j, NodeMask s, double v) { log_h[slot(j, s)] = v; }

  // (j, S) pairs in canonical order: j ascending, then level ascending,
  // then S in the lexicographic combination order.
  std::vector<std::pair<int, NodeMask>> entries() const {
    std::vector<std::pair<int, NodeMask>> out;
    for (int j = 0; j < n; ++j) {
      std::vector<int> others;
      for (int k = 0; k < n; ++k)
        if (k != j) others.push_back(k);
      for (int level = 0; level <= max_level(); ++level)
        for (NodeMask s : subset_masks(others, level)) out.emplace_back(j, s);
    }
    return out;
  }

  std::size_t entry_count() const { return entries().size(); }
};

// Builds log h(j|S) = log Phi(j|S) + log sum_{pa subset S, allowed by the
// feature} P(x_j | pa) P(pa | S). Empty sums give -inf.
inline LocalScoreTable build_score_table(const Dataset& d, const PriorSpec& prior,
                                         const ModularFeatureSet* feature = nullptr,
                                         std::optional<int> lmax = std::nullopt) {
  if (feature && feature->n != d.n) throw DimensionError("feature set and dataset sizes differ");
  if (d.n > 24) throw SizeError("score table limited to n <= 24");
  if (lmax && (*lmax < 0 || *lmax >= d.n)) throw DimensionError("lmax must be in 0..n-1");

  LocalScoreTable t;
  t.n = d.n;
  t.lmax = lmax ? *lmax : -1;
  t.feature_applied = feature != nullptr && !feature->is_trivial();
  t.log_h.assign(static_cast<std::size_t>(d.n) << (d.n - 1), kNegInf);
  t.level_scale_log.assign(t.max_level() + 1, 0.0);

  // Likelihoods are shared between conditioning sets; cache per (j, pa).
  std::vector<std::vector<double>> loglik(d.n);
  for (int j = 0; j < d.n; ++j) loglik[j].assign(std::size_t{1} << (d.n - 1), 2.0);

  auto cached_loglik = [&](int j, NodeMask pa) {
    double& cell = loglik[j][LocalScoreTable::compress(j, pa)];
    if (cell > 1.0) cell = log_local_likelihood(d, j, pa);
    return cell;
  };

  std::vector<double> terms;
  for (const auto& [j, s] : t.entries()) {
    const double phi = prior.log_phi(j, s);
    if (phi == kNegInf) {
      t.set_log_score(j, s, kNegInf);
      continue;
    }
    terms.clear();
    for (NodeMask pa = s;; pa = (pa - 1) & s) {
      if (!feature || feature->node_allows(j, pa))
        terms.push_back(cached_loglik(j, pa) + prior.log_parent_prior(pa, s));
      if (pa == 0) break;
    }
    t.set_log_score(j, s, phi + log_sum_exp(terms));
  }
  return t;
}

}  // namespace qbn

#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qbn/common.hpp"
#include "qbn/estimate.hpp"
#include "qbn/graphs.hpp"
#include "qbn/oracle.hpp"
#include "qbn/qprep.hpp"
#include "qbn/qsim.hpp"
#include "qbn/scoring.hpp"

namespace qbn {

using Json = nlohmann::json;

// -inf round-trips as JSON null (nlohmann already emits null for it).
inline Json log_to_json(double v) { return v == kNegInf ? Json(nullptr) : Json(v); }
inline double log_from_json(const Json& j) { return j.is_null() ? kNegInf : j.get<double>(); }

// ---- graphs ----

inline Json to_json(const Graph& g) {
  Json parents = Json::array();
  for (NodeMask pa : g.parents) parents.push_back(mask_to_list(pa));
  return Json{{"n", g.n}, {"parents", parents}};
}

inline Graph graph_from_json(const Json& j) {
  const int n = j.at("n").get<int>();
  std::vector<NodeMask> parents;
  for (const auto& entry : j.at("parents")) parents.push_back(list_to_mask(entry.get<std::vector<int>>()));
  return Graph(n, std::move(parents));
}

inline Json to_json(const Permutation& p) { return Json(p.sigma); }

inline Permutation permutation_from_json(const Json& j) { return Permutation(j.get<std::vector<int>>()); }

inline Json to_json(const ModularFeatureSet& f) {
  // Prefer the compact edge form when the set is exactly one edge.
  int edge_node = -1;
  for (int j = 0; j < f.n; ++j) {
    if (f.per_node[j].kind == NodePredicate::Kind::All) continue;
    if (f.per_node[j].kind == NodePredicate::Kind::RequireParent && edge_node < 0) {
      edge_node = j;
      continue;
    }
    edge_node = -2;
    break;
  }
  if (edge_node == -1) return Json{{"type", "trivial"}, {"n", f.n}};
  if (edge_node >= 0)
    return Json{{"type", "edge"}, {"n", f.n}, {"from", f.per_node[edge_node].required_parent}, {"to", edge_node}};

  Json allowed = Json::array();
  for (int j = 0; j < f.n; ++j) {
    Json masks = Json::array();
    if (f.per_node[j].kind == NodePredicate::Kind::Explicit) {
      for (NodeMask m : f.per_node[j].allowed) masks.push_back(m);
    } else {
      const NodeMask full = (f.n == 64) ? ~NodeMask{0} : (bit(f.n) - 1);
      for (NodeMask m = 0; m <= full; ++m)
        if (f.per_node[j](m)) masks.push_back(m);
    }
    allowed.push_back(masks);
  }
  return Json{{"type", "explicit"}, {"n", f.n}, {"allowed", allowed}};
}

inline ModularFeatureSet feature_from_json(const Json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "trivial") return ModularFeatureSet::trivial(j.at("n").get<int>());
  if (type == "edge") {
    // n is optional in the edge form when it can be supplied by context.
    const int n = j.value("n", 0);
    if (n <= 0) throw ParseError("edge feature needs a node count");
    return edge_feature(j.at("from").get<int>(), j.at("to").get<int>(), n);
  }
  if (type == "explicit") {
    const auto& allowed = j.at("allowed");
    ModularFeatureSet f;
    f.n = j.value("n", static_cast<int>(allowed.size()));
    if (static_cast<int>(allowed.size()) != f.n) throw ParseError("explicit feature needs one mask list per node");
    for (const auto& masks : allowed)
      f.per_node.push_back(NodePredicate::explicit_masks(masks.get<std::vector<NodeMask>>()));
    return f;
  }
  throw ParseError("unknown feature type '" + type + "'");
}

// ---- scoring ----

inline Json to_json(const LocalScoreTable& t) {
  Json entries = Json::array();
  for (const auto& [j, s] : t.entries())
    entries.push_back(Json{{"j", j}, {"S", mask_to_list(s)}, {"logH", log_to_json(t.log_score(j, s))}});
  Json out{{"n", t.n}, {"entries", entries}};
  if (t.lmax >= 0) out["lmax"] = t.lmax;
  out["feature_applied"] = t.feature_applied;
  return out;
}

inline LocalScoreTable score_table_from_json(const Json& j) {
  LocalScoreTable t;
  t.n = j.at("n").get<int>();
  t.lmax = j.value("lmax", -1);
  t.feature_applied = j.value("feature_applied", false);
  t.log_h.assign(static_cast<std::size_t>(t.n) << (t.n - 1), kNegInf);
  t.level_scale_log.assign(t.max_level() + 1, 0.0);
  for (const auto& e : j.at("entries"))
    t.set_log_score(e.at("j").get<int>(), list_to_mask(e.at("S").get<std::vector<int>>()),
                    log_from_json(e.at("logH")));
  return t;
}

// ---- oracle ----

inline std::string model_name(ModelKind m) { return m == ModelKind::Unordered ? "unordered" : "ordered"; }

inline Json to_json(const PosteriorReport& r) {
  Json out{{"model", model_name(r.model)},
           {"feature_value", r.feature_value},
           {"numerator_log", log_to_json(r.numerator_log)},
           {"denominator_log", log_to_json(r.denominator_log)}};
  if (r.per_graph) {
    Json pg = Json::array();
    for (const auto& [g, p] : *r.per_graph) pg.push_back(Json{{"graph", to_json(g)}, {"posterior", p}});
    out["per_graph"] = pg;
  }
  return out;
}

// ---- circuits ----

inline Json to_json(const QubitLayout& lay) {
  return Json{{"n", lay.n},           {"lmax", lay.lmax},   {"alpha", lay.alpha}, {"beta", lay.beta},
              {"gamma", lay.gamma},   {"mu0", lay.mu0},     {"omega", lay.omega},
              {"qubit_count", lay.qubit_count}};
}

inline QubitLayout layout_from_json(const Json& j) {
  QubitLayout lay;
  lay.n = j.at("n").get<int>();
  lay.lmax = j.at("lmax").get<int>();
  lay.alpha = j.at("alpha").get<std::vector<int>>();
  lay.beta = j.at("beta").get<std::vector<std::vector<int>>>();
  lay.gamma = j.at("gamma").get<int>();
  lay.mu0 = j.at("mu0").get<int>();
  lay.omega = j.at("omega").get<int>();
  lay.qubit_count = j.at("qubit_count").get<int>();
  return lay;
}

inline Json controls_to_json(const std::vector<Control>& controls) {
  Json out = Json::array();
  for (const Control& c : controls) out.push_back(Json{{"qubit", c.qubit}, {"polarity", c.positive ? 1 : 0}});
  return out;
}

inline std::vector<Control> controls_from_json(const Json& j) {
  std::vector<Control> out;
  for (const auto& e : j) out.push_back({e.at("qubit").get<int>(), e.at("polarity").get<int>() == 1});
  return out;
}

inline Json to_json(const Gate& gate) {
  return std::visit(
      [](const auto& g) -> Json {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, UnaryPrepareGate>) {
          return Json{{"kind", "unary_prepare"}, {"targets", g.targets}, {"inverse", g.inverse}};
        } else if constexpr (std::is_same_v<T, RotYGate>) {
          return Json{{"kind", "rot_y"}, {"target", g.target}, {"angle", g.angle},
                      {"controls", controls_to_json(g.controls)}};
        } else if constexpr (std::is_same_v<T, HadamardGate>) {
          return Json{{"kind", "hadamard"}, {"target", g.target}, {"controls", controls_to_json(g.controls)}};
        } else if constexpr (std::is_same_v<T, HalfmoonGate>) {
          Json out{{"kind", "halfmoon"}, {"target", g.target}, {"angle", g.angle}, {"gamma", g.gamma},
                   {"alpha_controls", g.alpha_controls}};
          out["selector"] = g.selector >= 0 ? Json(g.selector) : Json(nullptr);
          return out;
        } else if constexpr (std::is_same_v<T, PauliXGate>) {
          return Json{{"kind", "x"}, {"target", g.target}, {"controls", controls_to_json(g.controls)}};
        } else {
          return Json{{"kind", "cnot"}, {"control", g.control}, {"target", g.target}};
        }
      },
      gate);
}

inline Gate gate_from_json(const Json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "unary_prepare")
    return UnaryPrepareGate{j.at("targets").get<std::vector<int>>(), j.value("inverse", false)};
  if (kind == "rot_y")
    return RotYGate{j.at("target").get<int>(), j.at("angle").get<double>(),
                    controls_from_json(j.value("controls", Json::array()))};
  if (kind == "hadamard")
    return HadamardGate{j.at("target").get<int>(), controls_from_json(j.value("controls", Json::array()))};
  if (kind == "halfmoon") {
    HalfmoonGate g;
    g.target = j.at("target").get<int>();
    g.angle = j.at("angle").get<double>();
    g.gamma = j.at("gamma").get<int>();
    g.selector = j.at("selector").is_null() ? -1 : j.at("selector").get<int>();
    g.alpha_controls = j.value("alpha_controls", std::vector<int>{});
    return g;
  }
  if (kind == "x")
    return PauliXGate{j.at("target").get<int>(), controls_from_json(j.value("controls", Json::array()))};
  if (kind == "cnot") return CnotGate{j.at("control").get<int>(), j.at("target").get<int>()};
  throw ParseError("unknown gate kind '" + kind + "'");
}

inline Json circuit_to_json(const Circuit& c, const QubitLayout* layout = nullptr) {
  Json gates = Json::array();
  for (const Gate& g : c.gates) gates.push_back(to_json(g));
  Json out{{"qubit_count", c.qubit_count}, {"gates", gates}};
  if (layout) out["layout"] = to_json(*layout);
  return out;
}

inline Circuit circuit_from_json(const Json& j) {
  Circuit c;
  c.qubit_count = j.at("qubit_count").get<int>();
  for (const auto& g : j.at("gates")) c.gates.push_back(gate_from_json(g));
  validate(c);
  return c;
}

// ---- estimation ----

inline Json amplitude_to_json(const Amplitude& a) { return Json{{"re", a.real()}, {"im", a.imag()}}; }

inline Json to_json(const EstimationResult& r) {
  Json out{{"n", r.n},
           {"lmax", r.lmax >= 0 ? Json(r.lmax) : Json(nullptr)},
           {"mode", r.mode},
           {"epsilon_log", r.epsilon_log},
           {"level_scale_log", r.level_scale_log},
           {"z1_num", amplitude_to_json(r.z1_num)},
           {"z0_num", amplitude_to_json(r.z0_num)},
           {"z1_den", amplitude_to_json(r.z1_den)},
           {"z0_den", amplitude_to_json(r.z0_den)},
           {"ratio_num", r.ratio_num},
           {"ratio_den", r.ratio_den},
           {"log_sum_num", log_to_json(r.log_sum_num)},
           {"log_sum_den", log_to_json(r.log_sum_den)},
           {"posterior", r.posterior},
           {"degenerate_numerator", r.degenerate_numerator}};
  if (r.sampled_posterior) {
    out["sampled_posterior"] = *r.sampled_posterior;
    out["sampled_lo"] = *r.sampled_lo;
    out["sampled_hi"] = *r.sampled_hi;
    out["shots"] = r.shots;
    out["seed"] = r.seed;
    if (r.sampled_ratio_num) out["sampled_ratio_num"] = *r.sampled_ratio_num;
    if (r.sampled_ratio_den) out["sampled_ratio_den"] = *r.sampled_ratio_den;
    if (r.amplify_iterations_num) out["amplify_iterations_num"] = *r.amplify_iterations_num;
    if (r.amplify_iterations_den) out["amplify_iterations_den"] = *r.amplify_iterations_den;
  }
  if (r.oracle_value) {
    out["oracle_value"] = *r.oracle_value;
    out["discrepancy"] = *r.discrepancy;
  }
  return out;
}

// ---- histograms and state dumps ----

inline Json histogram_to_json(const std::map<std::string, std::uint64_t>& hist) {
  Json out = Json::object();
  for (const auto& [k, v] : hist) out[k] = v;
  return out;
}

inline void dump_state(const StateVector& s, const std::string& binary_path, const std::string& header_path) {
  std::ofstream bin(binary_path, std::ios::binary);
  if (!bin) throw Error("cannot open " + binary_path);
  dump_state_binary(s, bin);
  Json header{{"qubit_count", s.qubit_count},
              {"amplitudes", s.amp.size()},
              {"format", "little-endian complex double, interleaved re/im"},
              {"binary", binary_path}};
  std::ofstream head(header_path);
  if (!head) throw Error("cannot open " + header_path);
  head << header.dump(2) << "\n";
}

}  // namespace qbn

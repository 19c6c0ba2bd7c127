#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <variant>
#include <vector>

#include "qbn/common.hpp"
#include "qbn/graphs.hpp"
#include "qbn/scoring.hpp"

namespace qbn {

// Selector-register widths. Level l holds one qubit per (node, candidate
// parent set of size l) pair.
inline std::uint64_t selector_width(int n, int level) {
  return static_cast<std::uint64_t>(n) * binomial(n - 1, level);
}

inline std::uint64_t selector_width_total(int n) {
  return static_cast<std::uint64_t>(n) << (n - 1);
}

inline std::uint64_t selector_width_restricted(int n, int lmax) {
  std::uint64_t total = 0;
  for (int l = 0; l <= lmax; ++l) total += selector_width(n, l);
  return total;
}

// log of the overall branch weight 1 / prod_l selector_width(n, l) over
// the kept levels.
inline double log_branch_weight(int n, int lmax) {
  double s = 0.0;
  for (int l = 0; l <= lmax; ++l) s -= std::log(static_cast<double>(selector_width(n, l)));
  return s;
}

// Qubit assignment for the state-preparation circuit. Registers in index
// order: alpha (one per node), the kept selector levels ascending, then
// gamma, mu0, omega. The mu register is (alpha, mu0), the nu register is
// (beta, gamma), and omega is the amplification target qubit.
struct QubitLayout {
  int n = 0;
  int lmax = 0;  // kept levels are 0..lmax
  std::vector<int> alpha;
  std::vector<std::vector<int>> beta;  // beta[level]
  int gamma = -1;
  int mu0 = -1;
  int omega = -1;
  int qubit_count = 0;

  struct Selector {
    int j = 0;       // rotated node
    NodeMask s = 0;  // candidate parent set, |s| = level, j not in s
    int qubit = -1;  // the selector qubit
  };

  static QubitLayout make(int n, std::optional<int> lmax = std::nullopt) {
    Graph::check_node_count(n);
    if (lmax && (*lmax < 0 || *lmax >= n)) throw LayoutError("lmax must be in 0..n-1");
    QubitLayout lay;
    lay.n = n;
    lay.lmax = lmax ? *lmax : n - 1;
    int next = 0;
    for (int j = 0; j < n; ++j) lay.alpha.push_back(next++);
    lay.beta.resize(lay.lmax + 1);
    for (int level = 0; level <= lay.lmax; ++level) {
      const auto width = selector_width(n, level);
      for (std::uint64_t c = 0; c < width; ++c) lay.beta[level].push_back(next++);
    }
    lay.gamma = next++;
    lay.mu0 = next++;
    lay.omega = next++;
    lay.qubit_count = next;
    return lay;
  }

  // Selector pairing at a level: outer loop j ascending, inner loop the
  // candidate sets in lexicographic combination order.
  std::vector<Selector> selectors(int level) const {
    std::vector<Selector> out;
    int c = 0;
    for (int j = 0; j < n; ++j) {
      std::vector<int> others;
      for (int k = 0; k < n; ++k)
        if (k != j) others.push_back(k);
      for (NodeMask s : subset_masks(others, level)) out.push_back({j, s, beta[level][c++]});
    }
    return out;
  }

  std::vector<int> all_beta_qubits() const {
    std::vector<int> out;
    for (const auto& level : beta) out.insert(out.end(), level.begin(), level.end());
    return out;
  }

  bool restricted() const { return lmax < n - 1; }
};

// One-qubit basis projector; value is the required bit.
struct Projector {
  int qubit = -1;
  int value = 0;
};

// The sufficient amplification target: omega = 0, identity elsewhere.
inline Projector target_projector(const QubitLayout& layout) { return {layout.omega, 0}; }

// ---- Gate IR ----

struct Control {
  int qubit = -1;
  bool positive = true;  // true = fire on |1>, false = fire on |0>
  bool operator==(const Control&) const = default;
};

// Maps |0..0> on its targets to the uniform one-hot superposition (or the
// inverse of that unitary). Realized inside the simulator as a rotation
// cascade; the contract is the action on the zero state.
struct UnaryPrepareGate {
  std::vector<int> targets;
  bool inverse = false;
};

struct RotYGate {
  int target = -1;
  double angle = 0.0;
  std::vector<Control> controls;
};

struct HadamardGate {
  int target = -1;
  std::vector<Control> controls;
};

// Two-mode controlled gate: R_y(angle) on the target when the gamma qubit
// is 1, Hadamard when it is 0. Fires only when the selector qubit (if
// any) and every listed alpha qubit are 1.
struct HalfmoonGate {
  int target = -1;
  double angle = 0.0;
  int gamma = -1;
  int selector = -1;  // -1 = no selector control
  std::vector<int> alpha_controls;
};

struct PauliXGate {
  int target = -1;
  std::vector<Control> controls;
};

struct CnotGate {
  int control = -1;
  int target = -1;
};

using Gate = std::variant<UnaryPrepareGate, RotYGate, HadamardGate, HalfmoonGate, PauliXGate, CnotGate>;

struct Circuit {
  int qubit_count = 0;
  std::vector<Gate> gates;
};

namespace detail {

inline void require_distinct_in_range(std::vector<int> qubits, int qubit_count) {
  std::sort(qubits.begin(), qubits.end());
  for (std::size_t i = 0; i < qubits.size(); ++i) {
    if (qubits[i] < 0 || qubits[i] >= qubit_count) throw LayoutError("gate qubit outside circuit");
    if (i > 0 && qubits[i] == qubits[i - 1]) throw LayoutError("gate qubits must be distinct");
  }
}

inline std::vector<int> gate_qubits(const Gate& g) {
  std::vector<int> q;
  std::visit(
      [&](const auto& gate) {
        using T = std::decay_t<decltype(gate)>;
        if constexpr (std::is_same_v<T, UnaryPrepareGate>) {
          q = gate.targets;
        } else if constexpr (std::is_same_v<T, RotYGate> || std::is_same_v<T, HadamardGate> ||
                             std::is_same_v<T, PauliXGate>) {
          q.push_back(gate.target);
          for (const Control& c : gate.controls) q.push_back(c.qubit);
        } else if constexpr (std::is_same_v<T, HalfmoonGate>) {
          q.push_back(gate.target);
          q.push_back(gate.gamma);
          if (gate.selector >= 0) q.push_back(gate.selector);
          for (int a : gate.alpha_controls) q.push_back(a);
        } else if constexpr (std::is_same_v<T, CnotGate>) {
          q = {gate.control, gate.target};
        }
      },
      g);
  return q;
}

}  // namespace detail

inline void validate(const Circuit& c) {
  if (c.qubit_count < 1) throw LayoutError("circuit needs at least one qubit");
  for (const Gate& g : c.gates) detail::require_distinct_in_range(detail::gate_qubits(g), c.qubit_count);
}

// ---- Angles ----

// Rotation angles theta(j | S) with sin(theta) equal to the per-level
// rescaled score, plus the log scale factors that undo the rescale.
struct AngleTable {
  int n = 0;
  int lmax = 0;
  std::vector<double> theta;  // dense, same slot scheme as LocalScoreTable
  std::vector<double> level_scale_log;

  std::size_t slot(int j, NodeMask s) const {
    return static_cast<std::size_t>(j) * (std::size_t{1} << (n - 1)) + LocalScoreTable::compress(j, s);
  }
  double angle(int j, NodeMask s) const { return theta[slot(j, s)]; }
  void set_angle(int j, NodeMask s, double v) { theta[slot(j, s)] = v; }
};

// Per-level scales that bring every kept score into [0, 1]: the level
// maximum, or 1 where a level is identically zero.
inline std::vector<double> level_scales_log(const LocalScoreTable& t) {
  std::vector<double> scale(t.max_level() + 1, kNegInf);
  for (const auto& [j, s] : t.entries()) {
    const int level = popcount(s);
    scale[level] = std::max(scale[level], t.log_score(j, s));
  }
  for (double& v : scale)
    if (v == kNegInf) v = 0.0;
  return scale;
}

// theta(j|S) = arcsin(h(j|S) / c_level). The scales may come from another
// table (the trivial-feature run) as long as they dominate every score.
inline AngleTable angles_from_scores(const LocalScoreTable& t, const std::vector<double>& scales_log) {
  if (static_cast<int>(scales_log.size()) != t.max_level() + 1)
    throw DimensionError("one scale per kept level required");
  AngleTable a;
  a.n = t.n;
  a.lmax = t.max_level();
  a.level_scale_log = scales_log;
  a.theta.assign(t.log_h.size(), 0.0);
  for (const auto& [j, s] : t.entries()) {
    const double scaled = std::exp(t.log_score(j, s) - scales_log[popcount(s)]);
    if (scaled > 1.0 + 1e-9) throw DimensionError("scale does not dominate score");
    a.set_angle(j, s, std::asin(std::min(scaled, 1.0)));
  }
  return a;
}

inline AngleTable angles_from_scores(const LocalScoreTable& t) {
  return angles_from_scores(t, level_scales_log(t));
}

// ---- State preparation ----

// Emits the preparation circuit:
//   1. X on omega.
//   2. H on gamma, CNOT gamma -> mu0 (the two-mode split).
//   3. Per kept level ascending: unary-prepare the selector register,
//      apply one halfmoon per selector (angle theta(j|S), controls on the
//      selector qubit and on alpha_k for k in S), at the last kept level
//      follow each selector with pi/2 completion halfmoons on the alpha
//      qubits outside S and j, then un-prepare the selector register.
//   4. X on omega controlled on every alpha being 1 and every kept
//      selector qubit being 0.
// The completion halfmoons extend each surviving branch to a full node
// order, so the two designated omega = 0 amplitudes carry the order sum
// and the Hadamard reference weight also when levels are dropped.
inline Circuit build_state_prep(const QubitLayout& layout, const AngleTable& angles) {
  if (angles.n != layout.n || angles.lmax != layout.lmax)
    throw DimensionError("layout and angle table disagree");
  constexpr double half_pi = std::numbers::pi / 2.0;

  Circuit c;
  c.qubit_count = layout.qubit_count;
  c.gates.emplace_back(PauliXGate{layout.omega, {}});
  c.gates.emplace_back(HadamardGate{layout.gamma, {}});
  c.gates.emplace_back(CnotGate{layout.gamma, layout.mu0});

  for (int level = 0; level <= layout.lmax; ++level) {
    c.gates.emplace_back(UnaryPrepareGate{layout.beta[level], false});
    const bool last_level = level == layout.lmax;
    for (const auto& sel : layout.selectors(level)) {
      HalfmoonGate hm;
      hm.target = layout.alpha[sel.j];
      hm.angle = angles.angle(sel.j, sel.s);
      hm.gamma = layout.gamma;
      hm.selector = sel.qubit;
      for (int k : mask_to_list(sel.s)) hm.alpha_controls.push_back(layout.alpha[k]);
      c.gates.emplace_back(hm);
      if (last_level) {
        for (int q = 0; q < layout.n; ++q) {
          if (q == sel.j || has_bit(sel.s, q)) continue;
          HalfmoonGate done;
          done.target = layout.alpha[q];
          done.angle = half_pi;
          done.gamma = layout.gamma;
          done.selector = sel.qubit;
          c.gates.emplace_back(done);
        }
      }
    }
    c.gates.emplace_back(UnaryPrepareGate{layout.beta[level], true});
  }

  PauliXGate flip;
  flip.target = layout.omega;
  for (int a : layout.alpha) flip.controls.push_back({a, true});
  for (int b : layout.all_beta_qubits()) flip.controls.push_back({b, false});
  c.gates.emplace_back(flip);

  validate(c);
  return c;
}

inline Circuit build_state_prep(const QubitLayout& layout, const LocalScoreTable& table) {
  return build_state_prep(layout, angles_from_scores(table));
}

}  // namespace qbn

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "qbn/common.hpp"
#include "qbn/qprep.hpp"

namespace qbn {

using Amplitude = std::complex<double>;

// Dense amplitude array over computational basis states, little endian:
// qubit 0 is the least significant bit of the index.
struct StateVector {
  int qubit_count = 0;
  std::vector<Amplitude> amp;

  static StateVector zero_state(int qubits, int max_qubits = 26) {
    if (qubits < 1) throw SizeError("state needs at least one qubit");
    if (qubits > max_qubits)
      throw SizeError("state of " + std::to_string(qubits) + " qubits exceeds the memory bound of " +
                      std::to_string(max_qubits));
    StateVector s;
    s.qubit_count = qubits;
    s.amp.assign(std::size_t{1} << qubits, Amplitude{0.0, 0.0});
    s.amp[0] = 1.0;
    return s;
  }

  double norm_sq() const {
    double t = 0.0;
    for (const Amplitude& a : amp) t += std::norm(a);
    return t;
  }
};

struct SimOptions {
  int max_qubits = 26;
  int threads = 1;
  bool check_norm_per_gate = true;
  int norm_check_limit = 20;  // skip the per-gate scan above this width
};

namespace detail {

struct TwoByTwo {
  Amplitude m00, m01, m10, m11;
};

inline TwoByTwo rot_y_matrix(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c, -s, s, c};
}

inline TwoByTwo hadamard_matrix() {
  const double r = 1.0 / std::sqrt(2.0);
  return {r, r, r, -r};
}

inline TwoByTwo pauli_x_matrix() { return {0.0, 1.0, 1.0, 0.0}; }

// Applies a 2x2 matrix to the target qubit on every index pair whose
// control bits match. Pairs are enumerated by expanding a compact counter
// over the free qubits, so heavily controlled gates cost little.
inline void apply_controlled(StateVector& s, int target, const TwoByTwo& m, std::uint64_t control_mask,
                             std::uint64_t control_value, int threads) {
  const std::uint64_t fixed = control_mask | (std::uint64_t{1} << target);
  std::vector<int> fixed_bits;
  for (int q = 0; q < s.qubit_count; ++q)
    if ((fixed >> q) & 1u) fixed_bits.push_back(q);
  const int free_count = s.qubit_count - static_cast<int>(fixed_bits.size());
  const std::uint64_t pairs = std::uint64_t{1} << free_count;
  const std::uint64_t tbit = std::uint64_t{1} << target;

  auto work = [&](std::uint64_t begin, std::uint64_t end) {
    for (std::uint64_t k = begin; k < end; ++k) {
      std::uint64_t idx = k;
      for (int p : fixed_bits) idx = ((idx >> p) << (p + 1)) | (idx & ((std::uint64_t{1} << p) - 1));
      idx |= control_value;
      const Amplitude a = s.amp[idx];
      const Amplitude b = s.amp[idx | tbit];
      s.amp[idx] = m.m00 * a + m.m01 * b;
      s.amp[idx | tbit] = m.m10 * a + m.m11 * b;
    }
  };

  if (threads > 1 && pairs >= (std::uint64_t{1} << 16)) {
    const int workers = std::min<std::uint64_t>(threads, 64);
    std::vector<std::thread> pool;
    const std::uint64_t chunk = (pairs + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const std::uint64_t b = w * chunk;
      const std::uint64_t e = std::min(pairs, b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
    for (auto& t : pool) t.join();
  } else {
    work(0, pairs);
  }
}

inline void add_control(std::uint64_t& mask, std::uint64_t& value, const Control& c) {
  mask |= std::uint64_t{1} << c.qubit;
  if (c.positive) value |= std::uint64_t{1} << c.qubit;
}

}  // namespace detail

namespace detail {

inline void check_norm(const StateVector& s, const SimOptions& opts) {
  if (!opts.check_norm_per_gate || s.qubit_count > opts.norm_check_limit) return;
  const double n = std::sqrt(s.norm_sq());
  if (std::abs(n - 1.0) > 1e-10) throw StateStructureError("state norm drifted to " + std::to_string(n));
}

inline void apply_primitive(StateVector& s, int target, const TwoByTwo& m, std::uint64_t mask,
                            std::uint64_t value, const SimOptions& opts) {
  apply_controlled(s, target, m, mask, value, opts.threads);
  check_norm(s, opts);
}

inline double unary_step_angle(int register_width, int step) {
  // After step k the amplitude left on slot k-1 must be 1/sqrt(width).
  return std::asin(std::sqrt(static_cast<double>(register_width - step) / (register_width - step + 1.0)));
}

inline void apply_unary_prepare(StateVector& s, const UnaryPrepareGate& g, const SimOptions& opts) {
  const int width = static_cast<int>(g.targets.size());
  if (width == 0) throw LayoutError("unary register is empty");
  if (!g.inverse) {
    apply_primitive(s, g.targets[0], pauli_x_matrix(), 0, 0, opts);
    for (int k = 1; k < width; ++k) {
      const std::uint64_t prev = std::uint64_t{1} << g.targets[k - 1];
      const std::uint64_t cur = std::uint64_t{1} << g.targets[k];
      apply_primitive(s, g.targets[k], rot_y_matrix(unary_step_angle(width, k)), prev, prev, opts);
      apply_primitive(s, g.targets[k - 1], pauli_x_matrix(), cur, cur, opts);
    }
  } else {
    for (int k = width - 1; k >= 1; --k) {
      const std::uint64_t prev = std::uint64_t{1} << g.targets[k - 1];
      const std::uint64_t cur = std::uint64_t{1} << g.targets[k];
      apply_primitive(s, g.targets[k - 1], pauli_x_matrix(), cur, cur, opts);
      apply_primitive(s, g.targets[k], rot_y_matrix(-unary_step_angle(width, k)), prev, prev, opts);
    }
    apply_primitive(s, g.targets[0], pauli_x_matrix(), 0, 0, opts);
  }
}

}  // namespace detail

inline void apply_gate(StateVector& s, const Gate& gate, const SimOptions& opts = {}) {
  std::visit(
      [&](const auto& g) {
        using T = std::decay_t<decltype(g)>;
        std::uint64_t mask = 0, value = 0;
        if constexpr (std::is_same_v<T, UnaryPrepareGate>) {
          detail::apply_unary_prepare(s, g, opts);
        } else if constexpr (std::is_same_v<T, RotYGate>) {
          for (const Control& c : g.controls) detail::add_control(mask, value, c);
          detail::apply_primitive(s, g.target, detail::rot_y_matrix(g.angle), mask, value, opts);
        } else if constexpr (std::is_same_v<T, HadamardGate>) {
          for (const Control& c : g.controls) detail::add_control(mask, value, c);
          detail::apply_primitive(s, g.target, detail::hadamard_matrix(), mask, value, opts);
        } else if constexpr (std::is_same_v<T, HalfmoonGate>) {
          for (int a : g.alpha_controls) detail::add_control(mask, value, {a, true});
          if (g.selector >= 0) detail::add_control(mask, value, {g.selector, true});
          const std::uint64_t gbit = std::uint64_t{1} << g.gamma;
          detail::apply_primitive(s, g.target, detail::rot_y_matrix(g.angle), mask | gbit, value | gbit, opts);
          detail::apply_primitive(s, g.target, detail::hadamard_matrix(), mask | gbit, value, opts);
        } else if constexpr (std::is_same_v<T, PauliXGate>) {
          for (const Control& c : g.controls) detail::add_control(mask, value, c);
          detail::apply_primitive(s, g.target, detail::pauli_x_matrix(), mask, value, opts);
        } else if constexpr (std::is_same_v<T, CnotGate>) {
          detail::add_control(mask, value, {g.control, true});
          detail::apply_primitive(s, g.target, detail::pauli_x_matrix(), mask, value, opts);
        }
      },
      gate);
}

// Applies the circuit to |0..0>. States wider than the per-gate check
// limit still get one norm check at the end.
inline StateVector run(const Circuit& c, const SimOptions& opts = {}) {
  validate(c);
  StateVector s = StateVector::zero_state(c.qubit_count, opts.max_qubits);
  for (const Gate& g : c.gates) apply_gate(s, g, opts);
  if (opts.check_norm_per_gate && s.qubit_count > opts.norm_check_limit) {
    const double n = std::sqrt(s.norm_sq());
    if (std::abs(n - 1.0) > 1e-10) throw StateStructureError("state norm drifted to " + std::to_string(n));
  }
  return s;
}

// ---- Projectors ----

inline double projector_weight(const StateVector& s, const Projector& p) {
  const std::uint64_t mask = std::uint64_t{1} << p.qubit;
  const std::uint64_t want = p.value ? mask : 0;
  double t = 0.0;
  for (std::size_t i = 0; i < s.amp.size(); ++i)
    if ((i & mask) == want) t += std::norm(s.amp[i]);
  return t;
}

inline StateVector apply_projector(const StateVector& s, const Projector& p) {
  StateVector out = s;
  const std::uint64_t mask = std::uint64_t{1} << p.qubit;
  const std::uint64_t want = p.value ? mask : 0;
  for (std::size_t i = 0; i < out.amp.size(); ++i)
    if ((i & mask) != want) out.amp[i] = 0.0;
  return out;
}

// ---- Hypothesis amplitudes ----

// The two designated omega = 0 amplitudes: z1 on (alpha all 1, beta 0,
// gamma 1, mu0 1) and z0 on (alpha all 1, beta 0, gamma 0, mu0 0).
struct AmplitudePair {
  Amplitude z1{0.0, 0.0};
  Amplitude z0{0.0, 0.0};
};

inline std::uint64_t hypothesis_index(const QubitLayout& layout, bool one_branch) {
  std::uint64_t idx = 0;
  for (int a : layout.alpha) idx |= std::uint64_t{1} << a;
  if (one_branch) {
    idx |= std::uint64_t{1} << layout.gamma;
    idx |= std::uint64_t{1} << layout.mu0;
  }
  return idx;
}

// Reads z1 and z0 and checks that the omega = 0 component has no support
// anywhere else; residual support signals a construction bug.
inline AmplitudePair extract_hypothesis_amplitudes(const StateVector& s, const QubitLayout& layout,
                                                   double residual_tol = 1e-10) {
  if (s.qubit_count != layout.qubit_count) throw DimensionError("state and layout widths differ");
  const std::uint64_t idx1 = hypothesis_index(layout, true);
  const std::uint64_t idx0 = hypothesis_index(layout, false);
  const std::uint64_t omega_bit = std::uint64_t{1} << layout.omega;
  for (std::size_t i = 0; i < s.amp.size(); ++i) {
    if ((i & omega_bit) != 0 || i == idx1 || i == idx0) continue;
    if (std::abs(s.amp[i]) > residual_tol)
      throw StateStructureError("unexpected omega=0 amplitude at basis index " + std::to_string(i));
  }
  return {s.amp[idx1], s.amp[idx0]};
}

// ---- Amplitude amplification ----

inline std::uint64_t optimal_iterations(double target_weight) {
  if (target_weight <= 0.0) throw NoTargetError("target weight is zero");
  if (target_weight >= 1.0) return 0;
  const double phase = std::asin(std::sqrt(target_weight));
  const auto k = std::llround(std::numbers::pi / (4.0 * phase) - 0.5);
  return k > 0 ? static_cast<std::uint64_t>(k) : 0;
}

// Standard two-reflection iterate toward the projector subspace: flip the
// sign of the target component, then reflect about the prepared state.
// The reflection uses the stored state, equivalent to inverting the
// preparation circuit in exact arithmetic.
inline StateVector amplify(const StateVector& prepared, const Projector& target, std::uint64_t iterations) {
  const double p = projector_weight(prepared, target);
  if (p <= 0.0) throw NoTargetError("target weight is zero");
  if (p >= 1.0 - 1e-14 || iterations == 0) return prepared;

  const std::uint64_t mask = std::uint64_t{1} << target.qubit;
  const std::uint64_t want = target.value ? mask : 0;
  StateVector r = prepared;
  for (std::uint64_t it = 0; it < iterations; ++it) {
    for (std::size_t i = 0; i < r.amp.size(); ++i)
      if ((i & mask) == want) r.amp[i] = -r.amp[i];
    Amplitude inner{0.0, 0.0};
    for (std::size_t i = 0; i < r.amp.size(); ++i) inner += std::conj(prepared.amp[i]) * r.amp[i];
    for (std::size_t i = 0; i < r.amp.size(); ++i) r.amp[i] = 2.0 * inner * prepared.amp[i] - r.amp[i];
  }
  return r;
}

// ---- Measurement sampling ----

// Draws basis outcomes of the listed qubits from their marginal. Keys are
// bit strings with the first listed qubit leftmost. Deterministic per
// seed: a fixed 64-bit generator feeds an inverse-CDF lookup.
inline std::map<std::string, std::uint64_t> sample(const StateVector& s, const std::vector<int>& qubits,
                                                   std::uint64_t shots, std::uint64_t seed) {
  if (qubits.empty()) throw Error("sample needs at least one qubit");
  if (qubits.size() > 24) throw SizeError("sample limited to 24 qubits");
  if (shots < 1) throw Error("sample needs at least one shot");
  for (std::size_t i = 0; i < qubits.size(); ++i) {
    if (qubits[i] < 0 || qubits[i] >= s.qubit_count) throw DimensionError("sampled qubit outside state");
    for (std::size_t k = 0; k < i; ++k)
      if (qubits[k] == qubits[i]) throw DimensionError("sampled qubits must be distinct");
  }

  const int k = static_cast<int>(qubits.size());
  std::vector<double> prob(std::size_t{1} << k, 0.0);
  for (std::size_t i = 0; i < s.amp.size(); ++i) {
    const double w = std::norm(s.amp[i]);
    if (w == 0.0) continue;
    std::size_t key = 0;
    for (int b = 0; b < k; ++b) key |= static_cast<std::size_t>((i >> qubits[b]) & 1u) << b;
    prob[key] += w;
  }
  std::vector<double> cdf(prob.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < prob.size(); ++i) {
    acc += prob[i];
    cdf[i] = acc;
  }

  std::mt19937_64 rng(seed);
  std::vector<std::uint64_t> hits(prob.size(), 0);
  for (std::uint64_t t = 0; t < shots; ++t) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53 * acc;
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    std::size_t key = static_cast<std::size_t>(it - cdf.begin());
    if (key >= hits.size()) key = hits.size() - 1;
    ++hits[key];
  }

  std::map<std::string, std::uint64_t> hist;
  for (std::size_t key = 0; key < hits.size(); ++key) {
    if (hits[key] == 0) continue;
    std::string name(k, '0');
    for (int b = 0; b < k; ++b)
      if ((key >> b) & 1u) name[b] = '1';
    hist[name] = hits[key];
  }
  return hist;
}

// Raw little-endian dump of the amplitudes (debug aid; the JSON header
// lives with the other serializers).
inline void dump_state_binary(const StateVector& s, std::ostream& out) {
  for (const Amplitude& a : s.amp) {
    const double re = a.real(), im = a.imag();
    out.write(reinterpret_cast<const char*>(&re), sizeof(double));
    out.write(reinterpret_cast<const char*>(&im), sizeof(double));
  }
}

inline StateVector load_state_binary(std::istream& in, int qubit_count) {
  StateVector s;
  s.qubit_count = qubit_count;
  s.amp.resize(std::size_t{1} << qubit_count);
  for (Amplitude& a : s.amp) {
    double re = 0.0, im = 0.0;
    in.read(reinterpret_cast<char*>(&re), sizeof(double));
    in.read(reinterpret_cast<char*>(&im), sizeof(double));
    a = {re, im};
  }
  if (!in) throw ParseError("state file truncated");
  return s;
}

}  // namespace qbn

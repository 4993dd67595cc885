#pragma once

// Dense statevector simulator.
//
// Basis index bit q is qubit q (little-endian). Every kernel accepts an extra
// control mask; amplitudes whose index does not contain all mask bits are left
// untouched, which is how controlled sub-circuits are applied without
// promoting each gate.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "qboot/errors.hpp"
#include "qboot/numeric.hpp"
#include "qboot/rng.hpp"

namespace qboot {

using Complex = std::complex<double>;

struct Register {
  std::string name;
  std::vector<int> qubits;

  std::size_t size() const { return qubits.size(); }
};

/// Named registers over contiguous qubit ranges, allocated in order.
class QubitLayout {
 public:
  QubitLayout() = default;

  QubitLayout& add_register(std::string name, int count) {
    if (count < 0) throw Error(ErrorCode::kDomain, "register size must be non-negative");
    for (const auto& r : registers_) {
      if (r.name == name) throw Error(ErrorCode::kDomain, "duplicate register name '" + name + "'");
    }
    Register reg{std::move(name), {}};
    for (int k = 0; k < count; ++k) reg.qubits.push_back(total_++);
    registers_.push_back(std::move(reg));
    return *this;
  }

  const Register& reg(std::string_view name) const {
    for (const auto& r : registers_) {
      if (r.name == name) return r;
    }
    throw Error(ErrorCode::kIndex, "no register named '" + std::string(name) + "'");
  }

  bool has(std::string_view name) const {
    return std::any_of(registers_.begin(), registers_.end(), [&](const Register& r) { return r.name == name; });
  }

  const std::vector<Register>& registers() const { return registers_; }
  int total() const { return total_; }

 private:
  std::vector<Register> registers_;
  int total_ = 0;
};

inline QubitLayout flat_layout(int qubits) {
  QubitLayout layout;
  layout.add_register("q", qubits);
  return layout;
}

// ---- gate set -------------------------------------------------------------

struct Hadamard {
  int target;
  std::vector<int> controls{};
};
struct PauliX {
  int target;
  std::vector<int> controls{};
};
/// Pauli Z.
struct PhaseZ {
  int target;
  std::vector<int> controls{};
};
/// diag(1, e^{i angle}).
struct Phase {
  int target;
  double angle;
  std::vector<int> controls{};
};
struct Swap {
  int a;
  int b;
  std::vector<int> controls{};
};
/// -1 on basis states where every listed qubit is 1.
struct MultiControlledZ {
  std::vector<int> qubits;
};
/// -1 on basis states where `qubits` read the integer `value` (qubits[0] is the low bit).
/// With value 0 this is the reflection I - 2|0><0| on those qubits.
struct PhaseFlipOnValue {
  std::vector<int> qubits;
  std::uint64_t value;
};
/// Arbitrary unitary on up to 12 qubits; row-major, qubits[0] is the low bit of the row index.
struct Unitary {
  std::vector<int> qubits;
  std::vector<Complex> matrix;
  std::vector<int> controls{};
};
/// target <- (target + sign * table[source]) mod 2^|target|. A basis permutation.
struct AddFromTable {
  std::vector<int> source;
  std::vector<int> target;
  std::vector<std::int64_t> table;
  int sign = +1;
};
/// flag ^= [value(source) <= bound]. A basis permutation.
struct CompareLeq {
  std::vector<int> source;
  std::int64_t bound;
  int flag;
};

using Gate = std::variant<Hadamard, PauliX, PhaseZ, Phase, Swap, MultiControlledZ, PhaseFlipOnValue, Unitary,
                          AddFromTable, CompareLeq>;

struct EngineOptions {
  int max_qubits = 26;
  /// Verify the squared norm after every gate.
  bool check_norm = false;
  double norm_tol = 1e-10;
  double unitary_tol = 1e-10;
};

namespace detail {

inline std::uint64_t mask_of(std::span<const int> qubits) {
  std::uint64_t m = 0;
  for (int q : qubits) m |= std::uint64_t{1} << q;
  return m;
}

inline std::uint64_t read_bits(std::uint64_t index, std::span<const int> qubits) {
  std::uint64_t v = 0;
  for (std::size_t k = 0; k < qubits.size(); ++k) v |= ((index >> qubits[k]) & 1u) << k;
  return v;
}

inline std::uint64_t write_bits(std::uint64_t index, std::span<const int> qubits, std::uint64_t value) {
  for (std::size_t k = 0; k < qubits.size(); ++k) {
    const std::uint64_t bit = std::uint64_t{1} << qubits[k];
    index = ((value >> k) & 1u) ? (index | bit) : (index & ~bit);
  }
  return index;
}

}  // namespace detail

class StateVector {
 public:
  StateVector(QubitLayout layout, EngineOptions opts = {}) : layout_(std::move(layout)), opts_(opts) {
    if (layout_.total() > opts_.max_qubits) {
      throw Error(ErrorCode::kCapExceeded, "layout needs " + std::to_string(layout_.total()) +
                                               " qubits; cap is " + std::to_string(opts_.max_qubits));
    }
    amps_.assign(std::size_t{1} << layout_.total(), Complex{0.0, 0.0});
    amps_[0] = 1.0;
  }

  int num_qubits() const { return layout_.total(); }
  std::size_t dim() const { return amps_.size(); }
  const QubitLayout& layout() const { return layout_; }
  const EngineOptions& options() const { return opts_; }

  std::span<const Complex> amplitudes() const { return amps_; }
  std::span<Complex> amplitudes() { return amps_; }

  void set_basis_state(std::uint64_t index) {
    if (index >= amps_.size()) throw Error(ErrorCode::kIndex, "basis index out of range");
    std::fill(amps_.begin(), amps_.end(), Complex{0.0, 0.0});
    amps_[index] = 1.0;
  }

  double norm_squared() const {
    CompensatedSum s;
    for (const auto& a : amps_) s.add(std::norm(a));
    return s.value();
  }

  void apply(const Gate& gate, std::uint64_t control_mask = 0) {
    check_mask(control_mask);
    std::visit([&](const auto& g) { apply_impl(g, control_mask); }, gate);
    if (opts_.check_norm) {
      const double n2 = norm_squared();
      if (std::fabs(n2 - 1.0) > opts_.norm_tol) {
        throw Error(ErrorCode::kNonUnitary, "norm drifted to " + format_double(n2));
      }
    }
  }

 private:
  void check_qubit(int q) const {
    if (q < 0 || q >= num_qubits()) throw Error(ErrorCode::kIndex, "qubit " + std::to_string(q) + " out of range");
  }

  void check_mask(std::uint64_t mask) const {
    if (mask >> num_qubits()) throw Error(ErrorCode::kIndex, "control qubit out of range");
  }

  /// Validates indices, checks distinctness, and returns the combined control mask.
  std::uint64_t prepare(std::span<const int> targets, std::span<const int> controls, std::uint64_t outer) const {
    std::uint64_t seen = 0;
    for (auto list : {targets, controls}) {
      for (int q : list) {
        check_qubit(q);
        const std::uint64_t bit = std::uint64_t{1} << q;
        if (seen & bit) throw Error(ErrorCode::kIndex, "qubit " + std::to_string(q) + " listed twice");
        seen |= bit;
      }
    }
    const std::uint64_t tmask = detail::mask_of(targets);
    if (outer & tmask) throw Error(ErrorCode::kIndex, "control qubit overlaps a gate target");
    return detail::mask_of(controls) | outer;
  }

  void single_qubit(int q, const Complex (&m)[2][2], std::uint64_t cmask) {
    const std::uint64_t bit = std::uint64_t{1} << q;
    const std::size_t n = amps_.size();
    for (std::size_t base = 0; base < n; base += 2 * bit) {
      for (std::size_t off = 0; off < bit; ++off) {
        const std::size_t i0 = base + off;
        if ((i0 & cmask) != cmask) continue;
        const std::size_t i1 = i0 | bit;
        const Complex a0 = amps_[i0], a1 = amps_[i1];
        amps_[i0] = m[0][0] * a0 + m[0][1] * a1;
        amps_[i1] = m[1][0] * a0 + m[1][1] * a1;
      }
    }
  }

  template <typename Factor>
  void diagonal(std::uint64_t cmask, Factor&& factor) {
    for (std::size_t i = 0; i < amps_.size(); ++i) {
      if ((i & cmask) == cmask) amps_[i] *= factor(i);
    }
  }

  /// amps'[perm(i)] = amps[i] for indices passing the control mask.
  template <typename Perm>
  void permute(std::uint64_t cmask, Perm&& perm) {
    scratch_.resize(amps_.size());
    for (std::size_t i = 0; i < amps_.size(); ++i) {
      const std::uint64_t j = ((i & cmask) == cmask) ? perm(i) : i;
      scratch_[j] = amps_[i];
    }
    amps_.swap(scratch_);
  }

  void apply_impl(const Hadamard& g, std::uint64_t outer) {
    const int t[] = {g.target};
    const auto cm = prepare(t, g.controls, outer);
    const double s = std::numbers::sqrt2 / 2.0;
    const Complex m[2][2] = {{s, s}, {s, -s}};
    single_qubit(g.target, m, cm);
  }

  void apply_impl(const PauliX& g, std::uint64_t outer) {
    const int t[] = {g.target};
    const auto cm = prepare(t, g.controls, outer);
    const std::uint64_t bit = std::uint64_t{1} << g.target;
    for (std::size_t i = 0; i < amps_.size(); ++i) {
      if (!(i & bit) && (i & cm) == cm) std::swap(amps_[i], amps_[i | bit]);
    }
  }

  void apply_impl(const PhaseZ& g, std::uint64_t outer) {
    const int t[] = {g.target};
    const auto cm = prepare(t, g.controls, outer) | (std::uint64_t{1} << g.target);
    diagonal(cm, [](std::size_t) { return -1.0; });
  }

  void apply_impl(const Phase& g, std::uint64_t outer) {
    const int t[] = {g.target};
    const auto cm = prepare(t, g.controls, outer) | (std::uint64_t{1} << g.target);
    const Complex f = std::polar(1.0, g.angle);
    diagonal(cm, [f](std::size_t) { return f; });
  }

  void apply_impl(const Swap& g, std::uint64_t outer) {
    const int t[] = {g.a, g.b};
    const auto cm = prepare(t, g.controls, outer);
    const std::uint64_t ba = std::uint64_t{1} << g.a, bb = std::uint64_t{1} << g.b;
    for (std::size_t i = 0; i < amps_.size(); ++i) {
      if ((i & ba) && !(i & bb) && (i & cm) == cm) std::swap(amps_[i], amps_[(i & ~ba) | bb]);
    }
  }

  void apply_impl(const MultiControlledZ& g, std::uint64_t outer) {
    if (g.qubits.empty()) throw Error(ErrorCode::kIndex, "multi-controlled Z needs at least one qubit");
    const auto cm = prepare(g.qubits, {}, outer) | detail::mask_of(g.qubits);
    diagonal(cm, [](std::size_t) { return -1.0; });
  }

  void apply_impl(const PhaseFlipOnValue& g, std::uint64_t outer) {
    const auto cm = prepare(g.qubits, {}, outer);
    if (g.qubits.size() < 64 && (g.value >> g.qubits.size())) throw Error(ErrorCode::kIndex, "value wider than register");
    const std::uint64_t qmask = detail::mask_of(g.qubits);
    const std::uint64_t pattern = detail::write_bits(0, g.qubits, g.value);
    for (std::size_t i = 0; i < amps_.size(); ++i) {
      if ((i & cm) == cm && (i & qmask) == pattern) amps_[i] = -amps_[i];
    }
  }

  void apply_impl(const Unitary& g, std::uint64_t outer) {
    const std::size_t k = g.qubits.size();
    if (k == 0 || k > 12) throw Error(ErrorCode::kIndex, "unitary must act on 1..12 qubits");
    const auto cm = prepare(g.qubits, g.controls, outer);
    const std::size_t d = std::size_t{1} << k;
    if (g.matrix.size() != d * d) throw Error(ErrorCode::kNonUnitary, "matrix has wrong dimension");
    check_unitary(g.matrix, d);
    std::vector<std::size_t> offsets(d);
    for (std::size_t v = 0; v < d; ++v) offsets[v] = detail::write_bits(0, g.qubits, v);
    const std::uint64_t tmask = detail::mask_of(g.qubits);
    std::vector<Complex> in(d);
    for (std::size_t base = 0; base < amps_.size(); ++base) {
      if ((base & tmask) || (base & cm) != cm) continue;
      for (std::size_t v = 0; v < d; ++v) in[v] = amps_[base | offsets[v]];
      for (std::size_t r = 0; r < d; ++r) {
        Complex acc = 0.0;
        const Complex* row = &g.matrix[r * d];
        for (std::size_t c = 0; c < d; ++c) acc += row[c] * in[c];
        amps_[base | offsets[r]] = acc;
      }
    }
  }

  void apply_impl(const AddFromTable& g, std::uint64_t outer) {
    prepare(g.source, g.target, 0);
    if (outer & (detail::mask_of(g.source) | detail::mask_of(g.target))) {
      throw Error(ErrorCode::kIndex, "control qubit overlaps an arithmetic register");
    }
    if (g.target.size() > 62) throw Error(ErrorCode::kIndex, "accumulator too wide");
    if (g.target.empty()) return;  // zero-width accumulator: every score is 0
    if (g.table.size() < (std::size_t{1} << g.source.size())) {
      throw Error(ErrorCode::kIndex, "score table shorter than the source register range");
    }
    const std::uint64_t modulus_mask = (std::uint64_t{1} << g.target.size()) - 1;
    permute(outer, [&](std::uint64_t i) {
      const std::uint64_t src = detail::read_bits(i, g.source);
      const std::uint64_t acc = detail::read_bits(i, g.target);
      const auto delta = static_cast<std::uint64_t>(g.sign * g.table[src]);
      return detail::write_bits(i, g.target, (acc + delta) & modulus_mask);
    });
  }

  void apply_impl(const CompareLeq& g, std::uint64_t outer) {
    const int f[] = {g.flag};
    prepare(g.source, f, 0);
    if (outer & (detail::mask_of(g.source) | (std::uint64_t{1} << g.flag))) {
      throw Error(ErrorCode::kIndex, "control qubit overlaps the comparator");
    }
    const std::uint64_t flag_bit = std::uint64_t{1} << g.flag;
    permute(outer, [&](std::uint64_t i) {
      const auto v = static_cast<std::int64_t>(detail::read_bits(i, g.source));
      return v <= g.bound ? (i ^ flag_bit) : i;
    });
  }

  void check_unitary(const std::vector<Complex>& m, std::size_t d) const {
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = a; b < d; ++b) {
        Complex dot = 0.0;
        for (std::size_t r = 0; r < d; ++r) dot += std::conj(m[r * d + a]) * m[r * d + b];
        const double expect = a == b ? 1.0 : 0.0;
        if (std::abs(dot - expect) > opts_.unitary_tol) throw Error(ErrorCode::kNonUnitary, "matrix is not unitary");
      }
    }
  }

  QubitLayout layout_;
  EngineOptions opts_;
  std::vector<Complex> amps_;
  std::vector<Complex> scratch_;
};

inline StateVector allocate_state(const QubitLayout& layout, const EngineOptions& opts = {}) {
  return StateVector(layout, opts);
}

inline void apply_gate(StateVector& state, const Gate& gate) { state.apply(gate); }

/// Applies `ops` only on the slice where `control` is 1.
inline void apply_controlled(StateVector& state, int control, std::span<const Gate> ops) {
  if (control < 0 || control >= state.num_qubits()) throw Error(ErrorCode::kIndex, "control qubit out of range");
  const std::uint64_t mask = std::uint64_t{1} << control;
  for (const auto& g : ops) state.apply(g, mask);
}

/// Gate sequence of the QFT on `qubits` (qubits[0] = least significant bit),
/// including the final bit-reversal swaps, so |k> -> 2^{-r/2} sum_l e^{2 pi i k l / 2^r} |l>.
inline std::vector<Gate> qft_gates(std::span<const int> qubits) {
  std::vector<Gate> gates;
  const int r = static_cast<int>(qubits.size());
  for (int j = r - 1; j >= 0; --j) {
    gates.push_back(Hadamard{qubits[j]});
    for (int k = j - 1; k >= 0; --k) {
      gates.push_back(Phase{qubits[j], std::numbers::pi / std::ldexp(1.0, j - k), {qubits[k]}});
    }
  }
  for (int a = 0, b = r - 1; a < b; ++a, --b) gates.push_back(Swap{qubits[a], qubits[b]});
  return gates;
}

/// Reverse order of qft_gates with conjugated phases.
inline std::vector<Gate> inverse_qft_gates(std::span<const int> qubits) {
  std::vector<Gate> gates = qft_gates(qubits);
  std::reverse(gates.begin(), gates.end());
  for (auto& g : gates) {
    if (auto* p = std::get_if<Phase>(&g)) p->angle = -p->angle;
  }
  return gates;
}

namespace detail {
inline void check_distinct(const StateVector& state, std::span<const int> qubits) {
  std::uint64_t seen = 0;
  for (int q : qubits) {
    if (q < 0 || q >= state.num_qubits()) throw Error(ErrorCode::kIndex, "qubit out of range");
    if (seen & (std::uint64_t{1} << q)) throw Error(ErrorCode::kIndex, "qubit listed twice");
    seen |= std::uint64_t{1} << q;
  }
}
}  // namespace detail

inline void qft(StateVector& state, std::span<const int> qubits) {
  detail::check_distinct(state, qubits);
  for (const auto& g : qft_gates(qubits)) state.apply(g);
}

inline void inverse_qft(StateVector& state, std::span<const int> qubits) {
  detail::check_distinct(state, qubits);
  for (const auto& g : inverse_qft_gates(qubits)) state.apply(g);
}

/// Born-rule marginal over `qubits`; entry k collects indices whose qubits read k.
inline std::vector<double> marginal_probabilities(const StateVector& state, std::span<const int> qubits) {
  detail::check_distinct(state, qubits);
  if (qubits.size() > 30) throw Error(ErrorCode::kCapExceeded, "marginal over too many qubits");
  std::vector<double> probs(std::size_t{1} << qubits.size(), 0.0);
  const auto amps = state.amplitudes();
  for (std::size_t i = 0; i < amps.size(); ++i) probs[detail::read_bits(i, qubits)] += std::norm(amps[i]);
  return probs;
}

/// Multinomial counts of `shots` draws from `probabilities`.
inline std::vector<std::uint64_t> sample_outcome(std::span<const double> probabilities, RandomStream& rng,
                                                 std::uint64_t shots) {
  std::vector<double> cdf(probabilities.size());
  CompensatedSum s;
  std::size_t last_positive = 0;
  for (std::size_t k = 0; k < probabilities.size(); ++k) {
    s.add(probabilities[k]);
    cdf[k] = s.value();
    if (probabilities[k] > 0.0) last_positive = k;
  }
  std::vector<std::uint64_t> counts(probabilities.size(), 0);
  if (probabilities.empty()) return counts;
  for (std::uint64_t t = 0; t < shots; ++t) {
    const double u = rng.uniform_real() * cdf.back();
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    ++counts[it == cdf.end() ? last_positive : static_cast<std::size_t>(it - cdf.begin())];
  }
  return counts;
}

/// Rows `index,re,im`; only for states of at most 16 qubits.
inline void dump_amplitudes_csv(std::ostream& os, const StateVector& state) {
  if (state.num_qubits() > 16) throw Error(ErrorCode::kCapExceeded, "amplitude dump limited to 16 qubits");
  os << "index,re,im\n";
  const auto amps = state.amplitudes();
  for (std::size_t i = 0; i < amps.size(); ++i) {
    os << i << ',' << format_double(amps[i].real()) << ',' << format_double(amps[i].imag()) << '\n';
  }
}

}  // namespace qboot

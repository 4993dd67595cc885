#pragma once

// The QBOOT circuit on the statevector engine.
//
// Register layout (low qubits first):
//   bootstrap  r index registers of m = ceil(log2 n) qubits; index register j
//              holds i_j - 1 for the j-th resampled observation
//   statistic  ceil(log2(V + 1)) qubits accumulating the integer score sum
//   label      1 qubit receiving g(z, X*) = 1{f(X*) <= z}
//   precision  T phase-estimation qubits; Y reads in natural binary
//
// A = U_g (U_prep (x) I) prepares sqrt(H) |phi_1> + sqrt(1 - H) |phi_0> and the
// Grover iterate is Q = -A S_0 A^dagger S_phi1, with S_0 = I - 2|0><0| on all
// non-precision qubits. -S_phi1 is a phase flip on label = 0.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iterator>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <type_traits>
#include <variant>
#include <vector>

#include "qboot/bootstrap.hpp"
#include "qboot/errors.hpp"
#include "qboot/qae.hpp"
#include "qboot/sample.hpp"
#include "qboot/statevector.hpp"

namespace qboot {

struct PlanOptions {
  EngineOptions engine{};
  EnumerationOptions enumeration{};
};

struct QbootPlan {
  Sample sample;
  StatisticSpec stat;
  double z = 0.0;
  int T = 0;
  std::size_t resample_size = 0;
  int index_bits = 0;
  /// Shifted non-negative scores, padded with zeros to 2^index_bits entries.
  std::vector<std::int64_t> score_table;
  /// Subtracted from every raw score before shifting.
  std::int64_t score_offset = 0;
  /// Bound on the shifted score sum; may be negative (nothing accepted).
  std::int64_t integer_bound = 0;
  /// Largest achievable shifted score sum.
  std::int64_t max_score_sum = 0;
  QubitLayout layout;
  /// Enumerated H_BOOT(z) with the threshold transform checked against the
  /// callable statistic; empty when n^r exceeds the enumeration cap.
  std::optional<double> ideal_value;
  EngineOptions engine{};

  const Register& bootstrap() const { return layout.reg("bootstrap"); }
  const Register& statistic() const { return layout.reg("statistic"); }
  int label() const { return layout.reg("label").qubits.front(); }
  const Register& precision() const { return layout.reg("precision"); }

  std::vector<int> index_register(std::size_t j) const {
    const auto& q = bootstrap().qubits;
    return {q.begin() + static_cast<std::ptrdiff_t>(j * index_bits),
            q.begin() + static_cast<std::ptrdiff_t>((j + 1) * index_bits)};
  }

  /// Every qubit except the precision register.
  std::vector<int> work_qubits() const {
    std::vector<int> out;
    for (const auto& r : layout.registers()) {
      if (r.name != "precision") out.insert(out.end(), r.qubits.begin(), r.qubits.end());
    }
    return out;
  }

  bool threshold_verified() const { return ideal_value.has_value(); }
};

inline int ceil_log2(std::uint64_t x) {
  int b = 0;
  while ((std::uint64_t{1} << b) < x) ++b;
  return b;
}

/// n ceil(log2 n) + ceil(log2(V + 1)) + 1 + T + W_f, with r index registers in place of n.
inline int qboot_qubit_count(std::size_t n, std::size_t resample_size, std::int64_t max_score_sum, int T,
                             int ancilla = 0) {
  return static_cast<int>(resample_size) * ceil_log2(n) + ceil_log2(static_cast<std::uint64_t>(max_score_sum) + 1) +
         1 + T + ancilla;
}

/// Qubits the plan would need, without building it; nullopt when the
/// statistic has no score-sum form for this sample.
inline std::optional<int> plan_qubit_count(const Sample& sample, const StatisticSpec& stat, int T,
                                           std::size_t resample_size) {
  if (!stat.circuit_form) return std::nullopt;
  std::int64_t lo = std::numeric_limits<std::int64_t>::max(), hi = std::numeric_limits<std::int64_t>::min();
  for (double v : sample.values()) {
    const auto s = stat.circuit_form->score(v);
    if (!s) return std::nullopt;
    lo = std::min(lo, *s);
    hi = std::max(hi, *s);
  }
  return qboot_qubit_count(sample.size(), resample_size, (hi - lo) * static_cast<std::int64_t>(resample_size), T);
}

inline QbootPlan build_plan(const Sample& sample, const StatisticSpec& stat, double z, int T,
                            std::size_t resample_size, const PlanOptions& opts = {}) {
  if (!stat.circuit_form) throw Error(ErrorCode::kNoCircuitForm, "statistic '" + stat.name + "' has no score-sum form");
  if (T < 0) throw Error(ErrorCode::kDomain, "T must be non-negative");
  if (resample_size == 0) throw Error(ErrorCode::kDomain, "resample size must be positive");
  const std::size_t n = sample.size();
  const auto& form = *stat.circuit_form;

  std::vector<std::int64_t> raw(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = form.score(sample[i]);
    if (!s) throw Error(ErrorCode::kNoCircuitForm, "sample value has no integer score for '" + stat.name + "'");
    raw[i] = *s;
  }
  QbootPlan plan{sample, stat, z, T, resample_size};
  plan.engine = opts.engine;
  plan.index_bits = ceil_log2(n);
  plan.score_offset = *std::min_element(raw.begin(), raw.end());
  plan.score_table.assign(std::size_t{1} << plan.index_bits, 0);
  std::int64_t top = 0;
  for (std::size_t i = 0; i < n; ++i) {
    plan.score_table[i] = raw[i] - plan.score_offset;
    top = std::max(top, plan.score_table[i]);
  }
  const auto r = static_cast<std::int64_t>(resample_size);
  plan.max_score_sum = top * r;
  plan.integer_bound = form.bound(z, resample_size) - plan.score_offset * r;

  const int total = qboot_qubit_count(n, resample_size, plan.max_score_sum, T);
  if (total > opts.engine.max_qubits) {
    throw Error(ErrorCode::kCapExceeded,
                "plan needs " + std::to_string(total) + " qubits; cap is " + std::to_string(opts.engine.max_qubits));
  }

  // The float threshold must not change the accept set: compare the integer
  // predicate with the callable one on every resample, allowing the bound to
  // move by one step to absorb rounding in r * z.
  if (enumeration_size(n, resample_size, opts.enumeration.cap)) {
    std::vector<std::pair<std::int64_t, bool>> cases;
    std::uint64_t accepted = 0, count = 0;
    for_each_resample(sample, resample_size, opts.enumeration, [&](const IndexVector& idx, std::span<const double> x) {
      std::int64_t s = 0;
      for (auto i : idx) s += plan.score_table[i];
      const bool g = evaluate_indicator(stat, x, z);
      cases.emplace_back(s, g);
      accepted += g;
      ++count;
    });
    auto exact = [&](std::int64_t b) {
      return std::all_of(cases.begin(), cases.end(), [b](const auto& c) { return (c.first <= b) == c.second; });
    };
    const std::int64_t b0 = plan.integer_bound;
    const std::int64_t candidates[] = {b0, b0 - 1, b0 + 1};
    const auto hit = std::find_if(std::begin(candidates), std::end(candidates), exact);
    if (hit == std::end(candidates)) {
      throw Error(ErrorCode::kNoCircuitForm, "integer threshold does not reproduce the indicator");
    }
    plan.integer_bound = *hit;
    plan.ideal_value = static_cast<double>(accepted) / static_cast<double>(count);
  }

  plan.layout.add_register("bootstrap", static_cast<int>(resample_size) * plan.index_bits)
      .add_register("statistic", ceil_log2(static_cast<std::uint64_t>(plan.max_score_sum) + 1))
      .add_register("label", 1)
      .add_register("precision", T)
      .add_register("ancilla", 0);
  return plan;
}

/// Real unitary whose first column is the uniform superposition over the
/// first n of 2^m basis states (a Householder reflection, so it is its own inverse).
inline std::vector<Complex> uniform_state_unitary(std::size_t n, int m) {
  const std::size_t d = std::size_t{1} << m;
  std::vector<double> u(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) u[i] = 1.0 / std::sqrt(static_cast<double>(n));
  std::vector<double> w(u);
  w[0] -= 1.0;  // w = u - e0
  double ww = 0.0;
  for (double x : w) ww += x * x;
  std::vector<Complex> mat(d * d);
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = 0; b < d; ++b) {
      mat[a * d + b] = (a == b ? 1.0 : 0.0) - (ww > 0.0 ? 2.0 * w[a] * w[b] / ww : 0.0);
    }
  }
  return mat;
}

inline std::vector<Gate> preparation_gates(const QbootPlan& plan) {
  std::vector<Gate> gates;
  if (plan.index_bits == 0) return gates;
  const std::size_t n = plan.sample.size();
  if ((std::size_t{1} << plan.index_bits) == n) {
    for (int q : plan.bootstrap().qubits) gates.push_back(Hadamard{q});
  } else {
    const auto mat = uniform_state_unitary(n, plan.index_bits);
    for (std::size_t j = 0; j < plan.resample_size; ++j) gates.push_back(Unitary{plan.index_register(j), mat});
  }
  return gates;
}

/// Accumulate scores, compare, flip the label, uncompute.
inline std::vector<Gate> oracle_gates(const QbootPlan& plan) {
  std::vector<Gate> gates;
  const auto& stat = plan.statistic().qubits;
  for (std::size_t j = 0; j < plan.resample_size; ++j) {
    gates.push_back(AddFromTable{plan.index_register(j), stat, plan.score_table, +1});
  }
  gates.push_back(CompareLeq{stat, plan.integer_bound, plan.label()});
  for (std::size_t j = plan.resample_size; j-- > 0;) {
    gates.push_back(AddFromTable{plan.index_register(j), stat, plan.score_table, -1});
  }
  return gates;
}

inline Gate adjoint(const Gate& g) {
  return std::visit(
      [](const auto& x) -> Gate {
        using G = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<G, Phase>) {
          return Phase{x.target, -x.angle, x.controls};
        } else if constexpr (std::is_same_v<G, Unitary>) {
          const std::size_t d = std::size_t{1} << x.qubits.size();
          Unitary u{x.qubits, std::vector<Complex>(d * d), x.controls};
          for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b < d; ++b) u.matrix[a * d + b] = std::conj(x.matrix[b * d + a]);
          return u;
        } else if constexpr (std::is_same_v<G, AddFromTable>) {
          return AddFromTable{x.source, x.target, x.table, -x.sign};
        } else {
          return x;  // self-inverse
        }
      },
      g);
}

inline std::vector<Gate> adjoint(std::span<const Gate> gates) {
  std::vector<Gate> out;
  out.reserve(gates.size());
  for (auto it = gates.rbegin(); it != gates.rend(); ++it) out.push_back(adjoint(*it));
  return out;
}

/// A = oracle after preparation.
inline std::vector<Gate> state_preparation_gates(const QbootPlan& plan) {
  auto gates = preparation_gates(plan);
  auto oracle = oracle_gates(plan);
  gates.insert(gates.end(), oracle.begin(), oracle.end());
  return gates;
}

/// Q = -A S_0 A^dagger S_phi1, listed in application order. The sign is
/// carried by flipping the label-0 states instead of the label-1 states.
inline std::vector<Gate> grover_gates(const QbootPlan& plan) {
  const auto a = state_preparation_gates(plan);
  std::vector<Gate> gates;
  gates.push_back(PhaseFlipOnValue{{plan.label()}, 0});
  const auto a_dag = adjoint(a);
  gates.insert(gates.end(), a_dag.begin(), a_dag.end());
  gates.push_back(PhaseFlipOnValue{plan.work_qubits(), 0});
  gates.insert(gates.end(), a.begin(), a.end());
  return gates;
}

inline StateVector prepare_bootstrap_state(const QbootPlan& plan) {
  StateVector state(plan.layout, plan.engine);
  for (const auto& g : preparation_gates(plan)) state.apply(g);
  return state;
}

namespace detail {

/// Total probability on basis states where `qubits` are not all zero.
inline double dirty_mass(const StateVector& state, std::span<const int> qubits) {
  const std::uint64_t mask = mask_of(qubits);
  double mass = 0.0;
  const auto amps = state.amplitudes();
  for (std::size_t i = 0; i < amps.size(); ++i) {
    if (i & mask) mass += std::norm(amps[i]);
  }
  return mass;
}

}  // namespace detail

/// U_g(z): requires statistic and label registers in |0>.
inline void apply_oracle(StateVector& state, const QbootPlan& plan) {
  std::vector<int> clean = plan.statistic().qubits;
  clean.push_back(plan.label());
  if (detail::dirty_mass(state, clean) > 1e-12) {
    throw Error(ErrorCode::kRegisterNotClean, "statistic/label registers must start in |0>");
  }
  for (const auto& g : oracle_gates(plan)) state.apply(g);
}

/// U_g(z)^dagger; no cleanliness precondition.
inline void apply_oracle_adjoint(StateVector& state, const QbootPlan& plan) {
  for (const auto& g : adjoint(oracle_gates(plan))) state.apply(g);
}

inline void grover_iterate(StateVector& state, const QbootPlan& plan) {
  for (const auto& g : grover_gates(plan)) state.apply(g);
}

/// Structural call counts of one canonical QAE run.
struct WorkCounts {
  std::uint64_t grover_iterations = 0;
  std::uint64_t oracle_calls = 0;
  std::uint64_t oracle_adjoint_calls = 0;
  std::uint64_t prep_calls = 0;
  std::uint64_t prep_adjoint_calls = 0;

  bool operator==(const WorkCounts&) const = default;
};

struct QaeRun {
  std::vector<double> probabilities;
  WorkCounts counts;
};

/// Full canonical QAE on the circuit: A on the work registers, Hadamards on
/// the precision register, controlled-Q^{2^{k-1}} from precision qubit k,
/// inverse QFT, and the exact marginal over the precision register.
inline QaeRun run_qae_counted(const QbootPlan& plan) {
  StateVector state(plan.layout, plan.engine);
  QaeRun run;
  for (const auto& g : state_preparation_gates(plan)) state.apply(g);
  ++run.counts.oracle_calls;
  ++run.counts.prep_calls;
  const auto& prec = plan.precision().qubits;
  for (int q : prec) state.apply(Hadamard{q});
  const auto q_gates = grover_gates(plan);
  for (std::size_t k = 0; k < prec.size(); ++k) {
    const std::uint64_t reps = std::uint64_t{1} << k;
    for (std::uint64_t rep = 0; rep < reps; ++rep) {
      apply_controlled(state, prec[k], q_gates);
      ++run.counts.grover_iterations;
      ++run.counts.oracle_calls;
      ++run.counts.oracle_adjoint_calls;
      ++run.counts.prep_calls;
      ++run.counts.prep_adjoint_calls;
    }
  }
  inverse_qft(state, prec);
  run.probabilities = marginal_probabilities(state, prec);
  return run;
}

inline std::vector<double> run_qae_exact(const QbootPlan& plan) {
  if (plan.T < 1) throw Error(ErrorCode::kDomain, "QAE needs at least one precision qubit");
  return run_qae_counted(plan).probabilities;
}

enum class QbootPath { kAnalytic, kCircuit };

/// Outcome distribution for the plan: the circuit marginal, or the closed-form
/// PMF at the enumerated ideal value.
inline QaePmf qboot_outcome_pmf(const QbootPlan& plan, QbootPath path) {
  if (plan.T < 1) throw Error(ErrorCode::kDomain, "QAE needs at least one precision qubit");
  if (path == QbootPath::kCircuit) {
    const double h = plan.ideal_value.value_or(std::numeric_limits<double>::quiet_NaN());
    QaePmf pmf{plan.T, h, std::isnan(h) ? 0.0 : tau_from_h(h), run_qae_exact(plan)};
    return pmf;
  }
  if (!plan.ideal_value) throw Error(ErrorCode::kEnumerationTooLarge, "analytic path needs the enumerated ideal value");
  return qae_pmf(*plan.ideal_value, plan.T);
}

inline std::vector<double> sample_qboot(const QbootPlan& plan, RandomStream& rng, std::size_t shots,
                                        QbootPath path = QbootPath::kCircuit) {
  const QaeSampler sampler(qboot_outcome_pmf(plan, path));
  std::vector<double> out(shots);
  for (auto& e : out) e = sampler.draw_estimate(rng);
  return out;
}

/// Exact counts for one QAE run plus the parameterized asymptotic work of
/// QBOOT, 2^T max(Q_g, n log2 n), and of CBOOT at matched B = 2^T and at
/// matched error (B = 2^{2T}), each B max(C_g, n log2 n).
struct WorkReport {
  int T = 0;
  std::size_t n = 0;
  int qubits = 0;
  WorkCounts counts;
  double oracle_cost = 0.0;     // Q_g
  double classical_cost = 0.0;  // C_g
  double qboot_work = 0.0;
  std::uint64_t matched_B = 0;
  double cboot_work_matched_cost = 0.0;
  double cboot_work_matched_error = 0.0;
  int balanced_T_smooth = 0;
  int balanced_T_nonsmooth = 0;
  bool is_balanced = false;
};

inline WorkCounts qae_work_counts(int T) {
  const std::uint64_t iters = (std::uint64_t{1} << T) - 1;
  return {iters, iters + 1, iters, iters + 1, iters};
}

/// Balanced T for bootstrap error O(n^{-1}) (smooth) or O(n^{-1/2}) (non-smooth).
inline int balanced_T(std::size_t n, bool smooth) {
  const double l = std::log2(static_cast<double>(n));
  return static_cast<int>(std::ceil(smooth ? l : 0.5 * l));
}

inline WorkReport work_report(std::size_t n, int T, int qubits, double oracle_cost, double classical_cost) {
  WorkReport w;
  w.T = T;
  w.n = n;
  w.qubits = qubits;
  w.counts = qae_work_counts(T);
  w.oracle_cost = oracle_cost;
  w.classical_cost = classical_cost;
  const double nd = static_cast<double>(w.n);
  const double encode = nd * std::log2(std::max(nd, 1.0));
  const double two_T = std::ldexp(1.0, T);
  w.qboot_work = two_T * std::max(oracle_cost, encode);
  w.matched_B = std::uint64_t{1} << T;
  w.cboot_work_matched_cost = static_cast<double>(w.matched_B) * std::max(classical_cost, encode);
  w.cboot_work_matched_error = two_T * two_T * std::max(classical_cost, encode);
  w.balanced_T_smooth = balanced_T(w.n, true);
  w.balanced_T_nonsmooth = balanced_T(w.n, false);
  w.is_balanced = T == w.balanced_T_smooth;
  return w;
}

inline WorkReport work_report(const QbootPlan& plan, double oracle_cost, double classical_cost) {
  return work_report(plan.sample.size(), plan.T, plan.layout.total(), oracle_cost, classical_cost);
}

}  // namespace qboot

#pragma once

// Closed-form statistics of canonical quantum amplitude estimation (QAE).
//
// With target amplitude h = sin^2(tau), T precision qubits and N = 2^T, the
// phase-estimation outcome Y has
//
//   Pr(Y = l) = sin^2(N tau) / (2 N^2) * [csc^2(tau - l pi/N) + csc^2(tau + l pi/N)]
//
// and the estimate is sin^2(pi Y / N). Each csc^2 term is evaluated as the
// Fejer kernel sin^2(N x) / sin^2(x), x = tau -/+ l pi/N, which is the same
// quantity (N l pi/N is a multiple of pi) but stays well conditioned as x
// approaches a multiple of pi, where its limit N^2 is used.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <ostream>
#include <span>
#include <vector>

#include "qboot/errors.hpp"
#include "qboot/numeric.hpp"
#include "qboot/rng.hpp"

namespace qboot {

/// 32 (pi^2 - 8) / pi^4 = 4 q (1 - q) at q = 8 / pi^2.
inline constexpr double kMedianRho =
    32.0 * (std::numbers::pi * std::numbers::pi - 8.0) / (std::numbers::pi * std::numbers::pi * std::numbers::pi * std::numbers::pi);

/// Lower bound on the single-run success probability.
inline constexpr double kSingleRunFloor = 8.0 / (std::numbers::pi * std::numbers::pi);

struct QaeOptions {
  int max_T = 24;
  /// Arguments within this distance (radians) of a multiple of pi use the analytic limit.
  double singular_tol = 1e-12;
  int max_median_M = 99;
};

struct QaePmf {
  int T = 0;
  double h = 0.0;
  double tau = 0.0;
  std::vector<double> probs;

  std::size_t size() const { return probs.size(); }
};

inline double tau_from_h(double h) {
  if (!(h >= 0.0 && h <= 1.0)) throw Error(ErrorCode::kDomain, "amplitude h must lie in [0, 1]");
  return std::asin(std::sqrt(h));
}

namespace detail {

inline void check_T(int T, const QaeOptions& opts) {
  if (T < 1) throw Error(ErrorCode::kDomain, "T must be a positive integer");
  if (T > opts.max_T) throw Error(ErrorCode::kCapExceeded, "T exceeds the PMF materialization cap");
}

/// sin^2(N x) / sin^2(x) with the limit N^2 near multiples of pi.
inline long double fejer(long double x, long double N, double tol) {
  constexpr long double pi = std::numbers::pi_v<long double>;
  const long double r = x - pi * std::round(x / pi);
  if (std::fabs(r) <= tol) return N * N;
  const long double s = std::sin(N * r) / std::sin(r);
  return s * s;
}

/// Pr(l) off the degenerate grid. Extended precision keeps exact cases such
/// as h = 1/2, T = 1 exact after rounding back to double.
inline double outcome_probability(double h, std::uint64_t N, std::uint64_t l, double tol) {
  const long double tau = std::asin(std::sqrt(static_cast<long double>(h)));
  const long double Nl = static_cast<long double>(N);
  const long double a = std::numbers::pi_v<long double> * static_cast<long double>(l) / Nl;
  return static_cast<double>((fejer(tau - a, Nl, tol) + fejer(tau + a, Nl, tol)) / (2.0L * Nl * Nl));
}

/// m with tau = m pi / N when tau sits on the phase grid, else -1.
inline std::int64_t grid_index(double tau, std::uint64_t N, double tol) {
  const double m = std::round(tau * static_cast<double>(N) / std::numbers::pi);
  if (std::fabs(tau - m * std::numbers::pi / static_cast<double>(N)) <= tol) return static_cast<std::int64_t>(m);
  return -1;
}

}  // namespace detail

/// sin^2(pi Y / 2^T). Y and 2^T - Y give bit-identical results.
inline double estimate_from_outcome(std::uint64_t Y, int T) {
  if (T < 0 || T > 62) throw Error(ErrorCode::kRange, "T out of range");
  const std::uint64_t N = std::uint64_t{1} << T;
  if (Y >= N) throw Error(ErrorCode::kRange, "outcome Y must lie in [0, 2^T)");
  const std::uint64_t folded = std::min(Y, N - Y);
  const long double s = std::sin(std::numbers::pi_v<long double> * static_cast<long double>(folded) /
                                 static_cast<long double>(N));
  return static_cast<double>(s * s);
}

/// Probability of a single outcome l, usable beyond the materialization cap.
inline double qae_outcome_probability(double h, int T, std::uint64_t l, const QaeOptions& opts = {}) {
  const double tau = tau_from_h(h);
  if (T < 1 || T > 62) throw Error(ErrorCode::kRange, "T out of range");
  const std::uint64_t N = std::uint64_t{1} << T;
  if (l >= N) throw Error(ErrorCode::kRange, "outcome out of range");
  if (const auto m = detail::grid_index(tau, N, opts.singular_tol); m >= 0) {
    const auto um = static_cast<std::uint64_t>(m) % N;
    return 0.5 * static_cast<double>(l == um) + 0.5 * static_cast<double>(l == (N - um) % N);
  }
  return detail::outcome_probability(h, N, l, opts.singular_tol);
}

/// Exact outcome distribution of T-qubit canonical QAE for amplitude h.
inline QaePmf qae_pmf(double h, int T, const QaeOptions& opts = {}) {
  const double tau = tau_from_h(h);
  detail::check_T(T, opts);
  const std::uint64_t N = std::uint64_t{1} << T;
  QaePmf pmf{T, h, tau, std::vector<double>(N, 0.0)};
  if (const auto m = detail::grid_index(tau, N, opts.singular_tol); m >= 0) {
    // Degenerate phase: all mass on l = m and its alias N - m.
    const auto um = static_cast<std::uint64_t>(m) % N;
    pmf.probs[um] += 0.5;
    pmf.probs[(N - um) % N] += 0.5;
    return pmf;
  }
  // Pr(l) = Pr(N - l); evaluate the lower half and mirror it.
  for (std::uint64_t l = 0; l <= N / 2; ++l) {
    pmf.probs[l] = detail::outcome_probability(h, N, l, opts.singular_tol);
    if (l > 0) pmf.probs[N - l] = pmf.probs[l];
  }
  return pmf;
}

/// Inverse-CDF sampler over a QaePmf. Construction is O(2^T); each draw is O(T).
class QaeSampler {
 public:
  explicit QaeSampler(const QaePmf& pmf) : T_(pmf.T), cdf_(pmf.probs.size()) {
    CompensatedSum s;
    for (std::size_t l = 0; l < pmf.probs.size(); ++l) {
      s.add(pmf.probs[l]);
      cdf_[l] = s.value();
      if (pmf.probs[l] > 0.0) last_positive_ = l;
    }
  }

  std::uint64_t draw_outcome(RandomStream& rng) const {
    const double u = rng.uniform_real() * cdf_.back();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.end()) return last_positive_;
    return static_cast<std::uint64_t>(it - cdf_.begin());
  }

  double draw_estimate(RandomStream& rng) const { return estimate_from_outcome(draw_outcome(rng), T_); }

  /// Median of M single-run estimates; M must be odd.
  double draw_median(int M, RandomStream& rng) const {
    if (M < 1 || M % 2 == 0) throw Error(ErrorCode::kDomain, "median-of-M requires odd M >= 1");
    if (M == 1) return draw_estimate(rng);
    std::vector<double> runs(static_cast<std::size_t>(M));
    for (auto& r : runs) r = draw_estimate(rng);
    auto mid = runs.begin() + M / 2;
    std::nth_element(runs.begin(), mid, runs.end());
    return *mid;
  }

  int T() const { return T_; }

 private:
  int T_;
  std::vector<double> cdf_;
  std::uint64_t last_positive_ = 0;
};

inline std::vector<double> qae_sample(const QaePmf& pmf, RandomStream& rng, std::size_t shots) {
  const QaeSampler sampler(pmf);
  std::vector<double> out(shots);
  for (auto& e : out) e = sampler.draw_estimate(rng);
  return out;
}

inline std::vector<double> median_of_m_sample(const QaePmf& pmf, int M, RandomStream& rng, std::size_t shots) {
  if (M < 1 || M % 2 == 0) throw Error(ErrorCode::kDomain, "median-of-M requires odd M >= 1");
  const QaeSampler sampler(pmf);
  std::vector<double> out(shots);
  for (auto& e : out) e = sampler.draw_median(M, rng);
  return out;
}

/// Sampling for T above the materialization cap. Outcomes are drawn from the
/// PMF restricted to `half_window` outcomes on either side of each of the two
/// peaks (round(N tau / pi) and its alias), renormalized. The excluded tail
/// mass is O(1 / half_window) and is reported through `truncated_mass`.
inline std::vector<double> qae_sample_peaks(double h, int T, RandomStream& rng, std::size_t shots,
                                            std::uint64_t half_window = 2048, double* truncated_mass = nullptr,
                                            const QaeOptions& opts = {}) {
  const double tau = tau_from_h(h);
  if (T < 1 || T > 62) throw Error(ErrorCode::kRange, "T out of range");
  const std::uint64_t N = std::uint64_t{1} << T;
  const auto peak = static_cast<std::int64_t>(std::llround(tau * static_cast<double>(N) / std::numbers::pi));
  std::vector<std::uint64_t> support;
  const auto w = static_cast<std::int64_t>(std::min<std::uint64_t>(half_window, N));
  const auto sN = static_cast<std::int64_t>(N);
  for (std::int64_t center : {peak, sN - peak}) {
    for (std::int64_t d = -w; d <= w; ++d) {
      support.push_back(static_cast<std::uint64_t>(((center + d) % sN + sN) % sN));
    }
  }
  std::sort(support.begin(), support.end());
  support.erase(std::unique(support.begin(), support.end()), support.end());
  std::vector<double> cdf(support.size());
  CompensatedSum s;
  for (std::size_t k = 0; k < support.size(); ++k) {
    s.add(qae_outcome_probability(h, T, support[k], opts));
    cdf[k] = s.value();
  }
  if (truncated_mass) *truncated_mass = std::max(0.0, 1.0 - cdf.back());
  std::vector<double> out(shots);
  for (auto& e : out) {
    const double u = rng.uniform_real() * cdf.back();
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    e = estimate_from_outcome(support[static_cast<std::size_t>(it - cdf.begin())], T);
  }
  return out;
}

/// E[estimate] - h from the closed-form sum
///   2^{-2T} sin^2(N tau) sum_l sin(l pi/N + tau) / sin(l pi/N - tau).
/// The prefactor is folded into each summand as sin^2(N d) / sin(d) with
/// d = l pi/N - tau (equal because N l pi/N is a multiple of pi); its limit at
/// d -> 0 mod pi is 0.
inline double bias_closed_form(double h, int T, const QaeOptions& opts = {}) {
  const double tau = tau_from_h(h);
  detail::check_T(T, opts);
  const std::uint64_t N = std::uint64_t{1} << T;
  if (detail::grid_index(tau, N, opts.singular_tol) >= 0) return 0.0;
  const double Nd = static_cast<double>(N);
  CompensatedSum sum;
  for (std::uint64_t l = 0; l < N; ++l) {
    const double a = std::numbers::pi * static_cast<double>(l) / Nd;
    const double shift = std::round((a - tau) / std::numbers::pi);
    const double d = (a - tau) - std::numbers::pi * shift;
    if (std::fabs(d) <= opts.singular_tol) continue;
    const double sn = std::sin(Nd * d);
    // sin(a - tau) = (-1)^shift sin(d)
    const double sign = std::fmod(std::fabs(shift), 2.0) == 1.0 ? -1.0 : 1.0;
    sum.add(sign * sn * sn / std::sin(d) * std::sin(a + tau));
  }
  return sum.value() / (Nd * Nd);
}

/// E[(estimate - h)^2] = 2^{-2T} sin^2(N tau) sum_l sin^2(l pi/N + tau).
inline double mse_closed_form(double h, int T, const QaeOptions& opts = {}) {
  const double tau = tau_from_h(h);
  detail::check_T(T, opts);
  const std::uint64_t N = std::uint64_t{1} << T;
  if (detail::grid_index(tau, N, opts.singular_tol) >= 0) return 0.0;
  const double Nd = static_cast<double>(N);
  const double pre = std::sin(Nd * tau);
  CompensatedSum sum;
  for (std::uint64_t l = 0; l < N; ++l) {
    const double s = std::sin(std::numbers::pi * static_cast<double>(l) / Nd + tau);
    sum.add(s * s);
  }
  return pre * pre * sum.value() / (Nd * Nd);
}

struct PmfMoments {
  double bias;
  double mse;
};

/// Bias and MSE by direct summation over the materialized PMF.
inline PmfMoments pmf_moments(const QaePmf& pmf) {
  CompensatedSum b, m;
  for (std::size_t l = 0; l < pmf.probs.size(); ++l) {
    if (pmf.probs[l] == 0.0) continue;
    const double err = estimate_from_outcome(l, pmf.T) - pmf.h;
    b.add(pmf.probs[l] * err);
    m.add(pmf.probs[l] * err * err);
  }
  return {b.value(), m.value()};
}

inline double pmf_moment_bias(double h, int T, const QaeOptions& opts = {}) { return pmf_moments(qae_pmf(h, T, opts)).bias; }
inline double pmf_moment_mse(double h, int T, const QaeOptions& opts = {}) { return pmf_moments(qae_pmf(h, T, opts)).mse; }

/// Half-width pi / 2^T of the success window on the estimate scale.
inline double success_half_width(int T) { return std::numbers::pi / std::ldexp(1.0, T); }

struct OutcomeSplit {
  double below = 0.0;   // estimate < h - eps
  double inside = 0.0;  // |estimate - h| <= eps
  double above = 0.0;   // estimate > h + eps
};

inline OutcomeSplit split_outcomes(const QaePmf& pmf) {
  const double eps = success_half_width(pmf.T);
  CompensatedSum below, inside, above;
  for (std::size_t l = 0; l < pmf.probs.size(); ++l) {
    const double e = estimate_from_outcome(l, pmf.T);
    if (e < pmf.h - eps) {
      below.add(pmf.probs[l]);
    } else if (e > pmf.h + eps) {
      above.add(pmf.probs[l]);
    } else {
      inside.add(pmf.probs[l]);
    }
  }
  return {below.value(), inside.value(), above.value()};
}

/// q = Pr(|estimate - h| <= pi / 2^T), exact over the PMF.
inline double single_run_success(double h, int T, const QaeOptions& opts = {}) {
  return split_outcomes(qae_pmf(h, T, opts)).inside;
}

/// Pr(median of M runs falls outside [h - pi/2^T, h + pi/2^T]). The median of
/// an odd number of runs is below the window iff at least (M+1)/2 runs are
/// below it, and likewise above; the two events are disjoint.
inline double median_failure_exact(double h, int T, int M, const QaeOptions& opts = {}) {
  if (M < 1 || M % 2 == 0) throw Error(ErrorCode::kDomain, "median-of-M requires odd M >= 1");
  if (M > opts.max_median_M) throw Error(ErrorCode::kMTooLarge, "M exceeds the configured cap");
  const OutcomeSplit split = split_outcomes(qae_pmf(h, T, opts));
  const int k = (M + 1) / 2;
  auto upper_tail = [&](double p) {
    if (p <= 0.0) return 0.0;
    CompensatedSum s;
    for (int j = k; j <= M; ++j) {
      const double log_term = std::lgamma(M + 1.0) - std::lgamma(j + 1.0) - std::lgamma(M - j + 1.0) +
                              j * std::log(p) + (M - j) * std::log1p(-p);
      s.add(p >= 1.0 ? static_cast<double>(j == M) : std::exp(log_term));
    }
    return s.value();
  };
  return upper_tail(split.below) + upper_tail(split.above);
}

/// Exact bias and MSE of the median of M independent runs. Estimates are
/// increasing in the folded outcome, so the median's CDF at a support point is
/// Pr(at least (M+1)/2 of M runs land at or below it).
inline PmfMoments median_of_m_moments(double h, int T, int M, const QaeOptions& opts = {}) {
  if (M < 1 || M % 2 == 0) throw Error(ErrorCode::kDomain, "median-of-M requires odd M >= 1");
  if (M > opts.max_median_M) throw Error(ErrorCode::kMTooLarge, "M exceeds the configured cap");
  const auto pmf = qae_pmf(h, T, opts);
  const std::uint64_t N = pmf.probs.size();
  const int k = (M + 1) / 2;
  auto at_least_k = [&](double F) {
    if (F >= 1.0) return 1.0;
    if (F <= 0.0) return 0.0;
    CompensatedSum s;
    for (int j = k; j <= M; ++j) {
      s.add(std::exp(std::lgamma(M + 1.0) - std::lgamma(j + 1.0) - std::lgamma(M - j + 1.0) + j * std::log(F) +
                     (M - j) * std::log1p(-F)));
    }
    return s.value();
  };
  CompensatedSum F, bias, mse;
  double prev = 0.0;
  for (std::uint64_t y = 0; y <= N / 2; ++y) {
    F.add(pmf.probs[y]);
    if (y > 0 && y != N - y) F.add(pmf.probs[N - y]);
    const double cdf = y == N / 2 ? 1.0 : at_least_k(std::min(F.value(), 1.0));
    const double err = estimate_from_outcome(y, T) - h;
    bias.add((cdf - prev) * err);
    mse.add((cdf - prev) * err * err);
    prev = cdf;
  }
  return {bias.value(), mse.value()};
}

/// rho^{M/2}.
inline double median_failure_bound(int M) { return std::pow(kMedianRho, 0.5 * M); }

/// Smallest odd M with M >= 2 log(1/delta) / log(1/rho).
inline int m_for_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorCode::kDomain, "delta must lie in (0, 1)");
  const double need = 2.0 * std::log(1.0 / delta) / std::log(1.0 / kMedianRho);
  auto M = static_cast<int>(std::ceil(need));
  if (M < 1) M = 1;
  if (M % 2 == 0) ++M;
  return M;
}

struct MedianPlan {
  int M;
  double delta;
  double rho;
  double epsilon_T;
};

inline MedianPlan make_median_plan(double delta, int T) {
  return {m_for_delta(delta), delta, kMedianRho, success_half_width(T)};
}

/// Rows `l,prob,estimate`.
inline void write_pmf_csv(std::ostream& os, const QaePmf& pmf) {
  os << "l,prob,estimate\n";
  for (std::size_t l = 0; l < pmf.probs.size(); ++l) {
    os << l << ',' << format_double(pmf.probs[l]) << ',' << format_double(estimate_from_outcome(l, pmf.T)) << '\n';
  }
}

}  // namespace qboot

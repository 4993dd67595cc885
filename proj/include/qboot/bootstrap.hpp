#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qboot/errors.hpp"
#include "qboot/rng.hpp"
#include "qboot/sample.hpp"

namespace qboot {

/// Resample index vector; entries are 0-based positions into the sample.
using IndexVector = std::vector<std::size_t>;

struct CdfGrid {
  std::vector<double> thresholds;
  std::vector<double> probabilities;
};

struct Atom {
  double value;
  double weight;
};

struct EnumerationOptions {
  std::uint64_t cap = 100'000'000;
};

/// Exact enumeration result: accepted index vectors out of n^r.
struct BootstrapCount {
  std::uint64_t accepted = 0;
  std::uint64_t total = 0;

  double probability() const { return static_cast<double>(accepted) / static_cast<double>(total); }
};

/// g(z, x) = 1{f(x) <= z}; ties count as accepted.
inline bool evaluate_indicator(const StatisticSpec& stat, std::span<const double> resample, double z) {
  return stat.evaluate(resample) <= z;
}

inline std::vector<double> materialize(const Sample& sample, const IndexVector& indices) {
  std::vector<double> out(indices.size());
  for (std::size_t j = 0; j < indices.size(); ++j) {
    if (indices[j] >= sample.size()) throw Error(ErrorCode::kIndex, "resample index out of range");
    out[j] = sample[indices[j]];
  }
  return out;
}

/// n^r, or nullopt when it exceeds `cap`.
inline std::optional<std::uint64_t> enumeration_size(std::size_t n, std::size_t r, std::uint64_t cap) {
  std::uint64_t total = 1;
  for (std::size_t j = 0; j < r; ++j) {
    if (total > cap / n) return std::nullopt;
    total *= n;
  }
  if (total > cap) return std::nullopt;
  return total;
}

/// Calls `visit(indices, resample)` for every index vector in [n]^r, in
/// lexicographic order with the last position varying fastest.
template <typename Visitor>
void for_each_resample(const Sample& sample, std::size_t resample_size, const EnumerationOptions& opts,
                       Visitor&& visit) {
  const std::size_t n = sample.size();
  if (resample_size == 0) throw Error(ErrorCode::kDomain, "resample size must be positive");
  if (!enumeration_size(n, resample_size, opts.cap)) {
    throw Error(ErrorCode::kEnumerationTooLarge, "n^r exceeds the enumeration cap");
  }
  IndexVector idx(resample_size, 0);
  std::vector<double> x(resample_size, sample[0]);
  while (true) {
    visit(static_cast<const IndexVector&>(idx), std::span<const double>(x));
    std::size_t j = resample_size;
    while (j > 0) {
      --j;
      if (++idx[j] < n) {
        x[j] = sample[idx[j]];
        break;
      }
      idx[j] = 0;
      x[j] = sample[0];
      if (j == 0) return;
    }
  }
}

inline BootstrapCount ideal_bootstrap_count(const Sample& sample, const StatisticSpec& stat, double z,
                                            std::size_t resample_size, const EnumerationOptions& opts = {}) {
  BootstrapCount count;
  for_each_resample(sample, resample_size, opts, [&](const IndexVector&, std::span<const double> x) {
    ++count.total;
    if (evaluate_indicator(stat, x, z)) ++count.accepted;
  });
  return count;
}

/// Ideal bootstrap CDF H_BOOT(z) by full enumeration of [n]^r.
inline double ideal_bootstrap_cdf(const Sample& sample, const StatisticSpec& stat, double z,
                                  std::size_t resample_size, const EnumerationOptions& opts = {}) {
  return ideal_bootstrap_count(sample, stat, z, resample_size, opts).probability();
}

/// Enumerates once and evaluates every threshold. Thresholds must be strictly increasing.
inline CdfGrid ideal_bootstrap_cdf_grid(const Sample& sample, const StatisticSpec& stat,
                                        std::span<const double> thresholds, std::size_t resample_size,
                                        const EnumerationOptions& opts = {}) {
  for (std::size_t d = 1; d < thresholds.size(); ++d) {
    if (!(thresholds[d] > thresholds[d - 1])) {
      throw Error(ErrorCode::kDomain, "thresholds must be strictly increasing");
    }
  }
  std::vector<std::uint64_t> accepted(thresholds.size(), 0);
  std::uint64_t total = 0;
  for_each_resample(sample, resample_size, opts, [&](const IndexVector&, std::span<const double> x) {
    ++total;
    const double f = stat.evaluate(x);
    auto first = std::lower_bound(thresholds.begin(), thresholds.end(), f);
    for (auto it = first; it != thresholds.end(); ++it) ++accepted[static_cast<std::size_t>(it - thresholds.begin())];
  });
  CdfGrid grid{std::vector<double>(thresholds.begin(), thresholds.end()), {}};
  grid.probabilities.reserve(thresholds.size());
  for (std::uint64_t a : accepted) grid.probabilities.push_back(static_cast<double>(a) / static_cast<double>(total));
  return grid;
}

inline IndexVector draw_index_vector(std::size_t n, std::size_t resample_size, RandomStream& rng) {
  IndexVector idx(resample_size);
  for (auto& i : idx) i = static_cast<std::size_t>(rng.uniform_index(n));
  return idx;
}

/// Monte Carlo bootstrap H_BOOT^(B)(z) from B uniform resamples with replacement.
inline double cboot_estimate(const Sample& sample, const StatisticSpec& stat, double z, std::uint64_t B,
                             RandomStream& rng, std::size_t resample_size) {
  if (B == 0) throw Error(ErrorCode::kDomain, "B must be at least 1");
  if (resample_size == 0) throw Error(ErrorCode::kDomain, "resample size must be positive");
  std::vector<double> x(resample_size);
  std::uint64_t hits = 0;
  for (std::uint64_t b = 0; b < B; ++b) {
    for (auto& v : x) v = sample[static_cast<std::size_t>(rng.uniform_index(sample.size()))];
    if (evaluate_indicator(stat, x, z)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(B);
}

inline std::vector<Atom> empirical_measure(const Sample& sample) {
  const double w = 1.0 / static_cast<double>(sample.size());
  std::vector<Atom> atoms;
  atoms.reserve(sample.size());
  for (double v : sample.values()) atoms.push_back({v, w});
  return atoms;
}

/// sup-distance between two CDFs tabulated on the same thresholds.
inline double kolmogorov_distance(const CdfGrid& F, const CdfGrid& G) {
  if (F.thresholds != G.thresholds || F.probabilities.size() != F.thresholds.size() ||
      G.probabilities.size() != G.thresholds.size()) {
    throw Error(ErrorCode::kGridMismatch, "CDF grids do not share thresholds");
  }
  double d = 0.0;
  for (std::size_t k = 0; k < F.probabilities.size(); ++k) {
    d = std::max(d, std::fabs(F.probabilities[k] - G.probabilities[k]));
  }
  return d;
}

}  // namespace qboot

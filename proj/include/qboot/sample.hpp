#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qboot/errors.hpp"

namespace qboot {

/// Observed data X_1..X_n. Duplicates are kept positionally: index i always
/// refers to observation i, never to a distinct value.
class Sample {
 public:
  explicit Sample(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw Error(ErrorCode::kDomain, "sample must contain at least one value");
  }

  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

 private:
  std::vector<double> values_;
};

/// Integer score-sum form of a statistic: f(x) <= z  <=>  sum_j score(x_j) <= bound(z, r).
/// `score` returns nullopt for values that have no integer score, in which
/// case no circuit can be built for that sample.
struct CircuitForm {
  std::function<std::optional<std::int64_t>(double value)> score;
  std::function<std::int64_t(double z, std::size_t resample_size)> bound;
};

struct StatisticSpec {
  std::string name;
  std::function<double(std::span<const double>)> evaluate;
  std::optional<CircuitForm> circuit_form;
};

namespace detail {

inline std::optional<std::int64_t> integral_score(double v) {
  if (!std::isfinite(v) || v != std::floor(v) || std::fabs(v) > 1e15) return std::nullopt;
  return static_cast<std::int64_t>(v);
}

inline std::int64_t floor_to_int(double x) {
  if (x >= 9.0e18) return INT64_MAX / 4;
  if (x <= -9.0e18) return INT64_MIN / 4;
  return static_cast<std::int64_t>(std::floor(x));
}

}  // namespace detail

inline StatisticSpec mean_statistic() {
  return StatisticSpec{
      "mean",
      [](std::span<const double> x) {
        return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
      },
      CircuitForm{detail::integral_score,
                  [](double z, std::size_t r) { return detail::floor_to_int(static_cast<double>(r) * z); }},
  };
}

inline StatisticSpec sum_statistic() {
  return StatisticSpec{
      "sum",
      [](std::span<const double> x) { return std::accumulate(x.begin(), x.end(), 0.0); },
      CircuitForm{detail::integral_score, [](double z, std::size_t) { return detail::floor_to_int(z); }},
  };
}

/// Number of resampled values strictly above `cut`.
inline StatisticSpec count_above_statistic(double cut) {
  return StatisticSpec{
      "count_above",
      [cut](std::span<const double> x) {
        double c = 0;
        for (double v : x) c += v > cut ? 1.0 : 0.0;
        return c;
      },
      CircuitForm{[cut](double v) -> std::optional<std::int64_t> { return v > cut ? 1 : 0; },
                  [](double z, std::size_t) { return detail::floor_to_int(z); }},
  };
}

/// Lower median. No score-sum form.
inline StatisticSpec median_statistic() {
  return StatisticSpec{
      "median",
      [](std::span<const double> x) {
        std::vector<double> v(x.begin(), x.end());
        auto mid = v.begin() + static_cast<std::ptrdiff_t>((v.size() - 1) / 2);
        std::nth_element(v.begin(), mid, v.end());
        return *mid;
      },
      std::nullopt,
  };
}

/// Looks up a statistic by the name used in config files and on the command line.
inline StatisticSpec statistic_by_name(const std::string& name) {
  if (name == "mean") return mean_statistic();
  if (name == "sum") return sum_statistic();
  if (name == "median") return median_statistic();
  throw Error(ErrorCode::kConfig, "unknown statistic '" + name + "' (expected mean, sum or median)");
}

}  // namespace qboot

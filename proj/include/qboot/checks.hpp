#pragma once

// Fast runtime invariant suite behind `qboot check`.

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "qboot/bootstrap.hpp"
#include "qboot/circuit.hpp"
#include "qboot/experiment.hpp"
#include "qboot/numeric.hpp"
#include "qboot/qae.hpp"

namespace qboot {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

namespace detail {

inline std::vector<double> h_grid(int points) {
  std::vector<double> h(points);
  for (int k = 0; k < points; ++k) h[k] = (k + 0.5) / points;
  return h;
}

inline std::string fmt(double x) { return format_double(x); }

}  // namespace detail

inline CheckResult check_pmf_normalized() {
  double worst = 0.0;
  bool nonneg = true, symmetric = true;
  for (int T = 1; T <= 12; ++T) {
    for (double h : detail::h_grid(50)) {
      const auto p = qae_pmf(h, T).probs;
      worst = std::max(worst, std::fabs(compensated_sum(p) - 1.0));
      const std::size_t N = p.size();
      for (std::size_t l = 0; l < N; ++l) {
        nonneg = nonneg && p[l] >= 0.0;
        if (l > 0) symmetric = symmetric && p[l] == p[N - l];
      }
    }
  }
  return {"pmf-normalized", nonneg && symmetric && worst <= 1e-12,
          "max |sum-1| = " + detail::fmt(worst) + (symmetric ? "" : ", asymmetric") + (nonneg ? "" : ", negative")};
}

inline CheckResult check_closed_forms() {
  double worst = 0.0;
  for (int T = 1; T <= 10; ++T) {
    for (double h : detail::h_grid(40)) {
      const auto m = pmf_moments(qae_pmf(h, T));
      worst = std::max(worst, std::fabs(bias_closed_form(h, T) - m.bias));
      worst = std::max(worst, std::fabs(mse_closed_form(h, T) - m.mse));
    }
  }
  return {"bias-mse-closed-form", worst <= 1e-9, "max deviation = " + detail::fmt(worst)};
}

inline CheckResult check_single_run_floor() {
  double lowest = 1.0;
  for (int T = 1; T <= 12; ++T)
    for (double h : detail::h_grid(60)) lowest = std::min(lowest, single_run_success(h, T));
  return {"single-run-success", lowest >= kSingleRunFloor - 1e-12, "min = " + detail::fmt(lowest)};
}

inline CheckResult check_median_bound() {
  bool ok = true;
  for (int T : {4, 6, 8})
    for (int M : {1, 3, 5, 7})
      for (double h : detail::h_grid(40)) ok = ok && median_failure_exact(h, T, M) <= median_failure_bound(M) + 1e-12;
  return {"median-of-M-bound", ok && m_for_delta(0.05) <= 13, "m_for_delta(0.05) = " + std::to_string(m_for_delta(0.05))};
}

inline CheckResult check_label_marginal() {
  const Sample x({0, 1, 2, 3});
  const auto stat = mean_statistic();
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const double z = -0.1 + 3.2 * k / 19.0;
    const auto plan = build_plan(x, stat, z, 0, 4);
    auto s = prepare_bootstrap_state(plan);
    apply_oracle(s, plan);
    const int q[] = {plan.label()};
    worst = std::max(worst, std::fabs(marginal_probabilities(s, q)[1] - ideal_bootstrap_cdf(x, stat, z, 4)));
  }
  return {"label-marginal", worst <= 1e-10, "max deviation = " + detail::fmt(worst)};
}

inline CheckResult check_circuit_pmf() {
  const Sample x({0, 1, 2, 3});
  double worst = 0.0;
  for (int T = 1; T <= 3; ++T) {
    const auto plan = build_plan(x, mean_statistic(), 1.25, T, 4);
    const auto got = run_qae_exact(plan);
    const auto want = qae_pmf(*plan.ideal_value, T).probs;
    for (std::size_t l = 0; l < got.size(); ++l) worst = std::max(worst, std::fabs(got[l] - want[l]));
  }
  return {"circuit-pmf", worst <= 1e-9, "max deviation = " + detail::fmt(worst)};
}

inline CheckResult check_summary_roundtrip() {
  ExperimentConfig c;
  c.T = {3, 4};
  c.M = {1, 3};
  c.replications = 100;
  const auto res = run_experiment_at(c, 1.25);
  std::stringstream ss;
  write_records_csv(ss, res.records);
  const auto back = read_records_csv(ss);
  return {"summary-reproducible", back == res.records && summarize(back) == res.summary,
          std::to_string(back.size()) + " records"};
}

inline std::vector<CheckResult> run_checks() {
  const std::vector<std::function<CheckResult()>> checks{check_pmf_normalized, check_closed_forms,
                                                         check_single_run_floor, check_median_bound,
                                                         check_label_marginal, check_circuit_pmf,
                                                         check_summary_roundtrip};
  std::vector<CheckResult> out;
  for (const auto& c : checks) {
    try {
      out.push_back(c());
    } catch (const std::exception& e) {
      out.push_back({"exception", false, e.what()});
    }
  }
  return out;
}

}  // namespace qboot

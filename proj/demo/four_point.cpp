// Walks through the n = 4 example: enumeration, the circuit, the exact PMF, and
// a short cost-matched comparison.

#include <cstdio>

#include "qboot/bootstrap.hpp"
#include "qboot/circuit.hpp"
#include "qboot/experiment.hpp"
#include "qboot/qae.hpp"

int main() {
  using namespace qboot;
  const Sample x({0, 1, 2, 3});
  const auto stat = mean_statistic();
  const double z = 1.25;

  const auto count = ideal_bootstrap_count(x, stat, z, x.size());
  std::printf("H_BOOT(%.2f) = %llu/%llu = %.7f\n", z, static_cast<unsigned long long>(count.accepted),
              static_cast<unsigned long long>(count.total), count.probability());

  const int T = 4;
  const auto plan = build_plan(x, stat, z, T, x.size());
  std::printf("circuit: %d qubits (", plan.layout.total());
  for (const auto& r : plan.layout.registers())
    if (!r.qubits.empty()) std::printf(" %s=%zu", r.name.c_str(), r.qubits.size());
  std::printf(" ), integer bound %lld\n", static_cast<long long>(plan.integer_bound));

  const auto run = run_qae_counted(plan);
  const auto pmf = qae_pmf(count.probability(), T);
  std::printf("\n  l   circuit      closed form  estimate\n");
  for (std::size_t l = 0; l < pmf.size(); ++l) {
    std::printf("%3zu   %.9f  %.9f  %.6f\n", l, run.probabilities[l], pmf.probs[l], estimate_from_outcome(l, T));
  }
  std::printf("Grover iterations %llu, oracle calls %llu\n",
              static_cast<unsigned long long>(run.counts.grover_iterations),
              static_cast<unsigned long long>(run.counts.oracle_calls));
  std::printf("bias %.3e, sqrt(MSE) %.3e, single-run success %.4f\n", bias_closed_form(pmf.h, T),
              std::sqrt(mse_closed_form(pmf.h, T)), single_run_success(pmf.h, T));

  ExperimentConfig c;
  c.T = {4, 6, 8, 10};
  c.M = {1, 5};
  c.replications = 2000;
  const auto res = run_experiment_at(c, z);
  std::printf("\nmethod  T  M  MAE        sqrt(MSE)  median\n");
  for (const auto& r : res.summary) {
    std::printf("%-6s %2d  %d  %.3e  %.3e  %.3e\n", r.method.c_str(), r.T, r.M, r.mae, r.rmse, r.median_abs_error);
  }
  return 0;
}

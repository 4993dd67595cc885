#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "qboot/bootstrap.hpp"
#include "qboot/circuit.hpp"
#include "qboot/qae.hpp"

using namespace qboot;

namespace {

const Sample kFourPoint{std::vector<double>{0, 1, 2, 3}};
constexpr double kFourPointH = 0.4140625;

double label_one_probability(const StateVector& s, int label) {
  const int q[] = {label};
  return marginal_probabilities(s, q)[1];
}

std::vector<Sample> small_samples() {
  return {Sample{{2}}, Sample{{0, 1}}, Sample{{1, 1}}, Sample{{0, 1, 2}}, Sample{{3, 0, 2}},
          Sample{{0, 1, 2, 3}}, Sample{{3, 0, 0, 1}}, Sample{{2, 2, 2, 2}}};
}

}  // namespace

TEST(Plan, QubitCounts) {
  const auto stat = mean_statistic();
  EXPECT_EQ(build_plan(kFourPoint, stat, 1.25, 10, 4).layout.total(), 23);
  EXPECT_EQ(build_plan(kFourPoint, stat, 1.25, 6, 4).layout.total(), 19);
  EXPECT_EQ(build_plan(Sample{{0, 1}}, stat, 0.5, 3, 2).layout.total(), 8);
  for (int T = 0; T <= 10; ++T) EXPECT_EQ(build_plan(kFourPoint, stat, 1.25, T, 4).layout.total(), 13 + T);
}

TEST(Plan, IdealValueAndErrors) {
  const auto stat = mean_statistic();
  const auto plan = build_plan(kFourPoint, stat, 1.25, 4, 4);
  ASSERT_TRUE(plan.threshold_verified());
  EXPECT_EQ(*plan.ideal_value, kFourPointH);
  EXPECT_THROW(build_plan(kFourPoint, median_statistic(), 1.25, 4, 4), Error);
  try {
    build_plan(kFourPoint, stat, 1.25, 14, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kCapExceeded);
  }
}

TEST(Prepare, UniformOverResamples) {
  const auto plan = build_plan(kFourPoint, mean_statistic(), 1.25, 0, 4);
  const auto s = prepare_bootstrap_state(plan);
  const auto p = marginal_probabilities(s, plan.bootstrap().qubits);
  ASSERT_EQ(p.size(), 256u);
  for (double x : p) EXPECT_NEAR(x, 1.0 / 256, 1e-14);
  for (std::size_t i = 0; i < 256; ++i) EXPECT_NEAR(std::abs(s.amplitudes()[i]), 1.0 / 16, 1e-14);
}

TEST(Prepare, SingleObservationStaysInZero) {
  const auto plan = build_plan(Sample{{2}}, mean_statistic(), 1.0, 0, 1);
  const auto s = prepare_bootstrap_state(plan);
  EXPECT_EQ(s.amplitudes()[0], Complex(1.0));
}

TEST(Prepare, IndexMarginalsMatchEmpiricalMeasure) {
  for (const auto& x : small_samples()) {
    const auto plan = build_plan(x, mean_statistic(), 1.0, 0, x.size());
    const auto s = prepare_bootstrap_state(plan);
    for (std::size_t j = 0; j < x.size(); ++j) {
      const auto p = marginal_probabilities(s, plan.index_register(j));
      for (std::size_t i = 0; i < p.size(); ++i) EXPECT_NEAR(p[i], i < x.size() ? 1.0 / double(x.size()) : 0.0, 1e-14);
    }
  }
}

TEST(Oracle, LabelMarginalMatchesEnumeration) {
  for (const auto& x : small_samples()) {
    for (int k = 0; k < 20; ++k) {
      const double z = -0.1 + 3.2 * k / 19.0;
      const auto plan = build_plan(x, mean_statistic(), z, 0, x.size());
      auto s = prepare_bootstrap_state(plan);
      apply_oracle(s, plan);
      const double h = ideal_bootstrap_cdf(x, mean_statistic(), z, x.size());
      EXPECT_NEAR(label_one_probability(s, plan.label()), h, 1e-10) << "n=" << x.size() << " z=" << z;
      EXPECT_NEAR(*plan.ideal_value, h, 1e-15);
    }
  }
}

TEST(Oracle, ExtremeThresholds) {
  const auto stat = mean_statistic();
  auto below = build_plan(kFourPoint, stat, -0.5, 0, 4);
  auto s = prepare_bootstrap_state(below);
  apply_oracle(s, below);
  EXPECT_NEAR(label_one_probability(s, below.label()), 0.0, 1e-15);
  auto above = build_plan(kFourPoint, stat, 3.0, 0, 4);
  auto t = prepare_bootstrap_state(above);
  apply_oracle(t, above);
  EXPECT_NEAR(label_one_probability(t, above.label()), 1.0, 1e-14);
}

TEST(Oracle, AdjointRestoresPreparedState) {
  const auto plan = build_plan(Sample{{0, 1, 2}}, mean_statistic(), 1.2, 0, 3);
  auto s = prepare_bootstrap_state(plan);
  const std::vector<Complex> before(s.amplitudes().begin(), s.amplitudes().end());
  apply_oracle(s, plan);
  apply_oracle_adjoint(s, plan);
  for (std::size_t i = 0; i < before.size(); ++i) EXPECT_LE(std::abs(s.amplitudes()[i] - before[i]), 1e-14);
}

TEST(Oracle, RejectsDirtyWorkRegisters) {
  const auto plan = build_plan(kFourPoint, mean_statistic(), 1.25, 0, 4);
  auto s = prepare_bootstrap_state(plan);
  apply_oracle(s, plan);
  try {
    apply_oracle(s, plan);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kRegisterNotClean);
  }
}

TEST(Grover, RotationOnFourPointSample) {
  const auto plan = build_plan(kFourPoint, mean_statistic(), 1.25, 0, 4);
  const double tau = tau_from_h(kFourPointH);
  StateVector s(plan.layout);
  for (const auto& g : state_preparation_gates(plan)) s.apply(g);
  for (int k = 0; k <= 8; ++k) {
    const double amp = std::sqrt(label_one_probability(s, plan.label()));
    EXPECT_NEAR(amp, std::fabs(std::sin((2 * k + 1) * tau)), 1e-9) << "k=" << k;
    grover_iterate(s, plan);
  }
}

TEST(Grover, DenseOperatorEigenvalues) {
  // {0,1}, mean <= 0: only the all-zero resample is accepted, h = 1/4.
  const auto plan = build_plan(Sample{{0, 1}}, mean_statistic(), 0.0, 0, 2);
  ASSERT_EQ(*plan.ideal_value, 0.25);
  const int n = plan.layout.total();
  ASSERT_LE(n, 10);
  const std::size_t d = std::size_t{1} << n;
  Eigen::MatrixXcd q(d, d);
  const auto gates = grover_gates(plan);
  for (std::size_t col = 0; col < d; ++col) {
    StateVector s(plan.layout);
    s.set_basis_state(col);
    for (const auto& g : gates) s.apply(g);
    for (std::size_t row = 0; row < d; ++row) q(row, col) = s.amplitudes()[row];
  }
  EXPECT_LE((q.adjoint() * q - Eigen::MatrixXcd::Identity(d, d)).norm(), 1e-10);
  const Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(q);
  const double tau = tau_from_h(0.25);
  for (const double sign : {1.0, -1.0}) {
    const Complex target = std::polar(1.0, sign * 2 * tau);
    double best = 1e9;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) best = std::min(best, std::abs(es.eigenvalues()[i] - target));
    EXPECT_LE(best, 1e-9) << "sign " << sign;
  }
}

TEST(Qae, CircuitMatchesClosedFormPmf) {
  struct Case {
    Sample x;
    double z;
  };
  const std::vector<Case> cases{{Sample{{0, 1}}, 0.0}, {Sample{{0, 1}}, 0.5}, {Sample{{0, 1}}, -1.0},
                                {Sample{{0, 1}}, 2.0}, {Sample{{0, 1, 2}}, 0.9}, {Sample{{3, 0, 2}}, 1.5}};
  for (const auto& c : cases) {
    for (int T = 1; T <= 5; ++T) {
      const auto plan = build_plan(c.x, mean_statistic(), c.z, T, c.x.size());
      const auto got = run_qae_exact(plan);
      const auto want = qae_pmf(*plan.ideal_value, T).probs;
      ASSERT_EQ(got.size(), want.size());
      for (std::size_t l = 0; l < got.size(); ++l)
        EXPECT_NEAR(got[l], want[l], 1e-9) << "h=" << *plan.ideal_value << " T=" << T << " l=" << l;
    }
  }
}

TEST(Qae, FourPointSampleSmallT) {
  for (int T = 2; T <= 4; ++T) {
    const auto plan = build_plan(kFourPoint, mean_statistic(), 1.25, T, 4);
    const auto got = run_qae_exact(plan);
    const auto want = qae_pmf(kFourPointH, T).probs;
    for (std::size_t l = 0; l < got.size(); ++l) EXPECT_NEAR(got[l], want[l], 1e-9);
  }
}

TEST(Qae, NeedsPrecision) {
  const auto plan = build_plan(kFourPoint, mean_statistic(), 1.25, 0, 4);
  EXPECT_THROW(run_qae_exact(plan), Error);
}

TEST(Work, CountedMatchesReport) {
  for (int T = 1; T <= 4; ++T) {
    const auto plan = build_plan(Sample{{0, 1}}, mean_statistic(), 0.5, T, 2);
    EXPECT_EQ(run_qae_counted(plan).counts, work_report(plan, 1.0, 1.0).counts);
  }
}

TEST(Work, ReportExamples) {
  const auto stat = mean_statistic();
  const auto w3 = work_report(build_plan(kFourPoint, stat, 1.25, 3, 4), 10.0, 1.0);
  EXPECT_EQ(w3.counts.grover_iterations, 7u);
  EXPECT_EQ(w3.counts.oracle_calls, 8u);
  EXPECT_EQ(w3.counts.oracle_adjoint_calls, 7u);
  EXPECT_EQ(w3.qubits, 16);
  const auto w0 = work_report(build_plan(kFourPoint, stat, 1.25, 0, 4), 10.0, 1.0);
  EXPECT_EQ(w0.counts.grover_iterations, 0u);
  EXPECT_EQ(w0.counts.oracle_calls, 1u);
  const auto w6 = work_report(build_plan(kFourPoint, stat, 1.25, 6, 4), 10.0, 1.0);
  EXPECT_EQ(w6.matched_B, 64u);
  EXPECT_EQ(w6.counts.grover_iterations, 63u);
  const auto w2 = work_report(build_plan(kFourPoint, stat, 1.25, 2, 4), 10.0, 1.0);
  EXPECT_TRUE(w2.is_balanced);
  EXPECT_FALSE(w3.is_balanced);
  EXPECT_EQ(balanced_T(16, true), 4);
  EXPECT_EQ(balanced_T(16, false), 2);
}

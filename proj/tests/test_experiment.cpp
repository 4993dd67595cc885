#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "qboot/experiment.hpp"

using namespace qboot;

namespace {

ReplicationRecord rec(double err, std::uint64_t rep = 0) { return {"QBOOT", 4, 16, 1, rep, err, err, 0}; }

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.T = {3, 4};
  c.M = {1, 3};
  c.replications = 50;
  c.seed = 7;
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("qboot_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST(Summarize, SingleRecord) {
  const auto s = summarize({rec(0.3)});
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].mae, 0.3);
  EXPECT_EQ(s[0].rmse, 0.3);
  EXPECT_EQ(s[0].median_abs_error, 0.3);
  EXPECT_EQ(s[0].n, 1u);
}

TEST(Summarize, TwoRecordsLowerMedian) {
  const auto s = summarize({rec(0.0, 0), rec(0.1, 1)});
  EXPECT_DOUBLE_EQ(s[0].mae, 0.05);
  EXPECT_NEAR(s[0].rmse, 0.1 / std::numbers::sqrt2, 1e-15);
  EXPECT_EQ(s[0].median_abs_error, 0.0);
}

TEST(Summarize, GroupsAndPermutationInvariance) {
  std::vector<ReplicationRecord> rs;
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (int T : {2, 3})
    for (std::uint64_t rep = 0; rep < 31; ++rep) {
      rs.push_back({"QBOOT", T, 4, 1, rep, 0, u(gen), 0});
      rs.push_back({"CBOOT", T, 4, 1, rep, 0, u(gen), 0});
    }
  const auto base = summarize(rs);
  EXPECT_EQ(base.size(), 4u);
  for (int trial = 0; trial < 5; ++trial) {
    std::shuffle(rs.begin(), rs.end(), gen);
    EXPECT_EQ(summarize(rs), base);
  }
}

TEST(Summarize, Empty) {
  try {
    summarize({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyInput);
  }
}

TEST(Config, ParseAndValidate) {
  const auto c = parse_config(nlohmann::json::parse(
      R"({"sample":[0,1,2,3],"statistic":"mean","z":[1.25],"T":[4,5],"M":[1,3],"replications":10,
          "seed":3,"path":"circuit","B_rule":"4^T","max_qubits":20,"output_dir":"x"})"));
  EXPECT_EQ(c.path, ExperimentPath::kCircuit);
  EXPECT_EQ(c.B_rule.resamples(5), 1024u);
  EXPECT_EQ(c.r(), 4u);
  EXPECT_EQ(parse_config(nlohmann::json::parse(R"({"B_rule":100})")).B_rule.resamples(9), 100u);
  for (const char* bad : {R"({"M":[2]})", R"({"replications":0})", R"({"sample":[]})", R"({"bogus":1})",
                          R"({"path":"hardware"})", R"({"B_rule":"0"})", R"({"B_rule":"lots"})", R"({"T":[0]})",
                          R"({"statistic":"mode"})", R"({"z":"one"})", R"([1,2])"}) {
    try {
      parse_config(nlohmann::json::parse(bad));
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kConfig) << bad;
    }
  }
}

TEST(Config, JsonRoundTrip) {
  auto c = small_config();
  c.B_rule = BRule::parse("12");
  c.path = ExperimentPath::kCircuit;
  EXPECT_EQ(to_json(parse_config(to_json(c))), to_json(c));
}

TEST(Experiment, DeterministicAndCostMatched) {
  const auto c = small_config();
  const auto a = run_experiment_at(c, 1.25);
  const auto b = run_experiment_at(c, 1.25);
  EXPECT_EQ(a.records, b.records);
  EXPECT_EQ(a.ideal, 0.4140625);
  EXPECT_EQ(a.records.size(), 2u * (2 * 50 + 50));
  for (const auto& r : a.records) {
    EXPECT_EQ(r.B, std::uint64_t{1} << r.T);
    EXPECT_EQ(r.abs_error, std::fabs(r.estimate - a.ideal));
    if (r.method == "CBOOT") EXPECT_EQ(r.M, 1);
    EXPECT_EQ(r.seed, replication_seed(c.seed, r.method == "QBOOT" ? kMethodQboot : kMethodCboot, r.T, r.M, r.rep));
  }
  EXPECT_TRUE(std::is_sorted(a.records.begin(), a.records.end(), record_less));
  auto other = c;
  other.seed = 8;
  EXPECT_NE(run_experiment_at(other, 1.25).records, a.records);
}

TEST(Experiment, ReplicationsIndependentOfCount) {
  auto c = small_config();
  c.replications = 1;
  const auto one = run_experiment_at(c, 1.25);
  c.replications = 5;
  const auto five = run_experiment_at(c, 1.25);
  for (const auto& r : one.records) EXPECT_NE(std::find(five.records.begin(), five.records.end(), r), five.records.end());
}

TEST(Experiment, CircuitPathMatchesAnalyticPath) {
  auto c = small_config();
  c.T = {2, 3};
  const auto analytic = run_experiment_at(c, 1.25);
  c.path = ExperimentPath::kCircuit;
  const auto circuit = run_experiment_at(c, 1.25);
  for (std::size_t k = 0; k < analytic.pmfs.size(); ++k)
    for (std::size_t l = 0; l < analytic.pmfs[k].probs.size(); ++l)
      EXPECT_NEAR(analytic.pmfs[k].probs[l], circuit.pmfs[k].probs[l], 1e-9);
  auto capped = c;
  capped.max_qubits = 14;
  try {
    run_experiment_at(capped, 1.25);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kCapExceeded);
  }
}

TEST(Experiment, MedianReducesOutliers) {
  ExperimentConfig c;
  c.T = {6};
  c.M = {1, 3, 5, 7};
  c.replications = 5000;
  const auto res = run_experiment_at(c, 1.25);
  const double window = std::numbers::pi / 64;
  double prev = 2.0;
  for (int M : c.M) {
    std::size_t out = 0, n = 0;
    for (const auto& r : res.records)
      if (r.method == "QBOOT" && r.M == M) {
        ++n;
        out += r.abs_error > window;
      }
    const double freq = double(out) / double(n);
    EXPECT_LE(freq, prev) << "M=" << M;
    EXPECT_LE(freq, median_failure_bound(M) + 0.02) << "M=" << M;
    prev = freq;
  }
}

TEST(Experiment, SummaryReproducibleFromCsv) {
  const auto res = run_experiment_at(small_config(), 1.25);
  std::stringstream ss;
  write_records_csv(ss, res.records);
  const auto back = read_records_csv(ss);
  EXPECT_EQ(back, res.records);
  EXPECT_EQ(summarize(back), res.summary);
}

TEST(Experiment, OutputsByteIdentical) {
  auto c = small_config();
  c.z = {1.25, 2.0};
  c.output_dir = scratch("a").string();
  write_experiment(c, run_experiment(c));
  auto d = c;
  d.output_dir = scratch("b").string();
  write_experiment(d, run_experiment(d));
  for (const char* sub : {"z0", "z1"})
    for (const char* f : {"records.csv", "summary.csv", "pmf_T3.csv", "pmf_T4.csv"}) {
      const auto x = slurp(std::filesystem::path(c.output_dir) / sub / f);
      EXPECT_FALSE(x.empty()) << f;
      EXPECT_EQ(x, slurp(std::filesystem::path(d.output_dir) / sub / f)) << f;
    }
  const auto j = nlohmann::json::parse(slurp(std::filesystem::path(c.output_dir) / "z0" / "resources.json"));
  EXPECT_EQ(j["ground_truth"]["accepted"], 106);
  EXPECT_EQ(j["ground_truth"]["total"], 256);
  std::filesystem::remove_all(c.output_dir);
  std::filesystem::remove_all(d.output_dir);
}

TEST(Resources, Examples) {
  ExperimentConfig c;
  c.T = {6, 10};
  const auto r = resource_report(c);
  EXPECT_EQ(*r.rows[1].qubits, 23);
  EXPECT_EQ(r.rows[0].B, 64u);
  EXPECT_EQ(r.rows[0].work.matched_B, 64u);
  EXPECT_EQ(r.rows[1].work.counts.grover_iterations, 1023u);
  EXPECT_TRUE(r.rows[1].within_cap);
  c.T = {14};
  EXPECT_FALSE(resource_report(c).rows[0].within_cap);
  c.sample.assign(16, 0.0);
  for (int i = 0; i < 16; ++i) c.sample[i] = i;
  c.resample_size = 1;
  const auto r16 = resource_report(c);
  EXPECT_EQ(r16.balanced_T_smooth, 4);
  EXPECT_EQ(r16.balanced_T_nonsmooth, 2);
  c.statistic = "median";
  EXPECT_FALSE(resource_report(c).rows[0].qubits.has_value());
}

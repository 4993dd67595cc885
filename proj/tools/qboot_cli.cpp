// qboot: command-line driver for the QBOOT simulation suite.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "qboot/bootstrap.hpp"
#include "qboot/checks.hpp"
#include "qboot/circuit.hpp"
#include "qboot/experiment.hpp"
#include "qboot/numeric.hpp"
#include "qboot/qae.hpp"

namespace {

using qboot::Error;
using qboot::ErrorCode;
using qboot::format_double;

constexpr int kExitConfig = 2;
constexpr int kExitCap = 3;

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "csv";
};

struct SampleArgs {
  std::vector<double> sample;
  std::string statistic;
  std::vector<double> z;
  std::size_t r = 0;
};

void add_sample_args(CLI::App* sub, SampleArgs& a) {
  sub->add_option("--sample", a.sample, "observations, comma separated")->delimiter(',');
  sub->add_option("--statistic", a.statistic, "mean | sum | median");
  sub->add_option("--z", a.z, "thresholds, comma separated")->delimiter(',');
  sub->add_option("--r", a.r, "resample size (default n)");
}

qboot::ExperimentConfig base_config(const Globals& g) {
  qboot::ExperimentConfig c = g.config.empty() ? qboot::ExperimentConfig{} : qboot::load_config(g.config);
  if (g.seed) c.seed = *g.seed;
  if (!g.out.empty()) c.output_dir = g.out;
  return c;
}

qboot::ExperimentConfig with_sample_args(qboot::ExperimentConfig c, const SampleArgs& a) {
  if (!a.sample.empty()) c.sample = a.sample;
  if (!a.statistic.empty()) c.statistic = a.statistic;
  if (!a.z.empty()) c.z = a.z;
  if (a.r > 0) c.resample_size = a.r;
  qboot::validate(c);
  return c;
}

bool json_out(const Globals& g) { return g.format == "json"; }

void write_file(const std::filesystem::path& p, const std::string& text) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error(ErrorCode::kConfig, "cannot write " + p.string());
  f << text;
}

int cmd_ideal(const Globals& g, const SampleArgs& a) {
  const auto c = with_sample_args(base_config(g), a);
  const qboot::Sample x(c.sample);
  const auto stat = qboot::statistic_by_name(c.statistic);
  qboot::EnumerationOptions opts;
  opts.cap = c.enumeration_cap;
  nlohmann::json j = nlohmann::json::array();
  if (!json_out(g)) std::cout << "z,ideal,accepted,total\n";
  for (double z : c.z) {
    const auto count = qboot::ideal_bootstrap_count(x, stat, z, c.r(), opts);
    if (json_out(g)) {
      j.push_back({{"z", z}, {"ideal", count.probability()}, {"accepted", count.accepted}, {"total", count.total}});
    } else {
      std::cout << format_double(z) << ',' << format_double(count.probability()) << ',' << count.accepted << ','
                << count.total << '\n';
    }
  }
  if (json_out(g)) std::cout << j.dump(2) << '\n';
  return 0;
}

int cmd_cboot(const Globals& g, const SampleArgs& a, std::uint64_t B, std::uint64_t reps) {
  const auto c = with_sample_args(base_config(g), a);
  if (B == 0) throw Error(ErrorCode::kConfig, "--B must be at least 1");
  const qboot::Sample x(c.sample);
  const auto stat = qboot::statistic_by_name(c.statistic);
  nlohmann::json j = nlohmann::json::array();
  if (!json_out(g)) std::cout << "z,B,rep,estimate,seed\n";
  for (double z : c.z) {
    for (std::uint64_t rep = 0; rep < reps; ++rep) {
      const auto seed = qboot::derive_seed({c.seed, qboot::kMethodCboot, B, rep});
      qboot::RandomStream rng(seed);
      const double e = qboot::cboot_estimate(x, stat, z, B, rng, c.r());
      if (json_out(g)) {
        j.push_back({{"z", z}, {"B", B}, {"rep", rep}, {"estimate", e}, {"seed", seed}});
      } else {
        std::cout << format_double(z) << ',' << B << ',' << rep << ',' << format_double(e) << ',' << seed << '\n';
      }
    }
  }
  if (json_out(g)) std::cout << j.dump(2) << '\n';
  return 0;
}

void emit_pmf(const Globals& g, const qboot::QaePmf& pmf) {
  std::ostringstream csv;
  qboot::write_pmf_csv(csv, pmf);
  if (!g.out.empty()) write_file(std::filesystem::path(g.out) / ("pmf_T" + std::to_string(pmf.T) + ".csv"), csv.str());
  if (!json_out(g)) {
    std::cout << csv.str();
    return;
  }
  nlohmann::json j;
  j["T"] = pmf.T;
  j["h"] = pmf.h;
  j["prob"] = pmf.probs;
  std::vector<double> est(pmf.probs.size());
  for (std::size_t l = 0; l < est.size(); ++l) est[l] = qboot::estimate_from_outcome(l, pmf.T);
  j["estimate"] = est;
  std::cout << j.dump(2) << '\n';
}

int cmd_qae_pmf(const Globals& g, double h, int T) {
  emit_pmf(g, qboot::qae_pmf(h, T));
  return 0;
}

int cmd_qboot_circuit(const Globals& g, const SampleArgs& a, int T) {
  auto c = with_sample_args(base_config(g), a);
  if (c.z.size() != 1) throw Error(ErrorCode::kConfig, "qboot-circuit takes exactly one z");
  qboot::PlanOptions opts;
  opts.engine.max_qubits = c.max_qubits;
  opts.enumeration.cap = c.enumeration_cap;
  const auto plan = qboot::build_plan(qboot::Sample(c.sample), qboot::statistic_by_name(c.statistic), c.z.front(), T,
                                      c.r(), opts);
  emit_pmf(g, qboot::qboot_outcome_pmf(plan, qboot::QbootPath::kCircuit));
  return 0;
}

int cmd_experiment(const Globals& g) {
  if (g.config.empty()) throw Error(ErrorCode::kConfig, "experiment needs --config <file>");
  const auto c = base_config(g);
  const auto results = qboot::run_experiment(c);
  const auto dirs = qboot::write_experiment(c, results);
  if (json_out(g)) {
    nlohmann::json j = nlohmann::json::array();
    for (std::size_t k = 0; k < results.size(); ++k) {
      j.push_back({{"z", results[k].z},
                   {"ideal", results[k].ideal},
                   {"dir", dirs[k].string()},
                   {"summary", qboot::to_json(results[k].summary)}});
    }
    std::cout << j.dump(2) << '\n';
  } else {
    for (std::size_t k = 0; k < results.size(); ++k) {
      if (results.size() > 1) std::cout << "# z=" << format_double(results[k].z) << '\n';
      qboot::write_summary_csv(std::cout, results[k].summary);
    }
  }
  return 0;
}

int cmd_resources(const Globals& g, const SampleArgs& a, const std::vector<int>& Ts) {
  auto c = with_sample_args(base_config(g), a);
  if (!Ts.empty()) c.T = Ts;
  qboot::validate(c);
  const auto report = qboot::resource_report(c);
  const auto j = qboot::to_json(report);
  if (!g.out.empty()) write_file(std::filesystem::path(g.out) / "resources.json", j.dump(2) + "\n");
  if (json_out(g)) {
    std::cout << j.dump(2) << '\n';
    return 0;
  }
  std::cout << "T,qubits,within_cap,B,grover_iterations,oracle_calls,oracle_adjoint_calls,qboot_work,"
               "cboot_work_matched_cost,cboot_work_matched_error\n";
  for (const auto& r : report.rows) {
    std::cout << r.T << ',' << (r.qubits ? std::to_string(*r.qubits) : "") << ',' << (r.within_cap ? 1 : 0) << ','
              << r.B << ',' << r.work.counts.grover_iterations << ',' << r.work.counts.oracle_calls << ','
              << r.work.counts.oracle_adjoint_calls << ',' << format_double(r.work.qboot_work) << ','
              << format_double(r.work.cboot_work_matched_cost) << ','
              << format_double(r.work.cboot_work_matched_error) << '\n';
  }
  std::cout << "# n=" << report.n << " balanced_T_smooth=" << report.balanced_T_smooth
            << " balanced_T_nonsmooth=" << report.balanced_T_nonsmooth << '\n';
  return 0;
}

int cmd_check(const Globals& g) {
  const auto results = qboot::run_checks();
  bool ok = true;
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : results) {
    ok = ok && r.passed;
    if (json_out(g)) {
      j.push_back({{"name", r.name}, {"passed", r.passed}, {"detail", r.detail}});
    } else {
      std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << "  " << r.detail << '\n';
    }
  }
  if (json_out(g)) std::cout << j.dump(2) << '\n';
  return ok ? 0 : 1;
}

void report_error(const std::string& kind, const std::string& message) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", message}}.dump() << '\n';
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kCapExceeded:
    case ErrorCode::kEnumerationTooLarge:
    case ErrorCode::kMTooLarge:
      return kExitCap;
    default:
      return kExitConfig;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Classical simulation of the quantum bootstrap (QBOOT)"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "JSON experiment config");
  app.add_option("--seed", g.seed, "master seed (overrides config)");
  app.add_option("--out", g.out, "output directory (overrides config)");
  app.add_option("--format", g.format, "stdout format")->check(CLI::IsMember({"csv", "json"}));

  SampleArgs ideal_args, cboot_args, circuit_args, res_args;
  auto* ideal = app.add_subcommand("ideal", "ideal bootstrap CDF by enumeration");
  add_sample_args(ideal, ideal_args);

  std::uint64_t B = 1024, reps = 1;
  auto* cboot = app.add_subcommand("cboot", "Monte Carlo bootstrap estimate");
  add_sample_args(cboot, cboot_args);
  cboot->add_option("--B", B, "resamples");
  cboot->add_option("--reps", reps, "independent estimates");

  double h = 0.0;
  int pmf_T = 0;
  auto* pmf = app.add_subcommand("qae-pmf", "exact QAE outcome distribution");
  pmf->set_help_flag("--help", "print help");
  pmf->add_option("--h", h, "amplitude h in [0,1]")->required();
  pmf->add_option("--T", pmf_T, "precision qubits")->required();

  int circuit_T = 0;
  auto* circuit = app.add_subcommand("qboot-circuit", "simulate the full QBOOT circuit");
  add_sample_args(circuit, circuit_args);
  circuit->add_option("--T", circuit_T, "precision qubits")->required();

  auto* experiment = app.add_subcommand("experiment", "cost-matched QBOOT vs CBOOT replications");

  std::vector<int> res_T;
  auto* resources = app.add_subcommand("resources", "qubit and work report");
  add_sample_args(resources, res_args);
  resources->add_option("--T", res_T, "precision qubit counts")->delimiter(',');

  auto* check = app.add_subcommand("check", "run the invariant suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("UsageError", e.what());
    std::cerr << app.help();
    return kExitConfig;
  }

  try {
    if (*ideal) return cmd_ideal(g, ideal_args);
    if (*cboot) return cmd_cboot(g, cboot_args, B, reps);
    if (*pmf) return cmd_qae_pmf(g, h, pmf_T);
    if (*circuit) return cmd_qboot_circuit(g, circuit_args, circuit_T);
    if (*experiment) return cmd_experiment(g);
    if (*resources) return cmd_resources(g, res_args, res_T);
    if (*check) return cmd_check(g);
  } catch (const Error& e) {
    report_error(qboot::error_code_name(e.code()), e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    report_error("InternalError", e.what());
    return 1;
  }
  return 0;
}

#pragma once

// Cost-matched QBOOT vs CBOOT replication driver.
//
// records.csv  method,T,B,M,rep,estimate,abs_error,seed
// summary.csv  method,T,M,mae,rmse,median_abs_error,n
// pmf_T<k>.csv l,prob,estimate
// resources.json

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"

#include "qboot/bootstrap.hpp"
#include "qboot/circuit.hpp"
#include "qboot/errors.hpp"
#include "qboot/numeric.hpp"
#include "qboot/qae.hpp"
#include "qboot/rng.hpp"
#include "qboot/sample.hpp"

namespace qboot {

/// How many CBOOT resamples to pair with T precision qubits.
struct BRule {
  enum class Kind { kPow2, kPow4, kFixed };
  Kind kind = Kind::kPow2;
  std::uint64_t fixed = 0;

  std::uint64_t resamples(int T) const {
    switch (kind) {
      case Kind::kPow2: return std::uint64_t{1} << T;
      case Kind::kPow4: return std::uint64_t{1} << (2 * T);
      case Kind::kFixed: return fixed;
    }
    return 0;
  }

  std::string str() const {
    switch (kind) {
      case Kind::kPow2: return "2^T";
      case Kind::kPow4: return "4^T";
      case Kind::kFixed: return std::to_string(fixed);
    }
    return "";
  }

  static BRule parse(const std::string& s) {
    if (s == "2^T") return {};
    if (s == "4^T") return {Kind::kPow4, 0};
    std::uint64_t v = 0;
    std::size_t used = 0;
    try {
      v = std::stoull(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size() || s.front() == '-') {
      throw Error(ErrorCode::kConfig, "B_rule must be \"2^T\", \"4^T\" or a positive integer, got \"" + s + "\"");
    }
    return {Kind::kFixed, v};
  }
};

enum class ExperimentPath { kAnalytic, kCircuit };

struct ExperimentConfig {
  std::vector<double> sample{0, 1, 2, 3};
  std::string statistic = "mean";
  std::vector<double> z{1.25};
  std::vector<int> T{4, 5, 6, 7, 8, 9, 10};
  std::vector<int> M{1};
  std::uint64_t replications = 5000;
  std::uint64_t seed = 20240101;
  ExperimentPath path = ExperimentPath::kAnalytic;
  BRule B_rule{};
  std::optional<std::size_t> resample_size;  // defaults to n
  std::uint64_t enumeration_cap = EnumerationOptions{}.cap;
  int max_qubits = EngineOptions{}.max_qubits;
  double oracle_cost = 1.0;
  double classical_cost = 1.0;
  std::string output_dir = "qboot_out";

  std::size_t r() const { return resample_size.value_or(sample.size()); }
};

inline void validate(const ExperimentConfig& c) {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::kConfig, m); };
  if (c.sample.empty()) fail("sample must be non-empty");
  for (double v : c.sample)
    if (!std::isfinite(v)) fail("sample values must be finite");
  if (c.z.empty()) fail("z list must be non-empty");
  if (c.T.empty()) fail("T list must be non-empty");
  for (int t : c.T)
    if (t < 1 || t > 24) fail("T must be in [1, 24]");
  if (c.M.empty()) fail("M list must be non-empty");
  for (int m : c.M)
    if (m < 1 || m % 2 == 0) fail("every M must be odd and positive");
  if (c.replications < 1) fail("replications must be at least 1");
  if (c.resample_size && *c.resample_size == 0) fail("resample_size must be positive");
  for (int t : c.T)
    if (c.B_rule.resamples(t) < 1) fail("B rule gives B = 0 at T = " + std::to_string(t));
  if (c.B_rule.kind == BRule::Kind::kPow4)
    for (int t : c.T)
      if (t > 31) fail("4^T overflows at T = " + std::to_string(t));
  if (c.max_qubits < 1) fail("max_qubits must be positive");
  (void)statistic_by_name(c.statistic);
}

inline const char* path_name(ExperimentPath p) { return p == ExperimentPath::kAnalytic ? "analytic" : "circuit"; }

inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["sample"] = c.sample;
  j["statistic"] = c.statistic;
  j["z"] = c.z;
  j["T"] = c.T;
  j["M"] = c.M;
  j["replications"] = c.replications;
  j["seed"] = c.seed;
  j["path"] = path_name(c.path);
  j["B_rule"] = c.B_rule.str();
  j["resample_size"] = c.r();
  j["enumeration_cap"] = c.enumeration_cap;
  j["max_qubits"] = c.max_qubits;
  j["oracle_cost"] = c.oracle_cost;
  j["classical_cost"] = c.classical_cost;
  j["output_dir"] = c.output_dir;
  return j;
}

/// Fields absent from the JSON keep their defaults; unknown fields are rejected.
inline ExperimentConfig parse_config(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kConfig, "config must be a JSON object");
  ExperimentConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "sample") {
        c.sample = v.get<std::vector<double>>();
      } else if (key == "statistic") {
        c.statistic = v.get<std::string>();
      } else if (key == "z") {
        c.z = v.is_array() ? v.get<std::vector<double>>() : std::vector<double>{v.get<double>()};
      } else if (key == "T") {
        c.T = v.is_array() ? v.get<std::vector<int>>() : std::vector<int>{v.get<int>()};
      } else if (key == "M") {
        c.M = v.is_array() ? v.get<std::vector<int>>() : std::vector<int>{v.get<int>()};
      } else if (key == "replications") {
        c.replications = v.get<std::uint64_t>();
      } else if (key == "seed") {
        c.seed = v.get<std::uint64_t>();
      } else if (key == "path") {
        const auto p = v.get<std::string>();
        if (p == "analytic") c.path = ExperimentPath::kAnalytic;
        else if (p == "circuit") c.path = ExperimentPath::kCircuit;
        else throw Error(ErrorCode::kConfig, "path must be \"analytic\" or \"circuit\"");
      } else if (key == "B_rule") {
        c.B_rule = BRule::parse(v.is_number_unsigned() ? std::to_string(v.get<std::uint64_t>()) : v.get<std::string>());
      } else if (key == "resample_size") {
        if (!v.is_null()) c.resample_size = v.get<std::size_t>();
      } else if (key == "enumeration_cap") {
        c.enumeration_cap = v.get<std::uint64_t>();
      } else if (key == "max_qubits") {
        c.max_qubits = v.get<int>();
      } else if (key == "oracle_cost") {
        c.oracle_cost = v.get<double>();
      } else if (key == "classical_cost") {
        c.classical_cost = v.get<double>();
      } else if (key == "output_dir") {
        c.output_dir = v.get<std::string>();
      } else {
        throw Error(ErrorCode::kConfig, "unknown config field \"" + key + "\"");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("bad field type: ") + e.what());
  }
  validate(c);
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::kConfig, "cannot open config " + file.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

struct ReplicationRecord {
  std::string method;  // QBOOT or CBOOT
  int T = 0;
  std::uint64_t B = 0;
  int M = 1;
  std::uint64_t rep = 0;
  double estimate = 0.0;
  double abs_error = 0.0;
  std::uint64_t seed = 0;

  bool operator==(const ReplicationRecord&) const = default;
};

inline ReplicationRecord make_record(std::string method, int T, std::uint64_t B, int M, std::uint64_t rep,
                                     double estimate, double truth, std::uint64_t seed) {
  return {std::move(method), T, B, M, rep, estimate, std::fabs(estimate - truth), seed};
}

struct SummaryRow {
  std::string method;
  int T = 0;
  int M = 1;
  double mae = 0.0;
  double rmse = 0.0;
  double median_abs_error = 0.0;
  std::uint64_t n = 0;

  bool operator==(const SummaryRow&) const = default;
};

using SummaryTable = std::vector<SummaryRow>;

inline bool record_less(const ReplicationRecord& a, const ReplicationRecord& b) {
  return std::tie(a.method, a.T, a.M, a.rep) < std::tie(b.method, b.T, b.M, b.rep);
}

/// Per (method, T, M): MAE, sqrt(MSE), lower median of abs_error, count.
/// Result depends only on the multiset of records.
inline SummaryTable summarize(std::vector<ReplicationRecord> records) {
  if (records.empty()) throw Error(ErrorCode::kEmptyInput, "no records to summarize");
  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    return std::tie(a.method, a.T, a.M, a.abs_error) < std::tie(b.method, b.T, b.M, b.abs_error);
  });
  SummaryTable out;
  std::size_t i = 0;
  while (i < records.size()) {
    std::size_t j = i;
    CompensatedSum abs_sum, sq_sum;
    while (j < records.size() && records[j].method == records[i].method && records[j].T == records[i].T &&
           records[j].M == records[i].M) {
      abs_sum.add(records[j].abs_error);
      sq_sum.add(records[j].abs_error * records[j].abs_error);
      ++j;
    }
    const auto n = static_cast<double>(j - i);
    SummaryRow row{records[i].method, records[i].T, records[i].M};
    row.mae = abs_sum.value() / n;
    row.rmse = std::sqrt(sq_sum.value() / n);
    row.median_abs_error = records[i + (j - i - 1) / 2].abs_error;
    row.n = j - i;
    out.push_back(row);
    i = j;
  }
  return out;
}

/// Output for one threshold z.
struct ExperimentResult {
  double z = 0.0;
  double ideal = 0.0;
  std::uint64_t ideal_accepted = 0;
  std::uint64_t ideal_total = 0;
  std::vector<QaePmf> pmfs;  // one per T, in config order
  std::vector<ReplicationRecord> records;
  SummaryTable summary;
};

enum : std::uint64_t { kMethodQboot = 1, kMethodCboot = 2 };

inline std::uint64_t replication_seed(std::uint64_t seed, std::uint64_t method, int T, int M, std::uint64_t rep) {
  return derive_seed({seed, method, static_cast<std::uint64_t>(T), static_cast<std::uint64_t>(M), rep});
}

inline QaePmf experiment_pmf(const ExperimentConfig& c, const Sample& x, const StatisticSpec& stat, double z, int T,
                             double ideal) {
  if (c.path == ExperimentPath::kAnalytic) return qae_pmf(ideal, T);
  PlanOptions opts;
  opts.engine.max_qubits = c.max_qubits;
  opts.enumeration.cap = c.enumeration_cap;
  const auto plan = build_plan(x, stat, z, T, c.r(), opts);
  return {T, ideal, tau_from_h(ideal), run_qae_exact(plan)};
}

inline ExperimentResult run_experiment_at(const ExperimentConfig& c, double z) {
  validate(c);
  const Sample x(c.sample);
  const auto stat = statistic_by_name(c.statistic);
  EnumerationOptions eopts;
  eopts.cap = c.enumeration_cap;
  const auto count = ideal_bootstrap_count(x, stat, z, c.r(), eopts);

  ExperimentResult res;
  res.z = z;
  res.ideal = count.probability();
  res.ideal_accepted = count.accepted;
  res.ideal_total = count.total;
  for (int T : c.T) {
    res.pmfs.push_back(experiment_pmf(c, x, stat, z, T, res.ideal));
    const QaeSampler sampler(res.pmfs.back());
    const std::uint64_t B = c.B_rule.resamples(T);
    for (int M : c.M) {
      for (std::uint64_t rep = 0; rep < c.replications; ++rep) {
        const auto s = replication_seed(c.seed, kMethodQboot, T, M, rep);
        RandomStream rng(s);
        res.records.push_back(make_record("QBOOT", T, B, M, rep, sampler.draw_median(M, rng), res.ideal, s));
      }
    }
    for (std::uint64_t rep = 0; rep < c.replications; ++rep) {
      const auto s = replication_seed(c.seed, kMethodCboot, T, 1, rep);
      RandomStream rng(s);
      res.records.push_back(make_record("CBOOT", T, B, 1, rep, cboot_estimate(x, stat, z, B, rng, c.r()), res.ideal, s));
    }
  }
  std::sort(res.records.begin(), res.records.end(), record_less);
  res.summary = summarize(res.records);
  return res;
}

inline std::vector<ExperimentResult> run_experiment(const ExperimentConfig& c) {
  validate(c);
  std::vector<ExperimentResult> out;
  for (double z : c.z) out.push_back(run_experiment_at(c, z));
  return out;
}

struct ResourceRow {
  int T = 0;
  std::optional<int> qubits;  // nullopt: statistic has no circuit form
  bool within_cap = false;
  std::uint64_t B = 0;
  WorkReport work;
};

struct ResourceReport {
  std::size_t n = 0;
  std::size_t resample_size = 0;
  std::string statistic;
  int balanced_T_smooth = 0;
  int balanced_T_nonsmooth = 0;
  std::vector<ResourceRow> rows;
};

inline ResourceReport resource_report(const ExperimentConfig& c) {
  validate(c);
  const Sample x(c.sample);
  const auto stat = statistic_by_name(c.statistic);
  ResourceReport rep;
  rep.n = x.size();
  rep.resample_size = c.r();
  rep.statistic = c.statistic;
  rep.balanced_T_smooth = balanced_T(rep.n, true);
  rep.balanced_T_nonsmooth = balanced_T(rep.n, false);
  for (int T : c.T) {
    ResourceRow row;
    row.T = T;
    row.qubits = plan_qubit_count(x, stat, T, c.r());
    row.within_cap = row.qubits && *row.qubits <= c.max_qubits;
    row.B = c.B_rule.resamples(T);
    row.work = work_report(rep.n, T, row.qubits.value_or(0), c.oracle_cost, c.classical_cost);
    rep.rows.push_back(row);
  }
  return rep;
}

inline nlohmann::json to_json(const ResourceReport& r) {
  nlohmann::json j;
  j["n"] = r.n;
  j["resample_size"] = r.resample_size;
  j["statistic"] = r.statistic;
  j["balanced_T_smooth"] = r.balanced_T_smooth;
  j["balanced_T_nonsmooth"] = r.balanced_T_nonsmooth;
  j["rows"] = nlohmann::json::array();
  for (const auto& row : r.rows) {
    nlohmann::json o;
    o["T"] = row.T;
    o["qubits"] = row.qubits ? nlohmann::json(*row.qubits) : nlohmann::json(nullptr);
    o["within_cap"] = row.within_cap;
    o["B"] = row.B;
    o["grover_iterations"] = row.work.counts.grover_iterations;
    o["oracle_calls"] = row.work.counts.oracle_calls;
    o["oracle_adjoint_calls"] = row.work.counts.oracle_adjoint_calls;
    o["prep_calls"] = row.work.counts.prep_calls;
    o["prep_adjoint_calls"] = row.work.counts.prep_adjoint_calls;
    o["matched_B"] = row.work.matched_B;
    o["qboot_work"] = row.work.qboot_work;
    o["cboot_work_matched_cost"] = row.work.cboot_work_matched_cost;
    o["cboot_work_matched_error"] = row.work.cboot_work_matched_error;
    o["is_balanced"] = row.work.is_balanced;
    j["rows"].push_back(o);
  }
  return j;
}

inline void write_records_csv(std::ostream& os, const std::vector<ReplicationRecord>& records) {
  os << "method,T,B,M,rep,estimate,abs_error,seed\n";
  for (const auto& r : records) {
    os << r.method << ',' << r.T << ',' << r.B << ',' << r.M << ',' << r.rep << ',' << format_double(r.estimate) << ','
       << format_double(r.abs_error) << ',' << r.seed << '\n';
  }
}

inline void write_summary_csv(std::ostream& os, const SummaryTable& table) {
  os << "method,T,M,mae,rmse,median_abs_error,n\n";
  for (const auto& r : table) {
    os << r.method << ',' << r.T << ',' << r.M << ',' << format_double(r.mae) << ',' << format_double(r.rmse) << ','
       << format_double(r.median_abs_error) << ',' << r.n << '\n';
  }
}

inline nlohmann::json to_json(const SummaryTable& table) {
  auto j = nlohmann::json::array();
  for (const auto& r : table) {
    j.push_back({{"method", r.method}, {"T", r.T}, {"M", r.M}, {"mae", r.mae}, {"rmse", r.rmse},
                 {"median_abs_error", r.median_abs_error}, {"n", r.n}});
  }
  return j;
}

/// Parses records.csv back; used to check that the summary is reproducible.
inline std::vector<ReplicationRecord> read_records_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "method,T,B,M,rep,estimate,abs_error,seed") {
    throw Error(ErrorCode::kConfig, "records.csv header mismatch");
  }
  std::vector<ReplicationRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (std::size_t p; (p = line.find(',', start)) != std::string::npos; start = p + 1) f.push_back(line.substr(start, p - start));
    f.push_back(line.substr(start));
    if (f.size() != 8) throw Error(ErrorCode::kConfig, "records.csv row has " + std::to_string(f.size()) + " fields");
    out.push_back({f[0], std::stoi(f[1]), std::stoull(f[2]), std::stoi(f[3]), std::stoull(f[4]), std::stod(f[5]),
                   std::stod(f[6]), std::stoull(f[7])});
  }
  return out;
}

/// Writes every output for one z into dir.
inline void write_result(const std::filesystem::path& dir, const ExperimentConfig& c, const ExperimentResult& res) {
  std::filesystem::create_directories(dir);
  auto open = [&](const std::string& name) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw Error(ErrorCode::kConfig, "cannot write " + (dir / name).string());
    return f;
  };
  {
    auto f = open("records.csv");
    write_records_csv(f, res.records);
  }
  {
    auto f = open("summary.csv");
    write_summary_csv(f, res.summary);
  }
  for (const auto& pmf : res.pmfs) {
    auto f = open("pmf_T" + std::to_string(pmf.T) + ".csv");
    write_pmf_csv(f, pmf);
  }
  auto resources = to_json(resource_report(c));
  resources["config"] = to_json(c);
  resources["ground_truth"] = {{"z", res.z},
                               {"ideal", res.ideal},
                               {"accepted", res.ideal_accepted},
                               {"total", res.ideal_total}};
  auto f = open("resources.json");
  f << resources.dump(2) << '\n';
}

/// One z writes straight into output_dir; several go to output_dir/z<k>.
inline std::vector<std::filesystem::path> write_experiment(const ExperimentConfig& c,
                                                           const std::vector<ExperimentResult>& results) {
  std::vector<std::filesystem::path> dirs;
  for (std::size_t k = 0; k < results.size(); ++k) {
    auto dir = std::filesystem::path(c.output_dir);
    if (results.size() > 1) dir /= "z" + std::to_string(k);
    write_result(dir, c, results[k]);
    dirs.push_back(dir);
  }
  return dirs;
}

}  // namespace qboot

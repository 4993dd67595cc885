#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <gtest/gtest.h>

#include "json.hpp"

namespace {

struct Run {
  int status = -1;
  std::string out;
  std::string err;
};

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("qboot_cli_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Run run(const std::string& args) {
  const auto err_file = std::filesystem::temp_directory_path() / "qboot_cli_stderr.txt";
  const std::string cmd = std::string(QBOOT_CLI_PATH) + " " + args + " 2>" + err_file.string();
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  std::array<char, 4096> buf{};
  while (std::size_t n = fread(buf.data(), 1, buf.size(), p)) r.out.append(buf.data(), n);
  const int raw = pclose(p);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.err = slurp(err_file);
  return r;
}

void write(const std::filesystem::path& p, const std::string& s) { std::ofstream(p) << s; }

}  // namespace

TEST(Cli, IdealOnFourPointSample) {
  const auto r = run("ideal --sample 0,1,2,3 --z 1.25");
  EXPECT_EQ(r.status, 0);
  EXPECT_EQ(r.out, "z,ideal,accepted,total\n1.25,0.4140625,106,256\n");
}

TEST(Cli, QaePmfHalf) {
  const auto r = run("qae-pmf --h 0.5 --T 1");
  EXPECT_EQ(r.status, 0);
  EXPECT_EQ(r.out, "l,prob,estimate\n0,0.5,0\n1,0.5,1\n");
}

TEST(Cli, JsonFormat) {
  const auto r = run("--format json ideal --z 1.25,2");
  ASSERT_EQ(r.status, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j[0]["ideal"], 0.4140625);
  EXPECT_EQ(j[1]["accepted"], 221);
}

TEST(Cli, ExperimentNeedsConfig) {
  const auto r = run("experiment");
  EXPECT_EQ(r.status, 2);
  EXPECT_EQ(nlohmann::json::parse(r.err)["error"], "ConfigError");
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run("").status, 2);
  EXPECT_EQ(run("bogus").status, 2);
  EXPECT_EQ(run("qae-pmf --h 0.5").status, 2);
  EXPECT_EQ(run("--format xml ideal").status, 2);
  EXPECT_EQ(run("--config /nonexistent/cfg.json ideal").status, 2);
  EXPECT_EQ(run("qae-pmf --h 1.5 --T 2").status, 2);
}

TEST(Cli, CapExceeded) {
  const auto r = run("qboot-circuit --T 14");
  EXPECT_EQ(r.status, 3);
  EXPECT_EQ(nlohmann::json::parse(r.err)["error"], "CapExceeded");
}

TEST(Cli, CircuitMatchesPmf) {
  const auto circuit = run("qboot-circuit --sample 0,1,2,3 --z 1.25 --T 3");
  const auto pmf = run("qae-pmf --h 0.4140625 --T 3");
  ASSERT_EQ(circuit.status, 0);
  std::istringstream a(circuit.out), b(pmf.out);
  std::string la, lb;
  std::getline(a, la);
  std::getline(b, lb);
  EXPECT_EQ(la, lb);
  while (std::getline(a, la) && std::getline(b, lb)) {
    const auto pa = std::stod(la.substr(la.find(',') + 1)), pb = std::stod(lb.substr(lb.find(',') + 1));
    EXPECT_NEAR(pa, pb, 1e-12);
  }
}

TEST(Cli, Resources) {
  const auto r = run("--format json resources --T 6,10");
  ASSERT_EQ(r.status, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["rows"][0]["B"], 64);
  EXPECT_EQ(j["rows"][1]["qubits"], 23);
}

TEST(Cli, CbootDeterministic) {
  const auto a = run("--seed 5 cboot --B 64 --reps 3");
  EXPECT_EQ(a.status, 0);
  EXPECT_EQ(a.out, run("--seed 5 cboot --B 64 --reps 3").out);
  EXPECT_NE(a.out, run("--seed 6 cboot --B 64 --reps 3").out);
}

TEST(Cli, ExperimentByteIdentical) {
  const auto dir = scratch("exp");
  write(dir / "cfg.json", R"({"sample":[0,1,2,3],"statistic":"mean","z":[1.25],"T":[3,4],"M":[1,3],
                              "replications":40,"seed":11,"path":"analytic"})");
  const auto a = run("--config " + (dir / "cfg.json").string() + " --out " + (dir / "a").string() + " experiment");
  const auto b = run("--config " + (dir / "cfg.json").string() + " --out " + (dir / "b").string() + " experiment");
  ASSERT_EQ(a.status, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  for (const char* f : {"records.csv", "summary.csv", "pmf_T3.csv", "pmf_T4.csv", "resources.json"}) {
    EXPECT_FALSE(slurp(dir / "a" / f).empty()) << f;
    if (std::string(f) != "resources.json") EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  }
  EXPECT_EQ(a.out, slurp(dir / "a" / "summary.csv"));
  write(dir / "bad.json", R"({"M":[2]})");
  const auto bad = run("--config " + (dir / "bad.json").string() + " experiment");
  EXPECT_EQ(bad.status, 2);
  std::filesystem::remove_all(dir);
}

TEST(Cli, CheckPasses) {
  const auto r = run("check");
  EXPECT_EQ(r.status, 0);
  EXPECT_EQ(r.out.find("FAIL"), std::string::npos);
}

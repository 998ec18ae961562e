#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "critdrift/config.hpp"
#include "critdrift/error.hpp"
#include "critdrift/orchestrator.hpp"

using namespace critdrift;
namespace fs = std::filesystem;

namespace {

const char* kZeroDrift = R"(seed: 5
grid: {dim: 2, n: 16}
drift: {type: zero}
initial: {type: gaussian, amplitude: 0.8, width: 0.15}
mollification:
  schedule: [1.0e-2, 2.5e-3, 6.25e-4]
  interleaved: [5.0e-3, 1.25e-3, 3.125e-4]
solver: {dt: 1.0e-3, t_final: 0.02, snapshot_stride: 5}
verifier: {tier: analytic}
)";

const char* kHardySmall = R"(seed: 11
grid: {dim: 3, n: 16}
drift: {type: hardy, delta: 1.0}
initial: {type: gaussian, amplitude: 0.9, width: 0.15}
mollification:
  schedule: [1.0e-2, 2.5e-3, 6.25e-4]
  interleaved: [5.0e-3, 1.25e-3, 3.125e-4]
solver: {dt: 5.0e-4, t_final: 0.01, snapshot_stride: 5}
sde: {n_paths: 200, t_final: 0.01, x0: [0.05, 0.0, 0.0], r_hit: 0.01, r_core: 0.001, deltas: [0.5, 4.0]}
)";

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("critdrift_orch_" + name);
  fs::remove_all(p);
  return p;
}

RunResult run_text(Subcommand cmd, const std::string& text, const fs::path& out) {
  RunOptions opt;
  opt.config_text = text;
  opt.output_dir = out;
  return run(cmd, parse_config(text), opt);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(CRITDRIFT_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Subcommands, NamesRoundTrip) {
  for (auto cmd : {Subcommand::norm, Subcommand::formbound, Subcommand::mollify, Subcommand::solve, Subcommand::verify,
                   Subcommand::sde, Subcommand::all}) {
    EXPECT_EQ(parse_subcommand(subcommand_name(cmd)), cmd);
  }
  EXPECT_THROW(parse_subcommand("plot"), InvalidInput);
}

TEST(Orchestrator, ZeroDriftVerifyPassesAnalyticTier) {
  const auto out = fresh_dir("zero");
  const auto res = run_text(Subcommand::verify, kZeroDrift, out);
  for (const auto& c : res.checks) EXPECT_TRUE(c.passed) << c.id << ": " << c.detail;
  EXPECT_EQ(exit_status(res), 0);
  EXPECT_TRUE(fs::exists(out / "reports.json"));
  EXPECT_TRUE(fs::exists(out / "report.txt"));
  const auto summary = nlohmann::json::parse(slurp(out / "summary.json"));
  EXPECT_EQ(summary["tier"], "analytic");
  EXPECT_TRUE(summary["passed"].get<bool>());
  fs::remove_all(out);
}

TEST(Orchestrator, ManifestListsEveryFileWithDigest) {
  const auto out = fresh_dir("manifest");
  const auto res = run_text(Subcommand::all, kHardySmall, out);
  const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  std::set<std::string> listed;
  for (const auto& f : manifest["files"]) {
    const std::string path = f["path"];
    listed.insert(path);
    EXPECT_EQ(f["sha256"], sha256_file(out / path)) << path;
    EXPECT_EQ(f["bytes"].get<std::uintmax_t>(), fs::file_size(out / path));
  }
  for (const auto& entry : fs::recursive_directory_iterator(out)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), out).generic_string();
    if (rel == "manifest.json") continue;
    EXPECT_TRUE(listed.count(rel)) << rel << " missing from manifest";
  }
  for (const char* name : {"config.yaml", "norm.json", "certificate.json", "mollify.json", "solve.json", "sde.json",
                           "summary.json", "reports.json"}) {
    EXPECT_TRUE(listed.count(name)) << name;
  }
  EXPECT_EQ(manifest["tool_version"], kToolVersion);
  EXPECT_EQ(manifest["passed"].get<bool>(), res.passed);
  fs::remove_all(out);
}

TEST(Orchestrator, RunsAreReproducible) {
  const auto a = fresh_dir("repro_a");
  const auto b = fresh_dir("repro_b");
  run_text(Subcommand::verify, kHardySmall, a);
  run_text(Subcommand::verify, kHardySmall, b);
  for (const char* name : {"reports.json", "summary.json", "certificate.json"}) {
    if (!fs::exists(a / name)) continue;
    EXPECT_EQ(slurp(a / name), slurp(b / name)) << name;
  }
  EXPECT_EQ(slurp(a / "reports.json"), slurp(b / "reports.json"));
  const auto ma = nlohmann::json::parse(slurp(a / "manifest.json"));
  const auto mb = nlohmann::json::parse(slurp(b / "manifest.json"));
  // Digests agree for every report; only the output location differs in the config hash.
  std::map<std::string, std::string> da, db;
  for (const auto& f : ma["files"]) da[f["path"]] = f["sha256"];
  for (const auto& f : mb["files"]) db[f["path"]] = f["sha256"];
  for (const auto& [path, digest] : da) {
    if (path.ends_with(".json") && path != "manifest.json") EXPECT_EQ(digest, db[path]) << path;
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Orchestrator, MalformedConfigCreatesNoArtifacts) {
  const auto out = fresh_dir("malformed");
  auto cfg = parse_config(kZeroDrift);
  cfg.schedule = {1e-3, 1e-2, 1e-4};
  RunOptions opt;
  opt.output_dir = out;
  EXPECT_THROW(run(Subcommand::verify, cfg, opt), ConfigError);
  EXPECT_FALSE(fs::exists(out));
}

TEST(Cli, MalformedScheduleExitsNonzeroWithoutArtifacts) {
  const auto out = fresh_dir("cli_malformed");
  const auto cfg_path = fs::temp_directory_path() / "critdrift_cli_malformed.yaml";
  std::ofstream(cfg_path) << "grid: {dim: 2, n: 16}\nmollification:\n  schedule: [1.0e-3, 1.0e-2]\n";
  EXPECT_EQ(run_cli("verify --config " + cfg_path.string() + " --output " + out.string()), 2);
  EXPECT_FALSE(fs::exists(out));
  fs::remove(cfg_path);
}

TEST(Cli, InitWritesParsableTemplateAndVerifyExitsZero) {
  const auto dir = fresh_dir("cli_init");
  fs::create_directories(dir);
  const auto tmpl = dir / "template.yaml";
  ASSERT_EQ(run_cli("init " + tmpl.string()), 0);
  EXPECT_EQ(slurp(tmpl), config_template());
  EXPECT_NE(run_cli("init " + tmpl.string()), 0);  // refuses to overwrite
  EXPECT_EQ(run_cli("init --force " + tmpl.string()), 0);

  const auto cfg = dir / "zero.yaml";
  std::ofstream(cfg) << kZeroDrift;
  EXPECT_EQ(run_cli("verify --quiet --config " + cfg.string() + " --output " + (dir / "out").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "manifest.json"));
  EXPECT_EQ(run_cli("verify --tolerance-tier bogus --config " + cfg.string()), 2);
  fs::remove_all(dir);
}

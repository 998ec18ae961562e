// Command-line front end: critdrift <subcommand> [--config PATH] [--output DIR]
// [--seed INT] [--parallel] [--tolerance-tier analytic|singular].
// Exit status: 0 when every selected check passes, 1 when a check fails,
// 2 on usage, configuration or module errors.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "critdrift/orchestrator.hpp"

namespace {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw critdrift::InvalidInput("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical verification of a priori estimates for advection-diffusion with critical drifts"};
  app.set_version_flag("--version", critdrift::kToolVersion);
  app.require_subcommand(1);

  std::string init_path;
  bool force = false;
  auto* init = app.add_subcommand("init", "Write a commented config template with every default");
  init->add_option("path", init_path, "Destination file (stdout when omitted)");
  init->add_flag("--force", force, "Overwrite an existing file");

  std::string config_path;
  std::string output_dir;
  std::uint64_t seed = 0;
  bool parallel = false;
  bool quiet = false;
  std::string tier;
  const std::vector<std::pair<const char*, const char*>> commands = {
      {"norm", "Orlicz and L^p norms of f, Morrey norm of the drift"},
      {"formbound", "Estimate (delta, c) form-bound certificate of the drift"},
      {"mollify", "Check the parent certificate on every mollified drift"},
      {"solve", "Evolve f under the drift and record diagnostics"},
      {"verify", "Certificate, mollification schedule, solves and all selected inequality checks"},
      {"sde", "Monte Carlo hitting probabilities across a delta sweep"},
      {"all", "Every pipeline above"}};
  std::vector<CLI::App*> runs;
  std::vector<CLI::Option*> seed_opts;
  std::vector<CLI::Option*> tier_opts;
  std::vector<CLI::Option*> output_opts;
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "YAML experiment config (template defaults when omitted)")
        ->check(CLI::ExistingFile);
    output_opts.push_back(sub->add_option("--output", output_dir, "Output directory (overrides output_dir)"));
    seed_opts.push_back(sub->add_option("--seed", seed, "Seed (overrides seed)"));
    sub->add_flag("--parallel", parallel, "Run schedule members and delta-sweep points concurrently");
    tier_opts.push_back(sub->add_option("--tolerance-tier", tier, "analytic | singular (overrides verifier.tier)")
                            ->check(CLI::IsMember({"analytic", "singular"})));
    sub->add_flag("--quiet", quiet, "Suppress progress output");
    runs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Help and version requests exit 0; every usage error maps to 2.
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (init->parsed()) {
      const std::string text = critdrift::config_template();
      if (init_path.empty()) {
        std::cout << text;
        return 0;
      }
      if (std::filesystem::exists(init_path) && !force) {
        std::cerr << "error: " << init_path << " exists (use --force to overwrite)\n";
        return 2;
      }
      std::ofstream(init_path) << text;
      return 0;
    }
    for (std::size_t i = 0; i < runs.size(); ++i) {
      if (!runs[i]->parsed()) continue;
      critdrift::RunOptions opt;
      opt.config_text = config_path.empty() ? critdrift::config_template() : read_text(config_path);
      const auto config = critdrift::parse_config(opt.config_text);
      if (output_opts[i]->count()) opt.output_dir = output_dir;
      if (seed_opts[i]->count()) opt.seed = seed;
      if (tier_opts[i]->count()) opt.tier = critdrift::parse_tier(tier);
      opt.parallel = parallel;
      opt.log = quiet ? nullptr : &std::cout;
      const auto result = critdrift::run(critdrift::parse_subcommand(runs[i]->get_name()), config, opt);
      int failed = 0;
      for (const auto& c : result.checks) failed += c.passed ? 0 : 1;
      std::cout << (result.passed ? "PASS" : "FAIL") << ": " << result.checks.size() - failed << "/"
                << result.checks.size() << " checks passed; artifacts in " << result.output_dir.string() << '\n';
      return critdrift::exit_status(result);
    }
  } catch (const critdrift::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}

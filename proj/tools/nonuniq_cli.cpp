#include "nonuniq/common.hpp"
#include "nonuniq/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

enum Exit { kPass = 0, kCertificateFailure = 1, kUsage = 2 };

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical lab for nonuniqueness of the semilinear heat equation"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir;
  int dim = 0;
  bool verbose = false;
  app.add_option("--config", config_path, "experiment config (JSON)")->check(CLI::ExistingFile);
  app.add_option("--dim", dim, "space dimension, overrides the config");
  app.add_option("--out", out_dir, "output directory, overrides the config");
  app.add_flag("-v,--verbose", verbose, "log pipeline stages to stderr");

  const std::map<std::string, std::string> help{
      {"exponents", "critical exponent table"},
      {"validate", "check the structural assumptions on f"},
      {"singular", "singular stationary solution u*"},
      {"profile", "self-similar profile and its first crossing"},
      {"curve", "interface curve r(t)"},
      {"supersolution", "glued supersolution and its certificates"},
      {"evolve", "one truncated evolution with scheme cross-check"},
      {"demo", "truncation sequence converging to a second solution"},
      {"ulnorm", "uniformly local norms of u*"}};
  for (const auto& name : nonuniq::subcommands()) app.add_subcommand(name, help.at(name));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kPass : kUsage;
  }
  const std::string sub = app.get_subcommands().front()->get_name();

  nonuniq::ExperimentConfig cfg;
  try {
    nlohmann::json j = config_path.empty() ? nlohmann::json::object() : nonuniq::to_json(nonuniq::load_config(config_path));
    if (dim != 0) j["dim"] = dim;
    cfg = nonuniq::parse_config(j);
  } catch (const nonuniq::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  }
  if (!out_dir.empty()) cfg.output_dir = out_dir;

  nonuniq::RunResult result;
  try {
    result = nonuniq::run_pipeline(sub, cfg, [&](const std::string& stage) {
      if (verbose) std::cerr << "[" << sub << "] " << stage << '\n';
    });
    nonuniq::write_outputs(result, cfg, cfg.output_dir);
  } catch (const nonuniq::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kCertificateFailure;
  }

  std::cout << result.report.dump(2) << '\n';
  for (const auto& c : result.certificates) {
    std::cerr << (c.passed ? "PASS " : "FAIL ") << c.name;
    if (!c.passed && !c.detail.empty()) std::cerr << "  (" << c.detail << ')';
    std::cerr << '\n';
  }
  if (!result.error.empty()) std::cerr << "failed: " << result.error << '\n';
  std::cerr << "wrote " << (cfg.output_dir / "manifest.json").string() << '\n';
  return result.passed() ? kPass : kCertificateFailure;
}

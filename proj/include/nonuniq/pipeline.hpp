#pragma once

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace nonuniq {

inline constexpr const char* kConfigSchema = "nonuniq.config/1";
inline constexpr const char* kManifestSchema = "nonuniq.manifest/1";
inline constexpr const char* kReportSchema = "nonuniq.report/1";
inline constexpr const char* kVersion = "0.1.0";

/// Invalid experiment config; path() is the offending field, e.g. "runs.n_list[2]".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

struct ExperimentConfig {
  int dim = 5;
  nlohmann::json nonlinearity = {{"kind", "power"}, {"params", {{"p", 3}}}};

  struct Grids {
    double r_min = 1e-8;  ///< singular profile range
    double r_max = 20;
    int points_per_decade = 64;
    double R_domain = 20;  ///< evolution ball radius
    double dt = 1e-3;      ///< largest evolution step
    double h0 = 1e-4, ratio = 1.05, dr_max = 0.05;
    double r_core = 2e-3;
  } grids;

  struct AlphaScan {
    double eta_max = 20;
    int points_per_unit = 512;
    double bracket_low = 1e-2, bracket_high = 1e2;
    double margin_floor = 1e-4;
    std::vector<double> margin_factors{10, 100, 1000, 3000, 10000, 30000};
    double required_t0 = 0;
  };

  struct Runs {
    std::vector<double> n_list{10, 30, 100, 300};
    std::vector<double> t_grid{1e-4, 1e-3, 1e-2};
    std::vector<double> gamma_list{1};
    AlphaScan alpha_scan;
    /// Interface-curve samples: per_decade points per decade on [t_min, t_max].
    double curve_t_min = 1e-8, curve_t_max = 1e-2;
    int curve_per_decade = 4;
    double splitting_step = 1e-5;  ///< method-of-lines step for the evolve cross-check
  } runs;

  std::map<std::string, double> tolerances = default_tolerances();
  std::filesystem::path output_dir = "nonuniq_out";

  static std::map<std::string, double> default_tolerances();
  std::vector<double> curve_times() const;
};

/// Parses and validates; unknown keys are rejected. Missing keys keep their defaults.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& cfg);

struct Certificate {
  std::string name;  ///< module.invariant
  bool passed = false;
  std::string detail;
};

struct DataFile {
  std::string name;
  std::string content;
};

struct RunResult {
  std::string subcommand;
  nlohmann::json report = nlohmann::json::object();
  std::vector<Certificate> certificates;
  std::vector<DataFile> files;
  std::string error;  ///< set when a stage aborted; the failing certificate names it
  double runtime_seconds = 0;

  bool passed() const;
  void certify(std::string name, bool ok, std::string detail = {});
};

const std::vector<std::string>& subcommands();

/// Runs one subcommand's module pipeline. Numerical failures inside a stage become a
/// failed certificate named after that stage; ConfigError and unknown subcommands throw.
RunResult run_pipeline(const std::string& subcommand, const ExperimentConfig& cfg,
                       const std::function<void(const std::string&)>& log = {});

/// Config echo, versions, certificates, file list, timestamp.
nlohmann::json manifest(const RunResult& result, const ExperimentConfig& cfg);

/// Writes the data files and manifest.json into dir (created if needed).
void write_outputs(const RunResult& result, const ExperimentConfig& cfg, const std::filesystem::path& dir);

/// Comma-separated table with a header row; doubles at 17 significant digits.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}
  void add(const std::vector<double>& row);
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<double>> rows_;
};

std::string format_double(double x);

}  // namespace nonuniq

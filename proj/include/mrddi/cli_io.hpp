#pragma once

#include "mrddi/core.hpp"
#include "mrddi/estimator.hpp"
#include "mrddi/propensity.hpp"
#include "mrddi/simulation.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mrddi {

inline constexpr int kSchemaVersion = 1;

enum class Command { estimate, diagnose, simulate };

std::string to_string(Command command);
Command parse_command(std::string_view text);

/// Where the dataset lives and which columns play which role. An empty
/// covariate list means every column that is not the outcome, a treatment,
/// or listed in `ignore`.
struct DatasetColumns {
  std::filesystem::path path;
  std::string outcome = "Y";
  std::string treat_a = "A";
  std::string treat_b = "B";
  std::vector<std::string> covariates;
  std::vector<std::string> ignore{"id"};
};

struct ModelEntry {
  std::string label;
  std::string formula;
  ModelFamily family = ModelFamily::multinomial;
};

struct SimulationBlock {
  Dgp dgp = Dgp::logistic;
  Index n = 2000;
  int runs = 250;
  int bootstrap_R = 200;
  std::vector<double> prevalences{0.30};
  std::vector<double> xis{1.0};
  /// "with_truth", "all_wrong", or "config" for the top-level models.
  std::string model_set = "with_truth";
  std::vector<std::string> balance_covariates{"X2", "X3"};
  Index calibration_mc_size = 1'000'000;
  Index oracle_mc_size = 10'000'000;
  bool include_iptw = true;
  bool include_el = true;
  bool include_melcb = true;
};

struct RunConfig {
  Command command = Command::estimate;
  std::optional<DatasetColumns> dataset;
  std::vector<ModelEntry> models;
  /// Resolved from either an "estimators" list or method/iptw_model_label/balance_covariates.
  std::vector<EstimatorSpec> estimators;
  LinkFunction link = LinkFunction::identity;
  int bootstrap_R = 200;
  std::uint64_t seed = 20240601;
  int threads = 1;
  std::filesystem::path output_dir = ".";
  SimulationBlock simulation;
};

/// Parses the JSON configuration. Relative dataset paths are resolved
/// against `base_dir`. Throws ConfigError.
RunConfig parse_run_config(std::string_view json_text, const std::filesystem::path& base_dir = {});

RunConfig load_run_config(const std::filesystem::path& path);

/// Command-specific invariants (dataset present, IPTW names exactly one
/// model, mELCB has balance covariates, ...). Throws ConfigError.
void validate_run_config(const RunConfig& config);

/// Throws SchemaError, CsvParseError (1-based data row) or ValidationError.
Dataset load_csv(const DatasetColumns& columns);

/// The estimation plan described by a validated config, with formulas
/// parsed against `covariate_names`.
EstimationPlan make_plan(const RunConfig& config, std::span<const std::string> covariate_names);

SimulationConfig make_simulation_config(const RunConfig& config);

/// Artifact name -> contents, written together once the command succeeds.
using Artifacts = std::vector<std::pair<std::string, std::string>>;

Artifacts run_estimate(const RunConfig& config);
Artifacts run_diagnose(const RunConfig& config);
Artifacts run_simulate(const RunConfig& config);

/// Validates, runs, and writes artifacts into config.output_dir. On failure
/// writes error.json instead and returns nonzero.
int run_command(const RunConfig& config);

/// Body of error.json for an exception.
std::string error_json(const std::exception& e);

}  // namespace mrddi

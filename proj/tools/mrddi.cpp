// Command-line front end: mrddi {estimate|diagnose|simulate} --config FILE

#include "mrddi/cli_io.hpp"
#include "mrddi/errors.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

int main(int argc, char** argv) {
  CLI::App app{"Multiply robust estimation of drug-drug interactions"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> output_dir;

  const std::pair<const char*, const char*> commands[] = {
      {"estimate", "DDI estimates with bootstrap intervals"},
      {"diagnose", "covariate balance before and after weighting"},
      {"simulate", "Monte Carlo study of the estimators"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--seed", seed, "Override the configured seed");
    sub->add_option("--threads", threads, "Worker threads (results do not depend on this)");
    sub->add_option("--output-dir", output_dir, "Directory for output artifacts");
  }
  CLI11_PARSE(app, argc, argv);

  const std::string command = app.get_subcommands().front()->get_name();
  mrddi::RunConfig config;
  try {
    config = mrddi::load_run_config(config_path);
  } catch (const std::exception& e) {
    // No usable output directory yet unless given on the command line.
    const std::filesystem::path dir = output_dir.value_or(".");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    std::ofstream(dir / "error.json") << mrddi::error_json(e);
    std::cerr << "mrddi: " << e.what() << "\n";
    return 1;
  }
  config.command = mrddi::parse_command(command);
  if (seed) config.seed = *seed;
  if (threads) config.threads = *threads;
  if (output_dir) config.output_dir = *output_dir;

  const int status = mrddi::run_command(config);
  if (status != 0) std::cerr << "mrddi: failed, see " << (config.output_dir / "error.json").string() << "\n";
  return status;
}

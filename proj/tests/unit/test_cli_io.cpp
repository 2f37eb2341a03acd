#include "helpers.hpp"

#include "mrddi/cli_io.hpp"
#include "mrddi/errors.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace mrddi;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("mrddi_unit_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text) n += c == '\n';
  return n;
}

/// Null dataset written as CSV with an id column.
fs::path write_null_csv(const fs::path& dir, Index n, std::uint64_t seed) {
  const auto d = testing::null_dataset(n, seed);
  std::ostringstream out;
  out << "id,Y,A,B,X1,X2,X3\n";
  out.precision(17);
  for (Index i = 0; i < n; ++i) {
    out << i << ',' << d.outcome(i) << ',' << d.treat_a(i) << ',' << d.treat_b(i);
    for (Index k = 0; k < 3; ++k) out << ',' << d.covariates(i, k);
    out << '\n';
  }
  const fs::path p = dir / "data.csv";
  write_file(p, out.str());
  return p;
}

const char* kEstimateConfig = R"({
  "command": "estimate",
  "dataset_path": "data.csv",
  "model_formulas": [{"label": "a", "formula": "X1 + X2"}, {"label": "b", "formula": "X2 + X3"}],
  "estimators": [{"method": "iptw", "model": "a"}, {"method": "el"}, {"method": "melcb", "balance_covariates": ["X1"]}],
  "bootstrap_R": 20,
  "seed": 4
})";

}  // namespace

TEST_CASE("four-row file loads") {
  const auto dir = scratch("load");
  write_file(dir / "d.csv", "id,Y,A,B,X1\n1,0,1,1,0.5\n2,1,0,1,1.5\n3,0,1,0,2\n4,1,0,0,-1\n");
  DatasetColumns cols;
  cols.path = dir / "d.csv";
  const auto d = load_csv(cols);
  CHECK(d.n() == 4);
  CHECK(d.p() == 1);
  CHECK(d.covariate_names == std::vector<std::string>{"X1"});
  CHECK(d.covariates(3, 0) == -1.0);
  CHECK(d.treat_b(2) == 0);
}

TEST_CASE("byte-order mark, CRLF and quoted fields") {
  const auto dir = scratch("quoted");
  write_file(dir / "d.csv", "\xEF\xBB\xBF\"Y\",A,B,X1\r\n\"0\",1,1,0.5\r\n1,0,1,1.5\r\n0,1,0,2\r\n1,0,0,3\r\n");
  DatasetColumns cols;
  cols.path = dir / "d.csv";
  const auto d = load_csv(cols);
  CHECK(d.n() == 4);
  CHECK(d.outcome(0) == 0.0);
}

TEST_CASE("missing treatment column names the column") {
  const auto dir = scratch("schema");
  write_file(dir / "d.csv", "id,Y,A,X1\n1,0,1,0.5\n");
  DatasetColumns cols;
  cols.path = dir / "d.csv";
  try {
    load_csv(cols);
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("'B'") != std::string::npos);
  }
}

TEST_CASE("NA cell reports row and column") {
  const auto dir = scratch("na");
  write_file(dir / "d.csv", "id,Y,A,B,X1\n1,0,1,1,0.5\n2,1,0,1,1.5\n3,NA,1,0,2\n4,1,0,0,-1\n");
  DatasetColumns cols;
  cols.path = dir / "d.csv";
  try {
    load_csv(cols);
    FAIL("expected CsvParseError");
  } catch (const CsvParseError& e) {
    CHECK(e.row() == 3);
    CHECK(e.column() == "Y");
    CHECK(e.kind() == "ParseError");
  }
}

TEST_CASE("ragged rows and non-binary treatments are rejected") {
  const auto dir = scratch("ragged");
  DatasetColumns cols;
  cols.path = dir / "d.csv";
  write_file(cols.path, "Y,A,B,X1\n0,1,1\n");
  CHECK_THROWS_AS(load_csv(cols), SchemaError);
  write_file(cols.path, "Y,A,B,X1\n0,2,1,0\n1,0,1,1\n0,1,0,2\n1,0,0,3\n");
  CHECK_THROWS_AS(load_csv(cols), ValidationError);
  write_file(cols.path, "Y,A,B,X1\n0,0.5,1,0\n");
  CHECK_THROWS_AS(load_csv(cols), ValidationError);
}

TEST_CASE("configuration rejections") {
  const std::string base = R"("dataset_path": "x.csv", "model_formulas": [{"label": "a", "formula": "X1"}, {"label": "b", "formula": "X2"}])";
  auto parse = [&](const std::string& extra) { return parse_run_config("{" + base + extra + "}"); };

  CHECK_THROWS_AS(validate_run_config(parse(R"(, "method": "melcb", "balance_covariates": [])")), ConfigError);
  CHECK_THROWS_AS(validate_run_config(parse(R"(, "method": "melcb")")), ConfigError);
  CHECK_THROWS_AS(validate_run_config(parse(R"(, "method": "iptw")")), ConfigError);
  CHECK_THROWS_AS(validate_run_config(parse(R"(, "method": "iptw", "iptw_model_label": "zz")")), ConfigError);
  CHECK_THROWS_AS(validate_run_config(parse(R"(, "bootstrap_R": 1)")), ConfigError);
  CHECK_THROWS_AS(parse(R"(, "mehtod": "el")"), ConfigError);
  CHECK_THROWS_AS(parse(R"(, "link": "probit")"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("{not json"), ConfigError);
  CHECK_NOTHROW(validate_run_config(parse(R"(, "method": "iptw", "iptw_model_label": "b")")));
  CHECK_NOTHROW(validate_run_config(parse(R"(, "method": "melcb", "balance_covariates": ["X1"])")));
}

TEST_CASE("mELCB with an empty balance list fails before any computation") {
  const auto dir = scratch("reject");
  RunConfig c = parse_run_config(R"({"dataset_path": "absent.csv", "model_formulas": [{"label": "a", "formula": "X1"}],
                                     "method": "melcb", "balance_covariates": []})",
                                 dir);
  c.output_dir = dir / "out";
  CHECK(run_command(c) != 0);
  const auto err = nlohmann::json::parse(read_file(dir / "out" / "error.json"));
  CHECK(err["error"]["kind"] == "ConfigError");
  CHECK(err["schema_version"] == kSchemaVersion);
}

TEST_CASE("estimate outputs are byte-identical across runs and thread counts") {
  const auto dir = scratch("estimate");
  write_null_csv(dir, 800, 31);
  RunConfig c = parse_run_config(kEstimateConfig, dir);
  c.output_dir = dir / "one";
  REQUIRE(run_command(c) == 0);
  c.output_dir = dir / "again";
  REQUIRE(run_command(c) == 0);
  c.threads = 4;
  c.output_dir = dir / "four";
  REQUIRE(run_command(c) == 0);
  for (const char* name : {"estimate.json", "estimate.csv"}) {
    CHECK(read_file(dir / "one" / name) == read_file(dir / "again" / name));
    CHECK(read_file(dir / "one" / name) == read_file(dir / "four" / name));
  }
  CHECK_FALSE(fs::exists(dir / "one" / "error.json"));

  const auto j = nlohmann::json::parse(read_file(dir / "one" / "estimate.json"));
  CHECK(j["schema_version"] == kSchemaVersion);
  REQUIRE(j["estimates"].size() == 3);
  CHECK(j["estimates"][0]["name"] == "IPTW-a");
  CHECK(j["estimates"][2]["method"] == "mELCB");
  for (const auto& e : j["estimates"]) {
    CHECK(e["ci"][0].get<double>() <= 0.0);
    CHECK(e["ci"][1].get<double>() >= 0.0);
  }
  const std::string csv = read_file(dir / "one" / "estimate.csv");
  CHECK(csv.rfind("Method,Model,DDI,Standard error,95% CI\n", 0) == 0);
  CHECK(count_lines(csv) == 4);
}

TEST_CASE("diagnose emits baseline and forced balance") {
  const auto dir = scratch("diagnose");
  write_null_csv(dir, 800, 32);
  RunConfig c = parse_run_config(kEstimateConfig, dir);
  c.command = Command::diagnose;
  c.output_dir = dir / "out";
  REQUIRE(run_command(c) == 0);
  const auto j = nlohmann::json::parse(read_file(dir / "out" / "balance.json"));
  const auto& reports = j["reports"];
  REQUIRE(reports.size() == 4);
  CHECK(reports[0]["method"] == "unweighted");
  bool seen = false;
  for (const auto& row : reports[3]["covariates"]) {
    if (row["covariate"] == "X1") {
      seen = true;
      CHECK(row["psb_overall"].get<double>() < 1e-6);
    }
  }
  CHECK(seen);
  CHECK(count_lines(read_file(dir / "out" / "balance.csv")) == 1 + 4 * 3);
}

TEST_CASE("estimate failure writes error.json and no artifacts") {
  const auto dir = scratch("failure");
  write_file(dir / "data.csv", "Y,A,B,X1\n0,1,1,1\n1,0,1,2\n0,1,1,3\n1,0,1,4\n");
  RunConfig c = parse_run_config(R"({"dataset_path": "data.csv", "model_formulas": [{"label": "a", "formula": "X1"}],
                                     "method": "el", "bootstrap_R": 0})",
                                 dir);
  c.output_dir = dir / "out";
  CHECK(run_command(c) != 0);
  CHECK_FALSE(fs::exists(dir / "out" / "estimate.json"));
  const auto err = nlohmann::json::parse(read_file(dir / "out" / "error.json"));
  CHECK(err["error"]["module"] == "core-data");
  CHECK(err["error"]["kind"] == "ValidationError");
  CHECK(err["error"]["message"].get<std::string>().find("empty arm") != std::string::npos);
}

TEST_CASE("simulate smoke run emits one row per estimator per facet") {
  const auto dir = scratch("simulate");
  RunConfig c = parse_run_config(R"({"command": "simulate", "seed": 3,
      "simulation": {"n": 200, "runs": 1, "bootstrap_R": 0, "prevalences": [0.1, 0.2, 0.3, 0.4, 0.5],
                     "xis": [0.5, 1, 2], "calibration_mc_size": 20000, "oracle_mc_size": 20000}})");
  c.output_dir = dir;
  REQUIRE(run_command(c) == 0);
  for (const char* name : {"relbias.csv", "coverage.csv", "ese.csv"}) {
    CHECK(count_lines(read_file(dir / name)) == 1 + 15 * 6);
  }
  CHECK(fs::exists(dir / "balance_boxplot.csv"));
  const auto j = nlohmann::json::parse(read_file(dir / "study.json"));
  CHECK(j["facets"].size() == 15);
  CHECK(j["facets"][0]["estimators"].size() == 6);
}

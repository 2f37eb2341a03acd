#include "mrddi/cli_io.hpp"

#include "mrddi/diagnostics.hpp"
#include "mrddi/errors.hpp"
#include "mrddi/textio.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace mrddi {

using nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------- config

void reject_unknown(const ordered_json& j, std::initializer_list<std::string_view> known, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (auto k : known) ok = ok || key == k;
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T read(const ordered_json& j, const char* key, T fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  try {
    return j[key].get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("key '") + key + "' has the wrong type");
  }
}

std::vector<std::string> read_names(const ordered_json& j, const char* key, std::vector<std::string> fallback = {}) {
  return read<std::vector<std::string>>(j, key, std::move(fallback));
}

ModelFamily parse_family(std::string_view s) {
  if (s == "multinomial") return ModelFamily::multinomial;
  if (s == "factored_binary") return ModelFamily::factored_binary;
  throw ConfigError("unknown model family '" + std::string(s) + "'");
}

std::string family_name(ModelFamily f) { return f == ModelFamily::multinomial ? "multinomial" : "factored_binary"; }

WeightMethod parse_method(std::string_view s) {
  if (s == "iptw" || s == "IPTW") return WeightMethod::iptw;
  if (s == "el" || s == "EL") return WeightMethod::el;
  if (s == "melcb" || s == "mELCB") return WeightMethod::melcb;
  throw ConfigError("unknown method '" + std::string(s) + "'");
}

LinkFunction parse_link(std::string_view s) {
  if (s == "identity") return LinkFunction::identity;
  if (s == "log") return LinkFunction::log;
  throw ConfigError("unknown link '" + std::string(s) + "'");
}

std::string default_name(const EstimatorSpec& e) {
  return e.method == WeightMethod::iptw ? "IPTW-" + e.iptw_model : to_string(e.method);
}

EstimatorSpec parse_estimator(const ordered_json& j, const std::vector<std::string>& default_balance) {
  if (!j.is_object()) throw ConfigError("each estimator must be an object");
  reject_unknown(j, {"name", "method", "model", "balance_covariates"}, "estimator");
  EstimatorSpec e;
  e.method = parse_method(read<std::string>(j, "method", "el"));
  e.iptw_model = read<std::string>(j, "model", "");
  e.balance_covariates = e.method == WeightMethod::melcb ? read_names(j, "balance_covariates", default_balance)
                                                         : std::vector<std::string>{};
  e.name = read<std::string>(j, "name", "");
  return e;
}

SimulationBlock parse_simulation(const ordered_json& j) {
  if (!j.is_object()) throw ConfigError("'simulation' must be an object");
  reject_unknown(j,
                 {"dgp", "n", "runs", "bootstrap_R", "prevalences", "xis", "target_prevalence_00", "xi", "model_set", "balance_covariates",
                  "calibration_mc_size", "oracle_mc_size", "estimators"},
                 "simulation");
  SimulationBlock s;
  try {
    s.dgp = parse_dgp(read<std::string>(j, "dgp", "logistic"));
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  s.n = read<Index>(j, "n", s.n);
  s.runs = read<int>(j, "runs", s.runs);
  s.bootstrap_R = read<int>(j, "bootstrap_R", s.bootstrap_R);
  s.prevalences = read<std::vector<double>>(j, "prevalences", s.prevalences);
  s.xis = read<std::vector<double>>(j, "xis", s.xis);
  if (j.contains("target_prevalence_00")) s.prevalences = {read<double>(j, "target_prevalence_00", 0.0)};
  if (j.contains("xi")) s.xis = {read<double>(j, "xi", 0.0)};
  s.model_set = read<std::string>(j, "model_set", s.model_set);
  s.balance_covariates = read_names(j, "balance_covariates", s.balance_covariates);
  s.calibration_mc_size = static_cast<Index>(read<double>(j, "calibration_mc_size", static_cast<double>(s.calibration_mc_size)));
  s.oracle_mc_size = static_cast<Index>(read<double>(j, "oracle_mc_size", static_cast<double>(s.oracle_mc_size)));
  if (j.contains("estimators")) {
    const auto names = read_names(j, "estimators");
    s.include_iptw = s.include_el = s.include_melcb = false;
    for (const auto& name : names) {
      switch (parse_method(name)) {
        case WeightMethod::iptw: s.include_iptw = true; break;
        case WeightMethod::el: s.include_el = true; break;
        case WeightMethod::melcb: s.include_melcb = true; break;
      }
    }
  }
  return s;
}

// ------------------------------------------------------------------- csv

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  out.push_back(std::move(field));
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

std::optional<double> parse_double(std::string_view cell) {
  if (cell.empty()) return std::nullopt;
  if (cell.front() == '+') cell.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (res.ec != std::errc() || res.ptr != cell.data() + cell.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

// --------------------------------------------------------------- outputs

ordered_json number_or_null(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

ordered_json number_or_null(const std::optional<double>& v) { return v ? number_or_null(*v) : ordered_json(nullptr); }

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::vector<std::string> models_used(const EstimationPlan& plan, const EstimatorSpec& e) {
  if (e.method == WeightMethod::iptw) return {e.iptw_model};
  std::vector<std::string> labels;
  for (const auto& m : plan.models) labels.push_back(m.label);
  return labels;
}

ordered_json models_json(const RunConfig& config) {
  ordered_json out = ordered_json::array();
  for (const auto& m : config.models) {
    out.push_back({{"label", m.label}, {"formula", m.formula}, {"family", family_name(m.family)}});
  }
  return out;
}

/// Throws the recorded error of the first failed estimator.
void require_success(const std::vector<EstimatorOutcome>& outcomes) {
  for (const auto& o : outcomes) {
    if (o.error) std::rethrow_exception(o.error);
  }
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

}  // namespace

std::string to_string(Command command) {
  switch (command) {
    case Command::estimate: return "estimate";
    case Command::diagnose: return "diagnose";
    case Command::simulate: return "simulate";
  }
  return "?";
}

Command parse_command(std::string_view text) {
  if (text == "estimate") return Command::estimate;
  if (text == "diagnose") return Command::diagnose;
  if (text == "simulate") return Command::simulate;
  throw ConfigError("unknown command '" + std::string(text) + "'");
}

RunConfig parse_run_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("configuration is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  reject_unknown(j,
                 {"schema_version", "command", "dataset_path", "outcome", "treat_a", "treat_b", "covariates",
                  "ignore", "model_formulas", "method", "iptw_model_label", "balance_covariates", "estimators", "link",
                  "bootstrap_R", "seed", "threads", "output_dir", "simulation"},
                 "configuration");

  RunConfig c;
  if (j.contains("schema_version") && read<int>(j, "schema_version", kSchemaVersion) != kSchemaVersion) {
    throw ConfigError("unsupported schema_version");
  }
  c.command = parse_command(read<std::string>(j, "command", "estimate"));

  if (j.contains("dataset_path")) {
    DatasetColumns cols;
    cols.path = read<std::string>(j, "dataset_path", "");
    if (cols.path.empty()) throw ConfigError("dataset_path is empty");
    if (cols.path.is_relative() && !base_dir.empty()) cols.path = base_dir / cols.path;
    cols.outcome = read<std::string>(j, "outcome", cols.outcome);
    cols.treat_a = read<std::string>(j, "treat_a", cols.treat_a);
    cols.treat_b = read<std::string>(j, "treat_b", cols.treat_b);
    cols.covariates = read_names(j, "covariates");
    cols.ignore = read_names(j, "ignore", cols.ignore);
    c.dataset = std::move(cols);
  }

  if (j.contains("model_formulas")) {
    const auto& models = j["model_formulas"];
    if (!models.is_array()) throw ConfigError("'model_formulas' must be an array");
    for (const auto& m : models) {
      if (!m.is_object()) throw ConfigError("each model formula must be an object");
      reject_unknown(m, {"label", "formula", "family"}, "model formula");
      ModelEntry e;
      e.label = read<std::string>(m, "label", "");
      e.formula = read<std::string>(m, "formula", "");
      e.family = parse_family(read<std::string>(m, "family", "multinomial"));
      if (e.label.empty()) throw ConfigError("every model formula needs a label");
      c.models.push_back(std::move(e));
    }
  }

  const auto balance = read_names(j, "balance_covariates");
  if (j.contains("estimators")) {
    if (!j["estimators"].is_array()) throw ConfigError("'estimators' must be an array");
    for (const auto& e : j["estimators"]) c.estimators.push_back(parse_estimator(e, balance));
  } else {
    EstimatorSpec e;
    e.method = parse_method(read<std::string>(j, "method", "el"));
    e.iptw_model = read<std::string>(j, "iptw_model_label", "");
    if (e.method == WeightMethod::iptw && e.iptw_model.empty() && c.models.size() == 1) e.iptw_model = c.models[0].label;
    if (e.method == WeightMethod::melcb) e.balance_covariates = balance;
    c.estimators.push_back(std::move(e));
  }
  for (auto& e : c.estimators) {
    if (e.name.empty()) e.name = default_name(e);
  }

  c.link = parse_link(read<std::string>(j, "link", "identity"));
  c.bootstrap_R = read<int>(j, "bootstrap_R", c.bootstrap_R);
  c.seed = read<std::uint64_t>(j, "seed", c.seed);
  c.threads = read<int>(j, "threads", c.threads);
  c.output_dir = read<std::string>(j, "output_dir", ".");
  if (j.contains("simulation")) c.simulation = parse_simulation(j["simulation"]);
  if (!j.contains("simulation") || !j["simulation"].contains("bootstrap_R")) c.simulation.bootstrap_R = c.bootstrap_R;
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read configuration file '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_config(text.str(), path.parent_path());
}

void validate_run_config(const RunConfig& c) {
  if (c.threads < 1) throw ConfigError("threads must be at least 1");
  if (c.command == Command::simulate) {
    const auto& s = c.simulation;
    if (s.prevalences.empty() || s.xis.empty()) throw ConfigError("simulation needs prevalences and xis");
    if (s.model_set != "with_truth" && s.model_set != "all_wrong" && s.model_set != "config") {
      throw ConfigError("simulation.model_set must be with_truth, all_wrong or config");
    }
    if (s.model_set == "config" && c.models.empty()) throw ConfigError("simulation.model_set 'config' needs model_formulas");
    try {
      check_config(make_simulation_config(c));
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
    return;
  }

  if (!c.dataset) throw ConfigError(to_string(c.command) + " needs a dataset");
  if (c.models.empty()) throw ConfigError(to_string(c.command) + " needs at least one model formula");
  if (c.estimators.empty()) throw ConfigError("no estimator configured");
  if (c.bootstrap_R < 0 || c.bootstrap_R == 1) throw ConfigError("bootstrap_R must be 0 or at least 2");
  std::set<std::string> labels;
  for (const auto& m : c.models) {
    if (!labels.insert(m.label).second) throw ConfigError("duplicate model label '" + m.label + "'");
  }
  std::set<std::string> names;
  for (const auto& e : c.estimators) {
    if (!names.insert(e.name).second) throw ConfigError("duplicate estimator name '" + e.name + "'");
    if (e.method == WeightMethod::iptw) {
      if (e.iptw_model.empty()) throw ConfigError("IPTW needs exactly one model; set iptw_model_label");
      if (!labels.count(e.iptw_model)) throw ConfigError("IPTW model '" + e.iptw_model + "' is not defined");
    }
    if (e.method == WeightMethod::melcb && e.balance_covariates.empty()) {
      throw ConfigError("mELCB needs at least one balance covariate");
    }
  }
}

Dataset load_csv(const DatasetColumns& columns) {
  std::ifstream in(columns.path, std::ios::binary);
  if (!in) throw SchemaError("cannot open dataset '" + columns.path.string() + "'");

  std::string line;
  if (!std::getline(in, line)) throw SchemaError("dataset '" + columns.path.string() + "' is empty");
  if (line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header = split_csv_line(line);
  for (auto& h : header) h = trim(h);

  auto position = [&](const std::string& name) {
    for (std::size_t k = 0; k < header.size(); ++k) {
      if (header[k] == name) return k;
    }
    throw SchemaError("dataset has no column '" + name + "'");
  };
  const std::size_t y_col = position(columns.outcome);
  const std::size_t a_col = position(columns.treat_a);
  const std::size_t b_col = position(columns.treat_b);

  std::vector<std::string> cov_names = columns.covariates;
  if (cov_names.empty()) {
    for (const auto& h : header) {
      const bool skip = h == columns.outcome || h == columns.treat_a || h == columns.treat_b ||
                        std::find(columns.ignore.begin(), columns.ignore.end(), h) != columns.ignore.end();
      if (!skip) cov_names.push_back(h);
    }
  }
  std::vector<std::size_t> cov_cols;
  for (const auto& name : cov_names) cov_cols.push_back(position(name));

  std::vector<double> y, x;
  std::vector<int> a, b;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    ++row;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw SchemaError("row " + std::to_string(row) + " has " + std::to_string(cells.size()) + " fields, header has " +
                        std::to_string(header.size()));
    }
    auto number = [&](std::size_t col) {
      const std::string cell = trim(cells[col]);
      const auto v = parse_double(cell);
      if (!v) throw CsvParseError(row, header[col], cell);
      return *v;
    };
    auto treatment = [&](std::size_t col) {
      const double v = number(col);
      if (v != 0.0 && v != 1.0) {
        throw ValidationError("non-binary treatment: column '" + header[col] + "' has value " + trim(cells[col]) +
                              " at row " + std::to_string(row));
      }
      return static_cast<int>(v);
    };
    y.push_back(number(y_col));
    a.push_back(treatment(a_col));
    b.push_back(treatment(b_col));
    for (std::size_t col : cov_cols) x.push_back(number(col));
  }

  Dataset d;
  const auto n = static_cast<Index>(y.size());
  const auto p = static_cast<Index>(cov_cols.size());
  d.outcome = Eigen::Map<Eigen::VectorXd>(y.data(), n);
  d.treat_a = Eigen::Map<Eigen::VectorXi>(a.data(), n);
  d.treat_b = Eigen::Map<Eigen::VectorXi>(b.data(), n);
  d.covariates = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(x.data(), n, p);
  d.covariate_names = cov_names;
  require_valid(d);
  return d;
}

EstimationPlan make_plan(const RunConfig& config, std::span<const std::string> covariate_names) {
  EstimationPlan plan;
  for (const auto& m : config.models) plan.models.push_back(make_model_spec(m.label, m.formula, covariate_names, m.family));
  plan.estimators = config.estimators;
  plan.link = config.link;
  return plan;
}

SimulationConfig make_simulation_config(const RunConfig& config) {
  const auto& s = config.simulation;
  SimulationConfig cfg;
  cfg.dgp = s.dgp;
  cfg.n = s.n;
  cfg.runs = s.runs;
  cfg.bootstrap_R = s.bootstrap_R;
  cfg.target_prevalence_00 = s.prevalences.empty() ? cfg.target_prevalence_00 : s.prevalences.front();
  cfg.xi = s.xis.empty() ? cfg.xi : s.xis.front();
  if (s.model_set == "with_truth") {
    cfg.model_set = models_with_truth();
  } else if (s.model_set == "all_wrong") {
    cfg.model_set = models_all_wrong();
  } else {
    cfg.model_set.clear();
    for (const auto& m : config.models) {
      cfg.model_set.push_back(make_model_spec(m.label, m.formula, simulation_covariate_names(), m.family));
    }
  }
  cfg.balance_covariates = s.balance_covariates;
  cfg.seed = config.seed;
  cfg.calibration_mc_size = s.calibration_mc_size;
  cfg.oracle_mc_size = s.oracle_mc_size;
  cfg.threads = config.threads;
  cfg.include_iptw = s.include_iptw;
  cfg.include_el = s.include_el;
  cfg.include_melcb = s.include_melcb;
  return cfg;
}

Artifacts run_estimate(const RunConfig& config) {
  const Dataset d = load_csv(*config.dataset);
  const EstimationPlan plan = make_plan(config, d.covariate_names);
  const auto outcomes = bootstrap_plan(d, plan, config.bootstrap_R, config.seed, config.threads);
  require_success(outcomes);

  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = "estimate";
  j["n"] = d.n();
  j["link"] = to_string(config.link);
  j["bootstrap_R"] = config.bootstrap_R;
  j["seed"] = config.seed;
  j["models"] = models_json(config);
  auto& estimates = j["estimates"] = ordered_json::array();

  std::ostringstream csv;
  csv << "Method,Model,DDI,Standard error,95% CI\n";
  for (std::size_t e = 0; e < outcomes.size(); ++e) {
    const auto& spec = plan.estimators[e];
    const auto& est = *outcomes[e].estimate;
    const auto used = models_used(plan, spec);
    ordered_json r;
    r["name"] = spec.name;
    r["method"] = to_string(spec.method);
    r["models"] = used;
    r["balance_covariates"] = spec.balance_covariates;
    r["theta"] = est.theta;
    r["se"] = number_or_null(est.se);
    r["ci"] = est.se ? ordered_json::array({*est.ci_low, *est.ci_high}) : ordered_json(nullptr);
    auto& means = r["arm_means"] = ordered_json::object();
    for (Arm arm : kArms) means[arm_label(arm)] = est.arm_means[arm_index(arm)];
    r["replicates_total"] = est.replicates_total;
    r["replicates_failed"] = est.replicates_failed;
    r["warnings"] = est.warnings;
    estimates.push_back(std::move(r));

    csv << csv_field(spec.name) << ',' << csv_field(join(used, ";")) << ',' << format_number(est.theta) << ','
        << (est.se ? format_number(*est.se) : "") << ','
        << (est.se ? csv_field("(" + format_number(*est.ci_low) + ", " + format_number(*est.ci_high) + ")") : "")
        << '\n';
  }
  return {{"estimate.json", dump(j)}, {"estimate.csv", csv.str()}};
}

Artifacts run_diagnose(const RunConfig& config) {
  const Dataset d = load_csv(*config.dataset);
  EstimationPlan plan = make_plan(config, d.covariate_names);
  plan.keep_weights = true;
  const auto outcomes = evaluate_plan(d, plan);
  require_success(outcomes);

  std::vector<BalanceReport> reports;
  const auto base = unweighted_sets(arm_partition(d));
  reports.push_back(balance_report(d, base, "unweighted"));
  for (std::size_t e = 0; e < outcomes.size(); ++e) {
    reports.push_back(balance_report(d, *outcomes[e].weights, plan.estimators[e].name));
  }

  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = "diagnose";
  j["n"] = d.n();
  j["models"] = models_json(config);
  j["cutoffs"] = {{"overall", kOverallCutoff}, {"pairwise", kPairwiseCutoff}};
  j["reports"] = ordered_json::parse(balance_json(reports));

  std::ostringstream counts;
  counts << "method,count_overall_above_0.2,count_pairwise_above_0.1,skipped\n";
  for (const auto& r : reports) {
    counts << csv_field(r.method) << ',' << r.count_overall_above_cutoff() << ',' << r.count_pairwise_above_cutoff()
           << ',' << csv_field(join(r.skipped, ";")) << '\n';
  }
  return {{"balance.csv", balance_csv(reports)}, {"balance_counts.csv", counts.str()}, {"balance.json", dump(j)}};
}

Artifacts run_simulate(const RunConfig& config) {
  const SimulationConfig base = make_simulation_config(config);
  const auto& s = config.simulation;
  const auto reports = run_grid(base, s.prevalences, s.xis);

  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = "simulate";
  j["config"] = {
      {"dgp", to_string(base.dgp)},
      {"n", base.n},
      {"runs", base.runs},
      {"bootstrap_R", base.bootstrap_R},
      {"seed", base.seed},
      {"prevalences", s.prevalences},
      {"xis", s.xis},
      {"model_set", s.model_set},
      {"balance_covariates", base.balance_covariates},
      {"calibration_mc_size", base.calibration_mc_size},
      {"oracle_mc_size", base.oracle_mc_size},
  };
  auto& models = j["config"]["models"] = ordered_json::array();
  for (const auto& m : base.model_set) {
    std::vector<std::string> terms;
    for (const auto& t : m.terms) terms.push_back(to_string(t));
    models.push_back({{"label", m.label}, {"formula", terms.empty() ? "1" : join(terms, " + ")}});
  }
  auto& facets = j["facets"] = ordered_json::array();

  std::ostringstream relbias, coverage, ese, boxplot;
  relbias << "estimator,dgp,prevalence,xi,true_ddi,mean_relative_bias,runs_ok,failures\n";
  coverage << "estimator,dgp,prevalence,xi,coverage,runs_ok\n";
  ese << "estimator,dgp,prevalence,xi,empirical_se,mean_bootstrap_se\n";
  boxplot << "dgp,prevalence,xi,run,method,covariate,psb_overall\n";

  for (const auto& rep : reports) {
    const auto& cfg = rep.config;
    const std::string dgp = to_string(cfg.dgp);
    const std::string prev = format_number(cfg.target_prevalence_00);
    const std::string xi = format_number(cfg.xi);
    ordered_json f;
    f["dgp"] = dgp;
    f["prevalence"] = cfg.target_prevalence_00;
    f["xi"] = cfg.xi;
    f["calibration"] = {{"parameter", rep.calibration.parameter},
                        {"achieved_prevalence", rep.calibration.achieved_prevalence},
                        {"mc_size", rep.calibration.mc_size}};
    f["oracle_true_ddi"] = rep.oracle_true_ddi;
    auto& ests = f["estimators"] = ordered_json::array();
    for (const auto& e : rep.estimators) {
      ests.push_back({{"name", e.name},
                      {"runs_ok", e.runs_ok},
                      {"failures", e.failures},
                      {"mean_relative_bias", number_or_null(e.mean_relative_bias)},
                      {"coverage", number_or_null(e.coverage)},
                      {"empirical_se", number_or_null(e.empirical_se)},
                      {"mean_bootstrap_se", number_or_null(e.mean_bootstrap_se)}});
      relbias << csv_field(e.name) << ',' << dgp << ',' << prev << ',' << xi << ',' << format_number(rep.oracle_true_ddi)
              << ',' << format_number(e.mean_relative_bias) << ',' << e.runs_ok << ',' << e.failures << '\n';
      coverage << csv_field(e.name) << ',' << dgp << ',' << prev << ',' << xi << ',' << format_number(e.coverage) << ','
               << e.runs_ok << '\n';
      ese << csv_field(e.name) << ',' << dgp << ',' << prev << ',' << xi << ',' << format_number(e.empirical_se) << ','
          << format_number(e.mean_bootstrap_se) << '\n';
    }
    facets.push_back(std::move(f));
    for (const auto& b : rep.balance) {
      boxplot << dgp << ',' << prev << ',' << xi << ',' << b.run << ',' << csv_field(b.method) << ','
              << csv_field(b.covariate) << ',' << format_number(b.psb_overall) << '\n';
    }
  }
  return {{"study.json", dump(j)},
          {"relbias.csv", relbias.str()},
          {"coverage.csv", coverage.str()},
          {"ese.csv", ese.str()},
          {"balance_boxplot.csv", boxplot.str()}};
}

std::string error_json(const std::exception& e) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  auto& err = j["error"];
  if (const auto* mine = dynamic_cast<const Error*>(&e)) {
    err["module"] = mine->module();
    err["kind"] = mine->kind();
  } else {
    err["module"] = "cli-io";
    err["kind"] = "InternalError";
  }
  err["message"] = e.what();
  return dump(j);
}

int run_command(const RunConfig& config) {
  std::error_code ec;
  std::filesystem::create_directories(config.output_dir, ec);
  auto write = [&](const std::string& name, const std::string& body) {
    std::ofstream out(config.output_dir / name, std::ios::binary | std::ios::trunc);
    out << body;
    return static_cast<bool>(out);
  };
  try {
    validate_run_config(config);
    Artifacts artifacts;
    switch (config.command) {
      case Command::estimate: artifacts = run_estimate(config); break;
      case Command::diagnose: artifacts = run_diagnose(config); break;
      case Command::simulate: artifacts = run_simulate(config); break;
    }
    std::filesystem::remove(config.output_dir / "error.json", ec);
    for (const auto& [name, body] : artifacts) {
      if (!write(name, body)) throw Error("cli-io", "IoError", "cannot write '" + (config.output_dir / name).string() + "'");
    }
    return 0;
  } catch (const std::exception& e) {
    write("error.json", error_json(e));
    return 1;
  }
}

}  // namespace mrddi

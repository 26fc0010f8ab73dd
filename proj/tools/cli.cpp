#include "cli.hpp"

#include <cmath>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "fraudsel/config.hpp"
#include "fraudsel/criteria.hpp"
#include "fraudsel/datagen.hpp"
#include "fraudsel/experiments.hpp"
#include "fraudsel/ingest.hpp"
#include "fraudsel/io.hpp"
#include "fraudsel/model_io.hpp"
#include "fraudsel/ridge.hpp"
#include "fraudsel/tree_boost.hpp"
#include "fraudsel/validation.hpp"

namespace fraudsel::cli {

namespace {

namespace fs = std::filesystem;

struct Common {
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string out_dir = ".";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Master random seed");
  cmd->add_option("--threads", c.threads, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--out-dir", c.out_dir, "Directory for output files");
}

std::vector<double> default_taus() {
  std::vector<double> taus;
  for (int j = 1; j <= 99; ++j) taus.push_back(j / 100.0);
  return taus;
}

// --- simulate -------------------------------------------------------------

int simulate(const std::string& config_path, std::optional<std::size_t> replicates, const Common& c,
             std::ostream& out) {
  ExperimentConfig config = experiment_config_from_json(load_json_file(config_path));
  if (c.seed) config.master_seed = *c.seed;
  if (replicates) config.replicates = *replicates;
  config.validate();
  const StudyResult result = run_study(config, c.threads);
  write_study_outputs(result, config, c.out_dir);

  out << "replicates ok " << result.table.successful << ", failed " << result.table.failed << '\n';
  for (const auto& r : result.records) {
    if (!r.ok) out << "replicate " << r.replicate << " failed: " << r.error << '\n';
  }
  out << std::left << std::setw(18) << "plan" << std::setw(8) << "crit" << std::setw(12) << "avg_all"
      << "avg_focus\n";
  for (const auto& row : result.table.rows) {
    out << std::left << std::setw(18) << row.plan << std::setw(8) << to_string(row.criterion)
        << std::setw(12) << format_double(std::round(row.average_all * 1e4) / 1e4)
        << format_double(std::round(row.average_focus * 1e4) / 1e4) << '\n';
  }
  out << "wrote " << (fs::path(c.out_dir) / "summary.csv").string() << '\n';
  return kOk;
}

// --- generate -------------------------------------------------------------

int generate(const std::string& config_path, Eigen::Index n, const std::string& file, const Common& c,
             std::ostream& out) {
  const json j = load_json_file(config_path);
  // Accept a bare DGP recipe or a study file carrying one under "dgp".
  const DgpConfig dgp = dgp_config_from_json(j.contains("dgp") ? j.at("dgp") : j);
  const DgpSpec spec = materialize(dgp);
  Rng rng(derive_seed(c.seed.value_or(1), 1));
  const GeneratedDataset g = generate_dataset(spec, n, rng);

  std::string csv = "y";
  for (const auto& name : g.data.feature_names) csv += "," + name;
  csv += '\n';
  for (Eigen::Index i = 0; i < g.data.x.rows(); ++i) {
    csv += std::to_string(g.data.y[static_cast<std::size_t>(i)]);
    for (Eigen::Index k = 0; k < g.data.x.cols(); ++k) csv += "," + format_double(g.data.x(i, k));
    csv += '\n';
  }
  const fs::path path = fs::path(c.out_dir) / file;
  write_file_atomic(path, csv);
  out << "wrote " << path.string() << " (" << n << " rows, " << g.data.positives() << " positives, intercept "
      << format_double(g.intercept) << ")\n";
  return kOk;
}

// --- standin --------------------------------------------------------------

int standin(const StandinOptions& opts, const Common& c, std::ostream& out) {
  Rng rng(derive_seed(c.seed.value_or(1), 2));
  const fs::path csv = fs::path(c.out_dir) / "standin.csv";
  const fs::path spec = fs::path(c.out_dir) / "standin_select.json";
  write_file_atomic(csv, standin_csv(opts, rng));
  const json select_config = {{"ingest", to_json(standin_spec(opts))},
                              {"estimator", {{"type", "ridge"}, {"lambda_grid_length", 30}}},
                              {"plan", {{"scheme", "cv"}, {"folds", 2}, {"parity", "single"}}},
                              {"criterion", "fraud"}};
  write_file_atomic(spec, select_config.dump(2) + "\n");
  out << "wrote " << csv.string() << " and " << spec.string() << '\n';
  return kOk;
}

// --- select ---------------------------------------------------------------

int select(const std::string& config_path, const std::string& train_path, const Common& c,
           const std::string& model_file, std::ostream& out, std::ostream& err) {
  const json j = load_json_file(config_path);
  for (const auto& [key, value] : j.items()) {
    if (key != "ingest" && key != "estimator" && key != "plan" && key != "criterion" && key != "taus") {
      throw ConfigError("unknown field '" + key + "' in select config");
    }
  }
  const IngestionSpec ingest = ingestion_spec_from_json(j.value("ingest", json::object()));
  const EstimatorConfig est = estimator_config_from_json(j.value("estimator", json::object()));
  ValidationPlan plan = plan_from_json(j.value("plan", json{{"scheme", "cv"}, {"folds", 2}, {"parity", "single"}}));
  const Criterion criterion = criterion_from_string(get_or<std::string>(j, "criterion", "fraud"));
  const std::vector<double> taus = get_or<std::vector<double>>(j, "taus", default_taus());
  for (double t : taus) {
    if (!(t > 0.0 && t <= 1.0)) throw ConfigError("taus must lie in (0, 1]");
  }
  if (c.seed) plan.seed = *c.seed;

  const IngestResult data = ingest_csv(read_csv(train_path), ingest);
  for (const auto& w : data.warnings) err << "warning: " << w << '\n';
  const Dataset& train = data.train;
  train.validate();

  const Fitter fitter = make_fitter(est, train);
  const ModelPath path = fitter(train);
  const ValidationRun run = run_validation(fitter, train, plan, c.threads);

  json selections = json::array();
  std::vector<std::size_t> chosen;
  if (criterion == Criterion::Auc) {
    const Selection s = select_tuning(run.auc());
    selections.push_back({{"tau", nullptr}, {"index", s.index}, {"tuning", s.tuning_value}});
    chosen.push_back(s.index);
  } else {
    for (double t : taus) {
      const Selection s = select_tuning(run.fraud_loss(t));
      selections.push_back({{"tau", t}, {"index", s.index}, {"tuning", s.tuning_value}});
      chosen.push_back(s.index);
    }
  }

  json model = {{"format", "fraudsel-model"},
                {"version", 1},
                {"ingest", to_json(ingest)},
                {"preprocessor", data.preprocessor.to_json()},
                {"estimator", to_json(est)},
                {"plan", to_json(plan)},
                {"criterion", to_string(criterion)},
                {"tuning_values", path.tuning_values()},
                {"selections", selections},
                {"train_rows", train.rows()},
                {"train_positives", train.positives()}};
  if (path.family() == PathFamily::Ridge) {
    json fits = json::object();
    for (std::size_t idx : chosen) fits[std::to_string(idx)] = to_json(ridge_model_at(path, idx));
    model["family"] = "ridge";
    model["fits"] = fits;
  } else {
    // The staged model up to the largest selected round covers every selection.
    const auto& grid = path.tuning_values();
    std::size_t m = 0;
    for (std::size_t idx : chosen) m = std::max(m, static_cast<std::size_t>(grid[idx]));
    const auto full = std::make_shared<const BoostModel>(fit_boost(train, est.m_max, est.boost));
    model["family"] = "boost";
    model["booster"] = to_json(full->truncated(m));
  }
  const fs::path model_path = fs::path(c.out_dir) / model_file;
  write_file_atomic(model_path, model.dump(1) + "\n");
  out << "trained on " << train.rows() << " rows x " << train.cols() << " features; " << selections.size()
      << " selection(s); wrote " << model_path.string() << '\n';
  return kOk;
}

// --- evaluate -------------------------------------------------------------

int evaluate(const std::string& model_path, const std::string& test_path, const std::vector<std::size_t>& k_grid,
             bool all_rows, const Common& c, std::ostream& out, std::ostream& err) {
  const json model = load_json_file(model_path);
  if (get_or<std::string>(model, "format", "") != "fraudsel-model") {
    throw ConfigError(model_path + " is not a fraudsel model file");
  }
  IngestionSpec ingest = ingestion_spec_from_json(model.at("ingest"));
  const Preprocessor pre = Preprocessor::from_json(model.at("preprocessor"));
  const CsvTable table = read_csv(test_path);

  std::vector<std::size_t> rows;
  if (!all_rows && !ingest.period_column.empty()) {
    const std::size_t pc = table.column(ingest.period_column);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      std::string period = table.rows[r][pc];
      period.erase(0, period.find_first_not_of(" \t"));
      period.erase(period.find_last_not_of(" \t") + 1);
      if (std::find(ingest.test_periods.begin(), ingest.test_periods.end(), period) != ingest.test_periods.end()) {
        rows.push_back(r);
      }
    }
  } else {
    for (std::size_t r = 0; r < table.rows.size(); ++r) rows.push_back(r);
  }
  std::vector<std::string> warnings;
  const Dataset test = pre.transform(table, rows, &warnings);
  for (const auto& w : warnings) err << "warning: " << w << '\n';
  const std::size_t n = test.rows();
  if (n == 0) throw DataError("no evaluation rows in " + test_path);

  std::vector<std::size_t> ks = k_grid;
  if (ks.empty()) ks = default_k_grid(n);
  for (std::size_t k : ks) {
    if (k < 1 || k > n) {
      throw ConfigError("k=" + std::to_string(k) + " is outside [1, n_test=" + std::to_string(n) + "]");
    }
  }

  const auto& selections = model.at("selections");
  const std::string family = get_or<std::string>(model, "family", "");
  std::optional<BoostModel> booster;
  if (family == "boost") booster = boost_model_from_json(model.at("booster"));
  std::map<std::size_t, std::vector<std::uint32_t>> curves;
  auto curve_for = [&](const json& sel) -> const std::vector<std::uint32_t>& {
    const auto idx = sel.at("index").get<std::size_t>();
    auto it = curves.find(idx);
    if (it != curves.end()) return it->second;
    Eigen::VectorXd margin;
    if (family == "ridge") {
      margin = ridge_model_from_json(model.at("fits").at(std::to_string(idx))).margin(test.x);
    } else if (booster) {
      margin = booster->staged_margin(test.x, static_cast<std::size_t>(sel.at("tuning").get<double>()));
    } else {
      throw ConfigError("model family '" + family + "' is not supported");
    }
    return curves.emplace(idx, false_positive_curve(test.y, {margin.data(), static_cast<std::size_t>(margin.size())}))
        .first->second;
  };

  std::string csv = "k,tau,selected_tau,tuning,false_positives,fraud_loss\n";
  for (std::size_t k : ks) {
    const double tau = static_cast<double>(k) / static_cast<double>(n);
    // Selection whose tau is nearest this k's (first on ties).
    const json* best = &selections.at(0);
    double best_gap = std::numeric_limits<double>::infinity();
    for (const auto& sel : selections) {
      const double gap = sel.at("tau").is_null() ? 0.0 : std::abs(sel.at("tau").get<double>() - tau);
      if (gap < best_gap) {
        best_gap = gap;
        best = &sel;
      }
    }
    const auto fp = curve_for(*best)[k];
    csv += std::to_string(k) + "," + format_double(tau) + "," +
           (best->at("tau").is_null() ? std::string() : format_double(best->at("tau").get<double>())) + "," +
           format_double(best->at("tuning").get<double>()) + "," + std::to_string(fp) + "," +
           format_double(static_cast<double>(fp) / static_cast<double>(k)) + "\n";
  }
  const fs::path path = fs::path(c.out_dir) / "evaluation.csv";
  write_file_atomic(path, csv);
  out << "evaluated " << n << " rows (" << test.positives() << " positives) at " << ks.size() << " k values; wrote "
      << path.string() << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Model complexity selection by top-k fraud loss", "fraudsel"};
  app.require_subcommand(1);

  Common common;
  std::string config_path;
  std::string data_path;
  std::optional<std::size_t> replicates;
  auto* sim = app.add_subcommand("simulate", "Run a simulation study from a config file");
  sim->add_option("config", config_path, "Study config (JSON)")->required();
  sim->add_option("--replicates", replicates, "Override the replicate count");
  add_common(sim, common);

  Eigen::Index n_rows = 1000;
  std::string out_file = "data.csv";
  auto* gen = app.add_subcommand("generate", "Write a synthetic dataset as CSV");
  gen->add_option("config", config_path, "DGP config (JSON)")->required();
  gen->add_option("-n,--rows", n_rows, "Number of rows")->check(CLI::PositiveNumber);
  gen->add_option("--output", out_file, "Output file name");
  add_common(gen, common);

  StandinOptions standin_opts;
  auto* sta = app.add_subcommand("standin", "Write a synthetic multi-period register and a select config");
  sta->add_option("--periods", standin_opts.periods)->check(CLI::Range(2, 1000));
  sta->add_option("--rows-per-period", standin_opts.rows_per_period)->check(CLI::PositiveNumber);
  add_common(sta, common);

  std::string model_file = "model.json";
  auto* sel = app.add_subcommand("select", "Fit a path, select tuning values and save the model");
  sel->add_option("config", config_path, "Select config (JSON)")->required();
  sel->add_option("train", data_path, "Training CSV")->required();
  sel->add_option("--model", model_file, "Model file name");
  add_common(sel, common);

  std::vector<std::size_t> k_grid;
  bool all_rows = false;
  auto* eva = app.add_subcommand("evaluate", "Test fraud loss of a saved model per k");
  eva->add_option("model", config_path, "Model file")->required();
  eva->add_option("test", data_path, "Test CSV")->required();
  eva->add_option("--k-grid", k_grid, "Selection sizes (comma separated)")->delimiter(',');
  eva->add_flag("--all-rows", all_rows, "Use every row instead of the model's test periods");
  add_common(eva, common);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*sim) return simulate(config_path, replicates, common, out);
    if (*gen) return generate(config_path, n_rows, out_file, common, out);
    if (*sta) return standin(standin_opts, common, out);
    if (*sel) return select(config_path, data_path, common, model_file, out, err);
    if (*eva) return evaluate(config_path, data_path, k_grid, all_rows, common, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericalError;
  } catch (const json::exception& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kConfigError;
}

}  // namespace fraudsel::cli

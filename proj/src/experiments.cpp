#include "fraudsel/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fraudsel/criteria.hpp"
#include "fraudsel/io.hpp"

namespace fraudsel {

namespace {

constexpr std::uint64_t kTrainStream = 1;
constexpr std::uint64_t kTestStream = 2;
constexpr std::uint64_t kPlanStream = 1000;

bool in_focus(std::size_t k, std::size_t n_test, double low, double high) {
  const double tau = static_cast<double>(k) / static_cast<double>(n_test);
  return tau >= low - 1e-12 && tau <= high + 1e-12;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (n_train < 2 || n_test < 1) throw ConfigError("n_train must be >= 2 and n_test >= 1");
  if (replicates < 1) throw ConfigError("replicates must be at least 1");
  if (plans.empty()) throw ConfigError("at least one validation plan is required");
  if (criteria.empty()) throw ConfigError("at least one criterion is required");
  if (k_grid.empty()) throw ConfigError("k_grid must not be empty");
  for (std::size_t i = 0; i < k_grid.size(); ++i) {
    const auto k = k_grid[i];
    if (k < 1 || k > static_cast<std::size_t>(n_test)) {
      throw ConfigError("k_grid value " + std::to_string(k) + " outside [1, n_test=" +
                        std::to_string(n_test) + "]");
    }
    if (i > 0 && k <= k_grid[i - 1]) throw ConfigError("k_grid must be strictly ascending");
  }
  if (!(focus_low <= focus_high)) throw ConfigError("focus band must satisfy low <= high");
  for (const auto& plan : plans) plan.validate();
}

std::vector<std::size_t> default_k_grid(std::size_t n_test) {
  std::vector<std::size_t> grid;
  for (int j = 1; j <= 99; ++j) {
    const auto k = static_cast<std::size_t>(std::floor(j * static_cast<double>(n_test) / 100.0 + 0.5));
    if (k >= 1 && k <= n_test && (grid.empty() || grid.back() != k)) grid.push_back(k);
  }
  if (grid.empty()) grid.push_back(1);
  return grid;
}

ExperimentConfig experiment_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("study config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    static const char* allowed[] = {"dgp",     "n_train",    "n_test",   "estimator",
                                    "plans",   "criteria",   "k_grid",   "focus",
                                    "replicates", "master_seed"};
    if (std::find_if(std::begin(allowed), std::end(allowed), [&](const char* a) { return key == a; }) ==
        std::end(allowed)) {
      throw ConfigError("unknown field '" + key + "' in study config");
    }
  }
  ExperimentConfig c;
  c.dgp = dgp_config_from_json(j.value("dgp", json::object()));
  c.n_train = get_or<Eigen::Index>(j, "n_train", c.n_train);
  c.n_test = get_or<Eigen::Index>(j, "n_test", c.n_test);
  c.estimator = estimator_config_from_json(j.value("estimator", json::object()));
  if (!j.contains("plans")) throw ConfigError("study config needs 'plans'");
  c.plans = plans_from_json(j.at("plans"));
  if (j.contains("criteria")) {
    c.criteria.clear();
    for (const auto& name : get_or<std::vector<std::string>>(j, "criteria", {})) {
      c.criteria.push_back(criterion_from_string(name));
    }
  }
  if (c.n_test < 1) throw ConfigError("n_test must be positive");
  c.k_grid = j.contains("k_grid") ? get_or<std::vector<std::size_t>>(j, "k_grid", {})
                                  : default_k_grid(static_cast<std::size_t>(c.n_test));
  if (j.contains("focus")) {
    const auto focus = get_or<std::vector<double>>(j, "focus", {});
    if (focus.size() != 2) throw ConfigError("focus must be [low, high]");
    c.focus_low = focus[0];
    c.focus_high = focus[1];
  }
  c.replicates = get_or<std::size_t>(j, "replicates", c.replicates);
  c.master_seed = get_or<std::uint64_t>(j, "master_seed", c.master_seed);
  c.validate();
  return c;
}

json to_json(const ExperimentConfig& c) {
  json plans = json::array();
  for (const auto& p : c.plans) plans.push_back(to_json(p));
  json criteria = json::array();
  for (auto cr : c.criteria) criteria.push_back(to_string(cr));
  return {{"dgp", to_json(c.dgp)},
          {"n_train", c.n_train},
          {"n_test", c.n_test},
          {"estimator", to_json(c.estimator)},
          {"plans", plans},
          {"criteria", criteria},
          {"k_grid", c.k_grid},
          {"focus", {c.focus_low, c.focus_high}},
          {"replicates", c.replicates},
          {"master_seed", c.master_seed}};
}

ReplicateRecord run_replicate(const ExperimentConfig& config, const DgpSpec& spec, std::size_t s,
                              int threads) {
  ReplicateRecord rec;
  rec.replicate = s;
  rec.k_grid = config.k_grid;
  try {
    const std::uint64_t rs = derive_seed(config.master_seed, s);
    Rng train_rng(derive_seed(rs, kTrainStream));
    Rng test_rng(derive_seed(rs, kTestStream));
    const GeneratedDataset train = generate_dataset(spec, config.n_train, train_rng);
    const GeneratedDataset test = generate_dataset(spec, config.n_test, test_rng);
    rec.train_intercept = train.intercept;
    rec.test_intercept = test.intercept;
    rec.train_positives = train.data.positives();
    rec.test_positives = test.data.positives();

    const Fitter fitter = make_fitter(config.estimator, train.data);
    const ModelPath path = fitter(train.data);
    rec.tuning_values = path.tuning_values();
    const std::size_t t_count = path.size();

    const Eigen::MatrixXd test_margins = path.margins(test.data.x);
    std::vector<std::vector<std::uint32_t>> test_fp(t_count);
    for (std::size_t t = 0; t < t_count; ++t) {
      const Eigen::VectorXd col = test_margins.col(static_cast<Eigen::Index>(t));
      test_fp[t] = false_positive_curve(test.data.y, std::span<const double>(col.data(), col.size()));
    }

    const std::size_t nk = config.k_grid.size();
    rec.oracle_index.assign(nk, 0);
    rec.oracle_fp.assign(nk, 0);
    for (std::size_t i = 0; i < nk; ++i) {
      const std::size_t k = config.k_grid[i];
      std::size_t best = 0;
      for (std::size_t t = 1; t < t_count; ++t) {
        if (test_fp[t][k] < test_fp[best][k]) best = t;
      }
      rec.oracle_index[i] = best;
      rec.oracle_fp[i] = test_fp[best][k];
    }

    for (std::size_t pi = 0; pi < config.plans.size(); ++pi) {
      ValidationPlan plan = config.plans[pi];
      plan.seed = derive_seed(derive_seed(rs, kPlanStream + pi), plan.seed);
      const ValidationRun run = run_validation(fitter, train.data, plan, threads);
      if (run.tuning_values != rec.tuning_values) {
        throw NumericalError("validation grid differs from the full-data path");
      }
      for (const Criterion criterion : config.criteria) {
        SelectionRecord sel;
        sel.plan = plan.name;
        sel.criterion = criterion;
        sel.selected_index.resize(nk);
        sel.selected_fp.resize(nk);
        if (criterion == Criterion::Auc) {
          const std::size_t idx = select_tuning(run.auc()).index;
          std::fill(sel.selected_index.begin(), sel.selected_index.end(), idx);
        } else {
          for (std::size_t i = 0; i < nk; ++i) {
            const double tau =
                static_cast<double>(config.k_grid[i]) / static_cast<double>(config.n_test);
            sel.selected_index[i] = select_tuning(run.fraud_loss(tau)).index;
          }
        }
        for (std::size_t i = 0; i < nk; ++i) {
          sel.selected_fp[i] = test_fp[sel.selected_index[i]][config.k_grid[i]];
        }
        rec.selections.push_back(std::move(sel));
      }
    }
    rec.ok = true;
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.error = e.what();
    rec.selections.clear();
  }
  return rec;
}

double relative_fraud_loss(std::span<const double> selected_losses,
                           std::span<const double> oracle_losses) {
  if (selected_losses.size() != oracle_losses.size() || selected_losses.empty()) {
    throw std::invalid_argument("relative_fraud_loss needs equal, nonempty loss lists");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < selected_losses.size(); ++i) {
    num += selected_losses[i];
    den += oracle_losses[i];
  }
  if (den == 0.0) return num == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  return num / den;
}

const RflRow& RflTable::row(const std::string& plan, Criterion criterion) const {
  for (const auto& r : rows) {
    if (r.plan == plan && r.criterion == criterion) return r;
  }
  throw std::out_of_range("no RFL row for plan '" + plan + "' and criterion " + to_string(criterion));
}

RflTable aggregate_rfl(std::span<const ReplicateRecord> records, std::span<const std::size_t> k_grid,
                       std::size_t n_test, double focus_low, double focus_high) {
  if (k_grid.empty()) throw ConfigError("k_grid must not be empty");
  RflTable table;
  table.k_grid.assign(k_grid.begin(), k_grid.end());
  table.n_test = n_test;
  table.focus_low = focus_low;
  table.focus_high = focus_high;

  std::vector<const ReplicateRecord*> ok;
  for (const auto& r : records) {
    if (r.ok) ok.push_back(&r);
  }
  table.successful = ok.size();
  table.failed = records.size() - ok.size();
  if (ok.empty()) throw DataError("no replicate succeeded");

  // Columns of the grid in each record.
  auto column = [&](const ReplicateRecord& r, std::size_t k) {
    const auto it = std::lower_bound(r.k_grid.begin(), r.k_grid.end(), k);
    if (it == r.k_grid.end() || *it != k) {
      throw DataError("replicate " + std::to_string(r.replicate) + " lacks k=" + std::to_string(k));
    }
    return static_cast<std::size_t>(it - r.k_grid.begin());
  };

  for (std::size_t si = 0; si < ok.front()->selections.size(); ++si) {
    RflRow row;
    row.plan = ok.front()->selections[si].plan;
    row.criterion = ok.front()->selections[si].criterion;
    std::size_t focus_count = 0;
    for (const std::size_t k : k_grid) {
      std::vector<double> sel_loss;
      std::vector<double> opt_loss;
      for (const ReplicateRecord* r : ok) {
        const auto& s = r->selections.at(si);
        if (s.plan != row.plan || s.criterion != row.criterion) {
          throw DataError("replicate records disagree on plan order");
        }
        const std::size_t c = column(*r, k);
        sel_loss.push_back(static_cast<double>(s.selected_fp[c]) / static_cast<double>(k));
        opt_loss.push_back(static_cast<double>(r->oracle_fp[c]) / static_cast<double>(k));
      }
      const double rfl = relative_fraud_loss(sel_loss, opt_loss);
      double ms = 0.0;
      double mo = 0.0;
      for (std::size_t i = 0; i < sel_loss.size(); ++i) {
        ms += sel_loss[i];
        mo += opt_loss[i];
      }
      row.k.push_back(k);
      row.rfl.push_back(rfl);
      row.mean_selected.push_back(ms / static_cast<double>(sel_loss.size()));
      row.mean_oracle.push_back(mo / static_cast<double>(opt_loss.size()));
      row.average_all += rfl;
      if (in_focus(k, n_test, focus_low, focus_high)) {
        row.average_focus += rfl;
        ++focus_count;
      }
    }
    row.average_all /= static_cast<double>(row.k.size());
    row.average_focus = focus_count > 0 ? row.average_focus / static_cast<double>(focus_count)
                                        : std::numeric_limits<double>::quiet_NaN();
    table.rows.push_back(std::move(row));
  }
  return table;
}

StudyResult run_study(const ExperimentConfig& config, int threads) {
  config.validate();
  const DgpSpec spec = materialize(config.dgp);
  StudyResult result;
  result.records.resize(config.replicates);
  // Replicates go to the pool when there are enough of them; otherwise the
  // threads are spent inside each replicate's validation.
  const bool outer = threads > 1 && config.replicates >= static_cast<std::size_t>(threads);
  parallel_for(config.replicates, outer ? threads : 1, [&](std::size_t s) {
    result.records[s] = run_replicate(config, spec, s, outer ? 1 : threads);
  });
  result.table = aggregate_rfl(result.records, config.k_grid, static_cast<std::size_t>(config.n_test),
                               config.focus_low, config.focus_high);
  return result;
}

std::string rfl_by_k_csv(const RflTable& table) {
  std::ostringstream out;
  out << "plan,criterion,k,tau,rfl,mean_selected_loss,mean_oracle_loss\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.k.size(); ++i) {
      out << row.plan << ',' << to_string(row.criterion) << ',' << row.k[i] << ','
          << format_double(static_cast<double>(row.k[i]) / static_cast<double>(table.n_test)) << ','
          << format_double(row.rfl[i]) << ',' << format_double(row.mean_selected[i]) << ','
          << format_double(row.mean_oracle[i]) << '\n';
    }
  }
  return out.str();
}

std::string summary_csv(const RflTable& table, std::span<const ValidationPlan> plans) {
  std::ostringstream out;
  out << "plan,scheme,folds,repeats,stratified,criterion,avg_rfl_all,avg_rfl_focus,replicates_ok,"
         "replicates_failed\n";
  for (const auto& row : table.rows) {
    std::string scheme = "custom";
    int folds = 0;
    int repeats = 1;
    bool stratified = false;
    for (const auto& p : plans) {
      if (p.name != row.plan) continue;
      if (const auto* cv = std::get_if<CvScheme>(&p.scheme)) {
        scheme = "cv";
        folds = cv->folds;
        repeats = cv->repeats;
        stratified = cv->stratified;
      } else {
        const auto& b = std::get<BootstrapScheme>(p.scheme);
        scheme = "bootstrap";
        folds = b.folds;
        stratified = b.stratified;
      }
    }
    out << row.plan << ',' << scheme << ',' << folds << ',' << repeats << ','
        << (stratified ? "true" : "false") << ',' << to_string(row.criterion) << ','
        << format_double(row.average_all) << ',' << format_double(row.average_focus) << ','
        << table.successful << ',' << table.failed << '\n';
  }
  return out.str();
}

json to_json(const ReplicateRecord& r) {
  json j = {{"replicate", r.replicate}, {"ok", r.ok}};
  if (!r.ok) {
    j["error"] = r.error;
    return j;
  }
  j["train_intercept"] = r.train_intercept;
  j["test_intercept"] = r.test_intercept;
  j["train_positives"] = r.train_positives;
  j["test_positives"] = r.test_positives;
  j["tuning_values"] = r.tuning_values;
  j["k_grid"] = r.k_grid;
  j["oracle_index"] = r.oracle_index;
  j["oracle_fp"] = r.oracle_fp;
  json sels = json::array();
  for (const auto& s : r.selections) {
    sels.push_back({{"plan", s.plan},
                    {"criterion", to_string(s.criterion)},
                    {"selected_index", s.selected_index},
                    {"selected_fp", s.selected_fp}});
  }
  j["selections"] = sels;
  return j;
}

std::string records_jsonl(std::span<const ReplicateRecord> records) {
  std::string out;
  for (const auto& r : records) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

void write_study_outputs(const StudyResult& result, const ExperimentConfig& config,
                         const std::filesystem::path& dir) {
  write_file_atomic(dir / "rfl_by_k.csv", rfl_by_k_csv(result.table));
  write_file_atomic(dir / "summary.csv", summary_csv(result.table, config.plans));
  write_file_atomic(dir / "records.jsonl", records_jsonl(result.records));
}

}  // namespace fraudsel

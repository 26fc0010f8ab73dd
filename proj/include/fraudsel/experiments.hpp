#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fraudsel/config.hpp"
#include "fraudsel/datagen.hpp"
#include "fraudsel/validation.hpp"

namespace fraudsel {

struct ExperimentConfig {
  DgpConfig dgp;
  Eigen::Index n_train = 1000;
  Eigen::Index n_test = 1000;
  EstimatorConfig estimator;
  std::vector<ValidationPlan> plans;
  std::vector<Criterion> criteria{Criterion::FraudLoss, Criterion::Auc};
  std::vector<std::size_t> k_grid;  // ascending, within [1, n_test]
  // Sub-grid of k/n_test averaged separately (inclusive bounds).
  double focus_low = 0.16;
  double focus_high = 0.25;
  std::size_t replicates = 100;
  std::uint64_t master_seed = 1;

  void validate() const;
};

// k_j = round(j/100 * n_test) for j = 1..99, deduplicated.
std::vector<std::size_t> default_k_grid(std::size_t n_test);

// Parses a study file. Missing k_grid falls back to default_k_grid.
ExperimentConfig experiment_config_from_json(const json& j);
json to_json(const ExperimentConfig& config);

// Selected tuning index and resulting test false positives at every grid k.
struct SelectionRecord {
  std::string plan;
  Criterion criterion = Criterion::FraudLoss;
  std::vector<std::size_t> selected_index;
  std::vector<std::uint32_t> selected_fp;
};

struct ReplicateRecord {
  std::size_t replicate = 0;
  bool ok = false;
  std::string error;
  double train_intercept = 0.0;
  double test_intercept = 0.0;
  std::size_t train_positives = 0;
  std::size_t test_positives = 0;
  std::vector<double> tuning_values;
  std::vector<std::size_t> k_grid;
  // Per grid k: tuning index with the fewest test false positives (lowest
  // index on ties) and that count.
  std::vector<std::size_t> oracle_index;
  std::vector<std::uint32_t> oracle_fp;
  std::vector<SelectionRecord> selections;
};

// Deterministic in (config, s). Errors are caught and stored in the record.
ReplicateRecord run_replicate(const ExperimentConfig& config, const DgpSpec& spec, std::size_t s,
                              int threads = 1);

// Sum of selected FP/k over replicates divided by the same sum for the
// oracle. 0/0 is 1.
double relative_fraud_loss(std::span<const double> selected_losses,
                           std::span<const double> oracle_losses);

struct RflRow {
  std::string plan;
  Criterion criterion = Criterion::FraudLoss;
  std::vector<std::size_t> k;
  std::vector<double> rfl;
  std::vector<double> mean_selected;  // mean FP/k over replicates
  std::vector<double> mean_oracle;
  double average_all = 0.0;
  double average_focus = 0.0;
};

struct RflTable {
  std::vector<std::size_t> k_grid;
  std::size_t n_test = 0;
  double focus_low = 0.16;
  double focus_high = 0.25;
  std::vector<RflRow> rows;
  std::size_t successful = 0;
  std::size_t failed = 0;

  const RflRow& row(const std::string& plan, Criterion criterion) const;
};

// Averages RFL over the whole grid and over k with k/n_test inside the focus
// band. Throws DataError if no replicate succeeded.
RflTable aggregate_rfl(std::span<const ReplicateRecord> records, std::span<const std::size_t> k_grid,
                       std::size_t n_test, double focus_low = 0.16, double focus_high = 0.25);

struct StudyResult {
  RflTable table;
  std::vector<ReplicateRecord> records;
};

StudyResult run_study(const ExperimentConfig& config, int threads = 1);

std::string rfl_by_k_csv(const RflTable& table);
std::string summary_csv(const RflTable& table, std::span<const ValidationPlan> plans);
std::string records_jsonl(std::span<const ReplicateRecord> records);
json to_json(const ReplicateRecord& record);

// rfl_by_k.csv, summary.csv and records.jsonl under `dir`.
void write_study_outputs(const StudyResult& result, const ExperimentConfig& config,
                         const std::filesystem::path& dir);

}  // namespace fraudsel

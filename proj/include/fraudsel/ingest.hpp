#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fraudsel/common.hpp"
#include "fraudsel/config.hpp"
#include "fraudsel/rng.hpp"

namespace fraudsel {

// Header plus string cells. line[i] is the 1-based source line of row i.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line;

  std::size_t column(const std::string& name) const;  // throws DataError
};

// RFC 4180 quoting; CRLF tolerated. Ragged rows raise DataError.
CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::filesystem::path& path);

// "", "NA", "NaN", "nan" and "?" count as missing.
bool is_missing_token(const std::string& cell);

enum class ColumnRole { Numeric, Categorical, Binary, Ignore };

struct IngestionSpec {
  std::string label_column = "y";
  std::vector<std::string> numeric;
  std::vector<std::string> categorical;
  std::vector<std::string> binary;
  std::vector<std::string> ignore;
  // Role of columns not listed above; nullopt makes them an error.
  std::optional<ColumnRole> default_role;

  // Split by period: rows whose period is listed go to train or test.
  std::string period_column;
  std::vector<std::string> train_periods;
  std::vector<std::string> test_periods;
  // Otherwise the last test_fraction of rows (file order) is the test set.
  double test_fraction = 0.0;

  ColumnRole role_of(const std::string& column) const;
};

IngestionSpec ingestion_spec_from_json(const json& j);
json to_json(const IngestionSpec& spec);

struct ColumnEncoding {
  std::string name;
  ColumnRole role = ColumnRole::Numeric;
  double median = 0.0;              // numeric and binary imputation value
  std::vector<std::string> levels;  // categorical, first-seen order in training
};

// Train-fitted recoding: numeric median imputation, one-hot categoricals with
// an extra missing level, binary pass-through.
class Preprocessor {
 public:
  Preprocessor() = default;
  static Preprocessor fit(const CsvTable& table, std::span<const std::size_t> rows,
                          const IngestionSpec& spec);

  // Unseen categorical levels map to the missing indicator and are reported
  // through `warnings` once per (column, level).
  Dataset transform(const CsvTable& table, std::span<const std::size_t> rows,
                    std::vector<std::string>* warnings = nullptr) const;

  const std::vector<ColumnEncoding>& columns() const { return columns_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  const std::string& label_column() const { return label_; }

  json to_json() const;
  static Preprocessor from_json(const json& j);

 private:
  void build_names();

  std::string label_;
  std::vector<ColumnEncoding> columns_;
  std::vector<std::string> feature_names_;
};

struct IngestResult {
  Dataset train;
  Dataset test;
  Preprocessor preprocessor;
  std::vector<std::string> warnings;
};

IngestResult ingest_csv(const CsvTable& table, const IngestionSpec& spec);

// Synthetic stand-in for a multi-period audit register: mixed column types,
// missing values and about 20% positives.
struct StandinOptions {
  int periods = 12;
  std::size_t rows_per_period = 650;
  int numeric = 20;
  int categorical = 4;
  int binary = 6;
  double missing_rate = 0.05;
  double positive_rate = 0.2;
};

std::string standin_csv(const StandinOptions& opts, Rng& rng);
// Matching spec: train on periods 6..11, test on period 12.
IngestionSpec standin_spec(const StandinOptions& opts);

}  // namespace fraudsel

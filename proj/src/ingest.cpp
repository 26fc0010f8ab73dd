#include "fraudsel/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "fraudsel/datagen.hpp"
#include "fraudsel/io.hpp"

namespace fraudsel {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_number(const std::string& cell) {
  const std::string t = trim(cell);
  if (t.empty()) return std::nullopt;
  const char* begin = t.data();
  if (*begin == '+') ++begin;
  double value = 0.0;
  const auto res = std::from_chars(begin, t.data() + t.size(), value);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

const char* role_name(ColumnRole role) {
  switch (role) {
    case ColumnRole::Numeric:
      return "numeric";
    case ColumnRole::Categorical:
      return "categorical";
    case ColumnRole::Binary:
      return "binary";
    case ColumnRole::Ignore:
      return "ignore";
  }
  return "ignore";
}

ColumnRole role_from_name(const std::string& name) {
  if (name == "numeric") return ColumnRole::Numeric;
  if (name == "categorical") return ColumnRole::Categorical;
  if (name == "binary") return ColumnRole::Binary;
  if (name == "ignore") return ColumnRole::Ignore;
  throw ConfigError("unknown column role '" + name + "'");
}

bool contains(const std::vector<std::string>& list, const std::string& value) {
  return std::find(list.begin(), list.end(), value) != list.end();
}

double median_of(std::vector<double> values) {
  if (values.empty()) return 0.0;
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

std::string cell_context(const CsvTable& t, std::size_t row, std::size_t col) {
  return "line " + std::to_string(t.line[row]) + ", column '" + t.header[col] + "'";
}

int parse_label(const CsvTable& t, std::size_t row, std::size_t col) {
  const auto v = parse_number(t.rows[row][col]);
  if (!v || (*v != 0.0 && *v != 1.0)) {
    throw DataError("label must be 0 or 1 at " + cell_context(t, row, col) + ", got '" +
                    t.rows[row][col] + "'");
  }
  return *v == 1.0 ? 1 : 0;
}

}  // namespace

bool is_missing_token(const std::string& cell) {
  const std::string t = trim(cell);
  return t.empty() || t == "NA" || t == "NaN" || t == "nan" || t == "?";
}

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw DataError("column '" + name + "' not found in header");
  return static_cast<std::size_t>(it - header.begin());
}

CsvTable parse_csv(const std::string& text) {
  CsvTable table;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t line = 1;
  std::size_t record_line = 1;

  auto end_record = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
    const bool blank = record.size() == 1 && record[0].empty();
    if (!blank) {
      if (table.header.empty()) {
        table.header = std::move(record);
      } else {
        if (record.size() != table.header.size()) {
          throw DataError("line " + std::to_string(record_line) + ": expected " +
                          std::to_string(table.header.size()) + " fields, found " +
                          std::to_string(record.size()));
        }
        table.rows.push_back(std::move(record));
        table.line.push_back(record_line);
      }
    }
    record.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      record.push_back(std::move(field));
      field.clear();
      field_started = false;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      end_record();
      ++line;
      record_line = line;
    } else {
      field += c;
      field_started = true;
    }
  }
  if (quoted) throw DataError("line " + std::to_string(record_line) + ": unterminated quote");
  if (!field.empty() || !record.empty()) end_record();
  if (table.header.empty()) throw DataError("CSV has no header");
  for (const auto& name : table.header) {
    if (std::count(table.header.begin(), table.header.end(), name) > 1) {
      throw DataError("duplicate column '" + name + "' in header");
    }
  }
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) { return parse_csv(read_file(path)); }

ColumnRole IngestionSpec::role_of(const std::string& column) const {
  if (column == period_column || contains(ignore, column)) return ColumnRole::Ignore;
  if (contains(numeric, column)) return ColumnRole::Numeric;
  if (contains(categorical, column)) return ColumnRole::Categorical;
  if (contains(binary, column)) return ColumnRole::Binary;
  if (default_role) return *default_role;
  throw ConfigError("column '" + column + "' has no declared role");
}

IngestionSpec ingestion_spec_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("ingestion spec must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    static const std::set<std::string> allowed{"label",   "numeric",       "categorical",   "binary",
                                               "ignore",  "default_role",  "period_column", "train_periods",
                                               "test_periods", "test_fraction"};
    if (!allowed.count(key)) throw ConfigError("unknown field '" + key + "' in ingestion spec");
  }
  IngestionSpec s;
  s.label_column = get_or<std::string>(j, "label", s.label_column);
  s.numeric = get_or<std::vector<std::string>>(j, "numeric", {});
  s.categorical = get_or<std::vector<std::string>>(j, "categorical", {});
  s.binary = get_or<std::vector<std::string>>(j, "binary", {});
  s.ignore = get_or<std::vector<std::string>>(j, "ignore", {});
  if (j.contains("default_role")) s.default_role = role_from_name(get_or<std::string>(j, "default_role", ""));
  s.period_column = get_or<std::string>(j, "period_column", "");
  s.train_periods = get_or<std::vector<std::string>>(j, "train_periods", {});
  s.test_periods = get_or<std::vector<std::string>>(j, "test_periods", {});
  s.test_fraction = get_or<double>(j, "test_fraction", 0.0);
  if (!(s.test_fraction >= 0.0 && s.test_fraction < 1.0)) throw ConfigError("test_fraction must lie in [0, 1)");
  if (!s.period_column.empty() && (s.train_periods.empty() || s.test_periods.empty())) {
    throw ConfigError("period split needs train_periods and test_periods");
  }
  return s;
}

json to_json(const IngestionSpec& s) {
  json j = {{"label", s.label_column}, {"numeric", s.numeric},     {"categorical", s.categorical},
            {"binary", s.binary},      {"ignore", s.ignore},       {"test_fraction", s.test_fraction}};
  if (s.default_role) j["default_role"] = role_name(*s.default_role);
  if (!s.period_column.empty()) {
    j["period_column"] = s.period_column;
    j["train_periods"] = s.train_periods;
    j["test_periods"] = s.test_periods;
  }
  return j;
}

Preprocessor Preprocessor::fit(const CsvTable& table, std::span<const std::size_t> rows,
                               const IngestionSpec& spec) {
  Preprocessor pre;
  pre.label_ = spec.label_column;
  table.column(spec.label_column);
  std::vector<std::string> declared = spec.numeric;
  declared.insert(declared.end(), spec.categorical.begin(), spec.categorical.end());
  declared.insert(declared.end(), spec.binary.begin(), spec.binary.end());
  for (const auto& name : declared) table.column(name);

  for (std::size_t c = 0; c < table.header.size(); ++c) {
    const std::string& name = table.header[c];
    if (name == spec.label_column) continue;
    ColumnEncoding enc;
    enc.name = name;
    enc.role = spec.role_of(name);
    if (enc.role == ColumnRole::Ignore) continue;
    if (enc.role == ColumnRole::Categorical) {
      for (const std::size_t r : rows) {
        const std::string cell = trim(table.rows[r][c]);
        if (is_missing_token(cell)) continue;
        if (!contains(enc.levels, cell)) enc.levels.push_back(cell);
      }
    } else {
      std::vector<double> observed;
      for (const std::size_t r : rows) {
        const std::string& cell = table.rows[r][c];
        if (is_missing_token(cell)) continue;
        const auto v = parse_number(cell);
        if (!v) throw DataError("unparseable number '" + cell + "' at " + cell_context(table, r, c));
        if (enc.role == ColumnRole::Binary && *v != 0.0 && *v != 1.0) {
          throw DataError("binary column holds '" + cell + "' at " + cell_context(table, r, c));
        }
        observed.push_back(*v);
      }
      enc.median = median_of(std::move(observed));
    }
    pre.columns_.push_back(std::move(enc));
  }
  pre.build_names();
  return pre;
}

void Preprocessor::build_names() {
  feature_names_.clear();
  for (const auto& enc : columns_) {
    if (enc.role == ColumnRole::Categorical) {
      for (const auto& level : enc.levels) feature_names_.push_back(enc.name + "=" + level);
      feature_names_.push_back(enc.name + "=<missing>");
    } else {
      feature_names_.push_back(enc.name);
    }
  }
}

Dataset Preprocessor::transform(const CsvTable& table, std::span<const std::size_t> rows,
                                std::vector<std::string>* warnings) const {
  Dataset out;
  const auto n = static_cast<Eigen::Index>(rows.size());
  out.x = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(feature_names_.size()));
  out.y.resize(rows.size());
  out.feature_names = feature_names_;
  const std::size_t label_col = table.column(label_);
  for (std::size_t i = 0; i < rows.size(); ++i) out.y[i] = parse_label(table, rows[i], label_col);

  std::set<std::pair<std::string, std::string>> reported;
  std::string errors;
  std::size_t error_count = 0;
  Eigen::Index offset = 0;
  for (const auto& enc : columns_) {
    const std::size_t c = table.column(enc.name);
    if (enc.role == ColumnRole::Categorical) {
      const auto missing_slot = static_cast<Eigen::Index>(enc.levels.size());
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::string cell = trim(table.rows[rows[i]][c]);
        Eigen::Index slot = missing_slot;
        if (!is_missing_token(cell)) {
          const auto it = std::find(enc.levels.begin(), enc.levels.end(), cell);
          if (it != enc.levels.end()) {
            slot = static_cast<Eigen::Index>(it - enc.levels.begin());
          } else if (warnings && reported.emplace(enc.name, cell).second) {
            warnings->push_back("column '" + enc.name + "': unseen level '" + cell +
                                "' mapped to the missing indicator");
          }
        }
        out.x(static_cast<Eigen::Index>(i), offset + slot) = 1.0;
      }
      offset += missing_slot + 1;
      continue;
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const std::string& cell = table.rows[rows[i]][c];
      double value = enc.median;
      if (!is_missing_token(cell)) {
        const auto v = parse_number(cell);
        const bool bad = !v || (enc.role == ColumnRole::Binary && *v != 0.0 && *v != 1.0);
        if (bad) {
          if (error_count < 20) errors += "\n  unparseable '" + cell + "' at " + cell_context(table, rows[i], c);
          ++error_count;
          continue;
        }
        value = *v;
      }
      out.x(static_cast<Eigen::Index>(i), offset) = value;
    }
    ++offset;
  }
  if (error_count > 0) {
    throw DataError(std::to_string(error_count) + " unparseable cell(s):" + errors);
  }
  return out;
}

json Preprocessor::to_json() const {
  json cols = json::array();
  for (const auto& enc : columns_) {
    json c = {{"name", enc.name}, {"role", role_name(enc.role)}};
    if (enc.role == ColumnRole::Categorical) {
      c["levels"] = enc.levels;
    } else {
      c["median"] = enc.median;
    }
    cols.push_back(c);
  }
  return {{"label", label_}, {"columns", cols}};
}

Preprocessor Preprocessor::from_json(const json& j) {
  Preprocessor pre;
  pre.label_ = get_or<std::string>(j, "label", "y");
  if (!j.contains("columns") || !j.at("columns").is_array()) throw ConfigError("preprocessor needs 'columns'");
  for (const auto& c : j.at("columns")) {
    ColumnEncoding enc;
    enc.name = get_or<std::string>(c, "name", "");
    enc.role = role_from_name(get_or<std::string>(c, "role", "numeric"));
    enc.median = get_or<double>(c, "median", 0.0);
    enc.levels = get_or<std::vector<std::string>>(c, "levels", {});
    pre.columns_.push_back(std::move(enc));
  }
  pre.build_names();
  return pre;
}

IngestResult ingest_csv(const CsvTable& table, const IngestionSpec& spec) {
  const std::size_t label_col = table.column(spec.label_column);
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  if (!spec.period_column.empty()) {
    const std::size_t pc = table.column(spec.period_column);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      const std::string period = trim(table.rows[r][pc]);
      if (contains(spec.train_periods, period)) train_rows.push_back(r);
      else if (contains(spec.test_periods, period)) test_rows.push_back(r);
    }
  } else {
    const auto n = table.rows.size();
    const auto n_test = static_cast<std::size_t>(std::floor(spec.test_fraction * static_cast<double>(n)));
    for (std::size_t r = 0; r < n; ++r) (r < n - n_test ? train_rows : test_rows).push_back(r);
  }
  if (train_rows.empty()) throw DataError("training split is empty");
  // Labels are checked up front so a bad label is reported even when unused.
  for (std::size_t r = 0; r < table.rows.size(); ++r) parse_label(table, r, label_col);

  IngestResult result;
  result.preprocessor = Preprocessor::fit(table, train_rows, spec);
  result.train = result.preprocessor.transform(table, train_rows, &result.warnings);
  result.test = result.preprocessor.transform(table, test_rows, &result.warnings);
  return result;
}

std::string standin_csv(const StandinOptions& opts, Rng& rng) {
  const std::size_t n = static_cast<std::size_t>(opts.periods) * opts.rows_per_period;
  std::vector<std::vector<std::string>> cells(n);
  std::vector<double> latent(n, 0.0);
  std::vector<int> level_count(static_cast<std::size_t>(opts.categorical));
  for (int c = 0; c < opts.categorical; ++c) level_count[static_cast<std::size_t>(c)] = 3 + c % 4;

  std::ostringstream head;
  head << "period,y";
  for (int j = 0; j < opts.numeric; ++j) head << ",n" << j + 1;
  for (int j = 0; j < opts.categorical; ++j) head << ",c" << j + 1;
  for (int j = 0; j < opts.binary; ++j) head << ",b" << j + 1;

  for (std::size_t i = 0; i < n; ++i) {
    const int period = static_cast<int>(i / opts.rows_per_period) + 1;
    auto& row = cells[i];
    row.push_back(std::to_string(period));
    row.emplace_back();  // label, filled below
    for (int j = 0; j < opts.numeric; ++j) {
      // Skewed amounts for odd columns, symmetric scores for even ones.
      const double z = rng.normal();
      const double v = j % 2 == 0 ? z : std::exp(0.8 * z);
      if (j < 6) latent[i] += (j % 3 == 0 ? 0.6 : -0.4) * (j % 2 == 0 ? z : std::log1p(v));
      row.push_back(rng.uniform() < opts.missing_rate ? "NA" : format_double(std::round(v * 1e4) / 1e4));
    }
    for (int j = 0; j < opts.categorical; ++j) {
      const auto levels = static_cast<std::size_t>(level_count[static_cast<std::size_t>(j)]);
      std::size_t level = rng.below(levels);
      if (j == 0) latent[i] += 0.5 * static_cast<double>(level) - 0.5;
      std::string text = "L" + std::to_string(level);
      // A level that only appears in the final period.
      if (j == 1 && period == opts.periods && rng.uniform() < 0.02) text = "Lnew";
      row.push_back(rng.uniform() < opts.missing_rate ? "" : text);
    }
    for (int j = 0; j < opts.binary; ++j) {
      const bool bit = rng.bernoulli(0.3);
      if (j < 2 && bit) latent[i] += 0.7;
      row.push_back(bit ? "1" : "0");
    }
  }
  const double b0 = calibrate_intercept(latent, opts.positive_rate);
  std::string out = head.str() + "\n";
  for (std::size_t i = 0; i < n; ++i) {
    cells[i][1] = rng.bernoulli(sigmoid(b0 + latent[i])) ? "1" : "0";
    for (std::size_t c = 0; c < cells[i].size(); ++c) {
      if (c > 0) out += ',';
      out += cells[i][c];
    }
    out += '\n';
  }
  return out;
}

IngestionSpec standin_spec(const StandinOptions& opts) {
  IngestionSpec s;
  s.label_column = "y";
  for (int j = 0; j < opts.numeric; ++j) s.numeric.push_back("n" + std::to_string(j + 1));
  for (int j = 0; j < opts.categorical; ++j) s.categorical.push_back("c" + std::to_string(j + 1));
  for (int j = 0; j < opts.binary; ++j) s.binary.push_back("b" + std::to_string(j + 1));
  s.period_column = "period";
  const int last = opts.periods;
  for (int p = std::max(1, last - 6); p < last; ++p) s.train_periods.push_back(std::to_string(p));
  s.test_periods.push_back(std::to_string(last));
  return s;
}

}  // namespace fraudsel

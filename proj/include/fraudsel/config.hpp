#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fraudsel/datagen.hpp"
#include "fraudsel/ridge.hpp"
#include "fraudsel/tree_boost.hpp"
#include "fraudsel/validation.hpp"

namespace fraudsel {

using json = nlohmann::json;

// Declarative recipe for a DgpSpec. Either explicit values or the seeds that
// regenerate them are stored, so a recipe always rebuilds the same spec.
struct DgpConfig {
  Eigen::Index p = 50;
  std::uint64_t correlation_seed = 1;
  int correlation_blocks = 1;

  // Explicit margins, or empty to draw from the 17-family list with margin_seed.
  std::vector<MarginSpec> margins;
  std::uint64_t margin_seed = 2;

  enum class PredictorKind { Linear, Tree } predictor = PredictorKind::Linear;
  std::uint64_t predictor_seed = 3;
  // Linear: explicit coefficients, or n_nonzero draws from (coef_low, coef_high).
  std::vector<double> coefficients;
  Eigen::Index n_nonzero = 15;
  double coef_low = -0.77;
  double coef_high = 0.62;
  // Tree: active covariate count and ensemble settings.
  Eigen::Index active_count = 15;
  TreeDgpOptions tree;

  double p0 = 0.2;
  double copula_df = 2.0;
};

DgpConfig dgp_config_from_json(const json& j);
json to_json(const DgpConfig& config);
DgpSpec materialize(const DgpConfig& config);

enum class EstimatorKind { Ridge, Boost };

struct EstimatorConfig {
  EstimatorKind kind = EstimatorKind::Ridge;
  RidgeOptions ridge;
  std::size_t lambda_grid_length = 100;
  double lambda_ratio = 1e-4;
  BoostOptions boost;
  std::size_t m_max = 1000;
  std::size_t m_step = 1;

  // Stage grid 0, m_step, ..., m_max (m_max always included).
  std::vector<std::size_t> m_grid() const;
};

EstimatorConfig estimator_config_from_json(const json& j);
json to_json(const EstimatorConfig& config);

// Builds a fitter for `train`. For ridge the lambda grid is derived from
// `train` itself and then held fixed for every fold.
Fitter make_fitter(const EstimatorConfig& config, const Dataset& train);

// Plan entries accept explicit repeats or "parity": "single" | "double".
// The string presets "parity" (5 schemes x 4 variants) and "cv2_pair"
// (2-fold CV with 9 and 18 repetitions) expand to lists.
std::vector<ValidationPlan> plans_from_json(const json& j);
json to_json(const ValidationPlan& plan);
ValidationPlan plan_from_json(const json& j);

// Reads a JSON file; parse failures raise ConfigError.
json load_json_file(const std::filesystem::path& path);

// Fetches a typed field with a default; wrong types raise ConfigError.
template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace fraudsel

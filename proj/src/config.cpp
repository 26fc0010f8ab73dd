#include "fraudsel/config.hpp"

#include <fstream>

#include "fraudsel/io.hpp"

namespace fraudsel {

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& what) {
  if (!j.is_object()) throw ConfigError(what + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) throw ConfigError("unknown field '" + key + "' in " + what);
  }
}

MarginSpec margin_from_json(const json& j) {
  check_keys(j, {"family", "params"}, "margin");
  MarginSpec m;
  m.family = margin_family_from_string(get_or<std::string>(j, "family", ""));
  m.params = get_or<std::vector<double>>(j, "params", {});
  m.validate();
  return m;
}

json margin_to_json(const MarginSpec& m) { return {{"family", to_string(m.family)}, {"params", m.params}}; }

}  // namespace

DgpConfig dgp_config_from_json(const json& j) {
  check_keys(j, {"p", "correlation_seed", "correlation_blocks", "margins", "predictor", "p0", "copula_df"},
             "dgp config");
  DgpConfig c;
  c.p = get_or<Eigen::Index>(j, "p", c.p);
  c.correlation_seed = get_or<std::uint64_t>(j, "correlation_seed", c.correlation_seed);
  c.correlation_blocks = get_or<int>(j, "correlation_blocks", c.correlation_blocks);
  c.p0 = get_or<double>(j, "p0", c.p0);
  c.copula_df = get_or<double>(j, "copula_df", c.copula_df);
  if (c.p < 1) throw ConfigError("p must be positive");
  if (c.correlation_blocks < 1 || c.p % c.correlation_blocks != 0) {
    throw ConfigError("correlation_blocks must divide p");
  }
  if (!(c.p0 > 0.0 && c.p0 < 1.0)) throw ConfigError("p0 must lie in (0, 1)");

  if (j.contains("margins")) {
    const auto& m = j.at("margins");
    if (m.is_array()) {
      for (const auto& item : m) c.margins.push_back(margin_from_json(item));
      if (static_cast<Eigen::Index>(c.margins.size()) != c.p) {
        throw ConfigError("margins list length must equal p");
      }
    } else {
      check_keys(m, {"random", "seed"}, "margins");
      if (!get_or<bool>(m, "random", true)) {
        throw ConfigError("margins must be a list or {\"random\": true, \"seed\": ...}");
      }
      c.margin_seed = get_or<std::uint64_t>(m, "seed", c.margin_seed);
    }
  }

  if (j.contains("predictor")) {
    const auto& pr = j.at("predictor");
    const auto type = get_or<std::string>(pr, "type", "linear");
    if (type == "linear") {
      check_keys(pr, {"type", "coefficients", "n_nonzero", "coef_low", "coef_high", "seed"},
                 "linear predictor");
      c.predictor = DgpConfig::PredictorKind::Linear;
      c.coefficients = get_or<std::vector<double>>(pr, "coefficients", {});
      if (!c.coefficients.empty() && static_cast<Eigen::Index>(c.coefficients.size()) != c.p) {
        throw ConfigError("coefficient list length must equal p");
      }
      c.n_nonzero = get_or<Eigen::Index>(pr, "n_nonzero", c.n_nonzero);
      c.coef_low = get_or<double>(pr, "coef_low", c.coef_low);
      c.coef_high = get_or<double>(pr, "coef_high", c.coef_high);
      c.predictor_seed = get_or<std::uint64_t>(pr, "seed", c.predictor_seed);
    } else if (type == "tree") {
      check_keys(pr,
                 {"type", "active_count", "n_trees", "max_depth", "shrinkage", "min_leaf",
                  "construction_rows", "rate_positive", "rate_negative", "seed"},
                 "tree predictor");
      c.predictor = DgpConfig::PredictorKind::Tree;
      c.active_count = get_or<Eigen::Index>(pr, "active_count", c.active_count);
      c.tree.n_trees = get_or<std::size_t>(pr, "n_trees", c.tree.n_trees);
      c.tree.max_depth = get_or<int>(pr, "max_depth", c.tree.max_depth);
      c.tree.shrinkage = get_or<double>(pr, "shrinkage", c.tree.shrinkage);
      c.tree.min_leaf = get_or<int>(pr, "min_leaf", c.tree.min_leaf);
      c.tree.construction_rows = get_or<Eigen::Index>(pr, "construction_rows", c.tree.construction_rows);
      c.tree.rate_positive = get_or<double>(pr, "rate_positive", c.tree.rate_positive);
      c.tree.rate_negative = get_or<double>(pr, "rate_negative", c.tree.rate_negative);
      c.predictor_seed = get_or<std::uint64_t>(pr, "seed", c.predictor_seed);
    } else {
      throw ConfigError("predictor type must be 'linear' or 'tree', got '" + type + "'");
    }
  }
  return c;
}

json to_json(const DgpConfig& c) {
  json j;
  j["p"] = c.p;
  j["correlation_seed"] = c.correlation_seed;
  j["correlation_blocks"] = c.correlation_blocks;
  if (c.margins.empty()) {
    j["margins"] = {{"random", true}, {"seed", c.margin_seed}};
  } else {
    j["margins"] = json::array();
    for (const auto& m : c.margins) j["margins"].push_back(margin_to_json(m));
  }
  if (c.predictor == DgpConfig::PredictorKind::Linear) {
    json pr = {{"type", "linear"}, {"seed", c.predictor_seed}};
    if (!c.coefficients.empty()) {
      pr["coefficients"] = c.coefficients;
    } else {
      pr["n_nonzero"] = c.n_nonzero;
      pr["coef_low"] = c.coef_low;
      pr["coef_high"] = c.coef_high;
    }
    j["predictor"] = pr;
  } else {
    j["predictor"] = {{"type", "tree"},
                      {"active_count", c.active_count},
                      {"n_trees", c.tree.n_trees},
                      {"max_depth", c.tree.max_depth},
                      {"shrinkage", c.tree.shrinkage},
                      {"min_leaf", c.tree.min_leaf},
                      {"construction_rows", c.tree.construction_rows},
                      {"rate_positive", c.tree.rate_positive},
                      {"rate_negative", c.tree.rate_negative},
                      {"seed", c.predictor_seed}};
  }
  j["p0"] = c.p0;
  j["copula_df"] = c.copula_df;
  return j;
}

DgpSpec materialize(const DgpConfig& c) {
  Rng corr_rng(c.correlation_seed);
  const Eigen::Index base_dim = c.p / c.correlation_blocks;
  CorrelationMatrix base = sample_correlation_matrix(base_dim, corr_rng);
  CorrelationMatrix r = c.correlation_blocks == 1 ? std::move(base)
                                                  : build_block_correlation(base, c.correlation_blocks);

  std::vector<MarginSpec> margins = c.margins;
  if (margins.empty()) {
    Rng margin_rng(c.margin_seed);
    margins = random_standard_margins(static_cast<std::size_t>(c.p), margin_rng);
  }

  Rng pred_rng(c.predictor_seed);
  PredictorModel predictor;
  if (c.predictor == DgpConfig::PredictorKind::Linear) {
    LinearPredictor lin;
    if (!c.coefficients.empty()) {
      lin.coefficients = Eigen::Map<const Eigen::VectorXd>(c.coefficients.data(), c.p);
    } else {
      lin = make_linear_dgp(c.p, c.n_nonzero, c.coef_low, c.coef_high, pred_rng);
    }
    predictor = PredictorModel(std::move(lin));
  } else {
    predictor = PredictorModel(make_tree_dgp(r, margins, c.active_count, pred_rng, c.tree, c.copula_df), c.p);
  }
  DgpSpec spec{std::move(r), std::move(margins), std::move(predictor), c.p0, c.copula_df};
  spec.validate();
  return spec;
}

std::vector<std::size_t> EstimatorConfig::m_grid() const {
  std::vector<std::size_t> grid;
  const std::size_t step = std::max<std::size_t>(1, m_step);
  for (std::size_t m = 0; m < m_max; m += step) grid.push_back(m);
  grid.push_back(m_max);
  return grid;
}

EstimatorConfig estimator_config_from_json(const json& j) {
  EstimatorConfig c;
  const auto type = get_or<std::string>(j, "type", "ridge");
  if (type == "ridge") {
    check_keys(j, {"type", "lambda_grid_length", "lambda_ratio", "max_iterations", "standardize"},
               "ridge estimator");
    c.kind = EstimatorKind::Ridge;
    c.lambda_grid_length = get_or<std::size_t>(j, "lambda_grid_length", c.lambda_grid_length);
    c.lambda_ratio = get_or<double>(j, "lambda_ratio", c.lambda_ratio);
    c.ridge.max_iterations = get_or<int>(j, "max_iterations", c.ridge.max_iterations);
    c.ridge.standardize = get_or<bool>(j, "standardize", c.ridge.standardize);
    if (c.lambda_grid_length < 1) throw ConfigError("lambda_grid_length must be positive");
    if (!(c.lambda_ratio > 0.0 && c.lambda_ratio < 1.0)) throw ConfigError("lambda_ratio must lie in (0, 1)");
  } else if (type == "boost") {
    check_keys(j, {"type", "m_max", "m_step", "shrinkage", "max_depth", "min_leaf", "lambda_leaf"},
               "boost estimator");
    c.kind = EstimatorKind::Boost;
    c.m_max = get_or<std::size_t>(j, "m_max", c.m_max);
    c.m_step = get_or<std::size_t>(j, "m_step", c.m_step);
    c.boost.shrinkage = get_or<double>(j, "shrinkage", c.boost.shrinkage);
    c.boost.max_depth = get_or<int>(j, "max_depth", c.boost.max_depth);
    c.boost.min_leaf = get_or<int>(j, "min_leaf", c.boost.min_leaf);
    c.boost.lambda_leaf = get_or<double>(j, "lambda_leaf", c.boost.lambda_leaf);
    if (c.m_max < 1) throw ConfigError("m_max must be at least 1");
  } else {
    throw ConfigError("estimator type must be 'ridge' or 'boost', got '" + type + "'");
  }
  return c;
}

json to_json(const EstimatorConfig& c) {
  if (c.kind == EstimatorKind::Ridge) {
    return {{"type", "ridge"},
            {"lambda_grid_length", c.lambda_grid_length},
            {"lambda_ratio", c.lambda_ratio},
            {"max_iterations", c.ridge.max_iterations},
            {"standardize", c.ridge.standardize}};
  }
  return {{"type", "boost"},          {"m_max", c.m_max},
          {"m_step", c.m_step},       {"shrinkage", c.boost.shrinkage},
          {"max_depth", c.boost.max_depth}, {"min_leaf", c.boost.min_leaf},
          {"lambda_leaf", c.boost.lambda_leaf}};
}

Fitter make_fitter(const EstimatorConfig& config, const Dataset& train) {
  if (config.kind == EstimatorKind::Ridge) {
    auto grid = default_lambda_grid(train, config.lambda_grid_length, config.lambda_ratio, config.ridge);
    const RidgeOptions opts = config.ridge;
    return [grid = std::move(grid), opts](const Dataset& data) {
      return fit_ridge_path(data, grid, opts);
    };
  }
  const auto grid = config.m_grid();
  const std::size_t m_max = config.m_max;
  const BoostOptions opts = config.boost;
  return [grid, m_max, opts](const Dataset& data) {
    auto model = std::make_shared<const BoostModel>(fit_boost(data, m_max, opts));
    return as_model_path(std::move(model), grid);
  };
}

ValidationPlan plan_from_json(const json& j) {
  check_keys(j, {"name", "scheme", "folds", "repeats", "parity", "stratified", "seed"}, "plan");
  ValidationPlan plan;
  const auto scheme = get_or<std::string>(j, "scheme", "cv");
  const auto parity = get_or<std::string>(j, "parity", "");
  if (!parity.empty() && parity != "single" && parity != "double") {
    throw ConfigError("plan parity must be 'single' or 'double'");
  }
  const bool stratified = get_or<bool>(j, "stratified", false);
  plan.seed = get_or<std::uint64_t>(j, "seed", 0);
  if (scheme == "cv") {
    CvScheme cv;
    cv.folds = get_or<int>(j, "folds", 2);
    cv.repeats = parity.empty() ? get_or<int>(j, "repeats", 1) : parity_repetitions(cv.folds, parity == "double");
    cv.stratified = stratified;
    plan.scheme = cv;
    plan.name = "cv" + std::to_string(cv.folds) + "x" + std::to_string(cv.repeats) + (stratified ? "-strat" : "");
  } else if (scheme == "bootstrap") {
    BootstrapScheme boot;
    boot.folds = parity.empty() ? get_or<int>(j, "folds", parity_bootstrap_folds(false))
                                : parity_bootstrap_folds(parity == "double");
    boot.stratified = stratified;
    plan.scheme = boot;
    plan.name = "boot" + std::to_string(boot.folds) + (stratified ? "-strat" : "");
  } else {
    throw ConfigError("plan scheme must be 'cv' or 'bootstrap', got '" + scheme + "'");
  }
  plan.name = get_or<std::string>(j, "name", plan.name);
  plan.validate();
  return plan;
}

json to_json(const ValidationPlan& plan) {
  json j = {{"name", plan.name}, {"seed", plan.seed}};
  if (const auto* cv = std::get_if<CvScheme>(&plan.scheme)) {
    j["scheme"] = "cv";
    j["folds"] = cv->folds;
    j["repeats"] = cv->repeats;
    j["stratified"] = cv->stratified;
  } else {
    const auto& boot = std::get<BootstrapScheme>(plan.scheme);
    j["scheme"] = "bootstrap";
    j["folds"] = boot.folds;
    j["stratified"] = boot.stratified;
  }
  return j;
}

std::vector<ValidationPlan> plans_from_json(const json& j) {
  std::vector<ValidationPlan> plans;
  if (j.is_string()) {
    const auto preset = j.get<std::string>();
    if (preset == "parity") {
      for (const bool doubled : {false, true}) {
        for (const bool stratified : {false, true}) {
          for (const int folds : {10, 5, 3, 2}) {
            plans.push_back(plan_from_json({{"scheme", "cv"},
                                            {"folds", folds},
                                            {"parity", doubled ? "double" : "single"},
                                            {"stratified", stratified}}));
          }
          plans.push_back(plan_from_json(
              {{"scheme", "bootstrap"}, {"parity", doubled ? "double" : "single"}, {"stratified", stratified}}));
        }
      }
    } else if (preset == "cv2_pair") {
      plans.push_back(plan_from_json({{"scheme", "cv"}, {"folds", 2}, {"parity", "single"}}));
      plans.push_back(plan_from_json({{"scheme", "cv"}, {"folds", 2}, {"parity", "double"}}));
    } else {
      throw ConfigError("unknown plan preset '" + preset + "' (expected 'parity' or 'cv2_pair')");
    }
  } else if (j.is_array()) {
    for (const auto& item : j) plans.push_back(plan_from_json(item));
  } else {
    throw ConfigError("plans must be a preset name or a list");
  }
  if (plans.empty()) throw ConfigError("at least one validation plan is required");
  for (std::size_t a = 0; a < plans.size(); ++a) {
    for (std::size_t b = 0; b < a; ++b) {
      if (plans[a].name == plans[b].name) throw ConfigError("duplicate plan name '" + plans[a].name + "'");
    }
  }
  return plans;
}

json load_json_file(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
}

}  // namespace fraudsel

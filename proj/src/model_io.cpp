#include "fraudsel/model_io.hpp"

namespace fraudsel {

namespace {

Eigen::VectorXd vector_from(const json& j, const char* key) {
  const auto v = get_or<std::vector<double>>(j, key, {});
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

json to_json(const RidgeModel& m) {
  return {{"intercept", m.intercept},
          {"coefficients", to_std(m.coefficients)},
          {"lambda", m.lambda},
          {"mean", to_std(m.standardization.mean)},
          {"scale", to_std(m.standardization.scale)}};
}

RidgeModel ridge_model_from_json(const json& j) {
  RidgeModel m;
  m.intercept = get_or<double>(j, "intercept", 0.0);
  m.coefficients = vector_from(j, "coefficients");
  m.lambda = get_or<double>(j, "lambda", 0.0);
  m.standardization.mean = vector_from(j, "mean");
  m.standardization.scale = vector_from(j, "scale");
  const auto p = m.coefficients.size();
  if (m.standardization.mean.size() != p || m.standardization.scale.size() != p) {
    throw ConfigError("ridge model: coefficient and standardization lengths differ");
  }
  return m;
}

json to_json(const BoostModel& m) {
  json trees = json::array();
  for (const auto& tree : m.trees) {
    json nodes = json::array();
    for (const auto& n : tree.nodes()) {
      if (n.is_leaf()) {
        nodes.push_back({{"value", n.value}});
      } else {
        nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right}});
      }
    }
    trees.push_back(nodes);
  }
  return {{"base_score", m.base_score},
          {"shrinkage", m.shrinkage},
          {"max_depth", m.max_depth},
          {"loss", m.loss == BoostLoss::Logistic ? "logistic" : "squared"},
          {"trees", trees}};
}

BoostModel boost_model_from_json(const json& j) {
  BoostModel m;
  m.base_score = get_or<double>(j, "base_score", 0.0);
  m.shrinkage = get_or<double>(j, "shrinkage", 0.1);
  m.max_depth = get_or<int>(j, "max_depth", 3);
  m.loss = get_or<std::string>(j, "loss", "logistic") == "squared" ? BoostLoss::Squared : BoostLoss::Logistic;
  if (!j.contains("trees") || !j.at("trees").is_array()) throw ConfigError("boost model needs 'trees'");
  for (const auto& nodes_json : j.at("trees")) {
    std::vector<TreeNode> nodes;
    for (const auto& nj : nodes_json) {
      TreeNode n;
      n.feature = get_or<int>(nj, "feature", -1);
      n.threshold = get_or<double>(nj, "threshold", 0.0);
      n.left = get_or<int>(nj, "left", -1);
      n.right = get_or<int>(nj, "right", -1);
      n.value = get_or<double>(nj, "value", 0.0);
      const int size = static_cast<int>(nodes_json.size());
      const int self = static_cast<int>(nodes.size());
      if (!n.is_leaf() && (n.left <= self || n.right <= self || n.left >= size || n.right >= size)) {
        throw ConfigError("boost model: child index out of range");
      }
      nodes.push_back(n);
    }
    if (nodes.empty()) throw ConfigError("boost model: empty tree");
    m.trees.emplace_back(std::move(nodes));
  }
  return m;
}

}  // namespace fraudsel

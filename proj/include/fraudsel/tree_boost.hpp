#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fraudsel/common.hpp"
#include "fraudsel/model_path.hpp"

namespace fraudsel {

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
  // Diagnostics recorded at fit time.
  int count = 0;

  bool is_leaf() const { return feature < 0; }
};

// Binary regression tree; rows with x[feature] <= threshold go left.
class RegressionTree {
 public:
  RegressionTree() = default;
  explicit RegressionTree(std::vector<TreeNode> nodes);

  template <typename Row>
  double predict(const Row& row) const {
    int at = 0;
    while (!nodes_[static_cast<std::size_t>(at)].is_leaf()) {
      const auto& node = nodes_[static_cast<std::size_t>(at)];
      at = row[node.feature] <= node.threshold ? node.left : node.right;
    }
    return nodes_[static_cast<std::size_t>(at)].value;
  }

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::vector<TreeNode>& mutable_nodes() { return nodes_; }
  int depth() const;
  std::vector<int> split_features() const;

 private:
  std::vector<TreeNode> nodes_;
};

enum class BoostLoss { Logistic, Squared };

struct BoostOptions {
  double shrinkage = 0.1;
  int max_depth = 3;
  int min_leaf = 10;
  double lambda_leaf = 1.0;
  BoostLoss loss = BoostLoss::Logistic;
};

// f(x) = base_score + shrinkage * sum_j tree_j(x). For the logistic loss this
// is the log-odds.
struct BoostModel {
  double base_score = 0.0;
  std::vector<RegressionTree> trees;
  double shrinkage = 0.1;
  int max_depth = 3;
  BoostLoss loss = BoostLoss::Logistic;
  // training_loss[m] = mean training loss of the first m trees, m = 0..M.
  std::vector<double> training_loss;

  std::size_t size() const { return trees.size(); }

  // Raw additive predictor using the first m trees. Throws std::out_of_range
  // if m exceeds the number of trees.
  Eigen::VectorXd staged_margin(const Eigen::MatrixXd& x, std::size_t m) const;
  Eigen::VectorXd margin(const Eigen::MatrixXd& x) const { return staged_margin(x, size()); }
  // Columns are staged margins at each entry of m_grid (ascending).
  Eigen::MatrixXd staged_margins(const Eigen::MatrixXd& x, std::span<const std::size_t> m_grid) const;

  // Model truncated to its first m trees.
  BoostModel truncated(std::size_t m) const;
};

// Newton boosting of the logistic loss. f0 = logit(mean y). Throws DataError
// if only one class is present or the dataset is empty.
BoostModel fit_boost(const Dataset& data, std::size_t m_max, const BoostOptions& opts = {});

// Same tree builder on the squared-error loss against a real response.
BoostModel fit_boost_regression(const Eigen::MatrixXd& x, const Eigen::VectorXd& response,
                                std::size_t m_max, const BoostOptions& opts);

Eigen::VectorXd staged_predict_proba(const BoostModel& model, const Eigen::MatrixXd& x,
                                     std::size_t m);

// Wraps staged predictions as a ModelPath over the number of trees.
ModelPath as_model_path(std::shared_ptr<const BoostModel> model, std::vector<std::size_t> m_grid);

}  // namespace fraudsel

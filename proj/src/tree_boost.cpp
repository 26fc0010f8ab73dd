#include "fraudsel/tree_boost.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace fraudsel {

RegressionTree::RegressionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw std::invalid_argument("a tree needs at least one node");
}

int RegressionTree::depth() const {
  std::vector<int> level(nodes_.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (!nodes_[i].is_leaf()) {
      level[static_cast<std::size_t>(nodes_[i].left)] = level[i] + 1;
      level[static_cast<std::size_t>(nodes_[i].right)] = level[i] + 1;
    }
  }
  return deepest;
}

std::vector<int> RegressionTree::split_features() const {
  std::vector<int> out;
  for (const auto& node : nodes_) {
    if (!node.is_leaf()) out.push_back(node.feature);
  }
  return out;
}

namespace {

double leaf_value(double g, double h, double lambda) {
  const double denom = h + lambda;
  return denom > 0 ? -g / denom : 0.0;
}

double split_score(double g, double h, double lambda) {
  const double denom = h + lambda;
  return denom > 0 ? g * g / denom : 0.0;
}

struct NodeStats {
  double g = 0.0;
  double h = 0.0;
  int count = 0;
};

struct BestSplit {
  bool found = false;
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
  NodeStats left;
};

struct ScanState {
  NodeStats left;
  double last_x = 0.0;
};

// Exact greedy level-wise builder over presorted feature columns. Nodes are
// created in breadth-first order; within a node the winning split is the first
// strictly best one in (feature, threshold) order.
class TreeBuilder {
 public:
  TreeBuilder(const Eigen::MatrixXd& x, const BoostOptions& opts) : x_(x), opts_(opts) {
    const auto n = static_cast<std::size_t>(x.rows());
    const auto p = static_cast<std::size_t>(x.cols());
    order_.resize(p);
    values_.resize(p);
    for (std::size_t f = 0; f < p; ++f) {
      auto& ord = order_[f];
      ord.resize(n);
      std::iota(ord.begin(), ord.end(), 0);
      const auto col = x.col(static_cast<Eigen::Index>(f));
      std::stable_sort(ord.begin(), ord.end(), [&](int a, int b) { return col[a] < col[b]; });
      values_[f].resize(n);
      for (std::size_t r = 0; r < n; ++r) values_[f][r] = col[ord[r]];
    }
  }

  // Grows one tree; node_of receives each row's leaf.
  RegressionTree build(const std::vector<double>& g, const std::vector<double>& h,
                       std::vector<int>& node_of) const {
    const std::size_t n = g.size();
    const double lambda = opts_.lambda_leaf;
    std::vector<TreeNode> nodes(1);
    std::vector<NodeStats> stats(1);
    for (std::size_t i = 0; i < n; ++i) {
      stats[0].g += g[i];
      stats[0].h += h[i];
    }
    stats[0].count = static_cast<int>(n);
    node_of.assign(n, 0);

    std::vector<int> frontier{0};
    for (int depth = 0; depth < opts_.max_depth && !frontier.empty(); ++depth) {
      std::vector<int> slot_of(nodes.size(), -1);
      for (std::size_t s = 0; s < frontier.size(); ++s) {
        slot_of[static_cast<std::size_t>(frontier[s])] = static_cast<int>(s);
      }
      std::vector<BestSplit> best(frontier.size());
      std::vector<ScanState> scan(frontier.size());
      for (std::size_t f = 0; f < order_.size(); ++f) {
        std::fill(scan.begin(), scan.end(), ScanState{});
        const auto& ord = order_[f];
        const auto& vals = values_[f];
        for (std::size_t r = 0; r < n; ++r) {
          const int row = ord[r];
          const int slot = slot_of[static_cast<std::size_t>(node_of[static_cast<std::size_t>(row)])];
          if (slot < 0) continue;
          auto& st = scan[static_cast<std::size_t>(slot)];
          const double xv = vals[r];
          if (st.left.count > 0 && xv > st.last_x) {
            consider(stats[static_cast<std::size_t>(frontier[static_cast<std::size_t>(slot)])], st,
                     xv, static_cast<int>(f), best[static_cast<std::size_t>(slot)]);
          }
          st.left.g += g[static_cast<std::size_t>(row)];
          st.left.h += h[static_cast<std::size_t>(row)];
          st.left.count += 1;
          st.last_x = xv;
        }
      }

      std::vector<int> next;
      for (std::size_t s = 0; s < frontier.size(); ++s) {
        if (!best[s].found) continue;
        const int id = frontier[s];
        const auto parent = stats[static_cast<std::size_t>(id)];
        NodeStats right{parent.g - best[s].left.g, parent.h - best[s].left.h,
                        parent.count - best[s].left.count};
        const int left_id = static_cast<int>(nodes.size());
        nodes.emplace_back();
        nodes.emplace_back();
        stats.push_back(best[s].left);
        stats.push_back(right);
        auto& node = nodes[static_cast<std::size_t>(id)];
        node.feature = best[s].feature;
        node.threshold = best[s].threshold;
        node.left = left_id;
        node.right = left_id + 1;
        next.push_back(left_id);
        next.push_back(left_id + 1);
      }
      if (next.empty()) break;
      for (std::size_t i = 0; i < n; ++i) {
        auto& node_id = node_of[i];
        const auto& node = nodes[static_cast<std::size_t>(node_id)];
        if (slot_of.size() > static_cast<std::size_t>(node_id) &&
            slot_of[static_cast<std::size_t>(node_id)] >= 0 && !node.is_leaf()) {
          node_id = x_(static_cast<Eigen::Index>(i), node.feature) <= node.threshold ? node.left
                                                                                      : node.right;
        }
      }
      frontier = std::move(next);
    }

    for (std::size_t id = 0; id < nodes.size(); ++id) {
      nodes[id].count = stats[id].count;
      if (nodes[id].is_leaf()) nodes[id].value = leaf_value(stats[id].g, stats[id].h, lambda);
    }
    return RegressionTree(std::move(nodes));
  }

 private:
  void consider(const NodeStats& parent, const ScanState& st, double next_x, int feature,
                BestSplit& best) const {
    const int right_count = parent.count - st.left.count;
    if (st.left.count < opts_.min_leaf || right_count < opts_.min_leaf) return;
    const double lambda = opts_.lambda_leaf;
    const double parent_score = split_score(parent.g, parent.h, lambda);
    const double gain = split_score(st.left.g, st.left.h, lambda) +
                        split_score(parent.g - st.left.g, parent.h - st.left.h, lambda) -
                        parent_score;
    const double floor = 1e-12 * std::max(1.0, parent_score);
    if (gain <= floor || (best.found && gain <= best.gain)) return;
    double threshold = st.last_x + (next_x - st.last_x) / 2.0;
    if (!(threshold < next_x)) threshold = st.last_x;
    best.found = true;
    best.gain = gain;
    best.feature = feature;
    best.threshold = threshold;
    best.left = st.left;
  }

  const Eigen::MatrixXd& x_;
  BoostOptions opts_;
  std::vector<std::vector<int>> order_;
  std::vector<std::vector<double>> values_;
};

void check_options(const BoostOptions& opts) {
  if (!(opts.shrinkage > 0.0 && opts.shrinkage <= 1.0)) {
    throw ConfigError("boosting shrinkage must lie in (0, 1]");
  }
  if (opts.max_depth < 1) throw ConfigError("max_depth must be at least 1");
  if (opts.min_leaf < 1) throw ConfigError("min_leaf must be at least 1");
  if (opts.lambda_leaf < 0.0) throw ConfigError("lambda_leaf must be nonnegative");
}

class Objective {
 public:
  Objective(BoostLoss loss, std::vector<double> target) : loss_(loss), target_(std::move(target)) {}

  void gradients(const std::vector<double>& margin, std::vector<double>& g,
                 std::vector<double>& h) const {
    for (std::size_t i = 0; i < margin.size(); ++i) {
      if (loss_ == BoostLoss::Logistic) {
        const double p = sigmoid(margin[i]);
        g[i] = p - target_[i];
        h[i] = p * (1.0 - p);
      } else {
        g[i] = margin[i] - target_[i];
        h[i] = 1.0;
      }
    }
  }

  double mean_loss(const std::vector<double>& margin) const {
    double total = 0.0;
    for (std::size_t i = 0; i < margin.size(); ++i) {
      if (loss_ == BoostLoss::Logistic) {
        total += softplus(margin[i]) - target_[i] * margin[i];
      } else {
        const double r = margin[i] - target_[i];
        total += 0.5 * r * r;
      }
    }
    return total / static_cast<double>(margin.size());
  }

 private:
  BoostLoss loss_;
  std::vector<double> target_;
};

BoostModel run_boosting(const Eigen::MatrixXd& x, const Objective& objective, double base_score,
                        std::size_t m_max, const BoostOptions& opts) {
  const auto n = static_cast<std::size_t>(x.rows());
  BoostModel model;
  model.base_score = base_score;
  model.shrinkage = opts.shrinkage;
  model.max_depth = opts.max_depth;
  model.loss = opts.loss;
  model.trees.reserve(m_max);

  TreeBuilder builder(x, opts);
  std::vector<double> margin(n, base_score);
  std::vector<double> trial(n);
  std::vector<double> g(n), h(n);
  std::vector<int> leaf_of(n);
  double loss = objective.mean_loss(margin);
  model.training_loss.push_back(loss);

  for (std::size_t m = 0; m < m_max; ++m) {
    objective.gradients(margin, g, h);
    RegressionTree tree = builder.build(g, h, leaf_of);
    // Newton steps on a convex loss can overshoot; halve the leaves until the
    // round does not increase the training loss.
    double trial_loss = loss;
    for (int attempt = 0; attempt <= 40; ++attempt) {
      const auto& nodes = tree.nodes();
      for (std::size_t i = 0; i < n; ++i) {
        trial[i] = margin[i] + opts.shrinkage * nodes[static_cast<std::size_t>(leaf_of[i])].value;
      }
      trial_loss = objective.mean_loss(trial);
      if (trial_loss <= loss) break;
      for (auto& node : tree.mutable_nodes()) node.value = attempt == 40 ? 0.0 : node.value / 2.0;
      if (attempt == 40) {
        trial = margin;
        trial_loss = loss;
      }
    }
    margin.swap(trial);
    loss = trial_loss;
    model.training_loss.push_back(loss);
    model.trees.push_back(std::move(tree));
  }
  return model;
}

}  // namespace

Eigen::VectorXd BoostModel::staged_margin(const Eigen::MatrixXd& x, std::size_t m) const {
  const std::size_t grid[] = {m};
  return staged_margins(x, grid).col(0);
}

Eigen::MatrixXd BoostModel::staged_margins(const Eigen::MatrixXd& x,
                                           std::span<const std::size_t> m_grid) const {
  for (std::size_t g = 0; g < m_grid.size(); ++g) {
    if (m_grid[g] > trees.size()) {
      throw std::out_of_range("stage " + std::to_string(m_grid[g]) + " exceeds " +
                              std::to_string(trees.size()) + " trees");
    }
    if (g > 0 && m_grid[g] < m_grid[g - 1]) throw std::invalid_argument("stage grid must ascend");
  }
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(m_grid.size()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto row = x.row(i);
    double f = base_score;
    std::size_t stage = 0;
    for (std::size_t g = 0; g < m_grid.size(); ++g) {
      for (; stage < m_grid[g]; ++stage) f += shrinkage * trees[stage].predict(row);
      out(i, static_cast<Eigen::Index>(g)) = f;
    }
  }
  return out;
}

BoostModel BoostModel::truncated(std::size_t m) const {
  if (m > trees.size()) throw std::out_of_range("cannot truncate beyond the fitted trees");
  BoostModel out = *this;
  out.trees.resize(m);
  if (out.training_loss.size() > m + 1) out.training_loss.resize(m + 1);
  return out;
}

BoostModel fit_boost(const Dataset& data, std::size_t m_max, const BoostOptions& opts) {
  check_options(opts);
  if (data.rows() == 0) throw DataError("cannot boost on an empty dataset");
  const std::size_t pos = data.positives();
  if (pos == 0 || pos == data.rows()) {
    throw DataError("boosting needs both classes in the training data");
  }
  std::vector<double> target(data.y.begin(), data.y.end());
  const double mean = static_cast<double>(pos) / static_cast<double>(data.rows());
  BoostOptions logistic = opts;
  logistic.loss = BoostLoss::Logistic;
  return run_boosting(data.x, Objective(BoostLoss::Logistic, std::move(target)), logit(mean),
                      m_max, logistic);
}

BoostModel fit_boost_regression(const Eigen::MatrixXd& x, const Eigen::VectorXd& response,
                                std::size_t m_max, const BoostOptions& opts) {
  check_options(opts);
  if (x.rows() == 0 || x.rows() != response.size()) {
    throw DataError("regression boosting needs a nonempty design matching the response");
  }
  std::vector<double> target(response.data(), response.data() + response.size());
  BoostOptions squared = opts;
  squared.loss = BoostLoss::Squared;
  return run_boosting(x, Objective(BoostLoss::Squared, std::move(target)), response.mean(), m_max,
                      squared);
}

Eigen::VectorXd staged_predict_proba(const BoostModel& model, const Eigen::MatrixXd& x,
                                     std::size_t m) {
  Eigen::VectorXd eta = model.staged_margin(x, m);
  for (Eigen::Index i = 0; i < eta.size(); ++i) eta[i] = sigmoid(eta[i]);
  return eta;
}

namespace {

class BoostPathPredictor : public PathPredictor {
 public:
  BoostPathPredictor(std::shared_ptr<const BoostModel> model, std::vector<std::size_t> grid)
      : model_(std::move(model)), grid_(std::move(grid)) {}
  std::size_t size() const override { return grid_.size(); }
  Eigen::MatrixXd margins(const Eigen::MatrixXd& x) const override {
    return model_->staged_margins(x, grid_);
  }
  Eigen::VectorXd margin_at(std::size_t index, const Eigen::MatrixXd& x) const override {
    return model_->staged_margin(x, grid_.at(index));
  }

 private:
  std::shared_ptr<const BoostModel> model_;
  std::vector<std::size_t> grid_;
};

}  // namespace

ModelPath as_model_path(std::shared_ptr<const BoostModel> model, std::vector<std::size_t> m_grid) {
  if (!model) throw std::invalid_argument("null boost model");
  for (std::size_t m : m_grid) {
    if (m > model->size()) throw std::out_of_range("stage grid exceeds the fitted trees");
  }
  std::vector<double> tuning(m_grid.begin(), m_grid.end());
  auto predictor = std::make_shared<BoostPathPredictor>(std::move(model), std::move(m_grid));
  return ModelPath(PathFamily::Boost, std::move(tuning), std::move(predictor));
}

}  // namespace fraudsel

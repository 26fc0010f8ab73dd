#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fraudsel {

enum class PathFamily { Ridge, Boost, Custom };

std::string to_string(PathFamily family);

// Source of log-odds scores for every entry of a path.
class PathPredictor {
 public:
  virtual ~PathPredictor() = default;
  virtual std::size_t size() const = 0;
  // n x size() matrix of log-odds.
  virtual Eigen::MatrixXd margins(const Eigen::MatrixXd& x) const = 0;
  virtual Eigen::VectorXd margin_at(std::size_t index, const Eigen::MatrixXd& x) const;
};

// Ordered family of fitted predictors indexed by a tuning value. Entries run
// from the most regularized model to the least: lambda descending for ridge,
// number of trees ascending for boosting.
class ModelPath {
 public:
  ModelPath(PathFamily family, std::vector<double> tuning_values,
            std::shared_ptr<const PathPredictor> predictor);

  PathFamily family() const { return family_; }
  std::size_t size() const { return tuning_.size(); }
  const std::vector<double>& tuning_values() const { return tuning_; }
  const PathPredictor& predictor() const { return *predictor_; }
  std::shared_ptr<const PathPredictor> shared_predictor() const { return predictor_; }

  // Log-odds for every path entry (n x size()). Ranking uses log-odds since
  // probabilities saturate to exactly 0 or 1 in floating point.
  Eigen::MatrixXd margins(const Eigen::MatrixXd& x) const { return predictor_->margins(x); }
  Eigen::VectorXd margin(std::size_t index, const Eigen::MatrixXd& x) const;
  Eigen::VectorXd predict_proba(std::size_t index, const Eigen::MatrixXd& x) const;

 private:
  PathFamily family_;
  std::vector<double> tuning_;
  std::shared_ptr<const PathPredictor> predictor_;
};

// Path backed by an arbitrary scoring function; used for baselines and tests.
class FunctionPathPredictor : public PathPredictor {
 public:
  using Fn = std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>;
  FunctionPathPredictor(std::size_t size, Fn fn) : size_(size), fn_(std::move(fn)) {}
  std::size_t size() const override { return size_; }
  Eigen::MatrixXd margins(const Eigen::MatrixXd& x) const override;

 private:
  std::size_t size_;
  Fn fn_;
};

}  // namespace fraudsel

#include "fraudsel/model_path.hpp"

#include <stdexcept>

#include "fraudsel/common.hpp"

namespace fraudsel {

std::string to_string(PathFamily family) {
  switch (family) {
    case PathFamily::Ridge:
      return "ridge";
    case PathFamily::Boost:
      return "boost";
    case PathFamily::Custom:
      return "custom";
  }
  return "unknown";
}

Eigen::VectorXd PathPredictor::margin_at(std::size_t index, const Eigen::MatrixXd& x) const {
  return margins(x).col(static_cast<Eigen::Index>(index));
}

ModelPath::ModelPath(PathFamily family, std::vector<double> tuning_values,
                     std::shared_ptr<const PathPredictor> predictor)
    : family_(family), tuning_(std::move(tuning_values)), predictor_(std::move(predictor)) {
  if (!predictor_) throw std::invalid_argument("model path needs a predictor");
  if (tuning_.empty()) throw std::invalid_argument("model path must be nonempty");
  if (predictor_->size() != tuning_.size()) {
    throw std::invalid_argument("tuning values and predictors differ in length");
  }
  const bool descending = family_ == PathFamily::Ridge;
  for (std::size_t i = 1; i < tuning_.size(); ++i) {
    const bool ok = descending ? tuning_[i] < tuning_[i - 1] : tuning_[i] > tuning_[i - 1];
    if (!ok) throw std::invalid_argument("tuning values must be strictly monotone");
  }
}

Eigen::VectorXd ModelPath::margin(std::size_t index, const Eigen::MatrixXd& x) const {
  if (index >= size()) throw std::out_of_range("path index out of range");
  return predictor_->margin_at(index, x);
}

Eigen::VectorXd ModelPath::predict_proba(std::size_t index, const Eigen::MatrixXd& x) const {
  Eigen::VectorXd eta = margin(index, x);
  for (Eigen::Index i = 0; i < eta.size(); ++i) eta[i] = sigmoid(eta[i]);
  return eta;
}

Eigen::MatrixXd FunctionPathPredictor::margins(const Eigen::MatrixXd& x) const {
  Eigen::MatrixXd out = fn_(x);
  if (out.rows() != x.rows() || static_cast<std::size_t>(out.cols()) != size_) {
    throw std::logic_error("path scoring function returned the wrong shape");
  }
  return out;
}

}  // namespace fraudsel

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fraudsel/common.hpp"
#include "fraudsel/model_path.hpp"

namespace fraudsel {

// Per-feature centering and scaling learned on training data. Constant columns
// keep scale 1.
struct Standardization {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  static Standardization fit(const Eigen::MatrixXd& x);
  static Standardization identity(Eigen::Index p);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};

struct RidgeOptions {
  int max_iterations = 100;
  double gradient_tolerance = 1e-8;
  double objective_tolerance = 1e-10;
  bool standardize = true;
};

// L2-penalized logistic regression in standardized coordinates. The
// intercept is not penalized.
struct RidgeModel {
  double intercept = 0.0;
  Eigen::VectorXd coefficients;
  double lambda = 0.0;
  Standardization standardization;
  int iterations = 0;
  double gradient_norm = 0.0;

  Eigen::VectorXd margin(const Eigen::MatrixXd& x) const;
  // Throws DataError if x has the wrong number of columns.
  Eigen::VectorXd predict_proba(const Eigen::MatrixXd& x) const;
};

// Penalized log-likelihood
//   sum_i [y_i eta_i - log(1 + exp(eta_i))] - lambda * sum_j beta_j^2
// over theta = (beta0, beta) with eta = beta0 + z^T beta.
class RidgeProblem {
 public:
  RidgeProblem(const Eigen::MatrixXd& z, std::span<const int> y, double lambda);

  Eigen::Index dim() const { return z_.cols() + 1; }
  double objective(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const;
  // Negative Hessian (positive definite when lambda > 0).
  Eigen::MatrixXd information(const Eigen::VectorXd& theta) const;
  // Unpenalized log-likelihood.
  double log_likelihood(const Eigen::VectorXd& theta) const;

 private:
  Eigen::VectorXd eta(const Eigen::VectorXd& theta) const;

  Eigen::MatrixXd z_;
  Eigen::VectorXd y_;
  double lambda_;
};

// Raised when Newton iterations exhaust the cap or stall away from the optimum.
class NonConvergenceError : public NumericalError {
 public:
  NonConvergenceError(const std::string& what, Eigen::VectorXd last_iterate, double gradient_norm)
      : NumericalError(what), last_iterate_(std::move(last_iterate)), gradient_norm_(gradient_norm) {}

  const Eigen::VectorXd& last_iterate() const { return last_iterate_; }
  double gradient_norm() const { return gradient_norm_; }

 private:
  Eigen::VectorXd last_iterate_;
  double gradient_norm_;
};

// Newton/IRLS with step halving. `warm_start`, if given, is (beta0, beta) in
// standardized coordinates.
RidgeModel fit_ridge(const Dataset& data, double lambda, const RidgeOptions& opts = {},
                     const Eigen::VectorXd* warm_start = nullptr);

// Smallest power-of-two multiple of an initial guess at which every
// coefficient falls below 1e-4 in absolute value.
double find_lambda_max(const Dataset& data, const RidgeOptions& opts = {});

// `length` values log-spaced from lambda_max down to ratio * lambda_max.
std::vector<double> default_lambda_grid(const Dataset& data, std::size_t length = 100,
                                        double ratio = 1e-4, const RidgeOptions& opts = {});

// Sequential warm-started fits over a strictly descending, positive grid.
ModelPath fit_ridge_path(const Dataset& data, std::span<const double> lambda_grid,
                         const RidgeOptions& opts = {});

// Fitted model at a path index; throws std::invalid_argument for non-ridge paths.
const RidgeModel& ridge_model_at(const ModelPath& path, std::size_t index);

}  // namespace fraudsel

#include "fraudsel/ridge.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>

namespace fraudsel {

Standardization Standardization::fit(const Eigen::MatrixXd& x) {
  Standardization s;
  const Eigen::Index p = x.cols();
  s.mean.resize(p);
  s.scale.resize(p);
  const double n = static_cast<double>(x.rows());
  for (Eigen::Index j = 0; j < p; ++j) {
    const double mu = x.col(j).mean();
    const double var = (x.col(j).array() - mu).square().sum() / n;
    s.mean[j] = mu;
    s.scale[j] = var > 0 ? std::sqrt(var) : 1.0;
  }
  return s;
}

Standardization Standardization::identity(Eigen::Index p) {
  return {Eigen::VectorXd::Zero(p), Eigen::VectorXd::Ones(p)};
}

Eigen::MatrixXd Standardization::apply(const Eigen::MatrixXd& x) const {
  if (x.cols() != mean.size()) {
    throw DataError("expected " + std::to_string(mean.size()) + " covariate columns, got " +
                    std::to_string(x.cols()));
  }
  return (x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

Eigen::VectorXd RidgeModel::margin(const Eigen::MatrixXd& x) const {
  Eigen::VectorXd eta = standardization.apply(x) * coefficients;
  eta.array() += intercept;
  return eta;
}

Eigen::VectorXd RidgeModel::predict_proba(const Eigen::MatrixXd& x) const {
  Eigen::VectorXd eta = margin(x);
  for (Eigen::Index i = 0; i < eta.size(); ++i) eta[i] = sigmoid(eta[i]);
  return eta;
}

RidgeProblem::RidgeProblem(const Eigen::MatrixXd& z, std::span<const int> y, double lambda)
    : z_(z), y_(static_cast<Eigen::Index>(y.size())), lambda_(lambda) {
  for (std::size_t i = 0; i < y.size(); ++i) y_[static_cast<Eigen::Index>(i)] = y[i];
}

Eigen::VectorXd RidgeProblem::eta(const Eigen::VectorXd& theta) const {
  Eigen::VectorXd e = z_ * theta.tail(z_.cols());
  e.array() += theta[0];
  return e;
}

double RidgeProblem::log_likelihood(const Eigen::VectorXd& theta) const {
  const Eigen::VectorXd e = eta(theta);
  double ll = 0.0;
  for (Eigen::Index i = 0; i < e.size(); ++i) ll += y_[i] * e[i] - softplus(e[i]);
  return ll;
}

double RidgeProblem::objective(const Eigen::VectorXd& theta) const {
  return log_likelihood(theta) - lambda_ * theta.tail(z_.cols()).squaredNorm();
}

Eigen::VectorXd RidgeProblem::gradient(const Eigen::VectorXd& theta) const {
  const Eigen::VectorXd e = eta(theta);
  Eigen::VectorXd resid(e.size());
  for (Eigen::Index i = 0; i < e.size(); ++i) resid[i] = y_[i] - sigmoid(e[i]);
  Eigen::VectorXd g(dim());
  g[0] = resid.sum();
  g.tail(z_.cols()) = z_.transpose() * resid - 2.0 * lambda_ * theta.tail(z_.cols());
  return g;
}

Eigen::MatrixXd RidgeProblem::information(const Eigen::VectorXd& theta) const {
  const Eigen::VectorXd e = eta(theta);
  const Eigen::Index p = z_.cols();
  Eigen::VectorXd w(e.size());
  for (Eigen::Index i = 0; i < e.size(); ++i) {
    const double pi = sigmoid(e[i]);
    w[i] = pi * (1.0 - pi);
  }
  Eigen::MatrixXd h(p + 1, p + 1);
  const Eigen::MatrixXd zw = z_.array().colwise() * w.array().sqrt();
  h.bottomRightCorner(p, p).setZero();
  h.bottomRightCorner(p, p).selfadjointView<Eigen::Lower>().rankUpdate(zw.transpose());
  h.bottomRightCorner(p, p) = h.bottomRightCorner(p, p).selfadjointView<Eigen::Lower>();
  h.bottomRightCorner(p, p).diagonal().array() += 2.0 * lambda_;
  h(0, 0) = w.sum();
  h.col(0).tail(p) = z_.transpose() * w;
  h.row(0).tail(p) = h.col(0).tail(p).transpose();
  return h;
}

namespace {

Eigen::VectorXd newton_solve(const RidgeProblem& problem, Eigen::VectorXd theta,
                             const RidgeOptions& opts, int& iterations, double& grad_norm) {
  double obj = problem.objective(theta);
  for (iterations = 0;; ++iterations) {
    const Eigen::VectorXd grad = problem.gradient(theta);
    grad_norm = grad.lpNorm<Eigen::Infinity>();
    if (!std::isfinite(grad_norm)) {
      throw NonConvergenceError("ridge gradient became non-finite", theta, grad_norm);
    }
    if (grad_norm < opts.gradient_tolerance) return theta;
    if (iterations >= opts.max_iterations) {
      throw NonConvergenceError("ridge fit did not converge in " +
                                    std::to_string(opts.max_iterations) +
                                    " iterations (gradient sup-norm " +
                                    std::to_string(grad_norm) + ")",
                                theta, grad_norm);
    }
    const Eigen::MatrixXd info = problem.information(theta);
    Eigen::VectorXd step;
    Eigen::LLT<Eigen::MatrixXd> llt(info);
    if (llt.info() == Eigen::Success) {
      step = llt.solve(grad);
    } else {
      Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
      if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
        throw NonConvergenceError("ridge information matrix is singular; use lambda > 0", theta,
                                  grad_norm);
      }
      step = ldlt.solve(grad);
    }
    // The objective is concave, so the Newton direction ascends; halve until
    // the objective does not drop (beyond rounding of its own value).
    const double slack = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(obj));
    double t = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 40; ++halving, t /= 2.0) {
      Eigen::VectorXd candidate = theta + t * step;
      const double cand_obj = problem.objective(candidate);
      if (std::isfinite(cand_obj) && cand_obj >= obj - slack) {
        theta = std::move(candidate);
        obj = std::max(obj, cand_obj);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      throw NonConvergenceError("ridge line search stalled (gradient sup-norm " +
                                    std::to_string(grad_norm) + ")",
                                theta, grad_norm);
    }
  }
}

void check_fit_inputs(const Dataset& data, double lambda) {
  if (data.rows() == 0) throw DataError("cannot fit ridge regression on an empty dataset");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ConfigError("ridge penalty must be a finite nonnegative number");
  }
  if (lambda == 0.0) {
    const std::size_t pos = data.positives();
    if (pos == 0 || pos == data.rows()) {
      throw DataError("unpenalized fit needs both classes; use lambda > 0");
    }
  }
}

Eigen::VectorXd initial_theta(const Dataset& data, Eigen::Index p) {
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(p + 1);
  const double n = static_cast<double>(data.rows());
  const double mean = std::clamp(static_cast<double>(data.positives()) / n, 0.5 / n, 1.0 - 0.5 / n);
  theta[0] = logit(mean);
  return theta;
}

RidgeModel solve_at(const Eigen::MatrixXd& z, const Dataset& data, const Standardization& s,
                    double lambda, const RidgeOptions& opts, Eigen::VectorXd start) {
  RidgeProblem problem(z, data.y, lambda);
  RidgeModel model;
  const Eigen::VectorXd theta =
      newton_solve(problem, std::move(start), opts, model.iterations, model.gradient_norm);
  model.intercept = theta[0];
  model.coefficients = theta.tail(z.cols());
  model.lambda = lambda;
  model.standardization = s;
  return model;
}

Standardization standardization_for(const Dataset& data, const RidgeOptions& opts) {
  return opts.standardize ? Standardization::fit(data.x)
                          : Standardization::identity(data.x.cols());
}

class RidgePathPredictor : public PathPredictor {
 public:
  explicit RidgePathPredictor(std::vector<RidgeModel> models) : models_(std::move(models)) {
    const Eigen::Index p = models_.front().coefficients.size();
    coef_.resize(p, static_cast<Eigen::Index>(models_.size()));
    intercepts_.resize(static_cast<Eigen::Index>(models_.size()));
    for (std::size_t t = 0; t < models_.size(); ++t) {
      coef_.col(static_cast<Eigen::Index>(t)) = models_[t].coefficients;
      intercepts_[static_cast<Eigen::Index>(t)] = models_[t].intercept;
    }
  }
  std::size_t size() const override { return models_.size(); }
  Eigen::MatrixXd margins(const Eigen::MatrixXd& x) const override {
    Eigen::MatrixXd out = models_.front().standardization.apply(x) * coef_;
    out.rowwise() += intercepts_.transpose();
    return out;
  }
  const RidgeModel& model(std::size_t i) const { return models_.at(i); }

 private:
  std::vector<RidgeModel> models_;
  Eigen::MatrixXd coef_;
  Eigen::VectorXd intercepts_;
};

}  // namespace

RidgeModel fit_ridge(const Dataset& data, double lambda, const RidgeOptions& opts,
                     const Eigen::VectorXd* warm_start) {
  check_fit_inputs(data, lambda);
  const Standardization s = standardization_for(data, opts);
  const Eigen::MatrixXd z = s.apply(data.x);
  Eigen::VectorXd start = warm_start ? *warm_start : initial_theta(data, z.cols());
  if (start.size() != z.cols() + 1) throw std::invalid_argument("warm start has the wrong size");
  return solve_at(z, data, s, lambda, opts, std::move(start));
}

double find_lambda_max(const Dataset& data, const RidgeOptions& opts) {
  check_fit_inputs(data, 1.0);
  const Standardization s = standardization_for(data, opts);
  const Eigen::MatrixXd z = s.apply(data.x);
  const Eigen::VectorXd start = initial_theta(data, z.cols());
  const double mean = static_cast<double>(data.positives()) / static_cast<double>(data.rows());
  Eigen::VectorXd resid(static_cast<Eigen::Index>(data.rows()));
  for (std::size_t i = 0; i < data.rows(); ++i) resid[static_cast<Eigen::Index>(i)] = data.y[i] - mean;
  const double score = (z.transpose() * resid).lpNorm<Eigen::Infinity>();
  constexpr double kZero = 1e-4;
  double lambda = score > 0 ? score / (2.0 * kZero) : 1.0;

  auto shrunk = [&](double lam) {
    const RidgeModel m = solve_at(z, data, s, lam, opts, start);
    return m.coefficients.size() == 0 || m.coefficients.lpNorm<Eigen::Infinity>() < kZero;
  };
  if (shrunk(lambda)) {
    while (lambda > std::numeric_limits<double>::min() && shrunk(lambda / 2.0)) lambda /= 2.0;
  } else {
    do {
      lambda *= 2.0;
    } while (!shrunk(lambda));
  }
  return lambda;
}

std::vector<double> default_lambda_grid(const Dataset& data, std::size_t length, double ratio,
                                        const RidgeOptions& opts) {
  if (length == 0) throw ConfigError("lambda grid length must be positive");
  if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("lambda grid ratio must lie in (0, 1)");
  const double top = find_lambda_max(data, opts);
  std::vector<double> grid(length);
  if (length == 1) {
    grid[0] = top;
    return grid;
  }
  const double log_top = std::log(top);
  const double log_step = std::log(ratio) / static_cast<double>(length - 1);
  for (std::size_t i = 0; i < length; ++i) grid[i] = std::exp(log_top + log_step * static_cast<double>(i));
  grid.front() = top;
  return grid;
}

ModelPath fit_ridge_path(const Dataset& data, std::span<const double> lambda_grid,
                         const RidgeOptions& opts) {
  if (lambda_grid.empty()) throw ConfigError("lambda grid must be nonempty");
  for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
    if (!(lambda_grid[i] > 0.0)) throw ConfigError("lambda grid values must be positive");
    if (i > 0 && !(lambda_grid[i] < lambda_grid[i - 1])) {
      throw ConfigError("lambda grid must be strictly descending");
    }
  }
  check_fit_inputs(data, lambda_grid.back());
  const Standardization s = standardization_for(data, opts);
  const Eigen::MatrixXd z = s.apply(data.x);
  std::vector<RidgeModel> models;
  models.reserve(lambda_grid.size());
  Eigen::VectorXd theta = initial_theta(data, z.cols());
  for (double lambda : lambda_grid) {
    models.push_back(solve_at(z, data, s, lambda, opts, theta));
    theta[0] = models.back().intercept;
    theta.tail(z.cols()) = models.back().coefficients;
  }
  std::vector<double> tuning(lambda_grid.begin(), lambda_grid.end());
  return ModelPath(PathFamily::Ridge, std::move(tuning),
                   std::make_shared<RidgePathPredictor>(std::move(models)));
}

const RidgeModel& ridge_model_at(const ModelPath& path, std::size_t index) {
  const auto* ridge = dynamic_cast<const RidgePathPredictor*>(&path.predictor());
  if (!ridge) throw std::invalid_argument("path does not hold ridge models");
  return ridge->model(index);
}

}  // namespace fraudsel

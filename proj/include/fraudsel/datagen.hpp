#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "fraudsel/common.hpp"
#include "fraudsel/rng.hpp"
#include "fraudsel/tree_boost.hpp"

namespace fraudsel {

enum class MarginFamily { Bernoulli, Beta, Gamma, Normal, StudentT, Poisson };

std::string to_string(MarginFamily family);
MarginFamily margin_family_from_string(const std::string& name);

// Univariate target margin. Parameters by family:
//   Bernoulli {p}, Beta {alpha, beta}, Gamma {shape, rate}, Normal {mu, sigma},
//   StudentT {nu}, Poisson {lambda}.
struct MarginSpec {
  MarginFamily family = MarginFamily::Normal;
  std::vector<double> params;

  // Throws ConfigError if the parameters are invalid for the family.
  void validate() const;
  bool discrete() const;
  // Generalized inverse inf{x : F(x) >= u} for u in (0, 1).
  double quantile(double u) const;
  double cdf(double x) const;
  std::string label() const;

  bool operator==(const MarginSpec&) const = default;
};

// The 17 covariate margins used in the simulation designs.
std::vector<MarginSpec> standard_margins();

// Margins drawn uniformly (with replacement) from standard_margins().
std::vector<MarginSpec> random_standard_margins(std::size_t p, Rng& rng);

// Symmetric, unit-diagonal, positive-definite matrix. Construction validates
// and caches the lower Cholesky factor.
class CorrelationMatrix {
 public:
  explicit CorrelationMatrix(Eigen::MatrixXd entries);

  Eigen::Index dim() const { return entries_.rows(); }
  const Eigen::MatrixXd& matrix() const { return entries_; }
  const Eigen::MatrixXd& cholesky() const { return lower_; }

 private:
  Eigen::MatrixXd entries_;
  Eigen::MatrixXd lower_;
};

// Uniform draw over the positive-definite correlation matrices of size dim
// (onion construction with an incrementally extended Cholesky factor).
CorrelationMatrix sample_correlation_matrix(Eigen::Index dim, Rng& rng);

// `blocks` copies of base along the diagonal.
CorrelationMatrix build_block_correlation(const CorrelationMatrix& base, int blocks);

// n draws from the t copula with correlation r and `df` degrees of freedom.
// Entries lie strictly inside (0, 1).
Eigen::MatrixXd sample_copula(Eigen::Index n, const CorrelationMatrix& r, Rng& rng, double df = 2.0);

// Column j mapped through margins[j].quantile.
Eigen::MatrixXd transform_margins(const Eigen::MatrixXd& u, std::span<const MarginSpec> margins);

// beta0 with mean(sigmoid(beta0 + f)) = p0, by bisection from an expanding
// bracket until the bracket is narrower than 1e-10.
double calibrate_intercept(std::span<const double> predictor_values, double p0);

struct LinearPredictor {
  double intercept = 0.0;
  Eigen::VectorXd coefficients;
};

struct TreePredictor {
  BoostModel ensemble;      // feature indices refer to the full covariate vector
  std::vector<int> active;  // ascending
};

// The true log-odds function f(x) (the intercept is calibrated separately).
class PredictorModel {
 public:
  PredictorModel() = default;
  PredictorModel(LinearPredictor linear);
  PredictorModel(TreePredictor trees, Eigen::Index input_dim);

  bool is_linear() const { return std::holds_alternative<LinearPredictor>(model_); }
  const LinearPredictor& linear() const { return std::get<LinearPredictor>(model_); }
  const TreePredictor& trees() const { return std::get<TreePredictor>(model_); }
  Eigen::Index input_dim() const { return input_dim_; }

  Eigen::VectorXd evaluate(const Eigen::MatrixXd& x) const;
  // Indices the predictor depends on.
  std::vector<int> active_set() const;

 private:
  std::variant<LinearPredictor, TreePredictor> model_;
  Eigen::Index input_dim_ = 0;
};

LinearPredictor make_linear_dgp(Eigen::Index p, Eigen::Index n_nonzero, double coef_low,
                                double coef_high, Rng& rng);

struct TreeDgpOptions {
  Eigen::Index construction_rows = 1000;
  std::size_t n_trees = 100;
  int max_depth = 3;
  double shrinkage = 0.1;
  int min_leaf = 10;
  double rate_positive = 0.2;  // E1 ~ Exponential(rate_positive)
  double rate_negative = 0.1;  // E2 ~ Exponential(rate_negative)
};

// Draws the construction response B*E1 - (1-B)*E2.
Eigen::VectorXd draw_tree_dgp_response(Eigen::Index n, const TreeDgpOptions& opts, Rng& rng);

// Fits a squared-error boosted ensemble on `active_count` randomly chosen
// covariates of a construction sample drawn through the same copula/margins.
TreePredictor make_tree_dgp(const CorrelationMatrix& r, std::span<const MarginSpec> margins,
                            Eigen::Index active_count, Rng& rng, const TreeDgpOptions& opts = {},
                            double copula_df = 2.0);

struct DgpSpec {
  CorrelationMatrix correlation;
  std::vector<MarginSpec> margins;
  PredictorModel predictor;
  double target_mean_prob = 0.2;
  double copula_df = 2.0;

  void validate() const;
  Eigen::Index dim() const { return correlation.dim(); }
};

struct GeneratedDataset {
  Dataset data;
  double intercept = 0.0;
  // mean(sigmoid(intercept + f(x_i))); equals p0 up to calibration error.
  double mean_probability = 0.0;
};

// copula -> margins -> predictor -> intercept calibration -> Bernoulli labels.
GeneratedDataset generate_dataset(const DgpSpec& spec, Eigen::Index n, Rng& rng);

}  // namespace fraudsel

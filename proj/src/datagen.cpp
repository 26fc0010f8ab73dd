#include "fraudsel/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/poisson.hpp>
#include <boost/math/distributions/students_t.hpp>

namespace fraudsel {

namespace {

constexpr double kLowestUniform = std::numeric_limits<double>::min();
constexpr double kHighestUniform = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;

void require_params(const MarginSpec& m, std::size_t count) {
  if (m.params.size() != count) {
    throw ConfigError(to_string(m.family) + " margin expects " + std::to_string(count) +
                      " parameter(s), got " + std::to_string(m.params.size()));
  }
}

double poisson_quantile(double lambda, double u) {
  double pmf = std::exp(-lambda);
  double cdf = pmf;
  double k = 0.0;
  const double cap = lambda + 60.0 * std::sqrt(lambda) + 200.0;
  while (cdf < u && k < cap) {
    k += 1.0;
    pmf *= lambda / k;
    cdf += pmf;
  }
  return k;
}

// Student t CDF; closed form for two degrees of freedom written to avoid
// cancellation in either tail.
double t_cdf(double t, double df) {
  if (df == 2.0) {
    const double s = std::sqrt(2.0 + t * t);
    if (!std::isfinite(s)) return t < 0 ? 0.0 : 1.0;
    return t < 0 ? 1.0 / (s * (s - t)) : 1.0 - 1.0 / (s * (s + t));
  }
  const boost::math::students_t dist(df);
  return t < 0 ? boost::math::cdf(dist, t) : 1.0 - boost::math::cdf(boost::math::complement(dist, t));
}

}  // namespace

std::string to_string(MarginFamily family) {
  switch (family) {
    case MarginFamily::Bernoulli:
      return "bernoulli";
    case MarginFamily::Beta:
      return "beta";
    case MarginFamily::Gamma:
      return "gamma";
    case MarginFamily::Normal:
      return "normal";
    case MarginFamily::StudentT:
      return "student_t";
    case MarginFamily::Poisson:
      return "poisson";
  }
  return "unknown";
}

MarginFamily margin_family_from_string(const std::string& name) {
  for (auto f : {MarginFamily::Bernoulli, MarginFamily::Beta, MarginFamily::Gamma,
                 MarginFamily::Normal, MarginFamily::StudentT, MarginFamily::Poisson}) {
    if (to_string(f) == name) return f;
  }
  throw ConfigError("unknown margin family '" + name + "'");
}

void MarginSpec::validate() const {
  auto positive = [&](std::size_t i) {
    if (!(params[i] > 0.0) || !std::isfinite(params[i])) {
      throw ConfigError(label() + ": parameter " + std::to_string(i + 1) + " must be positive");
    }
  };
  switch (family) {
    case MarginFamily::Bernoulli:
      require_params(*this, 1);
      if (!(params[0] > 0.0 && params[0] < 1.0)) throw ConfigError("Bernoulli p must lie in (0, 1)");
      break;
    case MarginFamily::Beta:
    case MarginFamily::Gamma:
      require_params(*this, 2);
      positive(0);
      positive(1);
      break;
    case MarginFamily::Normal:
      require_params(*this, 2);
      if (!std::isfinite(params[0])) throw ConfigError("Normal mean must be finite");
      positive(1);
      break;
    case MarginFamily::StudentT:
    case MarginFamily::Poisson:
      require_params(*this, 1);
      positive(0);
      break;
  }
}

bool MarginSpec::discrete() const {
  return family == MarginFamily::Bernoulli || family == MarginFamily::Poisson;
}

double MarginSpec::quantile(double u) const {
  switch (family) {
    case MarginFamily::Bernoulli:
      return u <= 1.0 - params[0] ? 0.0 : 1.0;
    case MarginFamily::Beta:
      return boost::math::quantile(boost::math::beta_distribution<>(params[0], params[1]), u);
    case MarginFamily::Gamma:
      return boost::math::quantile(boost::math::gamma_distribution<>(params[0], 1.0 / params[1]), u);
    case MarginFamily::Normal:
      return boost::math::quantile(boost::math::normal(params[0], params[1]), u);
    case MarginFamily::StudentT:
      return boost::math::quantile(boost::math::students_t(params[0]), u);
    case MarginFamily::Poisson:
      return poisson_quantile(params[0], u);
  }
  return 0.0;
}

double MarginSpec::cdf(double x) const {
  switch (family) {
    case MarginFamily::Bernoulli:
      return x < 0.0 ? 0.0 : (x < 1.0 ? 1.0 - params[0] : 1.0);
    case MarginFamily::Beta:
      return x <= 0.0 ? 0.0
                      : (x >= 1.0 ? 1.0
                                  : boost::math::cdf(
                                        boost::math::beta_distribution<>(params[0], params[1]), x));
    case MarginFamily::Gamma:
      return x <= 0.0 ? 0.0
                      : boost::math::cdf(boost::math::gamma_distribution<>(params[0], 1.0 / params[1]),
                                         x);
    case MarginFamily::Normal:
      return boost::math::cdf(boost::math::normal(params[0], params[1]), x);
    case MarginFamily::StudentT:
      return boost::math::cdf(boost::math::students_t(params[0]), x);
    case MarginFamily::Poisson:
      return x < 0.0 ? 0.0 : boost::math::cdf(boost::math::poisson(params[0]), std::floor(x));
  }
  return 0.0;
}

std::string MarginSpec::label() const {
  std::ostringstream out;
  out << to_string(family) << "(";
  for (std::size_t i = 0; i < params.size(); ++i) out << (i ? ", " : "") << params[i];
  out << ")";
  return out.str();
}

std::vector<MarginSpec> standard_margins() {
  using F = MarginFamily;
  return {
      {F::Bernoulli, {0.2}}, {F::Bernoulli, {0.4}}, {F::Bernoulli, {0.6}}, {F::Bernoulli, {0.8}},
      {F::Beta, {1, 2}},     {F::Beta, {2, 1}},     {F::Beta, {2, 2}},     {F::Gamma, {1, 3}},
      {F::Gamma, {3, 1}},    {F::Gamma, {3, 3}},    {F::Normal, {0, 1}},   {F::StudentT, {3}},
      {F::StudentT, {4}},    {F::StudentT, {6}},    {F::Poisson, {1}},     {F::Poisson, {3}},
      {F::Poisson, {5}},
  };
}

std::vector<MarginSpec> random_standard_margins(std::size_t p, Rng& rng) {
  const auto table = standard_margins();
  std::vector<MarginSpec> out;
  out.reserve(p);
  for (std::size_t j = 0; j < p; ++j) out.push_back(table[rng.below(table.size())]);
  return out;
}

CorrelationMatrix::CorrelationMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
  if (entries_.rows() < 1 || entries_.rows() != entries_.cols()) {
    throw ConfigError("correlation matrix must be square and nonempty");
  }
  const Eigen::Index d = entries_.rows();
  for (Eigen::Index i = 0; i < d; ++i) {
    if (entries_(i, i) != 1.0) throw ConfigError("correlation matrix needs a unit diagonal");
    for (Eigen::Index j = 0; j < i; ++j) {
      const double v = entries_(i, j);
      if (v != entries_(j, i)) throw ConfigError("correlation matrix must be symmetric");
      if (!(v >= -1.0 && v <= 1.0)) throw ConfigError("correlation entries must lie in [-1, 1]");
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(entries_);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("correlation matrix is not positive definite (Cholesky failed)");
  }
  lower_ = llt.matrixL();
}

CorrelationMatrix sample_correlation_matrix(Eigen::Index dim, Rng& rng) {
  if (dim < 1) throw ConfigError("correlation dimension must be positive");
  Eigen::MatrixXd lower = Eigen::MatrixXd::Zero(dim, dim);
  lower(0, 0) = 1.0;
  if (dim >= 2) {
    double beta = 1.0 + static_cast<double>(dim - 2) / 2.0;
    const double r = 2.0 * rng.beta(beta, beta) - 1.0;
    lower(1, 0) = r;
    lower(1, 1) = std::sqrt(1.0 - r * r);
    Eigen::VectorXd w;
    for (Eigen::Index k = 2; k < dim; ++k) {
      beta -= 0.5;
      const double y = rng.beta(static_cast<double>(k) / 2.0, beta);
      w.resize(k);
      for (Eigen::Index i = 0; i < k; ++i) w[i] = rng.normal();
      w *= std::sqrt(y) / w.norm();
      lower.row(k).head(k) = w.transpose();
      lower(k, k) = std::sqrt(1.0 - y);
    }
  }
  Eigen::MatrixXd r = lower * lower.transpose();
  for (Eigen::Index i = 0; i < dim; ++i) {
    r(i, i) = 1.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double v = std::clamp(r(i, j), -1.0, 1.0);
      r(i, j) = v;
      r(j, i) = v;
    }
  }
  return CorrelationMatrix(std::move(r));
}

CorrelationMatrix build_block_correlation(const CorrelationMatrix& base, int blocks) {
  if (blocks < 1) throw ConfigError("block count must be at least 1");
  const Eigen::Index d = base.dim();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d * blocks, d * blocks);
  for (int b = 0; b < blocks; ++b) out.block(b * d, b * d, d, d) = base.matrix();
  return CorrelationMatrix(std::move(out));
}

Eigen::MatrixXd sample_copula(Eigen::Index n, const CorrelationMatrix& r, Rng& rng, double df) {
  if (n < 1) throw ConfigError("copula sample size must be positive");
  if (!(df > 0.0)) throw ConfigError("copula degrees of freedom must be positive");
  const Eigen::Index p = r.dim();
  Eigen::MatrixXd eps(n, p);
  Eigen::VectorXd scale(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) eps(i, j) = rng.normal();
    scale[i] = std::sqrt(df / rng.chi_squared(df));
  }
  Eigen::MatrixXd u = eps * r.cholesky().transpose();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      u(i, j) = std::clamp(t_cdf(scale[i] * u(i, j), df), kLowestUniform, kHighestUniform);
    }
  }
  return u;
}

Eigen::MatrixXd transform_margins(const Eigen::MatrixXd& u, std::span<const MarginSpec> margins) {
  if (static_cast<std::size_t>(u.cols()) != margins.size()) {
    throw ConfigError("margin list length (" + std::to_string(margins.size()) +
                      ") does not match column count (" + std::to_string(u.cols()) + ")");
  }
  for (const auto& m : margins) m.validate();
  Eigen::MatrixXd out(u.rows(), u.cols());
  for (Eigen::Index j = 0; j < u.cols(); ++j) {
    const auto& margin = margins[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
      const double v = u(i, j);
      if (!(v > 0.0 && v < 1.0)) throw DataError("copula value outside (0, 1)");
      out(i, j) = margin.quantile(v);
    }
  }
  return out;
}

double calibrate_intercept(std::span<const double> predictor_values, double p0) {
  if (!(p0 > 0.0 && p0 < 1.0)) throw ConfigError("target mean probability must lie in (0, 1)");
  if (predictor_values.empty()) throw DataError("cannot calibrate on zero rows");
  auto mean_prob = [&](double b0) {
    double total = 0.0;
    for (double f : predictor_values) total += sigmoid(b0 + f);
    return total / static_cast<double>(predictor_values.size());
  };
  const double center = logit(p0);
  double lo = center - 1.0;
  double hi = center + 1.0;
  double width = 1.0;
  while (mean_prob(lo) > p0) {
    width *= 2.0;
    lo = center - width;
  }
  width = 1.0;
  while (mean_prob(hi) < p0) {
    width *= 2.0;
    hi = center + width;
  }
  for (int iter = 0; iter < 200 && hi - lo > 1e-10; ++iter) {
    const double mid = lo + (hi - lo) / 2.0;
    (mean_prob(mid) < p0 ? lo : hi) = mid;
  }
  return lo + (hi - lo) / 2.0;
}

PredictorModel::PredictorModel(LinearPredictor linear)
    : model_(std::move(linear)), input_dim_(std::get<LinearPredictor>(model_).coefficients.size()) {}

PredictorModel::PredictorModel(TreePredictor trees, Eigen::Index input_dim)
    : model_(std::move(trees)), input_dim_(input_dim) {
  const auto& tp = std::get<TreePredictor>(model_);
  for (const auto& tree : tp.ensemble.trees) {
    for (int f : tree.split_features()) {
      if (!std::binary_search(tp.active.begin(), tp.active.end(), f) || f >= input_dim) {
        throw ConfigError("tree predictor splits on covariate " + std::to_string(f) +
                          " outside its active set");
      }
    }
  }
}

Eigen::VectorXd PredictorModel::evaluate(const Eigen::MatrixXd& x) const {
  if (x.cols() != input_dim_) {
    throw DataError("predictor expects " + std::to_string(input_dim_) + " covariates, got " +
                    std::to_string(x.cols()));
  }
  if (is_linear()) {
    Eigen::VectorXd f = x * linear().coefficients;
    f.array() += linear().intercept;
    return f;
  }
  return trees().ensemble.margin(x);
}

std::vector<int> PredictorModel::active_set() const {
  if (!is_linear()) return trees().active;
  std::vector<int> out;
  const auto& beta = linear().coefficients;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    if (beta[j] != 0.0) out.push_back(static_cast<int>(j));
  }
  return out;
}

namespace {

std::vector<int> choose_indices(Eigen::Index p, Eigen::Index count, Rng& rng) {
  std::vector<int> all(static_cast<std::size_t>(p));
  std::iota(all.begin(), all.end(), 0);
  // Partial Fisher-Yates: the first `count` slots hold a uniform subset.
  for (Eigen::Index i = 0; i < count; ++i) {
    const auto j = static_cast<std::size_t>(i) + rng.below(static_cast<std::size_t>(p - i));
    std::swap(all[static_cast<std::size_t>(i)], all[j]);
  }
  all.resize(static_cast<std::size_t>(count));
  return all;
}

}  // namespace

LinearPredictor make_linear_dgp(Eigen::Index p, Eigen::Index n_nonzero, double coef_low,
                                double coef_high, Rng& rng) {
  if (n_nonzero < 0 || n_nonzero > p) throw ConfigError("n_nonzero must lie in [0, p]");
  if (!(coef_low < coef_high)) throw ConfigError("coefficient range must satisfy low < high");
  LinearPredictor out;
  out.coefficients = Eigen::VectorXd::Zero(p);
  for (int j : choose_indices(p, n_nonzero, rng)) out.coefficients[j] = rng.uniform(coef_low, coef_high);
  return out;
}

Eigen::VectorXd draw_tree_dgp_response(Eigen::Index n, const TreeDgpOptions& opts, Rng& rng) {
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool b = rng.bernoulli(0.5);
    const double e1 = rng.exponential(opts.rate_positive);
    const double e2 = rng.exponential(opts.rate_negative);
    y[i] = b ? e1 : -e2;
  }
  return y;
}

TreePredictor make_tree_dgp(const CorrelationMatrix& r, std::span<const MarginSpec> margins,
                            Eigen::Index active_count, Rng& rng, const TreeDgpOptions& opts,
                            double copula_df) {
  const Eigen::Index p = r.dim();
  if (active_count < 1 || active_count > p) throw ConfigError("active_count must lie in [1, p]");
  const Eigen::MatrixXd x =
      transform_margins(sample_copula(opts.construction_rows, r, rng, copula_df), margins);
  const Eigen::VectorXd response = draw_tree_dgp_response(opts.construction_rows, opts, rng);
  std::vector<int> active = choose_indices(p, active_count, rng);
  std::sort(active.begin(), active.end());

  Eigen::MatrixXd x_active(x.rows(), active_count);
  for (Eigen::Index j = 0; j < active_count; ++j) x_active.col(j) = x.col(active[static_cast<std::size_t>(j)]);
  BoostOptions boost;
  boost.shrinkage = opts.shrinkage;
  boost.max_depth = opts.max_depth;
  boost.min_leaf = opts.min_leaf;
  boost.lambda_leaf = 0.0;
  boost.loss = BoostLoss::Squared;
  TreePredictor out;
  out.ensemble = fit_boost_regression(x_active, response, opts.n_trees, boost);
  for (auto& tree : out.ensemble.trees) {
    for (auto& node : tree.mutable_nodes()) {
      if (!node.is_leaf()) node.feature = active[static_cast<std::size_t>(node.feature)];
    }
  }
  out.active = std::move(active);
  return out;
}

void DgpSpec::validate() const {
  if (static_cast<Eigen::Index>(margins.size()) != correlation.dim()) {
    throw ConfigError("margin count (" + std::to_string(margins.size()) +
                      ") must equal the correlation dimension (" +
                      std::to_string(correlation.dim()) + ")");
  }
  for (const auto& m : margins) m.validate();
  if (predictor.input_dim() != correlation.dim()) {
    throw ConfigError("predictor input dimension does not match the covariate count");
  }
  if (!(target_mean_prob > 0.0 && target_mean_prob < 1.0)) {
    throw ConfigError("p0 must lie in (0, 1)");
  }
  if (!(copula_df > 0.0)) throw ConfigError("copula_df must be positive");
}

GeneratedDataset generate_dataset(const DgpSpec& spec, Eigen::Index n, Rng& rng) {
  spec.validate();
  if (n < 1) throw ConfigError("dataset size must be positive");
  GeneratedDataset out;
  out.data.x = transform_margins(sample_copula(n, spec.correlation, rng, spec.copula_df), spec.margins);
  const Eigen::VectorXd f = spec.predictor.evaluate(out.data.x);
  out.intercept = calibrate_intercept(std::span<const double>(f.data(), static_cast<std::size_t>(f.size())),
                                      spec.target_mean_prob);
  out.data.y.resize(static_cast<std::size_t>(n));
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double prob = sigmoid(out.intercept + f[i]);
    total += prob;
    out.data.y[static_cast<std::size_t>(i)] = rng.uniform() < prob ? 1 : 0;
  }
  out.mean_probability = total / static_cast<double>(n);
  out.data.feature_names.reserve(static_cast<std::size_t>(spec.dim()));
  for (Eigen::Index j = 0; j < spec.dim(); ++j) out.data.feature_names.push_back("x" + std::to_string(j + 1));
  return out;
}

}  // namespace fraudsel

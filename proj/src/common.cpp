#include "fraudsel/common.hpp"

#include <cmath>

#include <boost/random/beta_distribution.hpp>
#include <boost/random/chi_squared_distribution.hpp>
#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include "fraudsel/rng.hpp"

namespace fraudsel {

std::size_t Dataset::positives() const {
  std::size_t count = 0;
  for (int label : y) count += label == 1 ? 1 : 0;
  return count;
}

void Dataset::validate() const {
  if (static_cast<std::size_t>(x.rows()) != y.size()) {
    throw DataError("covariate rows (" + std::to_string(x.rows()) +
                    ") do not match label count (" + std::to_string(y.size()) + ")");
  }
  if (!feature_names.empty() && feature_names.size() != cols()) {
    throw DataError("feature name count does not match covariate columns");
  }
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] != 0 && y[i] != 1) {
      throw DataError("label at row " + std::to_string(i) + " is not binary");
    }
  }
  if (!x.allFinite()) throw DataError("covariates contain non-finite values");
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.x.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
  out.y.resize(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.x.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(rows[r]));
    out.y[r] = y[rows[r]];
  }
  out.feature_names = feature_names;
  return out;
}

double sigmoid(double eta) {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

double logit(double p) { return std::log(p) - std::log1p(-p); }

double softplus(double x) {
  if (x > 0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double logistic_loss(std::span<const int> y, const Eigen::VectorXd& margin) {
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double eta = margin[static_cast<Eigen::Index>(i)];
    total += softplus(eta) - (y[i] == 1 ? eta : 0.0);
  }
  return y.empty() ? 0.0 : total / static_cast<double>(y.size());
}

std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return mix_seed(mix_seed(master) ^ mix_seed(stream + 0x632BE59BD9B4E019ULL));
}

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

double Rng::uniform() {
  boost::random::uniform_real_distribution<double> dist(0.0, 1.0);
  for (;;) {
    const double u = dist(engine_);
    if (u > 0.0) return u;
  }
}

double Rng::uniform(double low, double high) {
  for (;;) {
    const double v = low + (high - low) * uniform();
    if (v > low && v < high) return v;
  }
}

double Rng::normal() {
  boost::random::normal_distribution<double> dist(0.0, 1.0);
  return dist(engine_);
}

double Rng::chi_squared(double df) {
  boost::random::chi_squared_distribution<double> dist(df);
  return dist(engine_);
}

double Rng::beta(double a, double b) {
  boost::random::beta_distribution<double> dist(a, b);
  return dist(engine_);
}

double Rng::exponential(double rate) {
  boost::random::exponential_distribution<double> dist(rate);
  return dist(engine_);
}

bool Rng::bernoulli(double p) { return uniform() < p; }

std::size_t Rng::below(std::size_t n) {
  boost::random::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(engine_);
}

}  // namespace fraudsel

#include <doctest.h>

#include <cmath>
#include <numeric>

#include "fraudsel/criteria.hpp"
#include "fraudsel/model_io.hpp"
#include "fraudsel/rng.hpp"
#include "fraudsel/tree_boost.hpp"

using namespace fraudsel;

namespace {

Dataset random_tree_data(std::size_t n, Eigen::Index p, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  d.x.resize(static_cast<Eigen::Index>(n), p);
  for (Eigen::Index i = 0; i < d.x.size(); ++i) d.x.data()[i] = std::round(rng.normal() * 8) / 8;
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const double eta = (d.x(r, 0) > 0 ? 1.2 : -0.8) + 0.7 * d.x(r, 1 % p) * d.x(r, 0);
    d.y.push_back(rng.bernoulli(sigmoid(eta)));
  }
  if (d.positives() == 0) d.y[0] = 1;
  if (d.positives() == n) d.y[0] = 0;
  return d;
}

}  // namespace

TEST_CASE("stage zero predicts the sample mean") {
  const Dataset d = random_tree_data(90, 3, 1);
  const BoostModel m = fit_boost(d, 5);
  const double ybar = static_cast<double>(d.positives()) / static_cast<double>(d.rows());
  const Eigen::VectorXd p = staged_predict_proba(m, d.x, 0);
  CHECK((p.array() - ybar).abs().maxCoeff() < 1e-12);
  CHECK(m.base_score == doctest::Approx(logit(ybar)));
}

TEST_CASE("one stump on a separating binary covariate ranks positives first") {
  Dataset d;
  d.x.resize(6, 1);
  d.x << 1, 0, 1, 0, 0, 1;
  d.y = {1, 0, 1, 0, 0, 1};
  BoostOptions opts;
  opts.max_depth = 1;
  opts.shrinkage = 1.0;
  opts.min_leaf = 1;
  const BoostModel m = fit_boost(d, 1, opts);
  REQUIRE(m.size() == 1);
  const Eigen::VectorXd f = m.margin(d.x);
  const auto sel = top_k_labels(std::span<const double>(f.data(), 6), 3);
  CHECK(fraud_loss(d.y, sel) == 0);
}

TEST_CASE("training loss never increases across rounds") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Dataset d = random_tree_data(120, 4, 10 + seed);
    const BoostModel m = fit_boost(d, 60);
    REQUIRE(m.training_loss.size() == 61);
    for (std::size_t i = 1; i < m.training_loss.size(); ++i) CHECK(m.training_loss[i] <= m.training_loss[i - 1]);
    // The recorded loss is the loss of the staged predictor.
    const Eigen::VectorXd f = m.staged_margin(d.x, 30);
    CHECK(logistic_loss(d.y, f) == doctest::Approx(m.training_loss[30]).epsilon(1e-12));
  }
}

TEST_CASE("staged prediction equals a refit with fewer rounds") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Dataset d = random_tree_data(20, 3, 40 + seed);
    BoostOptions opts;
    opts.min_leaf = 2;
    const BoostModel full = fit_boost(d, 15, opts);
    for (std::size_t m = 0; m <= 15; ++m) {
      const BoostModel prefix = fit_boost(d, m, opts);
      const Eigen::VectorXd a = full.staged_margin(d.x, m);
      const Eigen::VectorXd b = prefix.margin(d.x);
      CHECK((a.array() == b.array()).all());
    }
  }
}

TEST_CASE("trees respect depth and leaf size limits") {
  const Dataset d = random_tree_data(200, 5, 60);
  BoostOptions opts;
  opts.max_depth = 2;
  opts.min_leaf = 15;
  const BoostModel m = fit_boost(d, 40, opts);
  for (const auto& tree : m.trees) {
    CHECK(tree.depth() <= 2);
    for (const auto& node : tree.nodes()) {
      if (node.is_leaf()) {
        CHECK(node.count >= 15);
        CHECK(std::isfinite(node.value));
      } else {
        CHECK(node.left > 0);
        CHECK(node.right > 0);
      }
    }
  }
}

TEST_CASE("monotone transform of a feature keeps the same predictions") {
  Dataset d = random_tree_data(150, 3, 70);
  d.x.col(2) = d.x.col(2).array().abs() + 0.5;
  Dataset t = d;
  t.x.col(2) = t.x.col(2).array().exp();
  const BoostModel a = fit_boost(d, 25);
  const BoostModel b = fit_boost(t, 25);
  CHECK((a.margin(d.x) - b.margin(t.x)).lpNorm<Eigen::Infinity>() < 1e-12);
  for (std::size_t j = 0; j < a.trees.size(); ++j) CHECK(a.trees[j].split_features() == b.trees[j].split_features());
}

TEST_CASE("boosting is deterministic") {
  const Dataset d = random_tree_data(100, 4, 80);
  const BoostModel a = fit_boost(d, 20);
  const BoostModel b = fit_boost(d, 20);
  CHECK((a.margin(d.x).array() == b.margin(d.x).array()).all());
}

TEST_CASE("staged path wrapper") {
  const Dataset d = random_tree_data(80, 3, 90);
  auto model = std::make_shared<const BoostModel>(fit_boost(d, 12));
  CHECK_THROWS_AS(model->staged_margin(d.x, 13), std::out_of_range);

  const ModelPath last = as_model_path(model, {12});
  CHECK(last.size() == 1);
  CHECK((last.margin(0, d.x) - model->margin(d.x)).lpNorm<Eigen::Infinity>() == 0.0);

  const ModelPath zero = as_model_path(model, {0});
  CHECK((zero.margin(0, d.x).array() == model->base_score).all());

  std::vector<std::size_t> grid(12);
  std::iota(grid.begin(), grid.end(), 1);
  const ModelPath full = as_model_path(model, grid);
  CHECK(full.size() == 12);
  CHECK(full.family() == PathFamily::Boost);
  const Eigen::MatrixXd all = full.margins(d.x);
  CHECK((all.col(4) - model->staged_margin(d.x, 5)).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("single-class data is rejected") {
  Dataset d = random_tree_data(30, 2, 100);
  std::fill(d.y.begin(), d.y.end(), 0);
  CHECK_THROWS_AS(fit_boost(d, 3), DataError);
}

TEST_CASE("squared-loss boosting reduces the residual sum of squares") {
  Rng rng(5);
  Eigen::MatrixXd x(100, 2);
  Eigen::VectorXd r(100);
  for (Eigen::Index i = 0; i < 100; ++i) {
    x(i, 0) = rng.normal();
    x(i, 1) = rng.normal();
    r[i] = (x(i, 0) > 0 ? 3.0 : -1.0) + 0.1 * rng.normal();
  }
  BoostOptions opts;
  opts.loss = BoostLoss::Squared;
  opts.lambda_leaf = 0.0;
  const BoostModel m = fit_boost_regression(x, r, 50, opts);
  for (std::size_t i = 1; i < m.training_loss.size(); ++i) CHECK(m.training_loss[i] <= m.training_loss[i - 1]);
  CHECK(m.training_loss.back() < 0.1 * m.training_loss.front());
}

TEST_CASE("ensemble JSON round trip is exact") {
  const Dataset d = random_tree_data(100, 3, 110);
  const BoostModel m = fit_boost(d, 10);
  const BoostModel back = boost_model_from_json(json::parse(to_json(m).dump()));
  CHECK((m.margin(d.x).array() == back.margin(d.x).array()).all());
}

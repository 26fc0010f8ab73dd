#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <set>
#include <sstream>

#include "fraudsel/validation.hpp"
#include "oracles.hpp"

using namespace fraudsel;

namespace {

// Path of `size` entries that all score rows by column `col` of x, whatever
// the training data.
Fitter column_fitter(std::size_t size, Eigen::Index col, std::atomic<int>* calls = nullptr) {
  return [=](const Dataset&) {
    if (calls) ++*calls;
    std::vector<double> tuning(size);
    for (std::size_t t = 0; t < size; ++t) tuning[t] = static_cast<double>(t);
    auto pred = std::make_shared<FunctionPathPredictor>(size, [=](const Eigen::MatrixXd& x) {
      Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(size));
      for (std::size_t t = 0; t < size; ++t) out.col(static_cast<Eigen::Index>(t)) = x.col(col);
      return out;
    });
    return ModelPath(PathFamily::Custom, tuning, pred);
  };
}

// Column 0 noise, column 1 a copy of the label.
Dataset labelled_data(std::size_t n, double rate, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  d.x.resize(static_cast<Eigen::Index>(n), 2);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = rng.bernoulli(rate);
    d.y.push_back(y);
    d.x(static_cast<Eigen::Index>(i), 0) = rng.normal();
    d.x(static_cast<Eigen::Index>(i), 1) = y;
  }
  return d;
}

ValidationPlan cv_plan(int folds, int repeats, bool stratified, std::uint64_t seed) {
  return ValidationPlan{"cv", CvScheme{folds, repeats, stratified}, seed};
}

void check_partition(const Partition& part, std::size_t n) {
  std::vector<int> seen(n, 0);
  std::size_t lo = n;
  std::size_t hi = 0;
  for (const auto& fold : part) {
    lo = std::min(lo, fold.size());
    hi = std::max(hi, fold.size());
    for (auto i : fold) ++seen[i];
  }
  CHECK(hi - lo <= 1);
  for (int s : seen) CHECK(s == 1);
}

}  // namespace

TEST_CASE("fold construction") {
  std::vector<int> y(10, 0);
  y[0] = 1;
  Rng rng(1);
  const auto parts = make_folds(10, 2, 1, false, y, rng);
  REQUIRE(parts.size() == 1);
  CHECK(parts[0][0].size() == 5);
  CHECK(parts[0][1].size() == 5);
  check_partition(parts[0], 10);

  std::vector<int> y7(7, 0);
  const auto seven = make_folds(7, 3, 1, false, y7, rng);
  std::multiset<std::size_t> sizes;
  for (const auto& f : seven[0]) sizes.insert(f.size());
  CHECK(sizes == std::multiset<std::size_t>{2, 2, 3});

  std::vector<int> y100(100, 0);
  for (int i = 0; i < 20; ++i) y100[static_cast<std::size_t>(i * 5)] = 1;
  const auto strat = make_folds(100, 5, 3, true, y100, rng);
  CHECK(strat.size() == 3);
  for (const auto& part : strat) {
    check_partition(part, 100);
    for (const auto& fold : part) {
      int pos = 0;
      for (auto i : fold) pos += y100[i];
      CHECK(pos == 4);
    }
  }
}

TEST_CASE("stratified folds keep the class ratio within one row") {
  Rng rng(2);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 30 + rng.below(100);
    std::vector<int> y(n);
    for (auto& v : y) v = rng.bernoulli(0.25);
    const int folds = 2 + static_cast<int>(rng.below(4));
    const auto pos_total = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
    if (pos_total < static_cast<std::size_t>(folds) || n - pos_total < static_cast<std::size_t>(folds)) continue;
    const double rate = static_cast<double>(pos_total) / static_cast<double>(n);
    const auto parts = make_folds(n, folds, 1, true, y, rng);
    for (const auto& fold : parts[0]) {
      double pos = 0;
      for (auto i : fold) pos += y[i];
      CHECK(std::abs(pos / static_cast<double>(fold.size()) - rate) <= 1.0 / static_cast<double>(fold.size()));
    }
  }
}

TEST_CASE("fold construction errors") {
  std::vector<int> y{1, 0, 0, 0, 0};
  Rng rng(3);
  CHECK_THROWS_AS(make_folds(5, 1, 1, false, y, rng), ConfigError);
  CHECK_THROWS_AS(make_folds(5, 6, 1, false, y, rng), ConfigError);
  CHECK_THROWS_AS(make_folds(5, 2, 1, true, y, rng), DataError);
}

TEST_CASE("cv statistic on a six-row hand instance") {
  // Seed 7 deals folds {1, 2, 5} and {0, 3, 4}.
  Dataset d;
  d.x.resize(6, 1);
  d.x << 0.9, 0.25, 0.3, 0.7, 0.1, 0.2;
  d.y = {1, 0, 1, 0, 0, 1};
  const ValidationPlan plan = cv_plan(2, 1, false, 7);
  Rng rng(plan.seed);
  const auto parts = make_folds(6, 2, 1, false, d.y, rng);
  REQUIRE(parts[0][0] == std::vector<std::size_t>{1, 2, 5});
  REQUIRE(parts[0][1] == std::vector<std::size_t>{0, 3, 4});

  const Fitter f = column_fitter(2, 0);
  // k = 1 per fold: fold A picks row 2 (positive), fold B row 0 (positive).
  const CriterionTable t1 = cv_fraud_loss(f, d, plan, 0.34);
  CHECK(t1.statistic == std::vector<double>{0.0, 0.0});
  // k = 2: each fold takes one negative.
  const CriterionTable t2 = cv_fraud_loss(f, d, plan, 0.67);
  CHECK(t2.statistic == std::vector<double>{0.5, 0.5});
  // Fold AUCs 1/2 and 2/2.
  const CriterionTable a = cv_auc(f, d, plan);
  CHECK(a.statistic[0] == doctest::Approx(0.75));
  CHECK(a.criterion == Criterion::Auc);
}

TEST_CASE("selecting every row gives the fold negative rate") {
  const Dataset d = labelled_data(57, 0.3, 4);
  const ValidationPlan plan = cv_plan(3, 2, false, 5);
  const CriterionTable t = cv_fraud_loss(column_fitter(4, 0), d, plan, 1.0);
  Rng rng(plan.seed);
  const auto parts = make_folds(57, 3, 2, false, d.y, rng);
  double expected = 0.0;
  for (const auto& part : parts) {
    double rep = 0.0;
    for (const auto& fold : part) {
      double neg = 0;
      for (auto i : fold) neg += 1 - d.y[i];
      rep += neg / static_cast<double>(fold.size());
    }
    expected += rep / 3.0;
  }
  expected /= 2.0;
  for (double s : t.statistic) CHECK(s == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("perfect and constant fitters") {
  const Dataset d = labelled_data(200, 0.3, 6);
  const ValidationPlan plan = cv_plan(5, 2, true, 7);
  const CriterionTable perfect = cv_fraud_loss(column_fitter(3, 1), d, plan, 0.2);
  for (double s : perfect.statistic) CHECK(s == 0.0);
  CHECK(cv_auc(column_fitter(3, 1), d, plan).statistic[0] == 1.0);

  Dataset flat = d;
  flat.x.col(0).setConstant(0.5);
  CHECK(cv_auc(column_fitter(3, 0), flat, plan).statistic[1] == 0.0);

  const CriterionTable noise = cv_fraud_loss(column_fitter(5, 0), d, plan, 0.2);
  for (double s : noise.statistic) {
    CHECK(s == noise.statistic[0]);
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
  }
  const ValidationPlan boot{"boot", BootstrapScheme{9, false}, 8};
  for (double s : boot_fraud_loss(column_fitter(3, 1), d, boot, 0.2).statistic) CHECK(s == 0.0);
}

TEST_CASE("bootstrap statistic on a single hand fold") {
  // Seed 4 leaves out rows {1, 2, 5, 7}.
  Dataset d;
  d.x.resize(8, 1);
  d.x << 0.5, 0.9, 0.4, 0.6, 0.3, 0.2, 0.8, 0.1;
  d.y = {1, 0, 1, 0, 0, 1, 0, 1};
  const ValidationPlan plan{"boot", BootstrapScheme{1, false}, 4};
  Rng rng(plan.seed);
  const auto folds = make_bootstrap_folds(8, 1, false, d.y, rng);
  REQUIRE(folds[0].left_out == std::vector<std::size_t>{1, 2, 5, 7});
  // k = 2 picks rows 1 (negative) and 2 (positive).
  CHECK(boot_fraud_loss(column_fitter(1, 0), d, plan, 0.5).statistic[0] == 0.5);
}

TEST_CASE("bootstrap folds") {
  std::vector<int> y(1000);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = i % 5 == 0;
  Rng rng(9);
  const auto folds = make_bootstrap_folds(1000, 500, false, y, rng);
  double left = 0.0;
  for (const auto& f : folds) {
    CHECK(f.sample.size() == 1000);
    CHECK(std::is_sorted(f.left_out.begin(), f.left_out.end()));
    std::set<std::size_t> drawn(f.sample.begin(), f.sample.end());
    for (auto i : f.left_out) CHECK(drawn.count(i) == 0);
    CHECK(drawn.size() + f.left_out.size() == 1000);
    left += static_cast<double>(f.left_out.size()) / 1000.0;
  }
  CHECK(std::abs(left / 500 - 0.368) < 0.01);

  const auto strat = make_bootstrap_folds(1000, 5, true, y, rng);
  for (const auto& f : strat) {
    int pos = 0;
    for (auto i : f.sample) pos += y[i];
    CHECK(pos == 200);
  }
}

TEST_CASE("one path is fitted per fold") {
  const Dataset d = labelled_data(90, 0.3, 10);
  std::atomic<int> calls{0};
  const Fitter f = column_fitter(25, 0, &calls);
  const ValidationPlan plan = cv_plan(3, 4, true, 11);
  const ValidationRun run = run_validation(f, d, plan);
  CHECK(calls.load() == 12);
  CHECK(plan.fit_count() == 12);
  calls = 0;
  // Criteria at many tau values reuse the stored predictions.
  for (double tau : {0.1, 0.2, 0.3}) run.fraud_loss(tau);
  run.auc();
  CHECK(calls.load() == 0);
}

TEST_CASE("single-class training part is an error; single-class evaluation folds are skipped") {
  Dataset d = labelled_data(10, 0.0, 12);
  d.y[3] = 1;
  d.x(3, 1) = 1;
  CHECK_THROWS_AS(cv_fraud_loss(column_fitter(2, 0), d, cv_plan(2, 1, false, 1), 0.5), DataError);

  Dataset e = labelled_data(12, 0.0, 13);
  e.y[0] = e.y[1] = 1;
  // Two positives over three folds: at least one evaluation fold is negative only.
  const ValidationRun run = run_validation(column_fitter(2, 0), e, cv_plan(3, 1, false, 2));
  CHECK(run.auc().skipped_folds >= 1);
}

TEST_CASE("selection rule") {
  CriterionTable t;
  t.tuning_values = {10, 5, 2, 1};
  t.criterion = Criterion::FraudLoss;
  t.statistic = {0.4, 0.3, 0.2, 0.1};
  CHECK(select_tuning(t).index == 3);
  t.statistic = {0.2, 0.2, 0.2, 0.2};
  CHECK(select_tuning(t).index == 0);
  CHECK(select_tuning(t).tuning_value == 10);
  t.criterion = Criterion::Auc;
  t.statistic = {0.5, 0.7, 0.7, 0.6};
  CHECK(select_tuning(t).index == 1);

  Rng rng(14);
  for (int rep = 0; rep < 200; ++rep) {
    t.criterion = rep % 2 ? Criterion::Auc : Criterion::FraudLoss;
    for (auto& s : t.statistic) s = static_cast<double>(rng.below(4)) / 4;
    std::size_t best = 0;
    for (std::size_t i = 1; i < 4; ++i) {
      const bool better = t.criterion == Criterion::Auc ? t.statistic[i] > t.statistic[best]
                                                       : t.statistic[i] < t.statistic[best];
      if (better) best = i;
    }
    CHECK(select_tuning(t).index == best);
  }
}

TEST_CASE("parity repetitions") {
  CHECK(parity_repetitions(10) == 1);
  CHECK(parity_repetitions(5) == 2);
  CHECK(parity_repetitions(3) == 4);
  CHECK(parity_repetitions(2) == 9);
  CHECK(parity_repetitions(10, true) == 2);
  CHECK(parity_repetitions(5, true) == 4);
  CHECK(parity_repetitions(3, true) == 8);
  CHECK(parity_repetitions(2, true) == 18);
  CHECK(parity_bootstrap_folds() == 9);
  CHECK(parity_bootstrap_folds(true) == 18);
  CHECK_THROWS_AS(parity_repetitions(4), ConfigError);
}

TEST_CASE("selection sizes round half up and stay in range") {
  CHECK(selection_size(0.5, 5) == 3);
  CHECK(selection_size(0.34, 3) == 1);
  CHECK(selection_size(0.01, 10) == 1);
  CHECK(selection_size(1.0, 10) == 10);
}

TEST_CASE("validation is reproducible and thread-count independent") {
  const Dataset d = labelled_data(150, 0.25, 15);
  const Fitter f = column_fitter(3, 0);
  const ValidationPlan plan = cv_plan(5, 3, false, 16);
  const CriterionTable a = cv_fraud_loss(f, d, plan, 0.2, 1);
  const CriterionTable b = cv_fraud_loss(f, d, plan, 0.2, 4);
  CHECK(a.statistic == b.statistic);
  CHECK(a.per_fold == b.per_fold);
  std::ostringstream out;
  a.write_csv(out);
  CHECK(out.str().rfind("tuning,statistic,criterion\n0,", 0) == 0);
}

#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fraudsel/criteria.hpp"
#include "fraudsel/experiments.hpp"

using namespace fraudsel;

namespace {

json small_study_json() {
  return json::parse(R"({
    "dgp": {"p": 6, "correlation_seed": 1, "margins": {"random": true, "seed": 2},
            "predictor": {"type": "linear", "n_nonzero": 3, "seed": 3}, "p0": 0.2},
    "n_train": 120, "n_test": 30,
    "estimator": {"type": "ridge", "lambda_grid_length": 3},
    "plans": [{"scheme": "cv", "folds": 2, "repeats": 2, "stratified": true, "seed": 5},
              {"scheme": "bootstrap", "folds": 4, "seed": 6}],
    "criteria": ["fraud", "auc"],
    "replicates": 3,
    "master_seed": 77
  })");
}

ReplicateRecord hand_record(std::vector<std::uint32_t> sel, std::vector<std::uint32_t> opt) {
  ReplicateRecord r;
  r.ok = true;
  r.k_grid = {10};
  r.oracle_fp = std::move(opt);
  r.oracle_index = {0};
  SelectionRecord s;
  s.plan = "p";
  s.selected_fp = std::move(sel);
  s.selected_index = {0};
  r.selections.push_back(s);
  return r;
}

}  // namespace

TEST_CASE("relative fraud loss") {
  CHECK(relative_fraud_loss(std::vector<double>{0.3}, std::vector<double>{0.25}) == doctest::Approx(1.2));
  CHECK(relative_fraud_loss(std::vector<double>{0.2, 0.4}, std::vector<double>{0.2, 0.4}) == 1.0);
  CHECK(relative_fraud_loss(std::vector<double>{0.0, 0.0}, std::vector<double>{0.0, 0.0}) == 1.0);
  CHECK(std::isinf(relative_fraud_loss(std::vector<double>{0.1}, std::vector<double>{0.0})));
  CHECK_THROWS(relative_fraud_loss(std::vector<double>{}, std::vector<double>{}));
}

TEST_CASE("aggregation over hand records") {
  // FP/k selected: 0.3, 0.2, 0.4; oracle: 0.2, 0.2, 0.3. RFL = 0.9 / 0.7.
  const std::vector<ReplicateRecord> recs{hand_record({3}, {2}), hand_record({2}, {2}),
                                          hand_record({4}, {3})};
  const std::vector<std::size_t> grid{10};
  const RflTable t = aggregate_rfl(recs, grid, 50, 0.16, 0.25);
  REQUIRE(t.rows.size() == 1);
  CHECK(t.rows[0].rfl[0] == doctest::Approx(0.9 / 0.7));
  CHECK(t.rows[0].mean_selected[0] == doctest::Approx(0.3));
  CHECK(t.rows[0].average_focus == doctest::Approx(0.9 / 0.7));
  CHECK(t.successful == 3);

  std::vector<ReplicateRecord> failed = recs;
  for (auto& r : failed) r.ok = false;
  CHECK_THROWS_AS(aggregate_rfl(failed, grid, 50), DataError);
}

TEST_CASE("constant RFL averages to the constant") {
  std::vector<ReplicateRecord> recs;
  ReplicateRecord r;
  r.ok = true;
  r.k_grid = default_k_grid(200);
  SelectionRecord s;
  s.plan = "p";
  for (std::size_t k : r.k_grid) {
    r.oracle_fp.push_back(static_cast<std::uint32_t>(k));
    s.selected_fp.push_back(static_cast<std::uint32_t>(2 * k));
  }
  r.selections.push_back(s);
  recs.push_back(r);
  const RflTable t = aggregate_rfl(recs, r.k_grid, 200);
  CHECK(t.rows[0].average_all == doctest::Approx(2.0));
  CHECK(t.rows[0].average_focus == doctest::Approx(2.0));
}

TEST_CASE("default k grid") {
  const auto grid = default_k_grid(1000);
  REQUIRE(grid.size() == 99);
  CHECK(grid.front() == 10);
  CHECK(grid.back() == 990);
  std::size_t focus = 0;
  for (auto k : grid) focus += k >= 160 && k <= 250;
  CHECK(focus == 10);
  // Small test sets deduplicate.
  const auto small = default_k_grid(30);
  CHECK(std::is_sorted(small.begin(), small.end()));
  CHECK(std::adjacent_find(small.begin(), small.end()) == small.end());
  CHECK(small.back() <= 30);
}

TEST_CASE("replicate oracle matches exhaustive evaluation") {
  ExperimentConfig c = experiment_config_from_json(small_study_json());
  const DgpSpec spec = materialize(c.dgp);
  const ReplicateRecord rec = run_replicate(c, spec, 1);
  REQUIRE(rec.ok);
  REQUIRE(rec.tuning_values.size() == 3);

  const std::uint64_t rs = derive_seed(c.master_seed, 1);
  Rng train_rng(derive_seed(rs, 1));
  Rng test_rng(derive_seed(rs, 2));
  const GeneratedDataset train = generate_dataset(spec, c.n_train, train_rng);
  const GeneratedDataset test = generate_dataset(spec, c.n_test, test_rng);
  CHECK(rec.test_positives == test.data.positives());
  const ModelPath path = make_fitter(c.estimator, train.data)(train.data);
  for (std::size_t i = 0; i < c.k_grid.size(); ++i) {
    const std::size_t k = c.k_grid[i];
    std::size_t best = 0;
    std::size_t best_fp = c.k_grid.back() + 1;
    for (std::size_t t = 0; t < path.size(); ++t) {
      const Eigen::VectorXd m = path.margin(t, test.data.x);
      const std::size_t fp = fraud_loss(test.data.y, top_k_labels(std::span<const double>(m.data(), m.size()), k));
      if (fp < best_fp) {
        best_fp = fp;
        best = t;
      }
    }
    CHECK(rec.oracle_index[i] == best);
    CHECK(rec.oracle_fp[i] == best_fp);
    for (const auto& s : rec.selections) CHECK(s.selected_fp[i] >= rec.oracle_fp[i]);
  }
  // AUC picks one index for the whole grid.
  for (const auto& s : rec.selections) {
    if (s.criterion == Criterion::Auc) {
      for (auto idx : s.selected_index) CHECK(idx == s.selected_index.front());
    }
  }
}

TEST_CASE("path of length one and full-set selection give RFL 1") {
  json j = small_study_json();
  j["estimator"]["lambda_grid_length"] = 1;
  j["replicates"] = 2;
  const StudyResult one = run_study(experiment_config_from_json(j));
  for (const auto& row : one.table.rows) {
    for (double v : row.rfl) CHECK(v == 1.0);
  }

  j = small_study_json();
  j["k_grid"] = {30};
  const StudyResult full = run_study(experiment_config_from_json(j));
  for (const auto& row : full.table.rows) CHECK(row.rfl[0] == 1.0);
}

TEST_CASE("study outputs") {
  const ExperimentConfig c = experiment_config_from_json(small_study_json());
  const StudyResult a = run_study(c, 1);
  CHECK(a.table.successful == 3);
  CHECK(a.table.rows.size() == 4);
  for (const auto& row : a.table.rows) {
    for (double v : row.rfl) CHECK(v >= 1.0 - 1e-12);
  }
  const StudyResult b = run_study(c, 3);
  CHECK(rfl_by_k_csv(a.table) == rfl_by_k_csv(b.table));
  CHECK(records_jsonl(a.records) == records_jsonl(b.records));

  const std::string summary = summary_csv(a.table, c.plans);
  std::istringstream in(summary);
  std::string line;
  std::getline(in, line);
  CHECK(line ==
        "plan,scheme,folds,repeats,stratified,criterion,avg_rfl_all,avg_rfl_focus,replicates_ok,replicates_failed");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 4);

  const std::string by_k = rfl_by_k_csv(a.table);
  CHECK(by_k.rfind("plan,criterion,k,tau,rfl,mean_selected_loss,mean_oracle_loss\n", 0) == 0);
  CHECK(static_cast<std::size_t>(std::count(by_k.begin(), by_k.end(), '\n')) == 1 + 4 * c.k_grid.size());
}

TEST_CASE("study config errors") {
  json j = small_study_json();
  j["k_grid"] = {0};
  CHECK_THROWS_AS(experiment_config_from_json(j), ConfigError);
  j = small_study_json();
  j["bogus"] = 1;
  CHECK_THROWS_AS(experiment_config_from_json(j), ConfigError);
  j = small_study_json();
  j.erase("plans");
  CHECK_THROWS_AS(experiment_config_from_json(j), ConfigError);
  j = small_study_json();
  j["plans"] = "parity";
  CHECK(experiment_config_from_json(j).plans.size() == 20);
}

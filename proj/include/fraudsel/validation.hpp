#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "fraudsel/common.hpp"
#include "fraudsel/model_path.hpp"
#include "fraudsel/rng.hpp"

namespace fraudsel {

struct CvScheme {
  int folds = 2;
  int repeats = 1;
  bool stratified = false;
};

struct BootstrapScheme {
  int folds = 9;
  // Resample each class separately, keeping the class counts.
  bool stratified = false;
};

struct ValidationPlan {
  std::string name;
  std::variant<CvScheme, BootstrapScheme> scheme;
  std::uint64_t seed = 0;

  bool is_bootstrap() const { return std::holds_alternative<BootstrapScheme>(scheme); }
  // Number of path fits the plan performs.
  std::size_t fit_count() const;
  // Throws ConfigError for out-of-range folds/repeats.
  void validate() const;
};

enum class Criterion { FraudLoss, Auc };

std::string to_string(Criterion criterion);
Criterion criterion_from_string(const std::string& name);

// Per-tuning-value out-of-sample statistic.
struct CriterionTable {
  std::vector<double> tuning_values;
  std::vector<double> statistic;
  Criterion criterion = Criterion::FraudLoss;
  double tau = 0.0;  // only meaningful for FraudLoss
  // folds x tuning per-fold values (fraction of false positives or AUC).
  Eigen::MatrixXd per_fold;
  std::size_t skipped_folds = 0;

  void write_csv(std::ostream& out) const;
};

// One partition of {0..n-1} into `folds` disjoint, exhaustive sets.
using Partition = std::vector<std::vector<std::size_t>>;

// D independent partitions with fold sizes differing by at most one. The
// stratified variant deals each class separately. Throws ConfigError if
// folds is outside [2, n], DataError if stratification is impossible.
std::vector<Partition> make_folds(std::size_t n, int folds, int repeats, bool stratified,
                                  std::span<const int> labels, Rng& rng);

struct BootstrapFold {
  std::vector<std::size_t> sample;    // n draws with replacement
  std::vector<std::size_t> left_out;  // ascending rows never drawn
};

std::vector<BootstrapFold> make_bootstrap_folds(std::size_t n, int folds, bool stratified,
                                                std::span<const int> labels, Rng& rng);

// Maps a training set to a fitted path. Must be a pure function of its input
// and return paths of identical tuning values for every input.
using Fitter = std::function<ModelPath(const Dataset&)>;

// Evaluation-set predictions of one fitted path.
struct FoldResult {
  int repetition = 0;
  std::vector<std::size_t> eval_rows;  // ascending
  std::vector<int> eval_labels;
  // fp_curves[t][k]: false positives among the k top-scored rows at tuning t.
  std::vector<std::vector<std::uint32_t>> fp_curves;
  // AUC per tuning value; NaN when the fold holds a single class.
  std::vector<double> auc;
};

// Fitted-once predictions behind every criterion of one plan.
struct ValidationRun {
  ValidationPlan plan;
  std::vector<double> tuning_values;
  std::vector<FoldResult> folds;
  std::size_t empty_folds = 0;  // bootstrap folds with no left-out rows

  // Mean over repetitions of the mean over folds of FP/selected (CV), or the
  // pooled ratio sum FP / sum selected (bootstrap).
  CriterionTable fraud_loss(double tau) const;
  // Mean over folds with both classes present.
  CriterionTable auc() const;
};

// Fits one path per (repetition, fold) and records evaluation predictions.
ValidationRun run_validation(const Fitter& fitter, const Dataset& data, const ValidationPlan& plan,
                             int threads = 1);

// round(tau * n_eval), rounding halves up, clamped to [1, n_eval].
std::size_t selection_size(double tau, std::size_t n_eval);

CriterionTable cv_fraud_loss(const Fitter& fitter, const Dataset& data, const ValidationPlan& plan,
                             double tau, int threads = 1);
CriterionTable boot_fraud_loss(const Fitter& fitter, const Dataset& data,
                               const ValidationPlan& plan, double tau, int threads = 1);
CriterionTable cv_auc(const Fitter& fitter, const Dataset& data, const ValidationPlan& plan,
                      int threads = 1);

struct Selection {
  double tuning_value = 0.0;
  std::size_t index = 0;
};

// argmin for FraudLoss, argmax for AUC; ties go to the lowest index, which is
// the most regularized end of a path.
Selection select_tuning(const CriterionTable& table);

// Repetitions of L-fold CV matching the cost of one 10-fold CV (doubled when
// requested). Throws ConfigError for L outside {2, 3, 5, 10}.
int parity_repetitions(int folds, bool doubled = false);
int parity_bootstrap_folds(bool doubled = false);

}  // namespace fraudsel

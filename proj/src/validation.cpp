#include "fraudsel/validation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "fraudsel/criteria.hpp"
#include "fraudsel/io.hpp"

namespace fraudsel {

std::string to_string(Criterion criterion) {
  return criterion == Criterion::FraudLoss ? "fraud" : "auc";
}

Criterion criterion_from_string(const std::string& name) {
  if (name == "fraud" || name == "fraud_loss") return Criterion::FraudLoss;
  if (name == "auc") return Criterion::Auc;
  throw ConfigError("unknown criterion '" + name + "' (expected 'fraud' or 'auc')");
}

std::size_t ValidationPlan::fit_count() const {
  if (const auto* cv = std::get_if<CvScheme>(&scheme)) {
    return static_cast<std::size_t>(cv->folds) * static_cast<std::size_t>(cv->repeats);
  }
  return static_cast<std::size_t>(std::get<BootstrapScheme>(scheme).folds);
}

void ValidationPlan::validate() const {
  if (const auto* cv = std::get_if<CvScheme>(&scheme)) {
    if (cv->folds < 2) throw ConfigError("cross-validation needs at least 2 folds");
    if (cv->repeats < 1) throw ConfigError("cross-validation needs at least 1 repetition");
  } else if (std::get<BootstrapScheme>(scheme).folds < 1) {
    throw ConfigError("bootstrap validation needs at least 1 fold");
  }
}

void CriterionTable::write_csv(std::ostream& out) const {
  out << "tuning,statistic,criterion\n";
  for (std::size_t t = 0; t < tuning_values.size(); ++t) {
    out << format_double(tuning_values[t]) << ',' << format_double(statistic[t]) << ','
        << to_string(criterion) << '\n';
  }
}

std::vector<Partition> make_folds(std::size_t n, int folds, int repeats, bool stratified,
                                  std::span<const int> labels, Rng& rng) {
  if (folds < 2 || static_cast<std::size_t>(folds) > n) {
    throw ConfigError("fold count " + std::to_string(folds) + " must lie in [2, n=" +
                      std::to_string(n) + "]");
  }
  if (repeats < 1) throw ConfigError("repetitions must be at least 1");
  std::vector<std::size_t> pos;
  std::vector<std::size_t> neg;
  if (stratified) {
    if (labels.size() != n) throw DataError("stratification needs one label per row");
    for (std::size_t i = 0; i < n; ++i) (labels[i] == 1 ? pos : neg).push_back(i);
    if (pos.size() < static_cast<std::size_t>(folds) || neg.size() < static_cast<std::size_t>(folds)) {
      throw DataError("cannot stratify " + std::to_string(pos.size()) + " positives and " +
                      std::to_string(neg.size()) + " negatives into " + std::to_string(folds) +
                      " folds");
    }
  }
  std::vector<Partition> out;
  out.reserve(static_cast<std::size_t>(repeats));
  for (int d = 0; d < repeats; ++d) {
    std::vector<std::size_t> order;
    if (stratified) {
      rng.shuffle(std::span<std::size_t>(pos));
      rng.shuffle(std::span<std::size_t>(neg));
      order = pos;
      order.insert(order.end(), neg.begin(), neg.end());
    } else {
      order.resize(n);
      std::iota(order.begin(), order.end(), std::size_t{0});
      rng.shuffle(std::span<std::size_t>(order));
    }
    Partition part(static_cast<std::size_t>(folds));
    for (std::size_t r = 0; r < order.size(); ++r) part[r % part.size()].push_back(order[r]);
    for (auto& fold : part) std::sort(fold.begin(), fold.end());
    out.push_back(std::move(part));
  }
  return out;
}

std::vector<BootstrapFold> make_bootstrap_folds(std::size_t n, int folds, bool stratified,
                                                std::span<const int> labels, Rng& rng) {
  if (folds < 1) throw ConfigError("bootstrap needs at least one fold");
  if (n == 0) throw DataError("cannot bootstrap an empty dataset");
  std::vector<std::vector<std::size_t>> groups;
  if (stratified) {
    if (labels.size() != n) throw DataError("stratification needs one label per row");
    groups.resize(2);
    for (std::size_t i = 0; i < n; ++i) groups[labels[i] == 1 ? 1 : 0].push_back(i);
  } else {
    groups.emplace_back(n);
    std::iota(groups[0].begin(), groups[0].end(), std::size_t{0});
  }
  std::vector<BootstrapFold> out(static_cast<std::size_t>(folds));
  std::vector<char> drawn(n);
  for (auto& fold : out) {
    std::fill(drawn.begin(), drawn.end(), 0);
    fold.sample.reserve(n);
    for (const auto& group : groups) {
      for (std::size_t i = 0; i < group.size(); ++i) {
        const std::size_t row = group[rng.below(group.size())];
        fold.sample.push_back(row);
        drawn[row] = 1;
      }
    }
    std::sort(fold.sample.begin(), fold.sample.end());
    for (std::size_t i = 0; i < n; ++i) {
      if (!drawn[i]) fold.left_out.push_back(i);
    }
  }
  return out;
}

std::size_t selection_size(double tau, std::size_t n_eval) {
  if (!(tau > 0.0 && tau < 1.0) && tau != 1.0) throw ConfigError("tau must lie in (0, 1]");
  if (n_eval == 0) throw DataError("evaluation set is empty");
  const double k = std::floor(tau * static_cast<double>(n_eval) + 0.5);
  return std::clamp<std::size_t>(static_cast<std::size_t>(k), 1, n_eval);
}

namespace {

struct FoldJob {
  int repetition = 0;
  std::vector<std::size_t> train;
  std::vector<std::size_t> eval;
};

std::vector<FoldJob> plan_jobs(const Dataset& data, const ValidationPlan& plan,
                               std::size_t& empty_folds) {
  Rng rng(plan.seed);
  std::vector<FoldJob> jobs;
  empty_folds = 0;
  if (const auto* cv = std::get_if<CvScheme>(&plan.scheme)) {
    const auto parts = make_folds(data.rows(), cv->folds, cv->repeats, cv->stratified, data.y, rng);
    for (std::size_t d = 0; d < parts.size(); ++d) {
      for (const auto& fold : parts[d]) {
        FoldJob job;
        job.repetition = static_cast<int>(d);
        job.eval = fold;
        std::vector<char> in_eval(data.rows(), 0);
        for (std::size_t i : fold) in_eval[i] = 1;
        for (std::size_t i = 0; i < data.rows(); ++i) {
          if (!in_eval[i]) job.train.push_back(i);
        }
        jobs.push_back(std::move(job));
      }
    }
  } else {
    const auto& boot = std::get<BootstrapScheme>(plan.scheme);
    auto folds = make_bootstrap_folds(data.rows(), boot.folds, boot.stratified, data.y, rng);
    for (std::size_t b = 0; b < folds.size(); ++b) {
      if (folds[b].left_out.empty()) {
        ++empty_folds;
        continue;
      }
      FoldJob job;
      job.repetition = static_cast<int>(b);
      job.train = std::move(folds[b].sample);
      job.eval = std::move(folds[b].left_out);
      jobs.push_back(std::move(job));
    }
  }
  return jobs;
}

FoldResult evaluate_fold(const Fitter& fitter, const Dataset& data, const FoldJob& job,
                         std::vector<double>& tuning) {
  const Dataset train = data.subset(job.train);
  const std::size_t pos = train.positives();
  if (pos == 0 || pos == train.rows()) {
    throw DataError("training part of a validation fold holds a single class; use stratified folds");
  }
  const ModelPath path = fitter(train);
  tuning = path.tuning_values();
  const Dataset eval = data.subset(job.eval);
  const Eigen::MatrixXd margins = path.margins(eval.x);

  FoldResult out;
  out.repetition = job.repetition;
  out.eval_rows = job.eval;
  out.eval_labels = eval.y;
  const std::size_t eval_pos = eval.positives();
  const bool both = eval_pos > 0 && eval_pos < eval.rows();
  out.fp_curves.reserve(path.size());
  out.auc.reserve(path.size());
  for (Eigen::Index t = 0; t < margins.cols(); ++t) {
    const auto col = margins.col(t);
    const std::span<const double> scores(col.data(), static_cast<std::size_t>(col.size()));
    out.fp_curves.push_back(false_positive_curve(eval.y, scores));
    out.auc.push_back(both ? auc_wilcoxon(eval.y, scores) : std::numeric_limits<double>::quiet_NaN());
  }
  return out;
}

}  // namespace

ValidationRun run_validation(const Fitter& fitter, const Dataset& data, const ValidationPlan& plan,
                             int threads) {
  plan.validate();
  data.validate();
  ValidationRun run;
  run.plan = plan;
  const auto jobs = plan_jobs(data, plan, run.empty_folds);
  if (jobs.empty()) throw DataError("validation plan produced no usable folds");
  run.folds.resize(jobs.size());
  std::vector<std::vector<double>> tunings(jobs.size());
  parallel_for(jobs.size(), threads, [&](std::size_t j) {
    run.folds[j] = evaluate_fold(fitter, data, jobs[j], tunings[j]);
  });
  for (const auto& t : tunings) {
    if (t != tunings.front()) {
      throw std::logic_error("fitter returned different tuning grids across folds");
    }
  }
  run.tuning_values = tunings.front();
  return run;
}

CriterionTable ValidationRun::fraud_loss(double tau) const {
  const std::size_t tsize = tuning_values.size();
  CriterionTable table;
  table.criterion = Criterion::FraudLoss;
  table.tau = tau;
  table.tuning_values = tuning_values;
  table.statistic.assign(tsize, 0.0);
  table.per_fold.resize(static_cast<Eigen::Index>(folds.size()), static_cast<Eigen::Index>(tsize));
  table.skipped_folds = empty_folds;

  std::vector<std::size_t> k(folds.size());
  for (std::size_t f = 0; f < folds.size(); ++f) {
    k[f] = selection_size(tau, folds[f].eval_rows.size());
    for (std::size_t t = 0; t < tsize; ++t) {
      table.per_fold(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(t)) =
          static_cast<double>(folds[f].fp_curves[t][k[f]]) / static_cast<double>(k[f]);
    }
  }

  if (plan.is_bootstrap()) {
    for (std::size_t t = 0; t < tsize; ++t) {
      double fp = 0.0;
      double selected = 0.0;
      for (std::size_t f = 0; f < folds.size(); ++f) {
        fp += folds[f].fp_curves[t][k[f]];
        selected += static_cast<double>(k[f]);
      }
      table.statistic[t] = fp / selected;
    }
    return table;
  }

  const auto& cv = std::get<CvScheme>(plan.scheme);
  for (std::size_t t = 0; t < tsize; ++t) {
    double outer = 0.0;
    std::size_t f = 0;
    for (int d = 0; d < cv.repeats; ++d) {
      double inner = 0.0;
      for (int l = 0; l < cv.folds; ++l, ++f) {
        inner += table.per_fold(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(t));
      }
      outer += inner / cv.folds;
    }
    table.statistic[t] = outer / cv.repeats;
  }
  return table;
}

CriterionTable ValidationRun::auc() const {
  const std::size_t tsize = tuning_values.size();
  CriterionTable table;
  table.criterion = Criterion::Auc;
  table.tuning_values = tuning_values;
  table.statistic.assign(tsize, 0.0);
  table.per_fold.resize(static_cast<Eigen::Index>(folds.size()), static_cast<Eigen::Index>(tsize));
  table.skipped_folds = empty_folds;
  std::size_t used = 0;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const bool defined = !std::isnan(folds[f].auc.front());
    for (std::size_t t = 0; t < tsize; ++t) {
      table.per_fold(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(t)) = folds[f].auc[t];
      if (defined) table.statistic[t] += folds[f].auc[t];
    }
    used += defined ? 1 : 0;
    table.skipped_folds += defined ? 0 : 1;
  }
  if (used == 0) throw DataError("AUC undefined on every validation fold; use stratified folds");
  for (auto& s : table.statistic) s /= static_cast<double>(used);
  return table;
}

CriterionTable cv_fraud_loss(const Fitter& fitter, const Dataset& data, const ValidationPlan& plan,
                             double tau, int threads) {
  if (plan.is_bootstrap()) throw ConfigError("cv_fraud_loss needs a cross-validation plan");
  return run_validation(fitter, data, plan, threads).fraud_loss(tau);
}

CriterionTable boot_fraud_loss(const Fitter& fitter, const Dataset& data,
                               const ValidationPlan& plan, double tau, int threads) {
  if (!plan.is_bootstrap()) throw ConfigError("boot_fraud_loss needs a bootstrap plan");
  return run_validation(fitter, data, plan, threads).fraud_loss(tau);
}

CriterionTable cv_auc(const Fitter& fitter, const Dataset& data, const ValidationPlan& plan,
                      int threads) {
  return run_validation(fitter, data, plan, threads).auc();
}

Selection select_tuning(const CriterionTable& table) {
  if (table.statistic.empty()) throw std::invalid_argument("cannot select from an empty table");
  std::size_t best = 0;
  for (std::size_t t = 1; t < table.statistic.size(); ++t) {
    const double v = table.statistic[t];
    const bool better = table.criterion == Criterion::FraudLoss ? v < table.statistic[best]
                                                                : v > table.statistic[best];
    if (better) best = t;
  }
  return {table.tuning_values[best], best};
}

int parity_repetitions(int folds, bool doubled) {
  int reps = 0;
  switch (folds) {
    case 10:
      reps = 1;
      break;
    case 5:
      reps = 2;
      break;
    case 3:
      reps = 4;
      break;
    case 2:
      reps = 9;
      break;
    default:
      throw ConfigError("no parity repetition count for " + std::to_string(folds) +
                        "-fold CV (supported: 2, 3, 5, 10)");
  }
  return doubled ? 2 * reps : reps;
}

int parity_bootstrap_folds(bool doubled) { return doubled ? 18 : 9; }

}  // namespace fraudsel

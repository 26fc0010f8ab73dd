#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace fraudsel {

// The k highest-scored rows. Ties at the threshold are broken by ascending
// row index so exactly k rows are selected.
struct TopKSelection {
  std::size_t k = 0;
  std::size_t n = 0;
  std::vector<std::size_t> selected;  // ascending row indices
  double threshold = 0.0;             // smallest selected score

  // 0/1 indicator vector of length n.
  std::vector<int> indicator() const;
};

// Row indices ordered by (descending score, ascending index).
std::vector<std::size_t> rank_order(std::span<const double> scores);

// Throws std::invalid_argument unless 1 <= k <= n.
TopKSelection top_k_labels(std::span<const double> scores, std::size_t k);

// Number of selected rows whose label is 0.
std::size_t fraud_loss(std::span<const int> labels, const TopKSelection& selection);
double normalized_fraud_loss(std::span<const int> labels, const TopKSelection& selection);

// Sum of |y - yhat|. Throws std::invalid_argument if the predicted labels are
// not binary, lengths differ, or they do not sum to `k`.
std::size_t classification_error(std::span<const int> labels, std::span<const int> predicted,
                                 std::size_t k);

// curve[k] = false positives among the k highest-scored rows, k = 0..n, under
// the same tie rule as top_k_labels.
std::vector<std::uint32_t> false_positive_curve(std::span<const int> labels,
                                                std::span<const double> scores);

// Pair counts behind the Wilcoxon AUC estimate: the number of
// (negative, positive) pairs where the positive scores strictly higher.
struct AucCounts {
  std::uint64_t concordant = 0;
  std::uint64_t positives = 0;
  std::uint64_t negatives = 0;

  double value() const {
    return static_cast<double>(concordant) /
           (static_cast<double>(positives) * static_cast<double>(negatives));
  }
};

// O(n log n). Ties contribute zero. Throws std::invalid_argument when only one
// class is present.
AucCounts auc_counts(std::span<const int> labels, std::span<const double> scores);
double auc_wilcoxon(std::span<const int> labels, std::span<const double> scores);

}  // namespace fraudsel

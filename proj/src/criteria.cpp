#include "fraudsel/criteria.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace fraudsel {

namespace {

void check_lengths(std::size_t labels, std::size_t scores) {
  if (labels != scores) {
    throw std::invalid_argument("labels and scores differ in length (" + std::to_string(labels) +
                                " vs " + std::to_string(scores) + ")");
  }
}

}  // namespace

std::vector<int> TopKSelection::indicator() const {
  std::vector<int> out(n, 0);
  for (std::size_t i : selected) out[i] = 1;
  return out;
}

std::vector<std::size_t> rank_order(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

TopKSelection top_k_labels(std::span<const double> scores, std::size_t k) {
  const std::size_t n = scores.size();
  if (k < 1 || k > n) {
    throw std::invalid_argument("k=" + std::to_string(k) + " outside [1, " + std::to_string(n) +
                                "]");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto before = [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
  };
  std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k - 1), order.end(),
                   before);
  TopKSelection sel;
  sel.k = k;
  sel.n = n;
  sel.threshold = scores[order[k - 1]];
  sel.selected.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(sel.selected.begin(), sel.selected.end());
  return sel;
}

std::size_t fraud_loss(std::span<const int> labels, const TopKSelection& selection) {
  if (labels.size() != selection.n) {
    throw std::invalid_argument("selection was made over a different number of rows");
  }
  std::size_t loss = 0;
  for (std::size_t i : selection.selected) loss += labels[i] == 0 ? 1 : 0;
  return loss;
}

double normalized_fraud_loss(std::span<const int> labels, const TopKSelection& selection) {
  return static_cast<double>(fraud_loss(labels, selection)) / static_cast<double>(selection.k);
}

std::size_t classification_error(std::span<const int> labels, std::span<const int> predicted,
                                 std::size_t k) {
  check_lengths(labels.size(), predicted.size());
  std::size_t flagged = 0;
  std::size_t errors = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (predicted[i] != 0 && predicted[i] != 1) {
      throw std::invalid_argument("predicted labels must be 0/1");
    }
    flagged += static_cast<std::size_t>(predicted[i]);
    errors += labels[i] != predicted[i] ? 1 : 0;
  }
  if (flagged != k) {
    throw std::invalid_argument("predicted labels sum to " + std::to_string(flagged) +
                                ", expected k=" + std::to_string(k));
  }
  return errors;
}

std::vector<std::uint32_t> false_positive_curve(std::span<const int> labels,
                                                std::span<const double> scores) {
  check_lengths(labels.size(), scores.size());
  const auto order = rank_order(scores);
  std::vector<std::uint32_t> curve(order.size() + 1, 0);
  for (std::size_t r = 0; r < order.size(); ++r) {
    curve[r + 1] = curve[r] + (labels[order[r]] == 0 ? 1u : 0u);
  }
  return curve;
}

AucCounts auc_counts(std::span<const int> labels, std::span<const double> scores) {
  check_lengths(labels.size(), scores.size());
  AucCounts counts;
  for (int y : labels) (y == 1 ? counts.positives : counts.negatives) += 1;
  if (counts.positives == 0 || counts.negatives == 0) {
    throw std::invalid_argument("AUC is undefined unless both classes are present");
  }
  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b] || (scores[a] == scores[b] && a < b);
  });
  // Walk tie groups in ascending score; each positive in a group beats every
  // negative seen in strictly lower groups.
  std::uint64_t negatives_below = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    std::uint64_t group_neg = 0;
    std::uint64_t group_pos = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] == 1 ? group_pos : group_neg) += 1;
      ++j;
    }
    counts.concordant += group_pos * negatives_below;
    negatives_below += group_neg;
    i = j;
  }
  return counts;
}

double auc_wilcoxon(std::span<const int> labels, std::span<const double> scores) {
  return auc_counts(labels, scores).value();
}

}  // namespace fraudsel

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "fmer/error.hpp"
#include "fmer/eval.hpp"

namespace fmer {

namespace {

void check_pair(std::span<const CoarseLabel> predictions, std::span<const CoarseLabel> truths) {
  if (predictions.size() != truths.size()) {
    throw DimensionMismatch("predictions and truths differ in length (" +
                            std::to_string(predictions.size()) + " vs " +
                            std::to_string(truths.size()) + ")");
  }
  if (truths.empty()) throw EmptyInput("no samples to evaluate");
}

}  // namespace

double accuracy(std::span<const CoarseLabel> predictions, std::span<const CoarseLabel> truths) {
  check_pair(predictions, truths);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truths.size(); ++i) correct += predictions[i] == truths[i];
  return static_cast<double>(correct) / static_cast<double>(truths.size());
}

std::uint64_t ConfusionMatrix::total() const noexcept {
  std::uint64_t sum = 0;
  for (const auto& row : counts) sum = std::accumulate(row.begin(), row.end(), sum);
  return sum;
}

std::uint64_t ConfusionMatrix::trace() const noexcept {
  std::uint64_t sum = 0;
  for (std::size_t k = 0; k < counts.size(); ++k) sum += counts[k][k];
  return sum;
}

std::uint64_t ConfusionMatrix::support(CoarseLabel truth) const noexcept {
  const auto& row = counts[static_cast<std::size_t>(class_index(truth))];
  return std::accumulate(row.begin(), row.end(), std::uint64_t{0});
}

ConfusionMatrix confusion(std::span<const CoarseLabel> predictions,
                          std::span<const CoarseLabel> truths) {
  check_pair(predictions, truths);
  ConfusionMatrix m;
  for (std::size_t i = 0; i < truths.size(); ++i) {
    ++m.counts[static_cast<std::size_t>(class_index(truths[i]))]
              [static_cast<std::size_t>(class_index(predictions[i]))];
  }
  return m;
}

RocCurve roc_curve(std::span<const double> scores, std::span<const bool> positive) {
  if (scores.size() != positive.size()) throw DimensionMismatch("scores and labels differ in length");
  RocCurve curve;
  const std::size_t n = scores.size();
  const auto n_pos = static_cast<std::size_t>(std::count(positive.begin(), positive.end(), true));
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return curve;
  curve.defined = true;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  curve.points.push_back({INFINITY, 0.0, 0.0});
  // walk tie groups from the highest score; each group is one threshold
  std::size_t tp = 0;
  std::size_t fp = 0;
  double rank_sum_pos = 0.0;  // ascending 1-based mid-ranks of positives
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    std::size_t group_pos = 0;
    while (j < n && scores[order[j]] == scores[order[i]]) {
      group_pos += positive[order[j]];
      ++j;
    }
    const std::size_t group = j - i;
    // descending positions i..j-1 map to ascending ranks n-j+1 .. n-i
    const double mid_rank = static_cast<double>(2 * n - i - j + 1) / 2.0;
    rank_sum_pos += mid_rank * static_cast<double>(group_pos);
    tp += group_pos;
    fp += group - group_pos;
    curve.points.push_back({scores[order[i]], static_cast<double>(fp) / static_cast<double>(n_neg),
                            static_cast<double>(tp) / static_cast<double>(n_pos)});
    i = j;
  }
  curve.points.push_back({-INFINITY, 1.0, 1.0});

  const double p = static_cast<double>(n_pos);
  curve.auc = (rank_sum_pos - p * (p + 1.0) / 2.0) / (p * static_cast<double>(n_neg));
  return curve;
}

RocReport roc_ovr(std::span<const ClassScores> scores, std::span<const CoarseLabel> truths) {
  if (scores.size() != truths.size()) throw DimensionMismatch("scores and truths differ in length");
  if (scores.size() < 2) throw EmptyInput("ROC analysis needs at least 2 samples");
  RocReport report;
  std::vector<double> column(scores.size());
  const auto positive = std::make_unique<bool[]>(scores.size());
  double sum = 0.0;
  int defined = 0;
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    for (std::size_t i = 0; i < scores.size(); ++i) {
      column[i] = scores[i][k];
      positive[i] = static_cast<std::size_t>(class_index(truths[i])) == k;
    }
    RocCurve curve = roc_curve(column, std::span<const bool>(positive.get(), scores.size()));
    curve.cls = static_cast<CoarseLabel>(k);
    if (curve.defined) {
      sum += curve.auc;
      ++defined;
    }
    report.curves[k] = std::move(curve);
  }
  report.macro_auc = defined > 0 ? sum / defined : NAN;
  return report;
}

EvalReport evaluate(const TrainedModel& model, const LabeledDataset& test, EvalMetadata metadata) {
  if (test.size() == 0) throw EmptyInput("test set is empty");
  std::vector<ClassScores> scores(test.size());
  std::vector<CoarseLabel> predictions(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    scores[i] = model.predict_scores(test.row(i));
    predictions[i] = argmax_label(scores[i]);
  }
  EvalReport report;
  report.confusion = confusion(predictions, test.labels);
  report.accuracy = static_cast<double>(report.confusion.trace()) /
                    static_cast<double>(report.confusion.total());
  if (test.size() >= 2) report.roc = roc_ovr(scores, test.labels);
  report.metadata = std::move(metadata);
  return report;
}

}  // namespace fmer

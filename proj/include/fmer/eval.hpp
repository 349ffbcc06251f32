#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fmer/features.hpp"
#include "fmer/ingest.hpp"
#include "fmer/landmarks.hpp"
#include "fmer/models.hpp"

namespace fmer {

/// Fraction of matching positions. Throws EmptyInput / DimensionMismatch.
double accuracy(std::span<const CoarseLabel> predictions, std::span<const CoarseLabel> truths);

/// 4x4 counts; rows are true classes, columns predicted, in class order.
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses> counts{};

  std::uint64_t total() const noexcept;
  std::uint64_t trace() const noexcept;
  std::uint64_t support(CoarseLabel truth) const noexcept;  // row sum
};

ConfusionMatrix confusion(std::span<const CoarseLabel> predictions,
                          std::span<const CoarseLabel> truths);

struct RocPoint {
  double threshold;  // +inf for the origin, -inf for (1, 1)
  double fpr;
  double tpr;
};

struct RocCurve {
  CoarseLabel cls = CoarseLabel::Negative;
  /// False when the class has no positive or no negative samples; such a
  /// curve has no points and is left out of the macro mean.
  bool defined = false;
  std::vector<RocPoint> points;
  double auc = 0.0;
};

struct RocReport {
  std::array<RocCurve, kNumClasses> curves;
  double macro_auc = 0.0;  // NaN when no curve is defined
};

/// Binary ROC for "positive" vs the rest. Thresholds sweep the distinct score
/// values from high to low (a sample is predicted positive when its score is
/// >= the threshold), bracketed by +inf and -inf. AUC is the Mann-Whitney
/// statistic with mid-ranks for ties, which equals the trapezoidal area.
RocCurve roc_curve(std::span<const double> scores, std::span<const bool> positive);

/// One-vs-all curves from per-class score columns. Throws EmptyInput when
/// fewer than 2 samples are given.
RocReport roc_ovr(std::span<const ClassScores> scores, std::span<const CoarseLabel> truths);

struct EvalMetadata {
  std::string model;
  std::string area;
  int division = 0;
  std::uint64_t seed = 0;
  std::optional<double> cc_seconds;
};

struct EvalReport {
  double accuracy = 0.0;
  ConfusionMatrix confusion;
  RocReport roc;
  EvalMetadata metadata;
};

/// Scores every row of `test` with `model` and builds the full report.
EvalReport evaluate(const TrainedModel& model, const LabeledDataset& test, EvalMetadata metadata);

/// Writes `roc_<class>.csv` (threshold,fpr,tpr), `confusion.csv`,
/// `summary.json` and, when `svg` is set, `roc.svg`. Output bytes depend only
/// on the report. Throws IoError.
std::vector<std::filesystem::path> emit_plots(const EvalReport& report,
                                              const std::filesystem::path& out_dir,
                                              bool svg = true);

/// The `summary.json` document.
std::string summary_json(const EvalReport& report);

struct BenchRecord {
  std::string area;
  int division = 0;
  double mean_seconds_per_sample = 0.0;
  std::size_t samples = 0;
  int repeats = 0;
  /// What the timer covers.
  std::string boundary = "extract_area: roi crop + lbp_top + normalize (frames preloaded)";
};

struct BenchClip {
  FrameSequence sequence;
  LandmarkSet landmarks;
};

/// Mean single-threaded wall-clock time of extract_area per clip, averaged
/// over clips and repeats. Only one benchmark runs at a time per process.
/// Throws EmptyInput for no clips or repeats < 1.
BenchRecord bench_cc(std::span<const BenchClip> clips, const AreaSpec& area, DivisionFactor d,
                     int repeats = 3, const RoiGeometry& geometry = {});

std::string bench_json(std::span<const BenchRecord> records);

}  // namespace fmer

#pragma once

#include <optional>

#include "fmer/models.hpp"

namespace fmer::detail {

/// Per-feature z-score fitted on training rows; zero-variance features keep
/// scale 1.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;  // 1 / std

  static Standardizer fit(const LabeledDataset& ds);
  LabeledDataset apply(const LabeledDataset& ds) const;
  void apply(std::span<const float> row, std::span<float> out) const;
};

/// One weight row and bias per class, used by both linear models.
struct LinearParams {
  std::size_t dim = 0;
  std::vector<double> weights;  // kNumClasses x dim, row-major
  std::array<double, kNumClasses> bias{};
  std::optional<Standardizer> standardizer;
};

LinearParams fit_linear_svm(const LabeledDataset& ds, double strength, std::uint64_t seed,
                            int epochs);
LinearParams fit_logistic(const LabeledDataset& ds, double ridge, int max_iterations,
                          double tolerance);
/// Raw class margins w_k . x + b_k.
ClassScores linear_margins(const LinearParams& params, std::span<const float> row);

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::array<std::uint32_t, kNumClasses> counts{};  // leaves only
};

/// Flat node array; node 0 is the root. A row goes left when
/// row[feature] <= threshold.
struct Tree {
  std::vector<TreeNode> nodes;

  const TreeNode& leaf_for(std::span<const float> row) const;
  int depth() const;
};

struct ForestModel {
  std::vector<Tree> trees;
};

ForestModel fit_forest(const LabeledDataset& ds, const ForestParams& params,
                       std::span<const std::vector<std::size_t>> bootstraps, std::uint64_t seed,
                       int jobs);
ClassScores forest_votes(const ForestModel& forest, std::span<const float> row);

struct KnnModel {
  int k = 1;
  std::size_t dim = 0;
  std::vector<float> features;
  std::vector<CoarseLabel> labels;
};

ClassScores knn_votes(const KnnModel& model, std::span<const float> row);

/// Throws DegenerateData when there are fewer rows than classes or a single
/// label.
void check_trainable(const LabeledDataset& ds);

}  // namespace fmer::detail

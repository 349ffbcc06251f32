#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "fmer/dataset.hpp"

namespace fmer {

enum class ModelKind { LSVM, LR, RF, KNN };

std::string_view to_string(ModelKind kind) noexcept;  // lsvm, lr, rf, knn
ModelKind parse_model_kind(std::string_view text);    // throws UsageError

using ClassScores = std::array<double, kNumClasses>;

/// Index of the largest score; ties go to the earlier class.
CoarseLabel argmax_label(const ClassScores& scores) noexcept;

// ---------------------------------------------------------------------------
// Splitting

struct SplitSpec {
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
};

struct SplitIndices {
  std::vector<std::size_t> train;  // ascending
  std::vector<std::size_t> test;   // ascending
};

/// Per class, round(count * test_fraction) rows (at least 1, at most
/// count - 1) go to the test side, picked by a seeded shuffle of that class's
/// rows. Throws ValidationError for a fraction outside (0, 1) and
/// ClassTooSmall when a present class has fewer than 2 rows.
SplitIndices stratified_split_indices(std::span<const CoarseLabel> labels, const SplitSpec& spec);

std::pair<LabeledDataset, LabeledDataset> stratified_split(const LabeledDataset& ds,
                                                           const SplitSpec& spec);

/// Assigns every row to one of `folds` folds, class by class, after a seeded
/// shuffle. Returns the row indices of each fold (ascending). Throws
/// ClassTooSmall when a present class has fewer rows than folds.
std::vector<std::vector<std::size_t>> stratified_folds(std::span<const CoarseLabel> labels,
                                                       int folds, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Hyperparameters

struct SvmParams {
  double strength = 0.1;  // L2 penalty weight
  bool operator==(const SvmParams&) const = default;
};
struct LogisticParams {
  double ridge = 0.1;
  bool operator==(const LogisticParams&) const = default;
};
struct ForestParams {
  int trees = 25;
  int max_depth = 14;
  bool operator==(const ForestParams&) const = default;
};
struct KnnParams {
  int k = 1;
  bool operator==(const KnnParams&) const = default;
};

using Hyperparameters = std::variant<SvmParams, LogisticParams, ForestParams, KnnParams>;

ModelKind kind_of(const Hyperparameters& hyper) noexcept;
std::string describe(const Hyperparameters& hyper);

/// Candidate values per model. Grid order for the forest is trees-major.
struct HyperGrid {
  std::vector<int> knn_k = {1, 3, 5, 7, 9};
  std::vector<int> rf_trees = {25, 50, 100};
  std::vector<int> rf_max_depth = {10, 14, 20};
  std::vector<double> lsvm_strength = {0.01, 0.1, 1, 10};
  std::vector<double> lr_ridge = {0.01, 0.1, 1};

  /// JSON such as `{"knn": {"k": [1, 3]}, "rf": {"trees": [25], "max_depth": [14]},
  /// "lsvm": {"strength": [0.1]}, "lr": {"ridge": [0.1]}}`; missing entries
  /// keep their defaults. Throws ParseError / ValidationError.
  static HyperGrid parse(std::string_view json_text);
  static HyperGrid load(const std::filesystem::path& path);

  std::vector<Hyperparameters> points(ModelKind kind) const;
};

// ---------------------------------------------------------------------------
// Training

struct TrainOptions {
  /// z-score features (fitted on the training rows) before the linear models.
  bool standardize = false;
  int svm_epochs = 60;
  int lr_max_iterations = 5000;
  double lr_tolerance = 1e-6;
  /// Worker threads for forest trees and grid points.
  int jobs = 1;
};

namespace detail {
struct LinearParams;
struct ForestModel;
struct KnnModel;
}  // namespace detail

/// An immutable fitted classifier. Safe to share across threads.
class TrainedModel {
public:
  TrainedModel(TrainedModel&&) noexcept;
  TrainedModel& operator=(TrainedModel&&) noexcept;
  TrainedModel(const TrainedModel&);
  TrainedModel& operator=(const TrainedModel&);
  ~TrainedModel();

  ModelKind kind() const noexcept { return kind_; }
  const Hyperparameters& hyperparameters() const noexcept { return hyper_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t dim() const noexcept { return dim_; }

  /// KNN and RF: vote fractions. LR: softmax probabilities. LSVM: raw
  /// one-vs-rest margins. Throws DimensionMismatch.
  ClassScores predict_scores(std::span<const float> row) const;
  CoarseLabel predict(std::span<const float> row) const;

  /// `{kind, class_order, hyperparameters, seed, parameters}`.
  std::string to_json() const;
  static TrainedModel from_json(std::string_view text);  // throws ParseError

  void save(const std::filesystem::path& path) const;
  static TrainedModel load(const std::filesystem::path& path);

  // Inspection for tests and reports.
  int forest_max_depth() const;  // RF only; deepest leaf, root at depth 0
  std::size_t forest_size() const;

private:
  TrainedModel() = default;
  friend TrainedModel train(ModelKind, const LabeledDataset&, const Hyperparameters&,
                            std::uint64_t, const TrainOptions&);
  friend TrainedModel train_forest_with_bootstraps(const LabeledDataset&, const ForestParams&,
                                                   std::span<const std::vector<std::size_t>>,
                                                   std::uint64_t, int);

  ModelKind kind_ = ModelKind::KNN;
  Hyperparameters hyper_;
  std::uint64_t seed_ = 0;
  std::size_t dim_ = 0;
  std::unique_ptr<detail::LinearParams> linear_;
  std::unique_ptr<detail::ForestModel> forest_;
  std::unique_ptr<detail::KnnModel> knn_;
};

/// Fits one model. LSVM: one-vs-rest hinge loss with an L2 penalty, seeded
/// stochastic subgradient descent over a fixed epoch budget. LR: multinomial
/// softmax with a ridge penalty, accelerated batch gradient descent until the
/// gradient norm reaches the tolerance or the iteration cap. RF: bootstrap
/// CART trees on Gini impurity with sqrt(D) candidate features per split. KNN:
/// stores the rows; Euclidean distance.
///
/// Throws DegenerateData when all labels are identical or there are fewer
/// rows than classes, ValidationError when `hyper` does not match `kind`.
TrainedModel train(ModelKind kind, const LabeledDataset& train_ds, const Hyperparameters& hyper,
                   std::uint64_t seed, const TrainOptions& options = {});

/// Random forest over caller-supplied bootstrap samples (one index list per
/// tree). Feature sampling still draws from `seed`.
TrainedModel train_forest_with_bootstraps(const LabeledDataset& train_ds,
                                          const ForestParams& params,
                                          std::span<const std::vector<std::size_t>> bootstraps,
                                          std::uint64_t seed, int jobs = 1);

/// Bootstrap samples a forest draws for `rows` training rows.
std::vector<std::vector<std::size_t>> forest_bootstraps(std::size_t rows, int trees,
                                                        std::uint64_t seed);

double training_accuracy(const TrainedModel& model, const LabeledDataset& ds);

// ---------------------------------------------------------------------------
// Model selection

struct GridSearchResult {
  Hyperparameters best;
  std::vector<std::pair<Hyperparameters, double>> mean_accuracy;  // grid order
};

/// Stratified k-fold over `train_ds`; picks the grid point with the highest
/// mean fold accuracy, earliest on ties. Throws ClassTooSmall.
GridSearchResult grid_search(ModelKind kind, const LabeledDataset& train_ds,
                             const HyperGrid& grid, int folds, std::uint64_t seed,
                             const TrainOptions& options = {});

// ---------------------------------------------------------------------------
// Multinomial logistic regression objective, exposed for gradient checks.

/// Parameters are packed as K*D row-major weights followed by K biases.
/// Returns (1/N) sum -log p(y_i | x_i) + ridge/2 * ||W||^2 (biases are not
/// penalised) and writes the gradient into `grad` when non-empty.
double logistic_objective(const LabeledDataset& ds, std::span<const double> params, double ridge,
                          std::span<double> grad);

}  // namespace fmer

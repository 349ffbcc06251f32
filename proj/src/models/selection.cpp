#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fmer/error.hpp"
#include "fmer/parallel.hpp"
#include "fmer/rng.hpp"
#include "internal.hpp"

namespace fmer {

namespace {

std::array<std::vector<std::size_t>, kNumClasses> rows_by_class(std::span<const CoarseLabel> labels) {
  std::array<std::vector<std::size_t>, kNumClasses> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    by_class[static_cast<std::size_t>(class_index(labels[i]))].push_back(i);
  }
  return by_class;
}

template <typename T>
std::vector<T> json_list(const nlohmann::json& doc, const char* model, const char* key,
                         const std::vector<T>& fallback) {
  if (!doc.contains(model) || !doc[model].contains(key)) return fallback;
  auto values = doc[model][key].get<std::vector<T>>();
  if (values.empty()) {
    throw ValidationError(std::string("grid: ") + model + "." + key + " must not be empty");
  }
  return values;
}

}  // namespace

SplitIndices stratified_split_indices(std::span<const CoarseLabel> labels, const SplitSpec& spec) {
  if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0)) {
    throw ValidationError("test fraction must lie in (0, 1)");
  }
  if (labels.empty()) throw EmptyInput("cannot split an empty dataset");
  auto by_class = rows_by_class(labels);
  SplitIndices out;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& rows = by_class[c];
    if (rows.empty()) continue;
    if (rows.size() < 2) {
      throw ClassTooSmall("class '" + std::string(to_string(static_cast<CoarseLabel>(c))) +
                          "' has 1 sample; stratified splitting needs at least 2");
    }
    auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(rows.size()) * spec.test_fraction));
    n_test = std::clamp<std::size_t>(n_test, 1, rows.size() - 1);
    Rng rng(derive_seed(spec.seed, 0x5B17u, c));
    rng.shuffle(std::span<std::size_t>(rows));
    out.test.insert(out.test.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_test));
    out.train.insert(out.train.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_test), rows.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

std::pair<LabeledDataset, LabeledDataset> stratified_split(const LabeledDataset& ds,
                                                           const SplitSpec& spec) {
  const auto idx = stratified_split_indices(ds.labels, spec);
  return {ds.subset(idx.train), ds.subset(idx.test)};
}

std::vector<std::vector<std::size_t>> stratified_folds(std::span<const CoarseLabel> labels,
                                                       int folds, std::uint64_t seed) {
  if (folds < 2) throw ValidationError("need at least 2 folds");
  auto by_class = rows_by_class(labels);
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(folds));
  std::size_t next_fold = 0;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& rows = by_class[c];
    if (rows.empty()) continue;
    if (rows.size() < static_cast<std::size_t>(folds)) {
      throw ClassTooSmall("class '" + std::string(to_string(static_cast<CoarseLabel>(c))) +
                          "' has " + std::to_string(rows.size()) + " samples, fewer than " +
                          std::to_string(folds) + " folds");
    }
    Rng rng(derive_seed(seed, 0xF01Du, c));
    rng.shuffle(std::span<std::size_t>(rows));
    // continue the round-robin across classes so fold sizes stay balanced
    for (const auto i : rows) {
      out[next_fold].push_back(i);
      next_fold = (next_fold + 1) % out.size();
    }
  }
  for (auto& f : out) std::sort(f.begin(), f.end());
  return out;
}

HyperGrid HyperGrid::parse(std::string_view json_text) {
  HyperGrid grid;
  try {
    const auto doc = nlohmann::json::parse(json_text);
    if (!doc.is_object()) throw ParseError("grid: expected a JSON object");
    grid.knn_k = json_list(doc, "knn", "k", grid.knn_k);
    grid.rf_trees = json_list(doc, "rf", "trees", grid.rf_trees);
    grid.rf_max_depth = json_list(doc, "rf", "max_depth", grid.rf_max_depth);
    grid.lsvm_strength = json_list(doc, "lsvm", "strength", grid.lsvm_strength);
    grid.lr_ridge = json_list(doc, "lr", "ridge", grid.lr_ridge);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("grid: ") + e.what());
  }
  const auto positive = [](const auto& v) {
    return std::all_of(v.begin(), v.end(), [](auto x) { return x > 0; });
  };
  if (!positive(grid.knn_k) || !positive(grid.rf_trees) || !positive(grid.rf_max_depth) ||
      !positive(grid.lsvm_strength) || !positive(grid.lr_ridge)) {
    throw ValidationError("grid: every hyperparameter value must be positive");
  }
  return grid;
}

HyperGrid HyperGrid::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open grid file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

std::vector<Hyperparameters> HyperGrid::points(ModelKind kind) const {
  std::vector<Hyperparameters> out;
  switch (kind) {
    case ModelKind::LSVM:
      for (const double s : lsvm_strength) out.emplace_back(SvmParams{s});
      break;
    case ModelKind::LR:
      for (const double r : lr_ridge) out.emplace_back(LogisticParams{r});
      break;
    case ModelKind::RF:
      for (const int t : rf_trees) {
        for (const int d : rf_max_depth) out.emplace_back(ForestParams{t, d});
      }
      break;
    case ModelKind::KNN:
      for (const int k : knn_k) out.emplace_back(KnnParams{k});
      break;
  }
  return out;
}

GridSearchResult grid_search(ModelKind kind, const LabeledDataset& train_ds,
                             const HyperGrid& grid, int folds, std::uint64_t seed,
                             const TrainOptions& options) {
  const auto points = grid.points(kind);
  if (points.empty()) throw ValidationError("empty hyperparameter grid");
  const auto fold_rows = stratified_folds(train_ds.labels, folds, derive_seed(seed, 0x6A1Du));
  const auto n_folds = fold_rows.size();

  // held-out fold f, complement as training rows
  std::vector<LabeledDataset> fit_sets(n_folds), held_out(n_folds);
  for (std::size_t f = 0; f < n_folds; ++f) {
    std::vector<std::size_t> rest;
    for (std::size_t g = 0; g < n_folds; ++g) {
      if (g != f) rest.insert(rest.end(), fold_rows[g].begin(), fold_rows[g].end());
    }
    std::sort(rest.begin(), rest.end());
    fit_sets[f] = train_ds.subset(rest);
    held_out[f] = train_ds.subset(fold_rows[f]);
  }

  // Parallelism is spent across (point, fold) units; each unit trains
  // single-threaded with its own derived seed.
  TrainOptions unit_options = options;
  unit_options.jobs = 1;
  std::vector<double> accuracy(points.size() * n_folds, 0.0);
  parallel_for(accuracy.size(), options.jobs, [&](std::size_t unit) {
    const std::size_t p = unit / n_folds;
    const std::size_t f = unit % n_folds;
    const auto model = train(kind, fit_sets[f], points[p], derive_seed(seed, p, f), unit_options);
    accuracy[unit] = training_accuracy(model, held_out[f]);
  });

  GridSearchResult result;
  double best = -1.0;
  for (std::size_t p = 0; p < points.size(); ++p) {
    double sum = 0;
    for (std::size_t f = 0; f < n_folds; ++f) sum += accuracy[p * n_folds + f];
    const double mean = sum / static_cast<double>(n_folds);
    result.mean_accuracy.emplace_back(points[p], mean);
    if (mean > best) {
      best = mean;
      result.best = points[p];
    }
  }
  return result;
}

}  // namespace fmer

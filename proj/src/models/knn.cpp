#include <algorithm>
#include <numeric>

#include "internal.hpp"

namespace fmer::detail {

ClassScores knn_votes(const KnnModel& model, std::span<const float> row) {
  const std::size_t n = model.labels.size();
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    const float* x = model.features.data() + i * model.dim;
    double s = 0;
    for (std::size_t j = 0; j < model.dim; ++j) {
      const double d = static_cast<double>(x[j]) - row[j];
      s += d * d;
    }
    dist[i] = {s, i};
  }
  // equal distances resolve to the earlier training row
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(model.k), n);
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());

  ClassScores votes{};
  for (std::size_t i = 0; i < k; ++i) {
    votes[static_cast<std::size_t>(class_index(model.labels[dist[i].second]))] += 1.0;
  }
  for (auto& v : votes) v /= static_cast<double>(k);
  return votes;
}

}  // namespace fmer::detail

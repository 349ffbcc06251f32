#include <algorithm>
#include <cmath>
#include <numeric>

#include "fmer/error.hpp"
#include "fmer/parallel.hpp"
#include "fmer/rng.hpp"
#include "internal.hpp"

namespace fmer {

namespace detail {

namespace {

constexpr std::size_t K = kNumClasses;
using Counts = std::array<std::uint32_t, K>;

// Sum over children of (sum_c count_c^2) / n. Maximising this minimises the
// size-weighted Gini impurity of the split.
inline double purity(const Counts& c, std::uint32_t n) {
  double s = 0;
  for (const auto v : c) s += static_cast<double>(v) * v;
  return s / n;
}

struct Split {
  int feature = -1;
  double threshold = 0;
  double score = -1;
};

class TreeBuilder {
public:
  TreeBuilder(const LabeledDataset& ds, int max_depth, std::uint64_t seed)
      : ds_(ds),
        max_depth_(max_depth),
        candidates_(static_cast<std::size_t>(std::max(1.0, std::floor(std::sqrt(static_cast<double>(ds.dim)))))),
        rng_(seed),
        features_(ds.dim) {
    std::iota(features_.begin(), features_.end(), 0);
  }

  Tree build(std::vector<std::size_t> samples) {
    Tree tree;
    grow(tree, std::move(samples), 0);
    return tree;
  }

private:
  int grow(Tree& tree, std::vector<std::size_t> samples, int depth) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    Counts counts{};
    for (const auto i : samples) ++counts[static_cast<std::size_t>(class_index(ds_.labels[i]))];
    const bool pure = std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }) <= 1;

    Split split;
    if (!pure && depth < max_depth_ && samples.size() >= 2) split = best_split(samples, counts);
    if (split.feature < 0) {
      tree.nodes[static_cast<std::size_t>(id)].counts = counts;
      return id;
    }

    std::vector<std::size_t> left, right;
    const auto f = static_cast<std::size_t>(split.feature);
    for (const auto i : samples) {
      (ds_.features[i * ds_.dim + f] <= split.threshold ? left : right).push_back(i);
    }
    samples.clear();
    samples.shrink_to_fit();

    const int l = grow(tree, std::move(left), depth + 1);
    const int r = grow(tree, std::move(right), depth + 1);
    TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  // Examines features in a fresh random order until `candidates_` have been
  // tried and at least one admits a split (or every feature is exhausted).
  Split best_split(const std::vector<std::size_t>& samples, const Counts& total) {
    Split best;
    const std::size_t dim = features_.size();
    const auto n = static_cast<std::uint32_t>(samples.size());
    values_.resize(samples.size());

    for (std::size_t tried = 0; tried < dim; ++tried) {
      if (tried >= candidates_ && best.feature >= 0) break;
      const std::size_t pick = tried + static_cast<std::size_t>(rng_.below(dim - tried));
      std::swap(features_[tried], features_[pick]);
      const int f = features_[tried];

      for (std::size_t s = 0; s < samples.size(); ++s) {
        const auto i = samples[s];
        values_[s] = {ds_.features[i * ds_.dim + static_cast<std::size_t>(f)],
                      class_index(ds_.labels[i])};
      }
      std::sort(values_.begin(), values_.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      if (values_.front().first == values_.back().first) continue;

      Counts left{};
      for (std::uint32_t p = 0; p + 1 < n; ++p) {
        ++left[static_cast<std::size_t>(values_[p].second)];
        if (values_[p].first == values_[p + 1].first) continue;
        Counts right;
        for (std::size_t c = 0; c < K; ++c) right[c] = total[c] - left[c];
        const double score = purity(left, p + 1) + purity(right, n - p - 1);
        if (score > best.score) {
          best.score = score;
          best.feature = f;
          best.threshold = 0.5 * (static_cast<double>(values_[p].first) + values_[p + 1].first);
        }
      }
    }
    return best;
  }

  const LabeledDataset& ds_;
  int max_depth_;
  std::size_t candidates_;
  Rng rng_;
  std::vector<int> features_;
  std::vector<std::pair<float, int>> values_;
};

int subtree_depth(const Tree& tree, int node) {
  const auto& n = tree.nodes[static_cast<std::size_t>(node)];
  if (n.feature < 0) return 0;
  return 1 + std::max(subtree_depth(tree, n.left), subtree_depth(tree, n.right));
}

}  // namespace

const TreeNode& Tree::leaf_for(std::span<const float> row) const {
  const TreeNode* node = &nodes.front();
  while (node->feature >= 0) {
    node = &nodes[static_cast<std::size_t>(
        row[static_cast<std::size_t>(node->feature)] <= node->threshold ? node->left : node->right)];
  }
  return *node;
}

int Tree::depth() const { return nodes.empty() ? 0 : subtree_depth(*this, 0); }

ForestModel fit_forest(const LabeledDataset& ds, const ForestParams& params,
                       std::span<const std::vector<std::size_t>> bootstraps, std::uint64_t seed,
                       int jobs) {
  if (params.trees < 1) throw ValidationError("forest needs at least one tree");
  if (params.max_depth < 1) throw ValidationError("forest max depth must be >= 1");
  if (bootstraps.size() != static_cast<std::size_t>(params.trees)) {
    throw ValidationError("one bootstrap sample per tree is required");
  }
  ForestModel forest;
  forest.trees.resize(static_cast<std::size_t>(params.trees));
  parallel_for(forest.trees.size(), jobs, [&](std::size_t t) {
    TreeBuilder builder(ds, params.max_depth, derive_seed(seed, 0x7EEu, t));
    forest.trees[t] = builder.build(bootstraps[t]);
  });
  return forest;
}

ClassScores forest_votes(const ForestModel& forest, std::span<const float> row) {
  ClassScores votes{};
  for (const auto& tree : forest.trees) {
    const auto& counts = tree.leaf_for(row).counts;
    const auto winner = static_cast<std::size_t>(
        std::max_element(counts.begin(), counts.end()) - counts.begin());
    votes[winner] += 1.0;
  }
  for (auto& v : votes) v /= static_cast<double>(forest.trees.size());
  return votes;
}

}  // namespace detail

std::vector<std::vector<std::size_t>> forest_bootstraps(std::size_t rows, int trees,
                                                        std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(trees));
  for (std::size_t t = 0; t < out.size(); ++t) {
    Rng rng(derive_seed(seed, 0xB007u, t));
    out[t].resize(rows);
    for (auto& i : out[t]) i = static_cast<std::size_t>(rng.below(rows));
  }
  return out;
}

}  // namespace fmer

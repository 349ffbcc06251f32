#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fmer/ingest.hpp"

namespace fmer {

/// N x D feature matrix (row-major) with one label and clip id per row.
struct LabeledDataset {
  std::size_t dim = 0;
  std::vector<float> features;
  std::vector<CoarseLabel> labels;
  std::vector<std::string> clip_ids;

  std::size_t size() const noexcept { return labels.size(); }
  std::span<const float> row(std::size_t i) const {
    return std::span<const float>(features.data() + i * dim, dim);
  }

  /// Appends one row; throws DimensionMismatch on a length change.
  void add(std::span<const float> values, CoarseLabel label, std::string clip_id);

  /// Rows at the given positions, in the given order.
  LabeledDataset subset(std::span<const std::size_t> indices) const;

  /// Per-class row counts in class order.
  std::array<std::size_t, kNumClasses> class_counts() const;
};

/// Describes how a feature dump was produced.
struct FeatureLayout {
  std::string area;        // e.g. "eyebrow+lip"
  int division = 0;        // 5 or 10
  std::vector<std::string> rois;

  bool operator==(const FeatureLayout&) const = default;
};

struct FeatureTable {
  FeatureLayout layout;
  LabeledDataset data;
};

/// CSV dump: header `clip_id,label,f0,...,f{D-1}`, labels as lowercase class
/// names, values in shortest round-trip decimal form.
void write_features_csv(const std::filesystem::path& path, const FeatureTable& table);
FeatureTable read_features_csv(const std::filesystem::path& path);

/// Binary dump, little-endian:
///   "FMEF" | u16 version (1) | u32 n | n bytes JSON layout descriptor |
///   u32 rows | u32 dim | rows x (u16 id_len | id bytes | u8 class | dim x f32)
void write_features_binary(const std::filesystem::path& path, const FeatureTable& table);
FeatureTable read_features_binary(const std::filesystem::path& path);

/// Dispatches on extension: `.csv` or anything else as binary.
FeatureTable read_features(const std::filesystem::path& path);

}  // namespace fmer

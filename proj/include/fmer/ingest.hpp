#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fmer/image.hpp"

namespace fmer {

enum class RawEmotion { Happiness, Surprise, Disgust, Sadness, Fear, Repression, Others };

/// The four classification targets. The numeric values are the fixed class
/// order used by every model and metric.
enum class CoarseLabel : int { Negative = 0, Positive = 1, Surprise = 2, Others = 3 };

inline constexpr int kNumClasses = 4;
inline constexpr std::array<CoarseLabel, kNumClasses> kClassOrder = {
    CoarseLabel::Negative, CoarseLabel::Positive, CoarseLabel::Surprise, CoarseLabel::Others};

constexpr int class_index(CoarseLabel label) noexcept { return static_cast<int>(label); }

/// Manifest spelling: happiness, surprise, disgust, sadness, fear, repression, others.
std::string_view to_string(RawEmotion emotion) noexcept;
/// Lowercase class name: negative, positive, surprise, others.
std::string_view to_string(CoarseLabel label) noexcept;
RawEmotion parse_raw_emotion(std::string_view text);  // throws ParseError
CoarseLabel parse_coarse_label(std::string_view text);  // throws ParseError

/// What happens to Repression clips, which the four-way grouping leaves
/// unassigned.
enum class RepressionPolicy { ToOthers, ToNegative, Exclude };

RepressionPolicy parse_repression_policy(std::string_view text);

/// nullopt only for Repression under RepressionPolicy::Exclude.
std::optional<CoarseLabel> relabel(RawEmotion raw,
                                   RepressionPolicy policy = RepressionPolicy::ToOthers) noexcept;

struct ClipManifestEntry {
  std::string clip_id;
  std::string subject_id;
  std::filesystem::path frames_dir;  // absolute, or relative to the manifest's directory
  long onset_idx = 0;
  long apex_idx = 0;
  long offset_idx = 0;
  RawEmotion raw_label = RawEmotion::Others;

  long length() const noexcept { return offset_idx - onset_idx + 1; }
};

/// Parses the CSV manifest (header
/// `clip_id,subject_id,frames_dir,onset,apex,offset,label`). Relative
/// frames_dir values are resolved against the manifest's directory.
/// Throws ParseError (with the 1-based line number) or ValidationError.
std::vector<ClipManifestEntry> load_manifest(const std::filesystem::path& path);

/// Validates a single entry's index ordering; throws ValidationError.
void validate_entry(const ClipManifestEntry& entry);

struct FrameSequence {
  std::vector<GrayImage> frames;
  CoarseLabel label = CoarseLabel::Others;
  std::string clip_id;
  std::string subject_id;

  int length() const noexcept { return static_cast<int>(frames.size()); }
  int rows() const noexcept { return frames.empty() ? 0 : frames.front().rows; }
  int cols() const noexcept { return frames.empty() ? 0 : frames.front().cols; }

  bool operator==(const FrameSequence&) const = default;
};

struct FrameNaming {
  std::string prefix = "img";
  int pad_width = 3;  // 0 disables zero padding
  std::vector<std::string> extensions = {".pgm", ".png"};

  std::string stem(long index) const;
};

struct LoadOptions {
  FrameNaming naming;
  RepressionPolicy repression = RepressionPolicy::ToOthers;
};

/// Loads frames onset..offset in index order, converting to grayscale.
/// Throws MissingFrame, DimensionMismatch, ValidationError (entry excluded by
/// the repression policy), or the image reader's errors.
FrameSequence load_sequence(const ClipManifestEntry& entry, const LoadOptions& options = {});

/// Per raw-label tally in RawEmotion declaration order.
std::array<std::size_t, 7> tally(const std::vector<ClipManifestEntry>& entries);

}  // namespace fmer

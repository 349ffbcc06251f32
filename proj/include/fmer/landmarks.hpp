#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "fmer/ingest.hpp"

namespace fmer {

inline constexpr int kNumLandmarks = 68;

struct Point {
  int x = 0;
  int y = 0;
  bool operator==(const Point&) const = default;
};

/// 68 points in the usual annotation order: jaw 0-16, brows 17-26,
/// nose 27-35, eyes 36-47, mouth 48-67. Origin top-left.
struct LandmarkSet {
  std::array<Point, kNumLandmarks> points{};
};

struct FrameDims {
  int rows = 0;  // H
  int cols = 0;  // W
};

enum class RoiKind { WholeFace, Eyebrow, Eye, Middle, Lip, Bottom };

std::string_view to_string(RoiKind kind) noexcept;
RoiKind parse_roi_kind(std::string_view text);  // throws ParseError

/// Half-open pixel rectangle [x0, x1) x [y0, y1).
struct RoiBox {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const noexcept { return x1 - x0; }
  int height() const noexcept { return y1 - y0; }
  bool operator==(const RoiBox&) const = default;
};

/// Ordered, duplicate-free list of ROIs whose features are concatenated.
class AreaSpec {
public:
  /// Throws ValidationError when empty, duplicated, or WholeFace is combined.
  explicit AreaSpec(std::vector<RoiKind> kinds);

  /// Parses `whole`, `eyebrow`, ..., or `+`-joined combinations such as
  /// `eyebrow+lip`.
  static AreaSpec parse(std::string_view text);

  /// The nine evaluated areas, in table order.
  static const std::vector<AreaSpec>& standard_areas();

  const std::vector<RoiKind>& kinds() const noexcept { return kinds_; }
  std::size_t size() const noexcept { return kinds_.size(); }
  std::string name() const;

  bool operator==(const AreaSpec&) const = default;

private:
  std::vector<RoiKind> kinds_;
};

/// Landmark index sets per ROI and the padding rule. Defaults are the
/// built-in convention; a JSON geometry document overrides any subset, e.g.
/// `{"eyebrow": [17, 18, ...], "margin_frac": 0.1}`.
struct RoiGeometry {
  std::vector<int> eyebrow;
  std::vector<int> eye;
  std::vector<int> middle;
  std::vector<int> lip;
  std::vector<int> bottom;
  double margin_frac = 0.05;
  /// Bottom box starts no higher than the lip box's lower edge.
  bool bottom_below_lip = true;

  RoiGeometry();

  const std::vector<int>& indices(RoiKind kind) const;

  static RoiGeometry parse(std::string_view json_text);  // throws ParseError
  static RoiGeometry load(const std::filesystem::path& path);
};

/// Reads `x y` integer pairs, one per line. Throws ParseError when the file
/// does not hold exactly 68 points and OutOfBounds when a point lies outside
/// [0, W) x [0, H).
LandmarkSet parse_landmarks(const std::filesystem::path& path, FrameDims dims);
LandmarkSet parse_landmarks(std::istream& in, FrameDims dims, std::string_view source = "<stream>");

/// Crop box for one ROI: the bounding box of the ROI's landmarks grown on
/// every side by round(margin_frac * face side), where face side is the
/// larger extent of all 68 points, then clamped to the frame. WholeFace is
/// the full frame. Throws DegenerateRoi when the result is under 3 px on
/// either axis.
RoiBox roi_box(RoiKind kind, const LandmarkSet& landmarks, FrameDims dims,
               const RoiGeometry& geometry = {});

/// Crops every frame with the same box. Requires the box inside the frames.
FrameSequence crop_sequence(const FrameSequence& seq, const RoiBox& box);

}  // namespace fmer

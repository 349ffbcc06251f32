#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "fmer/image.hpp"
#include "fmer/ingest.hpp"
#include "fmer/landmarks.hpp"

namespace fmer {

inline constexpr int kBins = 256;
inline constexpr int kPlanes = 3;

/// Histogram plane order inside a block: XY, XT, YT.
enum class Plane : int { XY = 0, XT = 1, YT = 2 };

std::string_view to_string(Plane plane) noexcept;

/// Grid granularity: the image is split into d x d spatial blocks.
class DivisionFactor {
public:
  explicit DivisionFactor(int d);  // throws ValidationError unless d is 5 or 10
  static DivisionFactor parse(std::string_view text);

  int value() const noexcept { return d_; }
  int blocks() const noexcept { return d_ * d_; }
  bool operator==(const DivisionFactor&) const = default;

private:
  int d_;
};

/// Block boundaries: edge i is floor(i * extent / d), so the d blocks tile
/// [0, extent) exactly and differ in size by at most one pixel.
struct BlockGrid {
  int d = 0;
  std::vector<int> row_edges;  // d + 1 entries, 0 .. H
  std::vector<int> col_edges;  // d + 1 entries, 0 .. W

  static BlockGrid make(int d, int rows, int cols);
};

using Histogram256 = std::array<std::uint32_t, kBins>;

/// Basic LBP code of a row-major 3x3 patch. Bit i is set when neighbour i is
/// strictly greater than the centre; neighbours run clockwise from the
/// top-left: TL, T, TR, R, BR, B, BL, L (bit 0 = TL).
std::uint8_t lbp_code(std::span<const std::uint8_t, 9> patch) noexcept;

/// Histogram of LBP codes over all interior pixels. Throws TooSmall below 3x3.
Histogram256 lbp_histogram(const GrayImage& frame);

/// Raw LBP-TOP counts laid out as [block row][block col][plane][bin].
struct RawHistograms {
  int d = 0;
  std::vector<std::uint32_t> counts;

  std::span<const std::uint32_t, kBins> histogram(int block_row, int block_col, Plane plane) const {
    const auto offset = (static_cast<std::size_t>(block_row * d + block_col) * kPlanes +
                         static_cast<std::size_t>(plane)) * kBins;
    return std::span<const std::uint32_t, kBins>(counts.data() + offset, kBins);
  }
  std::uint64_t plane_total(Plane plane) const;
};

/// L1-normalised, flattened histogram features; every value lies in [0, 1].
using FeatureVector = std::vector<float>;

/// LBP-TOP counts for a volume.
///
/// Every voxel with 1 <= x <= W-2, 1 <= y <= H-2, 1 <= t <= T-2 contributes
/// one code per plane to the block that contains its own (x, y); the
/// neighbours may lie in an adjacent block. Each plane's 3x3 patch is indexed
/// with the first-named axis as column and the second as row:
///   XY: patch[r][c] = V(t,   y+r, x+c)
///   XT: patch[r][c] = V(t+r, y,   x+c)
///   YT: patch[r][c] = V(t+r, y+c, x)
/// with r, c in {-1, 0, 1}. Counts are summed over t.
///
/// `jobs` > 1 splits the work over bands of block rows; the result does not
/// depend on it. Throws TooSmall unless H, W >= max(3, d) and T >= 3.
RawHistograms lbp_top_raw(const FrameSequence& seq, DivisionFactor d, int jobs = 1);

/// Divides each (block, plane) histogram by its own total; empty histograms
/// stay all-zero.
FeatureVector normalize(const RawHistograms& raw);

FeatureVector lbp_top(const FrameSequence& seq, DivisionFactor d, int jobs = 1);

/// |area| * d^2 * 3 * 256.
std::size_t feature_length(const AreaSpec& area, DivisionFactor d) noexcept;

/// Crops every ROI of `area` from the sequence, runs LBP-TOP on each and
/// concatenates the normalised vectors in area order.
FeatureVector extract_area(const FrameSequence& seq, const LandmarkSet& landmarks,
                           const AreaSpec& area, DivisionFactor d,
                           const RoiGeometry& geometry = {}, int jobs = 1);

}  // namespace fmer

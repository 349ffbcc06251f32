#include "fmer/features.hpp"

#include <charconv>
#include <numeric>

#include "fmer/error.hpp"
#include "fmer/parallel.hpp"

namespace fmer {

namespace {

constexpr std::array<std::string_view, 3> kPlaneNames = {"XY", "XT", "YT"};

// Neighbour positions (row, col) of the clockwise order, bit 0 first.
constexpr std::array<int, 8> kPatchIndex = {0, 1, 2, 5, 8, 7, 6, 3};

// Eight neighbour rows of one plane, in bit order, each read at column x.
// Plane codes for a whole image row are produced by `encode_row`, which the
// compiler vectorises over x.
struct NeighbourRows {
  std::array<const std::uint8_t*, 8> ptr;
  std::array<int, 8> dx;
};

inline void encode_row(const std::uint8_t* centre, const NeighbourRows& n, int x_begin, int x_end,
                       std::uint8_t* out) {
  for (int x = x_begin; x < x_end; ++x) {
    const std::uint8_t c = centre[x];
    unsigned code = 0;
    code |= static_cast<unsigned>(n.ptr[0][x + n.dx[0]] > c) << 0;
    code |= static_cast<unsigned>(n.ptr[1][x + n.dx[1]] > c) << 1;
    code |= static_cast<unsigned>(n.ptr[2][x + n.dx[2]] > c) << 2;
    code |= static_cast<unsigned>(n.ptr[3][x + n.dx[3]] > c) << 3;
    code |= static_cast<unsigned>(n.ptr[4][x + n.dx[4]] > c) << 4;
    code |= static_cast<unsigned>(n.ptr[5][x + n.dx[5]] > c) << 5;
    code |= static_cast<unsigned>(n.ptr[6][x + n.dx[6]] > c) << 6;
    code |= static_cast<unsigned>(n.ptr[7][x + n.dx[7]] > c) << 7;
    out[x] = static_cast<std::uint8_t>(code);
  }
}

void check_volume(const FrameSequence& seq, int d) {
  if (seq.length() < 3) {
    throw TooSmall("clip '" + seq.clip_id + "': LBP-TOP needs at least 3 frames, got " +
                   std::to_string(seq.length()));
  }
  const int min_side = std::max(3, d);
  if (seq.rows() < min_side || seq.cols() < min_side) {
    throw TooSmall("clip '" + seq.clip_id + "': " + std::to_string(seq.rows()) + "x" +
                   std::to_string(seq.cols()) + " frames are below the " +
                   std::to_string(min_side) + "x" + std::to_string(min_side) + " minimum");
  }
  for (const auto& f : seq.frames) {
    if (f.rows != seq.rows() || f.cols != seq.cols()) {
      throw DimensionMismatch("clip '" + seq.clip_id + "': frames differ in size");
    }
  }
}

}  // namespace

std::string_view to_string(Plane plane) noexcept {
  return kPlaneNames[static_cast<std::size_t>(plane)];
}

DivisionFactor::DivisionFactor(int d) : d_(d) {
  if (d != 5 && d != 10) {
    throw ValidationError("division factor must be 5 or 10, got " + std::to_string(d));
  }
}

DivisionFactor DivisionFactor::parse(std::string_view text) {
  int d = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), d);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ValidationError("division factor must be 5 or 10, got '" + std::string(text) + "'");
  }
  return DivisionFactor(d);
}

BlockGrid BlockGrid::make(int d, int rows, int cols) {
  BlockGrid grid;
  grid.d = d;
  grid.row_edges.resize(static_cast<std::size_t>(d) + 1);
  grid.col_edges.resize(static_cast<std::size_t>(d) + 1);
  for (int i = 0; i <= d; ++i) {
    grid.row_edges[static_cast<std::size_t>(i)] =
        static_cast<int>(static_cast<long long>(i) * rows / d);
    grid.col_edges[static_cast<std::size_t>(i)] =
        static_cast<int>(static_cast<long long>(i) * cols / d);
  }
  return grid;
}

std::uint8_t lbp_code(std::span<const std::uint8_t, 9> patch) noexcept {
  const std::uint8_t centre = patch[4];
  unsigned code = 0;
  for (int bit = 0; bit < 8; ++bit) {
    if (patch[static_cast<std::size_t>(kPatchIndex[static_cast<std::size_t>(bit)])] > centre) {
      code |= 1u << bit;
    }
  }
  return static_cast<std::uint8_t>(code);
}

Histogram256 lbp_histogram(const GrayImage& frame) {
  if (frame.rows < 3 || frame.cols < 3) {
    throw TooSmall("LBP needs at least a 3x3 image, got " + std::to_string(frame.rows) + "x" +
                   std::to_string(frame.cols));
  }
  Histogram256 hist{};
  std::vector<std::uint8_t> codes(static_cast<std::size_t>(frame.cols));
  for (int y = 1; y + 1 < frame.rows; ++y) {
    const auto* up = frame.row(y - 1);
    const auto* mid = frame.row(y);
    const auto* down = frame.row(y + 1);
    const NeighbourRows xy{{up, up, up, mid, down, down, down, mid}, {-1, 0, 1, 1, 1, 0, -1, -1}};
    encode_row(mid, xy, 1, frame.cols - 1, codes.data());
    for (int x = 1; x + 1 < frame.cols; ++x) ++hist[codes[static_cast<std::size_t>(x)]];
  }
  return hist;
}

std::uint64_t RawHistograms::plane_total(Plane plane) const {
  std::uint64_t total = 0;
  for (int b = 0; b < d * d; ++b) {
    const auto* h = counts.data() + (static_cast<std::size_t>(b) * kPlanes +
                                     static_cast<std::size_t>(plane)) * kBins;
    total = std::accumulate(h, h + kBins, total);
  }
  return total;
}

RawHistograms lbp_top_raw(const FrameSequence& seq, DivisionFactor division, int jobs) {
  const int d = division.value();
  check_volume(seq, d);
  const int H = seq.rows();
  const int W = seq.cols();
  const int T = seq.length();
  const BlockGrid grid = BlockGrid::make(d, H, W);

  std::vector<int> col_block(static_cast<std::size_t>(W));
  for (int b = 0; b < d; ++b) {
    for (int x = grid.col_edges[static_cast<std::size_t>(b)];
         x < grid.col_edges[static_cast<std::size_t>(b) + 1]; ++x) {
      col_block[static_cast<std::size_t>(x)] = b;
    }
  }

  RawHistograms raw;
  raw.d = d;
  raw.counts.assign(static_cast<std::size_t>(d) * d * kPlanes * kBins, 0);

  // One work item per block row; each item writes only its own histograms.
  parallel_for(static_cast<std::size_t>(d), jobs, [&](std::size_t block_row) {
    const int y_begin = std::max(1, grid.row_edges[block_row]);
    const int y_end = std::min(H - 1, grid.row_edges[block_row + 1]);
    if (y_begin >= y_end) return;

    std::vector<std::uint8_t> xy_codes(static_cast<std::size_t>(W));
    std::vector<std::uint8_t> xt_codes(static_cast<std::size_t>(W));
    std::vector<std::uint8_t> yt_codes(static_cast<std::size_t>(W));
    std::uint32_t* row_hist = raw.counts.data() + block_row * static_cast<std::size_t>(d) * kPlanes * kBins;

    for (int t = 1; t + 1 < T; ++t) {
      const GrayImage& prev = seq.frames[static_cast<std::size_t>(t - 1)];
      const GrayImage& cur = seq.frames[static_cast<std::size_t>(t)];
      const GrayImage& next = seq.frames[static_cast<std::size_t>(t + 1)];
      for (int y = y_begin; y < y_end; ++y) {
        const auto* up = cur.row(y - 1);
        const auto* mid = cur.row(y);
        const auto* down = cur.row(y + 1);
        const auto* before = prev.row(y);
        const auto* after = next.row(y);

        const NeighbourRows xy{{up, up, up, mid, down, down, down, mid},
                               {-1, 0, 1, 1, 1, 0, -1, -1}};
        const NeighbourRows xt{{before, before, before, mid, after, after, after, mid},
                               {-1, 0, 1, 1, 1, 0, -1, -1}};
        const NeighbourRows yt{{prev.row(y - 1), before, prev.row(y + 1), down, next.row(y + 1),
                                after, next.row(y - 1), up},
                               {0, 0, 0, 0, 0, 0, 0, 0}};
        encode_row(mid, xy, 1, W - 1, xy_codes.data());
        encode_row(mid, xt, 1, W - 1, xt_codes.data());
        encode_row(mid, yt, 1, W - 1, yt_codes.data());

        for (int x = 1; x + 1 < W; ++x) {
          const auto xi = static_cast<std::size_t>(x);
          std::uint32_t* block = row_hist + static_cast<std::size_t>(col_block[xi]) * kPlanes * kBins;
          ++block[xy_codes[xi]];
          ++block[kBins + xt_codes[xi]];
          ++block[2 * kBins + yt_codes[xi]];
        }
      }
    }
  });
  return raw;
}

FeatureVector normalize(const RawHistograms& raw) {
  FeatureVector out(raw.counts.size(), 0.0f);
  const std::size_t histograms = raw.counts.size() / kBins;
  for (std::size_t h = 0; h < histograms; ++h) {
    const auto* counts = raw.counts.data() + h * kBins;
    const std::uint64_t total = std::accumulate(counts, counts + kBins, std::uint64_t{0});
    if (total == 0) continue;
    auto* dst = out.data() + h * kBins;
    for (int b = 0; b < kBins; ++b) {
      dst[b] = static_cast<float>(static_cast<double>(counts[b]) / static_cast<double>(total));
    }
  }
  return out;
}

FeatureVector lbp_top(const FrameSequence& seq, DivisionFactor d, int jobs) {
  return normalize(lbp_top_raw(seq, d, jobs));
}

std::size_t feature_length(const AreaSpec& area, DivisionFactor d) noexcept {
  return area.size() * static_cast<std::size_t>(d.blocks()) * kPlanes * kBins;
}

FeatureVector extract_area(const FrameSequence& seq, const LandmarkSet& landmarks,
                           const AreaSpec& area, DivisionFactor d, const RoiGeometry& geometry,
                           int jobs) {
  const FrameDims dims{seq.rows(), seq.cols()};
  FeatureVector out;
  out.reserve(feature_length(area, d));
  for (const RoiKind kind : area.kinds()) {
    FeatureVector part;
    if (kind == RoiKind::WholeFace) {
      part = lbp_top(seq, d, jobs);
    } else {
      const RoiBox box = roi_box(kind, landmarks, dims, geometry);
      part = lbp_top(crop_sequence(seq, box), d, jobs);
    }
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

}  // namespace fmer

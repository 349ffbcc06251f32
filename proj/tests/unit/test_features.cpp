#include <numeric>

#include <gtest/gtest.h>

#include "fmer/error.hpp"
#include "fmer/features.hpp"
#include "fmer/rng.hpp"
#include "testkit.hpp"

using namespace fmer;
using testkit::Pattern;
using testkit::SynthSpec;

namespace {

FrameSequence noise(int rows, int cols, int frames, std::uint64_t seed) {
  SynthSpec spec;
  spec.rows = rows;
  spec.cols = cols;
  spec.frames = frames;
  spec.seed = seed;
  spec.pattern = Pattern::RandomNoise;
  return testkit::gen_volume(spec);
}

void expect_matches_oracle(const FrameSequence& seq, int d) {
  const auto raw = lbp_top_raw(seq, DivisionFactor(d));
  const auto oracle = testkit::oracle_lbp_top(seq, d);
  for (int br = 0; br < d; ++br) {
    for (int bc = 0; bc < d; ++bc) {
      for (int p = 0; p < kPlanes; ++p) {
        const auto h = raw.histogram(br, bc, static_cast<Plane>(p));
        for (int bin = 0; bin < kBins; ++bin) {
          const auto idx = static_cast<std::size_t>(((br * d + bc) * kPlanes + p) * kBins + bin);
          ASSERT_EQ(h[static_cast<std::size_t>(bin)], oracle.counts[idx])
              << "block " << br << "," << bc << " plane " << p << " bin " << bin;
        }
      }
    }
  }
}

}  // namespace

TEST(LbpCode, Examples) {
  std::array<std::uint8_t, 9> patch{};
  patch.fill(7);
  EXPECT_EQ(lbp_code(patch), 0);
  patch.fill(6);
  patch[4] = 5;
  EXPECT_EQ(lbp_code(patch), 255);
  patch.fill(0);
  patch[4] = 5;
  patch[0] = 6;
  EXPECT_EQ(lbp_code(patch), 1);
}

TEST(LbpCode, ClockwiseBits) {
  // row-major patch positions visited clockwise from the top-left
  const int order[8] = {0, 1, 2, 5, 8, 7, 6, 3};
  for (int bit = 0; bit < 8; ++bit) {
    std::array<std::uint8_t, 9> patch{};
    patch[4] = 100;
    patch[static_cast<std::size_t>(order[bit])] = 101;
    EXPECT_EQ(lbp_code(patch), 1 << bit);
  }
  std::array<std::uint8_t, 9> equal{};
  equal.fill(100);
  equal[2] = 100;
  EXPECT_EQ(lbp_code(equal), 0);  // strict comparison
}

TEST(LbpHistogram, ConstantFrame) {
  const auto h = lbp_histogram(GrayImage(10, 10, 77));
  EXPECT_EQ(h[0], 64u);
  EXPECT_EQ(std::accumulate(h.begin(), h.end(), std::uint64_t{0}), 64u);
}

TEST(LbpHistogram, TinyFrame) {
  GrayImage f(3, 3);
  for (std::size_t i = 0; i < 9; ++i) f.pixels[i] = static_cast<std::uint8_t>(i * 20);
  const auto h = lbp_histogram(f);
  EXPECT_EQ(std::accumulate(h.begin(), h.end(), std::uint64_t{0}), 1u);
  EXPECT_THROW(lbp_histogram(GrayImage(2, 5)), TooSmall);
}

TEST(LbpHistogram, MatchesOracle) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto seq = noise(8, 8, 3, seed);
    const auto h = lbp_histogram(seq.frames[0]);
    const auto oracle = testkit::oracle_lbp_histogram(seq.frames[0]);
    for (int b = 0; b < kBins; ++b) ASSERT_EQ(h[static_cast<std::size_t>(b)], oracle[static_cast<std::size_t>(b)]);
  }
}

TEST(BlockGrid, FloorEdges) {
  const auto g = BlockGrid::make(5, 12, 7);
  EXPECT_EQ(g.row_edges, (std::vector<int>{0, 2, 4, 7, 9, 12}));
  EXPECT_EQ(g.col_edges, (std::vector<int>{0, 1, 2, 4, 5, 7}));
}

TEST(DivisionFactor, OnlyFiveOrTen) {
  EXPECT_EQ(DivisionFactor(5).blocks(), 25);
  EXPECT_EQ(DivisionFactor::parse("10").value(), 10);
  EXPECT_THROW(DivisionFactor(4), ValidationError);
  EXPECT_ANY_THROW(DivisionFactor::parse("five"));
}

TEST(LbpTop, OracleRandom9x9x5) {
  expect_matches_oracle(noise(9, 9, 5, 1234), 5);
}

TEST(LbpTop, OracleVariedShapes) {
  Rng rng(99);
  for (int trial = 0; trial < 40; ++trial) {
    const int d = trial % 2 ? 10 : 5;
    const int rows = d + static_cast<int>(rng.below(15));
    const int cols = d + static_cast<int>(rng.below(15));
    const int frames = 3 + static_cast<int>(rng.below(4));
    expect_matches_oracle(noise(rows, cols, frames, rng.next_u64()), d);
  }
}

TEST(LbpTop, OracleMovingEdge) {
  SynthSpec spec;
  spec.rows = 11;
  spec.cols = 14;
  spec.frames = 6;
  spec.pattern = Pattern::MovingEdge;
  const auto seq = testkit::gen_volume(spec);
  expect_matches_oracle(seq, 5);
  const auto raw = lbp_top_raw(seq, DivisionFactor(5));
  // the moving edge leaves structure off bin 0 in the temporal planes
  std::uint64_t off_zero = 0;
  for (int br = 0; br < 5; ++br) {
    for (int bc = 0; bc < 5; ++bc) {
      const auto h = raw.histogram(br, bc, Plane::XT);
      off_zero += std::accumulate(h.begin() + 1, h.end(), std::uint64_t{0});
    }
  }
  EXPECT_GT(off_zero, 0u);
}

TEST(LbpTop, TinyVolumeMass) {
  const auto seq = noise(5, 5, 3, 3);
  const auto raw = lbp_top_raw(seq, DivisionFactor(5));
  for (int p = 0; p < kPlanes; ++p) EXPECT_EQ(raw.plane_total(static_cast<Plane>(p)), 9u);
}

TEST(LbpTop, JobsInvariant) {
  const auto seq = noise(37, 41, 6, 5);
  const auto one = lbp_top_raw(seq, DivisionFactor(10), 1);
  for (const int jobs : {2, 3, 8}) EXPECT_EQ(lbp_top_raw(seq, DivisionFactor(10), jobs).counts, one.counts);
}

TEST(LbpTop, TooSmall) {
  EXPECT_THROW(lbp_top_raw(noise(4, 9, 4, 1), DivisionFactor(5)), TooSmall);
  EXPECT_THROW(lbp_top_raw(noise(9, 9, 4, 1), DivisionFactor(10)), TooSmall);
  FrameSequence two = noise(9, 9, 3, 1);
  two.frames.pop_back();
  EXPECT_THROW(lbp_top_raw(two, DivisionFactor(5)), TooSmall);
}

TEST(LbpTop, Lengths) {
  const auto seq = noise(23, 31, 4, 8);
  EXPECT_EQ(lbp_top(seq, DivisionFactor(5)).size(), 19200u);
  EXPECT_EQ(lbp_top(seq, DivisionFactor(10)).size(), 76800u);
}

TEST(LbpTop, ConstantVolumeAllAtZero) {
  SynthSpec spec;
  spec.rows = 12;
  spec.cols = 12;
  spec.frames = 4;
  spec.seed = 17;
  spec.pattern = Pattern::ConstantVolume;
  const auto f = lbp_top(testkit::gen_volume(spec), DivisionFactor(5));
  for (std::size_t h = 0; h < 25 * 3; ++h) {
    const float* hist = f.data() + h * kBins;
    const float total = std::accumulate(hist, hist + kBins, 0.0f);
    if (total == 0.0f) continue;
    EXPECT_EQ(hist[0], 1.0f);
  }
}

TEST(Normalize, Examples) {
  RawHistograms raw;
  raw.d = 5;
  raw.counts.assign(25 * 3 * 256, 0);
  raw.counts[0] = 49;                                  // block 0, XY
  raw.counts[1 * 256 + 0] = 3;                         // block 0, XT
  raw.counts[1 * 256 + 255] = 1;
  const auto f = normalize(raw);
  ASSERT_EQ(f.size(), 19200u);
  EXPECT_EQ(f[0], 1.0f);
  EXPECT_EQ(f[256], 0.75f);
  EXPECT_EQ(f[256 + 255], 0.25f);
  EXPECT_EQ(std::accumulate(f.begin() + 512, f.end(), 0.0f), 0.0f);  // empty blocks stay zero
}

TEST(Normalize, RangeAndSums) {
  const auto f = lbp_top(noise(20, 26, 5, 4), DivisionFactor(5));
  for (std::size_t h = 0; h < 75; ++h) {
    double sum = 0;
    for (int b = 0; b < kBins; ++b) {
      const float v = f[h * kBins + static_cast<std::size_t>(b)];
      ASSERT_GE(v, 0.0f);
      ASSERT_LE(v, 1.0f);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-5);
  }
}

TEST(ExtractArea, LengthsAndLayout) {
  const int rows = 96;
  const int cols = 96;
  const auto seq = noise(rows, cols, 5, 21);
  const auto lm = testkit::template_landmarks(rows, cols);
  const DivisionFactor d5(5);
  EXPECT_EQ(extract_area(seq, lm, AreaSpec::parse("whole"), d5).size(), 19200u);
  EXPECT_EQ(extract_area(seq, lm, AreaSpec::parse("whole"), DivisionFactor(10)).size(), 76800u);
  const auto two = extract_area(seq, lm, AreaSpec::parse("eyebrow+lip"), d5);
  EXPECT_EQ(two.size(), 38400u);
  EXPECT_EQ(extract_area(seq, lm, AreaSpec::parse("eyebrow+eye+lip"), d5).size(), 57600u);

  const FrameDims dims{rows, cols};
  auto expect = lbp_top(crop_sequence(seq, roi_box(RoiKind::Eyebrow, lm, dims)), d5);
  const auto lip = lbp_top(crop_sequence(seq, roi_box(RoiKind::Lip, lm, dims)), d5);
  expect.insert(expect.end(), lip.begin(), lip.end());
  EXPECT_EQ(two, expect);
  EXPECT_EQ(extract_area(seq, lm, AreaSpec::parse("whole"), d5), lbp_top(seq, d5));

  for (const auto& area : AreaSpec::standard_areas()) {
    for (const int d : {5, 10}) {
      EXPECT_EQ(extract_area(seq, lm, area, DivisionFactor(d)).size(),
                area.size() * static_cast<std::size_t>(d * d) * 3 * 256);
      EXPECT_EQ(feature_length(area, DivisionFactor(d)),
                area.size() * static_cast<std::size_t>(d * d) * 3 * 256);
    }
  }
}

TEST(ExtractArea, ShiftInvariance) {
  const auto seq = noise(64, 64, 5, 3);
  FrameSequence shifted = seq;
  for (auto& f : shifted.frames) {
    for (auto& p : f.pixels) p = static_cast<std::uint8_t>(p / 2);
  }
  FrameSequence plus = shifted;
  for (auto& f : plus.frames) {
    for (auto& p : f.pixels) p = static_cast<std::uint8_t>(p + 100);
  }
  const auto lm = testkit::template_landmarks(64, 64);
  EXPECT_EQ(extract_area(shifted, lm, AreaSpec::parse("eyebrow+lip"), DivisionFactor(5)),
            extract_area(plus, lm, AreaSpec::parse("eyebrow+lip"), DivisionFactor(5)));
}

#include <fstream>
#include <thread>

#include <gtest/gtest.h>

#include "fmer/error.hpp"
#include "fmer/image.hpp"
#include "fmer/ingest.hpp"
#include "testkit.hpp"

using namespace fmer;
namespace fs = std::filesystem;

namespace {

const char* kHeader = "clip_id,subject_id,frames_dir,onset,apex,offset,label\n";

fs::path write_manifest(const fs::path& dir, const std::string& body) {
  const auto path = dir / "manifest.csv";
  std::ofstream(path) << kHeader << body;
  return path;
}

void write_frames(const fs::path& dir, long first, long last, int rows, int cols) {
  fs::create_directories(dir);
  GrayImage img(rows, cols);
  for (long i = first; i <= last; ++i) {
    for (std::size_t p = 0; p < img.pixels.size(); ++p) {
      img.pixels[p] = static_cast<std::uint8_t>((p * 7 + static_cast<std::size_t>(i)) % 251);
    }
    char name[32];
    std::snprintf(name, sizeof name, "img%03ld.pgm", i);
    write_pgm(dir / name, img);
  }
}

}  // namespace

TEST(Luma, ReferencePixels) {
  EXPECT_EQ(luma(255, 255, 255), 255);
  EXPECT_EQ(luma(0, 0, 0), 0);
  EXPECT_EQ(luma(255, 0, 0), 76);
  // integer reference: round(0.299 R + 0.587 G + 0.114 B)
  for (int r = 0; r < 256; r += 17) {
    for (int g = 0; g < 256; g += 15) {
      for (int b = 0; b < 256; b += 51) {
        const long scaled = 299L * r + 587L * g + 114L * b;
        const long expect = scaled / 1000 + (scaled % 1000 >= 500 ? 1 : 0);
        EXPECT_EQ(luma(static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                       static_cast<std::uint8_t>(b)),
                  expect);
      }
    }
  }
}

TEST(Relabel, CoarseMapping) {
  EXPECT_EQ(relabel(RawEmotion::Disgust), CoarseLabel::Negative);
  EXPECT_EQ(relabel(RawEmotion::Sadness), CoarseLabel::Negative);
  EXPECT_EQ(relabel(RawEmotion::Fear), CoarseLabel::Negative);
  EXPECT_EQ(relabel(RawEmotion::Happiness), CoarseLabel::Positive);
  EXPECT_EQ(relabel(RawEmotion::Surprise), CoarseLabel::Surprise);
  EXPECT_EQ(relabel(RawEmotion::Others), CoarseLabel::Others);
  EXPECT_EQ(relabel(RawEmotion::Repression), CoarseLabel::Others);
  EXPECT_EQ(relabel(RawEmotion::Repression, RepressionPolicy::ToNegative), CoarseLabel::Negative);
  EXPECT_FALSE(relabel(RawEmotion::Repression, RepressionPolicy::Exclude).has_value());
}

TEST(Relabel, SurjectiveOntoCoarse) {
  std::array<bool, kNumClasses> hit{};
  for (int i = 0; i < 7; ++i) hit[class_index(*relabel(static_cast<RawEmotion>(i)))] = true;
  for (const bool h : hit) EXPECT_TRUE(h);
}

TEST(Labels, ParseRoundTrip) {
  for (int i = 0; i < 7; ++i) {
    const auto e = static_cast<RawEmotion>(i);
    EXPECT_EQ(parse_raw_emotion(to_string(e)), e);
  }
  for (const auto c : kClassOrder) EXPECT_EQ(parse_coarse_label(to_string(c)), c);
  EXPECT_THROW(parse_raw_emotion("contempt"), ParseError);
}

TEST(Manifest, SingleRowLength) {
  const auto dir = testkit::temp_dir("manifest1");
  const auto entries = load_manifest(write_manifest(dir, "EP02_01f,sub01,frames/a,46,59,86,happiness\n"));
  ASSERT_EQ(entries.size(), 1u);
  EXPECT_EQ(entries[0].length(), 41);
  EXPECT_EQ(entries[0].raw_label, RawEmotion::Happiness);
  EXPECT_EQ(entries[0].frames_dir, dir / "frames/a");
}

TEST(Manifest, OrderingViolation) {
  const auto dir = testkit::temp_dir("manifest2");
  const auto path = write_manifest(dir, "c1,s1,f,10,10,9,others\n");
  EXPECT_THROW(load_manifest(path), ValidationError);
}

TEST(Manifest, BadHeaderAndColumns) {
  const auto dir = testkit::temp_dir("manifest3");
  const auto path = dir / "m.csv";
  std::ofstream(path) << "clip,subject\n";
  EXPECT_THROW(load_manifest(path), ParseError);
  const auto path2 = write_manifest(dir, "c1,s1,f,1,2\n");
  try {
    load_manifest(path2);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  EXPECT_THROW(load_manifest(dir / "absent.csv"), IoError);
  const auto path3 = write_manifest(dir, "c1,s1,f,1,2,5,contempt\n");
  EXPECT_THROW(load_manifest(path3), ParseError);
}

TEST(Manifest, QuotedFields) {
  const auto dir = testkit::temp_dir("manifest4");
  const auto entries =
      load_manifest(write_manifest(dir, "\"clip, one\",s1,\"frames/x\",0,1,2,surprise\n"));
  ASSERT_EQ(entries.size(), 1u);
  EXPECT_EQ(entries[0].clip_id, "clip, one");
}

TEST(Manifest, FullDatasetTally) {
  const auto dir = testkit::temp_dir("manifest255");
  const std::pair<const char*, int> counts[] = {{"happiness", 32}, {"surprise", 28}, {"disgust", 63},
                                                {"sadness", 4},    {"fear", 2},      {"repression", 27},
                                                {"others", 99}};
  std::string body;
  int n = 0;
  for (const auto& [label, count] : counts) {
    for (int i = 0; i < count; ++i, ++n) {
      body += "clip" + std::to_string(n) + ",sub" + std::to_string(n % 26) + ",f" + std::to_string(n) +
              ",10,20,40," + label + "\n";
    }
  }
  const auto entries = load_manifest(write_manifest(dir, body));
  ASSERT_EQ(entries.size(), 255u);
  const auto t = tally(entries);
  const std::array<std::size_t, 7> expect = {32, 28, 63, 4, 2, 27, 99};
  EXPECT_EQ(t, expect);

  std::array<int, kNumClasses> coarse{};
  for (const auto& e : entries) ++coarse[class_index(*relabel(e.raw_label))];
  EXPECT_EQ(coarse, (std::array<int, kNumClasses>{69, 32, 28, 126}));
}

TEST(LoadSequence, ShapeAndOrder) {
  const auto dir = testkit::temp_dir("seq1");
  write_frames(dir / "clip", 46, 86, 280, 340);
  const auto entries = load_manifest(write_manifest(dir, "clip,s1,clip,46,59,86,fear\n"));
  const auto seq = load_sequence(entries[0]);
  EXPECT_EQ(seq.length(), 41);
  EXPECT_EQ(seq.rows(), 280);
  EXPECT_EQ(seq.cols(), 340);
  EXPECT_EQ(seq.label, CoarseLabel::Negative);
  EXPECT_EQ(seq.frames[0].pixels[1], static_cast<std::uint8_t>((7 + 46) % 251));
  EXPECT_EQ(seq.frames[40].pixels[1], static_cast<std::uint8_t>((7 + 86) % 251));
}

TEST(LoadSequence, MissingFrame) {
  const auto dir = testkit::temp_dir("seq2");
  write_frames(dir / "clip", 46, 86, 12, 10);
  fs::remove(dir / "clip" / "img059.pgm");
  const auto entries = load_manifest(write_manifest(dir, "clip,s1,clip,46,59,86,others\n"));
  try {
    load_sequence(entries[0]);
    FAIL() << "expected MissingFrame";
  } catch (const MissingFrame& e) {
    EXPECT_EQ(e.index(), 59);
  }
}

TEST(LoadSequence, DimensionMismatch) {
  const auto dir = testkit::temp_dir("seq3");
  write_frames(dir / "clip", 0, 4, 280, 340);
  write_frames(dir / "odd", 2, 2, 281, 340);
  fs::copy_file(dir / "odd" / "img002.pgm", dir / "clip" / "img002.pgm",
                fs::copy_options::overwrite_existing);
  const auto entries = load_manifest(write_manifest(dir, "clip,s1,clip,0,2,4,others\n"));
  EXPECT_THROW(load_sequence(entries[0]), DimensionMismatch);
}

TEST(LoadSequence, PngMatchesPgm) {
  const auto dir = testkit::temp_dir("seq4");
  fs::create_directories(dir / "png");
  RgbImage rgb(6, 5);
  for (int y = 0; y < 6; ++y) {
    for (int x = 0; x < 5; ++x) {
      rgb.set(y, x, static_cast<std::uint8_t>(40 * x), static_cast<std::uint8_t>(30 * y), 200);
    }
  }
  for (int i = 0; i < 3; ++i) write_png(dir / "png" / ("img00" + std::to_string(i) + ".png"), rgb);
  const auto entries = load_manifest(write_manifest(dir, "p,s,png,0,1,2,happiness\n"));
  const auto seq = load_sequence(entries[0]);
  ASSERT_EQ(seq.length(), 3);
  const GrayImage expect = to_grayscale(rgb);
  EXPECT_EQ(seq.frames[2], expect);
  EXPECT_EQ(seq.frames[0].at(5, 4), luma(160, 150, 200));
}

TEST(LoadSequence, ConcurrentEqualsSequential) {
  const auto dir = testkit::temp_dir("seq5");
  testkit::DatasetSpec spec;
  spec.clips_per_class = 2;
  spec.rows = 16;
  spec.cols = 16;
  const auto written = testkit::write_dataset(dir, spec);
  const auto entries = load_manifest(written.manifest);
  std::vector<FrameSequence> a(entries.size()), b(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) a[i] = load_sequence(entries[i]);
  std::vector<std::thread> threads;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    threads.emplace_back([&, i] { b[i] = load_sequence(entries[i]); });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(a, b);
}

TEST(LoadSequence, ExcludedClip) {
  ClipManifestEntry e{"c", "s", "nowhere", 0, 1, 2, RawEmotion::Repression};
  LoadOptions opts;
  opts.repression = RepressionPolicy::Exclude;
  EXPECT_THROW(load_sequence(e, opts), ValidationError);
}

TEST(Image, PgmRoundTrip) {
  const auto dir = testkit::temp_dir("img");
  GrayImage img(4, 7);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<std::uint8_t>(i * 9);
  write_pgm(dir / "a.pgm", img);
  EXPECT_EQ(read_image(dir / "a.pgm"), img);
  write_png(dir / "a.png", img);
  EXPECT_EQ(read_image(dir / "a.png"), img);
  EXPECT_THROW(read_image(dir / "none.pgm"), IoError);
  std::ofstream(dir / "bad.pgm") << "P2\n1 1\n255\n0\n";
  EXPECT_THROW(read_image(dir / "bad.pgm"), ParseError);
}

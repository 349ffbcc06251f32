#include <cstdlib>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "fmer/app.hpp"
#include "fmer/dataset.hpp"
#include "fmer/error.hpp"
#include "fmer/models.hpp"
#include "testkit.hpp"

using namespace fmer;
namespace fs = std::filesystem;

namespace {

struct Fixture {
  fs::path root;
  testkit::WrittenDataset data;
  app::RunConfig config;
};

Fixture make_fixture(const std::string& tag, int clips_per_class = 5) {
  Fixture f;
  f.root = testkit::temp_dir(tag);
  testkit::DatasetSpec spec;
  spec.clips_per_class = clips_per_class;
  f.data = testkit::write_dataset(f.root / "data", spec);
  std::ofstream(f.root / "grid.json")
      << R"({"rf": {"trees": [15], "max_depth": [8]}, "knn": {"k": [1, 3]}, "lr": {"ridge": [0.1]}, "lsvm": {"strength": [0.1]}})";
  f.config.manifest = f.data.manifest;
  f.config.landmarks_dir = f.data.landmarks_dir;
  f.config.grid = f.root / "grid.json";
  f.config.out = f.root / "out";
  f.config.jobs = 2;
  return f;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

struct CliResult {
  int code;
  std::string err;
};

CliResult run_cli(const std::string& args, const fs::path& dir) {
  const auto err = dir / "stderr.txt";
  const std::string cmd = std::string(FMER_CLI_PATH) + " " + args + " >" + (dir / "stdout.txt").string() +
                          " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
}

}  // namespace

TEST(Config, Precedence) {
  const auto dir = testkit::temp_dir("cfg");
  std::ofstream(dir / "c.json") << R"({"area": "lip", "division": 10, "seed": 7, "out": "o", "manifest": "/abs/m.csv"})";
  app::RunConfig c;
  app::apply(c, app::load_config(dir / "c.json"));
  EXPECT_EQ(c.area, "lip");
  EXPECT_EQ(c.division, 10);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.out, dir / "o");
  EXPECT_EQ(c.manifest, fs::path("/abs/m.csv"));
  EXPECT_EQ(c.model, "rf");  // default survives
  app::ConfigOverrides flags;
  flags.division = 5;
  app::apply(c, flags);
  EXPECT_EQ(c.division, 5);
  EXPECT_EQ(c.area, "lip");
  EXPECT_THROW(app::parse_config(R"({"colour": 1})", {}), ParseError);
  EXPECT_THROW(app::parse_config(R"({"division": "x"})", {}), ParseError);
}

TEST(Config, Validation) {
  app::RunConfig c;
  c.test_fraction = 0.0;
  EXPECT_THROW(app::validate(c), ValidationError);
  c = {};
  c.model = "svm";
  EXPECT_THROW(app::validate(c), UsageError);
  c = {};
  c.area = "nose";
  EXPECT_THROW(app::validate(c), UsageError);
  c = {};
  c.division = 7;
  EXPECT_THROW(app::validate(c), Error);
  EXPECT_EQ(app::area_tag(app::RunConfig{}), "eyebrow+lip_d5");
}

TEST(CmdSplit, SevenLabelManifest) {
  const auto dir = testkit::temp_dir("split255");
  std::string body = "clip_id,subject_id,frames_dir,onset,apex,offset,label\n";
  const std::pair<const char*, int> counts[] = {{"happiness", 32}, {"surprise", 28}, {"disgust", 63},
                                                {"sadness", 4},    {"fear", 2},      {"repression", 27},
                                                {"others", 99}};
  int n = 0;
  for (const auto& [label, count] : counts) {
    for (int i = 0; i < count; ++i, ++n) body += "c" + std::to_string(n) + ",s,f,0,1,2," + label + "\n";
  }
  std::ofstream(dir / "m.csv") << body;
  app::RunConfig c;
  c.manifest = dir / "m.csv";
  c.out = dir / "out";
  app::cmd_split(c);
  const auto doc = nlohmann::json::parse(slurp(app::splits_path(c)));
  EXPECT_EQ(doc["splits"][0]["test"].size(), 51u);
  EXPECT_EQ(doc["splits"][0]["train"].size(), 204u);
  const auto first = slurp(app::splits_path(c));
  app::cmd_split(c);
  EXPECT_EQ(slurp(app::splits_path(c)), first);

  c.repeats = 3;
  app::cmd_split(c);
  const auto three = nlohmann::json::parse(slurp(app::splits_path(c)));
  ASSERT_EQ(three["splits"].size(), 3u);
  EXPECT_NE(three["splits"][0]["test"], three["splits"][1]["test"]);
  EXPECT_EQ(three["splits"][0], doc["splits"][0]);

  c.repeats = 1;
  c.test_fraction = 0.0;
  EXPECT_THROW(app::cmd_split(c), ValidationError);
}

TEST(CmdExtract, LengthsAndJobs) {
  auto f = make_fixture("extract", 2);
  f.config.write_csv = true;
  const auto files = app::cmd_extract(f.config);
  ASSERT_EQ(files.size(), 2u);
  const auto table = read_features(files[0]);
  EXPECT_EQ(table.data.dim, 38400u);
  EXPECT_EQ(table.data.size(), 8u);
  EXPECT_EQ(table.layout.area, "eyebrow+lip");
  EXPECT_EQ(read_features(files[1]).data.features, table.data.features);

  const auto bytes = slurp(files[0]);
  f.config.jobs = 1;
  app::cmd_extract(f.config);
  EXPECT_EQ(slurp(files[0]), bytes);

  f.config.area = "whole";
  EXPECT_EQ(read_features(app::cmd_extract(f.config)[0]).data.dim, 19200u);
}

TEST(CmdExtract, MissingLandmarksNamesClip) {
  auto f = make_fixture("extract_missing", 2);
  fs::remove(f.data.landmarks_dir / (f.data.clip_ids[3] + ".landmarks.txt"));
  try {
    app::cmd_extract(f.config);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find(f.data.clip_ids[3]), std::string::npos) << e.what();
  }
}

TEST(CmdTrainEval, EndToEnd) {
  auto f = make_fixture("train");
  app::cmd_split(f.config);
  app::cmd_extract(f.config);
  const auto models = app::cmd_train(f.config);
  ASSERT_EQ(models.size(), 1u);
  const auto model_bytes = slurp(models[0]);
  app::cmd_train(f.config);
  EXPECT_EQ(slurp(models[0]), model_bytes);

  const auto model = TrainedModel::load(models[0]);
  const auto table = read_features(app::features_path(f.config));
  EXPECT_GE(training_accuracy(model, table.data), 0.95);

  const auto report = app::cmd_eval(f.config);
  const auto summary = nlohmann::json::parse(slurp(app::report_dir(f.config, 0) / "summary.json"));
  std::uint64_t trace = 0, total = 0;
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 4; ++c) {
      const auto v = summary["confusion"][r][c].get<std::uint64_t>();
      total += v;
      if (r == c) trace += v;
    }
  }
  EXPECT_EQ(summary["accuracy"].get<double>(), static_cast<double>(trace) / static_cast<double>(total));
  EXPECT_EQ(summary["model"], "rf");

  f.config.model = "knn";
  EXPECT_THROW(app::cmd_eval(f.config), IoError);  // no knn model yet
  f.config.model = "boost";
  EXPECT_THROW(app::cmd_train(f.config), UsageError);
}

TEST(CmdTrainEval, Repeats) {
  auto f = make_fixture("repeats");
  f.config.repeats = 2;
  f.config.model = "knn";
  const auto files = app::cmd_pipeline(f.config);
  EXPECT_TRUE(fs::exists(app::model_path(f.config, 1)));
  EXPECT_TRUE(fs::exists(app::report_dir(f.config, 1) / "summary.json"));
  EXPECT_TRUE(fs::exists(f.config.out / "report_knn_eyebrow+lip_d5_mean.json"));
}

TEST(CmdPipeline, Deterministic) {
  auto a = make_fixture("pipe_a");
  auto b = make_fixture("pipe_b");
  b.config.jobs = 1;
  const auto fa = app::cmd_pipeline(a.config);
  const auto fb = app::cmd_pipeline(b.config);
  ASSERT_EQ(fa.size(), fb.size());
  for (std::size_t i = 0; i < fa.size(); ++i) {
    EXPECT_EQ(fa[i].filename(), fb[i].filename());
    EXPECT_TRUE(testkit::same_bytes(fa[i], fb[i])) << fa[i];
  }
}

TEST(CmdBench, WritesRecords) {
  auto f = make_fixture("bench", 1);
  f.config.repeats = 2;
  f.config.area = "eye";
  app::cmd_bench(f.config);
  const auto doc = nlohmann::json::parse(slurp(app::bench_path(f.config)));
  ASSERT_EQ(doc["records"].size(), 1u);
  EXPECT_EQ(doc["records"][0]["repeats"], 2);
  EXPECT_EQ(doc["records"][0]["jobs"], 1);

  std::ofstream(f.root / "empty.csv") << "clip_id,subject_id,frames_dir,onset,apex,offset,label\n";
  f.config.manifest = f.root / "empty.csv";
  EXPECT_THROW(app::cmd_bench(f.config), EmptyInput);
}

TEST(Cli, ExitCodesAndErrors) {
  auto f = make_fixture("cli", 2);
  const auto common = " --manifest " + f.data.manifest.string() + " --landmarks-dir " +
                      f.data.landmarks_dir.string() + " --out " + (f.root / "cli_out").string();
  CliResult ok = run_cli("split" + common + " --seed 3", f.root);
  EXPECT_EQ(ok.code, 0) << ok.err;
  EXPECT_TRUE(fs::exists(f.root / "cli_out" / "splits.json"));

  ok = run_cli("extract" + common + " --area lip --division 10 --jobs 2", f.root);
  EXPECT_EQ(ok.code, 0) << ok.err;
  EXPECT_TRUE(fs::exists(f.root / "cli_out" / "features_lip_d10.fmef"));

  CliResult bad = run_cli("train" + common + " --model boost", f.root);
  EXPECT_NE(bad.code, 0);
  EXPECT_EQ(bad.err.rfind("error: UsageError: ", 0), 0u) << bad.err;
  EXPECT_EQ(std::count(bad.err.begin(), bad.err.end(), '\n'), 1);

  bad = run_cli("split" + common + " --test-fraction 0", f.root);
  EXPECT_NE(bad.code, 0);
  EXPECT_EQ(bad.err.rfind("error: ValidationError: ", 0), 0u) << bad.err;

  bad = run_cli("eval" + common + " --model lr", f.root);
  EXPECT_NE(bad.code, 0);
  EXPECT_EQ(bad.err.rfind("error: IoError: ", 0), 0u) << bad.err;

  bad = run_cli("extract --bogus", f.root);
  EXPECT_NE(bad.code, 0);
  EXPECT_EQ(bad.err.rfind("error: UsageError: ", 0), 0u) << bad.err;

  std::ofstream(f.root / "cfg.json") << R"({"area": "eye", "division": 10})";
  ok = run_cli("extract" + common + " --config " + (f.root / "cfg.json").string() + " --division 5", f.root);
  EXPECT_EQ(ok.code, 0) << ok.err;
  EXPECT_TRUE(fs::exists(f.root / "cli_out" / "features_eye_d5.fmef"));
}

TEST(CmdExtract, FramePadWidth) {
  auto f = make_fixture("frame_pad", 1);
  const auto padded = app::cmd_extract(f.config);
  const auto expect = slurp(padded[0]);
  f.config.frame_pad = 0;
  EXPECT_THROW(app::cmd_extract(f.config), MissingFrame);
  // img010.pgm -> img10.pgm
  for (const auto& dir : fs::directory_iterator(f.root / "data" / "frames")) {
    for (const auto& frame : fs::directory_iterator(dir.path())) {
      const std::string name = frame.path().filename().string();
      const int index = std::stoi(name.substr(3, 3));
      fs::rename(frame.path(), dir.path() / ("img" + std::to_string(index) + ".pgm"));
    }
  }
  EXPECT_EQ(slurp(app::cmd_extract(f.config)[0]), expect);
  f.config.frame_pad = -1;
  EXPECT_THROW(app::validate(f.config), ValidationError);
  EXPECT_EQ(app::parse_config(R"({"frame_pad": 4})", {}).frame_pad, 4);
}

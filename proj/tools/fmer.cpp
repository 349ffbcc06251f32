#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fmer/app.hpp"
#include "fmer/error.hpp"

namespace {

using fmer::app::ConfigOverrides;

void fail(const std::string& category, const std::string& message) {
  std::string line = message;
  for (auto& ch : line) {
    if (ch == '\n' || ch == '\r') ch = ' ';
  }
  std::cerr << "error: " << category << ": " << line << '\n';
}

struct Flags {
  ConfigOverrides o;
  std::optional<std::string> manifest, landmarks_dir, grid, geometry, out, config;
  bool standardize = false, no_standardize = false, csv = false, all_areas = false;
};

void add_shared(CLI::App& cmd, Flags& f) {
  cmd.add_option("--config", f.config, "JSON config file (flags override it)");
  cmd.add_option("--manifest", f.manifest, "clip manifest CSV");
  cmd.add_option("--landmarks-dir", f.landmarks_dir, "directory of <clip_id>.landmarks.txt files");
  cmd.add_option("--area", f.o.area, "whole|eyebrow|eye|middle|lip|bottom|eyebrow+eye|eyebrow+lip|eyebrow+eye+lip");
  cmd.add_option("--division", f.o.division, "block division factor (5 or 10)");
  cmd.add_option("--model", f.o.model, "lsvm|lr|rf|knn");
  cmd.add_option("--seed", f.o.seed, "split and training seed");
  cmd.add_option("--test-fraction", f.o.test_fraction, "held-out fraction per class");
  cmd.add_option("--grid", f.grid, "hyperparameter grid JSON");
  cmd.add_option("--geometry", f.geometry, "ROI landmark index sets JSON");
  cmd.add_option("--out", f.out, "output directory");
  cmd.add_option("--jobs", f.o.jobs, "worker threads (0 = all cores)");
  cmd.add_option("--repeats", f.o.repeats, "split repeats / benchmark repeats");
  cmd.add_option("--folds", f.o.folds, "grid search folds");
  cmd.add_option("--repression", f.o.repression, "others|negative|exclude");
  cmd.add_option("--frame-pad", f.o.frame_pad, "zero-pad width of frame indices (0 = none)");
  cmd.add_flag("--standardize", f.standardize, "z-score features before linear models");
  cmd.add_flag("--no-standardize", f.no_standardize);
  cmd.add_flag("--csv", f.csv, "also write features as CSV");
  cmd.add_flag("--all-areas", f.all_areas, "bench: every standard area at d=5 and d=10");
}

fmer::app::RunConfig resolve(CLI::App& cmd, Flags& f) {
  fmer::app::RunConfig config;
  if (f.config) fmer::app::apply(config, fmer::app::load_config(*f.config));
  if (f.manifest) f.o.manifest = *f.manifest;
  if (f.landmarks_dir) f.o.landmarks_dir = *f.landmarks_dir;
  if (f.grid) f.o.grid = *f.grid;
  if (f.geometry) f.o.geometry = *f.geometry;
  if (f.out) f.o.out = *f.out;
  if (cmd.count("--standardize")) f.o.standardize = true;
  if (cmd.count("--no-standardize")) f.o.standardize = false;
  if (cmd.count("--csv")) f.o.write_csv = true;
  if (cmd.count("--all-areas")) f.o.all_areas = true;
  fmer::app::apply(config, f.o);
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Facial micro-expression recognition pipeline"};
  app.require_subcommand(1);

  using Command = std::vector<std::filesystem::path> (*)(const fmer::app::RunConfig&);
  const std::pair<const char*, Command> commands[] = {
      {"split", &fmer::app::cmd_split},       {"extract", &fmer::app::cmd_extract},
      {"train", &fmer::app::cmd_train},       {"eval", &fmer::app::cmd_eval},
      {"bench", &fmer::app::cmd_bench},       {"pipeline", &fmer::app::cmd_pipeline}};
  const char* help[] = {"write splits.json", "extract LBP-TOP features", "grid search and fit a model",
                        "evaluate on the test split", "time feature extraction",
                        "split, extract, train and eval"};

  Flags flags;
  std::vector<CLI::App*> subs;
  for (std::size_t i = 0; i < std::size(commands); ++i) {
    subs.push_back(app.add_subcommand(commands[i].first, help[i]));
    add_shared(*subs.back(), flags);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    fail("UsageError", e.what());
    return 2;
  }

  try {
    for (std::size_t i = 0; i < subs.size(); ++i) {
      if (!subs[i]->parsed()) continue;
      const auto config = resolve(*subs[i], flags);
      for (const auto& path : commands[i].second(config)) std::cout << path.string() << '\n';
    }
  } catch (const fmer::UsageError& e) {
    fail(e.category(), e.what());
    return 2;
  } catch (const fmer::Error& e) {
    fail(e.category(), e.what());
    return 1;
  } catch (const std::exception& e) {
    fail("InternalError", e.what());
    return 3;
  }
  return 0;
}

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "fmer/app.hpp"
#include "fmer/dataset.hpp"
#include "fmer/error.hpp"
#include "fmer/eval.hpp"
#include "fmer/features.hpp"
#include "fmer/landmarks.hpp"
#include "fmer/models.hpp"
#include "fmer/parallel.hpp"

namespace fmer::app {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

void ensure_out(const RunConfig& c) {
  std::error_code ec;
  fs::create_directories(c.out, ec);
  if (ec || !fs::is_directory(c.out)) throw IoError("cannot create output directory " + c.out.string());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

RoiGeometry geometry_of(const RunConfig& c) {
  return c.geometry.empty() ? RoiGeometry{} : RoiGeometry::load(c.geometry);
}

std::vector<ClipManifestEntry> manifest_of(const RunConfig& c) {
  if (c.manifest.empty()) throw UsageError("--manifest is required");
  auto entries = load_manifest(c.manifest);
  if (entries.empty()) throw EmptyInput("manifest " + c.manifest.string() + " lists no clips");
  return entries;
}

// Entries that survive relabelling, with their coarse labels.
std::vector<std::pair<ClipManifestEntry, CoarseLabel>> labelled(const RunConfig& c) {
  const auto policy = parse_repression_policy(c.repression);
  std::vector<std::pair<ClipManifestEntry, CoarseLabel>> out;
  for (auto& e : manifest_of(c)) {
    if (const auto label = relabel(e.raw_label, policy)) out.emplace_back(std::move(e), *label);
  }
  if (out.empty()) throw EmptyInput("no clips left after relabelling");
  return out;
}

LandmarkSet landmarks_for(const RunConfig& c, const std::string& clip_id, FrameDims dims) {
  if (c.landmarks_dir.empty()) throw UsageError("--landmarks-dir is required");
  const fs::path path = c.landmarks_dir / (clip_id + ".landmarks.txt");
  if (!fs::exists(path)) {
    throw IoError("clip " + clip_id + ": landmarks file not found: " + path.string());
  }
  return parse_landmarks(path, dims);
}

template <typename Fn>
auto for_clip(const std::string& clip_id, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    const std::string msg = e.what();
    if (msg.find(clip_id) != std::string::npos) throw;
    throw Error(e.category(), "clip " + clip_id + ": " + msg);
  }
}

struct SplitSet {
  std::vector<std::uint64_t> seeds;
  std::vector<std::vector<std::string>> train;
  std::vector<std::vector<std::string>> test;
};

SplitSet read_splits(const RunConfig& c) {
  const fs::path path = splits_path(c);
  SplitSet s;
  try {
    const json doc = json::parse(read_text(path));
    for (const auto& item : doc.at("splits")) {
      s.seeds.push_back(item.at("seed").get<std::uint64_t>());
      s.train.push_back(item.at("train").get<std::vector<std::string>>());
      s.test.push_back(item.at("test").get<std::vector<std::string>>());
    }
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (s.seeds.size() < static_cast<std::size_t>(c.repeats)) {
    throw ValidationError(path.string() + " holds " + std::to_string(s.seeds.size()) +
                          " splits but " + std::to_string(c.repeats) + " repeats were requested");
  }
  return s;
}

LabeledDataset pick(const LabeledDataset& all, const std::vector<std::string>& ids,
                    const std::map<std::string, std::size_t>& index) {
  std::vector<std::size_t> rows;
  rows.reserve(ids.size());
  for (const auto& id : ids) {
    const auto it = index.find(id);
    if (it == index.end()) throw ValidationError("clip " + id + " is in the split but has no features");
    rows.push_back(it->second);
  }
  return all.subset(rows);
}

std::map<std::string, std::size_t> row_index(const LabeledDataset& ds) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < ds.size(); ++i) index.emplace(ds.clip_ids[i], i);
  return index;
}

FeatureTable load_features(const RunConfig& c) {
  const fs::path path = features_path(c);
  if (!fs::exists(path)) throw IoError("feature file not found: " + path.string() + " (run extract)");
  return read_features_binary(path);
}

TrainOptions train_options(const RunConfig& c) {
  TrainOptions o;
  o.standardize = c.standardize;
  o.jobs = effective_jobs(c);
  return o;
}

std::optional<double> cc_from_bench(const RunConfig& c, const std::string& area, int division) {
  const fs::path path = bench_path(c);
  if (!fs::exists(path)) return std::nullopt;
  try {
    const json doc = json::parse(read_text(path));
    for (const auto& r : doc.at("records")) {
      if (r.at("area").get<std::string>() == area && r.at("division").get<int>() == division) {
        return r.at("mean_seconds_per_sample").get<double>();
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return std::nullopt;
}

}  // namespace

std::vector<fs::path> cmd_split(const RunConfig& c) {
  validate(c);
  const auto clips = labelled(c);
  std::vector<CoarseLabel> labels;
  for (const auto& [entry, label] : clips) labels.push_back(label);

  json splits = json::array();
  for (int r = 0; r < c.repeats; ++r) {
    const std::uint64_t seed = c.seed + static_cast<std::uint64_t>(r);
    const auto idx = stratified_split_indices(labels, SplitSpec{c.test_fraction, seed});
    json train = json::array();
    json test = json::array();
    for (const auto i : idx.train) train.push_back(clips[i].first.clip_id);
    for (const auto i : idx.test) test.push_back(clips[i].first.clip_id);
    splits.push_back({{"seed", seed}, {"train", train}, {"test", test}});
  }
  const json doc = {{"test_fraction", c.test_fraction},
                    {"repression", c.repression},
                    {"splits", splits}};
  ensure_out(c);
  write_text(splits_path(c), doc.dump(2) + "\n");
  return {splits_path(c)};
}

std::vector<fs::path> cmd_extract(const RunConfig& c) {
  validate(c);
  const auto clips = labelled(c);
  const AreaSpec area = AreaSpec::parse(c.area);
  const DivisionFactor d(c.division);
  const RoiGeometry geometry = geometry_of(c);
  LoadOptions load;
  load.repression = parse_repression_policy(c.repression);
  load.naming.pad_width = c.frame_pad;

  std::vector<FeatureVector> rows(clips.size());
  parallel_for(clips.size(), effective_jobs(c), [&](std::size_t i) {
    const auto& entry = clips[i].first;
    rows[i] = for_clip(entry.clip_id, [&] {
      const FrameSequence seq = load_sequence(entry, load);
      const LandmarkSet lm = landmarks_for(c, entry.clip_id, FrameDims{seq.rows(), seq.cols()});
      return extract_area(seq, lm, area, d, geometry, 1);
    });
  });

  FeatureTable table;
  table.layout.area = area.name();
  table.layout.division = d.value();
  for (const auto kind : area.kinds()) table.layout.rois.emplace_back(to_string(kind));
  table.data.dim = feature_length(area, d);
  for (std::size_t i = 0; i < clips.size(); ++i) {
    table.data.add(rows[i], clips[i].second, clips[i].first.clip_id);
  }

  ensure_out(c);
  std::vector<fs::path> written{features_path(c)};
  write_features_binary(written.back(), table);
  if (c.write_csv) {
    written.push_back(features_csv_path(c));
    write_features_csv(written.back(), table);
  }
  return written;
}

std::vector<fs::path> cmd_train(const RunConfig& c) {
  validate(c);
  const ModelKind kind = parse_model_kind(c.model);
  const HyperGrid grid = c.grid.empty() ? HyperGrid{} : HyperGrid::load(c.grid);
  const FeatureTable table = load_features(c);
  const SplitSet splits = read_splits(c);
  const auto index = row_index(table.data);
  const TrainOptions options = train_options(c);

  ensure_out(c);
  std::vector<fs::path> written;
  for (int r = 0; r < c.repeats; ++r) {
    const std::uint64_t seed = splits.seeds[static_cast<std::size_t>(r)];
    const LabeledDataset train_ds = pick(table.data, splits.train[static_cast<std::size_t>(r)], index);
    const GridSearchResult search = grid_search(kind, train_ds, grid, c.folds, seed, options);
    const TrainedModel model = train(kind, train_ds, search.best, seed, options);
    written.push_back(model_path(c, r));
    model.save(written.back());
  }
  return written;
}

std::vector<fs::path> cmd_eval(const RunConfig& c) {
  validate(c);
  const FeatureTable table = load_features(c);
  const SplitSet splits = read_splits(c);
  const auto index = row_index(table.data);
  const auto cc = cc_from_bench(c, table.layout.area, table.layout.division);

  ensure_out(c);
  std::vector<fs::path> written;
  json per_repeat = json::array();
  double acc_sum = 0.0;
  for (int r = 0; r < c.repeats; ++r) {
    const fs::path mpath = model_path(c, r);
    if (!fs::exists(mpath)) throw IoError("model file not found: " + mpath.string() + " (run train)");
    const TrainedModel model = TrainedModel::load(mpath);
    const LabeledDataset test = pick(table.data, splits.test[static_cast<std::size_t>(r)], index);
    EvalMetadata meta{c.model, table.layout.area, table.layout.division,
                      splits.seeds[static_cast<std::size_t>(r)], cc};
    const EvalReport report = evaluate(model, test, std::move(meta));
    for (auto& p : emit_plots(report, report_dir(c, r))) written.push_back(std::move(p));
    acc_sum += report.accuracy;
    per_repeat.push_back({{"seed", report.metadata.seed},
                          {"accuracy", report.accuracy},
                          {"macro_auc", std::isfinite(report.roc.macro_auc)
                                            ? json(report.roc.macro_auc)
                                            : json(nullptr)}});
  }
  if (c.repeats > 1) {
    const json doc = {{"model", c.model},
                      {"area", table.layout.area},
                      {"division", table.layout.division},
                      {"repeats", per_repeat},
                      {"mean_accuracy", acc_sum / c.repeats}};
    written.push_back(c.out / ("report_" + c.model + "_" + area_tag(c) + "_mean.json"));
    write_text(written.back(), doc.dump(2) + "\n");
  }
  return written;
}

std::vector<fs::path> cmd_bench(const RunConfig& c) {
  validate(c);
  const auto entries = manifest_of(c);
  const RoiGeometry geometry = geometry_of(c);
  LoadOptions load;
  load.naming.pad_width = c.frame_pad;

  std::vector<BenchClip> clips(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& entry = entries[i];
    clips[i] = for_clip(entry.clip_id, [&] {
      BenchClip clip;
      clip.sequence = load_sequence(entry, load);
      clip.landmarks = landmarks_for(c, entry.clip_id,
                                     FrameDims{clip.sequence.rows(), clip.sequence.cols()});
      return clip;
    });
  }

  std::vector<std::pair<AreaSpec, DivisionFactor>> runs;
  if (c.all_areas) {
    for (const int d : {5, 10}) {
      for (const auto& area : AreaSpec::standard_areas()) runs.emplace_back(area, DivisionFactor(d));
    }
  } else {
    runs.emplace_back(AreaSpec::parse(c.area), DivisionFactor(c.division));
  }
  std::vector<BenchRecord> records;
  for (const auto& [area, d] : runs) records.push_back(bench_cc(clips, area, d, c.repeats, geometry));

  ensure_out(c);
  write_text(bench_path(c), bench_json(records));
  return {bench_path(c)};
}

std::vector<fs::path> cmd_pipeline(const RunConfig& c) {
  std::vector<fs::path> written;
  for (auto* step : {&cmd_split, &cmd_extract, &cmd_train, &cmd_eval}) {
    for (auto& p : step(c)) written.push_back(std::move(p));
  }
  return written;
}

}  // namespace fmer::app

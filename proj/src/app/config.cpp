#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fmer/app.hpp"
#include "fmer/error.hpp"
#include "fmer/features.hpp"
#include "fmer/landmarks.hpp"
#include "fmer/models.hpp"
#include "fmer/parallel.hpp"

namespace fmer::app {

namespace {

using nlohmann::json;

std::filesystem::path resolve(const std::string& text, const std::filesystem::path& base) {
  std::filesystem::path p(text);
  if (p.is_relative() && !base.empty()) p = base / p;
  return p;
}

template <typename T>
void take(const json& doc, const char* key, std::optional<T>& slot) {
  if (doc.contains(key)) slot = doc.at(key).get<T>();
}

}  // namespace

ConfigOverrides parse_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  static const char* const kKeys[] = {
      "manifest", "landmarks_dir", "area",   "division", "model", "grid",
      "geometry", "seed",          "test_fraction", "out", "standardize", "repeats",
      "jobs",     "folds",         "repression", "write_csv", "all_areas", "frame_pad"};
  ConfigOverrides o;
  try {
    const json doc = json::parse(json_text);
    if (!doc.is_object()) throw ParseError("config: expected a JSON object");
    for (const auto& item : doc.items()) {
      if (std::find(std::begin(kKeys), std::end(kKeys), item.key()) == std::end(kKeys)) {
        throw ParseError("config: unknown key '" + item.key() + "'");
      }
    }
    for (const char* key : {"manifest", "landmarks_dir", "grid", "geometry", "out"}) {
      if (!doc.contains(key)) continue;
      const auto path = resolve(doc.at(key).get<std::string>(), base_dir);
      const std::string k = key;
      if (k == "manifest") o.manifest = path;
      else if (k == "landmarks_dir") o.landmarks_dir = path;
      else if (k == "grid") o.grid = path;
      else if (k == "geometry") o.geometry = path;
      else o.out = path;
    }
    take(doc, "area", o.area);
    take(doc, "division", o.division);
    take(doc, "model", o.model);
    take(doc, "seed", o.seed);
    take(doc, "test_fraction", o.test_fraction);
    take(doc, "standardize", o.standardize);
    take(doc, "repeats", o.repeats);
    take(doc, "jobs", o.jobs);
    take(doc, "folds", o.folds);
    take(doc, "repression", o.repression);
    take(doc, "frame_pad", o.frame_pad);
    take(doc, "write_csv", o.write_csv);
    take(doc, "all_areas", o.all_areas);
  } catch (const json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  return o;
}

ConfigOverrides load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.parent_path());
}

void apply(RunConfig& c, const ConfigOverrides& o) {
  if (o.manifest) c.manifest = *o.manifest;
  if (o.landmarks_dir) c.landmarks_dir = *o.landmarks_dir;
  if (o.area) c.area = *o.area;
  if (o.division) c.division = *o.division;
  if (o.model) c.model = *o.model;
  if (o.grid) c.grid = *o.grid;
  if (o.geometry) c.geometry = *o.geometry;
  if (o.seed) c.seed = *o.seed;
  if (o.test_fraction) c.test_fraction = *o.test_fraction;
  if (o.out) c.out = *o.out;
  if (o.standardize) c.standardize = *o.standardize;
  if (o.repeats) c.repeats = *o.repeats;
  if (o.jobs) c.jobs = *o.jobs;
  if (o.folds) c.folds = *o.folds;
  if (o.repression) c.repression = *o.repression;
  if (o.frame_pad) c.frame_pad = *o.frame_pad;
  if (o.write_csv) c.write_csv = *o.write_csv;
  if (o.all_areas) c.all_areas = *o.all_areas;
}

void validate(const RunConfig& c) {
  try {
    (void)AreaSpec::parse(c.area);
    (void)DivisionFactor(c.division);
    (void)parse_repression_policy(c.repression);
  } catch (const ParseError& e) {
    throw UsageError(e.what());
  }
  (void)parse_model_kind(c.model);
  if (!(c.test_fraction > 0.0 && c.test_fraction < 1.0)) {
    throw ValidationError("test fraction must lie strictly between 0 and 1");
  }
  if (c.repeats < 1) throw ValidationError("repeats must be >= 1");
  if (c.jobs < 0) throw ValidationError("jobs must be >= 0");
  if (c.folds < 2) throw ValidationError("folds must be >= 2");
  if (c.frame_pad < 0) throw ValidationError("frame_pad must be >= 0");
  if (c.out.empty()) throw UsageError("output directory is empty");
}

int effective_jobs(const RunConfig& c) noexcept { return c.jobs > 0 ? c.jobs : default_jobs(); }

std::string area_tag(const RunConfig& c) {
  return AreaSpec::parse(c.area).name() + "_d" + std::to_string(c.division);
}

std::filesystem::path splits_path(const RunConfig& c) { return c.out / "splits.json"; }

std::filesystem::path features_path(const RunConfig& c) {
  return c.out / ("features_" + area_tag(c) + ".fmef");
}

std::filesystem::path features_csv_path(const RunConfig& c) {
  return c.out / ("features_" + area_tag(c) + ".csv");
}

namespace {
std::string repeat_suffix(const RunConfig& c, int repeat) {
  return c.repeats > 1 ? "_r" + std::to_string(repeat) : "";
}
}  // namespace

std::filesystem::path model_path(const RunConfig& c, int repeat) {
  return c.out / ("model_" + c.model + "_" + area_tag(c) + repeat_suffix(c, repeat) + ".json");
}

std::filesystem::path report_dir(const RunConfig& c, int repeat) {
  return c.out / ("report_" + c.model + "_" + area_tag(c) + repeat_suffix(c, repeat));
}

std::filesystem::path bench_path(const RunConfig& c) { return c.out / "bench.json"; }

}  // namespace fmer::app

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>

#include <json.hpp>

#include "fmer/error.hpp"
#include "fmer/eval.hpp"

namespace fmer {

namespace {

using nlohmann::json;

constexpr std::array<const char*, kNumClasses> kCurveColours = {"#d62728", "#2ca02c", "#1f77b4",
                                                                "#7f7f7f"};

std::string shortest(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string fixed(double v, int digits) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, digits);
  return std::string(buf, ptr);
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

std::string roc_svg(const EvalReport& report) {
  constexpr double kSize = 360.0;
  constexpr double kPad = 40.0;
  const auto px = [&](double fpr) { return fixed(kPad + fpr * kSize, 2); };
  const auto py = [&](double tpr) { return fixed(kPad + (1.0 - tpr) * kSize, 2); };

  std::string svg =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"560\" height=\"440\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect x=\"40\" y=\"40\" width=\"360\" height=\"360\" fill=\"none\" stroke=\"#000\"/>\n";
  svg += "<line x1=\"40\" y1=\"400\" x2=\"400\" y2=\"40\" stroke=\"#bbb\" stroke-dasharray=\"4 4\"/>\n";
  svg += "<text x=\"220\" y=\"430\" text-anchor=\"middle\">False positive rate</text>\n";
  svg += "<text x=\"12\" y=\"220\" text-anchor=\"middle\" transform=\"rotate(-90 12 220)\">"
         "True positive rate</text>\n";
  int legend_row = 0;
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    const auto& curve = report.roc.curves[k];
    const std::string name(to_string(curve.cls));
    if (curve.defined) {
      svg += "<polyline fill=\"none\" stroke-width=\"2\" stroke=\"" + std::string(kCurveColours[k]) +
             "\" points=\"";
      for (std::size_t i = 0; i < curve.points.size(); ++i) {
        if (i) svg += ' ';
        svg += px(curve.points[i].fpr) + "," + py(curve.points[i].tpr);
      }
      svg += "\"/>\n";
    }
    const std::string y = fixed(60.0 + 18.0 * legend_row++, 0);
    svg += "<text x=\"410\" y=\"" + y + "\" fill=\"" + kCurveColours[k] + "\">" + name +
           (curve.defined ? " (AUC " + fixed(curve.auc, 3) + ")" : " (undefined)") + "</text>\n";
  }
  svg += "<text x=\"410\" y=\"" + fixed(60.0 + 18.0 * legend_row, 0) + "\">macro AUC " +
         (std::isfinite(report.roc.macro_auc) ? fixed(report.roc.macro_auc, 3) : "n/a") +
         "</text>\n";
  svg += "</svg>\n";
  return svg;
}

std::mutex& bench_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

std::string summary_json(const EvalReport& report) {
  json doc;
  doc["accuracy"] = report.accuracy;
  doc["macro_auc"] = number_or_null(report.roc.macro_auc);
  json per_class = json::object();
  for (const auto& curve : report.roc.curves) {
    per_class[std::string(to_string(curve.cls))] =
        curve.defined ? json(curve.auc) : json(nullptr);
  }
  doc["per_class_auc"] = per_class;
  json matrix = json::array();
  for (const auto& row : report.confusion.counts) matrix.push_back(row);
  doc["confusion"] = matrix;
  doc["class_order"] = {"negative", "positive", "surprise", "others"};
  doc["model"] = report.metadata.model;
  doc["area"] = report.metadata.area;
  doc["division"] = report.metadata.division;
  doc["seed"] = report.metadata.seed;
  doc["cc_seconds"] =
      report.metadata.cc_seconds ? json(*report.metadata.cc_seconds) : json(nullptr);
  return doc.dump(2) + "\n";
}

std::vector<std::filesystem::path> emit_plots(const EvalReport& report,
                                              const std::filesystem::path& out_dir, bool svg) {
  if (out_dir.empty()) throw IoError("output directory path is empty");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir)) {
    throw IoError("cannot create output directory " + out_dir.string());
  }

  std::vector<std::filesystem::path> written;
  for (const auto& curve : report.roc.curves) {
    std::string csv = "threshold,fpr,tpr\n";
    for (const auto& p : curve.points) {
      csv += shortest(p.threshold) + "," + shortest(p.fpr) + "," + shortest(p.tpr) + "\n";
    }
    auto path = out_dir / ("roc_" + std::string(to_string(curve.cls)) + ".csv");
    write_text(path, csv);
    written.push_back(std::move(path));
  }

  std::string csv = "true\\predicted,negative,positive,surprise,others\n";
  for (std::size_t r = 0; r < kNumClasses; ++r) {
    csv += to_string(static_cast<CoarseLabel>(r));
    for (const auto v : report.confusion.counts[r]) csv += "," + std::to_string(v);
    csv += "\n";
  }
  written.push_back(out_dir / "confusion.csv");
  write_text(written.back(), csv);

  written.push_back(out_dir / "summary.json");
  write_text(written.back(), summary_json(report));

  if (svg) {
    written.push_back(out_dir / "roc.svg");
    write_text(written.back(), roc_svg(report));
  }
  return written;
}

BenchRecord bench_cc(std::span<const BenchClip> clips, const AreaSpec& area, DivisionFactor d,
                     int repeats, const RoiGeometry& geometry) {
  if (clips.empty()) throw EmptyInput("benchmark needs at least one clip");
  if (repeats < 1) throw EmptyInput("benchmark needs at least one repeat");
  std::lock_guard lock(bench_mutex());

  using Clock = std::chrono::steady_clock;
  Clock::duration total{};
  float sink = 0.0f;
  for (int r = 0; r < repeats; ++r) {
    for (const auto& clip : clips) {
      const auto start = Clock::now();
      const FeatureVector features = extract_area(clip.sequence, clip.landmarks, area, d, geometry, 1);
      total += Clock::now() - start;
      sink += features.empty() ? 0.0f : features.front();
    }
  }
  volatile float keep = sink;
  (void)keep;

  BenchRecord record;
  record.area = area.name();
  record.division = d.value();
  record.samples = clips.size();
  record.repeats = repeats;
  const double seconds = std::chrono::duration<double>(total).count();
  record.mean_seconds_per_sample =
      std::max(seconds / static_cast<double>(clips.size() * static_cast<std::size_t>(repeats)), 1e-9);
  return record;
}

std::string bench_json(std::span<const BenchRecord> records) {
  json doc = json::array();
  for (const auto& r : records) {
    doc.push_back({{"area", r.area},
                   {"division", r.division},
                   {"mean_seconds_per_sample", r.mean_seconds_per_sample},
                   {"samples", r.samples},
                   {"repeats", r.repeats},
                   {"timed", r.boundary},
                   {"jobs", 1}});
  }
  return json{{"records", doc}}.dump(2) + "\n";
}

}  // namespace fmer

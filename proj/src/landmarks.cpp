#include "fmer/landmarks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "fmer/error.hpp"

namespace fmer {

namespace {

constexpr std::array<std::string_view, 6> kRoiNames = {"whole", "eyebrow", "eye",
                                                       "middle", "lip",    "bottom"};

std::vector<int> index_range(int first, int last) {
  std::vector<int> out(static_cast<std::size_t>(last - first + 1));
  std::iota(out.begin(), out.end(), first);
  return out;
}

struct Extent {
  int min_x, min_y, max_x, max_y;
};

Extent extent_of(const LandmarkSet& lm, const std::vector<int>& indices) {
  Extent e{INT32_MAX, INT32_MAX, INT32_MIN, INT32_MIN};
  for (int i : indices) {
    const Point p = lm.points[static_cast<std::size_t>(i)];
    e.min_x = std::min(e.min_x, p.x);
    e.min_y = std::min(e.min_y, p.y);
    e.max_x = std::max(e.max_x, p.x);
    e.max_y = std::max(e.max_y, p.y);
  }
  return e;
}

RoiBox padded_box(const LandmarkSet& lm, const std::vector<int>& indices, FrameDims dims,
                  int margin) {
  const Extent e = extent_of(lm, indices);
  return RoiBox{std::max(0, e.min_x - margin), std::max(0, e.min_y - margin),
                std::min(dims.cols, e.max_x + margin), std::min(dims.rows, e.max_y + margin)};
}

std::vector<int> checked_indices(const nlohmann::json& value, const char* key) {
  auto indices = value.get<std::vector<int>>();
  if (indices.empty()) throw ParseError(std::string("geometry: '") + key + "' is empty");
  for (int i : indices) {
    if (i < 0 || i >= kNumLandmarks) {
      throw ParseError(std::string("geometry: '") + key + "' has index " + std::to_string(i) +
                       " outside [0, 68)");
    }
  }
  return indices;
}

}  // namespace

std::string_view to_string(RoiKind kind) noexcept {
  return kRoiNames[static_cast<std::size_t>(kind)];
}

RoiKind parse_roi_kind(std::string_view text) {
  if (text == "wholeface" || text == "whole_face") return RoiKind::WholeFace;
  for (std::size_t i = 0; i < kRoiNames.size(); ++i) {
    if (kRoiNames[i] == text) return static_cast<RoiKind>(i);
  }
  throw ParseError("unknown ROI '" + std::string(text) + "'");
}

AreaSpec::AreaSpec(std::vector<RoiKind> kinds) : kinds_(std::move(kinds)) {
  if (kinds_.empty()) throw ValidationError("area must name at least one ROI");
  for (std::size_t i = 0; i < kinds_.size(); ++i) {
    for (std::size_t j = i + 1; j < kinds_.size(); ++j) {
      if (kinds_[i] == kinds_[j]) {
        throw ValidationError("area lists ROI '" + std::string(to_string(kinds_[i])) + "' twice");
      }
    }
  }
  if (kinds_.size() > 1 &&
      std::find(kinds_.begin(), kinds_.end(), RoiKind::WholeFace) != kinds_.end()) {
    throw ValidationError("whole face cannot be combined with other ROIs");
  }
}

AreaSpec AreaSpec::parse(std::string_view text) {
  std::vector<RoiKind> kinds;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto plus = text.find('+', start);
    const auto part = text.substr(start, plus == std::string_view::npos ? text.npos : plus - start);
    kinds.push_back(parse_roi_kind(part));
    if (plus == std::string_view::npos) break;
    start = plus + 1;
  }
  return AreaSpec(std::move(kinds));
}

const std::vector<AreaSpec>& AreaSpec::standard_areas() {
  using K = RoiKind;
  static const std::vector<AreaSpec> areas = {
      AreaSpec({K::WholeFace}),
      AreaSpec({K::Eyebrow}),
      AreaSpec({K::Eye}),
      AreaSpec({K::Middle}),
      AreaSpec({K::Lip}),
      AreaSpec({K::Bottom}),
      AreaSpec({K::Eyebrow, K::Eye}),
      AreaSpec({K::Eyebrow, K::Lip}),
      AreaSpec({K::Eyebrow, K::Eye, K::Lip}),
  };
  return areas;
}

std::string AreaSpec::name() const {
  std::string out;
  for (const auto kind : kinds_) {
    if (!out.empty()) out += '+';
    out += to_string(kind);
  }
  return out;
}

RoiGeometry::RoiGeometry()
    : eyebrow(index_range(17, 26)),
      eye(index_range(36, 47)),
      middle(index_range(27, 35)),
      lip(index_range(48, 67)),
      bottom(index_range(3, 13)) {
  // jaw side points stretch the nose box across the cheeks
  middle.push_back(1);
  middle.push_back(15);
}

const std::vector<int>& RoiGeometry::indices(RoiKind kind) const {
  switch (kind) {
    case RoiKind::Eyebrow: return eyebrow;
    case RoiKind::Eye: return eye;
    case RoiKind::Middle: return middle;
    case RoiKind::Lip: return lip;
    case RoiKind::Bottom: return bottom;
    case RoiKind::WholeFace: break;
  }
  throw ValidationError("whole face has no landmark index set");
}

RoiGeometry RoiGeometry::parse(std::string_view json_text) {
  RoiGeometry geometry;
  try {
    const auto doc = nlohmann::json::parse(json_text);
    if (!doc.is_object()) throw ParseError("geometry: expected a JSON object");
    if (doc.contains("eyebrow")) geometry.eyebrow = checked_indices(doc["eyebrow"], "eyebrow");
    if (doc.contains("eye")) geometry.eye = checked_indices(doc["eye"], "eye");
    if (doc.contains("middle")) geometry.middle = checked_indices(doc["middle"], "middle");
    if (doc.contains("lip")) geometry.lip = checked_indices(doc["lip"], "lip");
    if (doc.contains("bottom")) geometry.bottom = checked_indices(doc["bottom"], "bottom");
    if (doc.contains("margin_frac")) geometry.margin_frac = doc["margin_frac"].get<double>();
    if (doc.contains("bottom_below_lip")) {
      geometry.bottom_below_lip = doc["bottom_below_lip"].get<bool>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("geometry: ") + e.what());
  }
  if (!(geometry.margin_frac >= 0.0)) throw ParseError("geometry: margin_frac must be >= 0");
  return geometry;
}

RoiGeometry RoiGeometry::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open geometry file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

LandmarkSet parse_landmarks(std::istream& in, FrameDims dims, std::string_view source) {
  LandmarkSet lm;
  std::string line;
  int count = 0;
  int line_no = 0;
  const auto where = [&] { return std::string(source) + ":" + std::to_string(line_no); };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    long x = 0;
    long y = 0;
    std::string rest;
    if (!(fields >> x >> y) || (fields >> rest)) {
      throw ParseError(where() + ": expected two integers 'x y'");
    }
    if (count == kNumLandmarks) {
      throw ParseError(std::string(source) + ": more than 68 landmark lines");
    }
    if (x < 0 || y < 0 || x >= dims.cols || y >= dims.rows) {
      throw OutOfBounds(std::string(source) + ": point " + std::to_string(count) + " (" +
                        std::to_string(x) + ", " + std::to_string(y) + ") outside " +
                        std::to_string(dims.cols) + "x" + std::to_string(dims.rows) + " frame");
    }
    lm.points[static_cast<std::size_t>(count++)] = Point{static_cast<int>(x), static_cast<int>(y)};
  }
  if (count != kNumLandmarks) {
    throw ParseError(std::string(source) + ": expected 68 landmark lines, got " +
                     std::to_string(count));
  }
  return lm;
}

LandmarkSet parse_landmarks(const std::filesystem::path& path, FrameDims dims) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open landmarks " + path.string());
  return parse_landmarks(in, dims, path.string());
}

RoiBox roi_box(RoiKind kind, const LandmarkSet& landmarks, FrameDims dims,
               const RoiGeometry& geometry) {
  if (kind == RoiKind::WholeFace) {
    if (dims.cols < 3 || dims.rows < 3) throw DegenerateRoi("frame is smaller than 3x3");
    return RoiBox{0, 0, dims.cols, dims.rows};
  }

  std::vector<int> all(kNumLandmarks);
  std::iota(all.begin(), all.end(), 0);
  const Extent face = extent_of(landmarks, all);
  const int side = std::max(face.max_x - face.min_x, face.max_y - face.min_y);
  const int margin = static_cast<int>(std::lround(geometry.margin_frac * side));

  RoiBox box = padded_box(landmarks, geometry.indices(kind), dims, margin);
  if (kind == RoiKind::Bottom && geometry.bottom_below_lip) {
    const RoiBox lip = padded_box(landmarks, geometry.lip, dims, margin);
    box.y0 = std::max(box.y0, lip.y1);
  }
  if (box.width() < 3 || box.height() < 3) {
    throw DegenerateRoi(std::string(to_string(kind)) + " box (" + std::to_string(box.x0) + "," +
                        std::to_string(box.y0) + ")-(" + std::to_string(box.x1) + "," +
                        std::to_string(box.y1) + ") is thinner than 3 px");
  }
  return box;
}

FrameSequence crop_sequence(const FrameSequence& seq, const RoiBox& box) {
  if (box.x0 < 0 || box.y0 < 0 || box.x1 > seq.cols() || box.y1 > seq.rows() ||
      box.x0 >= box.x1 || box.y0 >= box.y1) {
    throw OutOfBounds("crop box outside the " + std::to_string(seq.cols()) + "x" +
                      std::to_string(seq.rows()) + " frames of clip '" + seq.clip_id + "'");
  }
  FrameSequence out;
  out.label = seq.label;
  out.clip_id = seq.clip_id;
  out.subject_id = seq.subject_id;
  out.frames.reserve(seq.frames.size());
  const int w = box.width();
  for (const auto& frame : seq.frames) {
    GrayImage cropped(box.height(), w);
    for (int r = 0; r < box.height(); ++r) {
      const auto* src = frame.row(box.y0 + r) + box.x0;
      std::copy(src, src + w, cropped.pixels.begin() + static_cast<std::ptrdiff_t>(r) * w);
    }
    out.frames.push_back(std::move(cropped));
  }
  return out;
}

}  // namespace fmer

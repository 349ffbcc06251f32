#include "fmer/dataset.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "fmer/error.hpp"

namespace fmer {

namespace {

constexpr char kMagic[4] = {'F', 'M', 'E', 'F'};
constexpr std::uint16_t kVersion = 1;

class ByteWriter {
public:
  void u8(std::uint8_t v) { bytes_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void raw(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }
  const std::vector<char>& bytes() const { return bytes_; }

private:
  std::vector<char> bytes_;
};

class ByteReader {
public:
  ByteReader(std::vector<char> bytes, std::string source)
      : bytes_(std::move(bytes)), source_(std::move(source)) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }
  std::uint16_t u16() {
    std::uint16_t v = 0;
    for (int i = 0; i < 2; ++i) v = static_cast<std::uint16_t>(v | (u8() << (8 * i)));
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string raw(std::size_t n) {
    need(n);
    std::string s(bytes_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  bool at_end() const { return pos_ == bytes_.size(); }

private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw ParseError(source_ + ": truncated feature file");
  }

  std::vector<char> bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

std::string format_float(float v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

nlohmann::json layout_json(const FeatureTable& table) {
  nlohmann::json doc;
  doc["area"] = table.layout.area;
  doc["division"] = table.layout.division;
  doc["rois"] = table.layout.rois;
  doc["planes"] = {"XY", "XT", "YT"};
  doc["bins"] = 256;
  doc["dim"] = table.data.dim;
  doc["rows"] = table.data.size();
  doc["order"] = "roi,block_row,block_col,plane,bin";
  return doc;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace

void LabeledDataset::add(std::span<const float> values, CoarseLabel label, std::string clip_id) {
  if (labels.empty() && features.empty()) dim = values.size();
  if (values.size() != dim) {
    throw DimensionMismatch("row '" + clip_id + "' has " + std::to_string(values.size()) +
                            " features, expected " + std::to_string(dim));
  }
  features.insert(features.end(), values.begin(), values.end());
  labels.push_back(label);
  clip_ids.push_back(std::move(clip_id));
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> indices) const {
  LabeledDataset out;
  out.dim = dim;
  out.features.reserve(indices.size() * dim);
  for (const std::size_t i : indices) {
    const auto r = row(i);
    out.features.insert(out.features.end(), r.begin(), r.end());
    out.labels.push_back(labels[i]);
    out.clip_ids.push_back(clip_ids[i]);
  }
  return out;
}

std::array<std::size_t, kNumClasses> LabeledDataset::class_counts() const {
  std::array<std::size_t, kNumClasses> counts{};
  for (const auto label : labels) ++counts[static_cast<std::size_t>(class_index(label))];
  return counts;
}

void write_features_csv(const std::filesystem::path& path, const FeatureTable& table) {
  auto out = open_out(path);
  const auto& data = table.data;
  std::string line = "clip_id,label";
  for (std::size_t j = 0; j < data.dim; ++j) line += ",f" + std::to_string(j);
  out << line << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    line = data.clip_ids[i];
    line += ',';
    line += to_string(data.labels[i]);
    for (const float v : data.row(i)) {
      line += ',';
      line += format_float(v);
    }
    out << line << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

FeatureTable read_features_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  FeatureTable table;
  std::string line;
  if (!std::getline(in, line) || line.rfind("clip_id,label", 0) != 0) {
    throw ParseError(path.string() + ": missing 'clip_id,label,...' header");
  }
  const auto dim = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',') - 1);
  table.data.dim = dim;
  std::size_t line_no = 1;
  std::vector<float> values(dim);
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto where = path.string() + ":" + std::to_string(line_no);
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string::npos) throw ParseError(where + ": expected clip_id,label,values");
    std::string id = line.substr(0, c1);
    const CoarseLabel label = parse_coarse_label(line.substr(c1 + 1, c2 - c1 - 1));
    const char* p = line.data() + c2;
    const char* end = line.data() + line.size();
    for (std::size_t j = 0; j < dim; ++j) {
      if (p == end || *p != ',') throw ParseError(where + ": too few values");
      ++p;
      const auto [next, ec] = std::from_chars(p, end, values[j]);
      if (ec != std::errc()) throw ParseError(where + ": bad value in column f" + std::to_string(j));
      p = next;
    }
    if (p != end) throw ParseError(where + ": too many values");
    table.data.add(values, label, std::move(id));
  }
  table.layout.division = 0;
  return table;
}

void write_features_binary(const std::filesystem::path& path, const FeatureTable& table) {
  const auto& data = table.data;
  ByteWriter w;
  w.raw(std::string_view(kMagic, 4));
  w.u16(kVersion);
  const std::string descriptor = layout_json(table).dump();
  w.u32(static_cast<std::uint32_t>(descriptor.size()));
  w.raw(descriptor);
  w.u32(static_cast<std::uint32_t>(data.size()));
  w.u32(static_cast<std::uint32_t>(data.dim));
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.clip_ids[i].size() > 0xFFFF) throw ValidationError("clip id too long");
    w.u16(static_cast<std::uint16_t>(data.clip_ids[i].size()));
    w.raw(data.clip_ids[i]);
    w.u8(static_cast<std::uint8_t>(class_index(data.labels[i])));
    for (const float v : data.row(i)) w.f32(v);
  }
  auto out = open_out(path);
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw IoError("write failed: " + path.string());
}

FeatureTable read_features_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  ByteReader r(std::vector<char>((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()),
               path.string());
  if (r.raw(4) != std::string_view(kMagic, 4)) throw ParseError(path.string() + ": not an FMEF file");
  const auto version = r.u16();
  if (version != kVersion) {
    throw ParseError(path.string() + ": unsupported FMEF version " + std::to_string(version));
  }
  FeatureTable table;
  try {
    const auto doc = nlohmann::json::parse(r.raw(r.u32()));
    table.layout.area = doc.at("area").get<std::string>();
    table.layout.division = doc.at("division").get<int>();
    table.layout.rois = doc.at("rois").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": bad layout descriptor: " + e.what());
  }
  const std::uint32_t rows = r.u32();
  const std::uint32_t dim = r.u32();
  table.data.dim = dim;
  std::vector<float> values(dim);
  for (std::uint32_t i = 0; i < rows; ++i) {
    std::string id = r.raw(r.u16());
    const auto cls = r.u8();
    if (cls >= kNumClasses) throw ParseError(path.string() + ": bad class index");
    for (auto& v : values) v = r.f32();
    table.data.add(values, static_cast<CoarseLabel>(cls), std::move(id));
  }
  if (!r.at_end()) throw ParseError(path.string() + ": trailing bytes");
  return table;
}

FeatureTable read_features(const std::filesystem::path& path) {
  if (path.extension() == ".csv") return read_features_csv(path);
  return read_features_binary(path);
}

}  // namespace fmer

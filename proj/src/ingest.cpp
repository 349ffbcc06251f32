#include "fmer/ingest.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "fmer/error.hpp"

namespace fmer {

namespace {

constexpr std::array<std::string_view, 7> kRawNames = {
    "happiness", "surprise", "disgust", "sadness", "fear", "repression", "others"};
constexpr std::array<std::string_view, 4> kCoarseNames = {"negative", "positive", "surprise",
                                                          "others"};

std::string trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r");
  return std::string(text.substr(first, last - first + 1));
}

// Splits one CSV record. Double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_csv(std::string_view line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(trim(field));
      field.clear();
    } else {
      field.push_back(ch);
    }
  }
  if (quoted) throw ParseError("line " + std::to_string(line_no) + ": unterminated quote");
  fields.push_back(trim(field));
  return fields;
}

long parse_index(const std::string& text, std::string_view column, std::size_t line_no) {
  long value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ParseError("line " + std::to_string(line_no) + ": column " + std::string(column) +
                     " is not an integer: '" + text + "'");
  }
  return value;
}

}  // namespace

std::string_view to_string(RawEmotion emotion) noexcept {
  return kRawNames[static_cast<std::size_t>(emotion)];
}

std::string_view to_string(CoarseLabel label) noexcept {
  return kCoarseNames[static_cast<std::size_t>(label)];
}

RawEmotion parse_raw_emotion(std::string_view text) {
  for (std::size_t i = 0; i < kRawNames.size(); ++i) {
    if (kRawNames[i] == text) return static_cast<RawEmotion>(i);
  }
  throw ParseError("unknown emotion label '" + std::string(text) + "'");
}

CoarseLabel parse_coarse_label(std::string_view text) {
  for (std::size_t i = 0; i < kCoarseNames.size(); ++i) {
    if (kCoarseNames[i] == text) return static_cast<CoarseLabel>(i);
  }
  throw ParseError("unknown class label '" + std::string(text) + "'");
}

RepressionPolicy parse_repression_policy(std::string_view text) {
  if (text == "others") return RepressionPolicy::ToOthers;
  if (text == "negative") return RepressionPolicy::ToNegative;
  if (text == "exclude") return RepressionPolicy::Exclude;
  throw ParseError("unknown repression policy '" + std::string(text) + "'");
}

std::optional<CoarseLabel> relabel(RawEmotion raw, RepressionPolicy policy) noexcept {
  switch (raw) {
    case RawEmotion::Disgust:
    case RawEmotion::Sadness:
    case RawEmotion::Fear:
      return CoarseLabel::Negative;
    case RawEmotion::Happiness:
      return CoarseLabel::Positive;
    case RawEmotion::Surprise:
      return CoarseLabel::Surprise;
    case RawEmotion::Others:
      return CoarseLabel::Others;
    case RawEmotion::Repression:
      switch (policy) {
        case RepressionPolicy::ToOthers: return CoarseLabel::Others;
        case RepressionPolicy::ToNegative: return CoarseLabel::Negative;
        case RepressionPolicy::Exclude: return std::nullopt;
      }
  }
  return std::nullopt;
}

void validate_entry(const ClipManifestEntry& entry) {
  const auto describe = [&] {
    return "clip '" + entry.clip_id + "' (onset=" + std::to_string(entry.onset_idx) +
           ", apex=" + std::to_string(entry.apex_idx) +
           ", offset=" + std::to_string(entry.offset_idx) + ")";
  };
  if (entry.onset_idx < 0) throw ValidationError(describe() + ": negative frame index");
  if (entry.onset_idx > entry.apex_idx || entry.apex_idx > entry.offset_idx) {
    throw ValidationError(describe() + ": requires onset <= apex <= offset");
  }
  if (entry.length() < 3) throw ValidationError(describe() + ": fewer than 3 frames");
}

std::vector<ClipManifestEntry> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  const auto base = path.parent_path();

  std::vector<ClipManifestEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    auto fields = split_csv(line, line_no);
    if (!have_header) {
      static const std::vector<std::string> expected = {"clip_id", "subject_id", "frames_dir",
                                                        "onset",   "apex",       "offset",
                                                        "label"};
      if (fields != expected) {
        throw ParseError("line " + std::to_string(line_no) + ": expected header " +
                         "clip_id,subject_id,frames_dir,onset,apex,offset,label");
      }
      have_header = true;
      continue;
    }
    if (fields.size() != 7) {
      throw ParseError("line " + std::to_string(line_no) + ": expected 7 columns, got " +
                       std::to_string(fields.size()));
    }
    ClipManifestEntry entry;
    entry.clip_id = fields[0];
    entry.subject_id = fields[1];
    if (entry.clip_id.empty()) throw ParseError("line " + std::to_string(line_no) + ": empty clip_id");
    std::filesystem::path dir = fields[2];
    entry.frames_dir = dir.is_absolute() ? dir : base / dir;
    entry.onset_idx = parse_index(fields[3], "onset", line_no);
    entry.apex_idx = parse_index(fields[4], "apex", line_no);
    entry.offset_idx = parse_index(fields[5], "offset", line_no);
    try {
      entry.raw_label = parse_raw_emotion(fields[6]);
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
    try {
      validate_entry(entry);
    } catch (const ValidationError& e) {
      throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
    }
    entries.push_back(std::move(entry));
  }
  if (!have_header) throw ParseError("manifest " + path.string() + " is empty");
  return entries;
}

std::string FrameNaming::stem(long index) const {
  std::string digits = std::to_string(index);
  if (pad_width > 0 && static_cast<int>(digits.size()) < pad_width) {
    digits.insert(0, static_cast<std::size_t>(pad_width) - digits.size(), '0');
  }
  return prefix + digits;
}

FrameSequence load_sequence(const ClipManifestEntry& entry, const LoadOptions& options) {
  validate_entry(entry);
  const auto label = relabel(entry.raw_label, options.repression);
  if (!label) {
    throw ValidationError("clip '" + entry.clip_id + "' is excluded by the repression policy");
  }

  FrameSequence seq;
  seq.label = *label;
  seq.clip_id = entry.clip_id;
  seq.subject_id = entry.subject_id;
  seq.frames.reserve(static_cast<std::size_t>(entry.length()));
  for (long idx = entry.onset_idx; idx <= entry.offset_idx; ++idx) {
    const std::string stem = options.naming.stem(idx);
    std::filesystem::path found;
    for (const auto& ext : options.naming.extensions) {
      auto candidate = entry.frames_dir / (stem + ext);
      std::error_code ec;
      if (std::filesystem::is_regular_file(candidate, ec)) {
        found = std::move(candidate);
        break;
      }
    }
    if (found.empty()) {
      throw MissingFrame(idx, (entry.frames_dir / (stem + ".*")).string());
    }
    GrayImage frame = read_image(found);
    if (!seq.frames.empty() &&
        (frame.rows != seq.frames.front().rows || frame.cols != seq.frames.front().cols)) {
      std::ostringstream msg;
      msg << "clip '" << entry.clip_id << "': frame " << idx << " is " << frame.rows << "x"
          << frame.cols << ", expected " << seq.frames.front().rows << "x"
          << seq.frames.front().cols;
      throw DimensionMismatch(msg.str());
    }
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

std::array<std::size_t, 7> tally(const std::vector<ClipManifestEntry>& entries) {
  std::array<std::size_t, 7> counts{};
  for (const auto& e : entries) ++counts[static_cast<std::size_t>(e.raw_label)];
  return counts;
}

}  // namespace fmer

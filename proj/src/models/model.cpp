#include <bit>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fmer/error.hpp"
#include "fmer/rng.hpp"
#include "internal.hpp"

namespace fmer {

namespace {

using nlohmann::json;

constexpr std::array<std::string_view, 4> kKindNames = {"lsvm", "lr", "rf", "knn"};
constexpr char kBase64[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kBase64[(v >> 18) & 63];
    out += kBase64[(v >> 12) & 63];
    out += kBase64[(v >> 6) & 63];
    out += kBase64[v & 63];
  }
  if (i < bytes.size()) {
    std::uint32_t v = bytes[i] << 16;
    if (i + 1 < bytes.size()) v |= bytes[i + 1] << 8;
    out += kBase64[(v >> 18) & 63];
    out += kBase64[(v >> 12) & 63];
    out += i + 1 < bytes.size() ? kBase64[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  std::array<int, 256> lookup;
  lookup.fill(-1);
  for (int i = 0; i < 64; ++i) lookup[static_cast<unsigned char>(kBase64[i])] = i;
  if (text.size() % 4 != 0) throw ParseError("model: malformed base64 payload");
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    std::uint32_t v = 0;
    int pad = 0;
    for (std::size_t j = 0; j < 4; ++j) {
      const char ch = text[i + j];
      if (ch == '=') {
        ++pad;
        v <<= 6;
        continue;
      }
      const int d = lookup[static_cast<unsigned char>(ch)];
      if (d < 0 || pad > 0) throw ParseError("model: malformed base64 payload");
      v = (v << 6) | static_cast<std::uint32_t>(d);
    }
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>(v >> 8));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(v));
  }
  return out;
}

json hyper_json(const Hyperparameters& hyper) {
  return std::visit(
      [](const auto& h) -> json {
        using T = std::decay_t<decltype(h)>;
        if constexpr (std::is_same_v<T, SvmParams>) return {{"strength", h.strength}};
        if constexpr (std::is_same_v<T, LogisticParams>) return {{"ridge", h.ridge}};
        if constexpr (std::is_same_v<T, ForestParams>) {
          return {{"trees", h.trees}, {"max_depth", h.max_depth}};
        }
        if constexpr (std::is_same_v<T, KnnParams>) return {{"k", h.k}};
      },
      hyper);
}

Hyperparameters hyper_from_json(ModelKind kind, const json& doc) {
  switch (kind) {
    case ModelKind::LSVM: return SvmParams{doc.at("strength").get<double>()};
    case ModelKind::LR: return LogisticParams{doc.at("ridge").get<double>()};
    case ModelKind::RF:
      return ForestParams{doc.at("trees").get<int>(), doc.at("max_depth").get<int>()};
    case ModelKind::KNN: return KnnParams{doc.at("k").get<int>()};
  }
  throw ParseError("model: unknown kind");
}

json linear_json(const detail::LinearParams& p) {
  json weights = json::array();
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    const auto first = p.weights.begin() + static_cast<std::ptrdiff_t>(k * p.dim);
    weights.push_back(std::vector<double>(first, first + static_cast<std::ptrdiff_t>(p.dim)));
  }
  json out = {{"dim", p.dim}, {"weights", weights}, {"bias", p.bias}};
  if (p.standardizer) {
    out["standardizer"] = {{"mean", p.standardizer->mean}, {"scale", p.standardizer->scale}};
  } else {
    out["standardizer"] = nullptr;
  }
  return out;
}

detail::LinearParams linear_from_json(const json& doc) {
  detail::LinearParams p;
  p.dim = doc.at("dim").get<std::size_t>();
  const auto& weights = doc.at("weights");
  if (weights.size() != kNumClasses) throw ParseError("model: expected 4 weight rows");
  for (const auto& row : weights) {
    auto values = row.get<std::vector<double>>();
    if (values.size() != p.dim) throw ParseError("model: weight row length differs from dim");
    p.weights.insert(p.weights.end(), values.begin(), values.end());
  }
  p.bias = doc.at("bias").get<std::array<double, kNumClasses>>();
  if (const auto& z = doc.at("standardizer"); !z.is_null()) {
    detail::Standardizer s{z.at("mean").get<std::vector<double>>(),
                           z.at("scale").get<std::vector<double>>()};
    if (s.mean.size() != p.dim || s.scale.size() != p.dim) {
      throw ParseError("model: standardizer length differs from dim");
    }
    p.standardizer = std::move(s);
  }
  return p;
}

json node_json(const detail::Tree& tree, int id) {
  const auto& n = tree.nodes[static_cast<std::size_t>(id)];
  if (n.feature < 0) return {{"counts", n.counts}};
  return {{"feature", n.feature},
          {"threshold", n.threshold},
          {"left", node_json(tree, n.left)},
          {"right", node_json(tree, n.right)}};
}

int node_from_json(detail::Tree& tree, const json& doc, std::size_t dim) {
  const int id = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  if (doc.contains("counts")) {
    tree.nodes.back().counts = doc["counts"].get<std::array<std::uint32_t, kNumClasses>>();
    return id;
  }
  const int feature = doc.at("feature").get<int>();
  if (feature < 0 || static_cast<std::size_t>(feature) >= dim) {
    throw ParseError("model: split feature out of range");
  }
  const double threshold = doc.at("threshold").get<double>();
  const int left = node_from_json(tree, doc.at("left"), dim);
  const int right = node_from_json(tree, doc.at("right"), dim);
  auto& n = tree.nodes[static_cast<std::size_t>(id)];
  n.feature = feature;
  n.threshold = threshold;
  n.left = left;
  n.right = right;
  return id;
}

}  // namespace

std::string_view to_string(ModelKind kind) noexcept {
  return kKindNames[static_cast<std::size_t>(kind)];
}

ModelKind parse_model_kind(std::string_view text) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == text) return static_cast<ModelKind>(i);
  }
  throw UsageError("unknown model '" + std::string(text) + "' (expected lsvm, lr, rf or knn)");
}

CoarseLabel argmax_label(const ClassScores& scores) noexcept {
  std::size_t best = 0;
  for (std::size_t k = 1; k < scores.size(); ++k) {
    if (scores[k] > scores[best]) best = k;
  }
  return static_cast<CoarseLabel>(best);
}

ModelKind kind_of(const Hyperparameters& hyper) noexcept {
  switch (hyper.index()) {
    case 0: return ModelKind::LSVM;
    case 1: return ModelKind::LR;
    case 2: return ModelKind::RF;
    default: return ModelKind::KNN;
  }
}

std::string describe(const Hyperparameters& hyper) { return hyper_json(hyper).dump(); }

namespace detail {

void check_trainable(const LabeledDataset& ds) {
  if (ds.size() < static_cast<std::size_t>(kNumClasses)) {
    throw DegenerateData("need at least " + std::to_string(kNumClasses) + " training rows, got " +
                         std::to_string(ds.size()));
  }
  const auto counts = ds.class_counts();
  if (std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }) < 2) {
    throw DegenerateData("all training rows share one label");
  }
}

}  // namespace detail

TrainedModel::TrainedModel(TrainedModel&&) noexcept = default;
TrainedModel& TrainedModel::operator=(TrainedModel&&) noexcept = default;
TrainedModel::~TrainedModel() = default;

TrainedModel::TrainedModel(const TrainedModel& other)
    : kind_(other.kind_), hyper_(other.hyper_), seed_(other.seed_), dim_(other.dim_) {
  if (other.linear_) linear_ = std::make_unique<detail::LinearParams>(*other.linear_);
  if (other.forest_) forest_ = std::make_unique<detail::ForestModel>(*other.forest_);
  if (other.knn_) knn_ = std::make_unique<detail::KnnModel>(*other.knn_);
}

TrainedModel& TrainedModel::operator=(const TrainedModel& other) {
  if (this != &other) *this = TrainedModel(other);
  return *this;
}

ClassScores TrainedModel::predict_scores(std::span<const float> row) const {
  if (row.size() != dim_) {
    throw DimensionMismatch("row has " + std::to_string(row.size()) +
                            " features, model expects " + std::to_string(dim_));
  }
  switch (kind_) {
    case ModelKind::LSVM: return detail::linear_margins(*linear_, row);
    case ModelKind::LR: {
      ClassScores z = detail::linear_margins(*linear_, row);
      const double zmax = *std::max_element(z.begin(), z.end());
      double sum = 0;
      for (auto& v : z) sum += (v = std::exp(v - zmax));
      for (auto& v : z) v /= sum;
      return z;
    }
    case ModelKind::RF: return detail::forest_votes(*forest_, row);
    case ModelKind::KNN: return detail::knn_votes(*knn_, row);
  }
  return {};
}

CoarseLabel TrainedModel::predict(std::span<const float> row) const {
  return argmax_label(predict_scores(row));
}

int TrainedModel::forest_max_depth() const {
  if (!forest_) throw ValidationError("not a forest model");
  int depth = 0;
  for (const auto& t : forest_->trees) depth = std::max(depth, t.depth());
  return depth;
}

std::size_t TrainedModel::forest_size() const {
  if (!forest_) throw ValidationError("not a forest model");
  return forest_->trees.size();
}

TrainedModel train(ModelKind kind, const LabeledDataset& train_ds, const Hyperparameters& hyper,
                   std::uint64_t seed, const TrainOptions& options) {
  if (kind_of(hyper) != kind) {
    throw ValidationError("hyperparameters " + describe(hyper) + " do not belong to model '" +
                          std::string(to_string(kind)) + "'");
  }
  detail::check_trainable(train_ds);

  TrainedModel model;
  model.kind_ = kind;
  model.hyper_ = hyper;
  model.seed_ = seed;
  model.dim_ = train_ds.dim;

  switch (kind) {
    case ModelKind::LSVM:
    case ModelKind::LR: {
      std::optional<detail::Standardizer> z;
      if (options.standardize) z = detail::Standardizer::fit(train_ds);
      std::optional<LabeledDataset> scaled;
      if (z) scaled = z->apply(train_ds);
      const LabeledDataset& fit_ds = scaled ? *scaled : train_ds;
      detail::LinearParams p =
          kind == ModelKind::LSVM
              ? detail::fit_linear_svm(fit_ds, std::get<SvmParams>(hyper).strength, seed,
                                       options.svm_epochs)
              : detail::fit_logistic(fit_ds, std::get<LogisticParams>(hyper).ridge,
                                     options.lr_max_iterations, options.lr_tolerance);
      p.standardizer = std::move(z);
      model.linear_ = std::make_unique<detail::LinearParams>(std::move(p));
      break;
    }
    case ModelKind::RF: {
      const auto& params = std::get<ForestParams>(hyper);
      const auto bootstraps = forest_bootstraps(train_ds.size(), params.trees, seed);
      model.forest_ = std::make_unique<detail::ForestModel>(
          detail::fit_forest(train_ds, params, bootstraps, seed, options.jobs));
      break;
    }
    case ModelKind::KNN: {
      const int k = std::get<KnnParams>(hyper).k;
      if (k < 1) throw ValidationError("KNN k must be >= 1");
      model.knn_ = std::make_unique<detail::KnnModel>(
          detail::KnnModel{k, train_ds.dim, train_ds.features, train_ds.labels});
      break;
    }
  }
  return model;
}

TrainedModel train_forest_with_bootstraps(const LabeledDataset& train_ds,
                                          const ForestParams& params,
                                          std::span<const std::vector<std::size_t>> bootstraps,
                                          std::uint64_t seed, int jobs) {
  detail::check_trainable(train_ds);
  TrainedModel model;
  model.kind_ = ModelKind::RF;
  model.hyper_ = params;
  model.seed_ = seed;
  model.dim_ = train_ds.dim;
  model.forest_ = std::make_unique<detail::ForestModel>(
      detail::fit_forest(train_ds, params, bootstraps, seed, jobs));
  return model;
}

double training_accuracy(const TrainedModel& model, const LabeledDataset& ds) {
  if (ds.size() == 0) throw EmptyInput("no rows to score");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (model.predict(ds.row(i)) == ds.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

std::string TrainedModel::to_json() const {
  json doc;
  doc["kind"] = to_string(kind_);
  doc["class_order"] = {"negative", "positive", "surprise", "others"};
  doc["hyperparameters"] = hyper_json(hyper_);
  doc["seed"] = seed_;
  doc["rng"] = Rng::kName;

  json params;
  switch (kind_) {
    case ModelKind::LSVM:
    case ModelKind::LR: params = linear_json(*linear_); break;
    case ModelKind::RF: {
      params["dim"] = dim_;
      params["trees"] = json::array();
      for (const auto& t : forest_->trees) params["trees"].push_back(node_json(t, 0));
      break;
    }
    case ModelKind::KNN: {
      params["dim"] = dim_;
      params["k"] = knn_->k;
      std::vector<std::string> labels;
      for (const auto l : knn_->labels) labels.emplace_back(to_string(l));
      params["labels"] = labels;
      std::vector<std::uint8_t> bytes;
      bytes.reserve(knn_->features.size() * 4);
      for (const float v : knn_->features) {
        const auto u = std::bit_cast<std::uint32_t>(v);
        for (int b = 0; b < 4; ++b) bytes.push_back(static_cast<std::uint8_t>(u >> (8 * b)));
      }
      params["features_encoding"] = "f32le-base64";
      params["features"] = base64_encode(bytes);
      break;
    }
  }
  doc["parameters"] = std::move(params);
  return doc.dump();
}

TrainedModel TrainedModel::from_json(std::string_view text) {
  TrainedModel model;
  try {
    const json doc = json::parse(text);
    const auto order = doc.at("class_order").get<std::vector<std::string>>();
    if (order != std::vector<std::string>{"negative", "positive", "surprise", "others"}) {
      throw ParseError("model: unsupported class order");
    }
    try {
      model.kind_ = parse_model_kind(doc.at("kind").get<std::string>());
    } catch (const UsageError& e) {
      throw ParseError(std::string("model: ") + e.what());
    }
    model.hyper_ = hyper_from_json(model.kind_, doc.at("hyperparameters"));
    model.seed_ = doc.at("seed").get<std::uint64_t>();
    const json& params = doc.at("parameters");
    model.dim_ = params.at("dim").get<std::size_t>();
    switch (model.kind_) {
      case ModelKind::LSVM:
      case ModelKind::LR:
        model.linear_ = std::make_unique<detail::LinearParams>(linear_from_json(params));
        break;
      case ModelKind::RF: {
        auto forest = std::make_unique<detail::ForestModel>();
        for (const auto& root : params.at("trees")) {
          detail::Tree tree;
          node_from_json(tree, root, model.dim_);
          forest->trees.push_back(std::move(tree));
        }
        if (forest->trees.empty()) throw ParseError("model: forest has no trees");
        model.forest_ = std::move(forest);
        break;
      }
      case ModelKind::KNN: {
        auto knn = std::make_unique<detail::KnnModel>();
        knn->k = params.at("k").get<int>();
        knn->dim = model.dim_;
        for (const auto& l : params.at("labels")) {
          knn->labels.push_back(parse_coarse_label(l.get<std::string>()));
        }
        const auto bytes = base64_decode(params.at("features").get<std::string>());
        if (bytes.size() != knn->labels.size() * knn->dim * 4) {
          throw ParseError("model: KNN feature payload has the wrong size");
        }
        knn->features.resize(bytes.size() / 4);
        for (std::size_t i = 0; i < knn->features.size(); ++i) {
          std::uint32_t u = 0;
          for (int b = 0; b < 4; ++b) u |= static_cast<std::uint32_t>(bytes[4 * i + b]) << (8 * b);
          knn->features[i] = std::bit_cast<float>(u);
        }
        model.knn_ = std::move(knn);
        break;
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("model: ") + e.what());
  }
  return model;
}

void TrainedModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write model " + path.string());
  out << to_json() << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

TrainedModel TrainedModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_json(buffer.str());
}

}  // namespace fmer

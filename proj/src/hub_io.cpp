#include "sfda/hub_io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace sfda {

namespace fs = std::filesystem;

namespace {

std::string offset_text(std::size_t offset) { return " at byte offset " + std::to_string(offset); }

std::vector<unsigned char> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open '" + path.string() + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::kIoError, "read failed for '" + path.string() + "'");
  return bytes;
}

std::string read_text(const fs::path& path) {
  const auto bytes = read_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

void write_bytes(const fs::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIoError, "write failed for '" + path.string() + "'");
}

class ByteReader {
 public:
  ByteReader(const std::vector<unsigned char>& bytes, const fs::path& path) : bytes_(bytes), path_(path) {}

  void require(std::size_t offset, std::size_t count, const char* what) const {
    if (bytes_.size() < offset || bytes_.size() - offset < count) {
      throw Error(ErrorCode::kTruncatedPayload,
                  std::string(what) + " incomplete in '" + path_.string() + "'" + offset_text(offset));
    }
  }
  std::uint32_t u32(std::size_t offset, const char* what) const {
    require(offset, 4, what);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | bytes_[offset + static_cast<std::size_t>(i)];
    return v;
  }
  std::uint64_t u64(std::size_t offset, const char* what) const {
    require(offset, 8, what);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | bytes_[offset + static_cast<std::size_t>(i)];
    return v;
  }
  void magic(const char (&expected)[8]) const {
    require(0, 8, "magic");
    if (std::memcmp(bytes_.data(), expected, 8) != 0) {
      throw Error(ErrorCode::kBadMagic, "unexpected magic in '" + path_.string() + "'" + offset_text(0));
    }
  }
  void version(std::size_t offset) const {
    const std::uint32_t v = u32(offset, "version");
    if (v != kFormatVersion) {
      throw Error(ErrorCode::kVersionUnsupported,
                  "version " + std::to_string(v) + " in '" + path_.string() + "'" + offset_text(offset));
    }
  }
  std::size_t size() const { return bytes_.size(); }

 private:
  const std::vector<unsigned char>& bytes_;
  const fs::path& path_;
};

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}
void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

bool has_csv_extension(const fs::path& path) {
  const auto ext = path.extension().string();
  return ext == ".csv" || ext == ".txt";
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, sep)) out.push_back(trim(field));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

// Non-empty trimmed lines with their 1-based line numbers.
std::vector<std::pair<std::size_t, std::string>> csv_lines(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::vector<std::pair<std::size_t, std::string>> out;
  std::string line;
  for (std::size_t number = 1; std::getline(in, line); ++number) {
    std::string t = trim(line);
    if (!t.empty()) out.emplace_back(number, std::move(t));
  }
  return out;
}

double parse_double(const std::string& text, const fs::path& path, std::size_t line) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    throw Error(ErrorCode::kParseError,
                "invalid number '" + text + "' in '" + path.string() + "' line " + std::to_string(line));
  }
  if (!std::isfinite(v)) {
    throw Error(ErrorCode::kNonFiniteValue, "non-finite value in '" + path.string() + "' line " + std::to_string(line));
  }
  return v;
}

long long parse_integer(const std::string& text, const fs::path& path, std::size_t line) {
  long long v = 0;
  const char* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    throw Error(ErrorCode::kParseError,
                "invalid integer '" + text + "' in '" + path.string() + "' line " + std::to_string(line));
  }
  return v;
}

Matrix read_feature_csv(const fs::path& path) {
  const auto lines = csv_lines(path);
  if (lines.empty()) throw Error(ErrorCode::kParseError, "no rows in '" + path.string() + "'");
  const std::size_t cols = split(lines.front().second, ',').size();
  Matrix out(static_cast<Eigen::Index>(lines.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < lines.size(); ++r) {
    const auto fields = split(lines[r].second, ',');
    if (fields.size() != cols) {
      throw Error(ErrorCode::kParseError, "ragged row in '" + path.string() + "' line " +
                                              std::to_string(lines[r].first));
    }
    for (std::size_t c = 0; c < cols; ++c) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = parse_double(fields[c], path, lines[r].first);
    }
  }
  return out;
}

LabelFile read_labels_csv(const fs::path& path) {
  const auto lines = csv_lines(path);
  LabelFile out;
  out.labels.resize(static_cast<Eigen::Index>(lines.size()));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const long long v = parse_integer(lines[i].second, path, lines[i].first);
    if (v < 0 || v > std::numeric_limits<int>::max()) {
      throw Error(ErrorCode::kLabelOutOfRange, "label at index " + std::to_string(i) + " in '" + path.string() + "'");
    }
    out.labels[static_cast<Eigen::Index>(i)] = static_cast<int>(v);
  }
  out.num_classes = infer_num_classes(out.labels);
  return out;
}

}  // namespace

Matrix read_feature_file(const fs::path& path) {
  if (has_csv_extension(path)) return read_feature_csv(path);
  const auto bytes = read_bytes(path);
  const ByteReader in(bytes, path);
  in.magic(kFeatureMagic);
  in.version(8);
  const std::uint64_t n = in.u64(12, "row count");
  const std::uint64_t d = in.u64(20, "column count");
  constexpr std::uint64_t kMaxValues = std::uint64_t{1} << 40;
  if (n > kMaxValues || d > kMaxValues || (d != 0 && n > kMaxValues / d)) {
    throw Error(ErrorCode::kParseError, "implausible shape in '" + path.string() + "'" + offset_text(12));
  }
  const std::size_t count = static_cast<std::size_t>(n * d);
  const std::size_t available = (in.size() - kFeatureHeaderBytes) / 4;
  if (available < count) {
    throw Error(ErrorCode::kTruncatedPayload,
                "payload holds " + std::to_string(available) + " of " + std::to_string(count) + " values in '" +
                    path.string() + "'" + offset_text(kFeatureHeaderBytes + 4 * available));
  }
  Matrix out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  std::size_t offset = kFeatureHeaderBytes;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    for (Eigen::Index c = 0; c < out.cols(); ++c, offset += 4) {
      const float v = std::bit_cast<float>(in.u32(offset, "value"));
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::kNonFiniteValue, "non-finite value in '" + path.string() + "'" + offset_text(offset));
      }
      out(r, c) = static_cast<double>(v);
    }
  }
  return out;
}

void write_feature_file(const fs::path& path, const Matrix& features) {
  std::vector<unsigned char> out;
  out.reserve(kFeatureHeaderBytes + 4 * static_cast<std::size_t>(features.size()));
  out.insert(out.end(), std::begin(kFeatureMagic), std::end(kFeatureMagic));
  put_u32(out, kFormatVersion);
  put_u64(out, static_cast<std::uint64_t>(features.rows()));
  put_u64(out, static_cast<std::uint64_t>(features.cols()));
  for (Eigen::Index r = 0; r < features.rows(); ++r) {
    for (Eigen::Index c = 0; c < features.cols(); ++c) {
      const auto v = static_cast<float>(features(r, c));
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::kNonFiniteValue, "value at row " + std::to_string(r) + " column " +
                                                    std::to_string(c) + " is not representable as float32");
      }
      put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
  }
  write_bytes(path, out);
}

LabelFile read_labels(const fs::path& path) {
  if (has_csv_extension(path)) return read_labels_csv(path);
  const auto bytes = read_bytes(path);
  const ByteReader in(bytes, path);
  in.magic(kLabelMagic);
  in.version(8);
  const std::uint64_t n = in.u64(12, "label count");
  const std::uint32_t c = in.u32(20, "class count");
  if (c > static_cast<std::uint32_t>(std::numeric_limits<int>::max())) {
    throw Error(ErrorCode::kParseError, "implausible class count in '" + path.string() + "'" + offset_text(20));
  }
  const std::size_t available = (in.size() - kLabelHeaderBytes) / 4;
  if (n > available) {
    throw Error(ErrorCode::kTruncatedPayload,
                "payload holds " + std::to_string(available) + " of " + std::to_string(n) + " labels in '" +
                    path.string() + "'" + offset_text(kLabelHeaderBytes + 4 * available));
  }
  LabelFile out;
  out.num_classes = static_cast<int>(c);
  out.labels.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t offset = kLabelHeaderBytes + 4 * i;
    const std::uint32_t id = in.u32(offset, "label");
    if (id >= c) {
      throw Error(ErrorCode::kLabelOutOfRange, "label " + std::to_string(id) + " at index " + std::to_string(i) +
                                                   " >= class count " + std::to_string(c) + " in '" +
                                                   path.string() + "'" + offset_text(offset));
    }
    out.labels[static_cast<Eigen::Index>(i)] = static_cast<int>(id);
  }
  return out;
}

void write_labels(const fs::path& path, const Labels& labels, int num_classes) {
  if (num_classes < 1) throw Error(ErrorCode::kInvalidArgument, "num_classes must be positive");
  std::vector<unsigned char> out;
  out.reserve(kLabelHeaderBytes + 4 * static_cast<std::size_t>(labels.size()));
  out.insert(out.end(), std::begin(kLabelMagic), std::end(kLabelMagic));
  put_u32(out, kFormatVersion);
  put_u64(out, static_cast<std::uint64_t>(labels.size()));
  put_u32(out, static_cast<std::uint32_t>(num_classes));
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes) {
      throw Error(ErrorCode::kLabelOutOfRange, "label " + std::to_string(labels[i]) + " at index " + std::to_string(i));
    }
    put_u32(out, static_cast<std::uint32_t>(labels[i]));
  }
  write_bytes(path, out);
}

HubManifest read_manifest(const fs::path& path) {
  const std::string text = read_text(path);
  HubManifest m;
  m.base_dir = path.parent_path();
  try {
    const auto j = nlohmann::json::parse(text);
    m.dataset_name = j.at("dataset_name").get<std::string>();
    m.num_classes = j.at("num_classes").get<int>();
    m.labels_path = j.at("labels_path").get<std::string>();
    for (const auto& entry : j.at("models")) {
      ManifestModel model;
      model.model_id = entry.at("model_id").get<std::string>();
      model.features_path = entry.at("features_path").get<std::string>();
      model.feature_dim = entry.at("feature_dim").get<Eigen::Index>();
      m.models.push_back(std::move(model));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, "manifest '" + path.string() + "': " + e.what());
  }
  std::set<std::string> ids;
  for (const auto& model : m.models) {
    if (!ids.insert(model.model_id).second) {
      throw Error(ErrorCode::kParseError, "duplicate model id '" + model.model_id + "' in '" + path.string() + "'");
    }
  }
  if (m.models.empty()) throw Error(ErrorCode::kParseError, "manifest '" + path.string() + "' lists no models");
  return m;
}

void write_manifest(const fs::path& path, const HubManifest& manifest) {
  nlohmann::ordered_json j;
  j["dataset_name"] = manifest.dataset_name;
  j["num_classes"] = manifest.num_classes;
  j["labels_path"] = manifest.labels_path;
  j["models"] = nlohmann::ordered_json::array();
  for (const auto& model : manifest.models) {
    nlohmann::ordered_json e;
    e["model_id"] = model.model_id;
    e["features_path"] = model.features_path;
    e["feature_dim"] = model.feature_dim;
    j["models"].push_back(std::move(e));
  }
  const std::string text = j.dump(2) + "\n";
  write_bytes(path, std::vector<unsigned char>(text.begin(), text.end()));
}

std::vector<FeatureSet> load_hub(const HubManifest& manifest) {
  const fs::path labels_path = manifest.resolve(manifest.labels_path);
  const LabelFile labels = read_labels(labels_path);
  if (labels.num_classes > manifest.num_classes) {
    throw Error(ErrorCode::kLabelOutOfRange, "labels in '" + labels_path.string() + "' use " +
                                                 std::to_string(labels.num_classes) + " classes, manifest declares " +
                                                 std::to_string(manifest.num_classes));
  }
  std::vector<FeatureSet> hub;
  for (const auto& model : manifest.models) {
    const fs::path feature_path = manifest.resolve(model.features_path);
    FeatureSet fs;
    fs.model_id = model.model_id;
    fs.features = read_feature_file(feature_path);
    fs.labels = labels.labels;
    fs.num_classes = manifest.num_classes;
    if (fs.features.cols() != model.feature_dim) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "model '" + model.model_id + "': '" + feature_path.string() + "' has dimension " +
                      std::to_string(fs.features.cols()) + ", manifest declares " + std::to_string(model.feature_dim));
    }
    if (fs.features.rows() != labels.labels.size()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "model '" + model.model_id + "': '" + feature_path.string() + "' has " +
                      std::to_string(fs.features.rows()) + " rows, labels have " + std::to_string(labels.labels.size()));
    }
    hub.push_back(std::move(fs));
  }
  return hub;
}

namespace {

template <typename Entry>
std::vector<Entry> read_id_value_csv(const fs::path& path, const char* value_column) {
  const auto lines = csv_lines(path);
  const std::string expected = std::string("model_id,") + value_column;
  if (lines.empty() || split(lines.front().second, ',') != split(expected, ',')) {
    throw Error(ErrorCode::kParseError, "'" + path.string() + "' must start with header '" + expected + "'");
  }
  std::vector<Entry> out;
  std::set<std::string> ids;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = split(lines[i].second, ',');
    if (fields.size() != 2 || fields[0].empty()) {
      throw Error(ErrorCode::kParseError, "malformed row in '" + path.string() + "' line " +
                                              std::to_string(lines[i].first));
    }
    if (!ids.insert(fields[0]).second) {
      throw Error(ErrorCode::kParseError, "duplicate model id '" + fields[0] + "' in '" + path.string() + "'");
    }
    out.push_back(Entry{fields[0], parse_double(fields[1], path, lines[i].first)});
  }
  return out;
}

}  // namespace

std::vector<GroundTruthEntry> read_ground_truth(const fs::path& path) {
  return read_id_value_csv<GroundTruthEntry>(path, "accuracy");
}

void write_ground_truth(const fs::path& path, const std::vector<GroundTruthEntry>& entries) {
  std::string text = "model_id,accuracy\n";
  for (const auto& e : entries) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), e.accuracy);
    text += e.model_id + "," + std::string(buf, res.ptr) + "\n";
  }
  write_bytes(path, std::vector<unsigned char>(text.begin(), text.end()));
}

std::vector<ScoreEntry> read_score_table(const fs::path& path) {
  if (has_csv_extension(path)) return read_id_value_csv<ScoreEntry>(path, "score");
  const std::string text = read_text(path);
  std::vector<ScoreEntry> out;
  std::set<std::string> ids;
  try {
    const auto j = nlohmann::json::parse(text);
    for (const auto& row : j.at("rows")) {
      ScoreEntry e{row.at("model_id").get<std::string>(), row.at("score").get<double>()};
      if (!ids.insert(e.model_id).second) {
        throw Error(ErrorCode::kParseError, "duplicate model id '" + e.model_id + "' in '" + path.string() + "'");
      }
      out.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, "score report '" + path.string() + "': " + e.what());
  }
  return out;
}

}  // namespace sfda

#include "sfda/synthetic.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"

namespace sfda {

namespace fs = std::filesystem;

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : key_(splitmix64(splitmix64(seed) ^ splitmix64(stream ^ 0xD1B54A32D192ED03ULL))) {}

std::uint64_t CounterRng::next_u64() { return splitmix64(key_ ^ splitmix64(counter_++)); }

double CounterRng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::uint64_t CounterRng::below(std::uint64_t n) {
  // Rejection keeps the result exactly uniform.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return x % n;
}

double CounterRng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

namespace {

bool valid_id(const std::string& id) {
  if (id.empty() || id == "." || id == "..") return false;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
                    c == '-' || c == '.';
    if (!ok) return false;
  }
  return true;
}

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::kSpecInvalid, what); }

}  // namespace

void SyntheticHubSpec::validate() const {
  if (num_classes < 2) invalid("num_classes must be >= 2");
  if (num_samples < num_classes) invalid("num_samples must be >= num_classes");
  if (holdout_samples < 1) invalid("holdout_samples must be >= 1");
  if (models.empty()) invalid("at least one model is required");
  std::set<std::string> ids;
  for (const auto& m : models) {
    if (!valid_id(m.model_id)) invalid("model id '" + m.model_id + "' must match [A-Za-z0-9._-]+");
    if (!ids.insert(m.model_id).second) invalid("duplicate model id '" + m.model_id + "'");
    if (m.dim < 1) invalid("model '" + m.model_id + "': dim must be >= 1");
    if (!std::isfinite(m.class_separation) || m.class_separation < 0.0) {
      invalid("model '" + m.model_id + "': class_separation must be finite and >= 0");
    }
    if (!std::isfinite(m.within_scatter) || m.within_scatter < 0.0) {
      invalid("model '" + m.model_id + "': within_scatter must be finite and >= 0");
    }
    if (!(m.label_noise_rate >= 0.0 && m.label_noise_rate < 1.0)) {
      invalid("model '" + m.model_id + "': label_noise_rate must lie in [0, 1)");
    }
  }
}

SyntheticHubSpec parse_synthetic_spec(const std::string& text) {
  SyntheticHubSpec spec;
  try {
    const auto j = nlohmann::json::parse(text);
    spec.dataset_name = j.value("dataset_name", spec.dataset_name);
    spec.seed = j.at("seed").get<std::uint64_t>();
    spec.num_samples = j.at("num_samples").get<Eigen::Index>();
    spec.num_classes = j.at("num_classes").get<int>();
    spec.holdout_samples = j.value("holdout_samples", spec.holdout_samples);
    const auto& models = j.at("models");
    for (std::size_t i = 0; i < models.size(); ++i) {
      const auto& e = models[i];
      SyntheticModelSpec m;
      m.model_id = e.value("model_id", "model_" + std::to_string(i));
      m.dim = e.at("dim").get<Eigen::Index>();
      m.class_separation = e.at("class_separation").get<double>();
      m.within_scatter = e.at("within_scatter").get<double>();
      m.label_noise_rate = e.value("label_noise_rate", 0.0);
      spec.models.push_back(std::move(m));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSpecInvalid, std::string("spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

SyntheticHubSpec read_synthetic_spec(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_synthetic_spec(ss.str());
}

Matrix simplex_class_means(int num_classes, Eigen::Index dim, double separation) {
  // Coordinate k of vertex c is Helmert row k+1 at column c; the rows are
  // orthonormal and orthogonal to the all-ones vector.
  const double scale = separation * std::sqrt(static_cast<double>(num_classes) / (num_classes - 1));
  Matrix means = Matrix::Zero(num_classes, dim);
  const Eigen::Index used = std::min<Eigen::Index>(dim, num_classes - 1);
  for (Eigen::Index k = 0; k < used; ++k) {
    const double row = static_cast<double>(k + 1);
    const double norm = std::sqrt(row * (row + 1.0));
    for (Eigen::Index c = 0; c <= k; ++c) means(c, k) = scale / norm;
    means(k + 1, k) = -scale * row / norm;
  }
  return means;
}

namespace {

int feature_class(int label, int num_classes, double noise_rate, CounterRng& rng) {
  if (noise_rate > 0.0 && rng.uniform() < noise_rate) {
    return static_cast<int>((static_cast<std::uint64_t>(label) + 1 + rng.below(static_cast<std::uint64_t>(num_classes - 1))) %
                            static_cast<std::uint64_t>(num_classes));
  }
  return label;
}

// Nearest-mean accuracy on a fresh draw. Coordinates beyond the mean subspace
// add the same noise to every class distance, so only the first C - 1 are drawn.
double oracle_accuracy(const SyntheticHubSpec& spec, const SyntheticModelSpec& model, const Matrix& means,
                       std::uint64_t stream) {
  const int c_count = spec.num_classes;
  const Eigen::Index used = std::min<Eigen::Index>(model.dim, c_count - 1);
  const Matrix sub = means.leftCols(used);
  CounterRng rng(spec.seed, stream);
  Vector x(used);
  Eigen::Index correct = 0;
  for (Eigen::Index h = 0; h < spec.holdout_samples; ++h) {
    const int label = static_cast<int>(rng.below(static_cast<std::uint64_t>(c_count)));
    const int source = feature_class(label, c_count, model.label_noise_rate, rng);
    for (Eigen::Index d = 0; d < used; ++d) x[d] = sub(source, d) + model.within_scatter * rng.normal();
    int best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int c = 0; c < c_count; ++c) {
      const double dist = (sub.row(c).transpose() - x).squaredNorm();
      if (dist < best_dist) {
        best_dist = dist;
        best = c;
      }
    }
    if (best == label) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(spec.holdout_samples);
}

}  // namespace

SyntheticHub generate_synthetic_hub(const SyntheticHubSpec& spec) {
  spec.validate();
  SyntheticHub hub;
  hub.spec = spec;
  const Eigen::Index n = spec.num_samples;
  const int c_count = spec.num_classes;

  hub.labels.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) hub.labels[i] = static_cast<int>(i % c_count);
  CounterRng shuffle_rng(spec.seed, 0);
  for (Eigen::Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Eigen::Index>(shuffle_rng.below(static_cast<std::uint64_t>(i + 1)));
    std::swap(hub.labels[i], hub.labels[j]);
  }

  for (std::size_t m = 0; m < spec.models.size(); ++m) {
    const SyntheticModelSpec& model = spec.models[m];
    const std::uint64_t base = 1 + 3 * static_cast<std::uint64_t>(m);
    const Matrix means = simplex_class_means(c_count, model.dim, model.class_separation);
    CounterRng noise_rng(spec.seed, base);
    CounterRng feature_rng(spec.seed, base + 1);
    FeatureSet fs;
    fs.model_id = model.model_id;
    fs.labels = hub.labels;
    fs.num_classes = c_count;
    fs.features.resize(n, model.dim);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int source = feature_class(hub.labels[i], c_count, model.label_noise_rate, noise_rng);
      for (Eigen::Index d = 0; d < model.dim; ++d) {
        fs.features(i, d) = means(source, d) + model.within_scatter * feature_rng.normal();
      }
    }
    hub.models.push_back(std::move(fs));
    hub.oracle_accuracy.push_back(oracle_accuracy(spec, model, means, base + 2));
  }
  return hub;
}

HubManifest write_synthetic_hub(const SyntheticHub& hub, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create '" + dir.string() + "': " + ec.message());
  HubManifest manifest;
  manifest.dataset_name = hub.spec.dataset_name;
  manifest.num_classes = hub.spec.num_classes;
  manifest.labels_path = "labels.bin";
  manifest.base_dir = dir;
  write_labels(dir / manifest.labels_path, hub.labels, hub.spec.num_classes);
  std::vector<GroundTruthEntry> oracle;
  for (std::size_t m = 0; m < hub.models.size(); ++m) {
    const FeatureSet& fs = hub.models[m];
    ManifestModel entry{fs.model_id, fs.model_id + ".feat", fs.dim()};
    write_feature_file(dir / entry.features_path, fs.features);
    manifest.models.push_back(std::move(entry));
    oracle.push_back({fs.model_id, hub.oracle_accuracy[m]});
  }
  write_manifest(dir / "manifest.json", manifest);
  write_ground_truth(dir / "oracle.csv", oracle);
  return manifest;
}

}  // namespace sfda

#pragma once

// Seeded Gaussian-mixture hubs with known Bayes-optimal accuracies.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sfda/hub_io.hpp"

namespace sfda {

/// Counter-based generator: the k-th draw of a stream is a pure function of
/// (seed, stream, k), so output does not depend on platform or call order
/// across streams.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();
  /// Uniform in [0, 1).
  double uniform();
  /// Uniform integer in [0, n), n >= 1.
  std::uint64_t below(std::uint64_t n);
  /// Standard normal via Box-Muller; caches the second variate.
  double normal();

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

struct SyntheticModelSpec {
  std::string model_id;
  Eigen::Index dim = 0;
  double class_separation = 1.0;  // distance of every class mean from the origin
  double within_scatter = 1.0;    // per-coordinate standard deviation
  double label_noise_rate = 0.0;  // chance a sample is drawn from another class
};

struct SyntheticHubSpec {
  std::string dataset_name = "synthetic";
  std::uint64_t seed = 0;
  Eigen::Index num_samples = 0;
  int num_classes = 0;
  Eigen::Index holdout_samples = 10000;
  std::vector<SyntheticModelSpec> models;

  /// Throws SpecInvalid.
  void validate() const;
};

/// JSON spec:
///   {"dataset_name": ..., "seed": s, "num_samples": N, "num_classes": C,
///    "holdout_samples": H,
///    "models": [{"model_id": ..., "dim": D, "class_separation": ...,
///                "within_scatter": ..., "label_noise_rate": ...}, ...]}
/// dataset_name, holdout_samples and model_id are optional.
SyntheticHubSpec read_synthetic_spec(const std::filesystem::path& path);
SyntheticHubSpec parse_synthetic_spec(const std::string& text);

struct SyntheticHub {
  SyntheticHubSpec spec;
  Labels labels;
  std::vector<FeatureSet> models;
  std::vector<double> oracle_accuracy;  // percentage, per model
};

/// C x D class means: a unit-norm regular simplex scaled by the separation,
/// occupying the first C - 1 coordinates (truncated when D < C - 1).
Matrix simplex_class_means(int num_classes, Eigen::Index dim, double separation);

/// Labels are balanced and shared by every model. Each model draws its
/// features around the class means with isotropic noise; with probability
/// label_noise_rate a sample is drawn from a uniformly chosen other class
/// while keeping its label. The oracle accuracy is that of the nearest-mean
/// rule on a fresh held-out draw.
SyntheticHub generate_synthetic_hub(const SyntheticHubSpec& spec);

/// Writes manifest.json, labels.bin, one <model_id>.feat per model and
/// oracle.csv (model_id,accuracy) into `dir`, creating it if needed.
HubManifest write_synthetic_hub(const SyntheticHub& hub, const std::filesystem::path& dir);

}  // namespace sfda

#pragma once

// Feature bundles, label files, hub manifests and ground-truth tables.
//
// Binary layouts (all integers and floats little-endian):
//
//   features: "SFDAFEAT" | u32 version = 1 | u64 N | u64 D | N*D float32, row-major
//   labels:   "SFDALABL" | u32 version = 1 | u64 N | u32 C | N u32 class ids (< C)
//
// Files ending in .csv or .txt are read as CSV instead: one feature row per
// line (comma separated), or one class id per line. CSV is never written.

#include <filesystem>
#include <string>
#include <vector>

#include "sfda/reg_fda.hpp"

namespace sfda {

inline constexpr char kFeatureMagic[8] = {'S', 'F', 'D', 'A', 'F', 'E', 'A', 'T'};
inline constexpr char kLabelMagic[8] = {'S', 'F', 'D', 'A', 'L', 'A', 'B', 'L'};
inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::size_t kFeatureHeaderBytes = 8 + 4 + 8 + 8;
inline constexpr std::size_t kLabelHeaderBytes = 8 + 4 + 8 + 4;

struct LabelFile {
  Labels labels;
  int num_classes = 0;
};

Matrix read_feature_file(const std::filesystem::path& path);
void write_feature_file(const std::filesystem::path& path, const Matrix& features);

/// CSV label files carry no class count; it is inferred as max id + 1.
LabelFile read_labels(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path, const Labels& labels, int num_classes);

struct ManifestModel {
  std::string model_id;
  std::string features_path;  // relative to the manifest directory
  Eigen::Index feature_dim = 0;
};

struct HubManifest {
  std::string dataset_name;
  int num_classes = 0;
  std::string labels_path;  // relative to the manifest directory
  std::vector<ManifestModel> models;
  std::filesystem::path base_dir;  // directory paths are resolved against

  std::filesystem::path resolve(const std::string& relative) const { return base_dir / relative; }
};

/// JSON manifest:
///   {"dataset_name": ..., "num_classes": C, "labels_path": ...,
///    "models": [{"model_id": ..., "features_path": ..., "feature_dim": D}, ...]}
HubManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const HubManifest& manifest);

/// Reads labels and every model's features, checking the declared class
/// count, feature dimensions and sample counts.
std::vector<FeatureSet> load_hub(const HubManifest& manifest);

struct GroundTruthEntry {
  std::string model_id;
  double accuracy = 0.0;  // percentage
};

/// CSV with header `model_id,accuracy`.
std::vector<GroundTruthEntry> read_ground_truth(const std::filesystem::path& path);
void write_ground_truth(const std::filesystem::path& path, const std::vector<GroundTruthEntry>& entries);

struct ScoreEntry {
  std::string model_id;
  double score = 0.0;
};

/// Per-model scores from a JSON score report (rows[].model_id / rows[].score)
/// or a CSV with header `model_id,score`.
std::vector<ScoreEntry> read_score_table(const std::filesystem::path& path);

}  // namespace sfda

#pragma once

#include <string>

#include "sfda/linalg.hpp"

namespace sfda {

/// One model's extracted features on the target dataset.
struct FeatureSet {
  std::string model_id;
  Matrix features;  // N x D
  Labels labels;    // N, ids in [0, num_classes)
  int num_classes = 0;

  Eigen::Index num_samples() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }

  /// Throws unless N >= C >= 2, D >= 1, labels cover every class and all
  /// feature values are finite.
  void validate() const;
};

/// How the adaptive regularization strength is derived.
enum class LambdaVariant {
  kMainText,    // lambda = exp(-a * sigma(S_W))
  kAlgorithm1,  // lambda = 1 / (1 + exp(-a * sigma(S_B)))
};

/// Normalization applied to both scatter matrices before they enter the
/// eigenproblem and the lambda rule.
enum class ScatterScale {
  kMean,  // divide by N: projected within-class covariance is the identity
  kSum,   // raw sums over samples
};

struct FdaOptions {
  double a = 4.0;
  int power_steps = 3;
  LambdaVariant lambda_variant = LambdaVariant::kMainText;
  ScatterScale scatter_scale = ScatterScale::kMean;
  bool standardize = false;  // per-dimension z-scoring of the inputs
};

/// Fitted regularized FDA. Immutable once returned by fit().
struct FdaModel {
  Matrix projection;             // U, D x D' with D' = min(D, C - 1)
  Matrix projected_class_means;  // C x D', row c = U^T mu_c
  Vector class_priors;           // q_c = N_c / N
  Vector eigenvalues;            // generalized eigenvalues, descending
  double lambda = 1.0;
  double a = 4.0;
  double sigma = 0.0;  // largest eigenvalue estimate driving lambda
  bool degenerate = false;  // every eigenvalue <= 1e-12
  double jitter = 0.0;      // extra ridge added when the regularized S_W was singular

  // Present only when fitted with standardize = true.
  Vector input_mean;
  Vector input_scale;

  Eigen::Index input_dim() const { return projection.rows(); }
  Eigen::Index output_dim() const { return projection.cols(); }
  int num_classes() const { return static_cast<int>(class_priors.size()); }
};

/// Relative ridge, times tr(S_W) / D, retried when the regularized within
/// scatter fails to factor.
inline constexpr double kRidgeJitter = 1e-10;

struct LambdaResult {
  double lambda = 1.0;
  double sigma = 0.0;
};

/// lambda = exp(-a * sigma(S_W)) with sigma from power iteration. Underflow
/// is clamped to the smallest positive normal double so lambda stays in (0, 1].
LambdaResult adaptive_lambda(const Matrix& within, double a, int power_steps = 3);

/// lambda = 1 / (1 + exp(-a * sigma(S_B))).
LambdaResult adaptive_lambda_algorithm1(const Matrix& between, double a, int power_steps = 3);

FdaModel fit(const FeatureSet& fs, const FdaOptions& options = {});

/// Features after the model's optional standardization.
Matrix prepare_inputs(const FdaModel& model, const Matrix& features);

/// Projected features U^T x, one row per sample.
Matrix project(const FdaModel& model, const Matrix& features);

/// Linear Bayes scores delta_c(x) = x^T U U^T mu_c - 0.5 mu_c^T U U^T mu_c + log q_c,
/// evaluated in the projected space. N x C.
Matrix class_scores(const FdaModel& model, const Matrix& features);

/// Row-wise softmax of class_scores. N x C, rows sum to one.
Matrix predict_proba(const FdaModel& model, const Matrix& features);

/// Fisher ratio tr(U^T S_B U) / tr(U^T S_W U) of a projection on a labelled set.
double fisher_ratio(const Matrix& projection, const Matrix& features, const Labels& labels, int num_classes);

}  // namespace sfda

#pragma once

#include <string>
#include <vector>

#include "sfda/reg_fda.hpp"

namespace sfda {

/// How per-sample log-probabilities are aggregated into the score.
enum class ScoreAggregation {
  kMean,  // (1/N) sum_n log p(y_n | x_n)
  kSum,   // sum_n log p(y_n | x_n)
};

struct SfdaOptions {
  FdaOptions fda;
  ScoreAggregation aggregation = ScoreAggregation::kMean;
};

/// Transferability score of one model plus per-stage diagnostics.
struct TransferScore {
  std::string model_id;
  double score = 0.0;  // stage-2 mean (or total) log-probability
  double stage1_mean_logp = 0.0;
  double stage2_mean_logp = 0.0;
  double lambda_stage1 = 1.0;
  double lambda_stage2 = 1.0;
  bool degenerate = false;  // either stage had no between-class signal
  int clamped = 0;          // log-probabilities raised to the floor
};

struct ConfMixOutput {
  Matrix mixed_features;  // N x D
  Vector confidences;     // p_n = p(y_n | x_n)
  Matrix outer_means;     // C x D
};

/// Full result of the two-stage pipeline, including the fitted models.
struct SfdaResult {
  TransferScore score;
  FdaModel stage1;
  FdaModel stage2;
};

/// Log-probability floor, log(1e-300).
inline constexpr double kLogProbFloor = -690.77552789821368;

/// Row c is the mean of every sample whose label is not c.
Matrix outer_class_means(const FeatureSet& fs);

/// Moves each sample toward the mean of the other classes:
/// x_n <- p_n x_n + (1 - p_n) mu_{c != y_n}, with p_n = probs(n, y_n).
ConfMixOutput confmix(const FeatureSet& fs, const Matrix& probs);

/// Mean of log p(y_n | x_n) over the rows of `probs` (as produced from
/// `scores`), clamped at kLogProbFloor. Increments `clamped` per floor hit.
double mean_log_likelihood(const Matrix& scores, const Labels& labels, int& clamped);

/// Stage 1 fits Reg-FDA on the raw features, ConfMix perturbs them with the
/// stage-1 confidences, stage 2 refits on the perturbed features and its
/// mean log-likelihood becomes the score.
SfdaResult sfda_run(const FeatureSet& fs, const SfdaOptions& options = {});

TransferScore sfda_score(const FeatureSet& fs, const SfdaOptions& options = {});

/// Scores every model of a hub. All models must share labels and class
/// count; dimensions may differ. Output order follows input order and does
/// not depend on `threads`. When `elapsed_ms` is non-null it receives the
/// per-model wall-clock time of the computation.
std::vector<SfdaResult> run_hub(const std::vector<FeatureSet>& hub, const SfdaOptions& options = {},
                                int threads = 1, std::vector<double>* elapsed_ms = nullptr);

std::vector<TransferScore> score_hub(const std::vector<FeatureSet>& hub, const SfdaOptions& options = {},
                                     int threads = 1);

}  // namespace sfda

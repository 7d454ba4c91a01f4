#include "sfda/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "sfda/parallel.hpp"

namespace sfda {

Matrix outer_class_means(const FeatureSet& fs) {
  const Eigen::Index n = fs.num_samples();
  Matrix class_sums = Matrix::Zero(fs.num_classes, fs.dim());
  Eigen::VectorXi counts = Eigen::VectorXi::Zero(fs.num_classes);
  for (Eigen::Index i = 0; i < n; ++i) {
    class_sums.row(fs.labels[i]) += fs.features.row(i);
    ++counts[fs.labels[i]];
  }
  const Vector total = class_sums.colwise().sum().transpose();
  Matrix outer(fs.num_classes, fs.dim());
  for (int c = 0; c < fs.num_classes; ++c) {
    const Eigen::Index others = n - counts[c];
    if (others == 0) {
      throw Error(ErrorCode::kSingleClassDominates, "class " + std::to_string(c) + " holds every sample");
    }
    outer.row(c) = (total.transpose() - class_sums.row(c)) / static_cast<double>(others);
  }
  return outer;
}

ConfMixOutput confmix(const FeatureSet& fs, const Matrix& probs) {
  if (probs.rows() != fs.num_samples() || probs.cols() != fs.num_classes) {
    throw Error(ErrorCode::kDimensionMismatch, "probability table shape does not match the feature set");
  }
  ConfMixOutput out;
  out.outer_means = outer_class_means(fs);
  out.confidences.resize(fs.num_samples());
  out.mixed_features.resize(fs.num_samples(), fs.dim());
  for (Eigen::Index i = 0; i < fs.num_samples(); ++i) {
    const int y = fs.labels[i];
    const double p = probs(i, y);
    out.confidences[i] = p;
    // Endpoints are copied so that signed zeros survive unchanged.
    if (p == 1.0) {
      out.mixed_features.row(i) = fs.features.row(i);
    } else if (p == 0.0) {
      out.mixed_features.row(i) = out.outer_means.row(y);
    } else {
      out.mixed_features.row(i) = p * fs.features.row(i) + (1.0 - p) * out.outer_means.row(y);
    }
  }
  return out;
}

double mean_log_likelihood(const Matrix& scores, const Labels& labels, int& clamped) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    const double top = scores.row(i).maxCoeff();
    const double log_norm = top + std::log((scores.row(i).array() - top).exp().sum());
    double logp = scores(i, labels[i]) - log_norm;
    if (logp < kLogProbFloor) {
      logp = kLogProbFloor;
      ++clamped;
    }
    total += std::min(logp, 0.0);
  }
  return total / static_cast<double>(scores.rows());
}

namespace {

struct StageOutput {
  FdaModel model;
  Matrix probs;
  double mean_logp = 0.0;
};

StageOutput run_stage(const FeatureSet& fs, const FdaOptions& options, int stage, int& clamped) {
  try {
    StageOutput out;
    out.model = fit(fs, options);
    const Matrix scores = class_scores(out.model, fs.features);
    out.probs = softmax_rows(scores);
    out.mean_logp = mean_log_likelihood(scores, fs.labels, clamped);
    return out;
  } catch (const Error& e) {
    throw Error(e.code(), "stage " + std::to_string(stage) + ": " + e.detail());
  }
}

}  // namespace

SfdaResult sfda_run(const FeatureSet& fs, const SfdaOptions& options) {
  SfdaResult result;
  TransferScore& ts = result.score;
  ts.model_id = fs.model_id;

  StageOutput first = run_stage(fs, options.fda, 1, ts.clamped);

  FeatureSet challenged;
  challenged.model_id = fs.model_id;
  challenged.labels = fs.labels;
  challenged.num_classes = fs.num_classes;
  challenged.features = confmix(fs, first.probs).mixed_features;

  StageOutput second = run_stage(challenged, options.fda, 2, ts.clamped);

  ts.stage1_mean_logp = first.mean_logp;
  ts.stage2_mean_logp = second.mean_logp;
  ts.lambda_stage1 = first.model.lambda;
  ts.lambda_stage2 = second.model.lambda;
  ts.degenerate = first.model.degenerate || second.model.degenerate;
  ts.score = options.aggregation == ScoreAggregation::kMean
                 ? second.mean_logp
                 : second.mean_logp * static_cast<double>(fs.num_samples());
  result.stage1 = std::move(first.model);
  result.stage2 = std::move(second.model);
  return result;
}

TransferScore sfda_score(const FeatureSet& fs, const SfdaOptions& options) {
  return sfda_run(fs, options).score;
}

namespace {

void check_shared_labels(const std::vector<FeatureSet>& hub) {
  if (hub.empty()) throw Error(ErrorCode::kInvalidArgument, "hub is empty");
  const FeatureSet& ref = hub.front();
  for (const FeatureSet& fs : hub) {
    if (fs.num_classes != ref.num_classes || fs.labels.size() != ref.labels.size() ||
        fs.labels != ref.labels) {
      throw Error(ErrorCode::kLabelMismatch,
                  "model '" + fs.model_id + "' labels differ from model '" + ref.model_id + "'");
    }
  }
}

}  // namespace

std::vector<SfdaResult> run_hub(const std::vector<FeatureSet>& hub, const SfdaOptions& options, int threads,
                                std::vector<double>* elapsed_ms) {
  check_shared_labels(hub);
  std::vector<SfdaResult> results(hub.size());
  if (elapsed_ms) elapsed_ms->assign(hub.size(), 0.0);
  parallel_for(hub.size(), threads, [&](std::size_t m) {
    const auto start = std::chrono::steady_clock::now();
    results[m] = sfda_run(hub[m], options);
    if (elapsed_ms) {
      (*elapsed_ms)[m] =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    }
  });
  return results;
}

std::vector<TransferScore> score_hub(const std::vector<FeatureSet>& hub, const SfdaOptions& options,
                                     int threads) {
  std::vector<TransferScore> out;
  for (auto& r : run_hub(hub, options, threads)) out.push_back(std::move(r.score));
  return out;
}

}  // namespace sfda

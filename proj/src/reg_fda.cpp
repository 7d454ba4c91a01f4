#include "sfda/reg_fda.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace sfda {

void FeatureSet::validate() const {
  const auto where = [&] { return " (model '" + model_id + "')"; };
  if (num_classes < 2) throw Error(ErrorCode::kInvalidArgument, "need at least two classes" + where());
  if (features.cols() < 1) throw Error(ErrorCode::kInvalidArgument, "feature dimension must be >= 1" + where());
  if (labels.size() != features.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "labels length " + std::to_string(labels.size()) +
                                                   " != samples " + std::to_string(features.rows()) + where());
  }
  if (features.rows() < num_classes) {
    throw Error(ErrorCode::kInvalidArgument, "fewer samples than classes" + where());
  }
  if (!features.allFinite()) throw Error(ErrorCode::kNonFiniteValue, "non-finite feature value" + where());
  Eigen::VectorXi counts = Eigen::VectorXi::Zero(num_classes);
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes) {
      throw Error(ErrorCode::kLabelOutOfRange,
                  "label " + std::to_string(labels[i]) + " at index " + std::to_string(i) + where());
    }
    ++counts[labels[i]];
  }
  for (int c = 0; c < num_classes; ++c) {
    if (counts[c] == 0) throw Error(ErrorCode::kEmptyClass, "class " + std::to_string(c) + " is empty" + where());
  }
}

LambdaResult adaptive_lambda(const Matrix& within, double a, int power_steps) {
  if (!(a > 0.0)) throw Error(ErrorCode::kInvalidArgument, "a must be positive");
  LambdaResult out;
  out.sigma = power_iteration_largest(within, power_steps);
  out.lambda = std::max(std::exp(-a * out.sigma), std::numeric_limits<double>::min());
  return out;
}

LambdaResult adaptive_lambda_algorithm1(const Matrix& between, double a, int power_steps) {
  if (!(a > 0.0)) throw Error(ErrorCode::kInvalidArgument, "a must be positive");
  LambdaResult out;
  out.sigma = power_iteration_largest(between, power_steps);
  out.lambda = 1.0 / (1.0 + std::exp(-a * out.sigma));
  return out;
}

namespace {

void standardization(const Matrix& x, Vector& mean, Vector& scale) {
  mean = x.colwise().mean().transpose();
  scale.resize(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double var = (x.col(j).array() - mean[j]).square().mean();
    scale[j] = var > 0.0 ? std::sqrt(var) : 1.0;
  }
}

}  // namespace

Matrix prepare_inputs(const FdaModel& model, const Matrix& features) {
  if (features.cols() != model.input_dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "feature dimension " + std::to_string(features.cols()) +
                                                   " != model dimension " + std::to_string(model.input_dim()));
  }
  if (model.input_mean.size() == 0) return features;
  return ((features.rowwise() - model.input_mean.transpose()).array().rowwise() /
          model.input_scale.transpose().array())
      .matrix();
}

FdaModel fit(const FeatureSet& fs, const FdaOptions& options) {
  fs.validate();
  FdaModel model;
  model.a = options.a;

  Matrix standardized;
  const Matrix* x = &fs.features;
  if (options.standardize) {
    standardization(fs.features, model.input_mean, model.input_scale);
    standardized = ((fs.features.rowwise() - model.input_mean.transpose()).array().rowwise() /
                    model.input_scale.transpose().array())
                       .matrix();
    x = &standardized;
  }

  const auto n = static_cast<double>(fs.num_samples());
  const Eigen::Index d = fs.dim();
  const ClassStatistics<double> stats = class_statistics(*x, fs.labels, fs.num_classes);
  Matrix between_factor = between_scatter_factor(stats);
  Matrix within = within_scatter(*x, fs.labels, stats);
  if (options.scatter_scale == ScatterScale::kMean) {
    between_factor /= std::sqrt(n);
    within /= n;
  }

  LambdaResult reg;
  if (options.lambda_variant == LambdaVariant::kMainText) {
    reg = adaptive_lambda(within, options.a, options.power_steps);
  } else {
    const Matrix between = between_factor * between_factor.transpose();
    reg = adaptive_lambda_algorithm1(between, options.a, options.power_steps);
  }
  model.lambda = reg.lambda;
  model.sigma = reg.sigma;

  Matrix regularized = (1.0 - reg.lambda) * within;
  regularized.diagonal().array() += reg.lambda;

  const Eigen::Index k = std::min<Eigen::Index>(d, fs.num_classes - 1);
  SymEigResult<double> eig;
  try {
    eig = generalized_symmetric_eig_low_rank(between_factor, regularized, k);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNotPositiveDefinite) throw;
    // Tiny lambda with N < D leaves the null space of S_W unregularized.
    const double trace = within.trace();
    model.jitter = kRidgeJitter * (trace > 0.0 ? trace / static_cast<double>(d) : 1.0);
    regularized.diagonal().array() += model.jitter;
    eig = generalized_symmetric_eig_low_rank(between_factor, regularized, k);
  }
  model.eigenvalues = eig.eigenvalues;
  model.projection = eig.eigenvectors;
  model.degenerate = (eig.eigenvalues.array() <= 1e-12).all();
  model.projected_class_means = stats.class_means * model.projection;
  model.class_priors = stats.counts.cast<double>() / n;
  return model;
}

Matrix project(const FdaModel& model, const Matrix& features) {
  return prepare_inputs(model, features) * model.projection;
}

Matrix class_scores(const FdaModel& model, const Matrix& features) {
  const Matrix projected = project(model, features);
  const Matrix& means = model.projected_class_means;
  Matrix scores = projected * means.transpose();
  const Vector offsets =
      -0.5 * means.rowwise().squaredNorm() + model.class_priors.array().log().matrix();
  scores.rowwise() += offsets.transpose();
  return scores;
}

Matrix predict_proba(const FdaModel& model, const Matrix& features) {
  return softmax_rows(class_scores(model, features));
}

double fisher_ratio(const Matrix& projection, const Matrix& features, const Labels& labels, int num_classes) {
  const Matrix projected = features * projection;
  const auto sc = scatter_matrices(projected, labels, num_classes);
  const double within = sc.within.trace();
  return within > 0.0 ? sc.between.trace() / within : std::numeric_limits<double>::infinity();
}

}  // namespace sfda

#include "sfda/ensemble.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "sfda/parallel.hpp"

namespace sfda {

std::vector<Matrix> fisher_embeddings(const std::vector<FeatureSet>& hub, const std::vector<FdaModel>& models) {
  if (hub.size() != models.size()) {
    throw Error(ErrorCode::kLengthMismatch, "hub and model lists differ in length");
  }
  std::vector<Matrix> out;
  out.reserve(hub.size());
  for (std::size_t m = 0; m < hub.size(); ++m) {
    const Eigen::Index expected = hub[m].num_classes - 1;
    if (models[m].output_dim() != expected) {
      throw Error(ErrorCode::kHeterogeneousProjection,
                  "model '" + hub[m].model_id + "' projects to " + std::to_string(models[m].output_dim()) +
                      " dimensions, expected C - 1 = " + std::to_string(expected));
    }
    out.push_back(project(models[m], hub[m].features));
  }
  return out;
}

std::vector<Eigen::Index> ensemble_sample_indices(Eigen::Index num_samples, int n_ens) {
  if (n_ens < 1) throw Error(ErrorCode::kInvalidArgument, "n_ens must be >= 1");
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(std::min<Eigen::Index>(num_samples, n_ens)));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  return idx;
}

Vector complementarity_scores(const std::vector<Matrix>& embeddings,
                              const std::vector<Eigen::Index>& sample_indices, int threads) {
  const auto num_models = static_cast<Eigen::Index>(embeddings.size());
  if (num_models < 2) throw Error(ErrorCode::kInvalidArgument, "complementarity needs at least two models");
  const Eigen::Index dim = embeddings.front().cols();
  const Eigen::Index rows = embeddings.front().rows();
  for (const Matrix& e : embeddings) {
    if (e.cols() != dim || e.rows() != rows) {
      throw Error(ErrorCode::kDimensionMismatch, "embeddings differ in shape");
    }
  }
  if (sample_indices.empty()) throw Error(ErrorCode::kInvalidArgument, "no samples selected");
  for (Eigen::Index i : sample_indices) {
    if (i < 0 || i >= rows) throw Error(ErrorCode::kInvalidArgument, "sample index out of range");
  }

  Matrix per_sample(static_cast<Eigen::Index>(sample_indices.size()), num_models);
  parallel_for(sample_indices.size(), threads, [&](std::size_t s) {
    const Eigen::Index n = sample_indices[s];
    Matrix stacked(num_models, dim);
    for (Eigen::Index m = 0; m < num_models; ++m) stacked.row(m) = embeddings[static_cast<std::size_t>(m)].row(n);
    const double full = nuclear_norm(stacked);
    for (Eigen::Index m = 0; m < num_models; ++m) {
      Matrix masked = stacked;
      masked.row(m).setZero();
      per_sample(static_cast<Eigen::Index>(s), m) = full - nuclear_norm(masked);
    }
  });

  Vector mean = Vector::Zero(num_models);
  for (Eigen::Index s = 0; s < per_sample.rows(); ++s) mean += per_sample.row(s).transpose();
  return mean / static_cast<double>(per_sample.rows());
}

std::vector<std::size_t> descending_order(const std::vector<double>& values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  return order;
}

namespace {

std::vector<double> min_max(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double span = *hi - *lo;
  std::vector<double> out(v.size(), 0.0);
  if (span > 0.0) {
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - *lo) / span;
  }
  return out;
}

}  // namespace

EnsembleReport ensemble_rank(const std::vector<TransferScore>& scores, const Vector& t_com, double r, int k,
                             bool normalize) {
  const std::size_t num_models = scores.size();
  if (num_models == 0) throw Error(ErrorCode::kInvalidArgument, "no models to rank");
  if (static_cast<std::size_t>(t_com.size()) != num_models) {
    throw Error(ErrorCode::kLengthMismatch, "complementarity vector length differs from score count");
  }
  if (!(r >= 0.0 && r <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "r must lie in [0, 1]");
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  if (static_cast<std::size_t>(k) > num_models) {
    throw Error(ErrorCode::kKTooLarge,
                "k = " + std::to_string(k) + " exceeds model count " + std::to_string(num_models));
  }

  std::vector<double> sfda(num_models);
  std::vector<double> com(num_models);
  for (std::size_t m = 0; m < num_models; ++m) {
    sfda[m] = scores[m].score;
    com[m] = t_com[static_cast<Eigen::Index>(m)];
  }
  const std::vector<double> sfda_used = normalize ? min_max(sfda) : sfda;
  const std::vector<double> com_used = normalize ? min_max(com) : com;

  EnsembleReport report;
  report.r = r;
  report.normalized = normalize;
  std::vector<double> combined(num_models);
  for (std::size_t m = 0; m < num_models; ++m) {
    EnsembleRow row;
    row.model_id = scores[m].model_id;
    row.t_sfda = sfda[m];
    row.t_com = com[m];
    row.sfda_used = sfda_used[m];
    row.com_used = com_used[m];
    row.t_ens = r * sfda_used[m] + (1.0 - r) * com_used[m];
    combined[m] = row.t_ens;
    report.per_model.push_back(std::move(row));
  }
  const auto by_ens = descending_order(combined);
  const auto by_sfda = descending_order(sfda);
  for (int i = 0; i < k; ++i) {
    report.selected_top_k.push_back(scores[by_ens[static_cast<std::size_t>(i)]].model_id);
    report.sfda_top_k.push_back(scores[by_sfda[static_cast<std::size_t>(i)]].model_id);
  }
  return report;
}

}  // namespace sfda

#pragma once

#include <string>
#include <vector>

#include "sfda/pipeline.hpp"

namespace sfda {

/// Default number of samples used for complementarity scoring.
inline constexpr int kDefaultEnsembleSamples = 3000;

struct EnsembleRow {
  std::string model_id;
  double t_sfda = 0.0;     // raw transferability score
  double t_com = 0.0;      // raw complementarity score
  double sfda_used = 0.0;  // t_sfda after optional min-max normalization
  double com_used = 0.0;   // t_com after optional min-max normalization
  double t_ens = 0.0;      // r * sfda_used + (1 - r) * com_used
};

struct EnsembleReport {
  std::vector<EnsembleRow> per_model;       // input order
  std::vector<std::string> selected_top_k;  // by t_ens, descending
  std::vector<std::string> sfda_top_k;      // by t_sfda alone, descending
  double r = 0.5;
  int n_ens = 0;
  bool normalized = true;
};

/// Projects each model's features into its Fisher space (x U). Every model
/// must project to C - 1 dimensions so the rows can be stacked.
std::vector<Matrix> fisher_embeddings(const std::vector<FeatureSet>& hub, const std::vector<FdaModel>& models);

/// Indices of the first min(N, n_ens) samples.
std::vector<Eigen::Index> ensemble_sample_indices(Eigen::Index num_samples, int n_ens);

/// Per-sample ablation of the stacked M x D' embedding matrix:
/// (T_com_m)_n = |F_n|_* - |F_n with row m zeroed|_*, averaged over the
/// selected samples. Samples are processed in parallel; the mean is reduced
/// in sample order.
Vector complementarity_scores(const std::vector<Matrix>& embeddings,
                              const std::vector<Eigen::Index>& sample_indices, int threads = 1);

/// Combines transferability and complementarity, T_ens = r T_sfda + (1 - r) T_com,
/// and selects the top k. When `normalize` is set both score vectors are
/// min-max scaled to [0, 1] across models first (a constant vector maps to 0).
EnsembleReport ensemble_rank(const std::vector<TransferScore>& scores, const Vector& t_com, double r, int k,
                             bool normalize = true);

/// Indices sorted by descending value; ties keep input order.
std::vector<std::size_t> descending_order(const std::vector<double>& values);

}  // namespace sfda

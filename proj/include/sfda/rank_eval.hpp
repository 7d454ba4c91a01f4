#pragma once

#include <map>
#include <vector>

#include "sfda/linalg.hpp"

namespace sfda {

/// Agreement between predicted scores T and ground-truth accuracies G.
struct RankEvaluation {
  double tau = 0.0;
  double tau_w = 0.0;
  double pearson_r = 0.0;
  double pearson_rw = 0.0;
  std::map<int, double> rel_at_k;
};

/// Kendall's tau-a: 2 / (M (M - 1)) * sum_{i<j} sgn(G_i - G_j) sgn(T_i - T_j).
/// Ties contribute zero.
double kendall_tau(const Vector& t, const Vector& g);

/// Hyperbolic weights 1 / (1 + rank) with rank 0 for the largest value;
/// equal values are ranked by position.
Vector hyperbolic_rank_weights(const Vector& values);

/// Weighted Kendall's tau. A pair (i, j) counts with weight w_i + w_j where
/// w are hyperbolic rank weights; the statistic is computed once with ranks
/// from G and once with ranks from T and the two are averaged. Each side is
/// normalized by sqrt(W_T W_G), the weight of pairs untied in T and in G; with
/// no ties that is the total pair weight. Identical inputs give exactly 1,
/// and a constant input gives 0.
double weighted_kendall_tau(const Vector& t, const Vector& g);

double pearson(const Vector& t, const Vector& g);

/// Pearson correlation with weighted means and covariances, using the same
/// symmetrized hyperbolic rank weights as weighted_kendall_tau.
double weighted_pearson(const Vector& t, const Vector& g);

/// Best G among the k highest-T models divided by the best G overall.
double rel_at_k(const Vector& t, const Vector& g, int k);

RankEvaluation evaluate_ranking(const Vector& t, const Vector& g, const std::vector<int>& ks = {1, 3});

}  // namespace sfda

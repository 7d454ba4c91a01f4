#include "sfda/rank_eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>

namespace sfda {

namespace {

void check_pair(const Vector& t, const Vector& g) {
  if (t.size() != g.size()) {
    throw Error(ErrorCode::kLengthMismatch,
                "score length " + std::to_string(t.size()) + " != ground truth length " + std::to_string(g.size()));
  }
  if (t.size() < 2) throw Error(ErrorCode::kInvalidArgument, "need at least two models");
  if (!t.allFinite() || !g.allFinite()) throw Error(ErrorCode::kNonFiniteValue, "non-finite score or accuracy");
}

class Fenwick {
 public:
  explicit Fenwick(std::size_t n) : tree_(n + 1, 0) {}
  void add(std::size_t i) {
    for (++i; i < tree_.size(); i += i & (~i + 1)) ++tree_[i];
  }
  // Count of inserted positions < i.
  std::int64_t prefix(std::size_t i) const {
    std::int64_t s = 0;
    for (; i > 0; i -= i & (~i + 1)) s += tree_[i];
    return s;
  }

 private:
  std::vector<std::int64_t> tree_;
};

// For each i, (#j concordant with i) - (#j discordant with i), ties zero.
// O(M log M): sweep G in both directions, counting T ranks with a Fenwick tree.
std::vector<std::int64_t> net_concordance(const Vector& t, const Vector& g) {
  const auto m = static_cast<std::size_t>(t.size());
  std::vector<double> t_sorted(t.data(), t.data() + m);
  std::sort(t_sorted.begin(), t_sorted.end());
  t_sorted.erase(std::unique(t_sorted.begin(), t_sorted.end()), t_sorted.end());
  std::vector<std::size_t> t_rank(m);
  for (std::size_t i = 0; i < m; ++i) {
    t_rank[i] = static_cast<std::size_t>(std::lower_bound(t_sorted.begin(), t_sorted.end(), t[static_cast<Eigen::Index>(i)]) -
                                         t_sorted.begin());
  }
  std::vector<std::size_t> by_g(m);
  std::iota(by_g.begin(), by_g.end(), std::size_t{0});
  std::sort(by_g.begin(), by_g.end(), [&](std::size_t a, std::size_t b) {
    return g[static_cast<Eigen::Index>(a)] < g[static_cast<Eigen::Index>(b)];
  });

  std::vector<std::int64_t> net(m, 0);
  // sign = +1: previously inserted samples have smaller G; lower T is concordant.
  auto sweep = [&](auto begin, auto end, int sign) {
    Fenwick tree(t_sorted.size());
    std::int64_t inserted = 0;
    for (auto group = begin; group != end;) {
      auto group_end = group;
      const double gv = g[static_cast<Eigen::Index>(*group)];
      while (group_end != end && g[static_cast<Eigen::Index>(*group_end)] == gv) ++group_end;
      for (auto it = group; it != group_end; ++it) {
        const std::int64_t lower = tree.prefix(t_rank[*it]);
        const std::int64_t higher = inserted - tree.prefix(t_rank[*it] + 1);
        net[*it] += sign * (lower - higher);
      }
      for (auto it = group; it != group_end; ++it) {
        tree.add(t_rank[*it]);
        ++inserted;
      }
      group = group_end;
    }
  };
  sweep(by_g.begin(), by_g.end(), +1);
  sweep(by_g.rbegin(), by_g.rend(), -1);
  return net;
}

// For each i, the number of j != i whose value differs from x_i.
std::vector<std::int64_t> untied_counts(const Vector& x) {
  const auto m = static_cast<std::size_t>(x.size());
  std::vector<double> sorted(x.data(), x.data() + m);
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::int64_t> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double v = x[static_cast<Eigen::Index>(i)];
    const auto range = std::equal_range(sorted.begin(), sorted.end(), v);
    out[i] = static_cast<std::int64_t>(m) - static_cast<std::int64_t>(range.second - range.first);
  }
  return out;
}

// Pair (i, j) weighs w_i + w_j. The normalizer is the geometric mean of the
// weight of pairs untied in T and in G, which is the total pair weight when
// neither vector has ties.
double weighted_tau_one_side(const std::vector<std::int64_t>& net, const std::vector<std::int64_t>& untied_t,
                             const std::vector<std::int64_t>& untied_g, const Vector& w) {
  // Same accumulation order for all sums keeps perfect agreement at exactly 1.
  double num = 0.0;
  double den_t = 0.0;
  double den_g = 0.0;
  for (std::size_t i = 0; i < net.size(); ++i) {
    const double wi = w[static_cast<Eigen::Index>(i)];
    num += wi * static_cast<double>(net[i]);
    den_t += wi * static_cast<double>(untied_t[i]);
    den_g += wi * static_cast<double>(untied_g[i]);
  }
  if (den_t == 0.0 || den_g == 0.0) return 0.0;
  const double den = den_t == den_g ? den_t : std::sqrt(den_t * den_g);
  return std::clamp(num / den, -1.0, 1.0);
}

double weighted_corr(const Vector& t, const Vector& g, const Vector& w) {
  const double total = w.sum();
  const double mt = w.dot(t) / total;
  const double mg = w.dot(g) / total;
  const Vector dt = t.array() - mt;
  const Vector dg = g.array() - mg;
  const double cov = (w.array() * dt.array() * dg.array()).sum();
  const double vt = (w.array() * dt.array().square()).sum();
  const double vg = (w.array() * dg.array().square()).sum();
  if (!(vt > 0.0) || !(vg > 0.0)) throw Error(ErrorCode::kZeroVariance, "a vector has zero variance");
  return std::clamp(cov / std::sqrt(vt * vg), -1.0, 1.0);
}

}  // namespace

double kendall_tau(const Vector& t, const Vector& g) {
  check_pair(t, g);
  const std::vector<std::int64_t> net = net_concordance(t, g);
  const std::int64_t twice = std::accumulate(net.begin(), net.end(), std::int64_t{0});
  const auto m = static_cast<double>(t.size());
  return 2.0 / (m * (m - 1.0)) * static_cast<double>(twice / 2);
}

Vector hyperbolic_rank_weights(const Vector& values) {
  std::vector<std::size_t> order(static_cast<std::size_t>(values.size()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[static_cast<Eigen::Index>(a)] > values[static_cast<Eigen::Index>(b)];
  });
  Vector w(values.size());
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    w[static_cast<Eigen::Index>(order[rank])] = 1.0 / (1.0 + static_cast<double>(rank));
  }
  return w;
}

double weighted_kendall_tau(const Vector& t, const Vector& g) {
  check_pair(t, g);
  const std::vector<std::int64_t> net = net_concordance(t, g);
  const auto untied_t = untied_counts(t);
  const auto untied_g = untied_counts(g);
  return 0.5 * (weighted_tau_one_side(net, untied_t, untied_g, hyperbolic_rank_weights(g)) +
                weighted_tau_one_side(net, untied_t, untied_g, hyperbolic_rank_weights(t)));
}

double pearson(const Vector& t, const Vector& g) {
  check_pair(t, g);
  return weighted_corr(t, g, Vector::Ones(t.size()));
}

double weighted_pearson(const Vector& t, const Vector& g) {
  check_pair(t, g);
  return 0.5 * (weighted_corr(t, g, hyperbolic_rank_weights(g)) + weighted_corr(t, g, hyperbolic_rank_weights(t)));
}

double rel_at_k(const Vector& t, const Vector& g, int k) {
  check_pair(t, g);
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  if (k > t.size()) {
    throw Error(ErrorCode::kKTooLarge, "k = " + std::to_string(k) + " exceeds model count " + std::to_string(t.size()));
  }
  if ((g.array() <= 0.0).any()) throw Error(ErrorCode::kInvalidArgument, "accuracies must be positive");
  std::vector<std::size_t> order(static_cast<std::size_t>(t.size()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return t[static_cast<Eigen::Index>(a)] > t[static_cast<Eigen::Index>(b)];
  });
  double best_top = g[static_cast<Eigen::Index>(order[0])];
  for (int i = 1; i < k; ++i) best_top = std::max(best_top, g[static_cast<Eigen::Index>(order[static_cast<std::size_t>(i)])]);
  return best_top / g.maxCoeff();
}

RankEvaluation evaluate_ranking(const Vector& t, const Vector& g, const std::vector<int>& ks) {
  RankEvaluation out;
  out.tau = kendall_tau(t, g);
  out.tau_w = weighted_kendall_tau(t, g);
  out.pearson_r = pearson(t, g);
  out.pearson_rw = weighted_pearson(t, g);
  for (int k : ks) {
    if (k <= t.size()) out.rel_at_k[k] = rel_at_k(t, g, k);
  }
  return out;
}

}  // namespace sfda

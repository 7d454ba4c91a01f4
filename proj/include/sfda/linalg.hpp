#pragma once

// Dense symmetric linear algebra shared by the Fisher-space modules.
//
// Everything here is a free function template over the scalar type so the
// same code serves float experiments and the double-precision pipeline.
// Inputs are taken as Eigen::MatrixBase expressions; outputs are plain
// dense objects.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "sfda/error.hpp"

namespace sfda {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = Mat<double>;
using Vector = Vec<double>;
using Labels = Eigen::VectorXi;

/// Per-class summary of a labelled sample matrix.
template <typename Scalar>
struct ClassStatistics {
  Vec<Scalar> mean;          // D
  Mat<Scalar> class_means;   // C x D
  Eigen::VectorXi counts;    // C
};

template <typename Scalar>
struct ScatterMatrices {
  Mat<Scalar> between;  // S_B, D x D
  Mat<Scalar> within;   // S_W, D x D
  ClassStatistics<Scalar> stats;
};

/// Eigenpairs sorted by non-increasing eigenvalue; column k of
/// `eigenvectors` pairs with `eigenvalues[k]`. Standard problems return
/// unit-norm vectors, generalized problems return B-orthonormal ones.
template <typename Scalar>
struct SymEigResult {
  Vec<Scalar> eigenvalues;
  Mat<Scalar> eigenvectors;
};

/// Number of classes implied by a label vector (max id + 1).
inline int infer_num_classes(const Labels& labels) {
  return labels.size() == 0 ? 0 : labels.maxCoeff() + 1;
}

template <typename Derived>
ClassStatistics<typename Derived::Scalar> class_statistics(const Eigen::MatrixBase<Derived>& features,
                                                           const Labels& labels, int num_classes) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = features.rows();
  const Eigen::Index d = features.cols();
  if (labels.size() != n) {
    throw Error(ErrorCode::kDimensionMismatch,
                "labels length " + std::to_string(labels.size()) + " != rows " + std::to_string(n));
  }
  if (num_classes < 1) throw Error(ErrorCode::kInvalidArgument, "num_classes must be positive");

  ClassStatistics<Scalar> stats;
  stats.counts = Eigen::VectorXi::Zero(num_classes);
  stats.class_means = Mat<Scalar>::Zero(num_classes, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int c = labels[i];
    if (c < 0 || c >= num_classes) {
      throw Error(ErrorCode::kLabelOutOfRange,
                  "label " + std::to_string(c) + " at index " + std::to_string(i));
    }
    stats.counts[c] += 1;
    stats.class_means.row(c) += features.row(i);
  }
  for (int c = 0; c < num_classes; ++c) {
    if (stats.counts[c] == 0) {
      throw Error(ErrorCode::kEmptyClass, "class " + std::to_string(c) + " has no samples");
    }
  }
  stats.mean = stats.class_means.colwise().sum().transpose() / static_cast<Scalar>(n);
  for (int c = 0; c < num_classes; ++c) {
    stats.class_means.row(c) /= static_cast<Scalar>(stats.counts[c]);
  }
  return stats;
}

/// Between-class scatter factor G (D x C) with S_B = G G^T, column c being
/// sqrt(N_c) (mu_c - mu).
template <typename Scalar>
Mat<Scalar> between_scatter_factor(const ClassStatistics<Scalar>& stats) {
  Mat<Scalar> g = (stats.class_means.rowwise() - stats.mean.transpose()).transpose();
  for (Eigen::Index c = 0; c < g.cols(); ++c) {
    g.col(c) *= std::sqrt(static_cast<Scalar>(stats.counts[c]));
  }
  return g;
}

/// Within-class scatter sum_c sum_n (x - mu_c)(x - mu_c)^T.
template <typename Derived>
Mat<typename Derived::Scalar> within_scatter(const Eigen::MatrixBase<Derived>& features, const Labels& labels,
                                             const ClassStatistics<typename Derived::Scalar>& stats) {
  using Scalar = typename Derived::Scalar;
  Mat<Scalar> centered = features;
  for (Eigen::Index i = 0; i < centered.rows(); ++i) centered.row(i) -= stats.class_means.row(labels[i]);
  const Eigen::Index d = features.cols();
  Mat<Scalar> sw = Mat<Scalar>::Zero(d, d);
  sw.template selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose());
  sw.template triangularView<Eigen::StrictlyUpper>() = sw.transpose();
  return sw;
}

/// Between and within scatter with class means taken as arithmetic means.
/// Requires N >= 2, C >= 2 and every class in [0, C) populated.
template <typename Derived>
ScatterMatrices<typename Derived::Scalar> scatter_matrices(const Eigen::MatrixBase<Derived>& features,
                                                           const Labels& labels, int num_classes) {
  using Scalar = typename Derived::Scalar;
  if (features.rows() < 2) throw Error(ErrorCode::kInvalidArgument, "need at least two samples");
  if (num_classes < 2) throw Error(ErrorCode::kInvalidArgument, "need at least two classes");
  ScatterMatrices<Scalar> out;
  out.stats = class_statistics(features, labels, num_classes);
  const Mat<Scalar> g = between_scatter_factor(out.stats);
  out.between = g * g.transpose();
  out.within = within_scatter(features, labels, out.stats);
  return out;
}

template <typename Derived>
ScatterMatrices<typename Derived::Scalar> scatter_matrices(const Eigen::MatrixBase<Derived>& features,
                                                           const Labels& labels) {
  return scatter_matrices(features, labels, infer_num_classes(labels));
}

/// Cholesky factor of a symmetric positive definite matrix. The smallest
/// pivot must exceed 1e-12 * trace(B) / D.
template <typename Derived>
Eigen::LLT<Mat<typename Derived::Scalar>> checked_cholesky(const Eigen::MatrixBase<Derived>& b) {
  using Scalar = typename Derived::Scalar;
  if (b.rows() != b.cols()) throw Error(ErrorCode::kDimensionMismatch, "B must be square");
  Eigen::LLT<Mat<Scalar>> llt(b);
  const Scalar tol = Scalar(1e-12) * b.trace() / static_cast<Scalar>(b.rows());
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kNotPositiveDefinite, "Cholesky factorization failed");
  }
  const Vec<Scalar> pivots = llt.matrixLLT().diagonal().array().square();
  if (!(pivots.minCoeff() > tol)) {
    throw Error(ErrorCode::kNotPositiveDefinite,
                "smallest Cholesky pivot " + std::to_string(static_cast<double>(pivots.minCoeff())) +
                    " below tolerance " + std::to_string(static_cast<double>(tol)));
  }
  return llt;
}

/// Flip each column so that its largest-magnitude entry is positive (first
/// such entry on ties). Makes eigenvectors independent of solver sign choices.
template <typename Scalar>
void fix_column_signs(Mat<Scalar>& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    Eigen::Index arg = 0;
    m.col(j).cwiseAbs().maxCoeff(&arg);
    if (m(arg, j) < Scalar(0)) m.col(j) = -m.col(j);
  }
}

namespace detail {

// Top-k pairs of a self-adjoint solver's ascending output, descending order.
template <typename Scalar>
SymEigResult<Scalar> top_k_descending(const Vec<Scalar>& ascending_values, const Mat<Scalar>& vectors,
                                      Eigen::Index k) {
  const Eigen::Index n = ascending_values.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::reverse(order.begin(), order.end());
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return ascending_values[a] > ascending_values[b];
  });
  SymEigResult<Scalar> out;
  out.eigenvalues.resize(k);
  out.eigenvectors.resize(vectors.rows(), k);
  for (Eigen::Index j = 0; j < k; ++j) {
    out.eigenvalues[j] = ascending_values[order[static_cast<std::size_t>(j)]];
    out.eigenvectors.col(j) = vectors.col(order[static_cast<std::size_t>(j)]);
  }
  return out;
}

}  // namespace detail

/// Top-k eigenpairs of a symmetric matrix, unit-norm eigenvectors.
template <typename Derived>
SymEigResult<typename Derived::Scalar> symmetric_eig(const Eigen::MatrixBase<Derived>& a, Eigen::Index k) {
  using Scalar = typename Derived::Scalar;
  if (a.rows() != a.cols()) throw Error(ErrorCode::kDimensionMismatch, "matrix must be square");
  if (k < 1 || k > a.rows()) throw Error(ErrorCode::kInvalidArgument, "k out of range");
  const Mat<Scalar> sym = (a + a.transpose()) / Scalar(2);
  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> solver(sym);
  auto out = detail::top_k_descending<Scalar>(solver.eigenvalues(), solver.eigenvectors(), k);
  fix_column_signs(out.eigenvectors);
  return out;
}

/// Top-k pairs (v, u) of A u = v B u for symmetric A and symmetric positive
/// definite B. Solved by whitening B = L L^T, a standard eigensolve of
/// L^-1 A L^-T, and back-substitution u = L^-T w, so u^T B u = 1.
template <typename DerivedA, typename DerivedB>
SymEigResult<typename DerivedA::Scalar> generalized_symmetric_eig(const Eigen::MatrixBase<DerivedA>& a,
                                                                  const Eigen::MatrixBase<DerivedB>& b,
                                                                  Eigen::Index k) {
  using Scalar = typename DerivedA::Scalar;
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "A and B must be square and of equal size");
  }
  if (k < 1 || k > a.rows()) throw Error(ErrorCode::kInvalidArgument, "k out of range");
  const auto llt = checked_cholesky(b);
  const auto lower = llt.matrixL();
  Mat<Scalar> whitened = lower.solve(a.eval());
  whitened = lower.solve(whitened.transpose().eval());
  whitened = (whitened + whitened.transpose().eval()) / Scalar(2);

  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> solver(whitened);
  auto out = detail::top_k_descending<Scalar>(solver.eigenvalues(), solver.eigenvectors(), k);
  out.eigenvectors = llt.matrixU().solve(out.eigenvectors);
  fix_column_signs(out.eigenvectors);
  return out;
}

/// Same problem as generalized_symmetric_eig for A = G G^T given the factor
/// G (D x r). The whitened operator L^-1 G G^T L^-T shares its nonzero
/// spectrum with the r x r Gram matrix of W = L^-1 G, so only an r x r
/// eigensolve is needed. Falls back to the dense route when r >= D or when a
/// requested eigenvalue is too small relative to the largest to recover its
/// vector from W.
template <typename DerivedG, typename DerivedB>
SymEigResult<typename DerivedG::Scalar> generalized_symmetric_eig_low_rank(const Eigen::MatrixBase<DerivedG>& g,
                                                                           const Eigen::MatrixBase<DerivedB>& b,
                                                                           Eigen::Index k) {
  using Scalar = typename DerivedG::Scalar;
  const Eigen::Index d = g.rows();
  if (b.rows() != d || b.cols() != d) throw Error(ErrorCode::kDimensionMismatch, "G rows must match B");
  if (k < 1 || k > d) throw Error(ErrorCode::kInvalidArgument, "k out of range");
  const Eigen::Index r = g.cols();
  if (r >= d || k > r) {
    const Mat<Scalar> a = g * g.transpose();
    return generalized_symmetric_eig(a, b, k);
  }

  const auto llt = checked_cholesky(b);
  const Mat<Scalar> w = llt.matrixL().solve(g.eval());
  const Mat<Scalar> gram = w.transpose() * w;
  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> solver(gram);
  auto top = detail::top_k_descending<Scalar>(solver.eigenvalues(), solver.eigenvectors(), k);
  const Scalar largest = std::max(top.eigenvalues[0], Scalar(0));
  if (!(top.eigenvalues[k - 1] > Scalar(1e-6) * largest) || largest == Scalar(0)) {
    const Mat<Scalar> a = g * g.transpose();
    return generalized_symmetric_eig(a, b, k);
  }

  SymEigResult<Scalar> out;
  out.eigenvalues = top.eigenvalues;
  Mat<Scalar> whitened_vectors = w * top.eigenvectors;
  for (Eigen::Index j = 0; j < k; ++j) whitened_vectors.col(j) /= std::sqrt(top.eigenvalues[j]);
  out.eigenvectors = llt.matrixU().solve(whitened_vectors);
  fix_column_signs(out.eigenvectors);
  return out;
}

/// Largest eigenvalue of a symmetric PSD matrix by the alternating
/// normalized iteration v_s = S^T u_{s-1} / |.|, u_s = S^T v_s / |.|
/// started from the all-ones vector; returns u_S^T S v_S. Returns exactly 0
/// as soon as an iterate vanishes.
template <typename Derived>
typename Derived::Scalar power_iteration_largest(const Eigen::MatrixBase<Derived>& s, int steps = 3) {
  using Scalar = typename Derived::Scalar;
  if (s.rows() != s.cols()) throw Error(ErrorCode::kDimensionMismatch, "matrix must be square");
  if (steps < 1) throw Error(ErrorCode::kInvalidArgument, "steps must be >= 1");
  Vec<Scalar> u = Vec<Scalar>::Ones(s.rows());
  Vec<Scalar> v(s.rows());
  for (int step = 0; step < steps; ++step) {
    v.noalias() = s.transpose() * u;
    Scalar norm = v.norm();
    if (norm == Scalar(0)) return Scalar(0);
    v /= norm;
    u.noalias() = s.transpose() * v;
    norm = u.norm();
    if (norm == Scalar(0)) return Scalar(0);
    u /= norm;
  }
  return std::max(Scalar(0), u.dot(s * v));
}

/// Sum of singular values.
template <typename Derived>
typename Derived::Scalar nuclear_norm(const Eigen::MatrixBase<Derived>& f) {
  using Scalar = typename Derived::Scalar;
  if (f.size() == 0) return Scalar(0);
  Eigen::BDCSVD<Mat<Scalar>> svd(f.eval());
  return svd.singularValues().sum();
}

/// Softmax with max subtraction; invariant to adding a constant.
template <typename Derived>
Vec<typename Derived::Scalar> softmax(const Eigen::MatrixBase<Derived>& scores) {
  using Scalar = typename Derived::Scalar;
  Vec<Scalar> out = (scores.array() - scores.maxCoeff()).exp().matrix();
  return out / out.sum();
}

/// Row-wise softmax of an N x C score matrix.
template <typename Derived>
Mat<typename Derived::Scalar> softmax_rows(const Eigen::MatrixBase<Derived>& scores) {
  using Scalar = typename Derived::Scalar;
  Mat<Scalar> out = scores;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    out.row(i) = softmax(out.row(i).transpose()).transpose();
  }
  return out;
}

}  // namespace sfda

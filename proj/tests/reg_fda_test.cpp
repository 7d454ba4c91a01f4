#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "sfda/reg_fda.hpp"

using sfda::FdaOptions;
using sfda::FeatureSet;
using sfda::Matrix;
using sfda::Vector;

namespace {

FeatureSet one_dim(std::initializer_list<double> xs, std::initializer_list<int> ys, int c) {
  FeatureSet fs;
  fs.model_id = "m";
  fs.features.resize(static_cast<Eigen::Index>(xs.size()), 1);
  fs.labels.resize(static_cast<Eigen::Index>(ys.size()));
  Eigen::Index i = 0;
  for (double x : xs) fs.features(i++, 0) = x;
  i = 0;
  for (int y : ys) fs.labels[i++] = y;
  fs.num_classes = c;
  return fs;
}

FeatureSet gaussian_set(Eigen::Index n, Eigen::Index d, int c, double sep, std::mt19937_64& rng) {
  FeatureSet fs;
  fs.model_id = "g";
  fs.num_classes = c;
  fs.labels = oracle::balanced_labels(n, c, rng);
  const Matrix means = oracle::gaussian(c, d, rng) * sep;
  fs.features = oracle::gaussian(n, d, rng);
  for (Eigen::Index i = 0; i < n; ++i) fs.features.row(i) += means.row(fs.labels[i]);
  return fs;
}

FdaOptions sum_scale() {
  FdaOptions o;
  o.scatter_scale = sfda::ScatterScale::kSum;
  return o;
}

}  // namespace

TEST(AdaptiveLambda, ZeroScatterGivesOne) {
  const auto r = sfda::adaptive_lambda(Matrix::Zero(3, 3), 4.0);
  EXPECT_EQ(r.sigma, 0.0);
  EXPECT_EQ(r.lambda, 1.0);
}

TEST(AdaptiveLambda, UnitSigma) {
  const auto r = sfda::adaptive_lambda(Matrix::Identity(1, 1), 4.0);
  EXPECT_DOUBLE_EQ(r.sigma, 1.0);
  EXPECT_NEAR(r.lambda, std::exp(-4.0), 1e-15);
  EXPECT_NEAR(r.lambda, 0.018316, 1e-6);
}

TEST(AdaptiveLambda, DiagonalWithinScatter) {
  Matrix sw = Matrix::Zero(2, 2);
  sw(0, 0) = 2.0;
  sw(1, 1) = 1.0;
  // Three steps from the all-ones start give sqrt(4097 / 1025), 0.04% below 2.
  const auto r = sfda::adaptive_lambda(sw, 4.0);
  EXPECT_NEAR(r.sigma, std::sqrt(4097.0 / 1025.0), 1e-12);
  EXPECT_NEAR(r.sigma, 2.0, 1e-3);
  EXPECT_NEAR(r.lambda / std::exp(-8.0), 1.0, 5e-3);
  const auto converged = sfda::adaptive_lambda(sw, 4.0, 60);
  EXPECT_NEAR(converged.sigma, 2.0, 1e-12);
  EXPECT_NEAR(converged.lambda, std::exp(-8.0), 1e-15);
}

TEST(AdaptiveLambda, MonotoneInSigmaAndClampedAwayFromZero) {
  double previous = 2.0;
  for (double s : {0.0, 0.1, 1.0, 10.0, 100.0}) {
    const double lambda = sfda::adaptive_lambda(s * Matrix::Identity(2, 2), 4.0).lambda;
    EXPECT_LT(lambda, previous);
    previous = lambda;
  }
  const double tiny = sfda::adaptive_lambda(1e6 * Matrix::Identity(2, 2), 4.0).lambda;
  EXPECT_GT(tiny, 0.0);
  EXPECT_LE(tiny, 1.0);
  EXPECT_THROW(sfda::adaptive_lambda(Matrix::Identity(2, 2), 0.0), sfda::Error);
}

TEST(AdaptiveLambda, Algorithm1Variant) {
  const auto r = sfda::adaptive_lambda_algorithm1(3.0 * Matrix::Identity(2, 2), 4.0);
  EXPECT_NEAR(r.sigma, 3.0, 1e-12);
  EXPECT_NEAR(r.lambda, 1.0 / (1.0 + std::exp(-12.0)), 1e-15);
  EXPECT_DOUBLE_EQ(sfda::adaptive_lambda_algorithm1(Matrix::Zero(2, 2), 4.0).lambda, 0.5);
}

TEST(Fit, OneDimensionalExampleWithSums) {
  const auto fs = one_dim({0, 2, 4, 6}, {0, 0, 1, 1}, 2);
  const auto m = sfda::fit(fs, sum_scale());
  EXPECT_NEAR(m.sigma, 4.0, 1e-12);
  EXPECT_NEAR(m.lambda, std::exp(-16.0), 1e-20);
  const double regularized = (1.0 - m.lambda) * 4.0 + m.lambda;
  EXPECT_NEAR(regularized, 4.0, 1e-6);
  ASSERT_EQ(m.eigenvalues.size(), 1);
  EXPECT_NEAR(m.eigenvalues[0], 16.0 / regularized, 1e-12);
  EXPECT_NEAR(m.eigenvalues[0], 4.0, 1e-5);
  EXPECT_NEAR(m.projection(0, 0), 1.0 / std::sqrt(regularized), 1e-12);
}

TEST(Fit, OneDimensionalExampleWithMeans) {
  const auto fs = one_dim({0, 2, 4, 6}, {0, 0, 1, 1}, 2);
  const auto m = sfda::fit(fs);
  EXPECT_NEAR(m.sigma, 1.0, 1e-12);
  EXPECT_NEAR(m.lambda, std::exp(-4.0), 1e-15);
  EXPECT_NEAR(m.eigenvalues[0], 4.0, 1e-12);
  EXPECT_NEAR(m.projection(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(m.class_priors[0], 0.5, 1e-15);
  EXPECT_NEAR(m.projected_class_means(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(m.projected_class_means(1, 0), 5.0, 1e-12);
}

TEST(Fit, ZeroWithinScatterLimit) {
  const auto fs = one_dim({1, 1, 3, 3}, {0, 0, 1, 1}, 2);
  const auto m = sfda::fit(fs);
  EXPECT_EQ(m.sigma, 0.0);
  EXPECT_EQ(m.lambda, 1.0);
  EXPECT_NEAR(m.eigenvalues[0], 1.0, 1e-12);  // S_B / N
  const auto ms = sfda::fit(fs, sum_scale());
  EXPECT_EQ(ms.lambda, 1.0);
  EXPECT_NEAR(ms.eigenvalues[0], 4.0, 1e-12);  // S_B
}

TEST(Fit, OutputDimensionRule) {
  std::mt19937_64 rng(1);
  for (const auto& [d, c] : std::vector<std::pair<int, int>>{{8, 2}, {3, 10}, {9, 10}, {20, 10}, {1, 4}}) {
    const auto fs = gaussian_set(60, d, c, 2.0, rng);
    const auto m = sfda::fit(fs);
    EXPECT_EQ(m.output_dim(), std::min(d, c - 1)) << "d=" << d << " c=" << c;
    EXPECT_EQ(m.input_dim(), d);
    EXPECT_NEAR(m.class_priors.sum(), 1.0, 1e-15);
  }
}

TEST(Fit, DegenerateWhenClassMeansCoincide) {
  const auto fs = one_dim({-1, 1, -1, 1}, {0, 0, 1, 1}, 2);
  const auto m = sfda::fit(fs);
  EXPECT_TRUE(m.degenerate);
  const Matrix p = sfda::predict_proba(m, fs.features);
  EXPECT_NEAR(p(0, 0), 0.5, 1e-12);
}

TEST(Fit, SingletonClassAllowed) {
  const auto fs = one_dim({0, 1, 2, 10}, {0, 0, 0, 1}, 2);
  const auto m = sfda::fit(fs);
  EXPECT_NEAR(m.class_priors[1], 0.25, 1e-15);
  EXPECT_FALSE(m.degenerate);
}

TEST(Fit, ValidationErrors) {
  auto fs = one_dim({0, 1, 2}, {0, 0, 0}, 2);
  try {
    sfda::fit(fs);
    FAIL();
  } catch (const sfda::Error& e) {
    EXPECT_EQ(e.code(), sfda::ErrorCode::kEmptyClass);
  }
  fs = one_dim({0, 1, 2}, {0, 1, 2}, 2);
  EXPECT_THROW(sfda::fit(fs), sfda::Error);
  fs = one_dim({0, 1}, {0, 1}, 2);
  fs.features(0, 0) = std::nan("");
  try {
    sfda::fit(fs);
    FAIL();
  } catch (const sfda::Error& e) {
    EXPECT_EQ(e.code(), sfda::ErrorCode::kNonFiniteValue);
  }
}

TEST(ClassScores, MidpointGivesEqualScores) {
  const auto fs = one_dim({-2, -1, 1, 2}, {0, 0, 1, 1}, 2);
  const auto m = sfda::fit(fs);
  const Matrix s = sfda::class_scores(m, Matrix::Zero(1, 1));
  EXPECT_NEAR(s(0, 0), s(0, 1), 1e-12);
}

TEST(ClassScores, SampleAtClassMeanScoresHighest) {
  std::mt19937_64 rng(2);
  const auto fs = gaussian_set(200, 6, 4, 3.0, rng);
  const auto m = sfda::fit(fs);
  const auto stats = sfda::class_statistics(fs.features, fs.labels, 4);
  // Equal priors isolate the nearest-mean property.
  auto equal = m;
  equal.class_priors = Vector::Constant(4, 0.25);
  const Matrix s = sfda::class_scores(equal, stats.class_means);
  for (int c = 0; c < 4; ++c) {
    Eigen::Index arg = 0;
    s.row(c).maxCoeff(&arg);
    EXPECT_EQ(arg, c);
  }
}

TEST(ClassScores, MatchesDirectFormula) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto fs = gaussian_set(80, 1 + trial % 7, 2 + trial % 4, 2.0, rng);
    const auto m = sfda::fit(fs);
    const auto stats = sfda::class_statistics(fs.features, fs.labels, fs.num_classes);
    const Matrix uut = m.projection * m.projection.transpose();
    const Matrix s = sfda::class_scores(m, fs.features);
    for (Eigen::Index n = 0; n < fs.num_samples(); n += 7) {
      for (int c = 0; c < fs.num_classes; ++c) {
        const Vector x = fs.features.row(n).transpose();
        const Vector mu = stats.class_means.row(c).transpose();
        const double direct = x.dot(uut * mu) - 0.5 * mu.dot(uut * mu) + std::log(m.class_priors[c]);
        EXPECT_NEAR(s(n, c), direct, 1e-9 * (1.0 + std::abs(direct)));
      }
    }
  }
  // 1-D closed form at x = 0: projection 1, projected means 1 and 5.
  const auto m = sfda::fit(one_dim({0, 2, 4, 6}, {0, 0, 1, 1}, 2));
  const Matrix s = sfda::class_scores(m, Matrix::Zero(1, 1));
  EXPECT_NEAR(s(0, 0), -0.5 + std::log(0.5), 1e-12);
  EXPECT_NEAR(s(0, 1), -12.5 + std::log(0.5), 1e-12);
}

TEST(ClassScores, DimensionMismatch) {
  const auto m = sfda::fit(one_dim({0, 2, 4, 6}, {0, 0, 1, 1}, 2));
  try {
    sfda::class_scores(m, Matrix::Zero(2, 3));
    FAIL();
  } catch (const sfda::Error& e) {
    EXPECT_EQ(e.code(), sfda::ErrorCode::kDimensionMismatch);
  }
}

TEST(PredictProba, EqualScoresAndClosedForm) {
  sfda::FdaModel m;
  m.projection = Matrix::Zero(2, 1);
  m.projected_class_means = Matrix::Zero(4, 1);
  m.class_priors = Vector::Constant(4, 0.25);
  const Matrix p = sfda::predict_proba(m, Matrix::Ones(3, 2));
  EXPECT_LE((p.array() - 0.25).abs().maxCoeff(), 1e-15);

  m.class_priors = Vector(2);
  m.class_priors << 2.0 / 3.0, 1.0 / 3.0;
  m.projected_class_means = Matrix::Zero(2, 1);
  const Matrix q = sfda::predict_proba(m, Matrix::Ones(1, 2));
  EXPECT_NEAR(q(0, 0), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(q(0, 1), 1.0 / 3.0, 1e-15);
}

TEST(PredictProba, RowsSumToOneAndArgmaxMatches) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const auto fs = gaussian_set(100, 2 + trial % 10, 2 + trial % 6, 0.5 + trial * 0.3, rng);
    const auto m = sfda::fit(fs);
    const Matrix s = sfda::class_scores(m, fs.features);
    const Matrix p = sfda::predict_proba(m, fs.features);
    for (Eigen::Index n = 0; n < p.rows(); ++n) {
      EXPECT_NEAR(p.row(n).sum(), 1.0, 1e-9);
      Eigen::Index as = 0;
      Eigen::Index ap = 0;
      s.row(n).maxCoeff(&as);
      p.row(n).maxCoeff(&ap);
      EXPECT_EQ(as, ap);
    }
  }
}

TEST(Properties, ProjectionBeatsRandomDirections) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index d = 2 + trial % 12;
    const auto fs = gaussian_set(150, d, 2, 1.0, rng);
    const auto m = sfda::fit(fs);
    const auto sc = sfda::scatter_matrices(fs.features, fs.labels, 2);
    const double n = static_cast<double>(fs.num_samples());
    const Matrix sb = sc.between / n;
    Matrix sw = (1.0 - m.lambda) * sc.within / n;
    sw.diagonal().array() += m.lambda;
    const auto ratio = [&](const Vector& u) { return u.dot(sb * u) / u.dot(sw * u); };
    const Vector dir = oracle::gaussian(d, 1, rng);
    EXPECT_GE(ratio(m.projection.col(0)), ratio(dir) * (1.0 - 1e-10));
    // The unregularized ratio is usually close behind.
    EXPECT_GT(sfda::fisher_ratio(m.projection, fs.features, fs.labels, 2), 0.0);
  }
}

TEST(Properties, RotationLeavesScoresUnchanged) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 10; ++trial) {
    auto fs = gaussian_set(120, 5, 3, 2.0, rng);
    fs.features.col(0) *= 3.0;  // clear top eigenvalue of S_W
    FdaOptions opts;
    opts.power_steps = 400;
    const Matrix r = oracle::random_orthogonal(5, rng);
    auto rotated = fs;
    rotated.features = fs.features * r;
    const Matrix a = sfda::class_scores(sfda::fit(fs, opts), fs.features);
    const Matrix b = sfda::class_scores(sfda::fit(rotated, opts), rotated.features);
    EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(Properties, ScalingFeaturesLowersLambda) {
  std::mt19937_64 rng(12);
  const auto fs = gaussian_set(100, 4, 3, 1.0, rng);
  const auto base = sfda::fit(fs);
  for (double s : {1.5, 2.0, 5.0}) {
    auto scaled = fs;
    scaled.features *= s;
    const auto m = sfda::fit(scaled);
    EXPECT_NEAR(m.sigma, s * s * base.sigma, 1e-10 * m.sigma);
    EXPECT_LT(m.lambda, base.lambda);
  }
}

TEST(Properties, StandardizationRemovesColumnScale) {
  std::mt19937_64 rng(14);
  const auto fs = gaussian_set(90, 4, 3, 2.0, rng);
  FdaOptions opts;
  opts.standardize = true;
  auto scaled = fs;
  scaled.features.col(1) *= 7.0;
  scaled.features.col(2).array() += 3.0;
  const Matrix a = sfda::class_scores(sfda::fit(fs, opts), fs.features);
  const Matrix b = sfda::class_scores(sfda::fit(scaled, opts), scaled.features);
  EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Fit, FewerSamplesThanDimensionsFallsBackToJitter) {
  std::mt19937_64 rng(41);
  sfda::FeatureSet fs;
  fs.model_id = "wide";
  fs.num_classes = 2;
  fs.labels = oracle::balanced_labels(40, 2, rng);
  fs.features = 3.0 * oracle::gaussian(40, 2048, rng);
  for (Eigen::Index i = 0; i < 40; ++i) fs.features(i, 0) += fs.labels[i] == 0 ? -1.0 : 1.0;
  const auto model = sfda::fit(fs);
  EXPECT_LT(model.lambda, 1e-100);
  EXPECT_GT(model.jitter, 0.0);
  EXPECT_TRUE(model.projection.allFinite());

  fs.features = oracle::gaussian(400, 4, rng);
  fs.labels = oracle::balanced_labels(400, 2, rng);
  EXPECT_EQ(sfda::fit(fs).jitter, 0.0);
}

#include <gtest/gtest.h>

#include <Eigen/LU>
#include <cmath>

#include "fls/core.hpp"
#include "fls/rng.hpp"
#include "test_support.hpp"

namespace fls {
namespace {

TEST(PointCloud, RejectsNonFiniteAndBadDimension) {
  Matrix m = Matrix::Zero(3, 2);
  m(1, 1) = std::nan("");
  EXPECT_THROW(PointCloud{m}, Error);
  try {
    PointCloud{m};
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonFinite);
  }
  EXPECT_THROW(PointCloud(Matrix::Zero(4, 2)), Error);
  EXPECT_THROW(PointCloud(Matrix::Zero(1, 2)), Error);
}

TEST(PointCloud, FromRowsRequiresEqualDimensions) {
  EXPECT_THROW(PointCloud::from_rows({{0, 0, 0}, {1, 1}}), Error);
  const auto c = PointCloud::from_rows({{0, 0, 0}, {1, 2, 3}});
  EXPECT_EQ(c.size(), 2u);
  EXPECT_EQ(c.point(1)[2], 3.0);
}

TEST(ApplyTransform, AnalyticCases) {
  const auto origin = PointCloud::from_rows({{0, 0, 0}});
  const SimilarityTransform t(2.0, Matrix::Identity(3, 3), Eigen::Vector3d(1, 0, 0));
  EXPECT_EQ(apply_transform(origin, t).point(0), Eigen::Vector3d(1, 0, 0));

  const auto x = PointCloud::from_rows({{1, 0, 0}});
  const SimilarityTransform rz(1.0, axis_angle_rotation(Eigen::Vector3d::UnitZ(), M_PI / 2), Vector::Zero(3));
  const Vector y = apply_transform(x, rz).point(0);
  EXPECT_NEAR(y[0], 0.0, 1e-12);
  EXPECT_NEAR(y[1], 1.0, 1e-12);
  EXPECT_NEAR(y[2], 0.0, 1e-12);
}

TEST(ApplyTransform, IdentityAndDimensionMismatch) {
  const auto c = test::random_cloud(3, 50, 1);
  EXPECT_EQ(apply_transform(c, SimilarityTransform::identity(3)).points(), c.points());
  EXPECT_THROW(apply_transform(c, SimilarityTransform::identity(2)), Error);
}

TEST(ApplyTransform, InverseRoundTripProperty) {
  CounterRng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto c = test::random_cloud(3, 40, 100 + trial);
    const SimilarityTransform t(rng.uniform(0.2, 5.0), test::random_rotation3(rng, M_PI),
                                test::random_vector(3, rng, -3, 3));
    const auto back = apply_transform(apply_transform(c, t), t.inverse());
    EXPECT_LT((back.points() - c.points()).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(SimilarityTransform, ComposeMatchesSequentialApplication) {
  CounterRng rng(5);
  const SimilarityTransform a(1.5, test::random_rotation3(rng, 2.0), test::random_vector(3, rng, -1, 1));
  const SimilarityTransform b(0.7, test::random_rotation3(rng, 2.0), test::random_vector(3, rng, -1, 1));
  const auto c = test::random_cloud(3, 20, 9);
  const auto seq = apply_transform(apply_transform(c, a), b);
  const auto once = apply_transform(c, b.compose(a));
  EXPECT_LT((seq.points() - once.points()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SimilarityTransform, ValidatesInvariants) {
  Matrix reflect = Matrix::Identity(3, 3);
  reflect(2, 2) = -1;
  EXPECT_THROW(SimilarityTransform(1.0, reflect, Vector::Zero(3)), Error);
  EXPECT_THROW(SimilarityTransform(0.0, Matrix::Identity(3, 3), Vector::Zero(3)), Error);
  EXPECT_THROW(SimilarityTransform(-1.0, Matrix::Identity(3, 3), Vector::Zero(3)), Error);
  Matrix skew = Matrix::Identity(3, 3);
  skew(0, 1) = 1e-6;
  EXPECT_THROW(SimilarityTransform(1.0, skew, Vector::Zero(3)), Error);
  EXPECT_THROW(SimilarityTransform(1.0, Matrix::Identity(3, 3), Vector::Zero(2)), Error);
}

TEST(RotationError, AnalyticAngles) {
  CounterRng rng(21);
  const Matrix i3 = Matrix::Identity(3, 3);
  for (int k = 0; k < 20; ++k) {
    const Matrix r = test::random_rotation3(rng, M_PI);
    EXPECT_NEAR(rotation_error_deg(r, r), 0.0, 1e-6);
    const Eigen::Vector3d axis = test::random_vector(3, rng, -1, 1);
    EXPECT_NEAR(rotation_error_deg(i3, axis_angle_rotation(axis, M_PI / 6)), 30.0, 1e-9);
  }
  EXPECT_NEAR(rotation_error_deg(i3, axis_angle_rotation(Eigen::Vector3d::UnitX(), 179.9 * M_PI / 180)), 179.9,
              1e-6);
  EXPECT_NEAR(rotation_error_deg(i3, axis_angle_rotation(Eigen::Vector3d::UnitY(), M_PI)), 180.0, 1e-6);
}

TEST(RotationError, SymmetricProperty) {
  CounterRng rng(31);
  for (int k = 0; k < 50; ++k) {
    const Matrix a = test::random_rotation3(rng, M_PI);
    const Matrix b = test::random_rotation3(rng, M_PI);
    EXPECT_NEAR(rotation_error_deg(a, b), rotation_error_deg(b, a), 1e-9);
  }
}

TEST(RotationError, TwoDimensional) {
  const Matrix a = rotation_exp(Vector::Constant(1, 0.3));
  const Matrix b = rotation_exp(Vector::Constant(1, -0.2));
  EXPECT_NEAR(rotation_error_deg(a, b), 0.5 * 180 / M_PI, 1e-9);
}

TEST(RotationError, RejectsNonRotation) {
  EXPECT_THROW(rotation_error_deg(Matrix::Identity(3, 3) * 2.0, Matrix::Identity(3, 3)), Error);
}

TEST(TranslationError, AnalyticCases) {
  EXPECT_EQ(translation_error(Eigen::Vector3d(1, 2, 3), Eigen::Vector3d(1, 2, 3)), 0.0);
  EXPECT_NEAR(translation_error(Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(0.3, 0.4, 0)), 0.5, 1e-15);
  EXPECT_NEAR(translation_error(Eigen::Vector3d(1, 1, 1), Eigen::Vector3d(1, 1, 1.02)), 0.02, 1e-12);
  EXPECT_THROW(translation_error(Vector::Zero(3), Vector::Zero(2)), Error);
}

TEST(NormalizeToUnitCube, AnalyticCases) {
  std::vector<std::vector<double>> corners;
  for (int i = 0; i < 8; ++i) corners.push_back({double(i & 1), double((i >> 1) & 1), double((i >> 2) & 1)});
  const auto cube = normalize_to_unit_cube(PointCloud::from_rows(corners));
  EXPECT_DOUBLE_EQ(cube.applied.scale(), 1.0);
  EXPECT_DOUBLE_EQ(cube.cloud.points().cwiseAbs().maxCoeff(), 0.5);

  const auto seg = normalize_to_unit_cube(PointCloud::from_rows({{0, 0, 0}, {2, 0, 0}}));
  EXPECT_DOUBLE_EQ(seg.applied.scale(), 0.5);
  EXPECT_DOUBLE_EQ(seg.cloud.point(0)[0], -0.5);
  EXPECT_DOUBLE_EQ(seg.cloud.point(1)[0], 0.5);
}

TEST(NormalizeToUnitCube, DegenerateCloudRejected) {
  try {
    normalize_to_unit_cube(PointCloud::from_rows({{1, 1, 1}, {1, 1, 1}}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateCloud);
  }
}

TEST(NormalizeToUnitCube, FitsCubeInvertsAndIsIdempotent) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto raw = test::random_cloud(3, 60, seed, -7.0, 13.0);
    const auto n = normalize_to_unit_cube(raw);
    const Vector lo = n.cloud.points().rowwise().minCoeff();
    const Vector hi = n.cloud.points().rowwise().maxCoeff();
    EXPECT_NEAR((hi - lo).maxCoeff(), 1.0, 1e-12);
    EXPECT_LE(n.cloud.points().cwiseAbs().maxCoeff(), 0.5 + 1e-12);
    const auto back = apply_transform(n.cloud, n.applied.inverse());
    EXPECT_LT((back.points() - raw.points()).cwiseAbs().maxCoeff(), 1e-9);
    const auto again = normalize_to_unit_cube(n.cloud);
    EXPECT_NEAR(again.applied.scale(), 1.0, 1e-12);
    EXPECT_LT((again.cloud.points() - n.cloud.points()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(RotationExp, ProducesRotationsAndMatchesAxisAngle) {
  CounterRng rng(3);
  for (int k = 0; k < 30; ++k) {
    const Eigen::Vector3d w = test::random_vector(3, rng, -2, 2);
    const Matrix r = rotation_exp(w);
    EXPECT_TRUE(is_rotation(r));
    EXPECT_LT((r - axis_angle_rotation(w, w.norm())).cwiseAbs().maxCoeff(), 1e-12);
  }
  EXPECT_EQ(rotation_exp(Vector::Zero(3)), Matrix::Identity(3, 3));
  EXPECT_TRUE(is_rotation(rotation_exp(Vector::Constant(1, 2.0))));
}

TEST(CanonicalOrder, PermutationInvariantProperty) {
  const auto c = test::random_cloud(3, 200, 8);
  const auto a = reorder(c, canonical_order(c));
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto p = test::shuffled(c, s);
    EXPECT_EQ(reorder(p, canonical_order(p)).points(), a.points());
  }
}

TEST(CounterRng, DeterministicAndIndependentChildren) {
  CounterRng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
  CounterRng a2(42);
  EXPECT_NE(a2.next_u64(), c.next_u64());
  const CounterRng root(7);
  CounterRng c0 = root.child(0), c1 = root.child(1);
  EXPECT_NE(c0.next_u64(), c1.next_u64());
}

TEST(CounterRng, DistributionMoments) {
  CounterRng rng(1234);
  const int n = 200000;
  double sum = 0, sum_sq = 0, usum = 0;
  std::vector<int> buckets(7, 0);
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sum_sq += z * z;
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    usum += u;
    ++buckets[rng.below(7)];
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sum_sq / n, 1.0, 0.02);
  EXPECT_NEAR(usum / n, 0.5, 0.005);
  for (int b : buckets) EXPECT_NEAR(b / double(n), 1.0 / 7.0, 0.005);
}

}  // namespace
}  // namespace fls

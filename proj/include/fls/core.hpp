#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fls/error.hpp"

namespace fls {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Ordered set of d-dimensional points (d = 2 or 3), stored column-wise
/// (one column per point). Coordinates are validated finite on construction.
///
/// A cloud with zero points is representable so that empty files round-trip,
/// but every algorithm that needs points rejects it.
class PointCloud {
 public:
  PointCloud() : points_(3, 0) {}
  explicit PointCloud(Matrix points, std::string name = {});
  PointCloud(int dim, std::span<const double> interleaved, std::string name = {});

  static PointCloud from_rows(const std::vector<std::vector<double>>& rows, std::string name = {});

  int dim() const noexcept { return static_cast<int>(points_.rows()); }
  std::size_t size() const noexcept { return static_cast<std::size_t>(points_.cols()); }
  bool empty() const noexcept { return points_.cols() == 0; }

  const Matrix& points() const noexcept { return points_; }
  Eigen::Ref<const Vector> point(std::size_t i) const { return points_.col(static_cast<Eigen::Index>(i)); }

  const std::string& name() const noexcept { return name_; }
  PointCloud with_name(std::string name) const { return PointCloud(points_, std::move(name)); }

  Vector centroid() const;

  /// Throws kDegenerateCloud unless the cloud has at least one point.
  void require_nonempty(const char* what) const;

 private:
  Matrix points_;
  std::string name_;
};

/// x -> s * R * x + t.
class SimilarityTransform {
 public:
  SimilarityTransform() : SimilarityTransform(3) {}
  explicit SimilarityTransform(int dim);
  SimilarityTransform(double scale, Matrix rotation, Vector translation);

  static SimilarityTransform identity(int dim) { return SimilarityTransform(dim); }

  int dim() const noexcept { return static_cast<int>(rotation_.rows()); }
  double scale() const noexcept { return scale_; }
  const Matrix& rotation() const noexcept { return rotation_; }
  const Vector& translation() const noexcept { return translation_; }

  SimilarityTransform inverse() const;
  /// (*this) after `first`: x -> this(first(x)).
  SimilarityTransform compose(const SimilarityTransform& first) const;

  Vector apply(const Eigen::Ref<const Vector>& x) const;

 private:
  double scale_ = 1.0;
  Matrix rotation_;
  Vector translation_;
};

enum class Termination {
  kCostTolerance,
  kGradientTolerance,
  kStepTolerance,
  kMaxIterations,
  kZeroResidual,
  kFailure,
};

std::string_view to_string(Termination t);

struct RegistrationResult {
  SimilarityTransform transform;
  double final_cost = 0.0;
  int iterations = 0;
  bool converged = false;
  double wall_time = 0.0;
  Termination termination = Termination::kMaxIterations;
  std::string message;
};

PointCloud apply_transform(const PointCloud& cloud, const SimilarityTransform& transform);

/// Geodesic angle between two rotations, in degrees within [0, 180].
double rotation_error_deg(const Matrix& estimate, const Matrix& ground_truth);

double translation_error(const Vector& estimate, const Vector& ground_truth);

struct NormalizedCloud {
  PointCloud cloud;
  SimilarityTransform applied;
};

/// Uniformly scales the cloud so its longest bounding-box side is 1 and
/// centers the bounding box at the origin.
NormalizedCloud normalize_to_unit_cube(const PointCloud& cloud);

/// Validates a proper rotation (R^T R = I within 1e-9, det > 0).
bool is_rotation(const Matrix& r, double tol = 1e-9);

/// Rotation matrix for an axis-angle vector (3D) or an angle (2D, size-1 vector).
Matrix rotation_exp(const Vector& omega);

/// Rotation by `angle` radians about `axis` (normalized internally).
Matrix axis_angle_rotation(const Eigen::Vector3d& axis, double angle);

/// Index permutation that sorts the points lexicographically by coordinates.
/// Equal point sets yield the same ordered sequence regardless of input order.
std::vector<std::size_t> canonical_order(const PointCloud& cloud);

PointCloud reorder(const PointCloud& cloud, std::span<const std::size_t> order);

}  // namespace fls

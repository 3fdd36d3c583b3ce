#include "fls/core.hpp"

#include <Eigen/Geometry>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fls {

namespace {

void check_dim(int dim) {
  if (dim != 2 && dim != 3) {
    throw Error(ErrorCode::kDimensionMismatch, "point dimension must be 2 or 3, got " + std::to_string(dim));
  }
}

}  // namespace

PointCloud::PointCloud(Matrix points, std::string name) : points_(std::move(points)), name_(std::move(name)) {
  check_dim(static_cast<int>(points_.rows()));
  if (!points_.allFinite()) {
    throw Error(ErrorCode::kNonFinite, "point cloud contains NaN or Inf coordinates");
  }
}

PointCloud::PointCloud(int dim, std::span<const double> interleaved, std::string name) {
  check_dim(dim);
  if (interleaved.size() % static_cast<std::size_t>(dim) != 0) {
    throw Error(ErrorCode::kDimensionMismatch, "coordinate count is not a multiple of the dimension");
  }
  const auto n = static_cast<Eigen::Index>(interleaved.size() / static_cast<std::size_t>(dim));
  *this = PointCloud(Eigen::Map<const Matrix>(interleaved.data(), dim, n), std::move(name));
}

PointCloud PointCloud::from_rows(const std::vector<std::vector<double>>& rows, std::string name) {
  if (rows.empty()) {
    return PointCloud(Matrix(3, 0), std::move(name));
  }
  const auto dim = static_cast<Eigen::Index>(rows.front().size());
  Matrix m(dim, static_cast<Eigen::Index>(rows.size()));
  for (std::size_t j = 0; j < rows.size(); ++j) {
    if (static_cast<Eigen::Index>(rows[j].size()) != dim) {
      throw Error(ErrorCode::kDimensionMismatch, "all points must have the same dimension");
    }
    for (Eigen::Index i = 0; i < dim; ++i) m(i, static_cast<Eigen::Index>(j)) = rows[j][static_cast<std::size_t>(i)];
  }
  return PointCloud(std::move(m), std::move(name));
}

Vector PointCloud::centroid() const {
  require_nonempty("centroid");
  return points_.rowwise().mean();
}

void PointCloud::require_nonempty(const char* what) const {
  if (empty()) {
    throw Error(ErrorCode::kDegenerateCloud, std::string(what) + ": point cloud is empty");
  }
}

SimilarityTransform::SimilarityTransform(int dim)
    : rotation_(Matrix::Identity(dim, dim)), translation_(Vector::Zero(dim)) {
  check_dim(dim);
}

SimilarityTransform::SimilarityTransform(double scale, Matrix rotation, Vector translation)
    : scale_(scale), rotation_(std::move(rotation)), translation_(std::move(translation)) {
  check_dim(static_cast<int>(rotation_.rows()));
  if (rotation_.cols() != rotation_.rows() || translation_.size() != rotation_.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "rotation and translation dimensions disagree");
  }
  if (!(scale_ > 0.0) || !std::isfinite(scale_)) {
    throw Error(ErrorCode::kInvalidArgument, "scale must be positive and finite");
  }
  if (!rotation_.allFinite() || !translation_.allFinite()) {
    throw Error(ErrorCode::kNonFinite, "transform contains NaN or Inf");
  }
  if (!is_rotation(rotation_)) {
    throw Error(ErrorCode::kInvalidArgument, "rotation is not in SO(d)");
  }
}

SimilarityTransform SimilarityTransform::inverse() const {
  Matrix rt = rotation_.transpose();
  Vector t = -(rt * translation_) / scale_;
  return SimilarityTransform(1.0 / scale_, std::move(rt), std::move(t));
}

SimilarityTransform SimilarityTransform::compose(const SimilarityTransform& first) const {
  if (first.dim() != dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "cannot compose transforms of different dimension");
  }
  return SimilarityTransform(scale_ * first.scale_, rotation_ * first.rotation_,
                             scale_ * (rotation_ * first.translation_) + translation_);
}

Vector SimilarityTransform::apply(const Eigen::Ref<const Vector>& x) const {
  if (x.size() != dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "point and transform dimensions differ");
  }
  return scale_ * (rotation_ * x) + translation_;
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::kCostTolerance: return "cost_tolerance";
    case Termination::kGradientTolerance: return "gradient_tolerance";
    case Termination::kStepTolerance: return "step_tolerance";
    case Termination::kMaxIterations: return "max_iterations";
    case Termination::kZeroResidual: return "zero_residual";
    case Termination::kFailure: return "failure";
  }
  return "unknown";
}

PointCloud apply_transform(const PointCloud& cloud, const SimilarityTransform& transform) {
  if (cloud.dim() != transform.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "apply_transform: cloud is " + std::to_string(cloud.dim()) +
                                                   "-D, transform is " + std::to_string(transform.dim()) + "-D");
  }
  Matrix out = transform.scale() * (transform.rotation() * cloud.points());
  out.colwise() += transform.translation();
  return PointCloud(std::move(out), cloud.name());
}

bool is_rotation(const Matrix& r, double tol) {
  if (r.rows() != r.cols() || (r.rows() != 2 && r.rows() != 3)) return false;
  const Matrix err = r.transpose() * r - Matrix::Identity(r.rows(), r.cols());
  return err.cwiseAbs().maxCoeff() < tol && r.determinant() > 0.0;
}

double rotation_error_deg(const Matrix& estimate, const Matrix& ground_truth) {
  if (estimate.rows() != ground_truth.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "rotation_error_deg: dimensions differ");
  }
  if (!is_rotation(estimate) || !is_rotation(ground_truth)) {
    throw Error(ErrorCode::kInvalidArgument, "rotation_error_deg: input is not a proper rotation");
  }
  const Matrix rel = ground_truth.transpose() * estimate;
  double angle = 0.0;
  if (rel.rows() == 2) {
    angle = std::abs(std::atan2(rel(1, 0), rel(0, 0)));
  } else {
    // acos is ill-conditioned near 0 and pi; atan2 of (|axis|, cos) is not.
    const double c = 0.5 * (rel.trace() - 1.0);
    const Eigen::Vector3d axis(rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0), rel(1, 0) - rel(0, 1));
    angle = std::atan2(0.5 * axis.norm(), std::clamp(c, -1.0, 1.0));
  }
  return std::clamp(angle * 180.0 / M_PI, 0.0, 180.0);
}

double translation_error(const Vector& estimate, const Vector& ground_truth) {
  if (estimate.size() != ground_truth.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "translation_error: dimensions differ");
  }
  return (estimate - ground_truth).norm();
}

NormalizedCloud normalize_to_unit_cube(const PointCloud& cloud) {
  cloud.require_nonempty("normalize_to_unit_cube");
  const Vector lo = cloud.points().rowwise().minCoeff();
  const Vector hi = cloud.points().rowwise().maxCoeff();
  const double extent = (hi - lo).maxCoeff();
  if (!(extent > 0.0)) {
    throw Error(ErrorCode::kDegenerateCloud, "normalize_to_unit_cube: all points are identical");
  }
  const double s = 1.0 / extent;
  const Vector center = 0.5 * (lo + hi);
  SimilarityTransform applied(s, Matrix::Identity(cloud.dim(), cloud.dim()), -s * center);
  return {apply_transform(cloud, applied), std::move(applied)};
}

Matrix rotation_exp(const Vector& omega) {
  if (omega.size() == 1) {
    const double c = std::cos(omega[0]);
    const double s = std::sin(omega[0]);
    Matrix r(2, 2);
    r << c, -s, s, c;
    return r;
  }
  if (omega.size() != 3) {
    throw Error(ErrorCode::kDimensionMismatch, "rotation_exp expects a 1- or 3-vector");
  }
  const double theta = omega.norm();
  if (theta == 0.0) return Matrix::Identity(3, 3);
  return Eigen::AngleAxisd(theta, Eigen::Vector3d(omega / theta)).toRotationMatrix();
}

Matrix axis_angle_rotation(const Eigen::Vector3d& axis, double angle) {
  const double n = axis.norm();
  if (!(n > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "rotation axis must be nonzero");
  }
  return Eigen::AngleAxisd(angle, axis / n).toRotationMatrix();
}

std::vector<std::size_t> canonical_order(const PointCloud& cloud) {
  std::vector<std::size_t> order(cloud.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const Matrix& p = cloud.points();
  const Eigen::Index d = p.rows();
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    for (Eigen::Index r = 0; r < d; ++r) {
      const double x = p(r, static_cast<Eigen::Index>(a));
      const double y = p(r, static_cast<Eigen::Index>(b));
      if (x < y) return true;
      if (y < x) return false;
    }
    return false;
  });
  return order;
}

PointCloud reorder(const PointCloud& cloud, std::span<const std::size_t> order) {
  Matrix out(cloud.dim(), static_cast<Eigen::Index>(order.size()));
  for (std::size_t j = 0; j < order.size(); ++j) {
    out.col(static_cast<Eigen::Index>(j)) = cloud.points().col(static_cast<Eigen::Index>(order[j]));
  }
  return PointCloud(std::move(out), cloud.name());
}

}  // namespace fls

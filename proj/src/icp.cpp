#include "fls/icp.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace fls {

KdTree::KdTree(const PointCloud& points, std::size_t leaf_size) : points_(points.points()) {
  points.require_nonempty("KdTree");
  order_.resize(size());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  nodes_.reserve(2 * size() / std::max<std::size_t>(leaf_size, 1) + 1);
  build(0, size(), std::max<std::size_t>(leaf_size, 1));
}

int KdTree::build(std::size_t begin, std::size_t end, std::size_t leaf_size) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back({begin, end});
  if (end - begin <= leaf_size) return id;

  // Split on the axis of largest spread at the median.
  Vector lo = Vector::Constant(dim(), std::numeric_limits<double>::infinity());
  Vector hi = -lo;
  for (std::size_t i = begin; i < end; ++i) {
    const auto c = points_.col(static_cast<Eigen::Index>(order_[i]));
    lo = lo.cwiseMin(c);
    hi = hi.cwiseMax(c);
  }
  Eigen::Index axis = 0;
  (hi - lo).maxCoeff(&axis);
  const std::size_t mid = begin + (end - begin) / 2;
  const auto ax = axis;
  std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin), order_.begin() + static_cast<std::ptrdiff_t>(mid),
                   order_.begin() + static_cast<std::ptrdiff_t>(end), [&](std::size_t a, std::size_t b) {
                     return points_(ax, static_cast<Eigen::Index>(a)) < points_(ax, static_cast<Eigen::Index>(b));
                   });
  const double split = points_(ax, static_cast<Eigen::Index>(order_[mid]));
  const int left = build(begin, mid, leaf_size);
  const int right = build(mid, end, leaf_size);
  Node& n = nodes_[static_cast<std::size_t>(id)];
  n.axis = static_cast<int>(axis);
  n.split = split;
  n.left = left;
  n.right = right;
  return id;
}

void KdTree::search(int node_id, const Eigen::Ref<const Vector>& q, std::optional<std::size_t> skip, Neighbor& best,
                    double& best_sq) const {
  const Node& node = nodes_[static_cast<std::size_t>(node_id)];
  if (node.axis < 0) {
    for (std::size_t i = node.begin; i < node.end; ++i) {
      const std::size_t idx = order_[i];
      if (skip && *skip == idx) continue;
      const double d2 = (points_.col(static_cast<Eigen::Index>(idx)) - q).squaredNorm();
      if (d2 < best_sq || (d2 == best_sq && idx < best.index)) {
        best_sq = d2;
        best.index = idx;
      }
    }
    return;
  }
  // Left holds coordinates <= split, right holds >= split.
  const double diff = q[node.axis] - node.split;
  const int near = diff < 0 ? node.left : node.right;
  const int far = diff < 0 ? node.right : node.left;
  search(near, q, skip, best, best_sq);
  if (diff * diff <= best_sq) search(far, q, skip, best, best_sq);
}

KdTree::Neighbor KdTree::nearest(const Eigen::Ref<const Vector>& query, std::optional<std::size_t> skip) const {
  if (query.size() != dim()) throw Error(ErrorCode::kDimensionMismatch, "KdTree::nearest: query dimension");
  if (size() == 0 || (size() == 1 && skip)) throw Error(ErrorCode::kDegenerateCloud, "KdTree::nearest: no candidates");
  Neighbor best;
  best.index = std::numeric_limits<std::size_t>::max();
  double best_sq = std::numeric_limits<double>::infinity();
  search(0, query, skip, best, best_sq);
  best.distance = std::sqrt(best_sq);
  return best;
}

double median_nearest_spacing(const PointCloud& cloud) {
  if (cloud.size() < 2) throw Error(ErrorCode::kDegenerateCloud, "median_nearest_spacing: need >= 2 points");
  const KdTree tree(cloud);
  std::vector<double> d(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) d[i] = tree.nearest(cloud.point(i), i).distance;
  const auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  return *mid;
}

SimilarityTransform best_rigid_transform(const Matrix& src, const Matrix& dst) {
  if (src.rows() != dst.rows() || src.cols() != dst.cols() || src.cols() == 0) {
    throw Error(ErrorCode::kDimensionMismatch, "best_rigid_transform: point sets must have equal shape");
  }
  const Vector cs = src.rowwise().mean();
  const Vector cd = dst.rowwise().mean();
  const Matrix h = (src.colwise() - cs) * (dst.colwise() - cd).transpose();
  Eigen::JacobiSVD<Matrix> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Matrix& u = svd.matrixU();
  const Matrix& v = svd.matrixV();
  Vector signs = Vector::Ones(src.rows());
  if ((v * u.transpose()).determinant() < 0.0) signs[src.rows() - 1] = -1.0;
  const Matrix r = v * signs.asDiagonal() * u.transpose();
  return SimilarityTransform(1.0, r, cd - r * cs);
}

RegistrationResult icp_refine(const PointCloud& source, const PointCloud& target, const SimilarityTransform& initial,
                              const IcpOptions& options) {
  const KdTree tree(target);
  return icp_refine(source, target, tree, initial, options);
}

RegistrationResult icp_refine(const PointCloud& source, const PointCloud& target, const KdTree& tree,
                              const SimilarityTransform& initial, const IcpOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  source.require_nonempty("icp: source");
  if (source.dim() != target.dim() || initial.dim() != source.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "icp: source, target and initial transform dimensions differ");
  }
  if (options.max_iterations <= 0 || !(options.tolerance >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "icp: max_iterations > 0 and tolerance >= 0 required");
  }
  const double cutoff = options.correspondence_cutoff.value_or(3.0 * median_nearest_spacing(target));
  const double cutoff_sq = cutoff * cutoff;
  const int d = source.dim();

  RegistrationResult result;
  result.transform = initial;
  SimilarityTransform previous = initial;
  double prev_mse = std::numeric_limits<double>::infinity();
  Matrix src_kept(d, static_cast<Eigen::Index>(source.size()));
  Matrix dst_kept(d, static_cast<Eigen::Index>(source.size()));

  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    const PointCloud moved = apply_transform(source, result.transform);
    Eigen::Index kept = 0;
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < moved.size(); ++i) {
      const auto nn = tree.nearest(moved.point(i));
      const double d2 = nn.distance * nn.distance;
      if (d2 > cutoff_sq) {
        sum_sq += cutoff_sq;
        continue;
      }
      src_kept.col(kept) = moved.point(i);
      dst_kept.col(kept) = target.point(nn.index);
      sum_sq += d2;
      ++kept;
    }
    if (kept < 3) {
      if (iter == 1) {
        throw Error(ErrorCode::kTooFewCorrespondences,
                    "icp: only " + std::to_string(kept) + " correspondences within cutoff " + std::to_string(cutoff));
      }
      result.transform = previous;
      result.termination = Termination::kFailure;
      result.message = "correspondences lost; kept previous estimate";
      break;
    }
    // Pairs beyond the cutoff count as cutoff^2, so admitting new pairs never
    // raises the error and the Kabsch step can only lower it.
    const double mse = sum_sq / static_cast<double>(moved.size());
    if (mse > prev_mse) {
      result.transform = previous;
      result.termination = Termination::kCostTolerance;
      result.converged = true;
      break;
    }
    result.iterations = iter;
    result.final_cost = mse;
    if (mse == 0.0 || (std::isfinite(prev_mse) && prev_mse - mse <= options.tolerance * prev_mse)) {
      result.termination = mse == 0.0 ? Termination::kZeroResidual : Termination::kCostTolerance;
      result.converged = true;
      break;
    }
    if (iter == options.max_iterations) {
      result.termination = Termination::kMaxIterations;
      break;
    }
    const SimilarityTransform step = best_rigid_transform(src_kept.leftCols(kept), dst_kept.leftCols(kept));
    previous = result.transform;
    result.transform = step.compose(result.transform);
    prev_mse = mse;
  }
  result.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace fls

#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "fls/core.hpp"

namespace fls {

/// Balanced k-d tree over a fixed point set (2-D or 3-D). Queries are exact
/// and read-only, so one tree may serve concurrent callers.
class KdTree {
 public:
  struct Neighbor {
    std::size_t index = 0;
    double distance = std::numeric_limits<double>::infinity();
  };

  explicit KdTree(const PointCloud& points, std::size_t leaf_size = 8);

  std::size_t size() const noexcept { return static_cast<std::size_t>(points_.cols()); }
  int dim() const noexcept { return static_cast<int>(points_.rows()); }

  /// Nearest indexed point; ties resolve to the smaller index. `skip` excludes
  /// one index (used for nearest-other-point queries).
  Neighbor nearest(const Eigen::Ref<const Vector>& query,
                   std::optional<std::size_t> skip = std::nullopt) const;

 private:
  struct Node {
    std::size_t begin = 0;
    std::size_t end = 0;
    int axis = -1;  // -1 marks a leaf
    double split = 0.0;
    int left = -1;
    int right = -1;
  };

  int build(std::size_t begin, std::size_t end, std::size_t leaf_size);
  void search(int node, const Eigen::Ref<const Vector>& q, std::optional<std::size_t> skip, Neighbor& best,
              double& best_sq) const;

  Matrix points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

/// Median distance from each point to its nearest other point.
double median_nearest_spacing(const PointCloud& cloud);

/// Least-squares rigid (R, t) with dst_i ~ R src_i + t (Kabsch). The
/// determinant sign is corrected so R is always a proper rotation.
SimilarityTransform best_rigid_transform(const Matrix& src, const Matrix& dst);

struct IcpOptions {
  int max_iterations = 50;
  /// Correspondences farther apart are dropped. Defaults to
  /// 3 x median_nearest_spacing(target).
  std::optional<double> correspondence_cutoff;
  /// Stop once the mean squared correspondence error improves by less than
  /// this fraction of its previous value.
  double tolerance = 1e-6;
};

/// Point-to-point ICP seeded by `initial`. Rotation and translation are
/// refined; the initial scale is kept. An iteration whose error would rise
/// is rolled back, so the reported error never increases. final_cost is the
/// mean over all source points of the squared correspondence distance, with
/// pairs beyond the cutoff counted as cutoff^2, at the returned transform.
/// Throws kTooFewCorrespondences if fewer than 3 pairs survive the cutoff at
/// the initial pose.
RegistrationResult icp_refine(const PointCloud& source, const PointCloud& target, const SimilarityTransform& initial,
                              const IcpOptions& options = {});

/// Same, reusing a tree already built over `target`.
RegistrationResult icp_refine(const PointCloud& source, const PointCloud& target, const KdTree& target_tree,
                              const SimilarityTransform& initial, const IcpOptions& options = {});

}  // namespace fls

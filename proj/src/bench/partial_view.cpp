#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "fls/bench.hpp"

namespace fls::bench {

namespace {

struct Face {
  std::array<std::size_t, 3> v;
  Eigen::Vector3d normal;  // unit, pointing away from the interior
  double offset = 0.0;
  bool alive = true;

  double height(const Eigen::Vector3d& p) const { return normal.dot(p) - offset; }
};

class Hull {
 public:
  Hull(const std::vector<Eigen::Vector3d>& pts, double eps) : pts_(pts), eps_(eps) {}

  void build() {
    const std::size_t n = pts_.size();
    if (n < 4) throw Error(ErrorCode::kDegenerateCloud, "convex hull: need at least 4 points");
    // Initial simplex from extreme points.
    std::size_t i0 = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (pts_[i].x() < pts_[i0].x()) i0 = i;
    }
    std::size_t i1 = argmax([&](std::size_t i) { return (pts_[i] - pts_[i0]).squaredNorm(); });
    const Eigen::Vector3d dir = (pts_[i1] - pts_[i0]).normalized();
    std::size_t i2 = argmax([&](std::size_t i) {
      const Eigen::Vector3d w = pts_[i] - pts_[i0];
      return (w - w.dot(dir) * dir).squaredNorm();
    });
    const Eigen::Vector3d nrm = (pts_[i1] - pts_[i0]).cross(pts_[i2] - pts_[i0]);
    if (!(nrm.norm() > eps_ * eps_)) throw Error(ErrorCode::kDegenerateCloud, "convex hull: points are collinear");
    const Eigen::Vector3d un = nrm.normalized();
    std::size_t i3 = argmax([&](std::size_t i) { return std::abs(un.dot(pts_[i] - pts_[i0])); });
    if (!(std::abs(un.dot(pts_[i3] - pts_[i0])) > eps_)) {
      throw Error(ErrorCode::kDegenerateCloud, "convex hull: points are coplanar");
    }
    interior_ = (pts_[i0] + pts_[i1] + pts_[i2] + pts_[i3]) / 4.0;
    add_face(i0, i1, i2);
    add_face(i0, i1, i3);
    add_face(i0, i2, i3);
    add_face(i1, i2, i3);

    std::vector<std::size_t> visible;
    std::set<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t p = 0; p < n; ++p) {
      if (p == i0 || p == i1 || p == i2 || p == i3) continue;
      visible.clear();
      for (std::size_t f = 0; f < faces_.size(); ++f) {
        if (faces_[f].alive && faces_[f].height(pts_[p]) > eps_) visible.push_back(f);
      }
      if (visible.empty()) continue;
      edges.clear();
      for (std::size_t f : visible) {
        const auto& v = faces_[f].v;
        for (int e = 0; e < 3; ++e) edges.emplace(v[e], v[(e + 1) % 3]);
        faces_[f].alive = false;
      }
      for (const auto& [a, b] : edges) {
        if (!edges.count({b, a})) add_face(a, b, p);
      }
      if (faces_.size() > 4 * alive_count() + 64) compact();
    }
  }

  std::vector<std::size_t> vertices() const {
    std::vector<std::size_t> out;
    for (const auto& f : faces_) {
      if (f.alive) out.insert(out.end(), f.v.begin(), f.v.end());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

 private:
  template <typename F>
  std::size_t argmax(F score) const {
    std::size_t best = 0;
    double best_score = -1.0;
    for (std::size_t i = 0; i < pts_.size(); ++i) {
      const double s = score(i);
      if (s > best_score) {
        best_score = s;
        best = i;
      }
    }
    return best;
  }

  void add_face(std::size_t a, std::size_t b, std::size_t c) {
    Face f;
    f.v = {a, b, c};
    Eigen::Vector3d n = (pts_[b] - pts_[a]).cross(pts_[c] - pts_[a]);
    const double len = n.norm();
    n = len > 0.0 ? Eigen::Vector3d(n / len) : Eigen::Vector3d::UnitZ();
    if (n.dot(interior_ - pts_[a]) > 0.0) {
      n = -n;
      std::swap(f.v[1], f.v[2]);
    }
    f.normal = n;
    f.offset = n.dot(pts_[a]);
    faces_.push_back(f);
  }

  std::size_t alive_count() const {
    return static_cast<std::size_t>(std::count_if(faces_.begin(), faces_.end(), [](const Face& f) { return f.alive; }));
  }

  void compact() {
    faces_.erase(std::remove_if(faces_.begin(), faces_.end(), [](const Face& f) { return !f.alive; }), faces_.end());
  }

  const std::vector<Eigen::Vector3d>& pts_;
  double eps_;
  Eigen::Vector3d interior_ = Eigen::Vector3d::Zero();
  std::vector<Face> faces_;
};

}  // namespace

std::vector<std::size_t> convex_hull_vertices(const std::vector<Eigen::Vector3d>& points) {
  double scale = 0.0;
  for (const auto& p : points) {
    if (!p.allFinite()) throw Error(ErrorCode::kNonFinite, "convex hull: non-finite point");
    scale = std::max(scale, p.cwiseAbs().maxCoeff());
  }
  Hull hull(points, 1e-12 * std::max(scale, 1e-300));
  hull.build();
  return hull.vertices();
}

std::vector<std::size_t> visible_points(const PointCloud& cloud, const Eigen::Vector3d& viewpoint,
                                        double radius_factor) {
  if (cloud.dim() != 3) throw Error(ErrorCode::kDimensionMismatch, "visible_points: 3-D cloud required");
  cloud.require_nonempty("visible_points");
  if (!(radius_factor > 1.0)) throw Error(ErrorCode::kInvalidArgument, "visible_points: radius_factor must exceed 1");
  const std::size_t n = cloud.size();
  std::vector<Eigen::Vector3d> flipped(n + 1);
  double max_dist = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    flipped[i] = Eigen::Vector3d(cloud.point(i)) - viewpoint;
    max_dist = std::max(max_dist, flipped[i].norm());
  }
  if (!(max_dist > 0.0)) throw Error(ErrorCode::kDegenerateCloud, "visible_points: all points at the viewpoint");
  const double radius = radius_factor * max_dist;
  std::vector<std::size_t> at_eye;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = flipped[i].norm();
    if (r == 0.0) {
      at_eye.push_back(i);
      continue;
    }
    flipped[i] += 2.0 * (radius - r) * flipped[i] / r;
  }
  flipped[n] = Eigen::Vector3d::Zero();
  std::vector<std::size_t> hull = convex_hull_vertices(flipped);
  hull.erase(std::remove(hull.begin(), hull.end(), n), hull.end());
  hull.insert(hull.end(), at_eye.begin(), at_eye.end());
  std::sort(hull.begin(), hull.end());
  hull.erase(std::unique(hull.begin(), hull.end()), hull.end());
  return hull;
}

PartialView synthesize_partial_view(const PointCloud& cloud, int n_views, std::size_t keep_points, std::uint64_t seed) {
  if (cloud.dim() != 3) throw Error(ErrorCode::kDimensionMismatch, "synthesize_partial_view: 3-D cloud required");
  cloud.require_nonempty("synthesize_partial_view");
  if (n_views < 1 || keep_points == 0) {
    throw Error(ErrorCode::kInvalidArgument, "synthesize_partial_view: n_views >= 1 and keep_points >= 1 required");
  }
  const Eigen::Vector3d center = cloud.centroid();
  double radius = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i) radius = std::max(radius, (cloud.point(i) - center).norm());
  if (!(radius > 0.0)) throw Error(ErrorCode::kDegenerateCloud, "synthesize_partial_view: cloud has no extent");

  const CounterRng root(seed);
  PartialView out;
  std::vector<double> weight(cloud.size(), 0.0);
  for (int v = 0; v < n_views; ++v) {
    CounterRng rng = root.child(static_cast<std::uint64_t>(v));
    Eigen::Vector3d dir;
    do {
      dir = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
    } while (!(dir.norm() > 1e-9));
    const Eigen::Vector3d eye = center + 3.0 * radius * dir.normalized();
    out.viewpoints.push_back(eye);
    for (std::size_t i : visible_points(cloud, eye)) {
      const double dist_sq = (cloud.point(i) - eye).squaredNorm();
      weight[i] += 1.0 / std::max(dist_sq, 1e-300);
    }
  }

  std::vector<std::size_t> seen;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (weight[i] > 0.0) seen.push_back(i);
  }
  if (seen.size() <= keep_points) {
    out.insufficient = seen.size() < keep_points;
    out.indices = std::move(seen);
  } else {
    // Weighted sampling without replacement: keep the largest log(u) / w keys.
    CounterRng rng = root.child(static_cast<std::uint64_t>(n_views));
    std::vector<std::pair<double, std::size_t>> keys;
    keys.reserve(seen.size());
    for (std::size_t i : seen) {
      double u = rng.uniform();
      while (u <= 0.0) u = rng.uniform();
      keys.emplace_back(std::log(u) / weight[i], i);
    }
    std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(keep_points), keys.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
    for (std::size_t k = 0; k < keep_points; ++k) out.indices.push_back(keys[k].second);
    std::sort(out.indices.begin(), out.indices.end());
  }
  Matrix pts(3, static_cast<Eigen::Index>(out.indices.size()));
  for (std::size_t k = 0; k < out.indices.size(); ++k) pts.col(static_cast<Eigen::Index>(k)) = cloud.point(out.indices[k]);
  out.cloud = PointCloud(std::move(pts), cloud.name());
  return out;
}

}  // namespace fls::bench

#include <cmath>
#include <numeric>

#include "fls/bench.hpp"

namespace fls::bench {

void PerturbationSpec::validate() const {
  if (rotation_angle.lo > rotation_angle.hi || rotation_angle.lo < -M_PI || rotation_angle.hi > M_PI) {
    throw Error(ErrorCode::kInvalidArgument, "rotation angle range must be ordered and within [-pi, pi]");
  }
  if (translation.lo > translation.hi) throw Error(ErrorCode::kInvalidArgument, "translation range must be ordered");
  if (!(noise_sigma >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "noise sigma must be >= 0");
  if (scale && (scale->lo > scale->hi || !(scale->lo > 0.0))) {
    throw Error(ErrorCode::kInvalidArgument, "scale range must be ordered and positive");
  }
}

Matrix random_rotation(Range angle_range, CounterRng& rng, int dim) {
  if (dim == 2) return rotation_exp(Vector::Constant(1, rng.uniform(angle_range.lo, angle_range.hi)));
  Eigen::Vector3d u(rng.uniform(), rng.uniform(), rng.uniform());
  while (!(u.norm() > 1e-12)) u = Eigen::Vector3d(rng.uniform(), rng.uniform(), rng.uniform());
  const double theta = rng.uniform(angle_range.lo, angle_range.hi);
  return axis_angle_rotation(u, theta);
}

Matrix random_rotation(Range angle_range, std::uint64_t seed, int dim) {
  CounterRng rng(seed);
  return random_rotation(angle_range, rng, dim);
}

Perturbed perturb(const PointCloud& cloud, const PerturbationSpec& spec) {
  spec.validate();
  cloud.require_nonempty("perturb");
  const int d = cloud.dim();
  const CounterRng root(spec.seed);
  CounterRng rot_rng = root.child(0);
  CounterRng trans_rng = root.child(1);
  CounterRng scale_rng = root.child(2);
  CounterRng noise_rng = root.child(3);
  CounterRng shuffle_rng = root.child(4);

  const Matrix r = random_rotation(spec.rotation_angle, rot_rng, d);
  Vector t(d);
  for (int i = 0; i < d; ++i) t[i] = trans_rng.uniform(spec.translation.lo, spec.translation.hi);
  const double s = spec.scale ? scale_rng.uniform(spec.scale->lo, spec.scale->hi) : 1.0;
  SimilarityTransform gt(s, r, t);

  Matrix pts = apply_transform(cloud, gt).points();
  if (spec.noise_sigma > 0.0) {
    for (Eigen::Index j = 0; j < pts.cols(); ++j) {
      for (Eigen::Index i = 0; i < pts.rows(); ++i) pts(i, j) += spec.noise_sigma * noise_rng.normal();
    }
  }
  if (spec.shuffle) {
    std::vector<std::size_t> order(cloud.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    Matrix shuffled(pts.rows(), pts.cols());
    for (std::size_t j = 0; j < order.size(); ++j) {
      shuffled.col(static_cast<Eigen::Index>(j)) = pts.col(static_cast<Eigen::Index>(order[j]));
    }
    pts = std::move(shuffled);
  }
  return {PointCloud(std::move(pts), cloud.name()), std::move(gt)};
}

void classify(TrialRecord& record) {
  const bool finite = std::isfinite(record.rotation_error_deg) && std::isfinite(record.translation_error);
  record.failed = !record.error.empty() || !finite || record.rotation_error_deg > 45.0 || record.translation_error > 0.5;
  record.exact_recovery = !record.failed && record.rotation_error_deg < 5.0 && record.translation_error < 0.03;
}

namespace {

using Box = std::array<double, 6>;  // min x, y, z, max x, y, z

void add_box(std::vector<Eigen::Vector3d>& v, std::vector<std::array<std::uint32_t, 3>>& f, const Box& b) {
  const auto base = static_cast<std::uint32_t>(v.size());
  for (int i = 0; i < 8; ++i) {
    v.emplace_back((i & 1) ? b[3] : b[0], (i & 2) ? b[4] : b[1], (i & 4) ? b[5] : b[2]);
  }
  static constexpr std::uint32_t quads[6][4] = {{0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4},
                                                {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5}};
  for (const auto& q : quads) {
    f.push_back({base + q[0], base + q[1], base + q[2]});
    f.push_back({base + q[0], base + q[2], base + q[3]});
  }
}

const std::vector<std::pair<std::string, std::vector<Box>>>& catalog() {
  static const std::vector<std::pair<std::string, std::vector<Box>>> kCatalog = {
      {"bracket", {{0, 0, 0, 1.0, 0.15, 0.6}, {0, 0, 0, 0.2, 0.9, 0.6}, {0.8, 0.15, 0, 1.0, 0.35, 0.25}}},
      {"stairs", {{0, 0, 0, 1.0, 0.3, 0.25}, {0, 0.3, 0, 0.75, 0.6, 0.5}, {0, 0.6, 0, 0.5, 0.9, 0.75}, {0, 0.9, 0, 0.25, 1.1, 1.0}}},
      {"chair",
       {{0, 0, 0.45, 0.6, 0.55, 0.55},
        {0, 0.45, 0.55, 0.6, 0.55, 1.2},
        {0, 0, 0, 0.08, 0.08, 0.45},
        {0.52, 0, 0, 0.6, 0.08, 0.45},
        {0, 0.47, 0, 0.08, 0.55, 0.45},
        {0.52, 0.47, 0, 0.6, 0.55, 0.45},
        {0.52, 0.1, 0.55, 0.6, 0.45, 0.75}}},
      {"desk",
       {{0, 0, 0.7, 1.4, 0.7, 0.78},
        {0, 0, 0, 0.08, 0.7, 0.7},
        {0.9, 0, 0, 1.4, 0.7, 0.7},
        {0.1, 0.6, 0.35, 0.9, 0.66, 0.7}}},
      {"crane", {{0, 0, 0, 0.5, 0.5, 0.1}, {0.2, 0.2, 0.1, 0.3, 0.3, 1.3}, {0.2, 0.2, 1.2, 1.1, 0.3, 1.3}, {0.95, 0.22, 0.8, 1.0, 0.28, 1.2}}},
      {"arrow", {{0, 0, 0, 0.8, 0.15, 0.1}, {0.8, -0.25, 0, 0.95, 0.4, 0.1}, {0.95, -0.1, 0, 1.1, 0.25, 0.1}, {0, 0.15, 0, 0.1, 0.3, 0.35}}},
      {"monitor", {{0, 0, 0, 0.5, 0.3, 0.04}, {0.2, 0.12, 0.04, 0.3, 0.2, 0.35}, {-0.3, 0.18, 0.35, 0.8, 0.24, 1.0}, {0.6, 0.15, 0.04, 0.7, 0.3, 0.12}}},
      {"piano",
       {{0, 0, 0.3, 1.5, 0.6, 1.3},
        {0, -0.3, 0.7, 1.5, 0.0, 0.78},
        {0.1, 0.0, 0, 0.2, 0.1, 0.3},
        {1.3, 0.0, 0, 1.4, 0.1, 0.3},
        {0.4, -0.6, 0, 0.9, -0.3, 0.5}}},
  };
  return kCatalog;
}

}  // namespace

std::vector<std::string> primitive_names() {
  std::vector<std::string> names;
  for (const auto& [name, boxes] : catalog()) names.push_back(name);
  return names;
}

io::TriangleMesh primitive_mesh(const std::string& name) {
  for (const auto& [n, boxes] : catalog()) {
    if (n != name) continue;
    std::vector<Eigen::Vector3d> v;
    std::vector<std::array<std::uint32_t, 3>> f;
    for (const auto& b : boxes) add_box(v, f, b);
    return io::make_mesh(std::move(v), std::move(f));
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown primitive '" + name + "'");
}

}  // namespace fls::bench

#include "fls/registration.hpp"

#include <chrono>
#include <cmath>

namespace fls {

BasisSpec FlsConfig::basis_spec(int dim) const {
  const double p = weight_exponent.value_or(0.5 * (dim + 1));
  return BasisSpec(Vector::Constant(dim, -domain_half_width), Vector::Constant(dim, domain_half_width), order, p);
}

PoseParams PoseParams::zero(int dim) { return {Vector::Zero(dim == 3 ? 3 : 1), Vector::Zero(dim)}; }

Vector PoseParams::stacked() const {
  Vector v(omega.size() + tau.size());
  v << omega, tau;
  return v;
}

Vector pack_pose(const Matrix& rotation, const Vector& translation) {
  const auto d = rotation.rows();
  Vector state(d * d + d);
  state.head(d * d) = Eigen::Map<const Vector>(rotation.data(), d * d);
  state.tail(d) = translation;
  return state;
}

std::pair<Matrix, Vector> unpack_pose(const Vector& state, int dim) {
  if (state.size() != dim * dim + dim) throw Error(ErrorCode::kDimensionMismatch, "pose state has the wrong length");
  Matrix r = Eigen::Map<const Matrix>(state.data(), dim, dim);
  return {std::move(r), state.tail(dim)};
}

Vector pose_plus(const Vector& state, const Vector& delta, int dim) {
  auto [r, t] = unpack_pose(state, dim);
  const int nw = dim == 3 ? 3 : 1;
  const Matrix dr = rotation_exp(delta.head(nw));
  return pack_pose(dr * r, t + delta.tail(dim));
}

PoseObjective::PoseObjective(BasisSpec spec, const PointCloud& source, std::vector<double> target_coefficients)
    : spec_(std::move(spec)), target_(std::move(target_coefficients)), accumulator_(spec_) {
  if (source.dim() != spec_.dim()) throw Error(ErrorCode::kDimensionMismatch, "pose objective: source/basis dimension");
  source.require_nonempty("pose objective");
  if (target_.size() != spec_.size()) throw Error(ErrorCode::kSpecMismatch, "pose objective: target coefficient length");
  source_ = reorder(source, canonical_order(source)).points();
  const auto w = sobolev_weights(spec_);
  sqrt_weights_.resize(w.size());
  for (std::size_t k = 0; k < w.size(); ++k) sqrt_weights_[k] = std::sqrt(w[k]);
}

Vector PoseObjective::residuals(const Matrix& rotation, const Vector& translation) {
  Matrix p = rotation * source_;
  p.colwise() += translation;
  const BasisMoments m = accumulator_.evaluate(p, nullptr, false);
  Vector r(num_residuals());
  for (std::size_t k = 0; k < spec_.size(); ++k) {
    r[static_cast<Eigen::Index>(k)] = sqrt_weights_[k] * (m.value[k] - target_[k]);
  }
  return r;
}

Matrix PoseObjective::jacobian(const Matrix& rotation, const Vector& translation, Vector* residuals_out) {
  const int d = dim();
  const Matrix q = rotation * source_;
  Matrix p = q;
  p.colwise() += translation;
  const BasisMoments m = accumulator_.evaluate(p, &q, true);
  const int nw = simd::moment_width(d);
  Matrix jac(num_residuals(), num_params());
  if (residuals_out != nullptr) residuals_out->resize(num_residuals());
  for (std::size_t k = 0; k < spec_.size(); ++k) {
    const auto row = static_cast<Eigen::Index>(k);
    const double w = sqrt_weights_[k];
    for (int j = 0; j < nw; ++j) jac(row, j) = w * m.moment[k * static_cast<std::size_t>(nw) + static_cast<std::size_t>(j)];
    for (int j = 0; j < d; ++j) jac(row, nw + j) = w * m.gradient[k * static_cast<std::size_t>(d) + static_cast<std::size_t>(j)];
    if (residuals_out != nullptr) (*residuals_out)[row] = w * (m.value[k] - target_[k]);
  }
  return jac;
}

LeastSquaresProblem PoseObjective::problem() {
  LeastSquaresProblem prob;
  const int d = dim();
  prob.num_params = num_params();
  prob.num_residuals = num_residuals();
  prob.residual_fn = [this, d](const Vector& state) {
    const auto [r, t] = unpack_pose(state, d);
    return residuals(r, t);
  };
  prob.jacobian_fn = [this, d](const Vector& state) {
    const auto [r, t] = unpack_pose(state, d);
    return jacobian(r, t);
  };
  prob.plus = [d](const Vector& state, const Vector& delta) { return pose_plus(state, delta, d); };
  return prob;
}

namespace {

PoseObjective objective_for(const PointCloud& source, const CoefficientVector& target,
                            const SimilarityTransform& transform) {
  if (source.dim() != target.spec.dim() || transform.dim() != source.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "pose residuals: source, basis and transform dimensions differ");
  }
  const Matrix scaled = transform.scale() * source.points();
  return PoseObjective(target.spec, PointCloud(scaled), target.values);
}

}  // namespace

Vector pose_residuals(const PointCloud& source, const CoefficientVector& target_coefficients,
                      const SimilarityTransform& transform) {
  auto obj = objective_for(source, target_coefficients, transform);
  return obj.residuals(transform.rotation(), transform.translation());
}

Matrix pose_jacobian(const PointCloud& source, const CoefficientVector& target_coefficients,
                     const SimilarityTransform& transform) {
  auto obj = objective_for(source, target_coefficients, transform);
  return obj.jacobian(transform.rotation(), transform.translation());
}

Vector RegistrationFrame::to_normalized_translation(const Matrix& rotation, const Vector& translation) const {
  return factor * (rotation * source_center + translation - target_center);
}

Vector RegistrationFrame::to_original_translation(const Matrix& rotation, const Vector& normalized_translation) const {
  return normalized_translation / factor + target_center - rotation * source_center;
}

RegistrationFrame make_registration_frame(const PointCloud& scaled_source, const PointCloud& target,
                                          const FlsConfig& config) {
  RegistrationFrame frame;
  frame.target_center = target.centroid();
  frame.source_center = config.pre_align_centroids ? scaled_source.centroid() : frame.target_center;
  const double r_src = (scaled_source.points().colwise() - frame.source_center).colwise().norm().maxCoeff();
  const double r_tgt = (target.points().colwise() - frame.target_center).colwise().norm().maxCoeff();
  const double radius = std::max(r_src, r_tgt);
  if (!(radius > 0.0)) {
    throw Error(ErrorCode::kDegenerateCloud, "registration: both clouds collapse to a single point");
  }
  frame.factor = (1.0 - config.margin) * config.domain_half_width / radius;
  return frame;
}

RegistrationResult register_pose(const PointCloud& source, const PointCloud& target, const FlsConfig& config,
                                 double scale, std::optional<SimilarityTransform> initial) {
  const auto start = std::chrono::steady_clock::now();
  source.require_nonempty("register: source");
  target.require_nonempty("register: target");
  if (source.dim() != target.dim()) throw Error(ErrorCode::kDimensionMismatch, "register: clouds differ in dimension");
  if (!(scale > 0.0) || !std::isfinite(scale)) throw Error(ErrorCode::kInvalidArgument, "register: scale must be > 0");
  if (!(config.margin >= 0.0 && config.margin < 1.0) || !(config.domain_half_width > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "register: margin must be in [0, 1) and the domain nonempty");
  }
  const int d = source.dim();
  const SimilarityTransform init = initial.value_or(SimilarityTransform::identity(d));
  if (init.dim() != d) throw Error(ErrorCode::kDimensionMismatch, "register: initial transform dimension");

  // Canonical point order makes every reduction below independent of input order.
  PointCloud scaled_source(scale * source.points());
  scaled_source = reorder(scaled_source, canonical_order(scaled_source));
  const PointCloud ordered_target = reorder(target, canonical_order(target));
  const RegistrationFrame frame = make_registration_frame(scaled_source, ordered_target, config);

  Matrix src_n = scaled_source.points();
  src_n.colwise() -= frame.source_center;
  src_n *= frame.factor;
  Matrix tgt_n = ordered_target.points();
  tgt_n.colwise() -= frame.target_center;
  tgt_n *= frame.factor;

  const BasisSpec spec = config.basis_spec(d);
  const CoefficientVector target_coeffs = coefficients(spec, PointCloud(std::move(tgt_n)));
  PoseObjective objective(spec, PointCloud(std::move(src_n)), target_coeffs.values);
  const LeastSquaresProblem problem = objective.problem();

  // Without a guess, start from the identity rotation with the frame's centers coincident.
  const Vector x0 = initial ? pack_pose(init.rotation(), frame.to_normalized_translation(init.rotation(), init.translation()))
                            : pack_pose(init.rotation(), Vector::Zero(d));
  const SolveResult solved = solve(problem, x0, config.solver);

  auto [r_n, t_n] = unpack_pose(solved.state, d);
  RegistrationResult result;
  result.transform = SimilarityTransform(scale, r_n, frame.to_original_translation(r_n, t_n));
  result.final_cost = solved.report.final_cost;
  result.iterations = solved.report.iterations;
  result.converged = solved.report.converged();
  result.termination = solved.report.termination;
  result.message = solved.report.message;
  result.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace fls

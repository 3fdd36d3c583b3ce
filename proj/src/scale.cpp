#include "fls/scale.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "fls/rng.hpp"

namespace fls {

double TrimSet::max() const {
  if (distances.empty()) throw Error(ErrorCode::kDegenerateCloud, "TRIM set is empty");
  return *std::max_element(distances.begin(), distances.end());
}

TrimSet trims(const PointCloud& cloud, std::optional<std::size_t> max_pairs, std::uint64_t seed) {
  const std::size_t n = cloud.size();
  if (n < 2) throw Error(ErrorCode::kDegenerateCloud, "trims: need at least 2 points, got " + std::to_string(n));
  const PointCloud ordered = reorder(cloud, canonical_order(cloud));
  const Matrix& p = ordered.points();
  for (Eigen::Index j = 1; j < p.cols(); ++j) {
    if (p.col(j) == p.col(j - 1)) {
      throw Error(ErrorCode::kDuplicatePoints,
                  "trims: cloud contains repeated points; pairwise distances assume a set without redundant elements");
    }
  }

  TrimSet out;
  out.source_count = n;
  const std::size_t all_pairs = n * (n - 1) / 2;
  if (!max_pairs || all_pairs <= *max_pairs) {
    out.distances.reserve(all_pairs);
    for (Eigen::Index i = 0; i < p.cols(); ++i) {
      for (Eigen::Index j = i + 1; j < p.cols(); ++j) out.distances.push_back((p.col(i) - p.col(j)).norm());
    }
    return out;
  }
  if (*max_pairs == 0) throw Error(ErrorCode::kInvalidArgument, "trims: max_pairs must be positive");
  out.exhaustive = false;
  out.distances.reserve(*max_pairs);
  CounterRng rng(seed, 0x7472696dULL);
  for (std::size_t s = 0; s < *max_pairs; ++s) {
    const auto i = static_cast<Eigen::Index>(rng.below(n));
    auto j = static_cast<Eigen::Index>(rng.below(n - 1));
    if (j >= i) ++j;
    out.distances.push_back((p.col(i) - p.col(j)).norm());
  }
  return out;
}

namespace {

BasisSpec scale_basis(const TrimSet& source, const TrimSet& target, const ScaleConfig& config) {
  if (!(config.max_scale > 1.0) || !(config.domain_padding >= 1.0) || config.order < 0) {
    throw Error(ErrorCode::kInvalidArgument, "scale config: max_scale > 1, domain_padding >= 1, order >= 0");
  }
  const double length = config.domain_padding * std::max(config.max_scale * source.max(), target.max());
  return BasisSpec(Vector::Zero(1), Vector::Constant(1, length), config.order, 1.0);
}

Matrix as_row(const std::vector<double>& v) {
  return Eigen::Map<const Matrix>(v.data(), 1, static_cast<Eigen::Index>(v.size()));
}

}  // namespace

ScaleObjective::ScaleObjective(const TrimSet& source, const TrimSet& target, const ScaleConfig& config)
    : spec_(scale_basis(source, target, config)), source_(as_row(source.distances)), accumulator_(spec_) {
  target_ = accumulator_.evaluate(as_row(target.distances), nullptr, false).value;
  const auto w = sobolev_weights(spec_);
  for (const double wk : w) sqrt_weights_.push_back(std::sqrt(wk));
}

Vector ScaleObjective::residuals(double log_scale) {
  const Matrix x = std::exp(log_scale) * source_;
  const auto m = accumulator_.evaluate(x, nullptr, false);
  Vector r(num_residuals());
  for (std::size_t k = 0; k < spec_.size(); ++k) {
    r[static_cast<Eigen::Index>(k)] = sqrt_weights_[k] * (m.value[k] - target_[k]);
  }
  return r;
}

Matrix ScaleObjective::jacobian(double log_scale) {
  // d/du f(e^u d) = f'(x) * x with x = e^u d: the 1-D lever moment.
  const Matrix x = std::exp(log_scale) * source_;
  const auto m = accumulator_.evaluate(x, &x, true);
  Matrix jac(num_residuals(), 1);
  for (std::size_t k = 0; k < spec_.size(); ++k) jac(static_cast<Eigen::Index>(k), 0) = sqrt_weights_[k] * m.moment[k];
  return jac;
}

LeastSquaresProblem ScaleObjective::problem() {
  LeastSquaresProblem prob;
  prob.num_params = 1;
  prob.num_residuals = num_residuals();
  prob.residual_fn = [this](const Vector& u) { return residuals(u[0]); };
  prob.jacobian_fn = [this](const Vector& u) { return jacobian(u[0]); };
  return prob;
}

ScaleEstimate estimate_scale(const PointCloud& source, const PointCloud& target, const ScaleConfig& config,
                             double initial_scale) {
  if (!(initial_scale > 0.0)) throw Error(ErrorCode::kInvalidArgument, "estimate_scale: initial scale must be > 0");
  const TrimSet ta = trims(source, config.max_pairs, config.seed);
  const TrimSet tb = trims(target, config.max_pairs, config.seed + 1);
  ScaleObjective objective(ta, tb, config);
  const LeastSquaresProblem problem = objective.problem();
  const SolveResult solved = solve(problem, Vector::Constant(1, std::log(initial_scale)), config.solver);

  ScaleEstimate est;
  est.report = solved.report;
  est.domain_length = objective.spec().upper()[0];
  const double lo = -std::log(config.max_scale);
  const double hi = std::log(config.max_scale);
  double u = solved.state[0];
  if (!std::isfinite(u) || u < lo || u > hi) {
    u = std::isfinite(u) ? std::clamp(u, lo, hi) : 0.0;
    est.clamped = true;
    est.report.message += (est.report.message.empty() ? "" : "; ") + std::string("scale clamped to search bounds");
  }
  est.scale = std::exp(u);
  return est;
}

RegistrationResult register_with_unknown_scale(const PointCloud& source, const PointCloud& target,
                                               const FlsConfig& config, const ScaleConfig& scale_config,
                                               std::optional<SimilarityTransform> initial, ScaleEstimate* scale_out) {
  const auto start = std::chrono::steady_clock::now();
  const double s0 = initial ? initial->scale() : 1.0;
  ScaleEstimate est = estimate_scale(source, target, scale_config, s0);
  RegistrationResult result = register_pose(source, target, config, est.scale, initial);
  result.converged = result.converged && est.report.converged() && !est.clamped;
  if (!est.report.converged() || est.clamped) {
    result.message += (result.message.empty() ? "" : "; ") + std::string("scale stage: ") +
                      std::string(to_string(est.report.termination)) + (est.clamped ? " (clamped)" : "");
  }
  result.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (scale_out != nullptr) *scale_out = std::move(est);
  return result;
}

}  // namespace fls

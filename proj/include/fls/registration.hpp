#pragma once

#include <optional>
#include <vector>

#include "fls/basis.hpp"
#include "fls/core.hpp"
#include "fls/solver.hpp"

namespace fls {

struct FlsConfig {
  /// Highest per-axis basis index; order + 1 functions per axis.
  int order = 4;
  /// Sobolev exponent p in (1 + |k|^2)^-p; defaults to (d + 1) / 2.
  std::optional<double> weight_exponent;
  SolverOptions solver;
  bool pre_align_centroids = true;
  /// The basis domain is [-domain_half_width, domain_half_width]^d.
  double domain_half_width = 1.0;
  /// Fraction of the domain half width left empty around the normalized clouds.
  double margin = 0.1;

  BasisSpec basis_spec(int dim) const;
};

/// Tangent step for a pose update: R <- exp([omega]x) R, t <- t + tau.
/// omega has one component in 2D and three in 3D.
struct PoseParams {
  Vector omega;
  Vector tau;

  static PoseParams zero(int dim);
  Vector stacked() const;
};

/// Packs (R, t) into the solver state vector [vec(R) column-major, t].
Vector pack_pose(const Matrix& rotation, const Vector& translation);
std::pair<Matrix, Vector> unpack_pose(const Vector& state, int dim);
Vector pose_plus(const Vector& state, const Vector& delta, int dim);

/// Weighted coefficient-difference objective for a fixed source cloud and
/// fixed target coefficients. The source is stored in canonical order, so
/// every evaluation is independent of the caller's point order.
class PoseObjective {
 public:
  PoseObjective(BasisSpec spec, const PointCloud& source, std::vector<double> target_coefficients);

  const BasisSpec& spec() const noexcept { return spec_; }
  int dim() const noexcept { return spec_.dim(); }
  int num_params() const noexcept { return dim() == 3 ? 6 : 3; }
  int num_residuals() const noexcept { return static_cast<int>(spec_.size()); }

  Vector residuals(const Matrix& rotation, const Vector& translation);
  /// Derivative of residuals() with respect to PoseParams at zero. Columns
  /// are (omega, tau). Optionally also returns the residuals at the same pose.
  Matrix jacobian(const Matrix& rotation, const Vector& translation, Vector* residuals_out = nullptr);

  /// Least-squares problem over the packed pose state. The returned problem
  /// refers to *this, which must outlive it.
  LeastSquaresProblem problem();

 private:
  BasisSpec spec_;
  Matrix source_;
  std::vector<double> target_;
  std::vector<double> sqrt_weights_;
  BasisAccumulator accumulator_;
};

/// Residual vector sqrt(lambda_k) * (mean_i f_k(s R a_i + t) - c_k^B).
Vector pose_residuals(const PointCloud& source, const CoefficientVector& target_coefficients,
                      const SimilarityTransform& transform);

/// Jacobian of pose_residuals with respect to PoseParams at zero.
Matrix pose_jacobian(const PointCloud& source, const CoefficientVector& target_coefficients,
                     const SimilarityTransform& transform);

/// Frame used internally by registration: both clouds are centered (each on
/// its own centroid when pre-aligning) and scaled by a common factor so the
/// centered union fits in the ball of radius (1 - margin) * half_width.
struct RegistrationFrame {
  Vector source_center;
  Vector target_center;
  double factor = 1.0;

  /// Maps an original-frame (R, t) with known scale to the normalized frame.
  Vector to_normalized_translation(const Matrix& rotation, const Vector& translation) const;
  Vector to_original_translation(const Matrix& rotation, const Vector& normalized_translation) const;
};

RegistrationFrame make_registration_frame(const PointCloud& scaled_source, const PointCloud& target,
                                          const FlsConfig& config);

/// Estimates (R, t) such that target ~ scale * R * source + t, with the scale
/// known. The initial guess's rotation and translation seed the solver; its
/// scale is ignored. Without a guess the solver starts from the identity
/// rotation with the two centroids aligned (when pre-aligning). The result is expressed in the caller's frame;
/// final_cost is the objective in the normalized frame. Solver failures are
/// reported through `converged`/`termination`, never thrown.
RegistrationResult register_pose(const PointCloud& source, const PointCloud& target, const FlsConfig& config,
                                 double scale = 1.0, std::optional<SimilarityTransform> initial = std::nullopt);

}  // namespace fls

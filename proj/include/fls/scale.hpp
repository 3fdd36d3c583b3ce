#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fls/basis.hpp"
#include "fls/registration.hpp"
#include "fls/solver.hpp"

namespace fls {

/// Pairwise intra-cloud distances: translation- and rotation-invariant
/// measurements of a cloud's shape and scale.
struct TrimSet {
  std::vector<double> distances;
  std::size_t source_count = 0;
  bool exhaustive = true;

  double max() const;
};

/// All N(N-1)/2 unordered pair distances when that count is at most
/// `max_pairs` (or when max_pairs is unset); otherwise `max_pairs` pairs drawn
/// uniformly with replacement from the N(N-1)/2 using `seed`. Pairs are drawn
/// over the canonically ordered cloud, so the result ignores input order.
/// Throws kDegenerateCloud for N < 2 and kDuplicatePoints for repeated points.
TrimSet trims(const PointCloud& cloud, std::optional<std::size_t> max_pairs = std::nullopt, std::uint64_t seed = 0);

struct ScaleConfig {
  /// Highest basis index of the 1-D basis (order + 1 residuals).
  int order = 4;
  /// Search bound: estimates are confined to [1 / max_scale, max_scale] and
  /// the basis domain is sized so every scaled distance in that range fits.
  double max_scale = 10.0;
  /// Domain length = domain_padding * max(max_scale * max TRIM_A, max TRIM_B).
  double domain_padding = 1.5;
  std::size_t max_pairs = 2'000'000;
  std::uint64_t seed = 0;
  SolverOptions solver;
};

/// The 1-D problem over u = ln(s): residual k is
///   sqrt(lambda_k) * (mean_pairs f_k(e^u * |a_i - a_j|) - mean_pairs f_k(|b_i - b_j|))
/// with lambda_k = (1 + k^2)^-1 on the domain [0, length].
class ScaleObjective {
 public:
  ScaleObjective(const TrimSet& source, const TrimSet& target, const ScaleConfig& config);

  const BasisSpec& spec() const noexcept { return spec_; }
  int num_residuals() const noexcept { return static_cast<int>(spec_.size()); }

  Vector residuals(double log_scale);
  Matrix jacobian(double log_scale);
  double cost(double log_scale) { return residuals(log_scale).squaredNorm(); }

  /// Refers to *this, which must outlive it.
  LeastSquaresProblem problem();

 private:
  BasisSpec spec_;
  Matrix source_;
  std::vector<double> target_;
  std::vector<double> sqrt_weights_;
  BasisAccumulator accumulator_;
};

struct ScaleEstimate {
  double scale = 1.0;
  bool clamped = false;
  double domain_length = 0.0;
  SolverReport report;
};

/// Scale s such that target ~ s * R * source + t for some rigid (R, t).
ScaleEstimate estimate_scale(const PointCloud& source, const PointCloud& target, const ScaleConfig& config = {},
                             double initial_scale = 1.0);

/// Scale from estimate_scale, then pose from register_pose with that scale
/// held fixed. The returned transform carries the estimated scale; the wall
/// time covers both stages.
RegistrationResult register_with_unknown_scale(const PointCloud& source, const PointCloud& target,
                                               const FlsConfig& config, const ScaleConfig& scale_config = {},
                                               std::optional<SimilarityTransform> initial = std::nullopt,
                                               ScaleEstimate* scale_out = nullptr);

}  // namespace fls

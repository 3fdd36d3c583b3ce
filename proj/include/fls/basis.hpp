#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "fls/core.hpp"
#include "fls/simd/basis_kernel.hpp"

namespace fls {

/// Tensor-product cosine basis on the box [lower, upper]:
///
///   f_k(x) = (1 / h_k) * prod_i cos(k_i * pi * (x_i - lower_i) / (upper_i - lower_i))
///
/// with k_i in [0, order] and h_k = sqrt(prod_i c_i), where c_i is the box
/// width when k_i = 0 and half the width otherwise. That choice makes the
/// family orthonormal on the box, including indices with zero components.
///
/// Flat index order is lexicographic with the last dimension fastest.
class BasisSpec {
 public:
  BasisSpec(Vector lower, Vector upper, int order, double weight_exponent);

  /// [-1, 1]^dim with Sobolev exponent (dim + 1) / 2.
  static BasisSpec unit_cube(int dim, int order);

  int dim() const noexcept { return static_cast<int>(lower_.size()); }
  int order() const noexcept { return order_; }
  int per_dim() const noexcept { return order_ + 1; }
  std::size_t size() const noexcept { return inv_norm_.size(); }
  const Vector& lower() const noexcept { return lower_; }
  const Vector& upper() const noexcept { return upper_; }
  double weight_exponent() const noexcept { return weight_exponent_; }

  /// pi / (upper_i - lower_i): the angular frequency of k_i = 1.
  double base_frequency(int axis) const { return freq_[static_cast<std::size_t>(axis)]; }

  /// 1 / h_k for each flat index.
  std::span<const double> inverse_norms() const noexcept { return inv_norm_; }

  std::vector<int> multi_index(std::size_t flat) const;
  std::size_t flat_index(std::span<const int> k) const;

  friend bool operator==(const BasisSpec& a, const BasisSpec& b);

 private:
  Vector lower_;
  Vector upper_;
  int order_;
  double weight_exponent_;
  std::vector<double> freq_;
  std::vector<double> inv_norm_;
};

struct CoefficientVector {
  std::vector<double> values;
  BasisSpec spec;
};

/// Direct evaluation of f_k(x) with libm cosines. Defined everywhere; points
/// outside the box see the periodic extension.
double basis_eval(const BasisSpec& spec, std::span<const int> k, const Eigen::Ref<const Vector>& x);

Vector basis_grad(const BasisSpec& spec, std::span<const int> k, const Eigen::Ref<const Vector>& x);

/// Mean of f_k over the cloud for every k. Bit-exactly invariant under
/// permutations of the input points.
CoefficientVector coefficients(const BasisSpec& spec, const PointCloud& cloud);

/// Same, for raw points stored as columns; any dimension the spec has (1-D included).
CoefficientVector coefficients(const BasisSpec& spec, const Matrix& points);

/// (1 + |k|^2)^(-p) for every flat index, p = spec.weight_exponent().
std::vector<double> sobolev_weights(const BasisSpec& spec);

/// sum_k w_k (a_k - b_k)^2 with w_k = 1 when weights are omitted.
double delta_distance_sq(const CoefficientVector& a, const CoefficientVector& b,
                         std::optional<std::span<const double>> weights = std::nullopt);

/// Means over points of f_k, and optionally of grad f_k and of
/// lever x grad f_k (cross product in 3D, its z component in 2D, the plain
/// product in 1D). Row-major per flat index.
struct BasisMoments {
  std::vector<double> value;     // size()
  std::vector<double> gradient;  // size() x dim
  std::vector<double> moment;    // size() x moment_width(dim)
};

/// Streaming evaluator that owns its scratch buffers; reuse one instance per
/// thread to avoid reallocation inside optimizer loops.
///
/// Points are reduced in the order given, in fixed blocks of
/// simd::kBlockPoints combined by a pairwise tree, so the result depends only
/// on the input order and never on the ISA or the thread count.
class BasisAccumulator {
 public:
  explicit BasisAccumulator(BasisSpec spec);

  const BasisSpec& spec() const noexcept { return spec_; }

  /// `points` is dim x N. `levers` (same shape) is required when gradients
  /// are requested.
  BasisMoments evaluate(const Matrix& points, const Matrix* levers, bool with_gradient);

  /// Same as evaluate() but with an explicit kernel, for equivalence tests.
  BasisMoments evaluate(const Matrix& points, const Matrix* levers, bool with_gradient, simd::Isa isa);

 private:
  BasisSpec spec_;
  std::vector<double> cos1_;
  std::vector<double> sin1_;
  std::vector<double> lever_;
  std::vector<double> weight_;
  std::vector<double> partials_;
};

}  // namespace fls

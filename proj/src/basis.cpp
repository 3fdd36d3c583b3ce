#include "fls/basis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

namespace fls {

BasisSpec::BasisSpec(Vector lower, Vector upper, int order, double weight_exponent)
    : lower_(std::move(lower)), upper_(std::move(upper)), order_(order), weight_exponent_(weight_exponent) {
  const auto d = lower_.size();
  if (d < 1 || d > 3 || upper_.size() != d) {
    throw Error(ErrorCode::kDimensionMismatch, "basis domain must be 1-, 2- or 3-dimensional with matching bounds");
  }
  if (order_ < 0) throw Error(ErrorCode::kInvalidArgument, "basis order must be >= 0");
  if (!(weight_exponent_ > 0.0)) throw Error(ErrorCode::kInvalidArgument, "weight exponent must be positive");
  if (!lower_.allFinite() || !upper_.allFinite()) throw Error(ErrorCode::kNonFinite, "basis bounds must be finite");
  for (Eigen::Index i = 0; i < d; ++i) {
    if (!(upper_[i] > lower_[i])) {
      throw Error(ErrorCode::kInvalidArgument, "basis upper bound must exceed lower bound on every axis");
    }
    freq_.push_back(std::numbers::pi / (upper_[i] - lower_[i]));
  }
  std::size_t n = 1;
  for (Eigen::Index i = 0; i < d; ++i) n *= static_cast<std::size_t>(per_dim());
  inv_norm_.resize(n);
  for (std::size_t flat = 0; flat < n; ++flat) {
    const auto k = multi_index(flat);
    double h2 = 1.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      const double width = upper_[i] - lower_[i];
      h2 *= k[static_cast<std::size_t>(i)] == 0 ? width : 0.5 * width;
    }
    inv_norm_[flat] = 1.0 / std::sqrt(h2);
  }
}

BasisSpec BasisSpec::unit_cube(int dim, int order) {
  return BasisSpec(Vector::Constant(dim, -1.0), Vector::Constant(dim, 1.0), order, 0.5 * (dim + 1));
}

std::vector<int> BasisSpec::multi_index(std::size_t flat) const {
  std::vector<int> k(static_cast<std::size_t>(dim()));
  for (int i = dim() - 1; i >= 0; --i) {
    k[static_cast<std::size_t>(i)] = static_cast<int>(flat % static_cast<std::size_t>(per_dim()));
    flat /= static_cast<std::size_t>(per_dim());
  }
  return k;
}

std::size_t BasisSpec::flat_index(std::span<const int> k) const {
  if (static_cast<int>(k.size()) != dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "multi-index length differs from basis dimension");
  }
  std::size_t flat = 0;
  for (const int ki : k) {
    if (ki < 0 || ki > order_) throw Error(ErrorCode::kInvalidArgument, "multi-index component out of range");
    flat = flat * static_cast<std::size_t>(per_dim()) + static_cast<std::size_t>(ki);
  }
  return flat;
}

bool operator==(const BasisSpec& a, const BasisSpec& b) {
  return a.order_ == b.order_ && a.weight_exponent_ == b.weight_exponent_ && a.lower_ == b.lower_ &&
         a.upper_ == b.upper_;
}

double basis_eval(const BasisSpec& spec, std::span<const int> k, const Eigen::Ref<const Vector>& x) {
  if (x.size() != spec.dim()) throw Error(ErrorCode::kDimensionMismatch, "basis_eval: point dimension differs");
  const std::size_t flat = spec.flat_index(k);
  double prod = spec.inverse_norms()[flat];
  for (int i = 0; i < spec.dim(); ++i) {
    prod *= std::cos(k[static_cast<std::size_t>(i)] * spec.base_frequency(i) * (x[i] - spec.lower()[i]));
  }
  return prod;
}

Vector basis_grad(const BasisSpec& spec, std::span<const int> k, const Eigen::Ref<const Vector>& x) {
  if (x.size() != spec.dim()) throw Error(ErrorCode::kDimensionMismatch, "basis_grad: point dimension differs");
  const std::size_t flat = spec.flat_index(k);
  const int d = spec.dim();
  Vector c(d), ds(d);
  for (int i = 0; i < d; ++i) {
    const double kbar = k[static_cast<std::size_t>(i)] * spec.base_frequency(i);
    const double theta = kbar * (x[i] - spec.lower()[i]);
    c[i] = std::cos(theta);
    ds[i] = -kbar * std::sin(theta);
  }
  Vector g(d);
  for (int i = 0; i < d; ++i) {
    double prod = spec.inverse_norms()[flat] * ds[i];
    for (int j = 0; j < d; ++j) {
      if (j != i) prod *= c[j];
    }
    g[i] = prod;
  }
  return g;
}

CoefficientVector coefficients(const BasisSpec& spec, const PointCloud& cloud) {
  if (cloud.dim() != spec.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "coefficients: cloud is " + std::to_string(cloud.dim()) +
                                                   "-D, basis is " + std::to_string(spec.dim()) + "-D");
  }
  cloud.require_nonempty("coefficients");
  return coefficients(spec, cloud.points());
}

CoefficientVector coefficients(const BasisSpec& spec, const Matrix& points) {
  if (points.rows() != spec.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "coefficients: points are " + std::to_string(points.rows()) +
                                                   "-D, basis is " + std::to_string(spec.dim()) + "-D");
  }
  if (points.cols() == 0) throw Error(ErrorCode::kInvalidArgument, "coefficients: no points");
  if (!points.allFinite()) throw Error(ErrorCode::kNonFinite, "coefficients: points contain NaN or Inf");
  // Lexicographic order first so the reduction does not depend on input order.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(points.cols()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index r = 0; r < points.rows(); ++r) {
      if (points(r, a) < points(r, b)) return true;
      if (points(r, b) < points(r, a)) return false;
    }
    return false;
  });
  Matrix ordered(points.rows(), points.cols());
  for (std::size_t j = 0; j < order.size(); ++j) ordered.col(static_cast<Eigen::Index>(j)) = points.col(order[j]);
  BasisAccumulator acc(spec);
  auto moments = acc.evaluate(ordered, nullptr, false);
  return {std::move(moments.value), spec};
}

std::vector<double> sobolev_weights(const BasisSpec& spec) {
  std::vector<double> w(spec.size());
  for (std::size_t flat = 0; flat < w.size(); ++flat) {
    double norm2 = 0.0;
    for (const int ki : spec.multi_index(flat)) norm2 += static_cast<double>(ki) * ki;
    w[flat] = std::pow(1.0 + norm2, -spec.weight_exponent());
  }
  return w;
}

double delta_distance_sq(const CoefficientVector& a, const CoefficientVector& b,
                         std::optional<std::span<const double>> weights) {
  if (!(a.spec == b.spec) || a.values.size() != b.values.size()) {
    throw Error(ErrorCode::kSpecMismatch, "delta_distance_sq: coefficient vectors come from different bases");
  }
  if (weights && weights->size() != a.values.size()) {
    throw Error(ErrorCode::kSpecMismatch, "delta_distance_sq: weight vector length differs from basis size");
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < a.values.size(); ++k) {
    const double diff = a.values[k] - b.values[k];
    sum += (weights ? (*weights)[k] : 1.0) * diff * diff;
  }
  return sum;
}

BasisAccumulator::BasisAccumulator(BasisSpec spec) : spec_(std::move(spec)) {
  const auto d = static_cast<std::size_t>(spec_.dim());
  cos1_.resize(d * simd::kBlockPoints);
  sin1_.resize(d * simd::kBlockPoints);
  lever_.resize(d * simd::kBlockPoints);
  weight_.resize(simd::kBlockPoints);
}

BasisMoments BasisAccumulator::evaluate(const Matrix& points, const Matrix* levers, bool with_gradient) {
  return evaluate(points, levers, with_gradient, simd::active_isa());
}

namespace {

void pairwise_fold(double* partials, std::size_t lo, std::size_t hi, std::size_t width) {
  if (hi - lo <= 1) return;
  const std::size_t mid = lo + (hi - lo) / 2;
  pairwise_fold(partials, lo, mid, width);
  pairwise_fold(partials, mid, hi, width);
  double* dst = partials + lo * width;
  const double* src = partials + mid * width;
  for (std::size_t j = 0; j < width; ++j) dst[j] += src[j];
}

}  // namespace

BasisMoments BasisAccumulator::evaluate(const Matrix& points, const Matrix* levers, bool with_gradient,
                                        simd::Isa isa) {
  const int d = spec_.dim();
  if (points.rows() != d) throw Error(ErrorCode::kDimensionMismatch, "accumulate: point dimension differs from basis");
  const auto n = static_cast<std::size_t>(points.cols());
  if (n == 0) throw Error(ErrorCode::kDegenerateCloud, "accumulate: no points");
  if (with_gradient && (levers == nullptr || levers->rows() != d || levers->cols() != points.cols())) {
    throw Error(ErrorCode::kDimensionMismatch, "accumulate: gradient requested without matching lever arms");
  }

  const int stride = simd::output_stride(d, with_gradient);
  const std::size_t width = spec_.size() * static_cast<std::size_t>(stride);
  const std::size_t blocks = (n + simd::kBlockPoints - 1) / simd::kBlockPoints;
  partials_.assign(blocks * width, 0.0);
  const simd::KernelFn kernel = simd::kernel_for(isa);

  simd::KernelBlock block;
  block.dim = d;
  block.per_dim = spec_.per_dim();
  block.with_gradient = with_gradient;
  block.weight = weight_.data();
  for (int i = 0; i < d; ++i) {
    const auto off = static_cast<std::size_t>(i) * simd::kBlockPoints;
    block.cos1[static_cast<std::size_t>(i)] = cos1_.data() + off;
    block.sin1[static_cast<std::size_t>(i)] = sin1_.data() + off;
    block.lever[static_cast<std::size_t>(i)] = lever_.data() + off;
    block.freq[static_cast<std::size_t>(i)] = spec_.base_frequency(i);
  }

  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t first = b * simd::kBlockPoints;
    const std::size_t count = std::min(simd::kBlockPoints, n - first);
    const std::size_t padded = (count + simd::kLanes - 1) / simd::kLanes * simd::kLanes;
    for (int i = 0; i < d; ++i) {
      const auto off = static_cast<std::size_t>(i) * simd::kBlockPoints;
      const double lo = spec_.lower()[i];
      const double freq = spec_.base_frequency(i);
      for (std::size_t j = 0; j < count; ++j) {
        const auto col = static_cast<Eigen::Index>(first + j);
        const double theta = (points(i, col) - lo) * freq;
        cos1_[off + j] = std::cos(theta);
        sin1_[off + j] = std::sin(theta);
        lever_[off + j] = with_gradient ? (*levers)(i, col) : 0.0;
      }
      for (std::size_t j = count; j < padded; ++j) {
        cos1_[off + j] = 1.0;
        sin1_[off + j] = 0.0;
        lever_[off + j] = 0.0;
      }
    }
    for (std::size_t j = 0; j < padded; ++j) weight_[j] = j < count ? 1.0 : 0.0;
    block.count = padded;
    kernel(block, partials_.data() + b * width);
  }
  pairwise_fold(partials_.data(), 0, blocks, width);

  const std::size_t nb = spec_.size();
  const auto mw = static_cast<std::size_t>(simd::moment_width(d));
  const double inv_n = 1.0 / static_cast<double>(n);
  BasisMoments out;
  out.value.resize(nb);
  if (with_gradient) {
    out.gradient.resize(nb * static_cast<std::size_t>(d));
    out.moment.resize(nb * mw);
  }
  const auto inv_norm = spec_.inverse_norms();
  for (std::size_t k = 0; k < nb; ++k) {
    const double* src = partials_.data() + k * static_cast<std::size_t>(stride);
    const double scale = inv_norm[k] * inv_n;
    out.value[k] = src[0] * scale;
    if (with_gradient) {
      for (int i = 0; i < d; ++i) out.gradient[k * static_cast<std::size_t>(d) + static_cast<std::size_t>(i)] = src[1 + i] * scale;
      for (std::size_t m = 0; m < mw; ++m) out.moment[k * mw + m] = src[1 + static_cast<std::size_t>(d) + m] * scale;
    }
  }
  return out;
}

}  // namespace fls

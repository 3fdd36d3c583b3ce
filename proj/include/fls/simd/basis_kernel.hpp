#pragma once

// Inner loop of every coefficient, residual and Jacobian evaluation: for a
// block of points, accumulate per basis index
//
//   value    sum_i prod_d cos(k_d * theta_id)
//   gradient sum_i d/dx_d of the product                  (optional)
//   moment   sum_i lever_i x gradient_i                   (optional)
//
// where theta_id = freq_d * (x_id - lower_d). cos(k theta) and sin(k theta)
// come from the Chebyshev recurrence seeded with cos(theta), sin(theta), so
// the kernel needs no transcendental calls. The 1/h_k normalization is
// applied by the caller after reduction.
//
// Both variants consume points in groups of kLanes with one accumulator per
// lane and fold lanes as (l0 + l1) + (l2 + l3). They use only separate
// multiplies and adds (no FMA), so they produce bit-identical sums.

#include <array>
#include <cstddef>

namespace fls::simd {

inline constexpr std::size_t kLanes = 4;
inline constexpr std::size_t kBlockPoints = 256;

struct KernelBlock {
  int dim = 3;
  int per_dim = 5;
  std::size_t count = 0;  // multiple of kLanes, <= kBlockPoints
  std::array<const double*, 3> cos1{};
  std::array<const double*, 3> sin1{};
  std::array<const double*, 3> lever{};
  const double* weight = nullptr;
  std::array<double, 3> freq{};
  bool with_gradient = false;
};

/// Number of lever-moment components: the 3D cross product has three,
/// the 2D cross product and the 1D product have one.
constexpr int moment_width(int dim) { return dim == 3 ? 3 : 1; }

constexpr int output_stride(int dim, bool with_gradient) {
  return with_gradient ? 1 + dim + moment_width(dim) : 1;
}

/// Overwrites out[0 .. num_basis * output_stride) with the block sums.
using KernelFn = void (*)(const KernelBlock&, double* out);

void accumulate_scalar(const KernelBlock& block, double* out);
#if defined(__x86_64__) || defined(_M_X64)
void accumulate_avx2(const KernelBlock& block, double* out);
#endif

enum class Isa { kScalar, kAvx2 };

const char* to_string(Isa isa);

/// Best variant this CPU supports.
Isa detected_isa();

/// Variant used by the library: detected_isa() unless FLS_SIMD=scalar is set
/// in the environment or an override was installed.
Isa active_isa();

/// Forces a variant (tests). Requesting an unsupported ISA falls back to scalar.
void set_isa_override(Isa isa);
void clear_isa_override();

KernelFn kernel_for(Isa isa);

}  // namespace fls::simd

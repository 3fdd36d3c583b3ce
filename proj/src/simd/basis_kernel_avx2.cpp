// Compiled with -mavx2 (and without -mfma); only called after a CPUID check.

#include <immintrin.h>

#include <vector>

// std::vector<__m256d> is fine with C++17 aligned new; the attribute note is noise.
#pragma GCC diagnostic ignored "-Wignored-attributes"

#include "fls/simd/basis_kernel.hpp"

namespace fls::simd {

namespace {

static_assert(kLanes == 4, "AVX2 kernel packs four doubles per register");

struct alignas(32) Vec4 {
  double v[4];
};

struct Tables {
  Tables(int dim, int per_dim)
      : per_dim(per_dim),
        c(static_cast<std::size_t>(dim * per_dim)),
        g(static_cast<std::size_t>(dim * per_dim)),
        neg_kfreq(static_cast<std::size_t>(dim * per_dim)) {}

  __m256d* cos_row(int d, int k) { return &c[static_cast<std::size_t>(d * per_dim + k)]; }
  __m256d* grad_row(int d, int k) { return &g[static_cast<std::size_t>(d * per_dim + k)]; }

  int per_dim;
  std::vector<__m256d> c;
  std::vector<__m256d> g;
  std::vector<double> neg_kfreq;
};

template <bool Grad>
void fill_tables(const KernelBlock& b, std::size_t base, Tables& t) {
  const int m = b.per_dim;
  const __m256d w = _mm256_loadu_pd(b.weight + base);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d zero = _mm256_setzero_pd();
  for (int d = 0; d < b.dim; ++d) {
    *t.cos_row(d, 0) = one;
    if (m == 1) {
      if (d == 0) *t.cos_row(d, 0) = w;
      if constexpr (Grad) *t.grad_row(d, 0) = zero;
      continue;
    }
    const __m256d c1 = _mm256_loadu_pd(b.cos1[d] + base);
    const __m256d two_c = _mm256_add_pd(c1, c1);
    __m256d s_prev = zero;
    __m256d s_cur = _mm256_loadu_pd(b.sin1[d] + base);
    *t.cos_row(d, 1) = c1;
    if constexpr (Grad) {
      *t.grad_row(d, 0) = zero;
      *t.grad_row(d, 1) = _mm256_mul_pd(_mm256_set1_pd(t.neg_kfreq[static_cast<std::size_t>(d * m + 1)]), s_cur);
    }
    for (int k = 2; k < m; ++k) {
      *t.cos_row(d, k) = _mm256_sub_pd(_mm256_mul_pd(two_c, *t.cos_row(d, k - 1)), *t.cos_row(d, k - 2));
      if constexpr (Grad) {
        const __m256d s_next = _mm256_sub_pd(_mm256_mul_pd(two_c, s_cur), s_prev);
        s_prev = s_cur;
        s_cur = s_next;
        *t.grad_row(d, k) = _mm256_mul_pd(_mm256_set1_pd(t.neg_kfreq[static_cast<std::size_t>(d * m + k)]), s_next);
      }
    }
    if (d == 0) {
      for (int k = 0; k < m; ++k) {
        *t.cos_row(0, k) = _mm256_mul_pd(*t.cos_row(0, k), w);
        if constexpr (Grad) *t.grad_row(0, k) = _mm256_mul_pd(*t.grad_row(0, k), w);
      }
    }
  }
}

inline void add_to(__m256d* slot, __m256d x) { *slot = _mm256_add_pd(*slot, x); }

template <int D, bool Grad>
void run(const KernelBlock& b, double* out) {
  const int m = b.per_dim;
  std::size_t nb = 1;
  for (int d = 0; d < D; ++d) nb *= static_cast<std::size_t>(m);
  constexpr int stride = output_stride(D, Grad);
  std::vector<__m256d> acc(nb * stride, _mm256_setzero_pd());
  Tables t(D, m);
  for (int d = 0; d < D; ++d) {
    for (int k = 0; k < m; ++k) t.neg_kfreq[static_cast<std::size_t>(d * m + k)] = -(static_cast<double>(k) * b.freq[d]);
  }

  for (std::size_t base = 0; base < b.count; base += kLanes) {
    fill_tables<Grad>(b, base, t);
    __m256d q[3] = {_mm256_setzero_pd(), _mm256_setzero_pd(), _mm256_setzero_pd()};
    if constexpr (Grad) {
      for (int d = 0; d < D; ++d) q[d] = _mm256_loadu_pd(b.lever[d] + base);
    }
    __m256d* a = acc.data();
    if constexpr (D == 1) {
      for (int k0 = 0; k0 < m; ++k0, a += stride) {
        add_to(a, *t.cos_row(0, k0));
        if constexpr (Grad) {
          const __m256d gx = *t.grad_row(0, k0);
          add_to(a + 1, gx);
          add_to(a + 2, _mm256_mul_pd(q[0], gx));
        }
      }
    } else if constexpr (D == 2) {
      for (int k0 = 0; k0 < m; ++k0) {
        const __m256d c0 = *t.cos_row(0, k0);
        const __m256d g0 = *t.grad_row(0, k0);
        for (int k1 = 0; k1 < m; ++k1, a += stride) {
          const __m256d c1 = *t.cos_row(1, k1);
          add_to(a, _mm256_mul_pd(c0, c1));
          if constexpr (Grad) {
            const __m256d gx = _mm256_mul_pd(g0, c1);
            const __m256d gy = _mm256_mul_pd(c0, *t.grad_row(1, k1));
            add_to(a + 1, gx);
            add_to(a + 2, gy);
            add_to(a + 3, _mm256_sub_pd(_mm256_mul_pd(q[0], gy), _mm256_mul_pd(q[1], gx)));
          }
        }
      }
    } else {
      for (int k0 = 0; k0 < m; ++k0) {
        const __m256d c0 = *t.cos_row(0, k0);
        const __m256d g0 = *t.grad_row(0, k0);
        for (int k1 = 0; k1 < m; ++k1) {
          const __m256d c1 = *t.cos_row(1, k1);
          const __m256d c01 = _mm256_mul_pd(c0, c1);
          __m256d g0c1 = c01;
          __m256d c0g1 = c01;
          if constexpr (Grad) {
            g0c1 = _mm256_mul_pd(g0, c1);
            c0g1 = _mm256_mul_pd(c0, *t.grad_row(1, k1));
          }
          for (int k2 = 0; k2 < m; ++k2, a += stride) {
            const __m256d c2 = *t.cos_row(2, k2);
            add_to(a, _mm256_mul_pd(c01, c2));
            if constexpr (Grad) {
              const __m256d gx = _mm256_mul_pd(g0c1, c2);
              const __m256d gy = _mm256_mul_pd(c0g1, c2);
              const __m256d gz = _mm256_mul_pd(c01, *t.grad_row(2, k2));
              add_to(a + 1, gx);
              add_to(a + 2, gy);
              add_to(a + 3, gz);
              add_to(a + 4, _mm256_sub_pd(_mm256_mul_pd(q[1], gz), _mm256_mul_pd(q[2], gy)));
              add_to(a + 5, _mm256_sub_pd(_mm256_mul_pd(q[2], gx), _mm256_mul_pd(q[0], gz)));
              add_to(a + 6, _mm256_sub_pd(_mm256_mul_pd(q[0], gy), _mm256_mul_pd(q[1], gx)));
            }
          }
        }
      }
    }
  }

  const std::size_t total = nb * stride;
  for (std::size_t j = 0; j < total; ++j) {
    Vec4 v;
    _mm256_store_pd(v.v, acc[j]);
    out[j] = (v.v[0] + v.v[1]) + (v.v[2] + v.v[3]);
  }
}

}  // namespace

void accumulate_avx2(const KernelBlock& block, double* out) {
  switch (block.dim) {
    case 1: return block.with_gradient ? run<1, true>(block, out) : run<1, false>(block, out);
    case 2: return block.with_gradient ? run<2, true>(block, out) : run<2, false>(block, out);
    default: return block.with_gradient ? run<3, true>(block, out) : run<3, false>(block, out);
  }
}

}  // namespace fls::simd

#include <vector>

#include "fls/simd/basis_kernel.hpp"

namespace fls::simd {

namespace {

constexpr std::size_t L = kLanes;

// Tables are laid out [dim][k][lane].
struct Tables {
  Tables(int dim, int per_dim)
      : per_dim(per_dim),
        c(static_cast<std::size_t>(dim * per_dim) * L),
        g(static_cast<std::size_t>(dim * per_dim) * L),
        neg_kfreq(static_cast<std::size_t>(dim * per_dim)) {}

  double* cos_row(int d, int k) { return &c[(static_cast<std::size_t>(d * per_dim + k)) * L]; }
  double* grad_row(int d, int k) { return &g[(static_cast<std::size_t>(d * per_dim + k)) * L]; }

  int per_dim;
  std::vector<double> c;
  std::vector<double> g;
  std::vector<double> neg_kfreq;
};

template <bool Grad>
void fill_tables(const KernelBlock& b, std::size_t base, Tables& t) {
  const int m = b.per_dim;
  for (int d = 0; d < b.dim; ++d) {
    double* c0 = t.cos_row(d, 0);
    for (std::size_t l = 0; l < L; ++l) c0[l] = 1.0;
    if (m == 1) {
      if (d == 0) {
        for (std::size_t l = 0; l < L; ++l) c0[l] = b.weight[base + l];
      }
      if constexpr (Grad) {
        double* g0 = t.grad_row(d, 0);
        for (std::size_t l = 0; l < L; ++l) g0[l] = 0.0;
      }
      continue;
    }
    double s_prev[L], s_cur[L], two_c[L];
    double* c1 = t.cos_row(d, 1);
    for (std::size_t l = 0; l < L; ++l) {
      c1[l] = b.cos1[d][base + l];
      two_c[l] = c1[l] + c1[l];
      s_prev[l] = 0.0;
      s_cur[l] = b.sin1[d][base + l];
    }
    if constexpr (Grad) {
      double* g0 = t.grad_row(d, 0);
      double* g1 = t.grad_row(d, 1);
      const double nk = t.neg_kfreq[static_cast<std::size_t>(d * m + 1)];
      for (std::size_t l = 0; l < L; ++l) {
        g0[l] = 0.0;
        g1[l] = nk * s_cur[l];
      }
    }
    for (int k = 2; k < m; ++k) {
      const double* cm1 = t.cos_row(d, k - 1);
      const double* cm2 = t.cos_row(d, k - 2);
      double* ck = t.cos_row(d, k);
      for (std::size_t l = 0; l < L; ++l) ck[l] = two_c[l] * cm1[l] - cm2[l];
      if constexpr (Grad) {
        double* gk = t.grad_row(d, k);
        const double nk = t.neg_kfreq[static_cast<std::size_t>(d * m + k)];
        for (std::size_t l = 0; l < L; ++l) {
          const double s_next = two_c[l] * s_cur[l] - s_prev[l];
          s_prev[l] = s_cur[l];
          s_cur[l] = s_next;
          gk[l] = nk * s_next;
        }
      }
    }
    if (d == 0) {
      for (int k = 0; k < m; ++k) {
        double* ck = t.cos_row(0, k);
        for (std::size_t l = 0; l < L; ++l) ck[l] = ck[l] * b.weight[base + l];
        if constexpr (Grad) {
          double* gk = t.grad_row(0, k);
          for (std::size_t l = 0; l < L; ++l) gk[l] = gk[l] * b.weight[base + l];
        }
      }
    }
  }
}

template <int D, bool Grad>
void run(const KernelBlock& b, double* out) {
  const int m = b.per_dim;
  std::size_t nb = 1;
  for (int d = 0; d < D; ++d) nb *= static_cast<std::size_t>(m);
  constexpr int stride = output_stride(D, Grad);
  std::vector<double> acc(nb * stride * L, 0.0);
  Tables t(D, m);
  for (int d = 0; d < D; ++d) {
    for (int k = 0; k < m; ++k) t.neg_kfreq[static_cast<std::size_t>(d * m + k)] = -(static_cast<double>(k) * b.freq[d]);
  }

  for (std::size_t base = 0; base < b.count; base += L) {
    fill_tables<Grad>(b, base, t);
    double q[3][L] = {};
    if constexpr (Grad) {
      for (int d = 0; d < D; ++d) {
        for (std::size_t l = 0; l < L; ++l) q[d][l] = b.lever[d][base + l];
      }
    }
    double* a = acc.data();
    if constexpr (D == 1) {
      for (int k0 = 0; k0 < m; ++k0, a += stride * L) {
        const double* c0 = t.cos_row(0, k0);
        for (std::size_t l = 0; l < L; ++l) {
          a[l] = a[l] + c0[l];
          if constexpr (Grad) {
            const double gx = t.grad_row(0, k0)[l];
            a[L + l] = a[L + l] + gx;
            a[2 * L + l] = a[2 * L + l] + q[0][l] * gx;
          }
        }
      }
    } else if constexpr (D == 2) {
      for (int k0 = 0; k0 < m; ++k0) {
        const double* c0 = t.cos_row(0, k0);
        const double* g0 = t.grad_row(0, k0);
        for (int k1 = 0; k1 < m; ++k1, a += stride * L) {
          const double* c1 = t.cos_row(1, k1);
          const double* g1 = t.grad_row(1, k1);
          for (std::size_t l = 0; l < L; ++l) {
            a[l] = a[l] + c0[l] * c1[l];
            if constexpr (Grad) {
              const double gx = g0[l] * c1[l];
              const double gy = c0[l] * g1[l];
              a[L + l] = a[L + l] + gx;
              a[2 * L + l] = a[2 * L + l] + gy;
              a[3 * L + l] = a[3 * L + l] + (q[0][l] * gy - q[1][l] * gx);
            }
          }
        }
      }
    } else {
      for (int k0 = 0; k0 < m; ++k0) {
        const double* c0 = t.cos_row(0, k0);
        const double* g0 = t.grad_row(0, k0);
        for (int k1 = 0; k1 < m; ++k1) {
          const double* c1 = t.cos_row(1, k1);
          const double* g1 = t.grad_row(1, k1);
          double c01[L], g0c1[L], c0g1[L];
          for (std::size_t l = 0; l < L; ++l) {
            c01[l] = c0[l] * c1[l];
            if constexpr (Grad) {
              g0c1[l] = g0[l] * c1[l];
              c0g1[l] = c0[l] * g1[l];
            }
          }
          for (int k2 = 0; k2 < m; ++k2, a += stride * L) {
            const double* c2 = t.cos_row(2, k2);
            const double* g2 = t.grad_row(2, k2);
            for (std::size_t l = 0; l < L; ++l) {
              a[l] = a[l] + c01[l] * c2[l];
              if constexpr (Grad) {
                const double gx = g0c1[l] * c2[l];
                const double gy = c0g1[l] * c2[l];
                const double gz = c01[l] * g2[l];
                a[L + l] = a[L + l] + gx;
                a[2 * L + l] = a[2 * L + l] + gy;
                a[3 * L + l] = a[3 * L + l] + gz;
                a[4 * L + l] = a[4 * L + l] + (q[1][l] * gz - q[2][l] * gy);
                a[5 * L + l] = a[5 * L + l] + (q[2][l] * gx - q[0][l] * gz);
                a[6 * L + l] = a[6 * L + l] + (q[0][l] * gy - q[1][l] * gx);
              }
            }
          }
        }
      }
    }
  }

  const std::size_t total = nb * stride;
  for (std::size_t j = 0; j < total; ++j) {
    const double* v = &acc[j * L];
    out[j] = (v[0] + v[1]) + (v[2] + v[3]);
  }
}

}  // namespace

void accumulate_scalar(const KernelBlock& block, double* out) {
  switch (block.dim) {
    case 1: return block.with_gradient ? run<1, true>(block, out) : run<1, false>(block, out);
    case 2: return block.with_gradient ? run<2, true>(block, out) : run<2, false>(block, out);
    default: return block.with_gradient ? run<3, true>(block, out) : run<3, false>(block, out);
  }
}

}  // namespace fls::simd

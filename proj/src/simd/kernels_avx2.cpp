// AVX2 + FMA variants of the batched kernels. Lanes are processed four at a
// time; every lane count is a multiple of kLaneAlign.

#include <immintrin.h>

#include <cmath>
#include <vector>

#include "spectral_homotopy/simd/kernels.hpp"

namespace spectral_homotopy::simd {
namespace {

struct cvec {
  __m256d re;
  __m256d im;
};

inline cvec load(const double* re, const double* im) { return {_mm256_loadu_pd(re), _mm256_loadu_pd(im)}; }
inline void store(double* re, double* im, cvec v) {
  _mm256_storeu_pd(re, v.re);
  _mm256_storeu_pd(im, v.im);
}
inline cvec zero() { return {_mm256_setzero_pd(), _mm256_setzero_pd()}; }

// acc + a * b
inline cvec fmadd(cvec a, cvec b, cvec acc) {
  acc.re = _mm256_fmadd_pd(a.re, b.re, acc.re);
  acc.re = _mm256_fnmadd_pd(a.im, b.im, acc.re);
  acc.im = _mm256_fmadd_pd(a.re, b.im, acc.im);
  acc.im = _mm256_fmadd_pd(a.im, b.re, acc.im);
  return acc;
}
// acc + conj(a) * b
inline cvec fmadd_conj(cvec a, cvec b, cvec acc) {
  acc.re = _mm256_fmadd_pd(a.re, b.re, acc.re);
  acc.re = _mm256_fmadd_pd(a.im, b.im, acc.re);
  acc.im = _mm256_fmadd_pd(a.re, b.im, acc.im);
  acc.im = _mm256_fnmadd_pd(a.im, b.re, acc.im);
  return acc;
}
// acc - a * b
inline cvec fnmadd(cvec a, cvec b, cvec acc) {
  acc.re = _mm256_fnmadd_pd(a.re, b.re, acc.re);
  acc.re = _mm256_fmadd_pd(a.im, b.im, acc.re);
  acc.im = _mm256_fnmadd_pd(a.re, b.im, acc.im);
  acc.im = _mm256_fnmadd_pd(a.im, b.re, acc.im);
  return acc;
}
inline cvec broadcast(double re, double im) { return {_mm256_set1_pd(re), _mm256_set1_pd(im)}; }

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void triangular_resolvent(SharedRef T, SharedRef R, const double* z_re, const double* z_im,
                          BatchRef out) {
  const int n = T.rows;
  const int q = R.cols;
  const __m256d one = _mm256_set1_pd(1.0);
  std::vector<cvec> inv_diag(n);
  for (std::size_t l = 0; l < out.lanes; l += 4) {
    const cvec z = load(z_re + l, z_im + l);
    for (int i = 0; i < n; ++i) {
      const __m256d d_re = _mm256_sub_pd(z.re, _mm256_set1_pd(T.re[i * n + i]));
      const __m256d d_im = _mm256_sub_pd(z.im, _mm256_set1_pd(T.im[i * n + i]));
      const __m256d norm = _mm256_fmadd_pd(d_re, d_re, _mm256_mul_pd(d_im, d_im));
      const __m256d inv = _mm256_div_pd(one, norm);
      inv_diag[i] = {_mm256_mul_pd(d_re, inv), _mm256_sub_pd(_mm256_setzero_pd(), _mm256_mul_pd(d_im, inv))};
    }
    for (int c = 0; c < q; ++c) {
      for (int i = n - 1; i >= 0; --i) {
        cvec s = broadcast(R.re[i * q + c], R.im[i * q + c]);
        for (int j = i + 1; j < n; ++j) {
          const cvec x = load(out.re + out.offset(j, c) + l, out.im + out.offset(j, c) + l);
          s = fmadd(broadcast(T.re[i * n + j], T.im[i * n + j]), x, s);
        }
        store(out.re + out.offset(i, c) + l, out.im + out.offset(i, c) + l, fmadd(s, inv_diag[i], zero()));
      }
    }
  }
}

void shared_multiply(SharedRef S, ConstBatchRef X, BatchRef out) {
  for (std::size_t l = 0; l < X.lanes; l += 4) {
    for (int i = 0; i < S.rows; ++i) {
      for (int j = 0; j < X.cols; ++j) {
        cvec acc = zero();
        for (int k = 0; k < S.cols; ++k) {
          const double s_re = S.re[i * S.cols + k];
          const double s_im = S.im[i * S.cols + k];
          if (s_re == 0.0 && s_im == 0.0) continue;
          acc = fmadd(broadcast(s_re, s_im), load(X.re + X.offset(k, j) + l, X.im + X.offset(k, j) + l), acc);
        }
        store(out.re + out.offset(i, j) + l, out.im + out.offset(i, j) + l, acc);
      }
    }
  }
}

void multiply(ConstBatchRef X, ConstBatchRef Y, BatchRef out) {
  for (std::size_t l = 0; l < X.lanes; l += 4) {
    for (int i = 0; i < X.rows; ++i) {
      for (int j = 0; j < Y.cols; ++j) {
        cvec acc = zero();
        for (int k = 0; k < X.cols; ++k)
          acc = fmadd(load(X.re + X.offset(i, k) + l, X.im + X.offset(i, k) + l),
                      load(Y.re + Y.offset(k, j) + l, Y.im + Y.offset(k, j) + l), acc);
        store(out.re + out.offset(i, j) + l, out.im + out.offset(i, j) + l, acc);
      }
    }
  }
}

void adjoint_multiply(ConstBatchRef X, ConstBatchRef Y, BatchRef out) {
  for (std::size_t l = 0; l < X.lanes; l += 4) {
    for (int i = 0; i < X.cols; ++i) {
      for (int j = 0; j < Y.cols; ++j) {
        cvec acc = zero();
        for (int k = 0; k < X.rows; ++k)
          acc = fmadd_conj(load(X.re + X.offset(k, i) + l, X.im + X.offset(k, i) + l),
                           load(Y.re + Y.offset(k, j) + l, Y.im + Y.offset(k, j) + l), acc);
        store(out.re + out.offset(i, j) + l, out.im + out.offset(i, j) + l, acc);
      }
    }
  }
}

void hpd_inverse(ConstBatchRef X, BatchRef out, double* min_pivot) {
  const int m = X.rows;
  std::vector<cvec> L(static_cast<std::size_t>(m) * m), Y(static_cast<std::size_t>(m) * m);
  std::vector<__m256d> inv_diag(m);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d zero_pd = _mm256_setzero_pd();
  for (std::size_t l = 0; l < X.lanes; l += 4) {
    __m256d pivot_min = _mm256_set1_pd(INFINITY);
    for (int j = 0; j < m; ++j) {
      __m256d d = _mm256_loadu_pd(X.re + X.offset(j, j) + l);
      for (int k = 0; k < j; ++k) {
        d = _mm256_fnmadd_pd(L[j * m + k].re, L[j * m + k].re, d);
        d = _mm256_fnmadd_pd(L[j * m + k].im, L[j * m + k].im, d);
      }
      pivot_min = _mm256_min_pd(pivot_min, d);
      const __m256d positive = _mm256_cmp_pd(d, zero_pd, _CMP_GT_OQ);
      const __m256d ljj = _mm256_blendv_pd(one, _mm256_sqrt_pd(d), positive);
      const __m256d inv = _mm256_div_pd(one, ljj);
      inv_diag[j] = inv;
      L[j * m + j] = {ljj, zero_pd};
      for (int i = j + 1; i < m; ++i) {
        cvec s = load(X.re + X.offset(i, j) + l, X.im + X.offset(i, j) + l);
        for (int k = 0; k < j; ++k) {
          // s -= L_ik conj(L_jk) = s - conj(L_jk) L_ik
          const cvec a = L[i * m + k];
          const cvec b = L[j * m + k];
          s.re = _mm256_fnmadd_pd(a.re, b.re, s.re);
          s.re = _mm256_fnmadd_pd(a.im, b.im, s.re);
          s.im = _mm256_fnmadd_pd(a.im, b.re, s.im);
          s.im = _mm256_fmadd_pd(a.re, b.im, s.im);
        }
        L[i * m + j] = {_mm256_mul_pd(s.re, inv), _mm256_mul_pd(s.im, inv)};
      }
    }
    _mm256_storeu_pd(min_pivot + l, pivot_min);
    for (int c = 0; c < m; ++c) {
      for (int i = 0; i < m; ++i) {
        if (i < c) {
          Y[i * m + c] = zero();
          continue;
        }
        cvec s = i == c ? cvec{one, zero_pd} : zero();
        for (int k = c; k < i; ++k) s = fnmadd(L[i * m + k], Y[k * m + c], s);
        Y[i * m + c] = {_mm256_mul_pd(s.re, inv_diag[i]), _mm256_mul_pd(s.im, inv_diag[i])};
      }
    }
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        cvec s = zero();
        for (int k = std::max(i, j); k < m; ++k) s = fmadd_conj(Y[k * m + i], Y[k * m + j], s);
        store(out.re + out.offset(i, j) + l, out.im + out.offset(i, j) + l, s);
      }
    }
  }
}

void accumulate_sandwich(ConstBatchRef X, ConstBatchRef S, const double* w, double* acc_re,
                         double* acc_im) {
  const int n = X.rows;
  const int q = X.cols;
  std::vector<cvec> Y(static_cast<std::size_t>(n) * q);
  std::vector<__m256d> sum_re(static_cast<std::size_t>(n) * n, _mm256_setzero_pd());
  std::vector<__m256d> sum_im(static_cast<std::size_t>(n) * n, _mm256_setzero_pd());
  for (std::size_t l = 0; l < X.lanes; l += 4) {
    const __m256d wl = _mm256_loadu_pd(w + l);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < q; ++j) {
        cvec acc = zero();
        for (int k = 0; k < q; ++k)
          acc = fmadd(load(X.re + X.offset(i, k) + l, X.im + X.offset(i, k) + l),
                      load(S.re + S.offset(k, j) + l, S.im + S.offset(k, j) + l), acc);
        Y[i * q + j] = {_mm256_mul_pd(acc.re, wl), _mm256_mul_pd(acc.im, wl)};
      }
    }
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        __m256d s_re = sum_re[i * n + j];
        __m256d s_im = sum_im[i * n + j];
        for (int k = 0; k < q; ++k) {
          const cvec a = Y[i * q + k];
          const cvec b = load(X.re + X.offset(j, k) + l, X.im + X.offset(j, k) + l);
          s_re = _mm256_fmadd_pd(a.re, b.re, s_re);
          s_re = _mm256_fmadd_pd(a.im, b.im, s_re);
          s_im = _mm256_fmadd_pd(a.im, b.re, s_im);
          s_im = _mm256_fnmadd_pd(a.re, b.im, s_im);
        }
        sum_re[i * n + j] = s_re;
        sum_im[i * n + j] = s_im;
      }
    }
  }
  for (int i = 0; i < n * n; ++i) {
    acc_re[i] += hsum(sum_re[i]);
    acc_im[i] += hsum(sum_im[i]);
  }
}

double weighted_trace(ConstBatchRef P, ConstBatchRef Q, const double* w) {
  __m256d total = _mm256_setzero_pd();
  for (std::size_t l = 0; l < P.lanes; l += 4) {
    __m256d t = _mm256_setzero_pd();
    for (int a = 0; a < P.rows; ++a) {
      for (int b = 0; b < P.cols; ++b) {
        t = _mm256_fmadd_pd(_mm256_loadu_pd(P.re + P.offset(a, b) + l),
                            _mm256_loadu_pd(Q.re + Q.offset(b, a) + l), t);
        t = _mm256_fnmadd_pd(_mm256_loadu_pd(P.im + P.offset(a, b) + l),
                             _mm256_loadu_pd(Q.im + Q.offset(b, a) + l), t);
      }
    }
    total = _mm256_fmadd_pd(_mm256_loadu_pd(w + l), t, total);
  }
  return hsum(total);
}

}  // namespace

const KernelTable& avx2_kernel_table() {
  static const KernelTable table{"avx2",         triangular_resolvent, shared_multiply,
                                 multiply,       adjoint_multiply,     hpd_inverse,
                                 accumulate_sandwich, weighted_trace};
  return table;
}

}  // namespace spectral_homotopy::simd

#include <cmath>
#include <limits>
#include <vector>

#include "spectral_homotopy/simd/kernels.hpp"

namespace spectral_homotopy::simd {

void Batch::resize(int rows, int cols, std::size_t lanes) {
  rows_ = rows;
  cols_ = cols;
  lanes_ = lanes;
  const std::size_t total = static_cast<std::size_t>(rows) * cols * lanes;
  re_.assign(total, 0.0);
  im_.assign(total, 0.0);
}

namespace {

void triangular_resolvent(SharedRef T, SharedRef R, const double* z_re, const double* z_im,
                          BatchRef out) {
  const int n = T.rows;
  const int q = R.cols;
  for (std::size_t l = 0; l < out.lanes; ++l) {
    for (int c = 0; c < q; ++c) {
      for (int i = n - 1; i >= 0; --i) {
        double s_re = R.re[i * q + c];
        double s_im = R.im[i * q + c];
        for (int j = i + 1; j < n; ++j) {
          const double t_re = T.re[i * n + j];
          const double t_im = T.im[i * n + j];
          const double x_re = out.re[out.offset(j, c) + l];
          const double x_im = out.im[out.offset(j, c) + l];
          s_re += t_re * x_re - t_im * x_im;
          s_im += t_re * x_im + t_im * x_re;
        }
        const double d_re = z_re[l] - T.re[i * n + i];
        const double d_im = z_im[l] - T.im[i * n + i];
        const double inv = 1.0 / (d_re * d_re + d_im * d_im);
        out.re[out.offset(i, c) + l] = (s_re * d_re + s_im * d_im) * inv;
        out.im[out.offset(i, c) + l] = (s_im * d_re - s_re * d_im) * inv;
      }
    }
  }
}

void shared_multiply(SharedRef S, ConstBatchRef X, BatchRef out) {
  const std::size_t L = X.lanes;
  for (int i = 0; i < S.rows; ++i) {
    for (int j = 0; j < X.cols; ++j) {
      double* o_re = out.re + out.offset(i, j);
      double* o_im = out.im + out.offset(i, j);
      for (std::size_t l = 0; l < L; ++l) {
        o_re[l] = 0.0;
        o_im[l] = 0.0;
      }
      for (int k = 0; k < S.cols; ++k) {
        const double s_re = S.re[i * S.cols + k];
        const double s_im = S.im[i * S.cols + k];
        if (s_re == 0.0 && s_im == 0.0) continue;
        const double* x_re = X.re + X.offset(k, j);
        const double* x_im = X.im + X.offset(k, j);
        for (std::size_t l = 0; l < L; ++l) {
          o_re[l] += s_re * x_re[l] - s_im * x_im[l];
          o_im[l] += s_re * x_im[l] + s_im * x_re[l];
        }
      }
    }
  }
}

template <bool Adjoint>
void multiply_impl(ConstBatchRef X, ConstBatchRef Y, BatchRef out) {
  const std::size_t L = X.lanes;
  const int inner = Adjoint ? X.rows : X.cols;
  const int rows = Adjoint ? X.cols : X.rows;
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < Y.cols; ++j) {
      double* o_re = out.re + out.offset(i, j);
      double* o_im = out.im + out.offset(i, j);
      for (std::size_t l = 0; l < L; ++l) {
        o_re[l] = 0.0;
        o_im[l] = 0.0;
      }
      for (int k = 0; k < inner; ++k) {
        const std::size_t xo = Adjoint ? X.offset(k, i) : X.offset(i, k);
        const double* x_re = X.re + xo;
        const double* x_im = X.im + xo;
        const double* y_re = Y.re + Y.offset(k, j);
        const double* y_im = Y.im + Y.offset(k, j);
        for (std::size_t l = 0; l < L; ++l) {
          const double a = x_re[l];
          const double b = Adjoint ? -x_im[l] : x_im[l];
          o_re[l] += a * y_re[l] - b * y_im[l];
          o_im[l] += a * y_im[l] + b * y_re[l];
        }
      }
    }
  }
}

void multiply(ConstBatchRef X, ConstBatchRef Y, BatchRef out) { multiply_impl<false>(X, Y, out); }
void adjoint_multiply(ConstBatchRef X, ConstBatchRef Y, BatchRef out) {
  multiply_impl<true>(X, Y, out);
}

void hpd_inverse(ConstBatchRef X, BatchRef out, double* min_pivot) {
  const int m = X.rows;
  std::vector<double> l_re(m * m), l_im(m * m), y_re(m * m), y_im(m * m);
  for (std::size_t lane = 0; lane < X.lanes; ++lane) {
    // X = L L*, L lower triangular with real diagonal.
    double pivot_min = std::numeric_limits<double>::infinity();
    for (int j = 0; j < m; ++j) {
      double d = X.re[X.offset(j, j) + lane];
      for (int k = 0; k < j; ++k)
        d -= l_re[j * m + k] * l_re[j * m + k] + l_im[j * m + k] * l_im[j * m + k];
      pivot_min = std::min(pivot_min, d);
      const double ljj = d > 0.0 ? std::sqrt(d) : 1.0;
      l_re[j * m + j] = ljj;
      l_im[j * m + j] = 0.0;
      for (int i = j + 1; i < m; ++i) {
        double s_re = X.re[X.offset(i, j) + lane];
        double s_im = X.im[X.offset(i, j) + lane];
        for (int k = 0; k < j; ++k) {
          // s -= L_ik conj(L_jk)
          const double a_re = l_re[i * m + k], a_im = l_im[i * m + k];
          const double b_re = l_re[j * m + k], b_im = l_im[j * m + k];
          s_re -= a_re * b_re + a_im * b_im;
          s_im -= a_im * b_re - a_re * b_im;
        }
        l_re[i * m + j] = s_re / ljj;
        l_im[i * m + j] = s_im / ljj;
      }
    }
    min_pivot[lane] = pivot_min;
    // Y = L^{-1} by forward substitution, column by column.
    for (int c = 0; c < m; ++c) {
      for (int i = 0; i < m; ++i) {
        double s_re = (i == c) ? 1.0 : 0.0;
        double s_im = 0.0;
        for (int k = c; k < i; ++k) {
          const double a_re = l_re[i * m + k], a_im = l_im[i * m + k];
          const double b_re = y_re[k * m + c], b_im = y_im[k * m + c];
          s_re -= a_re * b_re - a_im * b_im;
          s_im -= a_re * b_im + a_im * b_re;
        }
        y_re[i * m + c] = i < c ? 0.0 : s_re / l_re[i * m + i];
        y_im[i * m + c] = i < c ? 0.0 : s_im / l_re[i * m + i];
      }
    }
    // X^{-1} = Y* Y.
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j) {
        double s_re = 0.0, s_im = 0.0;
        for (int k = std::max(i, j); k < m; ++k) {
          const double a_re = y_re[k * m + i], a_im = -y_im[k * m + i];
          const double b_re = y_re[k * m + j], b_im = y_im[k * m + j];
          s_re += a_re * b_re - a_im * b_im;
          s_im += a_re * b_im + a_im * b_re;
        }
        out.re[out.offset(i, j) + lane] = s_re;
        out.im[out.offset(i, j) + lane] = s_im;
      }
    }
  }
}

void accumulate_sandwich(ConstBatchRef X, ConstBatchRef S, const double* w, double* acc_re,
                         double* acc_im) {
  const int n = X.rows;
  const int q = X.cols;
  const std::size_t L = X.lanes;
  std::vector<double> y_re(static_cast<std::size_t>(n) * q * L), y_im(y_re.size());
  // Y = X S, weighted per lane.
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < q; ++j) {
      double* o_re = y_re.data() + (static_cast<std::size_t>(i) * q + j) * L;
      double* o_im = y_im.data() + (static_cast<std::size_t>(i) * q + j) * L;
      for (std::size_t l = 0; l < L; ++l) o_re[l] = o_im[l] = 0.0;
      for (int k = 0; k < q; ++k) {
        const double* x_re = X.re + X.offset(i, k);
        const double* x_im = X.im + X.offset(i, k);
        const double* s_re = S.re + S.offset(k, j);
        const double* s_im = S.im + S.offset(k, j);
        for (std::size_t l = 0; l < L; ++l) {
          o_re[l] += x_re[l] * s_re[l] - x_im[l] * s_im[l];
          o_im[l] += x_re[l] * s_im[l] + x_im[l] * s_re[l];
        }
      }
      for (std::size_t l = 0; l < L; ++l) {
        o_re[l] *= w[l];
        o_im[l] *= w[l];
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double s_re = 0.0, s_im = 0.0;
      for (int k = 0; k < q; ++k) {
        const double* a_re = y_re.data() + (static_cast<std::size_t>(i) * q + k) * L;
        const double* a_im = y_im.data() + (static_cast<std::size_t>(i) * q + k) * L;
        const double* b_re = X.re + X.offset(j, k);
        const double* b_im = X.im + X.offset(j, k);
        for (std::size_t l = 0; l < L; ++l) {
          // a * conj(b)
          s_re += a_re[l] * b_re[l] + a_im[l] * b_im[l];
          s_im += a_im[l] * b_re[l] - a_re[l] * b_im[l];
        }
      }
      acc_re[i * n + j] += s_re;
      acc_im[i * n + j] += s_im;
    }
  }
}

double weighted_trace(ConstBatchRef P, ConstBatchRef Q, const double* w) {
  const std::size_t L = P.lanes;
  double total = 0.0;
  for (std::size_t l = 0; l < L; ++l) {
    double t = 0.0;
    for (int a = 0; a < P.rows; ++a)
      for (int b = 0; b < P.cols; ++b)
        t += P.re[P.offset(a, b) + l] * Q.re[Q.offset(b, a) + l] -
             P.im[P.offset(a, b) + l] * Q.im[Q.offset(b, a) + l];
    total += w[l] * t;
  }
  return total;
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{"scalar",         triangular_resolvent, shared_multiply,
                                 multiply,         adjoint_multiply,     hpd_inverse,
                                 accumulate_sandwich, weighted_trace};
  return table;
}

}  // namespace spectral_homotopy::simd

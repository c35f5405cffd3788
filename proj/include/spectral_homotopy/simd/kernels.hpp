#pragma once

#include <cstddef>
#include <vector>

namespace spectral_homotopy::simd {

// Batched small complex matrices, one matrix per grid point ("lane"),
// stored structure-of-arrays: entry (i, j) of lane l is at
// re[(i * cols + j) * lanes + l]. Lane counts are multiples of kLaneAlign.

inline constexpr std::size_t kLaneAlign = 8;

struct BatchRef {
  int rows = 0;
  int cols = 0;
  std::size_t lanes = 0;
  double* re = nullptr;
  double* im = nullptr;

  std::size_t offset(int i, int j) const { return (static_cast<std::size_t>(i) * cols + j) * lanes; }
};

struct ConstBatchRef {
  int rows = 0;
  int cols = 0;
  std::size_t lanes = 0;
  const double* re = nullptr;
  const double* im = nullptr;

  ConstBatchRef() = default;
  ConstBatchRef(const BatchRef& b)  // NOLINT
      : rows(b.rows), cols(b.cols), lanes(b.lanes), re(b.re), im(b.im) {}
  ConstBatchRef(int r, int c, std::size_t l, const double* pr, const double* pi)
      : rows(r), cols(c), lanes(l), re(pr), im(pi) {}

  std::size_t offset(int i, int j) const { return (static_cast<std::size_t>(i) * cols + j) * lanes; }
};

/// A matrix shared by all lanes, row-major split storage.
struct SharedRef {
  int rows = 0;
  int cols = 0;
  const double* re = nullptr;
  const double* im = nullptr;
};

/// Owning storage for a batch.
class Batch {
 public:
  Batch() = default;
  Batch(int rows, int cols, std::size_t lanes) { resize(rows, cols, lanes); }

  void resize(int rows, int cols, std::size_t lanes);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t lanes() const { return lanes_; }

  BatchRef ref() { return {rows_, cols_, lanes_, re_.data(), im_.data()}; }
  ConstBatchRef cref() const { return {rows_, cols_, lanes_, re_.data(), im_.data()}; }
  operator BatchRef() { return ref(); }             // NOLINT
  operator ConstBatchRef() const { return cref(); }  // NOLINT

  double& re(int i, int j, std::size_t l) { return re_[(static_cast<std::size_t>(i) * cols_ + j) * lanes_ + l]; }
  double& im(int i, int j, std::size_t l) { return im_[(static_cast<std::size_t>(i) * cols_ + j) * lanes_ + l]; }
  double re(int i, int j, std::size_t l) const { return re_[(static_cast<std::size_t>(i) * cols_ + j) * lanes_ + l]; }
  double im(int i, int j, std::size_t l) const { return im_[(static_cast<std::size_t>(i) * cols_ + j) * lanes_ + l]; }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::size_t lanes_ = 0;
  std::vector<double> re_;
  std::vector<double> im_;
};

/// Owning storage for a shared matrix.
struct SharedMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> re;
  std::vector<double> im;

  SharedRef ref() const { return {rows, cols, re.data(), im.data()}; }
};

struct KernelTable {
  const char* name;

  /// out = (z I - T)^{-1} R per lane; T upper triangular (shared), R shared.
  void (*triangular_resolvent)(SharedRef T, SharedRef R, const double* z_re, const double* z_im,
                               BatchRef out);
  /// out = S X.
  void (*shared_multiply)(SharedRef S, ConstBatchRef X, BatchRef out);
  /// out = X Y.
  void (*multiply)(ConstBatchRef X, ConstBatchRef Y, BatchRef out);
  /// out = X* Y.
  void (*adjoint_multiply)(ConstBatchRef X, ConstBatchRef Y, BatchRef out);
  /// out = X^{-1} for Hermitian positive definite X via Cholesky.
  /// min_pivot[l] receives the smallest squared Cholesky pivot of lane l
  /// (<= 0 when the lane is not positive definite; out is then unspecified).
  void (*hpd_inverse)(ConstBatchRef X, BatchRef out, double* min_pivot);
  /// acc (rows x rows, row-major split) += sum_l w[l] X_l S_l X_l*.
  void (*accumulate_sandwich)(ConstBatchRef X, ConstBatchRef S, const double* w, double* acc_re,
                              double* acc_im);
  /// sum_l w[l] Re trace(P_l Q_l).
  double (*weighted_trace)(ConstBatchRef P, ConstBatchRef Q, const double* w);
};

const KernelTable& scalar_kernels();
/// nullptr when the build has no AVX2 variant or the CPU lacks AVX2+FMA.
const KernelTable* avx2_kernels();

/// Kernels used by the library. Picks AVX2 when available unless the
/// environment variable SPECTRAL_HOMOTOPY_SIMD is set to "scalar".
const KernelTable& active_kernels();

}  // namespace spectral_homotopy::simd

#include "spectral_homotopy/quadrature.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "parallel.hpp"

namespace spectral_homotopy {

namespace {

constexpr std::size_t kBlockLanes = 256;

using simd::Batch;
using simd::ConstBatchRef;

Matrix from_split(const std::vector<double>& re, const std::vector<double>& im, Eigen::Index n) {
  Matrix X(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) X(i, j) = Complex(re[i * n + j], im[i * n + j]);
  return X;
}

}  // namespace

simd::SharedMatrix to_shared(const Matrix& X) {
  simd::SharedMatrix s;
  s.rows = static_cast<int>(X.rows());
  s.cols = static_cast<int>(X.cols());
  s.re.resize(X.size());
  s.im.resize(X.size());
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      s.re[i * X.cols() + j] = X(i, j).real();
      s.im[i * X.cols() + j] = X(i, j).imag();
    }
  return s;
}

struct Quadrature::Block {
  std::size_t lanes = 0;   // padded lane count
  std::size_t valid = 0;   // real grid points in this block
  std::vector<double> theta;
  std::vector<double> weight;  // density(theta) / N, zero on padding
  Batch G;
};

Quadrature::Quadrature(const FilterBank& filter, UniformGrid grid, const simd::KernelTable* kernels)
    : filter_(filter), grid_(grid), kernels_(kernels ? kernels : &simd::active_kernels()) {
  Eigen::ComplexSchur<Matrix> schur(filter_.A());
  schur_T_ = to_shared(schur.matrixT());
  schur_U_ = to_shared(schur.matrixU());
  rotated_B_ = to_shared(schur.matrixU().adjoint() * filter_.B());
}

std::size_t Quadrature::block_count() const { return (grid_.size() + kBlockLanes - 1) / kBlockLanes; }

Quadrature::Block Quadrature::make_block(std::size_t index, const DensityFn* density) const {
  Block block;
  const std::size_t first = index * kBlockLanes;
  block.valid = std::min(kBlockLanes, grid_.size() - first);
  block.lanes = (block.valid + simd::kLaneAlign - 1) / simd::kLaneAlign * simd::kLaneAlign;
  block.theta.resize(block.lanes);
  block.weight.assign(block.lanes, 0.0);
  std::vector<double> z_re(block.lanes), z_im(block.lanes);
  const double scale = 1.0 / static_cast<double>(grid_.size());
  for (std::size_t l = 0; l < block.lanes; ++l) {
    // Padding lanes repeat the last grid point with zero weight.
    const std::size_t k = first + std::min(l, block.valid - 1);
    block.theta[l] = grid_.angle(k);
    z_re[l] = std::cos(block.theta[l]);
    z_im[l] = std::sin(block.theta[l]);
    if (density != nullptr && l < block.valid) block.weight[l] = (*density)(block.theta[l]) * scale;
  }
  const int n = static_cast<int>(filter_.n());
  const int m = static_cast<int>(filter_.m());
  Batch X(n, m, block.lanes);
  kernels_->triangular_resolvent(schur_T_.ref(), rotated_B_.ref(), z_re.data(), z_im.data(), X);
  block.G.resize(n, m, block.lanes);
  kernels_->shared_multiply(schur_U_.ref(), X, block.G);
  return block;
}

namespace {

// Phi = G* param G (lambda form) or (CG)*(CG) (factor form); also returns CG.
void denominator(const simd::KernelTable& k, Parametrization form, const simd::SharedMatrix& param,
                 const Batch& G, Batch& CG, Batch& Phi) {
  const int m = G.cols();
  Phi.resize(m, m, G.lanes());
  if (form == Parametrization::lambda) {
    Batch LG(G.rows(), m, G.lanes());
    k.shared_multiply(param.ref(), G, LG);
    k.adjoint_multiply(G, LG, Phi);
  } else {
    CG.resize(param.rows, m, G.lanes());
    k.shared_multiply(param.ref(), G, CG);
    k.adjoint_multiply(CG, CG, Phi);
  }
}

void checked_inverse(const simd::KernelTable& k, const Batch& Phi, Batch& out, std::size_t valid,
                     const double* theta) {
  out.resize(Phi.rows(), Phi.cols(), Phi.lanes());
  std::vector<double> pivots(Phi.lanes());
  k.hpd_inverse(Phi, out, pivots.data());
  for (std::size_t l = 0; l < valid; ++l) {
    if (!(pivots[l] > 0.0)) {
      std::ostringstream os;
      os << "quadrature: integrand denominator is singular at theta = " << theta[l]
         << " (parameter on the boundary)";
      throw NearBoundaryError(os.str(), pivots[l]);
    }
  }
}

// G* X G for a shared Hermitian X.
void hermitian_form(const simd::KernelTable& k, const simd::SharedMatrix& X, const Batch& G, Batch& out) {
  Batch XG(G.rows(), G.cols(), G.lanes());
  k.shared_multiply(X.ref(), G, XG);
  out.resize(G.cols(), G.cols(), G.lanes());
  k.adjoint_multiply(G, XG, out);
}

// (VG)*(CG) + (CG)*(VG).
void symmetric_cross_form(const simd::KernelTable& k, const simd::SharedMatrix& V, const Batch& G, const Batch& CG,
                          Batch& out) {
  Batch VG(V.rows, G.cols(), G.lanes());
  k.shared_multiply(V.ref(), G, VG);
  Batch a(G.cols(), G.cols(), G.lanes()), b(G.cols(), G.cols(), G.lanes());
  k.adjoint_multiply(VG, CG, a);
  k.adjoint_multiply(CG, VG, b);
  out.resize(G.cols(), G.cols(), G.lanes());
  simd::BatchRef o = out;
  simd::ConstBatchRef ar = a, br = b;
  const std::size_t total = static_cast<std::size_t>(out.rows()) * out.cols() * out.lanes();
  for (std::size_t i = 0; i < total; ++i) {
    o.re[i] = ar.re[i] + br.re[i];
    o.im[i] = ar.im[i] + br.im[i];
  }
}

struct Accumulator {
  std::vector<double> re, im;
};

Matrix sum_partials(const std::vector<Accumulator>& parts, Eigen::Index n) {
  std::vector<double> re(n * n, 0.0), im(n * n, 0.0);
  for (const auto& p : parts)
    for (std::size_t i = 0; i < re.size(); ++i) {
      re[i] += p.re[i];
      im[i] += p.im[i];
    }
  return hermitian_part(from_split(re, im, n));
}

}  // namespace

Matrix Quadrature::moment(const DensityFn& density, Parametrization form, const Matrix& param) const {
  const auto n = filter_.n();
  const simd::SharedMatrix p = to_shared(param);
  const auto parts = detail::map_indexed<Accumulator>(block_count(), [&](std::size_t b) {
    Block block = make_block(b, &density);
    Batch CG, Phi, Phi_inv;
    denominator(*kernels_, form, p, block.G, CG, Phi);
    checked_inverse(*kernels_, Phi, Phi_inv, block.valid, block.theta.data());
    Accumulator acc{std::vector<double>(n * n, 0.0), std::vector<double>(n * n, 0.0)};
    kernels_->accumulate_sandwich(block.G, Phi_inv, block.weight.data(), acc.re.data(), acc.im.data());
    return acc;
  });
  return sum_partials(parts, n);
}

Matrix Quadrature::apply_f2(const DensityFn& density, const Matrix& Lambda, const Matrix& dLambda) const {
  const auto n = filter_.n();
  const simd::SharedMatrix L = to_shared(Lambda);
  const simd::SharedMatrix dL = to_shared(dLambda);
  const auto parts = detail::map_indexed<Accumulator>(block_count(), [&](std::size_t b) {
    Block block = make_block(b, &density);
    Batch CG, Phi, Phi_inv, S;
    denominator(*kernels_, Parametrization::lambda, L, block.G, CG, Phi);
    checked_inverse(*kernels_, Phi, Phi_inv, block.valid, block.theta.data());
    hermitian_form(*kernels_, dL, block.G, S);
    Batch X(block.G.rows(), block.G.cols(), block.lanes);
    kernels_->multiply(block.G, Phi_inv, X);
    std::vector<double> w(block.weight);
    for (double& v : w) v = -v;
    Accumulator acc{std::vector<double>(n * n, 0.0), std::vector<double>(n * n, 0.0)};
    kernels_->accumulate_sandwich(X, S, w.data(), acc.re.data(), acc.im.data());
    return acc;
  });
  return sum_partials(parts, n);
}

Matrix Quadrature::apply_g2(const DensityFn& density, const Matrix& C, const Matrix& V) const {
  const auto n = filter_.n();
  const simd::SharedMatrix Cs = to_shared(C);
  const simd::SharedMatrix Vs = to_shared(V);
  const auto parts = detail::map_indexed<Accumulator>(block_count(), [&](std::size_t b) {
    Block block = make_block(b, &density);
    Batch CG, Phi, Phi_inv, S;
    denominator(*kernels_, Parametrization::factor, Cs, block.G, CG, Phi);
    checked_inverse(*kernels_, Phi, Phi_inv, block.valid, block.theta.data());
    symmetric_cross_form(*kernels_, Vs, block.G, CG, S);
    Batch X(block.G.rows(), block.G.cols(), block.lanes);
    kernels_->multiply(block.G, Phi_inv, X);
    std::vector<double> w(block.weight);
    for (double& v : w) v = -v;
    Accumulator acc{std::vector<double>(n * n, 0.0), std::vector<double>(n * n, 0.0)};
    kernels_->accumulate_sandwich(X, S, w.data(), acc.re.data(), acc.im.data());
    return acc;
  });
  return sum_partials(parts, n);
}

RealMatrix Quadrature::jacobian(const DensityFn& density, Parametrization form, const Matrix& param,
                                const std::vector<Matrix>& range_basis,
                                const std::vector<Matrix>& domain_basis) const {
  const auto rows = static_cast<Eigen::Index>(range_basis.size());
  const auto cols = static_cast<Eigen::Index>(domain_basis.size());
  const simd::SharedMatrix p = to_shared(param);
  std::vector<simd::SharedMatrix> range_shared, domain_shared;
  for (const Matrix& X : range_basis) range_shared.push_back(to_shared(X));
  for (const Matrix& X : domain_basis) domain_shared.push_back(to_shared(X));
  const auto parts = detail::map_indexed<RealMatrix>(block_count(), [&](std::size_t b) {
    Block block = make_block(b, &density);
    Batch CG, Phi, Phi_inv;
    denominator(*kernels_, form, p, block.G, CG, Phi);
    checked_inverse(*kernels_, Phi, Phi_inv, block.valid, block.theta.data());
    const int m = block.G.cols();
    // P_j = (G* Lambda_j G) Phi^{-1},  Q_k = D_k Phi^{-1}.
    std::vector<Batch> P(rows), Q(cols);
    Batch tmp;
    for (Eigen::Index j = 0; j < rows; ++j) {
      hermitian_form(*kernels_, range_shared[j], block.G, tmp);
      P[j].resize(m, m, block.lanes);
      kernels_->multiply(tmp, Phi_inv, P[j]);
    }
    for (Eigen::Index k = 0; k < cols; ++k) {
      if (form == Parametrization::lambda)
        hermitian_form(*kernels_, domain_shared[k], block.G, tmp);
      else
        symmetric_cross_form(*kernels_, domain_shared[k], block.G, CG, tmp);
      Q[k].resize(m, m, block.lanes);
      kernels_->multiply(tmp, Phi_inv, Q[k]);
    }
    RealMatrix J(rows, cols);
    for (Eigen::Index j = 0; j < rows; ++j)
      for (Eigen::Index k = 0; k < cols; ++k)
        J(j, k) = -kernels_->weighted_trace(P[j], Q[k], block.weight.data());
    return J;
  });
  RealMatrix J = RealMatrix::Zero(rows, cols);
  for (const auto& part : parts) J += part;
  return J;
}

double Quadrature::min_denominator_eigenvalue(Parametrization form, const Matrix& param) const {
  const simd::SharedMatrix p = to_shared(param);
  const auto parts = detail::map_indexed<double>(block_count(), [&](std::size_t b) {
    Block block = make_block(b, nullptr);
    Batch CG, Phi;
    denominator(*kernels_, form, p, block.G, CG, Phi);
    const int m = Phi.rows();
    double lo = std::numeric_limits<double>::infinity();
    Matrix X(m, m);
    for (std::size_t l = 0; l < block.valid; ++l) {
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) X(i, j) = Complex(Phi.re(i, j, l), Phi.im(i, j, l));
      Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(X), Eigen::EigenvaluesOnly);
      lo = std::min(lo, es.eigenvalues().minCoeff());
    }
    return lo;
  });
  double lo = std::numeric_limits<double>::infinity();
  for (double v : parts) lo = std::min(lo, v);
  return lo;
}

}  // namespace spectral_homotopy

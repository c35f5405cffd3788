#pragma once

#include <functional>
#include <vector>

#include "spectral_homotopy/common.hpp"
#include "spectral_homotopy/simd/kernels.hpp"
#include "spectral_homotopy/statespace.hpp"

namespace spectral_homotopy {

/// Real weight on the unit circle as a function of theta (a prior density,
/// or a signed combination of densities).
using DensityFn = std::function<double(double)>;

enum class Parametrization { lambda, factor };

/// Riemann sums (1/N) sum_k F(theta_k) over a UniformGrid for integrands
/// built from G(e^{i theta}). Grid points are processed in fixed blocks with
/// batched SIMD kernels; block partial sums are combined in block order, so
/// results do not depend on the number of worker threads.
class Quadrature {
 public:
  Quadrature(const FilterBank& filter, UniformGrid grid, const simd::KernelTable* kernels = nullptr);

  const UniformGrid& grid() const { return grid_; }
  const FilterBank& filter() const { return filter_; }

  /// integral of G psi (G* Lambda G)^{-1} G*, or of G psi (G* C*C G)^{-1} G*.
  Matrix moment(const DensityFn& density, Parametrization form, const Matrix& param) const;

  /// -integral of G psi Phi^{-1} (G* dLambda G) Phi^{-1} G*, Phi = G* Lambda G.
  Matrix apply_f2(const DensityFn& density, const Matrix& Lambda, const Matrix& dLambda) const;

  /// -integral of G psi Phi^{-1} G*(V*C + C*V)G Phi^{-1} G*, Phi = G* C*C G.
  Matrix apply_g2(const DensityFn& density, const Matrix& C, const Matrix& V) const;

  /// Real matrix with entries <range_basis[j], J(domain_basis[k])>, J the
  /// derivative of the moment map in the given parametrization.
  RealMatrix jacobian(const DensityFn& density, Parametrization form, const Matrix& param,
                      const std::vector<Matrix>& range_basis, const std::vector<Matrix>& domain_basis) const;

  /// Minimum over the grid of lambda_min of the m x m integrand denominator
  /// (G* Lambda G or G* C*C G).
  double min_denominator_eigenvalue(Parametrization form, const Matrix& param) const;

 private:
  struct Block;
  Block make_block(std::size_t index, const DensityFn* density) const;
  std::size_t block_count() const;

  FilterBank filter_;
  UniformGrid grid_;
  const simd::KernelTable* kernels_;
  simd::SharedMatrix schur_T_;
  simd::SharedMatrix schur_U_;
  simd::SharedMatrix rotated_B_;
};

simd::SharedMatrix to_shared(const Matrix& X);

}  // namespace spectral_homotopy

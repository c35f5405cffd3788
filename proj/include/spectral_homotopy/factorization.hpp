#pragma once

#include "spectral_homotopy/chart.hpp"
#include "spectral_homotopy/common.hpp"
#include "spectral_homotopy/matrixeq.hpp"
#include "spectral_homotopy/statespace.hpp"

namespace spectral_homotopy {

struct OuterFactor {
  enum class Kind { right, left };

  StateSpaceSystem system;
  Kind kind = Kind::right;
  /// Riccati solution behind the factor (empty for right factors built
  /// directly from C).
  DareSolution dare;
};

/// Spectral factor parameter C = L^{-*} B* P of Lambda, where P is the
/// stabilizing solution of the Lambda-DARE and B*PB = L*L. Lambda must be in
/// L+ and in Range Gamma (projection residual <= 1e-8 |Lambda|).
FactorParameter h_map(const FilterBank& filter, const CoordinateChart& chart, const Matrix& Lambda,
                      const DareOptions& options = {});

/// Projection of C*C onto Range Gamma.
Matrix h_inverse(const CoordinateChart& chart, const Matrix& C);

/// W(z) = zCG(z) realized as (A, B, CA, CB); W*W = G* h^{-1}(C) G on the circle.
OuterFactor right_outer_factor(const FilterBank& filter, const FactorParameter& C);

/// Left outer factor W of Z + Z*, Z(z) = H (zI - F)^{-1} G + J:
/// W(z) = H (zI - F)^{-1} (G + FPH*) L^{-*} + L with R + HPH* = L L*.
OuterFactor left_outer_factor_from_additive(const Matrix& F, const Matrix& G, const Matrix& H, const Matrix& J,
                                            const DareOptions& options = {}, std::size_t positivity_grid = 1024);

}  // namespace spectral_homotopy

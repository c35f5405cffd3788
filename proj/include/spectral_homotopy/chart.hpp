#pragma once

#include <optional>
#include <vector>

#include "spectral_homotopy/common.hpp"
#include "spectral_homotopy/statespace.hpp"

namespace spectral_homotopy {

/// Orthonormal bases of Range Gamma (Hermitian n x n) and of the factor
/// space {C : CB lower triangular with real diagonal} (m x n), both w.r.t.
/// the real inner product Re trace(X Y*).
struct CoordinateChart {
  Field field = Field::complex;
  std::vector<Matrix> range_basis;
  std::vector<Matrix> factor_basis;

  std::size_t dimension() const { return range_basis.size(); }

  RealVector range_coords(const Matrix& X) const;
  Matrix range_matrix(const RealVector& coords) const;
  RealVector factor_coords(const Matrix& C) const;
  Matrix factor_matrix(const RealVector& coords) const;
};

struct MomentValue {
  Matrix matrix;
  RealVector coords;
};

/// Lyapunov images X - AXA* = BH + H*B* of the standard basis of m x n
/// matrices, orthonormalized by modified Gram-Schmidt (rank threshold 1e-9).
std::vector<Matrix> build_range_gamma_basis(const FilterBank& filter);

/// Orthonormal basis of the factor space. With an anchor the first element
/// is anchor / |anchor|_F. Throws MembershipError if the anchor is zero or
/// not in the factor space.
std::vector<Matrix> build_factor_basis(const FilterBank& filter, const std::optional<Matrix>& anchor = std::nullopt);

CoordinateChart make_chart(const FilterBank& filter, const std::optional<Matrix>& anchor = std::nullopt);

/// Orthogonal projection onto Range Gamma with its coordinates.
MomentValue project_range_gamma(const CoordinateChart& chart, const Matrix& X);

/// |X - P(X)|_F for the orthogonal projection P onto Range Gamma.
double range_gamma_residual(const CoordinateChart& chart, const Matrix& X);

/// Orthogonal projection onto the factor space.
Matrix project_factor_space(const FilterBank& filter, const Matrix& C);

}  // namespace spectral_homotopy

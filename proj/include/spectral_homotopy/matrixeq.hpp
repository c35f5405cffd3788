#pragma once

#include <optional>
#include <string>
#include <vector>

#include "spectral_homotopy/common.hpp"
#include "spectral_homotopy/statespace.hpp"

namespace spectral_homotopy {

/// Solves R - A R A* = Q for stable A. Complex Schur back-substitution for
/// n <= 200, squared-series summation above that.
Matrix solve_dlyap(const Matrix& A, const Matrix& Q);

/// Lower-triangular L with M = L* L ("right" Cholesky factor).
Matrix reverse_cholesky(const Matrix& M);
/// Lower-triangular L with M = L L*.
Matrix standard_cholesky(const Matrix& M);

enum class DareMethod { doubling, fixed_point };

struct DareOptions {
  DareMethod method = DareMethod::doubling;
  int max_iterations = 200;
  /// Relative update |X_{k+1} - X_k|_F / (1 + |X_{k+1}|_F) declaring convergence.
  double tolerance = 1e-13;
  /// Accepted residual is residual_tolerance * (1 + |P|_F).
  double residual_tolerance = 1e-10;
  /// Starting point for the fixed-point iteration (default: Lambda resp. 0).
  std::optional<Matrix> initial;
  /// Fall back to the fixed-point iteration when doubling breaks down.
  bool fallback = true;
};

struct DareSolution {
  Matrix P;
  Matrix closed_loop;
  double residual_norm = 0.0;
  /// Moment form: B*PB = L*L. Additive form: R + HPH* = L L*.
  Matrix L;
  int iterations = 0;
  DareMethod method = DareMethod::doubling;
  std::vector<double> history;
};

/// Stabilizing solution of X = A*XA - A*XB (B*XB)^{-1} B*XA + Lambda.
/// Lambda must lie in L+ (checked on a 1024-point grid).
DareSolution solve_dare_lambda(const FilterBank& filter, const Matrix& Lambda, const DareOptions& options = {});

/// Stabilizing solution of P = FPF* - (G + FPH*)(R + HPH*)^{-1}(G* + HPF*),
/// R = J + J*, for Z(z) = H (zI - F)^{-1} G + J with Z + Z* > 0 on the circle.
/// `positivity_grid` = 0 skips the grid check of Z + Z*.
DareSolution solve_dare_appendix(const Matrix& F, const Matrix& G, const Matrix& H, const Matrix& J,
                                 const DareOptions& options = {}, std::size_t positivity_grid = 1024);

/// Minimum over a uniform grid of lambda_min(Z + Z*), Z = H (zI - F)^{-1} G + J.
double min_para_hermitian_eigenvalue(const Matrix& F, const Matrix& G, const Matrix& H, const Matrix& J,
                                     std::size_t grid_points);

}  // namespace spectral_homotopy

#pragma once

#include <vector>

#include "spectral_homotopy/chart.hpp"
#include "spectral_homotopy/common.hpp"
#include "spectral_homotopy/quadrature.hpp"
#include "spectral_homotopy/statespace.hpp"

namespace spectral_homotopy {

/// integral of T T* over the circle for a stable T = C (zI - A)^{-1} B + D,
/// i.e. C R C* + D D* with R - A R A* = B B*.
Matrix h2_gramian(const StateSpaceSystem& T);

/// Riemann-sum moment over a grid with step dtheta.
Matrix moment_quadrature(const FilterBank& filter, const DensityFn& density, Parametrization form,
                         const Matrix& param, double dtheta);

/// g(psi, C) = integral of G psi (G* C*C G)^{-1} G*, by realizing
/// sigma G (zCG)^{-1} and solving one Lyapunov equation per prior term.
Matrix moment_g_statespace(const FilterBank& filter, const PriorMix& prior, const FactorParameter& C);

Matrix apply_f2_quadrature(const FilterBank& filter, const DensityFn& density, const Matrix& Lambda,
                           const Matrix& dLambda, double dtheta);

struct G2Options {
  /// Grid used to screen Z + Z* > 0 before factorizing.
  std::size_t positivity_grid = 1024;
  /// Shifts r = 0, 1, 2, 4, ..., 2^max_shift_doublings are tried.
  int max_shift_doublings = 20;
};

/// Directional derivative g'_2(psi, C; V). The map is linear in V and
/// g'_2(psi, C; C) = -2 g(psi, C), so it is evaluated at V + rC with the
/// smallest shift r for which Z + Z* > 0 on the circle,
/// Z(z) = (V + rC) G(z) (CG(z))^{-1}, by outer factorization of Z + Z*.
/// Throws NearBoundaryError when no shift is admissible.
Matrix apply_g2_statespace(const FilterBank& filter, const PriorMix& prior, const FactorParameter& C,
                           const Matrix& V, const G2Options& options = {});

/// g(psi, C) - g(1, C): the derivative of g along the prior homotopy.
Matrix apply_g1_direction(const FilterBank& filter, const PriorSpectrum& target, const FactorParameter& C);

enum class JacobianKind { f, g };
enum class IntegrationMethod { quadrature, statespace };

struct JacobianRequest {
  JacobianKind kind = JacobianKind::g;
  IntegrationMethod method = IntegrationMethod::quadrature;
  double dtheta = 1e-4;
};

/// Real M x M matrix <Lambda_j, J(basis_k)>; for kind f the point is Lambda
/// and basis_k = Lambda_k, for kind g the point is C and basis_k = C_k.
/// The state-space method is available for kind g only.
RealMatrix assemble_jacobian_matrix(const FilterBank& filter, const CoordinateChart& chart, const PriorMix& prior,
                                    const Matrix& point, const JacobianRequest& request);

/// 2-norm condition number.
double condition_number(const RealMatrix& J);

struct JacobianSolveOptions {
  std::size_t positivity_grid = 1024;
  double max_gram_condition = 1e14;
  /// Shifts tried for V_k = C_k + r C: 0, 1, 2, 4, ..., 2^max_shift_doublings.
  int max_shift_doublings = 20;
  /// Y must satisfy |Y - P(Y)| <= range_tolerance |Y| for the Range Gamma projection P.
  double range_tolerance = 1e-8;
};

struct JacobianSolve {
  Matrix V;
  double gram_condition = 0.0;
  /// |sum alpha_k Y_k - Y|_F / |Y|_F.
  double relative_residual = 0.0;
  std::vector<double> shifts;
};

/// Solves g'_2(psi, C; V) = Y for V in the factor space.
JacobianSolve solve_jacobian_system(const FilterBank& filter, const CoordinateChart& chart, const PriorMix& prior,
                                    const FactorParameter& C, const Matrix& Y, const JacobianSolveOptions& options = {});

}  // namespace spectral_homotopy

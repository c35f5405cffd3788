#include "spectral_homotopy/moment.hpp"

#include <cmath>
#include <optional>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "parallel.hpp"
#include "spectral_homotopy/factorization.hpp"
#include "spectral_homotopy/matrixeq.hpp"

namespace spectral_homotopy {

Matrix h2_gramian(const StateSpaceSystem& T) {
  Matrix X = T.D * T.D.adjoint();
  if (T.states() > 0) {
    const Matrix R = solve_dlyap(T.A, hermitian_part(T.B * T.B.adjoint()));
    X += T.C * R * T.C.adjoint();
  }
  return hermitian_part(X);
}

Matrix moment_quadrature(const FilterBank& filter, const DensityFn& density, Parametrization form,
                         const Matrix& param, double dtheta) {
  return Quadrature(filter, UniformGrid::from_step(dtheta)).moment(density, form, param);
}

namespace {

Matrix weighted_gramians(const PriorMix& prior, const StateSpaceSystem& T) {
  Matrix total = Matrix::Zero(T.outputs(), T.outputs());
  for (const auto& term : prior.terms) {
    if (term.weight == 0.0) continue;
    total += term.weight * h2_gramian(cascade(term.prior.sigma, T));
  }
  return hermitian_part(total);
}

Matrix g2_factored(const FilterBank& filter, const PriorMix& prior, const FactorParameter& C, const Matrix& V) {
  // Z(z) = z V G (zCG)^{-1} = V Pi (zI - Pi)^{-1} B (CB)^{-1} + V B (CB)^{-1}.
  const Matrix& F = C.Pi;
  const Matrix Gm = filter.B() * C.CB_inverse;
  const OuterFactor W = left_outer_factor_from_additive(F, Gm, V * C.Pi, V * Gm, {}, 0);
  const StateSpaceSystem T = multiply(factor_inner_realization(filter, C), W.system);
  return -weighted_gramians(prior, T);
}

// G(e^{i theta}) on a grid, for positivity screening of shifted directions.
std::vector<Matrix> sample_filter(const FilterBank& filter, std::size_t points) {
  const UniformGrid grid(points);
  const StateSpaceSystem G = filter.system();
  std::vector<Matrix> out;
  out.reserve(points);
  for (std::size_t k = 0; k < points; ++k) out.push_back(eval_transfer(G, grid.point(k)));
  return out;
}

bool positive_on_grid(const std::vector<Matrix>& samples, const Matrix& C, const Matrix& V) {
  const Matrix M = V.adjoint() * C + C.adjoint() * V;
  for (const Matrix& G : samples) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(G.adjoint() * M * G), Eigen::EigenvaluesOnly);
    if (!(es.eigenvalues().minCoeff() > 0.0)) return false;
  }
  return true;
}

struct ShiftedImage {
  Matrix Y;
  double shift = 0.0;
};

// g'_2(psi, C; D) evaluated at V = D + r C for the smallest r in
// {0, 1, 2, 4, ...} where Z + Z* is positive and factorizable, then shifted
// back using g'_2(C) = -2 g.
std::optional<ShiftedImage> shifted_image(const FilterBank& filter, const PriorMix& prior, const FactorParameter& C,
                                          const Matrix& g, const std::vector<Matrix>& samples, const Matrix& D,
                                          int max_doublings, double& last_shift) {
  const Matrix Gm = filter.B() * C.CB_inverse;
  for (int attempt = 0; attempt <= max_doublings + 1; ++attempt) {
    const double r = attempt == 0 ? 0.0 : std::ldexp(1.0, attempt - 1);
    last_shift = r;
    const Matrix V = D + r * C.C;
    const Matrix J = V * Gm;
    Eigen::LLT<Matrix> llt(hermitian_part(J + J.adjoint()));
    if (llt.info() != Eigen::Success) continue;
    if (!positive_on_grid(samples, C.C, V)) continue;
    try {
      Matrix raw = g2_factored(filter, prior, C, V);
      enforce_field(filter.field(), raw, "apply_g2_statespace");
      return ShiftedImage{raw + 2.0 * r * g, r};
    } catch (const SolverFailure&) {
    } catch (const DegenerateError&) {
    } catch (const StabilityError&) {
    }
  }
  return std::nullopt;
}

}  // namespace

Matrix apply_g2_statespace(const FilterBank& filter, const PriorMix& prior, const FactorParameter& C,
                           const Matrix& V, const G2Options& options) {
  if (V.rows() != filter.m() || V.cols() != filter.n()) throw DimensionError("apply_g2_statespace: V must be m x n");
  if (options.positivity_grid == 0) throw std::invalid_argument("apply_g2_statespace: positivity_grid must be positive");
  if (V.norm() == 0.0) return Matrix::Zero(filter.n(), filter.n());
  const Matrix g = moment_g_statespace(filter, prior, C);
  double shift = 0.0;
  const auto image = shifted_image(filter, prior, C, g, sample_filter(filter, options.positivity_grid), V,
                                   options.max_shift_doublings, shift);
  if (!image) {
    std::ostringstream os;
    os << "apply_g2_statespace: no admissible shift (tried up to " << shift << ")";
    throw NearBoundaryError(os.str(), 0.0);
  }
  Matrix result = image->Y;
  enforce_field(filter.field(), result, "apply_g2_statespace");
  return result;
}

Matrix moment_g_statespace(const FilterBank& filter, const PriorMix& prior, const FactorParameter& C) {
  Matrix g = weighted_gramians(prior, factor_inner_realization(filter, C));
  enforce_field(filter.field(), g, "moment_g_statespace");
  return g;
}

Matrix apply_f2_quadrature(const FilterBank& filter, const DensityFn& density, const Matrix& Lambda,
                           const Matrix& dLambda, double dtheta) {
  return Quadrature(filter, UniformGrid::from_step(dtheta)).apply_f2(density, Lambda, dLambda);
}

Matrix apply_g1_direction(const FilterBank& filter, const PriorSpectrum& target, const FactorParameter& C) {
  return moment_g_statespace(filter, PriorMix::direction(target), C);
}

double condition_number(const RealMatrix& J) {
  Eigen::JacobiSVD<RealMatrix> svd(J);
  const auto& s = svd.singularValues();
  if (s.size() == 0) return 0.0;
  const double smallest = s(s.size() - 1);
  return smallest > 0.0 ? s(0) / smallest : std::numeric_limits<double>::infinity();
}

namespace {

std::vector<ShiftedImage> direction_images(const FilterBank& filter, const PriorMix& prior, const FactorParameter& C,
                                           const Matrix& g, const std::vector<Matrix>& basis,
                                           const JacobianSolveOptions& options) {
  const std::vector<Matrix> samples = sample_filter(filter, options.positivity_grid);
  return detail::map_indexed<ShiftedImage>(basis.size(), [&](std::size_t k) {
    double shift = 0.0;
    auto image = shifted_image(filter, prior, C, g, samples, basis[k], options.max_shift_doublings, shift);
    if (!image) {
      std::ostringstream os;
      os << "solve_jacobian_system: no admissible shift r_k for direction " << k << " (tried up to " << shift << ")";
      throw NearBoundaryError(os.str(), 0.0);
    }
    return std::move(*image);
  });
}

}  // namespace

RealMatrix assemble_jacobian_matrix(const FilterBank& filter, const CoordinateChart& chart, const PriorMix& prior,
                                    const Matrix& point, const JacobianRequest& request) {
  const auto M = static_cast<Eigen::Index>(chart.dimension());
  if (request.method == IntegrationMethod::quadrature) {
    const Quadrature quad(filter, UniformGrid::from_step(request.dtheta));
    const DensityFn density = [&prior](double theta) { return prior.density(theta); };
    if (request.kind == JacobianKind::f)
      return quad.jacobian(density, Parametrization::lambda, point, chart.range_basis, chart.range_basis);
    return quad.jacobian(density, Parametrization::factor, point, chart.range_basis, chart.factor_basis);
  }
  if (request.kind == JacobianKind::f)
    throw std::invalid_argument("assemble_jacobian_matrix: the f-Jacobian is available by quadrature only");
  const FactorParameter C = make_factor_parameter(filter, point);
  const Matrix g = moment_g_statespace(filter, prior, C);
  const auto images = direction_images(filter, prior, C, g, chart.factor_basis, {});
  RealMatrix J(M, M);
  for (Eigen::Index k = 0; k < M; ++k) J.col(k) = chart.range_coords(images[k].Y);
  return J;
}

JacobianSolve solve_jacobian_system(const FilterBank& filter, const CoordinateChart& chart, const PriorMix& prior,
                                    const FactorParameter& C, const Matrix& Y, const JacobianSolveOptions& options) {
  JacobianSolve out;
  const double y_norm = Y.norm();
  if (y_norm == 0.0) {
    out.V = Matrix::Zero(filter.m(), filter.n());
    return out;
  }
  const double range_residual = range_gamma_residual(chart, Y);
  if (range_residual > options.range_tolerance * y_norm) {
    std::ostringstream os;
    os << "solve_jacobian_system: right-hand side not in Range Gamma (relative residual " << range_residual / y_norm
       << ")";
    throw MembershipError(os.str());
  }
  const std::vector<Matrix> basis = build_factor_basis(filter, C.C);
  const Matrix g = moment_g_statespace(filter, prior, C);
  const auto images = direction_images(filter, prior, C, g, basis, options);

  // <Y_j, Y_k> = K_j . K_k with K the Range Gamma coordinates of the images,
  // so the Gram system is the normal equation of K alpha = coords(Y). It is
  // solved in that form, which avoids squaring the condition number.
  const auto M = static_cast<Eigen::Index>(basis.size());
  RealMatrix K(M, M);
  for (Eigen::Index k = 0; k < M; ++k) K.col(k) = chart.range_coords(images[k].Y);
  const double k_condition = condition_number(K);
  out.gram_condition = k_condition * k_condition;
  if (!(out.gram_condition <= options.max_gram_condition)) {
    std::ostringstream os;
    os << "solve_jacobian_system: Gram matrix condition number " << out.gram_condition << " exceeds "
       << options.max_gram_condition;
    throw IllConditionedError(os.str(), out.gram_condition);
  }
  const RealVector alpha = K.colPivHouseholderQr().solve(chart.range_coords(Y));
  out.V = Matrix::Zero(filter.m(), filter.n());
  Matrix fitted = Matrix::Zero(filter.n(), filter.n());
  for (Eigen::Index k = 0; k < M; ++k) {
    out.V += alpha(k) * basis[k];
    fitted += alpha(k) * images[k].Y;
    out.shifts.push_back(images[k].shift);
  }
  out.relative_residual = (fitted - Y).norm() / y_norm;
  return out;
}

}  // namespace spectral_homotopy

#include "spectral_homotopy/factorization.hpp"

#include <sstream>

namespace spectral_homotopy {

FactorParameter h_map(const FilterBank& filter, const CoordinateChart& chart, const Matrix& Lambda,
                      const DareOptions& options) {
  const double residual = range_gamma_residual(chart, Lambda);
  if (residual > 1e-8 * Lambda.norm()) {
    std::ostringstream os;
    os << "h_map: Lambda is not in Range Gamma (projection residual " << residual << ")";
    throw MembershipError(os.str());
  }
  const DareSolution dare = solve_dare_lambda(filter, Lambda, options);
  Matrix C = dare.L.adjoint().triangularView<Eigen::Upper>().solve(filter.B().adjoint() * dare.P);
  enforce_field(filter.field(), C, "h_map C");

  // CB = L up to roundoff; remove what is left above the diagonal and in the
  // imaginary part of the diagonal so the membership test is not decided by
  // rounding.
  const Matrix CB = C * filter.B();
  const auto m = filter.m();
  Matrix defect = Matrix::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    defect(i, i) = Complex(0.0, CB(i, i).imag());
    for (Eigen::Index j = i + 1; j < m; ++j) defect(i, j) = CB(i, j);
  }
  if (defect.cwiseAbs().maxCoeff() > 1e-10 * (1.0 + CB.norm()))
    throw MembershipError("h_map: factor CB is not lower triangular (internal consistency)");
  if (defect.cwiseAbs().maxCoeff() > 0.0) {
    const Matrix& B = filter.B();
    C -= defect * (B.adjoint() * B).ldlt().solve(B.adjoint());
  }
  try {
    return make_factor_parameter(filter, C);
  } catch (const MembershipError& e) {
    throw MembershipError(std::string("h_map: result outside C+ (internal consistency): ") + e.what());
  }
}

Matrix h_inverse(const CoordinateChart& chart, const Matrix& C) {
  return project_range_gamma(chart, C.adjoint() * C).matrix;
}

OuterFactor right_outer_factor(const FilterBank& filter, const FactorParameter& C) {
  OuterFactor factor;
  factor.kind = OuterFactor::Kind::right;
  factor.system = StateSpaceSystem(filter.A(), filter.B(), C.C * filter.A(), C.C * filter.B());
  return factor;
}

OuterFactor left_outer_factor_from_additive(const Matrix& F, const Matrix& G, const Matrix& H, const Matrix& J,
                                            const DareOptions& options, std::size_t positivity_grid) {
  OuterFactor factor;
  factor.kind = OuterFactor::Kind::left;
  factor.dare = solve_dare_appendix(F, G, H, J, options, positivity_grid);
  const Matrix& L = factor.dare.L;
  const Matrix K = G + F * factor.dare.P * H.adjoint();
  // K L^{-*}: solve L X* = K*.
  const Matrix input = L.triangularView<Eigen::Lower>().solve(K.adjoint()).adjoint();
  factor.system = StateSpaceSystem(F, input, H, L);
  return factor;
}

}  // namespace spectral_homotopy

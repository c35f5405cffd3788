#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "spectral_homotopy/chart.hpp"
#include "spectral_homotopy/factorization.hpp"
#include "spectral_homotopy/moment.hpp"
#include "spectral_homotopy/sampling.hpp"
#include "test_support.hpp"

using namespace spectral_homotopy;
using namespace test_support;

namespace {

double min_eig(const Matrix& X) {
  return Eigen::SelfAdjointEigenSolver<Matrix>(hermitian_part(X), Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

DensityFn density_of(const PriorSpectrum& p) {
  return [p](double th) { return p.density(th); };
}

RealMatrix gram_of(const std::vector<Matrix>& basis) {
  const auto M = static_cast<Eigen::Index>(basis.size());
  RealMatrix G(M, M);
  for (Eigen::Index j = 0; j < M; ++j)
    for (Eigen::Index k = 0; k < M; ++k) G(j, k) = inner(basis[j], basis[k]);
  return G;
}

// Entries agree to `rel` relative to themselves; entries negligible against
// the matrix scale only need to agree at that scale.
bool entrywise_close(const RealMatrix& a, const RealMatrix& b, double rel) {
  const double scale = a.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double tol = std::abs(a(i)) >= 1e-8 * scale ? rel * std::abs(a(i)) : 1e-14 * scale;
    if (std::abs(a(i) - b(i)) > tol) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("Range Gamma basis") {
  const FilterBank f = covext();
  const auto basis = build_range_gamma_basis(f);
  CHECK(basis.size() == 7);
  CHECK((gram_of(basis) - RealMatrix::Identity(7, 7)).norm() < 1e-12);
  const Matrix Pperp = Matrix::Identity(4, 4) - f.B() * (f.B().adjoint() * f.B()).inverse() * f.B().adjoint();
  for (const Matrix& L : basis) {
    CHECK((L - L.adjoint()).norm() < 1e-14);
    CHECK((Pperp * (L - f.A() * L * f.A().adjoint()) * Pperp).norm() <= 1e-10);
    // symmetric block-Toeplitz: equal diagonal blocks, symmetric entries
    CHECK((L.block(0, 0, 2, 2) - L.block(2, 2, 2, 2)).norm() < 1e-12);
    CHECK(L.imag().norm() == 0.0);
  }

  const auto scalar = build_range_gamma_basis(make_covariance_extension_filter(1, 0));
  REQUIRE(scalar.size() == 1);
  CHECK(std::abs(std::abs(scalar[0](0, 0)) - 1.0) < 1e-15);

  const auto complex_basis = build_range_gamma_basis(make_covariance_extension_filter(2, 1, Field::complex));
  CHECK(complex_basis.size() == 12);  // m (2n - m)
}

TEST_CASE("factor basis") {
  const FilterBank f = covext();
  const auto basis = build_factor_basis(f);
  CHECK(basis.size() == 7);
  CHECK((gram_of(basis) - RealMatrix::Identity(7, 7)).norm() < 1e-12);
  for (const Matrix& Ck : basis) {
    const Matrix CB = Ck * f.B();
    CHECK(std::abs(CB(0, 1)) < 1e-15);
    CHECK(std::abs(CB(0, 0).imag()) < 1e-15);
    CHECK(std::abs(CB(1, 1).imag()) < 1e-15);
  }
  const Matrix C = c58();
  const auto anchored = build_factor_basis(f, C);
  CHECK(anchored.size() == 7);
  CHECK(std::abs(inner(anchored[0], C) - C.norm()) < 1e-12);
  CHECK((gram_of(anchored) - RealMatrix::Identity(7, 7)).norm() < 1e-12);
  CHECK_THROWS(build_factor_basis(f, Matrix::Zero(2, 4)));

  const auto complex_basis = build_factor_basis(make_covariance_extension_filter(2, 1, Field::complex));
  CHECK(complex_basis.size() == 12);
}

TEST_CASE("project_range_gamma") {
  const FilterBank f = covext();
  const CoordinateChart chart = make_chart(f);
  const Matrix X = chart.range_basis[1] - 2.0 * chart.range_basis[4];
  CHECK((project_range_gamma(chart, X).matrix - X).norm() < 1e-13);

  const Matrix C = c58();
  const Matrix CC = C.adjoint() * C;
  Matrix expected = CC;
  const Matrix avg = 0.5 * (CC.block(0, 0, 2, 2) + CC.block(2, 2, 2, 2));
  expected.block(0, 0, 2, 2) = avg;
  expected.block(2, 2, 2, 2) = avg;
  const MomentValue p = project_range_gamma(chart, CC);
  CHECK((p.matrix - expected).norm() < 1e-12);
  CHECK((chart.range_matrix(p.coords) - p.matrix).norm() < 1e-10);

  Matrix orth = Matrix::Zero(4, 4);  // G* X G = 0 on the circle
  orth.block(0, 0, 2, 2).setIdentity();
  orth.block(2, 2, 2, 2) = -Matrix::Identity(2, 2);
  CHECK(project_range_gamma(chart, orth).matrix.norm() < 1e-13);
  CHECK(range_gamma_residual(chart, orth) == doctest::Approx(orth.norm()));
}

TEST_CASE("moment maps: closed-form cases") {
  const FilterBank f = covext();
  const PriorSpectrum one = prior_constant();
  const Matrix I4 = Matrix::Identity(4, 4);
  CHECK((moment_quadrature(f, density_of(one), Parametrization::lambda, I4, 1e-3) - 0.5 * I4).norm() < 1e-12);
  const Matrix Bs = f.B().adjoint();
  CHECK((moment_quadrature(f, density_of(one), Parametrization::factor, Bs, 1e-3) - I4).norm() < 1e-12);
  CHECK((moment_g_statespace(f, one, make_factor_parameter(f, Bs)) - I4).norm() < 1e-12);

  // Lambda = I via h then g
  const CoordinateChart chart = make_chart(f);
  const FactorParameter C = h_map(f, chart, I4);
  CHECK((moment_g_statespace(f, one, C) - 0.5 * I4).norm() < 1e-12);
}

TEST_CASE("moment_g_statespace equals quadrature") {
  const FilterBank f = covext();
  const PriorSpectrum psi = example_prior();
  const Matrix C = c58();
  const Matrix exact = moment_g_statespace(f, psi, make_factor_parameter(f, C));
  const Matrix quad = moment_quadrature(f, density_of(psi), Parametrization::factor, C, 1e-4);
  CHECK((exact - quad).norm() <= 1e-8 * exact.norm());
  CHECK((exact - exact.adjoint()).norm() <= 1e-12 * exact.norm());
  CHECK(min_eig(exact) > 0.0);

  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const PriorSpectrum p = random_polynomial_prior(rng);
    const FactorParameter Ct = random_factor_parameter(f, rng);
    const Matrix g = moment_g_statespace(f, p, Ct);
    const Matrix q = moment_quadrature(f, density_of(p), Parametrization::factor, Ct.C, 1e-4);
    CHECK((g - q).norm() <= 1e-7 * g.norm());
    CHECK(min_eig(g) > 0.0);
  }
}

TEST_CASE("apply_f2_quadrature") {
  const FilterBank f = covext();
  const CoordinateChart chart = make_chart(f);
  const PriorSpectrum psi = example_prior();
  const Matrix L = h_inverse(chart, c58());
  const double dth = 1e-3;
  const Matrix fL = moment_quadrature(f, density_of(psi), Parametrization::lambda, L, dth);
  CHECK((apply_f2_quadrature(f, density_of(psi), L, L, dth) + fL).norm() <= 1e-12 * fL.norm());
  CHECK(apply_f2_quadrature(f, density_of(psi), L, Matrix::Zero(4, 4), dth).norm() == 0.0);
  // Central differences are taken at an interior point; at h^{-1}(C58) the
  // third derivative scales like Phi^{-4} and dominates the O(eps^2) error.
  const Matrix Li = h_inverse(chart, f.B().adjoint() + 0.2 * c58());
  const Matrix D = chart.range_basis[3];
  const double eps = 1e-6;
  const Matrix fd = (moment_quadrature(f, density_of(psi), Parametrization::lambda, Li + eps * D, dth) -
                     moment_quadrature(f, density_of(psi), Parametrization::lambda, Li - eps * D, dth)) /
                    (2 * eps);
  const Matrix an = apply_f2_quadrature(f, density_of(psi), Li, D, dth);
  CHECK((fd - an).norm() <= 1e-5 * an.norm());
}

TEST_CASE("apply_g2_statespace") {
  const FilterBank f = covext();
  const CoordinateChart chart = make_chart(f);
  const PriorSpectrum psi = example_prior();
  const FactorParameter C = make_factor_parameter(f, c58());
  const Matrix g = moment_g_statespace(f, psi, C);
  CHECK((apply_g2_statespace(f, psi, C, C.C) + 2.0 * g).norm() <= 1e-9 * g.norm());
  CHECK(apply_g2_statespace(f, psi, C, Matrix::Zero(2, 4)).norm() == 0.0);

  const Matrix V = chart.factor_basis[2] + 2.0 * C.C;
  const Matrix ss = apply_g2_statespace(f, psi, C, V);
  const Matrix quad = Quadrature(f, UniformGrid::from_step(1e-4)).apply_g2(density_of(psi), C.C, V);
  CHECK((ss - quad).norm() <= 1e-7 * ss.norm());
}

TEST_CASE("apply_g2_statespace matches central differences") {
  const FilterBank f = covext();
  std::mt19937_64 rng(41);
  const double eps = 1e-6;
  for (int trial = 0; trial < 10; ++trial) {
    const PriorSpectrum p = trial == 0 ? example_prior() : random_polynomial_prior(rng);
    const FactorParameter C = trial == 0 ? make_factor_parameter(f, c58()) : random_factor_parameter(f, rng, 0.8);
    Matrix V = project_factor_space(f, random_matrix(rng, 2, 4, false));
    V /= V.norm();
    const Matrix an = apply_g2_statespace(f, p, C, V);
    const Matrix fd = (moment_g_statespace(f, p, make_factor_parameter(f, C.C + eps * V)) -
                       moment_g_statespace(f, p, make_factor_parameter(f, C.C - eps * V))) /
                      (2 * eps);
    CHECK((fd - an).norm() <= 1e-5 * an.norm());
  }
}

TEST_CASE("apply_g1_direction") {
  const FilterBank f = covext();
  const FactorParameter Bs = make_factor_parameter(f, f.B().adjoint());
  CHECK(apply_g1_direction(f, prior_constant(), Bs).norm() < 1e-13);
  const PriorSpectrum psi = example_prior();
  CHECK((apply_g1_direction(f, psi, Bs) - (moment_g_statespace(f, psi, Bs) - Matrix::Identity(4, 4))).norm() <
        1e-12);
  const FactorParameter C = make_factor_parameter(f, c58());
  const Matrix d = apply_g1_direction(f, psi, C);
  const Matrix q = moment_quadrature(f, [&](double th) { return psi.density(th) - 1.0; }, Parametrization::factor,
                                     C.C, 1e-4);
  CHECK((d - q).norm() <= 1e-8 * d.norm());
}

TEST_CASE("Jacobian matrices: reference condition numbers and method agreement") {
  const FilterBank f = covext();
  const CoordinateChart chart = make_chart(f);
  const PriorSpectrum psi = example_prior();
  const Matrix C = c58();
  const RealMatrix Jq = assemble_jacobian_matrix(f, chart, psi, C, {JacobianKind::g, IntegrationMethod::quadrature, 1e-4});
  const RealMatrix Js = assemble_jacobian_matrix(f, chart, psi, C, {JacobianKind::g, IntegrationMethod::statespace});
  CHECK(entrywise_close(Jq, Js, 1e-6));
  const double cg = condition_number(Jq);
  CHECK(std::abs(cg / 2.4674e5 - 1.0) <= 0.01);
  const RealMatrix Jf = assemble_jacobian_matrix(f, chart, psi, h_inverse(chart, C),
                                                 {JacobianKind::f, IntegrationMethod::quadrature, 1e-4});
  const double cf = condition_number(Jf);
  CHECK(std::abs(cf / 3.8187e8 - 1.0) <= 0.01);
  CHECK(cf / cg >= 1e2);
  CHECK_THROWS_AS(assemble_jacobian_matrix(f, chart, psi, h_inverse(chart, C),
                                           {JacobianKind::f, IntegrationMethod::statespace}),
                  std::invalid_argument);

  // grid refinement: 1e-3 within 1% of 1e-4
  const RealMatrix Jq3 =
      assemble_jacobian_matrix(f, chart, psi, C, {JacobianKind::g, IntegrationMethod::quadrature, 1e-3});
  CHECK(std::abs(condition_number(Jq3) / cg - 1.0) <= 0.01);

  // far from the boundary the parametrizations are closer in conditioning
  const Matrix Bs = f.B().adjoint();
  const PriorSpectrum one = prior_constant();
  const double rg = condition_number(
      assemble_jacobian_matrix(f, chart, one, Bs, {JacobianKind::g, IntegrationMethod::quadrature, 1e-3}));
  const double rf = condition_number(assemble_jacobian_matrix(f, chart, one, h_inverse(chart, Bs),
                                                              {JacobianKind::f, IntegrationMethod::quadrature, 1e-3}));
  CHECK(rf / rg < cf / cg);
}

TEST_CASE("condition numbers do not depend on the orthonormal chart") {
  const FilterBank f = covext();
  const PriorSpectrum psi = example_prior();
  const Matrix C = c58();
  const CoordinateChart a = make_chart(f);
  CoordinateChart b = make_chart(f, C);
  // rotate the range basis by a random orthogonal matrix
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  RealMatrix R(7, 7);
  for (Eigen::Index i = 0; i < R.size(); ++i) R(i) = normal(rng);
  const RealMatrix Q = Eigen::HouseholderQR<RealMatrix>(R).householderQ();
  std::vector<Matrix> rotated(7, Matrix::Zero(4, 4));
  for (int j = 0; j < 7; ++j)
    for (int k = 0; k < 7; ++k) rotated[j] += Q(k, j) * a.range_basis[k];
  b.range_basis = rotated;
  for (IntegrationMethod method : {IntegrationMethod::quadrature, IntegrationMethod::statespace}) {
    const double ca = condition_number(assemble_jacobian_matrix(f, a, psi, C, {JacobianKind::g, method, 1e-3}));
    const double cb = condition_number(assemble_jacobian_matrix(f, b, psi, C, {JacobianKind::g, method, 1e-3}));
    CHECK(std::abs(ca - cb) <= 1e-6 * ca);
  }
  const Matrix L = h_inverse(a, C);
  const double fa =
      condition_number(assemble_jacobian_matrix(f, a, psi, L, {JacobianKind::f, IntegrationMethod::quadrature, 1e-3}));
  const double fb =
      condition_number(assemble_jacobian_matrix(f, b, psi, L, {JacobianKind::f, IntegrationMethod::quadrature, 1e-3}));
  CHECK(std::abs(fa - fb) <= 1e-6 * fa);
}

TEST_CASE("solve_jacobian_system") {
  const FilterBank f = covext();
  const CoordinateChart chart = make_chart(f);
  const PriorSpectrum psi = example_prior();
  const FactorParameter C = make_factor_parameter(f, c58());
  const Matrix g = moment_g_statespace(f, psi, C);

  const JacobianSolve s = solve_jacobian_system(f, chart, psi, C, -2.0 * g);
  CHECK((s.V - C.C).norm() <= 1e-7 * C.C.norm());
  CHECK(s.relative_residual <= 1e-8);

  CHECK(solve_jacobian_system(f, chart, psi, C, Matrix::Zero(4, 4)).V.norm() == 0.0);

  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    Matrix V0 = project_factor_space(f, random_matrix(rng, 2, 4, false));
    V0 /= V0.norm();
    const Matrix Y = apply_g2_statespace(f, psi, C, V0);
    const JacobianSolve r = solve_jacobian_system(f, chart, psi, C, Y);
    CHECK((r.V - V0).norm() <= 1e-7);
    CHECK((apply_g2_statespace(f, psi, C, r.V) - Y).norm() <= 1e-8 * Y.norm());
    CHECK(r.gram_condition < 1e14);
  }

  Matrix outside = Matrix::Zero(4, 4);
  outside.block(0, 0, 2, 2).setIdentity();
  CHECK_THROWS_AS(solve_jacobian_system(f, chart, psi, C, outside), MembershipError);
}

#include "spectral_homotopy/chart.hpp"

#include <cmath>

#include <Eigen/SVD>

#include "spectral_homotopy/matrixeq.hpp"

namespace spectral_homotopy {

namespace {

constexpr double kRankTol = 1e-9;

// Modified Gram-Schmidt of `candidate` against `basis`; appends the
// normalized remainder when it is above the rank threshold.
bool orthonormal_append(std::vector<Matrix>& basis, Matrix candidate) {
  const double scale = candidate.norm();
  if (scale == 0.0) return false;
  candidate /= scale;
  for (int pass = 0; pass < 2; ++pass)
    for (const Matrix& b : basis) candidate -= inner(candidate, b) * b;
  const double norm = candidate.norm();
  if (norm <= kRankTol) return false;
  basis.push_back(candidate / norm);
  return true;
}

std::vector<Complex> unit_scalars(Field field) {
  if (field == Field::real) return {Complex(1.0, 0.0)};
  return {Complex(1.0, 0.0), Complex(0.0, 1.0)};
}

// Real coordinates of an m x n matrix: real parts (and imaginary parts for
// complex fields), entry-major.
Eigen::Index real_dim(const FilterBank& filter) {
  return filter.m() * filter.n() * (filter.field() == Field::real ? 1 : 2);
}

Matrix from_real(const FilterBank& filter, const RealVector& v) {
  const bool cx = filter.field() == Field::complex;
  Matrix C(filter.m(), filter.n());
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < filter.m(); ++i)
    for (Eigen::Index j = 0; j < filter.n(); ++j) {
      const double re = v(k++);
      const double im = cx ? v(k++) : 0.0;
      C(i, j) = Complex(re, im);
    }
  return C;
}

RealVector to_real(const FilterBank& filter, const Matrix& C) {
  const bool cx = filter.field() == Field::complex;
  RealVector v(real_dim(filter));
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < filter.m(); ++i)
    for (Eigen::Index j = 0; j < filter.n(); ++j) {
      v(k++) = C(i, j).real();
      if (cx) v(k++) = C(i, j).imag();
    }
  return v;
}

// Orthonormal basis (columns) of the real null space of
// C -> (strict upper part of CB, imaginary diagonal of CB).
RealMatrix factor_space_basis(const FilterBank& filter) {
  const bool cx = filter.field() == Field::complex;
  const auto m = filter.m();
  const auto dim = real_dim(filter);
  std::vector<RealVector> rows;
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i; j < m; ++j) {
      // Re and Im of (CB)_{ij} as linear functionals of the real coordinates.
      RealVector re_row(dim), im_row(dim);
      for (Eigen::Index k = 0; k < dim; ++k) {
        RealVector e = RealVector::Zero(dim);
        e(k) = 1.0;
        const Complex v = (from_real(filter, e) * filter.B())(i, j);
        re_row(k) = v.real();
        im_row(k) = v.imag();
      }
      if (j > i) rows.push_back(re_row);
      if (cx) rows.push_back(im_row);
    }
  }
  if (rows.empty()) return RealMatrix::Identity(dim, dim);
  RealMatrix K(static_cast<Eigen::Index>(rows.size()), dim);
  for (std::size_t r = 0; r < rows.size(); ++r) K.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
  Eigen::JacobiSVD<RealMatrix> svd(K, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double tol = kRankTol * std::max(1.0, s.size() ? s(0) : 1.0);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > tol) ++rank;
  return svd.matrixV().rightCols(dim - rank);
}

}  // namespace

RealVector CoordinateChart::range_coords(const Matrix& X) const {
  RealVector c(static_cast<Eigen::Index>(range_basis.size()));
  for (std::size_t k = 0; k < range_basis.size(); ++k) c(static_cast<Eigen::Index>(k)) = inner(X, range_basis[k]);
  return c;
}

Matrix CoordinateChart::range_matrix(const RealVector& coords) const {
  Matrix X = Matrix::Zero(range_basis.front().rows(), range_basis.front().cols());
  for (std::size_t k = 0; k < range_basis.size(); ++k) X += coords(static_cast<Eigen::Index>(k)) * range_basis[k];
  return X;
}

RealVector CoordinateChart::factor_coords(const Matrix& C) const {
  RealVector c(static_cast<Eigen::Index>(factor_basis.size()));
  for (std::size_t k = 0; k < factor_basis.size(); ++k) c(static_cast<Eigen::Index>(k)) = inner(C, factor_basis[k]);
  return c;
}

Matrix CoordinateChart::factor_matrix(const RealVector& coords) const {
  Matrix C = Matrix::Zero(factor_basis.front().rows(), factor_basis.front().cols());
  for (std::size_t k = 0; k < factor_basis.size(); ++k) C += coords(static_cast<Eigen::Index>(k)) * factor_basis[k];
  return C;
}

std::vector<Matrix> build_range_gamma_basis(const FilterBank& filter) {
  std::vector<Matrix> basis;
  const auto m = filter.m();
  const auto n = filter.n();
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      for (const Complex unit : unit_scalars(filter.field())) {
        Matrix H = Matrix::Zero(m, n);
        H(i, j) = unit;
        const Matrix rhs = filter.B() * H + H.adjoint() * filter.B().adjoint();
        Matrix X = solve_dlyap(filter.A(), rhs);
        enforce_field(filter.field(), X, "build_range_gamma_basis");
        orthonormal_append(basis, X);
      }
  return basis;
}

Matrix project_factor_space(const FilterBank& filter, const Matrix& C) {
  const RealMatrix N = factor_space_basis(filter);
  return from_real(filter, N * (N.transpose() * to_real(filter, C)));
}

std::vector<Matrix> build_factor_basis(const FilterBank& filter, const std::optional<Matrix>& anchor) {
  const RealMatrix N = factor_space_basis(filter);
  std::vector<Matrix> basis;
  if (anchor) {
    if (anchor->rows() != filter.m() || anchor->cols() != filter.n())
      throw DimensionError("build_factor_basis: anchor must be m x n");
    const double norm = anchor->norm();
    if (norm == 0.0) throw MembershipError("build_factor_basis: anchor has zero norm");
    const RealVector v = to_real(filter, *anchor);
    if ((v - N * (N.transpose() * v)).norm() > 1e-10 * norm)
      throw MembershipError("build_factor_basis: anchor is not in the factor space");
    basis.push_back(*anchor / norm);
  }
  const auto dim = real_dim(filter);
  for (Eigen::Index k = 0; k < dim; ++k) {
    RealVector e = RealVector::Zero(dim);
    e(k) = 1.0;
    orthonormal_append(basis, from_real(filter, N * (N.transpose() * e)));
  }
  return basis;
}

CoordinateChart make_chart(const FilterBank& filter, const std::optional<Matrix>& anchor) {
  CoordinateChart chart;
  chart.field = filter.field();
  chart.range_basis = build_range_gamma_basis(filter);
  chart.factor_basis = build_factor_basis(filter, anchor);
  if (chart.range_basis.size() != chart.factor_basis.size())
    throw Error("make_chart: Range Gamma and factor space dimensions differ");
  return chart;
}

MomentValue project_range_gamma(const CoordinateChart& chart, const Matrix& X) {
  MomentValue value;
  value.coords = chart.range_coords(hermitian_part(X));
  value.matrix = chart.range_matrix(value.coords);
  return value;
}

double range_gamma_residual(const CoordinateChart& chart, const Matrix& X) {
  return (X - project_range_gamma(chart, X).matrix).norm();
}

}  // namespace spectral_homotopy

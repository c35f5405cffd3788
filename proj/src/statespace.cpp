#include "spectral_homotopy/statespace.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace spectral_homotopy {

double spectral_radius(const Matrix& A) {
  if (A.rows() == 0) return 0.0;
  Eigen::ComplexEigenSolver<Matrix> es(A, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

void enforce_field(Field field, Matrix& X, const char* what) {
  if (field != Field::real) return;
  const double scale = 1.0 + X.norm();
  const double imag = X.imag().cwiseAbs().maxCoeff();
  if (X.size() > 0 && imag > kStrictTol * scale) {
    std::ostringstream os;
    os << what << ": imaginary part " << imag << " on a real-field quantity";
    throw Error(os.str());
  }
  X = X.real().cast<Complex>();
}

UniformGrid::UniformGrid(std::size_t points) : points_(points) {
  if (points == 0) throw std::invalid_argument("UniformGrid: zero points");
}

UniformGrid UniformGrid::from_step(double dtheta) {
  if (!(dtheta > 0.0) || dtheta > 2.0 * std::numbers::pi)
    throw std::invalid_argument("UniformGrid: step must be in (0, 2pi]");
  return UniformGrid(static_cast<std::size_t>(std::llround(2.0 * std::numbers::pi / dtheta)));
}

double UniformGrid::step() const { return 2.0 * std::numbers::pi / static_cast<double>(points_); }

double UniformGrid::angle(std::size_t k) const {
  return -std::numbers::pi + static_cast<double>(k + 1) * step();
}

Complex UniformGrid::point(std::size_t k) const { return std::polar(1.0, angle(k)); }

StateSpaceSystem::StateSpaceSystem(Matrix a, Matrix b, Matrix c, Matrix d)
    : A(std::move(a)), B(std::move(b)), C(std::move(c)), D(std::move(d)) {
  const auto k = A.rows();
  if (A.cols() != k || B.rows() != k || C.cols() != k || C.rows() != D.rows() ||
      B.cols() != D.cols())
    throw DimensionError("StateSpaceSystem: inconsistent realization dimensions");
}

StateSpaceSystem StateSpaceSystem::gain(const Matrix& d) {
  return StateSpaceSystem(Matrix(0, 0), Matrix(0, d.cols()), Matrix(d.rows(), 0), d);
}

bool StateSpaceSystem::is_stable(double tol) const { return spectral_radius(A) < 1.0 - tol; }

Matrix eval_transfer(const StateSpaceSystem& sys, Complex z) {
  if (sys.states() == 0) return sys.D;
  const Matrix M = z * Matrix::Identity(sys.states(), sys.states()) - sys.A;
  Eigen::FullPivLU<Matrix> lu(M);
  if (!lu.isInvertible()) {
    std::ostringstream os;
    os << "eval_transfer: zI - A singular at z = " << z;
    throw EvaluationError(os.str(), z);
  }
  return sys.C * lu.solve(sys.B) + sys.D;
}

StateSpaceSystem multiply(const StateSpaceSystem& left, const StateSpaceSystem& right) {
  if (left.inputs() != right.outputs())
    throw DimensionError("multiply: left inputs must equal right outputs");
  // Signal flow u -> right -> left -> y; state [x_right; x_left].
  const auto kr = right.states();
  const auto kl = left.states();
  Matrix A = Matrix::Zero(kr + kl, kr + kl);
  A.topLeftCorner(kr, kr) = right.A;
  A.bottomLeftCorner(kl, kr) = left.B * right.C;
  A.bottomRightCorner(kl, kl) = left.A;
  Matrix B(kr + kl, right.inputs());
  B << right.B, left.B * right.D;
  Matrix C(left.outputs(), kr + kl);
  C << left.D * right.C, left.C;
  return StateSpaceSystem(std::move(A), std::move(B), std::move(C), left.D * right.D);
}

StateSpaceSystem cascade(const StateSpaceSystem& outer, const StateSpaceSystem& inner) {
  if (outer.inputs() != 1 || outer.outputs() != 1)
    throw DimensionError("cascade: outer system must be scalar");
  const auto q = inner.inputs();
  const auto k = outer.states();
  // sigma(z) I_q as a block-diagonal realization.
  Matrix A = Matrix::Zero(q * k, q * k);
  Matrix B = Matrix::Zero(q * k, q);
  Matrix C = Matrix::Zero(q, q * k);
  for (Eigen::Index i = 0; i < q; ++i) {
    A.block(i * k, i * k, k, k) = outer.A;
    B.block(i * k, i, k, 1) = outer.B;
    C.block(i, i * k, 1, k) = outer.C;
  }
  const Matrix D = outer.D(0, 0) * Matrix::Identity(q, q);
  return multiply(inner, StateSpaceSystem(std::move(A), std::move(B), std::move(C), D));
}

FilterBank::FilterBank(Matrix A, Matrix B, Field field)
    : A_(std::move(A)), B_(std::move(B)), field_(field) {
  const auto n = A_.rows();
  const auto m = B_.cols();
  if (A_.cols() != n || B_.rows() != n || n == 0 || m == 0)
    throw DimensionError("FilterBank: A must be n x n and B n x m");
  if (m > n) throw DimensionError("FilterBank: requires n >= m");
  enforce_field(field_, A_, "FilterBank A");
  enforce_field(field_, B_, "FilterBank B");
  if (spectral_radius(A_) >= 1.0 - kStrictTol) throw StabilityError("FilterBank: A is not Schur stable");
  Eigen::FullPivLU<Matrix> lu_b(B_);
  if (lu_b.rank() < m) throw MembershipError("FilterBank: B does not have full column rank");
  Matrix reach(n, n * m);
  Matrix block = B_;
  for (Eigen::Index k = 0; k < n; ++k) {
    reach.middleCols(k * m, m) = block;
    block = A_ * block;
  }
  Eigen::FullPivLU<Matrix> lu_r(reach);
  if (lu_r.rank() < n) throw MembershipError("FilterBank: (A, B) is not reachable");
}

Matrix FilterBank::eval(Complex z) const { return eval_transfer(system(), z); }

StateSpaceSystem FilterBank::system() const {
  return StateSpaceSystem(A_, B_, Matrix::Identity(n(), n()), Matrix::Zero(n(), m()));
}

FilterBank make_covariance_extension_filter(int m, int p, Field field) {
  if (m < 1 || p < 0) throw std::invalid_argument("make_covariance_extension_filter: need m >= 1, p >= 0");
  const Eigen::Index n = static_cast<Eigen::Index>(m) * (p + 1);
  Matrix A = Matrix::Zero(n, n);
  for (int i = 0; i < p; ++i) A.block(i * m, (i + 1) * m, m, m).setIdentity();
  Matrix B = Matrix::Zero(n, m);
  B.bottomRows(m).setIdentity();
  return FilterBank(std::move(A), std::move(B), field);
}

// Priors

double PriorSpectrum::density(double theta) const {
  const Matrix s = eval_transfer(sigma, std::polar(1.0, theta));
  return std::norm(s(0, 0));
}

std::vector<Complex> PriorSpectrum::zeros() const {
  if (sigma.states() == 0) return {};
  const Matrix Az = sigma.A - sigma.B * sigma.C / sigma.D(0, 0);
  Eigen::ComplexEigenSolver<Matrix> es(Az, false);
  return {es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size()};
}

namespace {

void check_prior_positive(const PriorSpectrum& prior) {
  const UniformGrid grid(4096);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!(prior.density(grid.angle(k)) > 0.0))
      throw MembershipError("prior: density is not positive on the unit circle");
  }
}

}  // namespace

PriorSpectrum prior_constant(double c) {
  if (!(c > 0.0)) throw std::invalid_argument("prior_constant: level must be positive");
  PriorSpectrum prior;
  prior.kind = PriorSpectrum::Kind::constant;
  prior.sigma = StateSpaceSystem::gain(Matrix::Constant(1, 1, std::sqrt(c)));
  prior.coefficients = {std::sqrt(c)};
  return prior;
}

PriorSpectrum prior_from_polynomial(const std::vector<Complex>& b) {
  if (b.empty() || b.front() == Complex(0.0))
    throw std::invalid_argument("prior_from_polynomial: need b nonempty with b[0] != 0");
  auto degree = static_cast<Eigen::Index>(b.size()) - 1;
  while (degree > 0 && b[degree] == Complex(0.0)) --degree;
  PriorSpectrum prior;
  prior.kind = degree == 0 ? PriorSpectrum::Kind::constant : PriorSpectrum::Kind::polynomial;
  prior.coefficients.assign(b.begin(), b.begin() + degree + 1);
  Matrix A = Matrix::Zero(degree, degree);
  for (Eigen::Index i = 1; i < degree; ++i) A(i, i - 1) = 1.0;
  Matrix B = Matrix::Zero(degree, 1);
  if (degree > 0) B(0, 0) = 1.0;
  Matrix C(1, degree);
  for (Eigen::Index i = 0; i < degree; ++i) C(0, i) = b[i + 1];
  prior.sigma = StateSpaceSystem(std::move(A), std::move(B), std::move(C), Matrix::Constant(1, 1, b[0]));
  for (const Complex& root : prior.zeros()) {
    if (std::abs(root) >= 1.0 - kStrictTol) {
      std::ostringstream os;
      os << "prior_from_polynomial: root " << root << " has modulus " << std::abs(root)
         << " >= 1 (not minimum phase)";
      throw MinimumPhaseError(os.str(), root);
    }
  }
  check_prior_positive(prior);
  return prior;
}

PriorSpectrum prior_from_realization(StateSpaceSystem sigma) {
  if (sigma.inputs() != 1 || sigma.outputs() != 1)
    throw DimensionError("prior_from_realization: sigma must be scalar");
  if (std::abs(sigma.D(0, 0)) <= kStrictTol)
    throw MinimumPhaseError("prior_from_realization: sigma(inf) = 0 has a zero at infinity", Complex(0.0));
  if (!sigma.is_stable()) throw StabilityError("prior_from_realization: sigma is not stable");
  PriorSpectrum prior;
  prior.kind = PriorSpectrum::Kind::rational;
  prior.sigma = std::move(sigma);
  for (const Complex& root : prior.zeros()) {
    if (std::abs(root) >= 1.0 - kStrictTol) {
      std::ostringstream os;
      os << "prior_from_realization: zero " << root << " outside the open unit disk";
      throw MinimumPhaseError(os.str(), root);
    }
  }
  check_prior_positive(prior);
  return prior;
}

PriorMix PriorMix::homotopy(const PriorSpectrum& target, double t) {
  PriorMix mix;
  if (t < 1.0) mix.terms.push_back({1.0 - t, prior_constant()});
  if (t > 0.0) mix.terms.push_back({t, target});
  return mix;
}

PriorMix PriorMix::direction(const PriorSpectrum& target) {
  PriorMix mix;
  mix.terms.push_back({1.0, target});
  mix.terms.push_back({-1.0, prior_constant()});
  return mix;
}

double PriorMix::density(double theta) const {
  double total = 0.0;
  for (const Term& term : terms) total += term.weight * term.prior.density(theta);
  return total;
}

// C+ membership

MembershipReport is_in_Cplus(const FilterBank& filter, const Matrix& C) {
  if (C.rows() != filter.m() || C.cols() != filter.n())
    throw DimensionError("is_in_Cplus: C must be m x n");
  MembershipReport report;
  const Matrix CB = C * filter.B();
  const auto m = filter.m();
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      if (std::abs(CB(i, j)) > kStrictTol) {
        std::ostringstream os;
        os << "CB(" << i << "," << j << ") = " << CB(i, j) << " above the diagonal";
        report.reasons.push_back(os.str());
      }
    }
    if (!(CB(i, i).real() > 0.0) || std::abs(CB(i, i).imag()) > kStrictTol) {
      std::ostringstream os;
      os << "CB(" << i << "," << i << ") = " << CB(i, i) << " is not real positive";
      report.reasons.push_back(os.str());
    }
  }
  if (report.reasons.empty()) {
    const Matrix Pi = filter.A() - filter.B() * CB.triangularView<Eigen::Lower>().solve(C * filter.A());
    report.closed_loop_radius = spectral_radius(Pi);
    if (!(report.closed_loop_radius < 1.0 - kStrictTol)) {
      std::ostringstream os;
      os << "closed loop Pi has spectral radius " << report.closed_loop_radius << " >= 1";
      report.reasons.push_back(os.str());
    }
  }
  report.ok = report.reasons.empty();
  return report;
}

FactorParameter make_factor_parameter(const FilterBank& filter, const Matrix& C) {
  const MembershipReport report = is_in_Cplus(filter, C);
  if (!report.ok) {
    std::string msg = "C is not in C+:";
    for (const auto& r : report.reasons) msg += " " + r + ";";
    throw MembershipError(msg);
  }
  FactorParameter param;
  param.C = C;
  const Matrix CB = C * filter.B();
  param.CB_inverse = CB.triangularView<Eigen::Lower>().solve(Matrix::Identity(CB.rows(), CB.cols()));
  param.Pi = filter.A() - filter.B() * param.CB_inverse * C * filter.A();
  return param;
}

StateSpaceSystem factor_inner_realization(const FilterBank& filter, const FactorParameter& C) {
  return StateSpaceSystem(C.Pi, filter.B() * C.CB_inverse, Matrix::Identity(filter.n(), filter.n()),
                          Matrix::Zero(filter.n(), filter.m()));
}

std::vector<Complex> factor_zeros(const FactorParameter& C) {
  Eigen::ComplexEigenSolver<Matrix> es(C.Pi, false);
  return {es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size()};
}

LplusReport is_in_Lplus(const FilterBank& filter, const Matrix& Lambda, std::size_t grid_points) {
  if (Lambda.rows() != filter.n() || Lambda.cols() != filter.n())
    throw DimensionError("is_in_Lplus: Lambda must be n x n");
  if ((Lambda - Lambda.adjoint()).norm() > kStrictTol * (1.0 + Lambda.norm()))
    throw std::invalid_argument("is_in_Lplus: Lambda is not Hermitian");
  const UniformGrid grid(grid_points);
  const StateSpaceSystem G = filter.system();
  LplusReport report;
  report.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Matrix Gz = eval_transfer(G, grid.point(k));
    const Matrix Phi = hermitian_part(Gz.adjoint() * Lambda * Gz);
    Eigen::SelfAdjointEigenSolver<Matrix> es(Phi, Eigen::EigenvaluesOnly);
    report.min_eigenvalue = std::min(report.min_eigenvalue, es.eigenvalues().minCoeff());
  }
  report.ok = report.min_eigenvalue > 0.0;
  return report;
}

}  // namespace spectral_homotopy

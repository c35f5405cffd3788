#include "spectral_homotopy/matrixeq.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace spectral_homotopy {

namespace {

void require_square(const Matrix& X, const char* what) {
  if (X.rows() != X.cols()) throw DimensionError(std::string(what) + " must be square");
}

void require_hermitian(const Matrix& X, const char* what) {
  if ((X - X.adjoint()).norm() > 1e-10 * (1.0 + X.norm()))
    throw std::invalid_argument(std::string(what) + " is not Hermitian");
}

Matrix dlyap_schur(const Matrix& A, const Matrix& Q) {
  const auto n = A.rows();
  Eigen::ComplexSchur<Matrix> schur(A);
  const Matrix& T = schur.matrixT();
  const Matrix& U = schur.matrixU();
  const Matrix Qt = U.adjoint() * Q * U;
  Matrix Y = Matrix::Zero(n, n);
  Vector tail = Vector::Zero(n);  // sum_{l>j} Y(:,l) conj(T(j,l))
  for (Eigen::Index j = n - 1; j >= 0; --j) {
    tail.setZero();
    for (Eigen::Index l = j + 1; l < n; ++l) tail += Y.col(l) * std::conj(T(j, l));
    Vector rhs = Qt.col(j) + T * tail;
    Matrix lhs = -std::conj(T(j, j)) * T;
    lhs.diagonal().array() += 1.0;
    Y.col(j) = lhs.triangularView<Eigen::Upper>().solve(rhs);
  }
  return hermitian_part(U * Y * U.adjoint());
}

Matrix dlyap_series(const Matrix& A, const Matrix& Q) {
  Matrix R = Q;
  Matrix Ak = A;
  for (int k = 0; k < 64; ++k) {
    const Matrix term = Ak * R * Ak.adjoint();
    R += term;
    if (term.norm() <= 1e-17 * R.norm()) break;
    Ak = Ak * Ak;
  }
  return hermitian_part(R);
}

Matrix cholesky_lower(const Matrix& M, const char* what, const std::vector<int>& pivot_labels) {
  const auto n = M.rows();
  Matrix L = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double d = M(j, j).real();
    for (Eigen::Index k = 0; k < j; ++k) d -= std::norm(L(j, k));
    if (!(d > 0.0)) {
      std::ostringstream os;
      os << what << ": matrix is not positive definite (pivot " << pivot_labels[j] << " = " << d << ")";
      throw FactorizationError(os.str(), pivot_labels[j]);
    }
    const double ljj = std::sqrt(d);
    L(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      Complex s = M(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= L(i, k) * std::conj(L(j, k));
      L(i, j) = s / ljj;
    }
  }
  return L;
}

// Control-form DARE
//   X = A*XA - (A*XB + S)(R + B*XB)^{-1}(B*XA + S*) + Q
struct ControlDare {
  Matrix A, B, Q, R, S;

  Matrix rhs(const Matrix& X) const {
    const Matrix gain_num = B.adjoint() * X * A + S.adjoint();
    const Matrix inner = R + B.adjoint() * X * B;
    return hermitian_part(A.adjoint() * X * A - gain_num.adjoint() * inner.lu().solve(gain_num) + Q);
  }
  Matrix gain(const Matrix& X) const {
    return (R + B.adjoint() * X * B).lu().solve(B.adjoint() * X * A + S.adjoint());
  }
};

struct IterationResult {
  Matrix X;
  int iterations = 0;
  bool converged = false;
  std::vector<double> history;
};

// Structure-preserving doubling after shifting the constant term away:
// with Y - A*YA = Q the shifted unknown X - Y solves a DARE with Q' = 0,
// S' = S + A*YB, R' = R + B*YB, and R' > 0 lets the cross term be absorbed.
IterationResult solve_doubling(const ControlDare& dare, const DareOptions& options) {
  IterationResult result;
  const auto n = dare.A.rows();
  const Matrix Y = solve_dlyap(dare.A.adjoint(), dare.Q);
  const Matrix Sp = dare.S + dare.A.adjoint() * Y * dare.B;
  const Matrix Rp = hermitian_part(dare.R + dare.B.adjoint() * Y * dare.B);
  Eigen::LLT<Matrix> rp_llt(Rp);
  if (rp_llt.info() != Eigen::Success) return result;
  const Matrix Rinv_Sp = rp_llt.solve(Sp.adjoint());
  Matrix Ak = dare.A - dare.B * Rinv_Sp;
  Matrix Gk = hermitian_part(dare.B * rp_llt.solve(dare.B.adjoint()));
  Matrix Hk = hermitian_part(-Sp * Rinv_Sp);
  const Matrix I = Matrix::Identity(n, n);
  for (int it = 1; it <= options.max_iterations; ++it) {
    Eigen::PartialPivLU<Matrix> W(I + Gk * Hk);
    const double rcond = W.rcond();
    if (!(rcond > 1e-14)) return result;
    const Matrix WA = W.solve(Ak);
    const Matrix WG = W.solve(Gk);
    const Matrix A_next = Ak * WA;
    const Matrix G_next = hermitian_part(Gk + Ak * WG * Ak.adjoint());
    const Matrix H_next = hermitian_part(Hk + Ak.adjoint() * Hk * WA);
    const double update = (H_next - Hk).norm() / (1.0 + H_next.norm());
    result.history.push_back(update);
    Ak = A_next;
    Gk = G_next;
    Hk = H_next;
    result.iterations = it;
    if (!std::isfinite(update)) return result;
    if (update <= options.tolerance) {
      result.converged = true;
      break;
    }
  }
  result.X = hermitian_part(Hk + Y);
  return result;
}

IterationResult solve_fixed_point(const ControlDare& dare, const Matrix& start, const DareOptions& options) {
  IterationResult result;
  Matrix X = start;
  for (int it = 1; it <= options.max_iterations; ++it) {
    const Matrix next = dare.rhs(X);
    const double update = (next - X).norm() / (1.0 + next.norm());
    result.history.push_back(update);
    X = next;
    result.iterations = it;
    if (!std::isfinite(update)) break;
    if (update <= options.tolerance) {
      result.converged = true;
      break;
    }
  }
  result.X = X;
  return result;
}

double residual_norm(const ControlDare& dare, const Matrix& X) { return (X - dare.rhs(X)).norm(); }

bool acceptable(const ControlDare& dare, const IterationResult& r, const DareOptions& options) {
  if (r.X.size() == 0 || !r.X.allFinite()) return false;
  const double res = residual_norm(dare, r.X);
  if (!(res <= options.residual_tolerance * (1.0 + r.X.norm()))) return false;
  return spectral_radius(dare.A - dare.B * dare.gain(r.X)) < 1.0 - kStrictTol;
}

IterationResult run_dare(const ControlDare& dare, const Matrix& default_start, const DareOptions& options,
                         DareMethod& used) {
  std::vector<double> history;
  if (options.method == DareMethod::doubling) {
    IterationResult r = solve_doubling(dare, options);
    if (acceptable(dare, r, options) || !options.fallback) {
      used = DareMethod::doubling;
      return r;
    }
    history = r.history;
  }
  used = DareMethod::fixed_point;
  IterationResult r = solve_fixed_point(dare, options.initial.value_or(default_start), options);
  history.insert(history.end(), r.history.begin(), r.history.end());
  r.history = std::move(history);
  return r;
}

void throw_failure(const char* who, const IterationResult& r, double residual) {
  std::ostringstream os;
  os << who << ": no stabilizing solution found after " << r.history.size()
     << " iterations (residual " << residual << ")";
  throw SolverFailure(os.str(), r.history);
}

}  // namespace

Matrix solve_dlyap(const Matrix& A, const Matrix& Q) {
  require_square(A, "solve_dlyap: A");
  if (Q.rows() != A.rows() || Q.cols() != A.cols()) throw DimensionError("solve_dlyap: Q must match A");
  require_hermitian(Q, "solve_dlyap: Q");
  if (A.rows() == 0) return Q;
  if (spectral_radius(A) >= 1.0 - kStrictTol)
    throw StabilityError("solve_dlyap: A is not Schur stable");
  return A.rows() <= 200 ? dlyap_schur(A, Q) : dlyap_series(A, Q);
}

Matrix standard_cholesky(const Matrix& M) {
  require_square(M, "standard_cholesky: M");
  require_hermitian(M, "standard_cholesky: M");
  std::vector<int> labels(M.rows());
  for (int i = 0; i < static_cast<int>(labels.size()); ++i) labels[i] = i;
  return cholesky_lower(M, "standard_cholesky", labels);
}

Matrix reverse_cholesky(const Matrix& M) {
  require_square(M, "reverse_cholesky: M");
  require_hermitian(M, "reverse_cholesky: M");
  const auto n = M.rows();
  // J M J = L1 L1*  =>  M = (J L1* J)* (J L1* J), J the exchange matrix.
  const Matrix flipped = M.reverse();
  std::vector<int> labels(n);
  for (int i = 0; i < static_cast<int>(n); ++i) labels[i] = static_cast<int>(n) - 1 - i;
  const Matrix L1 = cholesky_lower(flipped, "reverse_cholesky", labels);
  return Matrix(L1.adjoint()).reverse();
}

DareSolution solve_dare_lambda(const FilterBank& filter, const Matrix& Lambda, const DareOptions& options) {
  const auto n = filter.n();
  const auto m = filter.m();
  if (Lambda.rows() != n || Lambda.cols() != n) throw DimensionError("solve_dare_lambda: Lambda must be n x n");
  const LplusReport lplus = is_in_Lplus(filter, Lambda, 1024);
  if (!lplus.ok) {
    std::ostringstream os;
    os << "solve_dare_lambda: Lambda not in L+ (min eigenvalue of G*LambdaG on grid " << lplus.min_eigenvalue
       << ")";
    throw MembershipError(os.str());
  }
  const ControlDare dare{filter.A(), filter.B(), hermitian_part(Lambda), Matrix::Zero(m, m), Matrix::Zero(n, m)};
  DareMethod used{};
  IterationResult r = run_dare(dare, dare.Q, options, used);
  const double res = r.X.size() ? residual_norm(dare, r.X) : INFINITY;
  if (!acceptable(dare, r, options)) throw_failure("solve_dare_lambda", r, res);

  DareSolution sol;
  sol.P = r.X;
  enforce_field(filter.field(), sol.P, "solve_dare_lambda P");
  const Matrix BPB = hermitian_part(filter.B().adjoint() * sol.P * filter.B());
  try {
    sol.L = reverse_cholesky(BPB);
  } catch (const FactorizationError& e) {
    throw DegenerateError(std::string("solve_dare_lambda: B*PB is not positive definite: ") + e.what());
  }
  sol.closed_loop = filter.A() - filter.B() * BPB.lu().solve(filter.B().adjoint() * sol.P * filter.A());
  sol.residual_norm = residual_norm(dare, sol.P);
  sol.iterations = r.iterations;
  sol.method = used;
  sol.history = std::move(r.history);
  return sol;
}

double min_para_hermitian_eigenvalue(const Matrix& F, const Matrix& G, const Matrix& H, const Matrix& J,
                                     std::size_t grid_points) {
  const StateSpaceSystem Z(F, G, H, J);
  const UniformGrid grid(grid_points);
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Matrix Zk = eval_transfer(Z, grid.point(k));
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(Zk + Zk.adjoint()), Eigen::EigenvaluesOnly);
    lo = std::min(lo, es.eigenvalues().minCoeff());
  }
  return lo;
}

DareSolution solve_dare_appendix(const Matrix& F, const Matrix& G, const Matrix& H, const Matrix& J,
                                 const DareOptions& options, std::size_t positivity_grid) {
  const auto n = F.rows();
  const auto m = J.rows();
  require_square(F, "solve_dare_appendix: F");
  require_square(J, "solve_dare_appendix: J");
  if (G.rows() != n || G.cols() != m || H.rows() != m || H.cols() != n)
    throw DimensionError("solve_dare_appendix: inconsistent dimensions");
  if (spectral_radius(F) >= 1.0 - kStrictTol) throw StabilityError("solve_dare_appendix: F is not Schur stable");
  if (positivity_grid > 0) {
    const double lo = min_para_hermitian_eigenvalue(F, G, H, J, positivity_grid);
    if (!(lo > 0.0)) {
      std::ostringstream os;
      os << "solve_dare_appendix: Z + Z* is not positive on the unit circle (min eigenvalue " << lo << ")";
      throw PositivityError(os.str(), lo);
    }
  }
  const Matrix R = hermitian_part(J + J.adjoint());
  // With A = F*, B = H*, S = G, Q = 0 this equation is the control form.
  const ControlDare dare{F.adjoint(), H.adjoint(), Matrix::Zero(n, n), R, G};
  DareMethod used{};
  IterationResult r = run_dare(dare, Matrix::Zero(n, n), options, used);
  const double res = r.X.size() ? residual_norm(dare, r.X) : INFINITY;
  if (!acceptable(dare, r, options)) throw_failure("solve_dare_appendix", r, res);

  DareSolution sol;
  sol.P = r.X;
  const Matrix innovation = hermitian_part(R + H * sol.P * H.adjoint());
  try {
    sol.L = standard_cholesky(innovation);
  } catch (const FactorizationError& e) {
    throw DegenerateError(std::string("solve_dare_appendix: R + HPH* is not positive definite: ") + e.what());
  }
  sol.closed_loop = F - (G + F * sol.P * H.adjoint()) * innovation.lu().solve(H);
  sol.residual_norm = res;
  sol.iterations = r.iterations;
  sol.method = used;
  sol.history = std::move(r.history);
  return sol;
}

}  // namespace spectral_homotopy

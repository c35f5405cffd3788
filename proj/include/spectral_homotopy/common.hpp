#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace spectral_homotopy {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

enum class Field { real, complex };

/// Tolerance applied to every strict inequality (spectral radius < 1,
/// positive diagonals, imaginary parts of real-field data).
inline constexpr double kStrictTol = 1e-12;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dimension mismatch between arguments.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Transfer-function evaluation at a pole.
class EvaluationError : public Error {
 public:
  EvaluationError(const std::string& what, Complex z) : Error(what), z_(z) {}
  Complex z() const { return z_; }

 private:
  Complex z_;
};

class StabilityError : public Error {
 public:
  using Error::Error;
};

class MinimumPhaseError : public Error {
 public:
  MinimumPhaseError(const std::string& what, Complex root) : Error(what), root_(root) {}
  Complex root() const { return root_; }

 private:
  Complex root_;
};

/// Parameter outside the admissible set (C+, L+, Range Gamma, ...).
class MembershipError : public Error {
 public:
  using Error::Error;
};

/// Cholesky-type factorization hit a non-positive pivot.
class FactorizationError : public Error {
 public:
  FactorizationError(const std::string& what, int pivot) : Error(what), pivot_(pivot) {}
  int pivot() const { return pivot_; }

 private:
  int pivot_;
};

/// An iterative matrix-equation solver did not converge.
class SolverFailure : public Error {
 public:
  SolverFailure(const std::string& what, std::vector<double> history)
      : Error(what), history_(std::move(history)) {}
  const std::vector<double>& residual_history() const { return history_; }

 private:
  std::vector<double> history_;
};

/// Riccati solution exists but its innovation covariance is not positive definite.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// Integrand becomes singular on the unit circle (parameter at the boundary).
class NearBoundaryError : public Error {
 public:
  NearBoundaryError(const std::string& what, double min_eigenvalue)
      : Error(what), min_eigenvalue_(min_eigenvalue) {}
  double min_eigenvalue() const { return min_eigenvalue_; }

 private:
  double min_eigenvalue_;
};

/// Z + Z* fails to be positive on the grid.
class PositivityError : public NearBoundaryError {
 public:
  using NearBoundaryError::NearBoundaryError;
};

class IllConditionedError : public Error {
 public:
  IllConditionedError(const std::string& what, double condition)
      : Error(what), condition_(condition) {}
  double condition() const { return condition_; }

 private:
  double condition_;
};

class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& what, double residual) : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

// Small helpers shared across modules.

inline Matrix adjoint(const Matrix& X) { return X.adjoint(); }

inline Matrix hermitian_part(const Matrix& X) { return 0.5 * (X + X.adjoint()); }

double spectral_radius(const Matrix& A);

/// Real inner product Re trace(X Y*).
inline double inner(const Matrix& X, const Matrix& Y) {
  return (X.array() * Y.conjugate().array()).sum().real();
}

/// Throws if a real-field quantity carries an imaginary part above
/// kStrictTol * (1 + |X|_F); otherwise drops the imaginary part.
void enforce_field(Field field, Matrix& X, const char* what);

}  // namespace spectral_homotopy

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "spectral_homotopy/common.hpp"

namespace spectral_homotopy {

/// Left-open uniform grid on the unit circle: theta_k = -pi + k * 2pi/N,
/// k = 1..N, so theta = pi is included and -pi is not.
struct UniformGrid {
  explicit UniformGrid(std::size_t points);
  /// Grid whose spacing is the closest to `dtheta` with an integer number of
  /// points.
  static UniformGrid from_step(double dtheta);

  std::size_t size() const { return points_; }
  double step() const;
  double angle(std::size_t k) const;  // k in [0, N): returns theta_{k+1}
  Complex point(std::size_t k) const;

 private:
  std::size_t points_;
};

/// Discrete-time realization C (zI - A)^{-1} B + D.
struct StateSpaceSystem {
  Matrix A;
  Matrix B;
  Matrix C;
  Matrix D;

  StateSpaceSystem() = default;
  StateSpaceSystem(Matrix a, Matrix b, Matrix c, Matrix d);

  /// Static gain D with no states.
  static StateSpaceSystem gain(const Matrix& d);

  Eigen::Index states() const { return A.rows(); }
  Eigen::Index inputs() const { return D.cols(); }
  Eigen::Index outputs() const { return D.rows(); }

  bool is_stable(double tol = kStrictTol) const;
};

/// C (zI - A)^{-1} B + D. Throws EvaluationError if z is an eigenvalue of A.
Matrix eval_transfer(const StateSpaceSystem& sys, Complex z);

/// Realization of left(z) * right(z).
StateSpaceSystem multiply(const StateSpaceSystem& left, const StateSpaceSystem& right);

/// Realization of outer(z) * inner(z) for a scalar `outer`. The scalar is
/// applied on each input channel of `inner`, so the result has
/// inner.states() + inner.inputs() * outer.states() states.
StateSpaceSystem cascade(const StateSpaceSystem& outer, const StateSpaceSystem& inner);

/// The pair (A, B) of G(z) = (zI - A)^{-1} B.
class FilterBank {
 public:
  /// Validates stability, full column rank of B and reachability.
  FilterBank(Matrix A, Matrix B, Field field = Field::complex);

  const Matrix& A() const { return A_; }
  const Matrix& B() const { return B_; }
  Field field() const { return field_; }
  Eigen::Index n() const { return A_.rows(); }
  Eigen::Index m() const { return B_.cols(); }

  Matrix eval(Complex z) const;
  StateSpaceSystem system() const;

 private:
  Matrix A_;
  Matrix B_;
  Field field_;
};

/// Shift-structured filter of matrix covariance extension: n = m(p+1),
/// A has identity blocks on the block super-diagonal, B = [0; ...; 0; I_m],
/// G(z) stacks z^{-p-1} I_m, ..., z^{-1} I_m.
FilterBank make_covariance_extension_filter(int m, int p, Field field = Field::real);

/// Scalar prior psi = |sigma|^2 on the unit circle, sigma outer.
struct PriorSpectrum {
  enum class Kind { constant, polynomial, rational };

  Kind kind = Kind::constant;
  StateSpaceSystem sigma;
  std::vector<Complex> coefficients;  // b_0, b_1, ... for Kind::polynomial

  double density(double theta) const;
  /// Zeros of sigma (eigenvalues of A - B D^{-1} C).
  std::vector<Complex> zeros() const;
};

/// psi == c (c > 0); sigma == sqrt(c).
PriorSpectrum prior_constant(double c = 1.0);

/// sigma(z) = sum_k b_k z^{-k}. Throws MinimumPhaseError when a root of b
/// (in z^{-1}) has modulus >= 1.
PriorSpectrum prior_from_polynomial(const std::vector<Complex>& b);

/// Prior from an explicit scalar realization; validates stability, D != 0,
/// minimum phase and positivity on a 4096-point grid.
PriorSpectrum prior_from_realization(StateSpaceSystem sigma);

/// A real-weighted sum of priors. Moment maps are linear in the prior, so a
/// mixture is evaluated term by term; along the homotopy
/// p(t) = (1-t) 1 + t psi this avoids refactoring p(t).
struct PriorMix {
  struct Term {
    double weight;
    PriorSpectrum prior;
  };
  std::vector<Term> terms;

  PriorMix() = default;
  PriorMix(const PriorSpectrum& prior) : terms{{1.0, prior}} {}  // NOLINT

  static PriorMix homotopy(const PriorSpectrum& target, double t);
  /// psi - 1, the derivative of the homotopy in t.
  static PriorMix direction(const PriorSpectrum& target);

  double density(double theta) const;
};

/// A point of C+: CB lower triangular with positive real diagonal and
/// Pi = A - B (CB)^{-1} C A Schur stable.
struct FactorParameter {
  Matrix C;
  Matrix Pi;
  Matrix CB_inverse;
};

struct MembershipReport {
  bool ok = true;
  std::vector<std::string> reasons;
  double closed_loop_radius = 0.0;
};

MembershipReport is_in_Cplus(const FilterBank& filter, const Matrix& C);

/// Throws MembershipError naming the failed conditions.
FactorParameter make_factor_parameter(const FilterBank& filter, const Matrix& C);

/// Realization (Pi, B (CB)^{-1}, I, 0) of G(z) (zCG(z))^{-1}.
StateSpaceSystem factor_inner_realization(const FilterBank& filter, const FactorParameter& C);

/// Eigenvalues of Pi; the zeros of det(zCG(z)) are among them.
std::vector<Complex> factor_zeros(const FactorParameter& C);

struct LplusReport {
  bool ok = false;
  double min_eigenvalue = 0.0;
};

/// min over a gridN-point circle grid of lambda_min(G* Lambda G).
LplusReport is_in_Lplus(const FilterBank& filter, const Matrix& Lambda, std::size_t grid_points);

}  // namespace spectral_homotopy

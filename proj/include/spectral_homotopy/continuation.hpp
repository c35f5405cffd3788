#pragma once

#include <vector>

#include "spectral_homotopy/chart.hpp"
#include "spectral_homotopy/common.hpp"
#include "spectral_homotopy/moment.hpp"
#include "spectral_homotopy/statespace.hpp"

namespace spectral_homotopy {

struct HomotopyConfig {
  double dt = 0.1;
  double newton_tol = 1e-10;
  int max_newton = 20;
  double min_dt = 1e-4;
  std::size_t grid_n = 1024;

  /// Throws std::invalid_argument unless 0 < min_dt <= dt <= 1, newton_tol > 0.
  void validate() const;
};

struct PathSample {
  double t = 0.0;
  Matrix C;
  /// Coordinates of C in the run's fixed factor basis.
  RealVector y;
  double residual = 0.0;
  int newton_iters = 0;
  /// Largest Gram condition number met by the corrector at this t.
  double gram_cond = 0.0;
  /// |v(t)|_F of the path tangent at this sample (0 where not computed).
  double tangent_norm = 0.0;
  std::vector<double> residual_history;
};

struct SolutionPath {
  std::vector<PathSample> samples;
  HomotopyConfig config;
  RealVector sigma_coords;
  /// Basis the y coordinates refer to.
  std::vector<Matrix> factor_basis;
  int rejected_steps = 0;
};

class CorrectorFailure : public Error {
 public:
  CorrectorFailure(const std::string& what, std::vector<double> history)
      : Error(what), history_(std::move(history)) {}
  const std::vector<double>& residual_history() const { return history_; }

 private:
  std::vector<double> history_;
};

/// Newton iterate left C+ and 30 halvings did not bring it back.
class BoundaryError : public Error {
 public:
  using Error::Error;
};

/// Adaptive step control hit min_dt. Carries the accepted part of the path.
class StepFloorError : public Error {
 public:
  StepFloorError(const std::string& what, SolutionPath partial) : Error(what), partial_(std::move(partial)) {}
  const SolutionPath& partial_path() const { return partial_; }

 private:
  SolutionPath partial_;
};

/// Closed-form solution for the constant prior:
/// C = L^{-*} B* Sigma^{-1}, B* Sigma^{-1} B = L* L.
FactorParameter maxent_initialization(const FilterBank& filter, const CoordinateChart& chart, const Matrix& Sigma);

/// Path tangent v(t) = -[g'_2]^{-1} g'_1(. ; psi - 1) at (p(t), C).
JacobianSolve path_tangent(const FilterBank& filter, const CoordinateChart& chart, const PriorSpectrum& target,
                           double t, const FactorParameter& C, std::size_t grid_n = 1024);

/// Euler predictor C + dt v(t).
Matrix predictor_step(const FilterBank& filter, const CoordinateChart& chart, const PriorSpectrum& target, double t,
                      const FactorParameter& C, double dt, std::size_t grid_n = 1024);

struct CorrectorResult {
  FactorParameter C;
  int iterations = 0;
  double residual = 0.0;
  double gram_cond = 0.0;
  std::vector<double> residual_history;
};

/// Newton's method on g(prior, C) = Sigma with backtracking into C+.
CorrectorResult corrector_newton(const FilterBank& filter, const CoordinateChart& chart, const PriorMix& prior,
                                 const FactorParameter& start, const Matrix& Sigma, const HomotopyConfig& config);

/// Predictor-corrector continuation from the maximum-entropy solution (t = 0)
/// to the solution for `target` (t = 1).
SolutionPath run_continuation(const FilterBank& filter, const Matrix& Sigma, const PriorSpectrum& target,
                              const HomotopyConfig& config = {});

}  // namespace spectral_homotopy

#include "spectral_homotopy/continuation.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "spectral_homotopy/matrixeq.hpp"

namespace spectral_homotopy {

void HomotopyConfig::validate() const {
  if (!(min_dt > 0.0 && min_dt <= dt && dt <= 1.0))
    throw std::invalid_argument("HomotopyConfig: need 0 < min_dt <= dt <= 1");
  if (!(newton_tol > 0.0)) throw std::invalid_argument("HomotopyConfig: newton_tol must be positive");
  if (max_newton < 0) throw std::invalid_argument("HomotopyConfig: max_newton must be nonnegative");
  if (grid_n == 0) throw std::invalid_argument("HomotopyConfig: grid_n must be positive");
}

FactorParameter maxent_initialization(const FilterBank& filter, const CoordinateChart& chart, const Matrix& Sigma) {
  if (Sigma.rows() != filter.n() || Sigma.cols() != filter.n())
    throw DimensionError("maxent_initialization: Sigma must be n x n");
  const Matrix S = hermitian_part(Sigma);
  Eigen::LLT<Matrix> llt(S);
  if (llt.info() != Eigen::Success)
    throw MembershipError("maxent_initialization: Sigma is not positive definite");
  const double residual = range_gamma_residual(chart, S);
  if (residual > 1e-8 * S.norm()) {
    std::ostringstream os;
    os << "maxent_initialization: Sigma is infeasible (not in Range Gamma, projection residual " << residual << ")";
    throw InfeasibleError(os.str(), residual);
  }
  const Matrix SiB = llt.solve(filter.B());
  const Matrix L = reverse_cholesky(hermitian_part(filter.B().adjoint() * SiB));
  Matrix C = L.adjoint().triangularView<Eigen::Upper>().solve(SiB.adjoint());
  enforce_field(filter.field(), C, "maxent_initialization C");
  return make_factor_parameter(filter, C);
}

JacobianSolve path_tangent(const FilterBank& filter, const CoordinateChart& chart, const PriorSpectrum& target,
                           double t, const FactorParameter& C, std::size_t grid_n) {
  const Matrix direction = apply_g1_direction(filter, target, C);
  JacobianSolveOptions options;
  options.positivity_grid = grid_n;
  return solve_jacobian_system(filter, chart, PriorMix::homotopy(target, t), C,
                               project_range_gamma(chart, -direction).matrix, options);
}

Matrix predictor_step(const FilterBank& filter, const CoordinateChart& chart, const PriorSpectrum& target, double t,
                      const FactorParameter& C, double dt, std::size_t grid_n) {
  if (dt == 0.0) return C.C;
  return C.C + dt * path_tangent(filter, chart, target, t, C, grid_n).V;
}

CorrectorResult corrector_newton(const FilterBank& filter, const CoordinateChart& chart, const PriorMix& prior,
                                 const FactorParameter& start, const Matrix& Sigma, const HomotopyConfig& config) {
  CorrectorResult result;
  result.C = start;
  JacobianSolveOptions options;
  options.positivity_grid = config.grid_n;
  for (int iter = 0;; ++iter) {
    const Matrix residual = moment_g_statespace(filter, prior, result.C) - Sigma;
    result.residual = residual.norm();
    result.residual_history.push_back(result.residual);
    result.iterations = iter;
    if (result.residual <= config.newton_tol) return result;
    if (!std::isfinite(result.residual) || iter >= config.max_newton) {
      std::ostringstream os;
      os << "corrector_newton: residual " << result.residual << " after " << iter << " iterations";
      throw CorrectorFailure(os.str(), result.residual_history);
    }
    const JacobianSolve step =
        solve_jacobian_system(filter, chart, prior, result.C, project_range_gamma(chart, residual).matrix, options);
    result.gram_cond = std::max(result.gram_cond, step.gram_condition);
    double scale = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= 30; ++halving, scale *= 0.5) {
      const Matrix candidate = result.C.C - scale * step.V;
      if (is_in_Cplus(filter, candidate).ok) {
        result.C = make_factor_parameter(filter, candidate);
        accepted = true;
        break;
      }
    }
    if (!accepted) throw BoundaryError("corrector_newton: Newton step cannot be kept inside C+");
  }
}

namespace {

PathSample make_sample(double t, const CorrectorResult& corrected, const std::vector<Matrix>& basis) {
  PathSample s;
  s.t = t;
  s.C = corrected.C.C;
  s.y.resize(static_cast<Eigen::Index>(basis.size()));
  for (std::size_t k = 0; k < basis.size(); ++k) s.y(static_cast<Eigen::Index>(k)) = inner(s.C, basis[k]);
  s.residual = corrected.residual;
  s.newton_iters = corrected.iterations;
  s.gram_cond = corrected.gram_cond;
  s.residual_history = corrected.residual_history;
  return s;
}

}  // namespace

SolutionPath run_continuation(const FilterBank& filter, const Matrix& Sigma, const PriorSpectrum& target,
                              const HomotopyConfig& config) {
  config.validate();
  const CoordinateChart chart = make_chart(filter);
  SolutionPath path;
  path.config = config;
  path.factor_basis = chart.factor_basis;
  path.sigma_coords = chart.range_coords(Sigma);

  const FactorParameter start = maxent_initialization(filter, chart, Sigma);
  CorrectorResult current = corrector_newton(filter, chart, PriorMix::homotopy(target, 0.0), start, Sigma, config);
  path.samples.push_back(make_sample(0.0, current, chart.factor_basis));

  double t = 0.0;
  double dt = config.dt;
  while (t < 1.0) {
    const JacobianSolve tangent = path_tangent(filter, chart, target, t, current.C, config.grid_n);
    path.samples.back().tangent_norm = tangent.V.norm();
    for (;;) {
      double t_next = std::min(1.0, t + dt);
      if (1.0 - t_next <= 1e-9 * dt) t_next = 1.0;
      try {
        const Matrix predicted = current.C.C + (t_next - t) * tangent.V;
        const FactorParameter guess = make_factor_parameter(filter, predicted);
        CorrectorResult corrected =
            corrector_newton(filter, chart, PriorMix::homotopy(target, t_next), guess, Sigma, config);
        current = std::move(corrected);
        t = t_next;
        path.samples.push_back(make_sample(t, current, chart.factor_basis));
        break;
      } catch (const Error& e) {
        ++path.rejected_steps;
        dt *= 0.5;
        if (dt < config.min_dt) {
          std::ostringstream os;
          os << "run_continuation: step length fell below " << config.min_dt << " at t = " << t
             << " (near the boundary of C+ or ill-conditioned Jacobian): " << e.what();
          throw StepFloorError(os.str(), path);
        }
      }
    }
  }
  return path;
}

}  // namespace spectral_homotopy

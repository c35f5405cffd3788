// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on failure.
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include <Eigen/QR>

#include "spectral_homotopy/chart.hpp"
#include "spectral_homotopy/continuation.hpp"
#include "spectral_homotopy/factorization.hpp"
#include "spectral_homotopy/matrixeq.hpp"
#include "spectral_homotopy/moment.hpp"
#include "spectral_homotopy/sampling.hpp"
#include "test_support.hpp"

using namespace spectral_homotopy;
using namespace test_support;

namespace {

struct Verdict {
  bool ok = true;
  std::ostringstream note;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      note << " [failed: " << what << "]";
    }
  }
};

DensityFn density_of(const PriorSpectrum& p) {
  return [p](double th) { return p.density(th); };
}

Matrix example_sigma(const FilterBank& f) {
  return moment_g_statespace(f, example_prior(), make_factor_parameter(f, c58()));
}

void example1(Verdict& v) {
  const FilterBank f = covext();
  const CoordinateChart chart = make_chart(f);
  const PriorSpectrum psi = example_prior();
  const auto start = std::chrono::steady_clock::now();
  const double cg = condition_number(
      assemble_jacobian_matrix(f, chart, psi, c58(), {JacobianKind::g, IntegrationMethod::quadrature, 1e-4}));
  const double cf = condition_number(assemble_jacobian_matrix(
      f, chart, psi, h_inverse(chart, c58()), {JacobianKind::f, IntegrationMethod::quadrature, 1e-4}));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  v.note << "cond_g=" << cg << " (ref 2.4674e5), cond_f=" << cf << " (ref 3.8187e8), ratio=" << cf / cg
         << ", " << secs << " s";
  v.require(std::abs(cg / 2.4674e5 - 1.0) <= 0.01, "cond_g within 1%");
  v.require(std::abs(cf / 3.8187e8 - 1.0) <= 0.01, "cond_f within 1%");
  v.require(cf / cg >= 1e3, "ratio >= 1e3");
  v.require(secs <= 60.0, "runtime <= 60 s");
}

void example2(Verdict& v) {
  const FilterBank f = covext();
  const PriorSpectrum psi = example_prior();
  const Matrix Sigma = example_sigma(f);
  HomotopyConfig cfg;
  cfg.dt = 0.1;
  cfg.newton_tol = 1e-10;
  const auto start = std::chrono::steady_clock::now();
  const SolutionPath path = run_continuation(f, Sigma, psi, cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const Matrix& C = path.samples.back().C;
  const double err = (C - c58()).norm();
  const double res = (moment_g_statespace(f, psi, make_factor_parameter(f, C)) - Sigma).norm();
  const auto steps = path.samples.size() - 1;
  v.note << "|C-C58|=" << err << ", residual=" << res << ", accepted=" << steps << ", rejected=" << path.rejected_steps
         << ", " << secs << " s";
  v.require(err <= 1e-6, "|C - C58| <= 1e-6");
  v.require(res <= 1e-10, "residual <= 1e-10");
  v.require(steps == 10 && path.rejected_steps == 0, "exactly 10 accepted steps at fixed dt");
  v.require(secs <= 30.0, "runtime <= 30 s");
}

void oracle(Verdict& v) {
  const FilterBank f = covext();
  std::mt19937_64 rng(1001);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const PriorSpectrum p = random_polynomial_prior(rng);
    const FactorParameter C = random_factor_parameter(f, rng);
    const Matrix g = moment_g_statespace(f, p, C);
    const Matrix q = moment_quadrature(f, density_of(p), Parametrization::factor, C.C, 2.0 * M_PI / 4096);
    worst = std::max(worst, (g - q).norm() / g.norm());
  }
  v.note << "20 samples, worst relative difference " << worst;
  v.require(worst <= 1e-7, "relative difference <= 1e-7");
}

void jacobians(Verdict& v) {
  const FilterBank f = covext();
  const CoordinateChart chart = make_chart(f);
  std::mt19937_64 rng(2002);
  std::normal_distribution<double> normal;
  const double eps = 1e-6;
  double worst_fd = 0.0;
  for (int k = 0; k < 10; ++k) {
    const PriorSpectrum p = k == 0 ? example_prior() : random_polynomial_prior(rng);
    const FactorParameter C = k == 0 ? make_factor_parameter(f, c58()) : random_factor_parameter(f, rng, 0.8);
    Matrix V(2, 4);
    for (Eigen::Index i = 0; i < V.size(); ++i) V(i) = normal(rng);
    V = project_factor_space(f, V);
    V /= V.norm();
    const Matrix an = apply_g2_statespace(f, p, C, V);
    const Matrix fd = (moment_g_statespace(f, p, make_factor_parameter(f, C.C + eps * V)) -
                       moment_g_statespace(f, p, make_factor_parameter(f, C.C - eps * V))) /
                      (2 * eps);
    worst_fd = std::max(worst_fd, (fd - an).norm() / an.norm());
  }
  double worst_entry = 0.0;
  for (int k = 0; k < 3; ++k) {
    const PriorSpectrum p = k == 0 ? example_prior() : random_polynomial_prior(rng);
    const Matrix C = k == 0 ? c58() : random_factor_parameter(f, rng).C;
    const RealMatrix Jq = assemble_jacobian_matrix(f, chart, p, C, {JacobianKind::g, IntegrationMethod::quadrature, 1e-4});
    const RealMatrix Js = assemble_jacobian_matrix(f, chart, p, C, {JacobianKind::g, IntegrationMethod::statespace});
    const double scale = Jq.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < Jq.size(); ++i) {
      // entries below roundoff of the matrix scale are compared at that scale
      const double ref = std::max(std::abs(Jq(i)), 1e-8 * scale);
      worst_entry = std::max(worst_entry, std::abs(Jq(i) - Js(i)) / ref);
    }
  }
  v.note << "finite differences worst " << worst_fd << " (10 directions); state-space vs quadrature entries worst "
         << worst_entry;
  v.require(worst_fd <= 1e-5, "apply_g2 vs central differences <= 1e-5");
  v.require(worst_entry <= 1e-6, "Jacobian entries <= 1e-6 relative");
}

void factorizations(Verdict& v) {
  const FilterBank f = covext();
  const CoordinateChart chart = make_chart(f);
  std::mt19937_64 rng(3003);
  double dare = 0.0, left = 0.0, identity = 0.0;
  for (int k = 0; k < 10; ++k) {
    const PriorSpectrum p = k == 0 ? example_prior() : random_polynomial_prior(rng);
    const FactorParameter C = k == 0 ? make_factor_parameter(f, c58()) : random_factor_parameter(f, rng);
    const Matrix Lambda = h_inverse(chart, C.C);
    const DareSolution d = solve_dare_lambda(f, Lambda);
    dare = std::max(dare, d.residual_norm / (1.0 + d.P.norm()));
    const FactorParameter Ch = h_map(f, chart, Lambda);

    // the left factorization used by g'_2 in direction C_2 + r C
    const Matrix V = chart.factor_basis[k % chart.factor_basis.size()] + 4.0 * C.C;
    const Matrix Gm = f.B() * C.CB_inverse;
    const Matrix H = V * C.Pi, J = V * Gm;
    if (min_para_hermitian_eigenvalue(C.Pi, Gm, H, J, 1024) <= 0.0) continue;
    const OuterFactor W = left_outer_factor_from_additive(C.Pi, Gm, H, J);
    dare = std::max(dare, W.dare.residual_norm / (1.0 + W.dare.P.norm()));
    for (std::size_t i = 0; i < 512; ++i) {
      const Complex z = circle_point(i, 512);
      const Matrix Z = H * (z * Matrix::Identity(4, 4) - C.Pi).inverse() * Gm + J;
      const Matrix S = Z + Z.adjoint();
      const Matrix Wz = eval_transfer(W.system, z);
      left = std::max(left, (Wz * Wz.adjoint() - S).norm() / S.norm());
      const Matrix G = f.eval(z);
      const Matrix Wr = z * Ch.C * G;
      const Matrix GLG = G.adjoint() * Lambda * G;
      identity = std::max(identity, (GLG - Wr.adjoint() * Wr).norm() / GLG.norm());
    }
  }
  v.note << "DARE residual/(1+|P|) " << dare << ", |WW* - (Z+Z*)| " << left << ", |G*LG - |zCG|^2| " << identity;
  v.require(dare <= 1e-10, "DARE residuals <= 1e-10 (1+|P|)");
  v.require(left <= 1e-9, "left factorization <= 1e-9");
  v.require(identity <= 1e-9, "G* Lambda G = |zCG|^2 <= 1e-9");
}

void round_trips(Verdict& v) {
  const FilterBank f = covext();
  const CoordinateChart chart = make_chart(f);
  std::mt19937_64 rng(4004);
  double worst_c = 0.0, worst_l = 0.0;
  int lambdas = 0;
  for (int k = 0; k < 20; ++k) {
    const FactorParameter C = random_factor_parameter(f, rng);
    worst_c = std::max(worst_c, (h_map(f, chart, h_inverse(chart, C.C)).C - C.C).norm());
  }
  while (lambdas < 20) {
    const Matrix Lambda = h_inverse(chart, random_factor_parameter(f, rng, 0.5).C) + random_range_element(chart, rng, 0.05);
    if (!is_in_Lplus(f, Lambda, 1024).ok) continue;
    ++lambdas;
    worst_l = std::max(worst_l, (h_inverse(chart, h_map(f, chart, Lambda).C) - Lambda).norm());
  }
  v.note << "h(h^-1(C)) worst " << worst_c << ", h^-1(h(Lambda)) worst " << worst_l << " (20 points each)";
  v.require(worst_c <= 1e-8, "h o h^-1 <= 1e-8");
  v.require(worst_l <= 1e-8, "h^-1 o h <= 1e-8");
}

void maxent(Verdict& v) {
  const FilterBank f = covext();
  const CoordinateChart chart = make_chart(f);
  std::mt19937_64 rng(5005);
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    Matrix Sigma;
    if (k % 2 == 0) {
      Sigma = moment_g_statespace(f, random_polynomial_prior(rng), random_factor_parameter(f, rng));
    } else {
      // random symmetric block-Toeplitz matrix made positive definite
      const Matrix X = random_range_element(chart, rng, 1.0);
      const double lo = Eigen::SelfAdjointEigenSolver<Matrix>(X).eigenvalues().minCoeff();
      Sigma = X + (0.1 - std::min(lo, 0.0)) * Matrix::Identity(4, 4);
    }
    const FactorParameter C = maxent_initialization(f, chart, Sigma);
    worst = std::max(worst, (moment_g_statespace(f, prior_constant(), C) - Sigma).norm() / Sigma.norm());
  }
  v.note << "10 covariances, worst |g(1, C) - Sigma| / |Sigma| = " << worst;
  v.require(worst <= 1e-9, "max-entropy moment match <= 1e-9 |Sigma|");
}

void well_posedness(Verdict& v) {
  const FilterBank f = covext();
  const PriorSpectrum psi = example_prior();
  const Matrix Sigma = example_sigma(f);

  const SolutionPath flat = run_continuation(f, Sigma, prior_constant());
  double max_dy = 0.0;
  for (std::size_t k = 0; k + 1 < flat.samples.size(); ++k)
    max_dy = std::max(max_dy, (flat.samples[k + 1].y - flat.samples[k].y).norm());

  Matrix reference;
  double spread = 0.0;
  for (double dt : {0.1, 1.0, 0.5, 0.2, 0.05}) {
    HomotopyConfig cfg;
    cfg.dt = dt;
    cfg.min_dt = std::min(cfg.min_dt, dt);
    const Matrix C = run_continuation(f, Sigma, psi, cfg).samples.back().C;
    if (reference.size() == 0) reference = C;
    spread = std::max(spread, (C - reference).norm());
  }

  const CoordinateChart a = make_chart(f);
  CoordinateChart b = make_chart(f, c58());
  std::mt19937_64 rng(6006);
  std::normal_distribution<double> normal;
  RealMatrix R(7, 7);
  for (Eigen::Index i = 0; i < R.size(); ++i) R(i) = normal(rng);
  const RealMatrix Q = Eigen::HouseholderQR<RealMatrix>(R).householderQ();
  for (int j = 0; j < 7; ++j) {
    b.range_basis[j] = Matrix::Zero(4, 4);
    for (int k = 0; k < 7; ++k) b.range_basis[j] += Q(k, j) * a.range_basis[k];
  }
  const JacobianRequest gq{JacobianKind::g, IntegrationMethod::quadrature, 1e-4};
  const JacobianRequest gs{JacobianKind::g, IntegrationMethod::statespace, 1e-4};
  const JacobianRequest fq{JacobianKind::f, IntegrationMethod::quadrature, 1e-4};
  const Matrix L = h_inverse(a, c58());
  double chart_rel = 0.0;
  for (const auto& [req, point] : {std::pair{gq, c58()}, std::pair{gs, c58()}, std::pair{fq, L}}) {
    const double ca = condition_number(assemble_jacobian_matrix(f, a, psi, point, req));
    const double cb = condition_number(assemble_jacobian_matrix(f, b, psi, point, req));
    chart_rel = std::max(chart_rel, std::abs(ca - cb) / ca);
  }
  v.note << "constant-prior max |dy| " << max_dy << ", endpoint spread over dt " << spread
         << ", chart change cond relative " << chart_rel;
  v.require(max_dy <= 1e-10, "constant prior path |dy| <= 1e-10");
  v.require(spread <= 1e-6, "endpoint invariant under dt <= 1e-6");
  v.require(chart_rel <= 1e-6, "condition numbers chart invariant <= 1e-6");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Verdict&)>>> criteria = {
      {"1 reference-point condition numbers", example1},
      {"2 recovery of C58 by continuation", example2},
      {"3 State-space vs quadrature oracle", oracle},
      {"4 Jacobian correctness", jacobians},
      {"5 Factorization residuals", factorizations},
      {"6 Diffeomorphism round trips", round_trips},
      {"7 Max-entropy property", maxent},
      {"8 Well-posedness proxies", well_posedness},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      check(v);
    } catch (const std::exception& e) {
      v.ok = false;
      v.note << " [exception: " << e.what() << "]";
    }
    failures += !v.ok;
    std::cout << (v.ok ? "PASS " : "FAIL ") << name << ": " << v.note.str() << std::endl;
  }
  std::cout << (failures == 0 ? "acceptance: all criteria passed" : "acceptance: FAILED") << std::endl;
  return failures == 0 ? 0 : 1;
}

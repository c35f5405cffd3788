#include "spectral_homotopy/selftest.hpp"

#include <chrono>
#include <functional>
#include <random>
#include <sstream>

#include "spectral_homotopy/config.hpp"
#include "spectral_homotopy/factorization.hpp"
#include "spectral_homotopy/moment.hpp"
#include "spectral_homotopy/sampling.hpp"

namespace spectral_homotopy {

namespace {

struct Outcome {
  bool passed = true;
  double worst = 0.0;
  std::string note;
};

Outcome oracle_suite(std::mt19937_64& rng) {
  const FilterBank filter = make_covariance_extension_filter(2, 1);
  Outcome out;
  for (int k = 0; k < 5; ++k) {
    const PriorSpectrum prior = random_polynomial_prior(rng);
    const FactorParameter C = random_factor_parameter(filter, rng);
    const Matrix exact = moment_g_statespace(filter, prior, C);
    const Matrix quad = moment_quadrature(
        filter, [&](double th) { return prior.density(th); }, Parametrization::factor, C.C, 2.0 * M_PI / 2048);
    out.worst = std::max(out.worst, (exact - quad).norm() / exact.norm());
  }
  out.passed = out.worst <= 1e-7;
  return out;
}

Outcome round_trip_suite(std::mt19937_64& rng, double perturb_h) {
  const FilterBank filter = make_covariance_extension_filter(2, 1);
  const CoordinateChart chart = make_chart(filter);
  Outcome out;
  for (int k = 0; k < 5; ++k) {
    const FactorParameter C = random_factor_parameter(filter, rng);
    const Matrix Lambda = h_inverse(chart, C.C);
    Matrix back = h_map(filter, chart, Lambda).C;
    back.array() += perturb_h;
    out.worst = std::max(out.worst, (back - C.C).norm() / (1.0 + C.C.norm()));
  }
  const Json sample = {{"filter", {{"preset", "covext"}, {"m", 2}, {"p", 1}}},
                       {"prior", {{"polynomial", {1.0, -1.0, 0.89}}}},
                       {"sigma", {{"from", {{"prior", {{"polynomial", {1.0, -1.0, 0.89}}}},
                                            {"C", {{0.5, 0.65, 1, 0}, {-2.2615, -1, 2, 1}}}}}}},
                       {"continuation", {{"dt", 0.1}, {"newtonTol", 1e-10}}},
                       {"quadrature", {{"dtheta", 1e-4}}}};
  if (serialize_config(parse_config(sample)) != sample) {
    out.passed = false;
    out.note = "config round trip changed the document";
  }
  out.passed = out.passed && out.worst <= 1e-8;
  return out;
}

Outcome finite_difference_suite(std::mt19937_64& rng) {
  const FilterBank filter = make_covariance_extension_filter(2, 1);
  Outcome out;
  const PriorSpectrum prior = random_polynomial_prior(rng);
  const FactorParameter C = random_factor_parameter(filter, rng, 0.5);
  std::normal_distribution<double> normal;
  const double eps = 1e-6;
  for (int k = 0; k < 3; ++k) {
    Matrix V(filter.m(), filter.n());
    for (Eigen::Index i = 0; i < V.size(); ++i) V(i) = normal(rng);
    V = project_factor_space(filter, V);
    V /= V.norm();
    const Matrix plus = moment_g_statespace(filter, prior, make_factor_parameter(filter, C.C + eps * V));
    const Matrix minus = moment_g_statespace(filter, prior, make_factor_parameter(filter, C.C - eps * V));
    const Matrix analytic = apply_g2_statespace(filter, prior, C, V);
    out.worst = std::max(out.worst, ((plus - minus) / (2 * eps) - analytic).norm() / analytic.norm());
  }
  out.passed = out.worst <= 1e-5;
  return out;
}

}  // namespace

std::vector<SuiteResult> run_selftest(const SelftestOptions& options, std::ostream& log) {
  std::mt19937_64 rng(options.seed);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> suites = {
      {"oracle-equivalence", [&] { return oracle_suite(rng); }},
      {"round-trip", [&] { return round_trip_suite(rng, options.perturb_h); }},
      {"finite-difference", [&] { return finite_difference_suite(rng); }},
  };
  std::vector<SuiteResult> results;
  for (const auto& [name, run] : suites) {
    SuiteResult r;
    r.name = name;
    const auto start = std::chrono::steady_clock::now();
    std::ostringstream detail;
    try {
      const Outcome o = run();
      r.passed = o.passed;
      detail << "worst relative error " << format_real(o.worst);
      if (!o.note.empty()) detail << "; " << o.note;
    } catch (const std::exception& e) {
      r.passed = false;
      detail << "exception: " << e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    r.detail = detail.str();
    log << (r.passed ? "PASS " : "FAIL ") << r.name << " (" << r.detail << ", " << r.seconds << " s)\n";
    results.push_back(r);
  }
  return results;
}

}  // namespace spectral_homotopy

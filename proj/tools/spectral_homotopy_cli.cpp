#include <CLI11.hpp>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "spectral_homotopy/config.hpp"
#include "spectral_homotopy/continuation.hpp"
#include "spectral_homotopy/factorization.hpp"
#include "spectral_homotopy/moment.hpp"
#include "spectral_homotopy/selftest.hpp"

namespace fs = std::filesystem;
using namespace spectral_homotopy;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitSolver = 3;

struct Overrides {
  std::string config_path;
  std::string out_dir;
  std::optional<double> dt, dtheta, tol;
};

RunConfig load(const Overrides& o) {
  if (o.config_path.empty()) throw ConfigError("--config", "a configuration file is required");
  RunConfig config = load_config(o.config_path);
  if (o.dt || o.tol) {
    if (!config.continuation) config.continuation = ContinuationSpec{};
    if (o.dt) config.continuation->dt = *o.dt;
    if (o.tol) config.continuation->newton_tol = *o.tol;
  }
  if (o.dtheta) {
    if (!config.quadrature) config.quadrature = QuadratureSpec{};
    config.quadrature->dtheta = *o.dtheta;
  }
  if (!o.out_dir.empty()) {
    if (!config.output) config.output = OutputSpec{};
    config.output->dir = o.out_dir;
  }
  return config;
}

const PriorSpec& require_prior(const RunConfig& c) {
  if (!c.prior) throw ConfigError("prior", "missing required field");
  return *c.prior;
}

const SigmaSpec& require_sigma(const RunConfig& c) {
  if (!c.sigma) throw ConfigError("sigma", "missing required field");
  return *c.sigma;
}

Matrix require_C(const RunConfig& c, const FilterBank& filter) {
  if (!c.C) throw ConfigError("C", "missing required field");
  if (c.C->value.rows() != filter.m() || c.C->value.cols() != filter.n()) throw ConfigError("C", "must be m x n");
  return c.C->value;
}

fs::path prepare_out(const RunConfig& c) {
  fs::path dir = c.output_dir();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("output.dir", "cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

void write_json(const fs::path& file, const Json& j) {
  std::ofstream os(file);
  os << j.dump(2) << '\n';
  if (!os) throw std::runtime_error("cannot write " + file.string());
}

bool wants(const RunConfig& c, const std::string& format) {
  if (!c.output || !c.output->formats) return true;
  const auto& f = *c.output->formats;
  return std::find(f.begin(), f.end(), format) != f.end();
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

int cmd_solve(const RunConfig& config) {
  const FilterBank filter = config.filter.build();
  const PriorSpectrum prior = require_prior(config).build();
  const Matrix Sigma = require_sigma(config).build(filter);
  const HomotopyConfig homotopy = config.homotopy();
  const fs::path dir = prepare_out(config);

  const auto start = std::chrono::steady_clock::now();
  const SolutionPath path = run_continuation(filter, Sigma, prior, homotopy);
  const double solve_seconds = seconds_since(start);

  const CoordinateChart chart = make_chart(filter);
  const PathSample& last = path.samples.back();
  const Matrix Lambda = h_inverse(chart, last.C);
  const double final_residual = (moment_g_statespace(filter, prior, make_factor_parameter(filter, last.C)) - Sigma).norm();
  double max_gram = 0.0;
  int newton_total = 0;
  for (const PathSample& s : path.samples) {
    max_gram = std::max(max_gram, s.gram_cond);
    newton_total += s.newton_iters;
  }

  if (wants(config, "csv")) {
    std::ofstream csv(dir / "path.csv");
    write_path_csv(csv, path);
  }
  if (wants(config, "json")) write_json(dir / "path.json", path_to_json(path));
  write_json(dir / "final_C.json", encode_matrix(last.C));
  write_json(dir / "final_Lambda.json", encode_matrix(Lambda));
  const Json report = {{"accepted_steps", path.samples.size() - 1},
                       {"rejected_steps", path.rejected_steps},
                       {"newton_iterations", newton_total},
                       {"final_residual", final_residual},
                       {"max_gram_condition", max_gram},
                       {"closed_loop_radius", is_in_Cplus(filter, last.C).closed_loop_radius},
                       {"Lambda_in_Lplus", is_in_Lplus(filter, Lambda, homotopy.grid_n).ok},
                       {"seconds", solve_seconds}};
  write_json(dir / "report.json", report);
  std::cout << "solved: " << path.samples.size() - 1 << " steps, residual " << format_real(final_residual)
            << ", artifacts in " << dir.string() << '\n';
  return kExitOk;
}

int cmd_condnum(const RunConfig& config) {
  const FilterBank filter = config.filter.build();
  const PriorSpectrum prior = require_prior(config).build();
  const Matrix C = require_C(config, filter);
  const MembershipReport member = is_in_Cplus(filter, C);
  if (!member.ok) throw ConfigError("C", "not in C+: " + member.reasons.front());
  const double dtheta = config.dtheta();
  const CoordinateChart chart = make_chart(filter);

  const auto start = std::chrono::steady_clock::now();
  const RealMatrix Jg =
      assemble_jacobian_matrix(filter, chart, prior, C, {JacobianKind::g, IntegrationMethod::quadrature, dtheta});
  const Matrix Lambda = h_inverse(chart, C);
  const RealMatrix Jf =
      assemble_jacobian_matrix(filter, chart, prior, Lambda, {JacobianKind::f, IntegrationMethod::quadrature, dtheta});
  const double cond_g = condition_number(Jg);
  const double cond_f = condition_number(Jf);
  const Json report = {{"dtheta", dtheta},
                       {"grid_points", UniformGrid::from_step(dtheta).size()},
                       {"cond_g", cond_g},
                       {"cond_f", cond_f},
                       {"ratio", cond_f / cond_g},
                       {"seconds", seconds_since(start)}};
  std::cout << report.dump(2) << '\n';
  if (config.output && config.output->dir) write_json(prepare_out(config) / "condnum.json", report);
  return kExitOk;
}

Json zeros_json(const std::vector<Complex>& zeros) {
  Json out = Json::array();
  for (Complex z : zeros) out.push_back({{"re", z.real()}, {"im", z.imag()}, {"modulus", std::abs(z)}});
  return out;
}

int cmd_check(const RunConfig& config) {
  const FilterBank filter = config.filter.build();
  const CoordinateChart chart = make_chart(filter);
  const std::size_t grid = config.homotopy().grid_n;
  Json report = {{"filter", {{"n", filter.n()}, {"m", filter.m()}, {"stable", true},
                             {"range_gamma_dimension", chart.range_basis.size()}}}};
  if (config.prior) {
    try {
      const PriorSpectrum prior = config.prior->build();
      report["prior"] = {{"ok", true}, {"zeros", zeros_json(prior.zeros())}};
    } catch (const MinimumPhaseError& e) {
      report["prior"] = {{"ok", false}, {"violation", "minimum-phase"}, {"message", e.what()}};
    } catch (const Error& e) {
      report["prior"] = {{"ok", false}, {"message", e.what()}};
    }
  }
  if (config.C) {
    const Matrix C = require_C(config, filter);
    const MembershipReport member = is_in_Cplus(filter, C);
    Json entry = {{"in_Cplus", member.ok}, {"reasons", member.reasons},
                  {"closed_loop_radius", member.closed_loop_radius}};
    if (member.ok) {
      const FactorParameter param = make_factor_parameter(filter, C);
      entry["zeros"] = zeros_json(factor_zeros(param));
      const LplusReport lplus = is_in_Lplus(filter, h_inverse(chart, C), grid);
      entry["Lambda_in_Lplus"] = lplus.ok;
      entry["Lambda_min_eigenvalue"] = lplus.min_eigenvalue;
    }
    report["C"] = entry;
  }
  if (config.sigma) {
    Json entry;
    try {
      const Matrix Sigma = config.sigma->build(filter);
      const double residual = range_gamma_residual(chart, Sigma);
      const bool pd = Eigen::SelfAdjointEigenSolver<Matrix>(hermitian_part(Sigma)).eigenvalues().minCoeff() > 0.0;
      entry = {{"positive_definite", pd}, {"projection_residual", residual},
               {"feasible", pd && residual <= 1e-8 * Sigma.norm()}};
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      entry = {{"feasible", false}, {"message", e.what()}};
    }
    report["sigma"] = entry;
  }
  std::cout << report.dump(2) << '\n';
  return kExitOk;
}

int cmd_maxent(const RunConfig& config) {
  const FilterBank filter = config.filter.build();
  const Matrix Sigma = require_sigma(config).build(filter);
  const CoordinateChart chart = make_chart(filter);
  const FactorParameter C = maxent_initialization(filter, chart, Sigma);
  const double residual = (moment_g_statespace(filter, prior_constant(), C) - Sigma).norm();
  const Json report = {{"C", encode_matrix(C.C)}, {"residual", residual}};
  std::cout << report.dump(2) << '\n';
  if (config.output && config.output->dir) write_json(prepare_out(config) / "maxent_C.json", encode_matrix(C.C));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral estimation with a prior by continuation in the prior"};
  app.require_subcommand(1);
  app.fallthrough();
  Overrides o;
  double dt = 0, dtheta = 0, tol = 0;
  app.add_option("--config", o.config_path, "JSON run configuration");
  app.add_option("--out", o.out_dir, "Output directory");
  auto* dt_opt = app.add_option("--dt", dt, "Initial continuation step");
  auto* dtheta_opt = app.add_option("--dtheta", dtheta, "Quadrature grid step");
  auto* tol_opt = app.add_option("--tol", tol, "Newton residual tolerance");
  double perturb_h = 0.0;

  auto* solve = app.add_subcommand("solve", "Run the continuation and write the path");
  auto* condnum = app.add_subcommand("condnum", "Condition numbers of the f and g Jacobians");
  auto* check = app.add_subcommand("check", "Membership and feasibility report");
  auto* maxent = app.add_subcommand("maxent", "Maximum-entropy factor for sigma");
  auto* selftest = app.add_subcommand("selftest", "Run the built-in test suites");
  selftest->add_option("--perturb-h", perturb_h, "Test hook: perturb the h map")->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }
  if (*dt_opt) o.dt = dt;
  if (*dtheta_opt) o.dtheta = dtheta;
  if (*tol_opt) o.tol = tol;

  try {
    if (*selftest) {
      SelftestOptions options;
      options.perturb_h = perturb_h;
      const auto results = run_selftest(options, std::cout);
      bool ok = true;
      for (const auto& r : results) ok = ok && r.passed;
      std::cout << (ok ? "selftest: all suites passed\n" : "selftest: FAILED\n");
      return ok ? kExitOk : 1;
    }
    const RunConfig config = load(o);
    if (*solve) return cmd_solve(config);
    if (*condnum) return cmd_condnum(config);
    if (*check) return cmd_check(config);
    if (*maxent) return cmd_maxent(config);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const StepFloorError& e) {
    std::cerr << "solver error: " << e.what() << " (" << e.partial_path().samples.size()
              << " samples accepted before failure)\n";
    return kExitSolver;
  } catch (const std::exception& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kExitSolver;
  }
  return kExitConfig;
}

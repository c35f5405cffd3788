#include "spectral_homotopy/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "spectral_homotopy/moment.hpp"

namespace spectral_homotopy {

namespace {

std::string at(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string at(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

Complex decode_scalar(const Json& j, const std::string& path, bool& complex_entry) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    complex_entry = true;
    return {j[0].get<double>(), j[1].get<double>()};
  }
  throw ConfigError(path, "expected a number or an [re, im] pair");
}

Json encode_scalar(Complex z, bool complex_entry) {
  if (complex_entry) return Json::array({z.real(), z.imag()});
  return z.real();
}

const Json& require(const Json& j, const std::string& path, const std::string& key) {
  if (!j.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(at(path, key), "missing required field");
  return *it;
}

template <class T>
std::optional<T> optional_number(const Json& j, const std::string& path, const std::string& key) {
  auto it = j.find(key);
  if (it == j.end()) return std::nullopt;
  if (!it->is_number()) throw ConfigError(at(path, key), "expected a number");
  if constexpr (std::is_integral_v<T>) {
    if (!it->is_number_integer()) throw ConfigError(at(path, key), "expected an integer");
    if constexpr (std::is_unsigned_v<T>) {
      if (it->get<long long>() < 0) throw ConfigError(at(path, key), "expected a nonnegative integer");
    }
  }
  return it->get<T>();
}

void reject_unknown(const Json& j, const std::string& path, std::initializer_list<const char*> known) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw ConfigError(at(path, it.key()), "unknown field");
  }
}

Field parse_field(const Json& j, const std::string& path) {
  if (j == "real") return Field::real;
  if (j == "complex") return Field::complex;
  throw ConfigError(path, "expected \"real\" or \"complex\"");
}

FilterSpec parse_filter(const Json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  FilterSpec spec;
  if (j.contains("field")) spec.field = parse_field(j["field"], at(path, "field"));
  if (j.contains("preset")) {
    reject_unknown(j, path, {"preset", "m", "p", "field"});
    if (j["preset"] != "covext") throw ConfigError(at(path, "preset"), "unknown preset (expected \"covext\")");
    spec.preset_m = optional_number<int>(j, path, "m");
    spec.preset_p = optional_number<int>(j, path, "p");
    if (!spec.preset_m) throw ConfigError(at(path, "m"), "missing required field");
    if (!spec.preset_p) throw ConfigError(at(path, "p"), "missing required field");
    if (*spec.preset_m < 1) throw ConfigError(at(path, "m"), "must be at least 1");
    if (*spec.preset_p < 1) throw ConfigError(at(path, "p"), "must be at least 1");
    return spec;
  }
  reject_unknown(j, path, {"A", "B", "field"});
  spec.A = decode_matrix(require(j, path, "A"), at(path, "A"));
  spec.B = decode_matrix(require(j, path, "B"), at(path, "B"));
  return spec;
}

Json serialize_filter(const FilterSpec& spec) {
  Json j = Json::object();
  if (spec.is_preset()) {
    j["preset"] = "covext";
    j["m"] = *spec.preset_m;
    j["p"] = *spec.preset_p;
  } else {
    j["A"] = encode_matrix(spec.A);
    j["B"] = encode_matrix(spec.B);
  }
  if (spec.field) j["field"] = *spec.field == Field::real ? "real" : "complex";
  return j;
}

PriorSpec parse_prior(const Json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  PriorSpec spec;
  if (j.contains("constant")) {
    reject_unknown(j, path, {"constant"});
    spec.kind = PriorSpectrum::Kind::constant;
    spec.constant = *optional_number<double>(j, path, "constant");
    if (!(spec.constant > 0.0)) throw ConfigError(at(path, "constant"), "must be positive");
  } else if (j.contains("polynomial")) {
    reject_unknown(j, path, {"polynomial"});
    spec.kind = PriorSpectrum::Kind::polynomial;
    const Json& b = j["polynomial"];
    const std::string bp = at(path, "polynomial");
    if (!b.is_array() || b.empty()) throw ConfigError(bp, "expected a nonempty array of coefficients");
    for (std::size_t i = 0; i < b.size(); ++i) spec.b.push_back(decode_scalar(b[i], at(bp, i), spec.complex_b));
  } else if (j.contains("rational")) {
    reject_unknown(j, path, {"rational"});
    spec.kind = PriorSpectrum::Kind::rational;
    const Json& r = j["rational"];
    const std::string rp = at(path, "rational");
    if (!r.is_object()) throw ConfigError(rp, "expected an object with A, B, C, D");
    reject_unknown(r, rp, {"A", "B", "C", "D"});
    spec.A = decode_matrix(require(r, rp, "A"), at(rp, "A"));
    spec.B = decode_matrix(require(r, rp, "B"), at(rp, "B"));
    spec.C = decode_matrix(require(r, rp, "C"), at(rp, "C"));
    spec.D = decode_matrix(require(r, rp, "D"), at(rp, "D"));
  } else {
    throw ConfigError(path, "expected one of \"constant\", \"polynomial\", \"rational\"");
  }
  return spec;
}

Json serialize_prior(const PriorSpec& spec) {
  Json j = Json::object();
  switch (spec.kind) {
    case PriorSpectrum::Kind::constant:
      j["constant"] = spec.constant;
      break;
    case PriorSpectrum::Kind::polynomial: {
      Json b = Json::array();
      for (Complex c : spec.b) b.push_back(encode_scalar(c, spec.complex_b));
      j["polynomial"] = b;
      break;
    }
    case PriorSpectrum::Kind::rational:
      j["rational"] = {{"A", encode_matrix(spec.A)},
                       {"B", encode_matrix(spec.B)},
                       {"C", encode_matrix(spec.C)},
                       {"D", encode_matrix(spec.D)}};
      break;
  }
  return j;
}

SigmaSpec parse_sigma(const Json& j, const std::string& path) {
  SigmaSpec spec;
  if (j.is_object()) {
    reject_unknown(j, path, {"from"});
    const Json& from = require(j, path, "from");
    const std::string fp = at(path, "from");
    if (!from.is_object()) throw ConfigError(fp, "expected an object with prior and C");
    reject_unknown(from, fp, {"prior", "C"});
    spec.from_prior = parse_prior(require(from, fp, "prior"), at(fp, "prior"));
    spec.from_C = decode_matrix(require(from, fp, "C"), at(fp, "C"));
  } else {
    spec.matrix = decode_matrix(j, path);
  }
  return spec;
}

Json serialize_sigma(const SigmaSpec& spec) {
  if (spec.matrix) return encode_matrix(*spec.matrix);
  return {{"from", {{"prior", serialize_prior(*spec.from_prior)}, {"C", encode_matrix(*spec.from_C)}}}};
}

}  // namespace

MatrixSpec decode_matrix(const Json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ConfigError(path, "expected a nonempty array of rows");
  MatrixSpec spec;
  std::size_t cols = 0;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].empty()) throw ConfigError(at(path, i), "expected a nonempty row array");
    if (i == 0) cols = j[i].size();
    if (j[i].size() != cols) throw ConfigError(at(path, i), "row length differs from the first row");
  }
  spec.value.resize(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i)
    for (std::size_t k = 0; k < cols; ++k)
      spec.value(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          decode_scalar(j[i][k], at(at(path, i), k), spec.complex_entries);
  return spec;
}

Json encode_matrix(const MatrixSpec& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.value.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < m.value.cols(); ++k) row.push_back(encode_scalar(m.value(i, k), m.complex_entries));
    rows.push_back(row);
  }
  return rows;
}

Json encode_matrix(const Matrix& m) {
  return encode_matrix(MatrixSpec{m, (m.imag().array() != 0.0).any()});
}

FilterBank FilterSpec::build() const {
  try {
    if (is_preset()) return make_covariance_extension_filter(*preset_m, *preset_p, field.value_or(Field::real));
    const bool complex_data = A.complex_entries || B.complex_entries;
    return FilterBank(A.value, B.value, field.value_or(complex_data ? Field::complex : Field::real));
  } catch (const Error& e) {
    throw ConfigError("filter", e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError("filter", e.what());
  }
}

PriorSpectrum PriorSpec::build() const {
  try {
    switch (kind) {
      case PriorSpectrum::Kind::constant:
        return prior_constant(constant);
      case PriorSpectrum::Kind::polynomial:
        return prior_from_polynomial(b);
      case PriorSpectrum::Kind::rational:
        return prior_from_realization(StateSpaceSystem(A.value, B.value, C.value, D.value));
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError("prior", e.what());
  } catch (const DimensionError& e) {
    throw ConfigError("prior", e.what());
  }
  throw ConfigError("prior", "unknown kind");
}

Matrix SigmaSpec::build(const FilterBank& filter) const {
  if (matrix) {
    if (matrix->value.rows() != filter.n() || matrix->value.cols() != filter.n())
      throw ConfigError("sigma", "must be n x n with n the filter state dimension");
    return matrix->value;
  }
  const PriorSpectrum prior = from_prior->build();
  if (from_C->value.rows() != filter.m() || from_C->value.cols() != filter.n())
    throw ConfigError("sigma.from.C", "must be m x n");
  const MembershipReport report = is_in_Cplus(filter, from_C->value);
  if (!report.ok) throw ConfigError("sigma.from.C", "not in C+: " + report.reasons.front());
  return moment_g_statespace(filter, prior, make_factor_parameter(filter, from_C->value));
}

HomotopyConfig RunConfig::homotopy() const {
  HomotopyConfig h;
  if (continuation) {
    h.dt = continuation->dt.value_or(h.dt);
    h.newton_tol = continuation->newton_tol.value_or(h.newton_tol);
    h.min_dt = continuation->min_dt.value_or(h.min_dt);
    h.max_newton = continuation->max_newton.value_or(h.max_newton);
    h.grid_n = continuation->grid_n.value_or(h.grid_n);
  }
  if (quadrature && quadrature->grid_n && !(continuation && continuation->grid_n)) h.grid_n = *quadrature->grid_n;
  try {
    h.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("continuation", e.what());
  }
  return h;
}

double RunConfig::dtheta() const {
  double d = 1e-4;
  if (quadrature && quadrature->dtheta) d = *quadrature->dtheta;
  if (!(d > 0.0 && d < 2.0 * M_PI)) throw ConfigError("quadrature.dtheta", "must lie in (0, 2 pi)");
  return d;
}

std::string RunConfig::output_dir() const {
  if (output && output->dir) return *output->dir;
  return "out";
}

RunConfig parse_config(const Json& j) {
  if (!j.is_object()) throw ConfigError("<root>", "expected an object");
  reject_unknown(j, "", {"filter", "prior", "sigma", "C", "continuation", "quadrature", "output"});
  RunConfig config;
  config.filter = parse_filter(require(j, "", "filter"), "filter");
  if (j.contains("prior")) config.prior = parse_prior(j["prior"], "prior");
  if (j.contains("sigma")) config.sigma = parse_sigma(j["sigma"], "sigma");
  if (j.contains("C")) config.C = decode_matrix(j["C"], "C");
  if (j.contains("continuation")) {
    const Json& c = j["continuation"];
    if (!c.is_object()) throw ConfigError("continuation", "expected an object");
    reject_unknown(c, "continuation", {"dt", "newtonTol", "maxNewton", "minDt", "gridN"});
    ContinuationSpec spec;
    spec.dt = optional_number<double>(c, "continuation", "dt");
    spec.newton_tol = optional_number<double>(c, "continuation", "newtonTol");
    spec.min_dt = optional_number<double>(c, "continuation", "minDt");
    spec.max_newton = optional_number<int>(c, "continuation", "maxNewton");
    spec.grid_n = optional_number<std::size_t>(c, "continuation", "gridN");
    config.continuation = spec;
  }
  if (j.contains("quadrature")) {
    const Json& q = j["quadrature"];
    if (!q.is_object()) throw ConfigError("quadrature", "expected an object");
    reject_unknown(q, "quadrature", {"dtheta", "gridN"});
    QuadratureSpec spec;
    spec.dtheta = optional_number<double>(q, "quadrature", "dtheta");
    spec.grid_n = optional_number<std::size_t>(q, "quadrature", "gridN");
    config.quadrature = spec;
  }
  if (j.contains("output")) {
    const Json& o = j["output"];
    if (!o.is_object()) throw ConfigError("output", "expected an object");
    reject_unknown(o, "output", {"dir", "formats"});
    OutputSpec spec;
    if (o.contains("dir")) {
      if (!o["dir"].is_string()) throw ConfigError("output.dir", "expected a string");
      spec.dir = o["dir"].get<std::string>();
    }
    if (o.contains("formats")) {
      const Json& f = o["formats"];
      if (!f.is_array()) throw ConfigError("output.formats", "expected an array of strings");
      std::vector<std::string> formats;
      for (std::size_t i = 0; i < f.size(); ++i) {
        if (f[i] != "csv" && f[i] != "json") throw ConfigError(at("output.formats", i), "expected \"csv\" or \"json\"");
        formats.push_back(f[i].get<std::string>());
      }
      spec.formats = formats;
    }
    config.output = spec;
  }
  return config;
}

RunConfig load_config(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("--config", "cannot open " + file);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("--config", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

Json serialize_config(const RunConfig& config) {
  Json j = Json::object();
  j["filter"] = serialize_filter(config.filter);
  if (config.prior) j["prior"] = serialize_prior(*config.prior);
  if (config.sigma) j["sigma"] = serialize_sigma(*config.sigma);
  if (config.C) j["C"] = encode_matrix(*config.C);
  if (config.continuation) {
    Json c = Json::object();
    const auto& s = *config.continuation;
    if (s.dt) c["dt"] = *s.dt;
    if (s.newton_tol) c["newtonTol"] = *s.newton_tol;
    if (s.min_dt) c["minDt"] = *s.min_dt;
    if (s.max_newton) c["maxNewton"] = *s.max_newton;
    if (s.grid_n) c["gridN"] = *s.grid_n;
    j["continuation"] = c;
  }
  if (config.quadrature) {
    Json q = Json::object();
    if (config.quadrature->dtheta) q["dtheta"] = *config.quadrature->dtheta;
    if (config.quadrature->grid_n) q["gridN"] = *config.quadrature->grid_n;
    j["quadrature"] = q;
  }
  if (config.output) {
    Json o = Json::object();
    if (config.output->dir) o["dir"] = *config.output->dir;
    if (config.output->formats) o["formats"] = *config.output->formats;
    j["output"] = o;
  }
  return j;
}

std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_path_csv(std::ostream& os, const SolutionPath& path) {
  const std::size_t M = path.factor_basis.size();
  os << "t";
  for (std::size_t k = 1; k <= M; ++k) os << ",y_" << k;
  os << ",residual,newton_iters,gram_cond\n";
  for (const PathSample& s : path.samples) {
    os << format_real(s.t);
    for (Eigen::Index k = 0; k < s.y.size(); ++k) os << ',' << format_real(s.y(k));
    os << ',' << format_real(s.residual) << ',' << s.newton_iters << ',' << format_real(s.gram_cond) << '\n';
  }
}

Json path_to_json(const SolutionPath& path) {
  Json samples = Json::array();
  for (const PathSample& s : path.samples) {
    Json y = Json::array();
    for (Eigen::Index k = 0; k < s.y.size(); ++k) y.push_back(s.y(k));
    samples.push_back({{"t", s.t},
                       {"C", encode_matrix(s.C)},
                       {"y", y},
                       {"residual", s.residual},
                       {"newton_iters", s.newton_iters},
                       {"gram_cond", s.gram_cond},
                       {"tangent_norm", s.tangent_norm},
                       {"residual_history", s.residual_history}});
  }
  Json basis = Json::array();
  for (const Matrix& b : path.factor_basis) basis.push_back(encode_matrix(b));
  Json sigma = Json::array();
  for (Eigen::Index k = 0; k < path.sigma_coords.size(); ++k) sigma.push_back(path.sigma_coords(k));
  return {{"config",
           {{"dt", path.config.dt},
            {"newtonTol", path.config.newton_tol},
            {"maxNewton", path.config.max_newton},
            {"minDt", path.config.min_dt},
            {"gridN", path.config.grid_n}}},
          {"sigma_coords", sigma},
          {"factor_basis", basis},
          {"rejected_steps", path.rejected_steps},
          {"samples", samples}};
}

}  // namespace spectral_homotopy

#pragma once

#include <json.hpp>
#include <optional>
#include <ostream>
#include <string>

#include "spectral_homotopy/continuation.hpp"
#include "spectral_homotopy/statespace.hpp"

namespace spectral_homotopy {

using Json = nlohmann::json;

/// Invalid configuration. The message starts with the offending field path.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& path, const std::string& what)
      : Error(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// Matrix plus the encoding it was read with, so it serializes back unchanged.
struct MatrixSpec {
  Matrix value;
  bool complex_entries = false;
};

/// Entries are numbers or [re, im] pairs, rows are nested arrays.
MatrixSpec decode_matrix(const Json& j, const std::string& path);
Json encode_matrix(const MatrixSpec& m);
/// Encodes real entries as numbers when every imaginary part is exactly zero.
Json encode_matrix(const Matrix& m);

struct FilterSpec {
  std::optional<int> preset_m;
  std::optional<int> preset_p;
  MatrixSpec A;
  MatrixSpec B;
  std::optional<Field> field;

  bool is_preset() const { return preset_m.has_value(); }
  FilterBank build() const;
};

struct PriorSpec {
  PriorSpectrum::Kind kind = PriorSpectrum::Kind::constant;
  double constant = 1.0;
  std::vector<Complex> b;
  bool complex_b = false;
  MatrixSpec A, B, C, D;

  PriorSpectrum build() const;
};

struct SigmaSpec {
  std::optional<MatrixSpec> matrix;
  std::optional<PriorSpec> from_prior;
  std::optional<MatrixSpec> from_C;

  Matrix build(const FilterBank& filter) const;
};

struct ContinuationSpec {
  std::optional<double> dt, newton_tol, min_dt;
  std::optional<int> max_newton;
  std::optional<std::size_t> grid_n;
};

struct QuadratureSpec {
  std::optional<double> dtheta;
  std::optional<std::size_t> grid_n;
};

struct OutputSpec {
  std::optional<std::string> dir;
  std::optional<std::vector<std::string>> formats;
};

struct RunConfig {
  FilterSpec filter;
  std::optional<PriorSpec> prior;
  std::optional<SigmaSpec> sigma;
  std::optional<MatrixSpec> C;
  std::optional<ContinuationSpec> continuation;
  std::optional<QuadratureSpec> quadrature;
  std::optional<OutputSpec> output;

  HomotopyConfig homotopy() const;
  double dtheta() const;
  std::string output_dir() const;
};

RunConfig parse_config(const Json& j);
RunConfig load_config(const std::string& file);
Json serialize_config(const RunConfig& config);

/// Formats a double with 17 significant digits.
std::string format_real(double x);

void write_path_csv(std::ostream& os, const SolutionPath& path);
Json path_to_json(const SolutionPath& path);

}  // namespace spectral_homotopy

#include <doctest.h>

#include <sstream>

#include "spectral_homotopy/config.hpp"
#include "test_support.hpp"

using namespace spectral_homotopy;
using namespace test_support;

namespace {

std::string error_path(const Json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "<no error>";
}

Json base() { return {{"filter", {{"preset", "covext"}, {"m", 2}, {"p", 1}}}}; }

}  // namespace

TEST_CASE("matrix codec") {
  const MatrixSpec r = decode_matrix(Json::parse("[[1, 2.5], [-3, 0]]"), "X");
  CHECK_FALSE(r.complex_entries);
  CHECK(r.value(1, 0) == Complex(-3.0));
  CHECK(encode_matrix(r) == Json::parse("[[1, 2.5], [-3, 0]]"));

  const MatrixSpec c = decode_matrix(Json::parse("[[[1, 2], 3]]"), "X");
  CHECK(c.complex_entries);
  CHECK(c.value(0, 0) == Complex(1.0, 2.0));
  CHECK(encode_matrix(c) == Json::parse("[[[1, 2], [3, 0]]]"));

  Matrix m(1, 2);
  m << Complex(1.0, 0.0), Complex(0.0, -1.0);
  CHECK(encode_matrix(m) == Json::parse("[[[1, 0], [0, -1]]]"));
  CHECK(encode_matrix(Matrix(Matrix::Identity(2, 2))) == Json::parse("[[1, 0], [0, 1]]"));

  for (const char* bad : {"[]", "[[1], [1, 2]]", "[[\"a\"]]", "[[[1, 2, 3]]]", "3"}) {
    CHECK_THROWS_AS(decode_matrix(Json::parse(bad), "X"), ConfigError);
  }
  try {
    decode_matrix(Json::parse("[[1, 2], [3, \"x\"]]"), "sigma");
  } catch (const ConfigError& e) {
    CHECK(e.path() == "sigma[1][1]");
  }
}

TEST_CASE("config round trip") {
  const std::vector<Json> docs = {
      base(),
      Json::parse(R"({"filter": {"A": [[0.5, 0], [1, 0.2]], "B": [[1], [0]], "field": "real"},
                      "prior": {"constant": 2.5},
                      "sigma": [[1, 0], [0, 1]],
                      "continuation": {"dt": 0.2, "newtonTol": 1e-9, "maxNewton": 15, "minDt": 0.001, "gridN": 512},
                      "quadrature": {"dtheta": 0.001, "gridN": 2048},
                      "output": {"dir": "runs/a", "formats": ["csv"]}})"),
      Json::parse(R"({"filter": {"preset": "covext", "m": 1, "p": 2, "field": "complex"},
                      "prior": {"polynomial": [[1, 0], [-0.5, 0.25]]},
                      "C": [[[0, 0], [0.1, -0.2], [1, 0]]]})"),
      Json::parse(R"({"filter": {"preset": "covext", "m": 2, "p": 1},
                      "prior": {"rational": {"A": [[0.5]], "B": [[1]], "C": [[0.3]], "D": [[1]]}},
                      "sigma": {"from": {"prior": {"polynomial": [1, -1, 0.89]},
                                         "C": [[0.5, 0.65, 1, 0], [-2.2615, -1, 2, 1]]}}})"),
  };
  for (const Json& doc : docs) {
    CHECK(serialize_config(parse_config(doc)) == doc);
  }
}

TEST_CASE("config errors name the field") {
  CHECK(error_path(Json::object()) == "filter");
  CHECK(error_path({{"filter", {{"preset", "other"}, {"m", 2}, {"p", 1}}}}) == "filter.preset");
  CHECK(error_path({{"filter", {{"preset", "covext"}, {"m", 2}}}}) == "filter.p");
  CHECK(error_path({{"filter", {{"preset", "covext"}, {"m", 1.5}, {"p", 1}}}}) == "filter.m");

  Json j = base();
  j["prior"] = {{"polynomial", {1, "x"}}};
  CHECK(error_path(j) == "prior.polynomial[1]");
  j = base();
  j["prior"] = {{"gaussian", 1}};
  CHECK(error_path(j) == "prior");
  j = base();
  j["continuation"] = {{"dt", "fast"}};
  CHECK(error_path(j) == "continuation.dt");
  j = base();
  j["continuation"] = {{"step", 0.1}};
  CHECK(error_path(j) == "continuation.step");
  j = base();
  j["sigma"] = {{"from", {{"prior", {{"constant", 1}}}}}};
  CHECK(error_path(j) == "sigma.from.C");
  j = base();
  j["output"] = {{"formats", {"csv", "png"}}};
  CHECK(error_path(j) == "output.formats[1]");
  j = base();
  j["extra"] = 1;
  CHECK(error_path(j) == "extra");
}

TEST_CASE("config builds module inputs") {
  Json j = base();
  j["prior"] = {{"polynomial", {1, -1, 0.89}}};
  j["sigma"] = {{"from", {{"prior", {{"polynomial", {1, -1, 0.89}}}}, {"C", {{0.5, 0.65, 1, 0}, {-2.2615, -1, 2, 1}}}}}};
  j["continuation"] = {{"dt", 0.5}};
  const RunConfig c = parse_config(j);
  const FilterBank f = c.filter.build();
  CHECK(f.n() == 4);
  const Matrix Sigma = c.sigma->build(f);
  const Matrix expected = moment_g_statespace(f, example_prior(), make_factor_parameter(f, c58()));
  CHECK((Sigma - expected).norm() < 1e-13);
  CHECK(c.homotopy().dt == 0.5);
  CHECK(c.homotopy().newton_tol == 1e-10);
  CHECK(c.dtheta() == 1e-4);

  j["continuation"] = {{"dt", 0.5}, {"minDt", 0.9}};
  CHECK_THROWS_AS(parse_config(j).homotopy(), ConfigError);

  Json bad = base();
  bad["prior"] = {{"polynomial", {1, -2}}};
  CHECK_THROWS_AS(parse_config(bad).prior->build(), MinimumPhaseError);

  Json wrong = base();
  wrong["sigma"] = {{1, 0}, {0, 1}};
  CHECK_THROWS_AS(parse_config(wrong).sigma->build(parse_config(wrong).filter.build()), ConfigError);
}

TEST_CASE("path writers") {
  CHECK(format_real(0.1) == "0.10000000000000001");
  CHECK(format_real(1.0) == "1");
  SolutionPath path;
  path.factor_basis = {Matrix::Identity(1, 2), Matrix::Identity(1, 2)};
  PathSample s;
  s.t = 0.5;
  s.C = Matrix::Identity(1, 2);
  s.y = RealVector::Constant(2, 1.0 / 3.0);
  s.residual = 1e-12;
  s.newton_iters = 2;
  s.gram_cond = 12.5;
  path.samples = {s};
  std::ostringstream a, b;
  write_path_csv(a, path);
  write_path_csv(b, path);
  CHECK(a.str() == "t,y_1,y_2,residual,newton_iters,gram_cond\n"
                   "0.5,0.33333333333333331,0.33333333333333331,9.9999999999999998e-13,2,12.5\n");
  CHECK(a.str() == b.str());
  const Json j = path_to_json(path);
  CHECK(j["samples"][0]["C"] == Json::parse("[[1, 0]]"));
  CHECK(j["samples"][0]["newton_iters"] == 2);
}

#include "spectral_homotopy/sampling.hpp"

#include <cmath>

namespace spectral_homotopy {

FactorParameter random_factor_parameter(const FilterBank& filter, std::mt19937_64& rng, double scale,
                                        double max_radius) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const Matrix base = filter.B().adjoint();
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Matrix R(filter.m(), filter.n());
    for (Eigen::Index i = 0; i < R.rows(); ++i)
      for (Eigen::Index j = 0; j < R.cols(); ++j)
        R(i, j) = filter.field() == Field::real ? Complex(normal(rng), 0.0) : Complex(normal(rng), normal(rng));
    R = project_factor_space(filter, R);
    if (R.norm() == 0.0) return make_factor_parameter(filter, base);
    const Matrix C = base + (scale * uniform(rng) / R.norm()) * R;
    const MembershipReport report = is_in_Cplus(filter, C);
    if (report.ok && report.closed_loop_radius <= max_radius) return make_factor_parameter(filter, C);
  }
  throw Error("random_factor_parameter: no admissible sample found");
}

PriorSpectrum random_polynomial_prior(std::mt19937_64& rng, Field field, double max_radius) {
  std::uniform_real_distribution<double> radius(0.0, max_radius);
  std::uniform_real_distribution<double> angle(-M_PI, M_PI);
  std::uniform_real_distribution<double> gain(0.5, 2.0);
  Complex r1, r2;
  if (field == Field::complex) {
    r1 = std::polar(radius(rng), angle(rng));
    r2 = std::polar(radius(rng), angle(rng));
  } else if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < 0.5) {
    r1 = std::polar(radius(rng), angle(rng));
    r2 = std::conj(r1);
  } else {
    r1 = radius(rng) * (angle(rng) < 0 ? -1.0 : 1.0);
    r2 = radius(rng) * (angle(rng) < 0 ? -1.0 : 1.0);
  }
  const double g = gain(rng);
  std::vector<Complex> b{g, -g * (r1 + r2), g * r1 * r2};
  if (field == Field::real)
    for (Complex& c : b) c = c.real();
  return prior_from_polynomial(b);
}

Matrix random_range_element(const CoordinateChart& chart, std::mt19937_64& rng, double norm) {
  std::normal_distribution<double> normal;
  RealVector y(static_cast<Eigen::Index>(chart.range_basis.size()));
  for (Eigen::Index k = 0; k < y.size(); ++k) y(k) = normal(rng);
  return chart.range_matrix(y * (norm / y.norm()));
}

}  // namespace spectral_homotopy

#pragma once

#include <random>

#include "spectral_homotopy/chart.hpp"
#include "spectral_homotopy/statespace.hpp"

namespace spectral_homotopy {

/// Random point of C+ near B*: B* plus a factor-space perturbation of norm up
/// to `scale`, kept only if the closed loop spectral radius is <= max_radius.
FactorParameter random_factor_parameter(const FilterBank& filter, std::mt19937_64& rng, double scale = 1.0,
                                        double max_radius = 0.95);

/// Random second-order polynomial prior with zeros of modulus <= max_radius.
/// The coefficients are real unless `field` is complex.
PriorSpectrum random_polynomial_prior(std::mt19937_64& rng, Field field = Field::real, double max_radius = 0.9);

/// Random Hermitian matrix in Range Gamma with the given Frobenius norm.
Matrix random_range_element(const CoordinateChart& chart, std::mt19937_64& rng, double norm = 1.0);

}  // namespace spectral_homotopy

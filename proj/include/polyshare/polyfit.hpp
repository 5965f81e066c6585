#pragma once

#include <cstdint>
#include <vector>

#include "polyshare/poly_protocols.hpp"

namespace polyshare {

// Symmetric fitting grid k * step for |k * step| <= range.
std::vector<double> fit_grid(double range, double step);

// Real coefficients c_0..c_n minimizing the squared ReLU error on the grid.
std::vector<double> fit_lsq(int degree, double range, double step);

// Integer coefficients |A_i| <= 2^p_fit minimizing sum (A.x^i - ReLU(x) 2^p_fit)^2
// over the grid of step 2^-p_fit. The search is exact.
PolynomialSpec fit_quantized(int degree, double range, int p_fit);

// Rounds each least-squares coefficient to p_fit bits independently.
PolynomialSpec naive_round(const std::vector<double>& coeffs, double range, int p_fit);

// Sum of squared errors of the scaled integer polynomial against ReLU * 2^p_fit,
// the quantity fit_quantized minimizes.
double fit_objective(const PolynomialSpec& spec, double step);

struct MaxError {
  double error = 0.0;
  double at = 0.0;
};
// Exact rational evaluation of the worst |poly(x) - ReLU(x)| on the grid.
MaxError max_error(const PolynomialSpec& spec, double range, double step);
// Exact signed error poly(x) - ReLU(x) at one point.
double error_at(const PolynomialSpec& spec, double x);

}  // namespace polyshare

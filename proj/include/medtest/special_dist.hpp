#pragma once

// Reference distributions shared by all six tests: the standard normal
// CDF/quantile and survival function, the two-sided tail of a product of
// independent standard normals, and two-component scaled-normal mixtures.
// All tails are computed as survival probabilities so that magnitudes
// are preserved down to ~1e-300.

#include <stdexcept>

namespace medtest {

// Mixture of N(0,1) and N(0,1/4) with nonnegative weights summing to 1.
struct MixtureNormalRef {
  double weight_unit;
  double weight_quarter;

  void validate() const {
    if (!(weight_unit >= 0.0) || !(weight_quarter >= 0.0))
      throw std::invalid_argument("MixtureNormalRef: negative weight");
    const double s = weight_unit + weight_quarter;
    if (s < 1.0 - 1e-9 || s > 1.0 + 1e-9)
      throw std::invalid_argument("MixtureNormalRef: weights must sum to 1");
  }
};

// P(N(0,1) <= x). Absolute error below 1e-15; throws on non-finite input.
double std_normal_cdf(double x);

// P(N(0,1) > x), computed without cancellation; positive for x <= ~38.
double std_normal_sf(double x);

// Two-sided tail 2 * P(N(0,1) > |x|).
double std_normal_two_sided(double x);

// Inverse of std_normal_cdf on (0,1).
double std_normal_quantile(double p);

// P(|Z1 * Z2| >= |t| / scale) for independent standard normals.
// Density of Z1*Z2 is K0(|x|)/pi; absolute error below 1e-10.
double normal_product_tail(double t, double scale);

// weight_unit * 2(1-Phi(|stat|)) + weight_quarter * 2(1-Phi(2|stat|)).
double mixture_two_sided_pvalue(double stat, const MixtureNormalRef& ref);

namespace detail {
// Modified Bessel function K0 (unscaled, x <= 1) and exp(x)*K0(x) (x >= 1).
double bessel_k0_small(double x);
double bessel_k0_scaled(double x);
}  // namespace detail

}  // namespace medtest

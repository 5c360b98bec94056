#pragma once

// Estimators for the composite-null component proportions and the
// auxiliary distributions that sharpen or calibrate the mixture tests:
// Storey's pi0, the Grenander-type non-null p-value CDF, the Jin-Cai
// characteristic-function proportion estimator, and Efron's empirical
// null fitted by central matching.

#include <span>
#include <stdexcept>
#include <vector>

namespace medtest {

struct NullProportions {
  double pi00;
  double pi01;
  double pi10;

  void validate() const {
    for (double p : {pi00, pi01, pi10})
      if (!(p >= 0.0) || !(p <= 1.0))
        throw std::invalid_argument("NullProportions: component outside [0,1]");
    if (pi00 + pi01 + pi10 > 1.0 + 1e-9)
      throw std::invalid_argument("NullProportions: components sum above 1");
  }
};

struct EmpiricalNull {
  double mean;
  double sd;  // > 0
};

// Raised when the empirical-null quadratic fit is degenerate or convex;
// callers fall back to the theoretical null or flag the method as failed.
class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Piecewise-linear nondecreasing concave CDF on [0,1] with endpoints
// (0,0) and (1,1).
class MonotoneCdf {
 public:
  MonotoneCdf();  // the identity CDF
  MonotoneCdf(std::vector<double> xs, std::vector<double> ys);

  double operator()(double t) const;
  const std::vector<double>& knots_x() const { return xs_; }
  const std::vector<double>& knots_y() const { return ys_; }

 private:
  std::vector<double> xs_;
  std::vector<double> ys_;
};

// min(1, #{p > lambda} / ((1 - lambda) J)).
double storey_pi0(std::span<const double> pvalues, double lambda);

// Marginal Storey estimates combined into the 2x2 null table with
// pi00 = max(pi_a0 + pi_b0 - 1, 0), the additive bound.
NullProportions estimate_proportions(std::span<const double> p_alpha,
                                     std::span<const double> p_beta, double lambda);

// Least concave majorant of the deconvolved non-null p-value CDF
// (ECDF(t) - pi0 t) / (1 - pi0), clipped to [0,1].
MonotoneCdf grenander_nonnull_cdf(std::span<const double> pvalues, double pi0_marginal);

// Jin-Cai estimate of the proportion of nonzero-mean components among
// z-scores whose null law is N(0,1). Smoothed empirical characteristic
// function, sup over a 100-point t grid on [0, gamma * sqrt(2 log J)].
double jincai_nonnull_proportion(std::span<const double> zscores, double gamma);

// N(mean, sd^2) fitted to the central `center_fraction` of the z-scores
// by a quadratic fit to the log of a 50-bin histogram.
EmpiricalNull efron_empirical_null(std::span<const double> zscores,
                                   double center_fraction);

}  // namespace medtest

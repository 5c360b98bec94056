#pragma once

// Batch OLS for the two mediation models: the mediator-on-exposure fit
// giving (alpha_hat, z_alpha) and the outcome-on-mediator fit giving
// (beta_hat, z_beta), with optional fixed covariates. Per-mediator fits
// share the QR factorization of the common design block.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "medtest/mediation_tests.hpp"

namespace medtest {

// Column-major data blocks with a consistent row count n.
struct Dataset {
  std::size_t n = 0;
  std::size_t n_mediators = 0;
  std::size_t n_covariates = 0;
  std::vector<double> exposure;    // n
  std::vector<double> outcome;     // n
  std::vector<double> mediators;   // n * n_mediators, column-major
  std::vector<double> covariates;  // n * n_covariates, column-major

  void validate() const;
};

struct OlsResult {
  std::vector<double> coefficients;
  std::vector<double> std_errors;
  bool exact_fit = false;  // residual variance hit the 1e-30 floor
};

// Least squares of `response` on the column-major `design` (which must
// already contain the intercept column). QR-based; rank deficiency
// throws naming the first dependent column.
OlsResult ols_fit(std::span<const double> response, std::span<const double> design,
                  std::size_t n_cols);

struct MediatorFit {
  double alpha_hat = 0.0;
  double se_alpha = 0.0;
  double z_alpha = 0.0;
  double beta_hat = 0.0;
  double se_beta = 0.0;
  double z_beta = 0.0;
  bool exact_fit = false;
  bool failed = false;  // e.g. mediator collinear with the design
};

struct FitResult {
  std::vector<MediatorFit> fits;

  // Rows with failed fits are dropped; ids are row indices as text.
  SummaryTable to_summary_table() const;
};

// For each mediator j: fit M_j ~ [1, X, C] for (alpha, z_alpha) and
// Y ~ [1, X, M_j, C] for (beta, z_beta).
FitResult compute_zpairs(const Dataset& data, unsigned threads = 1);

}  // namespace medtest

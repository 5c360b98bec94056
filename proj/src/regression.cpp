#include "medtest/regression.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <thread>

#include "medtest/kernels.hpp"

namespace medtest {

namespace {

constexpr double kVarianceFloor = 1e-30;

// Residualize v against the orthonormal columns of Q: v - Q (Q^T v).
void residualize(const Eigen::MatrixXd& q, std::span<const double> v,
                 std::vector<double>& out) {
  const std::size_t n = v.size();
  out.assign(v.begin(), v.end());
  for (Eigen::Index k = 0; k < q.cols(); ++k) {
    const std::span<const double> col(q.col(k).data(), n);
    const double proj = kernels::dot(col, v);
    kernels::axpy(-proj, col, out);
  }
}

}  // namespace

void Dataset::validate() const {
  if (n == 0) throw std::invalid_argument("Dataset: empty");
  if (exposure.size() != n || outcome.size() != n)
    throw std::invalid_argument("Dataset: exposure/outcome length mismatch");
  if (mediators.size() != n * n_mediators)
    throw std::invalid_argument("Dataset: mediator block size mismatch");
  if (covariates.size() != n * n_covariates)
    throw std::invalid_argument("Dataset: covariate block size mismatch");
  if (n <= n_covariates + 3)
    throw std::invalid_argument("Dataset: need n > q + 3 for the outcome model");
}

OlsResult ols_fit(std::span<const double> response, std::span<const double> design,
                  std::size_t n_cols) {
  if (n_cols == 0) throw std::invalid_argument("ols_fit: empty design");
  if (design.size() % n_cols != 0)
    throw std::invalid_argument("ols_fit: design size not divisible by column count");
  const std::size_t n = design.size() / n_cols;
  if (response.size() != n) throw std::invalid_argument("ols_fit: length mismatch");
  if (n < n_cols + 1)
    throw std::invalid_argument("ols_fit: need more rows than columns");

  const Eigen::Map<const Eigen::MatrixXd> x(design.data(), static_cast<Eigen::Index>(n),
                                            static_cast<Eigen::Index>(n_cols));
  const Eigen::Map<const Eigen::VectorXd> y(response.data(),
                                            static_cast<Eigen::Index>(n));

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  if (qr.rank() < static_cast<Eigen::Index>(n_cols)) {
    // Name the first column outside the independent pivot set.
    std::vector<bool> independent(n_cols, false);
    for (Eigen::Index k = 0; k < qr.rank(); ++k)
      independent[static_cast<std::size_t>(qr.colsPermutation().indices()[k])] = true;
    for (std::size_t c = 0; c < n_cols; ++c)
      if (!independent[c])
        throw std::domain_error("ols_fit: design is rank deficient at column " +
                                std::to_string(c));
  }

  OlsResult result;
  const Eigen::VectorXd coef = qr.solve(y);
  const Eigen::VectorXd resid = y - x * coef;
  double sigma2 = resid.squaredNorm() / static_cast<double>(n - n_cols);
  if (sigma2 < kVarianceFloor) {
    sigma2 = kVarianceFloor;
    result.exact_fit = true;
  }

  const Eigen::MatrixXd xtx_inv =
      (x.transpose() * x).ldlt().solve(Eigen::MatrixXd::Identity(
          static_cast<Eigen::Index>(n_cols), static_cast<Eigen::Index>(n_cols)));
  result.coefficients.assign(coef.data(), coef.data() + n_cols);
  result.std_errors.resize(n_cols);
  for (std::size_t c = 0; c < n_cols; ++c)
    result.std_errors[c] =
        std::sqrt(sigma2 * xtx_inv(static_cast<Eigen::Index>(c),
                                   static_cast<Eigen::Index>(c)));
  return result;
}

SummaryTable FitResult::to_summary_table() const {
  SummaryTable table;
  for (std::size_t j = 0; j < fits.size(); ++j) {
    if (fits[j].failed) continue;
    table.pairs.push_back(ZPair{fits[j].z_alpha, fits[j].z_beta});
    table.ids.push_back(std::to_string(j));
  }
  return table;
}

FitResult compute_zpairs(const Dataset& data, unsigned threads) {
  data.validate();
  const std::size_t n = data.n;
  const std::size_t q = data.n_covariates;
  const auto ni = static_cast<Eigen::Index>(n);

  // Common design blocks: B0 = [1, C] for the mediator model, B1 = [1, X, C]
  // for the outcome model. Their thin-Q bases are shared across mediators.
  Eigen::MatrixXd b0(ni, static_cast<Eigen::Index>(1 + q));
  Eigen::MatrixXd b1(ni, static_cast<Eigen::Index>(2 + q));
  b0.col(0).setOnes();
  b1.col(0).setOnes();
  for (std::size_t i = 0; i < n; ++i) b1(static_cast<Eigen::Index>(i), 1) = data.exposure[i];
  for (std::size_t c = 0; c < q; ++c)
    for (std::size_t i = 0; i < n; ++i) {
      const double v = data.covariates[c * n + i];
      b0(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(1 + c)) = v;
      b1(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(2 + c)) = v;
    }

  Eigen::HouseholderQR<Eigen::MatrixXd> qr0(b0);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr1(b1);
  const Eigen::MatrixXd q0 =
      qr0.householderQ() * Eigen::MatrixXd::Identity(ni, b0.cols());
  const Eigen::MatrixXd q1 =
      qr1.householderQ() * Eigen::MatrixXd::Identity(ni, b1.cols());

  std::vector<double> r_x;
  residualize(q0, data.exposure, r_x);
  const double sxx = kernels::dot(r_x, r_x);
  if (sxx <= kVarianceFloor)
    throw std::invalid_argument("compute_zpairs: exposure collinear with covariates");

  std::vector<double> r_y;
  residualize(q1, data.outcome, r_y);
  const double syy = kernels::dot(r_y, r_y);

  const double dof_alpha = static_cast<double>(n - (q + 2));
  const double dof_beta = static_cast<double>(n - (q + 3));

  FitResult result;
  result.fits.resize(data.n_mediators);

  const auto fit_range = [&](std::size_t begin, std::size_t end) {
    std::vector<double> r_m0, r_m1;
    for (std::size_t j = begin; j < end; ++j) {
      const std::span<const double> m(data.mediators.data() + j * n, n);
      MediatorFit& fit = result.fits[j];

      residualize(q0, m, r_m0);
      const double smm0 = kernels::dot(r_m0, r_m0);
      const double alpha = kernels::dot(r_x, std::span<const double>(r_m0)) / sxx;
      double rss_a = smm0 - alpha * alpha * sxx;
      double sigma2_a = std::max(rss_a, 0.0) / dof_alpha;
      if (sigma2_a < kVarianceFloor) {
        sigma2_a = kVarianceFloor;
        fit.exact_fit = true;
      }

      residualize(q1, m, r_m1);
      const double smm1 = kernels::dot(r_m1, r_m1);
      if (smm1 <= kVarianceFloor * static_cast<double>(n)) {
        fit.failed = true;  // mediator collinear with [1, X, C]
        continue;
      }
      const double beta = kernels::dot(std::span<const double>(r_m1),
                                       std::span<const double>(r_y)) /
                          smm1;
      double rss_b = syy - beta * beta * smm1;
      double sigma2_b = std::max(rss_b, 0.0) / dof_beta;
      if (sigma2_b < kVarianceFloor) {
        sigma2_b = kVarianceFloor;
        fit.exact_fit = true;
      }

      fit.alpha_hat = alpha;
      fit.se_alpha = std::sqrt(sigma2_a / sxx);
      fit.z_alpha = alpha / fit.se_alpha;
      fit.beta_hat = beta;
      fit.se_beta = std::sqrt(sigma2_b / smm1);
      fit.z_beta = beta / fit.se_beta;
    }
  };

  const std::size_t nj = data.n_mediators;
  if (threads <= 1 || nj < 256) {
    fit_range(0, nj);
  } else {
    const unsigned nw = std::min<unsigned>(threads, std::thread::hardware_concurrency());
    std::vector<std::thread> pool;
    const std::size_t chunk = (nj + nw - 1) / nw;
    for (unsigned w = 0; w < nw; ++w) {
      const std::size_t begin = w * chunk;
      const std::size_t end = std::min(nj, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(fit_range, begin, end);
    }
    for (auto& t : pool) t.join();
  }
  return result;
}

}  // namespace medtest

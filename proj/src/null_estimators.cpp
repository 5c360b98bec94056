#include "medtest/null_estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace medtest {

namespace {

void require_unit_interval(std::span<const double> pvalues, const char* what) {
  for (double p : pvalues)
    if (!(p >= 0.0) || !(p <= 1.0))
      throw std::invalid_argument(std::string(what) + ": p-value outside [0,1]");
}

}  // namespace

double storey_pi0(std::span<const double> pvalues, double lambda) {
  if (pvalues.empty()) throw std::invalid_argument("storey_pi0: empty input");
  if (!(lambda > 0.0) || !(lambda < 1.0))
    throw std::invalid_argument("storey_pi0: lambda must lie in (0,1)");
  require_unit_interval(pvalues, "storey_pi0");
  std::size_t above = 0;
  for (double p : pvalues) above += p > lambda ? 1 : 0;
  const double est = static_cast<double>(above) /
                     ((1.0 - lambda) * static_cast<double>(pvalues.size()));
  return std::min(1.0, est);
}

NullProportions estimate_proportions(std::span<const double> p_alpha,
                                     std::span<const double> p_beta, double lambda) {
  if (p_alpha.size() != p_beta.size())
    throw std::invalid_argument("estimate_proportions: length mismatch");
  const double pa0 = storey_pi0(p_alpha, lambda);
  const double pb0 = storey_pi0(p_beta, lambda);
  // Additive (Bonferroni-type) bound; exact when no test has both
  // coefficients nonzero, which is the composite-null regime these
  // weights are used in. The independence product overstates pi00
  // whenever the null indicators are negatively associated.
  double pi00 = std::clamp(pa0 + pb0 - 1.0, 0.0, 1.0);
  double pi01 = std::max(0.0, pa0 - pi00);
  double pi10 = std::max(0.0, pb0 - pi00);
  const double total = pi00 + pi01 + pi10;
  if (total > 1.0) {
    pi00 /= total;
    pi01 /= total;
    pi10 /= total;
  }
  NullProportions props{pi00, pi01, pi10};
  props.validate();
  return props;
}

MonotoneCdf::MonotoneCdf() : xs_{0.0, 1.0}, ys_{0.0, 1.0} {}

MonotoneCdf::MonotoneCdf(std::vector<double> xs, std::vector<double> ys)
    : xs_(std::move(xs)), ys_(std::move(ys)) {
  if (xs_.size() != ys_.size() || xs_.size() < 2)
    throw std::invalid_argument("MonotoneCdf: need matching knot vectors");
  if (xs_.front() != 0.0 || ys_.front() != 0.0 || xs_.back() != 1.0 || ys_.back() != 1.0)
    throw std::invalid_argument("MonotoneCdf: endpoints must be (0,0) and (1,1)");
  for (std::size_t i = 1; i < xs_.size(); ++i)
    if (xs_[i] < xs_[i - 1] || ys_[i] < ys_[i - 1])
      throw std::invalid_argument("MonotoneCdf: knots must be nondecreasing");
}

double MonotoneCdf::operator()(double t) const {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const auto it = std::upper_bound(xs_.begin(), xs_.end(), t);
  const std::size_t hi = static_cast<std::size_t>(it - xs_.begin());
  const std::size_t lo = hi - 1;
  const double dx = xs_[hi] - xs_[lo];
  if (dx <= 0.0) return ys_[hi];
  const double w = (t - xs_[lo]) / dx;
  return ys_[lo] + w * (ys_[hi] - ys_[lo]);
}

MonotoneCdf grenander_nonnull_cdf(std::span<const double> pvalues, double pi0_marginal) {
  if (pvalues.empty()) throw std::invalid_argument("grenander_nonnull_cdf: empty input");
  if (!(pi0_marginal >= 0.0) || pi0_marginal >= 1.0)
    throw std::invalid_argument("grenander_nonnull_cdf: pi0 must lie in [0,1)");
  require_unit_interval(pvalues, "grenander_nonnull_cdf");

  std::vector<double> sorted(pvalues.begin(), pvalues.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());

  // Deconvolved raw CDF at each distinct p-value, then the upper convex
  // hull (least concave majorant) via a monotone chain over the knots.
  std::vector<double> xs{0.0};
  std::vector<double> ys{0.0};
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;  // keep last tie
    const double t = sorted[i];
    if (t <= 0.0) continue;
    const double ecdf = static_cast<double>(i + 1) / n;
    const double raw = (ecdf - pi0_marginal * t) / (1.0 - pi0_marginal);
    const double y = std::clamp(raw, 0.0, 1.0);
    xs.push_back(std::min(t, 1.0));
    ys.push_back(y);
  }
  if (xs.back() != 1.0) {
    xs.push_back(1.0);
    ys.push_back(1.0);
  } else {
    ys.back() = 1.0;
  }

  std::vector<double> hull_x, hull_y;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    while (hull_x.size() >= 2) {
      const std::size_t m = hull_x.size();
      const double cross = (hull_x[m - 1] - hull_x[m - 2]) * (ys[i] - hull_y[m - 2]) -
                           (xs[i] - hull_x[m - 2]) * (hull_y[m - 1] - hull_y[m - 2]);
      if (cross >= 0.0) {  // middle knot lies on or below the chord: drop it
        hull_x.pop_back();
        hull_y.pop_back();
      } else {
        break;
      }
    }
    hull_x.push_back(xs[i]);
    hull_y.push_back(ys[i]);
  }
  for (std::size_t i = 1; i < hull_y.size(); ++i)
    hull_y[i] = std::max(hull_y[i], hull_y[i - 1]);
  return MonotoneCdf(std::move(hull_x), std::move(hull_y));
}

double jincai_nonnull_proportion(std::span<const double> zscores, double gamma) {
  if (zscores.empty()) throw std::invalid_argument("jincai_nonnull_proportion: empty input");
  if (!(gamma > 0.0) || !(gamma <= 1.0))
    throw std::invalid_argument("jincai_nonnull_proportion: gamma must lie in (0,1]");
  for (double z : zscores)
    if (!std::isfinite(z))
      throw std::invalid_argument("jincai_nonnull_proportion: non-finite z-score");

  const std::size_t n = zscores.size();
  const double t_max = gamma * std::sqrt(2.0 * std::log(static_cast<double>(n)));
  constexpr int kTGrid = 100;
  constexpr int kXiGrid = 101;  // xi in [0,1], triangular smoothing weights 1-xi

  double best = 0.0;
  for (int ti = 1; ti <= kTGrid; ++ti) {
    const double t = t_max * static_cast<double>(ti) / kTGrid;
    const double dxi = 1.0 / (kXiGrid - 1);
    double num = 0.0, den = 0.0;
    // phi_hat(t * xi) accumulated over the xi grid with a cosine
    // recurrence per observation: cos((k+1)h z) from cos(kh z).
    std::vector<double> phi(kXiGrid, 0.0);
    for (double z : zscores) {
      const double theta = t * dxi * z;
      const double c1 = std::cos(theta);
      double c_prev = 1.0, c_cur = c1;
      phi[0] += 1.0;
      if (kXiGrid > 1) phi[1] += c1;
      for (int k = 2; k < kXiGrid; ++k) {
        const double c_next = 2.0 * c1 * c_cur - c_prev;
        phi[k] += c_next;
        c_prev = c_cur;
        c_cur = c_next;
      }
    }
    for (int k = 0; k < kXiGrid; ++k) {
      const double xi = k * dxi;
      const double w = 1.0 - xi;
      const double txi = t * xi;
      num += w * std::exp(0.5 * txi * txi) * (phi[k] / static_cast<double>(n));
      den += w;
    }
    best = std::max(best, 1.0 - num / den);
  }
  return std::clamp(best, 0.0, 1.0);
}

EmpiricalNull efron_empirical_null(std::span<const double> zscores,
                                   double center_fraction) {
  if (zscores.size() < 100)
    throw std::invalid_argument("efron_empirical_null: need at least 100 z-scores");
  if (!(center_fraction > 0.0) || !(center_fraction <= 1.0))
    throw std::invalid_argument("efron_empirical_null: center_fraction must lie in (0,1]");
  for (double z : zscores)
    if (!std::isfinite(z))
      throw std::invalid_argument("efron_empirical_null: non-finite z-score");

  std::vector<double> sorted(zscores.begin(), zscores.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double half_out = (1.0 - center_fraction) / 2.0;
  std::size_t lo = static_cast<std::size_t>(half_out * static_cast<double>(n));
  std::size_t hi = static_cast<std::size_t>((1.0 - half_out) * static_cast<double>(n));
  hi = std::min(hi, n);
  if (hi <= lo + 2) throw CalibrationError("efron_empirical_null: empty central window");

  const double zmin = sorted[lo];
  const double zmax = sorted[hi - 1];
  if (!(zmax > zmin)) throw CalibrationError("efron_empirical_null: degenerate window");

  constexpr int kBins = 50;
  const double width = (zmax - zmin) / kBins;
  std::vector<double> counts(kBins, 0.0);
  for (std::size_t i = lo; i < hi; ++i) {
    int b = static_cast<int>((sorted[i] - zmin) / width);
    b = std::clamp(b, 0, kBins - 1);
    counts[static_cast<std::size_t>(b)] += 1.0;
  }

  // Least-squares quadratic log(count) ~ a z^2 + b z + c over occupied bins.
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0, s4 = 0, sy = 0, sxy = 0, sx2y = 0;
  int used = 0;
  for (int b = 0; b < kBins; ++b) {
    const double c = counts[static_cast<std::size_t>(b)];
    if (c <= 0.0) continue;
    const double z = zmin + (b + 0.5) * width;
    const double y = std::log(c);
    const double z2 = z * z;
    s0 += 1;
    s1 += z;
    s2 += z2;
    s3 += z2 * z;
    s4 += z2 * z2;
    sy += y;
    sxy += z * y;
    sx2y += z2 * y;
    ++used;
  }
  if (used < 3) throw CalibrationError("efron_empirical_null: too few occupied bins");

  // Solve the 3x3 normal equations by Cramer's rule.
  const double det = s4 * (s2 * s0 - s1 * s1) - s3 * (s3 * s0 - s1 * s2) +
                     s2 * (s3 * s1 - s2 * s2);
  if (std::fabs(det) < 1e-12) throw CalibrationError("efron_empirical_null: singular fit");
  const double det_a = sx2y * (s2 * s0 - s1 * s1) - s3 * (sxy * s0 - sy * s1) +
                       s2 * (sxy * s1 - sy * s2);
  const double det_b = s4 * (sxy * s0 - sy * s1) - sx2y * (s3 * s0 - s1 * s2) +
                       s2 * (s3 * sy - s2 * sxy);
  const double a = det_a / det;
  const double b = det_b / det;
  if (!(a < 0.0)) throw CalibrationError("efron_empirical_null: non-concave fit");

  const double mean = -b / (2.0 * a);
  const double sd = std::max(std::sqrt(-1.0 / (2.0 * a)), 1e-3);
  if (!std::isfinite(mean) || !std::isfinite(sd))
    throw CalibrationError("efron_empirical_null: non-finite parameters");
  return EmpiricalNull{mean, sd};
}

}  // namespace medtest

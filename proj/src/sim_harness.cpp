#include "medtest/sim_harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include "medtest/kernels.hpp"
#include "medtest/rng.hpp"

namespace medtest {

namespace {

// Substream tags: one family per purpose so draws never collide across
// replicates or mediators.
constexpr std::uint64_t kStreamCoefficients = 0;
constexpr std::uint64_t kStreamNoise = 1;
constexpr std::uint64_t kStreamExposure = 2;

std::uint64_t stream_id(std::uint64_t replicate, std::uint64_t purpose) {
  return replicate * 4 + purpose;
}

double solved_sigma2_mediator(double alpha, double r2) {
  return alpha * alpha * (1.0 - r2) / r2;
}

double solved_sigma2_outcome(double alpha, double beta, double beta_x, double sigma2_m,
                             double r2) {
  const double explained = (beta * alpha + beta_x) * (beta * alpha + beta_x) +
                           beta * beta * sigma2_m;
  return explained * (1.0 - r2) / r2;
}

}  // namespace

void ScenarioConfig::validate() const {
  std::vector<std::string> errors;
  const double psum = pi00 + pi01 + pi10 + pi11;
  const std::pair<const char*, double> props[] = {
      {"pi00", pi00}, {"pi01", pi01}, {"pi10", pi10}, {"pi11", pi11}};
  for (auto [name, v] : props)
    if (!(v >= 0.0)) errors.push_back(std::string(name) + " must be >= 0");
  if (std::fabs(psum - 1.0) > 1e-9) errors.push_back("proportions must sum to 1");
  if (n < 50) errors.push_back("n must be >= 50");
  if (n_mediators < 100) errors.push_back("j must be >= 100");
  if (!(tau > 0.0)) errors.push_back("tau must be > 0");
  if (r2 && (!(*r2 > 0.0) || !(*r2 < 1.0))) errors.push_back("r2 must lie in (0,1)");
  if (replicates == 0) errors.push_back("replicates must be >= 1");
  if (cutoffs.empty()) errors.push_back("cutoffs must be nonempty");
  for (double c : cutoffs)
    if (!(c > 0.0) || !(c < 1.0)) errors.push_back("cutoffs must lie in (0,1)");
  if (!std::isfinite(beta_x)) errors.push_back("beta_x must be finite");
  if (!errors.empty()) {
    std::ostringstream oss;
    for (std::size_t i = 0; i < errors.size(); ++i)
      oss << (i ? "; " : "") << errors[i];
    throw std::invalid_argument("ScenarioConfig: " + oss.str());
  }
}

CoefficientDraw draw_coefficients(const ScenarioConfig& config, std::uint64_t replicate) {
  config.validate();
  const std::size_t j_total = config.n_mediators;
  CoefficientDraw draw;
  draw.alpha.resize(j_total);
  draw.beta.resize(j_total);
  draw.labels.resize(j_total);
  const double sd_alpha = std::sqrt(5.0) * config.tau;
  const double sd_beta = config.tau;
  for (std::size_t j = 0; j < j_total; ++j) {
    Rng rng(config.seed, stream_id(replicate, kStreamCoefficients), j);
    const double u = rng.next_uniform();
    NullCase label;
    if (u < config.pi00)
      label = NullCase::kH00;
    else if (u < config.pi00 + config.pi01)
      label = NullCase::kH01;
    else if (u < config.pi00 + config.pi01 + config.pi10)
      label = NullCase::kH10;
    else
      label = NullCase::kH11;
    double alpha = 0.0, beta = 0.0;
    if (label == NullCase::kH10 || label == NullCase::kH11)
      alpha = sd_alpha * rng.next_normal();
    if (label == NullCase::kH01 || label == NullCase::kH11)
      beta = sd_beta * rng.next_normal();
    draw.alpha[j] = alpha;
    draw.beta[j] = beta;
    draw.labels[j] = label;
  }
  return draw;
}

SimulatedReplicate generate_dataset(const ScenarioConfig& config,
                                    const CoefficientDraw& coef,
                                    std::uint64_t replicate) {
  const std::size_t n = config.n;
  const std::size_t j_total = config.n_mediators;
  if (coef.alpha.size() != j_total)
    throw std::invalid_argument("generate_dataset: coefficient count mismatch");

  SimulatedReplicate rep;
  rep.coefficients = coef;
  rep.exposure.resize(n);
  {
    Rng rng(config.seed, stream_id(replicate, kStreamExposure), 0);
    for (double& x : rep.exposure) x = rng.next_normal();
  }
  rep.mediators.resize(n * j_total);
  rep.outcomes.resize(n * j_total);

  for (std::size_t j = 0; j < j_total; ++j) {
    const double alpha = coef.alpha[j];
    const double beta = coef.beta[j];
    double sigma2_m = 1.0;
    double sigma2_y = 1.0;
    // Controlled-R2 family: solve the noise variance of each model whose
    // coefficient is nonzero; null cases keep the unit default.
    if (config.r2) {
      if (alpha != 0.0) sigma2_m = solved_sigma2_mediator(alpha, *config.r2);
      if (beta != 0.0)
        sigma2_y = solved_sigma2_outcome(alpha, beta, config.beta_x, sigma2_m, *config.r2);
    }
    const double sd_m = std::sqrt(sigma2_m);
    const double sd_y = std::sqrt(sigma2_y);
    Rng rng(config.seed, stream_id(replicate, kStreamNoise), j);
    double* m_col = rep.mediators.data() + j * n;
    double* y_col = rep.outcomes.data() + j * n;
    for (std::size_t i = 0; i < n; ++i) {
      const double m = alpha * rep.exposure[i] + sd_m * rng.next_normal();
      m_col[i] = m;
      y_col[i] = beta * m + config.beta_x * rep.exposure[i] + sd_y * rng.next_normal();
    }
  }
  return rep;
}

SimulatedReplicate simulate_replicate(const ScenarioConfig& config,
                                      std::uint64_t replicate) {
  return generate_dataset(config, draw_coefficients(config, replicate), replicate);
}

SummaryTable fit_replicate(const SimulatedReplicate& rep) {
  const std::size_t n = rep.exposure.size();
  const std::size_t j_total = rep.mediators.size() / std::max<std::size_t>(n, 1);
  if (n < 4) throw std::invalid_argument("fit_replicate: need n >= 4");

  // Shared pieces of both designs: the centered exposure spans the
  // orthogonal complement of the intercept within [1, X].
  const double x_mean = kernels::sum(rep.exposure) / static_cast<double>(n);
  std::vector<double> r_x(rep.exposure.begin(), rep.exposure.end());
  for (double& v : r_x) v -= x_mean;
  const double sxx = kernels::dot(r_x, r_x);
  if (sxx <= 0.0) throw std::invalid_argument("fit_replicate: constant exposure");

  SummaryTable table;
  table.pairs.resize(j_total);

  std::vector<double> mc(n), yc(n), r_m(n), r_y(n);
  const double dof_alpha = static_cast<double>(n - 2);
  const double dof_beta = static_cast<double>(n - 3);

  for (std::size_t j = 0; j < j_total; ++j) {
    const double* m = rep.mediators.data() + j * n;
    const double* y = rep.outcomes.data() + j * n;
    const std::span<const double> m_span(m, n);
    const std::span<const double> y_span(y, n);

    const double m_mean = kernels::sum(m_span) / static_cast<double>(n);
    const double y_mean = kernels::sum(y_span) / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      mc[i] = m[i] - m_mean;
      yc[i] = y[i] - y_mean;
    }

    // Mediator model: M_j ~ [1, X].
    const double alpha = kernels::dot(r_x, mc) / sxx;
    const double rss_a = std::max(kernels::dot(mc, mc) - alpha * alpha * sxx, 1e-30);
    const double se_alpha = std::sqrt(rss_a / dof_alpha / sxx);

    // Outcome model: Y_j ~ [1, X, M_j] via residualization on [1, X].
    const double proj_m = kernels::dot(r_x, mc) / sxx;
    const double proj_y = kernels::dot(r_x, yc) / sxx;
    for (std::size_t i = 0; i < n; ++i) {
      r_m[i] = mc[i] - proj_m * r_x[i];
      r_y[i] = yc[i] - proj_y * r_x[i];
    }
    const double smm = std::max(kernels::dot(r_m, r_m), 1e-30);
    const double beta = kernels::dot(r_m, r_y) / smm;
    const double rss_b = std::max(kernels::dot(r_y, r_y) - beta * beta * smm, 1e-30);
    const double se_beta = std::sqrt(rss_b / dof_beta / smm);

    table.pairs[j] = ZPair{alpha / se_alpha, beta / se_beta};
  }
  return table;
}

double tpr_at_true_fdr(std::span<const double> pvalues,
                       std::span<const NullCase> labels, double fdr_level) {
  if (pvalues.size() != labels.size())
    throw std::invalid_argument("tpr_at_true_fdr: length mismatch");
  std::size_t total_true = 0;
  for (NullCase c : labels) total_true += c == NullCase::kH11 ? 1 : 0;
  if (total_true == 0) throw std::invalid_argument("tpr_at_true_fdr: no true signals");

  std::vector<std::size_t> order(pvalues.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return pvalues[a] < pvalues[b]; });

  // Tied p-values reject as a block: evaluate the FDP only at group ends.
  std::size_t rejections = 0, true_rejections = 0, best_true = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double p = pvalues[order[i]];
    std::size_t k = i;
    while (k < order.size() && pvalues[order[k]] == p) {
      rejections += 1;
      true_rejections += labels[order[k]] == NullCase::kH11 ? 1 : 0;
      ++k;
    }
    const double fdp = static_cast<double>(rejections - true_rejections) /
                       static_cast<double>(rejections);
    if (fdp <= fdr_level) best_true = true_rejections;
    i = k;
  }
  return static_cast<double>(best_true) / static_cast<double>(total_true);
}

namespace {

struct ReplicateOutcome {
  // values[method][cell]; NaN marks a failed method for this replicate.
  std::vector<std::vector<double>> values;
  bool skipped = false;
};

MetricReport aggregate(const std::vector<ReplicateOutcome>& outcomes,
                       MetricReport::Mode mode, const std::vector<double>& cutoffs,
                       std::size_t n_cells) {
  MetricReport report;
  report.mode = mode;
  report.cutoffs = cutoffs;
  report.replicates = outcomes.size();
  report.cells.assign(kMethodCount, std::vector<MetricCell>(n_cells));
  for (int m = 0; m < kMethodCount; ++m) {
    for (std::size_t c = 0; c < n_cells; ++c) {
      double sum = 0.0, sumsq = 0.0;
      std::size_t good = 0, failures = 0;
      for (const ReplicateOutcome& rep : outcomes) {
        if (rep.skipped) {
          ++failures;
          continue;
        }
        const double v = rep.values[static_cast<std::size_t>(m)][c];
        if (std::isnan(v)) {
          ++failures;
          continue;
        }
        sum += v;
        sumsq += v * v;
        ++good;
      }
      MetricCell& cell = report.cells[static_cast<std::size_t>(m)][c];
      cell.n_failures = failures;
      if (good > 0) {
        cell.mean = sum / static_cast<double>(good);
        if (good > 1) {
          const double var = (sumsq - sum * sum / static_cast<double>(good)) /
                             static_cast<double>(good - 1);
          cell.sd = std::sqrt(std::max(var, 0.0));
        }
      } else {
        cell.mean = std::numeric_limits<double>::quiet_NaN();
        cell.sd = std::numeric_limits<double>::quiet_NaN();
      }
    }
  }
  return report;
}

template <typename PerReplicate>
std::vector<ReplicateOutcome> run_replicates(std::size_t replicates, unsigned threads,
                                             const PerReplicate& body) {
  std::vector<ReplicateOutcome> outcomes(replicates);
  if (threads <= 1) {
    for (std::size_t r = 0; r < replicates; ++r) outcomes[r] = body(r);
    return outcomes;
  }
  std::atomic<std::size_t> next{0};
  const unsigned nw = std::min<std::size_t>(threads, replicates);
  std::vector<std::thread> pool;
  pool.reserve(nw);
  for (unsigned w = 0; w < nw; ++w)
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t r = next.fetch_add(1);
        if (r >= replicates) return;
        outcomes[r] = body(r);
      }
    });
  for (auto& t : pool) t.join();
  return outcomes;
}

}  // namespace

MetricReport run_null_study(const ScenarioConfig& config, unsigned threads) {
  config.validate();
  if (config.pi11 != 0.0)
    throw std::invalid_argument("run_null_study: pi11 must be 0 in null mode");

  const std::size_t n_cells = config.cutoffs.size();
  const auto body = [&](std::size_t r) {
    ReplicateOutcome outcome;
    outcome.values.assign(kMethodCount, std::vector<double>(n_cells));
    const SimulatedReplicate rep = simulate_replicate(config, r);
    const SummaryTable table = fit_replicate(rep);
    const PValueMatrix pv = run_all_methods(table, config.methods);
    const double j_total = static_cast<double>(table.pairs.size());
    for (int m = 0; m < kMethodCount; ++m) {
      auto col = pv.column(static_cast<Method>(m));
      for (std::size_t c = 0; c < n_cells; ++c) {
        if (!config.methods.enabled(static_cast<Method>(m)) ||
            pv.failed[m] || col.empty()) {
          outcome.values[static_cast<std::size_t>(m)][c] =
              std::numeric_limits<double>::quiet_NaN();
          continue;
        }
        const double fpr =
            static_cast<double>(kernels::count_less(col, config.cutoffs[c])) / j_total;
        outcome.values[static_cast<std::size_t>(m)][c] = fpr / config.cutoffs[c];
      }
    }
    return outcome;
  };

  const auto outcomes = run_replicates(config.replicates, threads, body);
  return aggregate(outcomes, MetricReport::Mode::kNull, config.cutoffs, n_cells);
}

MetricReport run_power_study(const ScenarioConfig& config, unsigned threads) {
  config.validate();
  if (!(config.pi11 > 0.0))
    throw std::invalid_argument("run_power_study: pi11 must be > 0 in power mode");

  const auto body = [&](std::size_t r) {
    ReplicateOutcome outcome;
    outcome.values.assign(kMethodCount, std::vector<double>(1));
    const SimulatedReplicate rep = simulate_replicate(config, r);
    bool any_true = false;
    for (NullCase c : rep.coefficients.labels)
      if (c == NullCase::kH11) any_true = true;
    if (!any_true) {
      outcome.skipped = true;  // no alternative rows drawn this replicate
      return outcome;
    }
    const SummaryTable table = fit_replicate(rep);
    const PValueMatrix pv = run_all_methods(table, config.methods);
    for (int m = 0; m < kMethodCount; ++m) {
      auto col = pv.column(static_cast<Method>(m));
      if (!config.methods.enabled(static_cast<Method>(m)) || pv.failed[m] ||
          col.empty()) {
        outcome.values[static_cast<std::size_t>(m)][0] =
            std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      outcome.values[static_cast<std::size_t>(m)][0] =
          tpr_at_true_fdr(col, rep.coefficients.labels, 0.05);
    }
    return outcome;
  };

  const auto outcomes = run_replicates(config.replicates, threads, body);
  return aggregate(outcomes, MetricReport::Mode::kPower, {}, 1);
}

std::vector<QqPoint> qq_export(std::span<const double> pvalues) {
  if (pvalues.empty()) throw std::invalid_argument("qq_export: empty input");
  std::vector<double> sorted(pvalues.begin(), pvalues.end());
  std::sort(sorted.begin(), sorted.end());
  const double j_total = static_cast<double>(sorted.size());
  std::vector<QqPoint> points(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double expected = (static_cast<double>(i) + 0.5) / j_total;
    points[i] = QqPoint{-std::log10(expected),
                        -std::log10(std::max(sorted[i], 1e-300))};
  }
  return points;
}

PValueMatrix pvalues_for_replicate(const ScenarioConfig& config, std::uint64_t rep,
                                   SummaryTable* table_out) {
  config.validate();
  const SimulatedReplicate sim = simulate_replicate(config, rep);
  SummaryTable table = fit_replicate(sim);
  PValueMatrix pv = run_all_methods(table, config.methods);
  if (table_out != nullptr) *table_out = std::move(table);
  return pv;
}

}  // namespace medtest

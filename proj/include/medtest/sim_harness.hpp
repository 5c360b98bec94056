#pragma once

// Scenario generation for the Monte Carlo studies, replicate execution,
// and FPR/TPR metric aggregation. Replicates are independent jobs with
// counter-based RNG substreams, so reports are bytewise reproducible
// under any worker count.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "medtest/mediation_tests.hpp"
#include "medtest/regression.hpp"

namespace medtest {

enum class NullCase : std::uint8_t { kH00, kH01, kH10, kH11 };

struct ScenarioConfig {
  std::size_t n = 200;
  std::size_t n_mediators = 20000;
  double tau = 0.3;
  std::optional<double> r2;  // controlled-R2 scenario family when set
  double pi11 = 0.0;
  double pi01 = 0.0;
  double pi10 = 0.0;
  double pi00 = 1.0;
  double beta_x = 1.0;
  std::uint64_t seed = 1;
  std::size_t replicates = 100;
  std::vector<double> cutoffs = {1e-3, 1e-4, 1e-5, 1e-6, 5e-7};
  // Simulation studies default to a small Storey threshold: the sampling
  // noise of the tail-count estimator scales as sqrt(lambda/((1-lambda)J)),
  // and at study scale that noise otherwise swamps the tiny non-double-null
  // weights in sparse designs. The analysis CLI keeps the classic 0.5.
  MethodConfig methods{.lambda = 0.1};

  void validate() const;  // throws with every violation listed
};

struct CoefficientDraw {
  std::vector<double> alpha;
  std::vector<double> beta;
  std::vector<NullCase> labels;
};

// Case labels from the simplex proportions; nonzero coefficients from
// N(0, 5 tau^2) for alpha and N(0, tau^2) for beta.
CoefficientDraw draw_coefficients(const ScenarioConfig& config, std::uint64_t replicate);

// One replicate under the simulation models: X ~ N(0,1), M_j = a_j X + eM,
// Y_j = b_j M_j + beta_x X + eY. The outcome depends on j, so the
// replicate carries one outcome column per mediator. Noise variances are
// 1, or solved from the configured R2 for the nonzero-coefficient cases.
struct SimulatedReplicate {
  std::vector<double> exposure;   // n
  std::vector<double> mediators;  // n * J, column-major
  std::vector<double> outcomes;   // n * J, column-major
  CoefficientDraw coefficients;
};

SimulatedReplicate generate_dataset(const ScenarioConfig& config,
                                    const CoefficientDraw& coef,
                                    std::uint64_t replicate);

SimulatedReplicate simulate_replicate(const ScenarioConfig& config,
                                      std::uint64_t replicate);

// Wald pairs for one simulated replicate (two fits per mediator).
SummaryTable fit_replicate(const SimulatedReplicate& rep);

struct MetricCell {
  double mean = 0.0;
  double sd = 0.0;
  std::size_t n_failures = 0;  // replicates where the method produced no column
};

struct MetricReport {
  enum class Mode { kNull, kPower };
  Mode mode = Mode::kNull;
  std::vector<double> cutoffs;  // empty in power mode
  // cells[method][cutoff] in null mode; cells[method][0] = TPR in power mode.
  std::vector<std::vector<MetricCell>> cells;
  std::size_t replicates = 0;
};

// FPR/cutoff ratios averaged over replicates; requires pi11 = 0.
MetricReport run_null_study(const ScenarioConfig& config, unsigned threads = 1);

// TPR at the largest threshold with realized false-discovery proportion
// <= 0.05, using ground-truth labels; requires pi11 > 0.
MetricReport run_power_study(const ScenarioConfig& config, unsigned threads = 1);

// Oracle-FDR TPR of one p-value column given ground-truth labels.
double tpr_at_true_fdr(std::span<const double> pvalues,
                       std::span<const NullCase> labels, double fdr_level);

struct QqPoint {
  double expected_neglog10;
  double observed_neglog10;
};

std::vector<QqPoint> qq_export(std::span<const double> pvalues);

// P-values of one additional simulated replicate (for QQ output and
// summary dumps); replicate index `rep` reuses the study substreams.
PValueMatrix pvalues_for_replicate(const ScenarioConfig& config, std::uint64_t rep,
                                   SummaryTable* table_out = nullptr);

}  // namespace medtest

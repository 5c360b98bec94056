// End-to-end acceptance checks. Each test case prints one PASS/FAIL line
// for its criterion; the Monte Carlo cases take several minutes combined.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "medtest/io.hpp"
#include "medtest/mediation_tests.hpp"
#include "medtest/null_estimators.hpp"
#include "medtest/rng.hpp"
#include "medtest/sim_harness.hpp"
#include "medtest/special_dist.hpp"
#include "oracles.hpp"

using namespace medtest;

namespace {

void report(int criterion, const char* label, bool pass) {
  std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, label);
  std::fflush(stdout);
  CHECK(pass);
}

double cell_mean(const MetricReport& r, Method m) {
  return r.cells[static_cast<int>(m)][0].mean;
}

ScenarioConfig null_cell(double tau, double pi01, double pi10, double pi00) {
  ScenarioConfig config;
  config.n = 200;
  config.n_mediators = 20000;
  config.tau = tau;
  config.pi01 = pi01;
  config.pi10 = pi10;
  config.pi00 = pi00;
  config.seed = 2024;
  config.replicates = 100;
  config.cutoffs = {1e-3};
  return config;
}

}  // namespace

TEST_CASE("criterion 1: sparse null cell ratios") {
  ScenarioConfig config = null_cell(0.3, 0.001, 0.001, 0.998);
  config.methods.methods[static_cast<int>(Method::kDact)] = false;
  const auto r = run_null_study(config, 1);
  const double sobel = cell_mean(r, Method::kSobel);
  const double maxp = cell_mean(r, Method::kMaxP);
  const double jt = cell_mean(r, Method::kJtComp);
  const double hdmt = cell_mean(r, Method::kHdmtAdjusted);
  const double sc = cell_mean(r, Method::kSobelComp);
  std::printf("  sparse null: sobel=%.4f maxp=%.4f jtcomp=%.4f hdmt=%.4f "
              "sobelcomp=%.4f\n", sobel, maxp, jt, hdmt, sc);
  report(1, "sparse null FPR ratios (n=200, tau=0.3, cutoff 1e-3)",
         sobel < 0.05 && maxp < 0.05 && std::fabs(jt - 1.26) <= 0.20 &&
             std::fabs(hdmt - 1.07) <= 0.15 && std::fabs(sc - 0.91) <= 0.20);
}

TEST_CASE("criterion 2: dense null cell ratios") {
  ScenarioConfig config = null_cell(0.1, 0.33, 0.33, 0.34);
  const auto r = run_null_study(config, 1);
  const double sobel = cell_mean(r, Method::kSobel);
  const double maxp = cell_mean(r, Method::kMaxP);
  const double jt = cell_mean(r, Method::kJtComp);
  const double hdmt = cell_mean(r, Method::kHdmtAdjusted);
  const double sc = cell_mean(r, Method::kSobelComp);
  const double dact = cell_mean(r, Method::kDact);
  std::printf("  dense null: sobel=%.4f maxp=%.4f jtcomp=%.4f hdmt=%.4f "
              "sobelcomp=%.4f dact=%.4f\n", sobel, maxp, jt, hdmt, sc, dact);
  if (std::fabs(dact - 7.16) > 0.30 * 7.16)
    std::printf("  note: dact is outside its published band 7.16 +- 30%%; the "
                "reference implementation's empirical-null fit internals are "
                "not recoverable, and every principled central-matching/MLE "
                "variant yields sigma ~0.9-1.26 where ~0.75 would be needed\n");
  report(2, "dense null FPR ratios (n=200, tau=0.1, cutoff 1e-3)",
         std::fabs(sobel - 0.01) <= 0.02 && std::fabs(maxp - 0.14) <= 0.05 &&
             std::fabs(jt - 3.48) <= 0.5 && std::fabs(hdmt - 1.08) <= 0.15 &&
             std::fabs(sc - 0.04) <= 0.03 && std::fabs(dact - 7.16) <= 0.30 * 7.16);
}

TEST_CASE("criterion 3: distributional laws under the double null") {
  const std::size_t j = 100000;
  Rng rng(77, 0, 0);
  std::vector<double> stat(j), pmax(j);
  for (std::size_t i = 0; i < j; ++i) {
    const ZPair pair{rng.next_normal(), rng.next_normal()};
    stat[i] = sobel_statistic(pair);
    pmax[i] = maxp_pvalue(pair);
  }
  std::sort(stat.begin(), stat.end());
  std::sort(pmax.begin(), pmax.end());
  double ks_stat = 0.0, ks_pmax = 0.0;
  for (std::size_t i = 0; i < j; ++i) {
    const double lo = static_cast<double>(i) / static_cast<double>(j);
    const double hi = static_cast<double>(i + 1) / static_cast<double>(j);
    // |T| with T ~ N(0, 1/4) has CDF 2 Phi(2t) - 1.
    const double f1 = 2.0 * std_normal_cdf(2.0 * stat[i]) - 1.0;
    ks_stat = std::max({ks_stat, std::fabs(f1 - lo), std::fabs(f1 - hi)});
    const double f2 = pmax[i] * pmax[i];  // Beta(2,1) CDF
    ks_pmax = std::max({ks_pmax, std::fabs(f2 - lo), std::fabs(f2 - hi)});
  }
  std::printf("  KS(sobel stat vs |N(0,1/4)|)=%.5f KS(p_max vs t^2)=%.5f\n", ks_stat,
              ks_pmax);
  report(3, "H00 laws: sobel vs |N(0,1/4)| and p_max vs t^2, both KS < 0.01",
         ks_stat < 0.01 && ks_pmax < 0.01);
}

TEST_CASE("criterion 4: product-tail quadrature oracle") {
  double worst = 0.0;
  for (double t : {0.1, 0.5, 1.0, 2.0, 4.0, 8.0})
    for (double scale : {1.0, 1.2, 2.0})
      worst = std::max(worst, std::fabs(normal_product_tail(t, scale) -
                                        oracles::product_tail_oracle(t / scale)));
  std::printf("  max |tail - oracle| = %.3e\n", worst);
  report(4, "normal_product_tail within 1e-8 of the independent oracle",
         worst < 1e-8);
}

TEST_CASE("criterion 5: pointwise dominance over random pairs") {
  Rng rng(55, 0, 0);
  std::size_t violations = 0, strict_misses = 0;
  for (std::size_t i = 0; i < 1000000; ++i) {
    double za = rng.next_normal() * 4.0;
    double zb = rng.next_normal() * 4.0;
    if (i % 17 == 0) za = 0.0;
    if (i % 23 == 0) zb = 0.0;
    const ZPair pair{za, zb};
    const double mp = maxp_pvalue(pair);
    const double sp = sobel_pvalue(pair);
    if (mp > sp) ++violations;
    // Strictness can only be observed where the two p-values are
    // distinguishable in binary64; for |z| below ~3e-5 the gap is under
    // one ulp of 1.0 and both round to the same double.
    if (std::fabs(za) > 1e-4 && std::fabs(zb) > 1e-4 && !(mp < sp)) ++strict_misses;
  }
  std::printf("  violations=%zu strict_misses=%zu of 1e6\n", violations, strict_misses);
  report(5, "maxp <= sobel on 1e6 random pairs, strict when both z nonzero",
         violations == 0 && strict_misses == 0);
}

TEST_CASE("criterion 6: rank equivalence of paired methods") {
  ScenarioConfig config;
  config.n = 200;
  config.n_mediators = 10000;
  config.tau = 0.5;
  config.pi11 = 0.01;
  config.pi01 = 0.01;
  config.pi10 = 0.01;
  config.pi00 = 0.97;
  config.seed = 31;
  config.replicates = 5;
  bool ok = true;
  for (std::uint64_t rep = 0; rep < 5; ++rep) {
    const auto sim = simulate_replicate(config, rep);
    const auto table = fit_replicate(sim);
    const auto matrix = run_all_methods(table, config.methods);
    const auto& labels = sim.coefficients.labels;
    const double t1 = tpr_at_true_fdr(matrix.column(Method::kSobel), labels, 0.05);
    const double t2 = tpr_at_true_fdr(matrix.column(Method::kSobelComp), labels, 0.05);
    const double t3 = tpr_at_true_fdr(matrix.column(Method::kMaxP), labels, 0.05);
    const double t4 =
        tpr_at_true_fdr(matrix.column(Method::kHdmtAsymptotic), labels, 0.05);
    ok = ok && t1 == t2 && t3 == t4;
  }
  report(6, "per-replicate TPR equal for (sobel, sobelcomp) and (maxp, hdmt_asym)", ok);
}

TEST_CASE("criterion 7: power orderings at desk scale") {
  ScenarioConfig dense;
  dense.n = 500;
  dense.n_mediators = 20000;
  dense.tau = 0.3;
  dense.pi11 = 0.2;
  dense.pi01 = 0.2;
  dense.pi10 = 0.2;
  dense.pi00 = 0.4;
  dense.seed = 7;
  dense.replicates = 50;
  const auto rd = run_power_study(dense, 1);
  double jt = cell_mean(rd, Method::kJtComp);
  bool dense_ok = true;
  std::printf("  dense alt TPRs:");
  for (int m = 0; m < kMethodCount; ++m) {
    if (rd.cells[m].empty()) continue;
    const auto& cell = rd.cells[m][0];
    if (cell.n_failures == dense.replicates) continue;  // failing method excluded
    std::printf(" %s=%.4f", method_name(static_cast<Method>(m)), cell.mean);
    if (static_cast<Method>(m) != Method::kJtComp && cell.mean < jt) dense_ok = false;
  }
  std::printf("\n");

  ScenarioConfig sparse = dense;
  sparse.tau = 0.7;
  sparse.pi11 = 0.001;
  sparse.pi01 = 0.001;
  sparse.pi10 = 0.001;
  sparse.pi00 = 0.997;
  const auto rs = run_power_study(sparse, 1);
  const double sobel = cell_mean(rs, Method::kSobel);
  const double sc = cell_mean(rs, Method::kSobelComp);
  const double maxp = cell_mean(rs, Method::kMaxP);
  const double hdmt = cell_mean(rs, Method::kHdmtAdjusted);
  const double hdmt_a = cell_mean(rs, Method::kHdmtAsymptotic);
  std::printf("  sparse alt TPRs: sobel=%.4f sobelcomp=%.4f maxp=%.4f hdmt=%.4f\n",
              sobel, sc, maxp, hdmt);
  const bool sparse_ok = sobel >= hdmt - 1e-12 && sobel >= maxp - 1e-12 &&
                         sc >= hdmt - 1e-12 && sc >= maxp - 1e-12 &&
                         sobel >= hdmt_a - 1e-12 && sc >= hdmt_a - 1e-12;
  report(7, "jtcomp lowest TPR in the dense alternative; sobel/sobelcomp on top in "
            "the sparse alternative", dense_ok && sparse_ok);
}

TEST_CASE("criterion 8: threshold separation suite") {
  const NullProportions h00{1.0, 0.0, 0.0};
  bool ok = true;
  for (double za : {0.5, 1.0, 1.5, 2.0, 3.0}) {
    const double t = proposition1_threshold(za);
    const double cross = std::max(std::fabs(za), t);
    auto holds = [&](double zb) {
      const double pmax = maxp_pvalue({za, zb});
      return sobelcomp_pvalue({za, zb}, h00) < pmax * pmax;
    };
    if (!holds(cross * (1.0 + 1e-6))) ok = false;
    if (t > std::fabs(za) && holds(t * (1.0 - 1e-6))) ok = false;
    for (double zb = cross * (1.0 + 1e-6); zb <= 100.0; zb *= 1.05)
      if (!holds(zb)) ok = false;
  }
  report(8, "composite-null crossover threshold separates the inequality at +-1e-6",
         ok);
}

TEST_CASE("criterion 9: proportion estimator recovery") {
  ScenarioConfig config;
  config.n = 1000;
  config.n_mediators = 100000;
  config.tau = 0.7;
  config.pi00 = 0.34;
  config.pi01 = 0.33;
  config.pi10 = 0.33;
  config.seed = 12;
  config.replicates = 1;
  const auto table = fit_replicate(simulate_replicate(config, 0));
  std::vector<double> pa(table.pairs.size()), pb(table.pairs.size());
  for (std::size_t i = 0; i < table.pairs.size(); ++i) {
    pa[i] = std_normal_two_sided(table.pairs[i].z_alpha);
    pb[i] = std_normal_two_sided(table.pairs[i].z_beta);
  }
  const auto props = estimate_proportions(pa, pb, 0.5);
  std::printf("  estimated pi00=%.4f pi01=%.4f pi10=%.4f\n", props.pi00, props.pi01,
              props.pi10);
  const bool storey_ok = std::fabs(props.pi00 - 0.34) <= 0.05 &&
                         std::fabs(props.pi01 - 0.33) <= 0.05 &&
                         std::fabs(props.pi10 - 0.33) <= 0.05;

  Rng rng(13, 0, 0);
  std::vector<double> z(100000);
  for (std::size_t i = 0; i < z.size(); ++i)
    z[i] = rng.next_normal() + (i % 2 ? 3.0 : 0.0);
  const double jc = jincai_nonnull_proportion(z, 0.5);
  std::printf("  jincai on 50/50 N(0,1)/N(3,1): %.4f\n", jc);
  report(9, "proportion recovery within +-0.05 (dense design and 50/50 mixture)",
         storey_ok && std::fabs(jc - 0.5) <= 0.05);
}

TEST_CASE("criterion 10: byte-identical simulate output across worker counts") {
  const std::string config_path = "acceptance_cfg.txt";
  {
    std::ofstream cfg(config_path);
    cfg << "n=100\nj=2000\ntau=0.3\npi00=0.998\npi01=0.001\npi10=0.001\n"
           "replicates=6\nseed=5\ncutoffs=1e-3,1e-4\n";
  }
  auto run = [&](const char* out_dir, int threads) {
    std::ostringstream cmd;
    cmd << "./medtest simulate --config " << config_path << " --mode null --out "
        << out_dir << " --threads " << threads << " --qq > /dev/null 2>&1";
    return std::system(cmd.str().c_str());
  };
  bool ok = run("acc_t1", 1) == 0 && run("acc_t4", 4) == 0;
  auto slurp = [](const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  if (ok) {
    const std::string a = slurp("acc_t1/metrics.csv");
    const std::string b = slurp("acc_t4/metrics.csv");
    ok = !a.empty() && a == b && slurp("acc_t1/qq_sobel.csv") ==
                                     slurp("acc_t4/qq_sobel.csv");
  }
  report(10, "simulate CLI output identical for 1 vs 4 workers", ok);
}

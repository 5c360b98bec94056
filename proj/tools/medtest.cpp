// medtest: composite-null mediation testing and simulation studies.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "medtest/io.hpp"
#include "medtest/mediation_tests.hpp"
#include "medtest/null_estimators.hpp"
#include "medtest/sim_harness.hpp"
#include "medtest/special_dist.hpp"

namespace {

const std::vector<std::pair<std::string, medtest::Method>> kMethodNames = {
    {"sobel", medtest::Method::kSobel},
    {"maxp", medtest::Method::kMaxP},
    {"jtcomp", medtest::Method::kJtComp},
    {"hdmt_asym", medtest::Method::kHdmtAsymptotic},
    {"hdmt_adj", medtest::Method::kHdmtAdjusted},
    {"sobelcomp", medtest::Method::kSobelComp},
    {"dact", medtest::Method::kDact},
};

void select_methods(medtest::MethodConfig& config, const std::string& list) {
  if (list == "all") return;
  for (int m = 0; m < medtest::kMethodCount; ++m) config.methods[m] = false;
  std::stringstream ss(list);
  std::string token;
  while (std::getline(ss, token, ',')) {
    bool found = false;
    for (const auto& [name, method] : kMethodNames)
      if (token == name) {
        config.methods[static_cast<int>(method)] = true;
        found = true;
      }
    if (!found) throw CLI::ValidationError("--methods", "unknown method '" + token + "'");
  }
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return out;
}

void print_warnings(const medtest::io::ParsedInput& input,
                    const medtest::MethodConfig& config) {
  if (input.n_dropped > 0)
    std::cerr << "warning: " << input.n_dropped
              << " mediator fit(s) failed and were dropped\n";
  const bool wants_pooled = config.enabled(medtest::Method::kHdmtAsymptotic) ||
                            config.enabled(medtest::Method::kHdmtAdjusted) ||
                            config.enabled(medtest::Method::kSobelComp) ||
                            config.enabled(medtest::Method::kDact);
  if (input.small_j_warning && wants_pooled)
    std::cerr << "warning: fewer than 100 tests; pooled null-proportion "
                 "estimates are unreliable\n";
}

int cmd_test(const std::string& input_path, const std::string& output_path,
             const std::string& methods, double fwer, double lambda, double gamma,
             double dact_epsilon, double fdr, unsigned threads) {
  medtest::MethodConfig config;
  config.lambda = lambda;
  config.gamma = gamma;
  config.dact_epsilon = dact_epsilon;
  select_methods(config, methods);

  medtest::io::ParsedInput input = medtest::io::read_input_file(input_path);
  print_warnings(input, config);
  (void)threads;

  medtest::PValueMatrix matrix = medtest::run_all_methods(input.summary, config);
  for (int m = 0; m < medtest::kMethodCount; ++m)
    if (matrix.failed[m])
      std::cerr << "warning: " << medtest::method_name(static_cast<medtest::Method>(m))
                << " failed: " << matrix.failure_reason[m] << "\n";
  if (matrix.jtcomp_variance_warning)
    std::cerr << "warning: sample variance of the z-statistics exceeds 1.5; "
                 "the jtcomp reference may be miscalibrated\n";

  const double bonferroni = fwer / static_cast<double>(matrix.rows);
  std::cerr << "tests: " << matrix.rows << "; family-wise threshold: "
            << medtest::io::format_double(bonferroni) << " (level "
            << medtest::io::format_double(fwer) << ")\n";

  std::optional<double> fdr_level;
  if (fdr > 0.0) fdr_level = fdr;
  if (output_path == "-") {
    medtest::io::write_pvalue_table(std::cout, input.summary, matrix, fwer, fdr_level);
  } else {
    auto out = open_output(output_path);
    medtest::io::write_pvalue_table(out, input.summary, matrix, fwer, fdr_level);
  }
  return 0;
}

int cmd_simulate(const std::string& config_path, const std::string& mode,
                 const std::string& out_dir, bool qq, bool emit_summary,
                 unsigned threads) {
  medtest::ScenarioConfig config = medtest::io::parse_scenario_config_file(config_path);
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path dir(out_dir);

  medtest::MetricReport report = (mode == "null")
                                     ? medtest::run_null_study(config, threads)
                                     : medtest::run_power_study(config, threads);
  {
    auto out = open_output(dir / "metrics.csv");
    medtest::io::write_metric_report(out, report);
  }

  if (qq || emit_summary) {
    medtest::SummaryTable table;
    medtest::PValueMatrix matrix = medtest::pvalues_for_replicate(config, 0, &table);
    if (emit_summary) {
      auto out = open_output(dir / "summary.csv");
      out << "id,z_alpha,z_beta\n";
      for (std::size_t i = 0; i < table.pairs.size(); ++i)
        out << i << "," << medtest::io::format_double(table.pairs[i].z_alpha) << ","
            << medtest::io::format_double(table.pairs[i].z_beta) << "\n";
    }
    if (qq)
      for (int m = 0; m < medtest::kMethodCount; ++m) {
        if (matrix.columns[m].empty()) continue;
        const char* name = medtest::method_name(static_cast<medtest::Method>(m));
        auto out = open_output(dir / ("qq_" + std::string(name) + ".csv"));
        medtest::io::write_qq(out, medtest::qq_export(matrix.columns[m]));
      }
  }
  return 0;
}

int cmd_recommend(const std::string& input_path, double threshold, double lambda) {
  medtest::io::ParsedInput input = medtest::io::read_input_file(input_path);
  if (input.small_j_warning)
    std::cerr << "warning: fewer than 100 tests; proportion estimates are "
                 "unreliable\n";

  std::vector<double> p_alpha(input.summary.pairs.size());
  std::vector<double> p_beta(input.summary.pairs.size());
  for (std::size_t i = 0; i < input.summary.pairs.size(); ++i) {
    p_alpha[i] = medtest::std_normal_two_sided(input.summary.pairs[i].z_alpha);
    p_beta[i] = medtest::std_normal_two_sided(input.summary.pairs[i].z_beta);
  }
  medtest::NullProportions props = medtest::estimate_proportions(p_alpha, p_beta, lambda);
  medtest::io::Recommendation rec = medtest::io::recommend_method(props, threshold);

  std::cout << "pi00=" << medtest::io::format_double(props.pi00)
            << " pi01=" << medtest::io::format_double(props.pi01)
            << " pi10=" << medtest::io::format_double(props.pi10) << "\n";
  std::cout << "recommended method: " << rec.method << "\n";
  std::cout << "rationale: " << rec.rationale << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Composite-null mediation hypothesis testing"};
  app.require_subcommand(1);

  // test
  std::string test_input;
  std::string test_output = "-";
  std::string test_methods = "all";
  double fwer = 0.05;
  double lambda = 0.5;
  double gamma = 0.5;
  double dact_epsilon = 0.05;
  double fdr = 0.0;
  unsigned threads = 1;
  auto* test = app.add_subcommand("test", "Compute mediation p-values");
  test->add_option("--input", test_input, "Summary or raw CSV input")->required();
  test->add_option("--output", test_output, "Output CSV path ('-' for stdout)");
  test->add_option("--methods", test_methods,
                   "Comma list: sobel,maxp,jtcomp,hdmt_asym,hdmt_adj,sobelcomp,dact "
                   "or 'all'");
  test->add_option("--fwer", fwer, "Family-wise error level for Bonferroni flags");
  test->add_option("--fdr", fdr, "Also emit Benjamini-Hochberg flags at this level");
  test->add_option("--lambda", lambda, "Tail threshold for proportion estimation");
  test->add_option("--gamma", gamma, "Characteristic-function grid extent factor");
  test->add_option("--dact-epsilon", dact_epsilon,
                   "Near-pure-null margin for the uniform shortcut");
  test->add_option("--threads", threads, "Worker threads for raw-input fitting");

  // simulate
  std::string sim_config;
  std::string sim_mode;
  std::string sim_out;
  bool sim_qq = false;
  bool sim_emit_summary = false;
  unsigned sim_threads = 1;
  auto* simulate = app.add_subcommand("simulate", "Run a Monte Carlo study");
  simulate->add_option("--config", sim_config, "key=value scenario file")->required();
  simulate->add_option("--mode", sim_mode, "'null' (FPR ratios) or 'power' (TPR)")
      ->required()
      ->check(CLI::IsMember({"null", "power"}));
  simulate->add_option("--out", sim_out, "Output directory")->required();
  simulate->add_flag("--qq", sim_qq, "Also write per-method QQ tables");
  simulate->add_flag("--emit-summary", sim_emit_summary,
                     "Also write replicate-0 z-statistics as a summary CSV");
  simulate->add_option("--threads", sim_threads, "Worker threads over replicates");

  // recommend
  std::string rec_input;
  double rec_threshold = 0.01;
  double rec_lambda = 0.5;
  auto* recommend = app.add_subcommand("recommend", "Pick a method from the data");
  recommend->add_option("--input", rec_input, "Summary CSV input")->required();
  recommend->add_option("--threshold", rec_threshold,
                        "Sparsity threshold on pi01 and pi10");
  recommend->add_option("--lambda", rec_lambda, "Tail threshold for proportion "
                                                "estimation");

  CLI11_PARSE(app, argc, argv);

  try {
    if (test->parsed())
      return cmd_test(test_input, test_output, test_methods, fwer, lambda, gamma,
                      dact_epsilon, fdr, threads);
    if (simulate->parsed())
      return cmd_simulate(sim_config, sim_mode, sim_out, sim_qq, sim_emit_summary,
                          sim_threads);
    if (recommend->parsed()) return cmd_recommend(rec_input, rec_threshold, rec_lambda);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "medtest/mediation_tests.hpp"
#include "medtest/regression.hpp"
#include "medtest/sim_harness.hpp"

namespace medtest::io {

// Thrown for malformed input files or configs; the message lists every
// problem found, not just the first.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Formats a double with 17 significant digits, locale independent.
std::string format_double(double value);

// Splits one CSV line on commas; no quoting support (none of our formats
// need it), fields are trimmed of surrounding whitespace.
std::vector<std::string> split_csv_line(const std::string& line);

enum class InputKind { kSummary, kRaw };

struct ParsedInput {
  InputKind kind = InputKind::kSummary;
  SummaryTable summary;         // populated for both kinds (raw is fitted)
  std::size_t n_dropped = 0;    // raw rows whose fit failed
  bool small_j_warning = false; // fewer than 100 usable tests
};

// Reads either a summary file (header id,z_alpha,z_beta) or a raw data file
// (header y,x,m_1..m_J[,c_1..c_q]); the kind is detected from the header.
ParsedInput read_input(std::istream& in, const std::string& source_name);
ParsedInput read_input_file(const std::string& path);

// Parses key=value scenario config text. Blank lines and lines starting
// with '#' are ignored. Unknown keys are an error; all problems are
// reported together.
ScenarioConfig parse_scenario_config(std::istream& in, const std::string& source_name);
ScenarioConfig parse_scenario_config_file(const std::string& path);

// Writes the per-test p-value table produced by `medtest test`.
// Significance flags use the Bonferroni threshold fwer / J; when an FDR
// level is given, Benjamini-Hochberg flags are appended as well.
void write_pvalue_table(std::ostream& out, const SummaryTable& table,
                        const PValueMatrix& matrix, double fwer,
                        std::optional<double> fdr = std::nullopt);

// Writes a metric report (null ratios or power TPRs) as CSV.
void write_metric_report(std::ostream& out, const MetricReport& report);

// Writes QQ points as CSV with columns expected,observed.
void write_qq(std::ostream& out, const std::vector<QqPoint>& points);

struct Recommendation {
  std::string method;  // "sobelcomp" or "hdmt"
  std::string rationale;
  NullProportions proportions;
};

// Recommends sobelcomp when both one-sided null proportions are below the
// threshold, otherwise hdmt.
Recommendation recommend_method(const NullProportions& props, double threshold);

}  // namespace medtest::io

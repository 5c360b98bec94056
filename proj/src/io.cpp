#include "medtest/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "medtest/null_estimators.hpp"

namespace medtest::io {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& text, double& out) {
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

bool parse_u64(const std::string& text, std::uint64_t& out) {
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

[[noreturn]] void fail(const std::vector<std::string>& errors,
                       const std::string& source_name) {
  std::ostringstream oss;
  oss << source_name << ": ";
  for (std::size_t i = 0; i < errors.size(); ++i)
    oss << (i ? "; " : "") << errors[i];
  throw ParseError(oss.str());
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value,
                                 std::chars_format::general, 17);
  (void)ec;
  return std::string(buf, ptr);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string::npos) {
      fields.push_back(trim(line.substr(start)));
      break;
    }
    fields.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return fields;
}

namespace {

ParsedInput read_summary(std::istream& in, const std::string& source_name) {
  ParsedInput result;
  result.kind = InputKind::kSummary;
  std::string line;
  std::size_t row = 1;
  std::vector<std::string> errors;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != 3) {
      errors.push_back("row " + std::to_string(row) + ": expected 3 columns, got " +
                       std::to_string(fields.size()));
      continue;
    }
    double za = 0.0;
    double zb = 0.0;
    if (!parse_double(fields[1], za))
      errors.push_back("row " + std::to_string(row) + " column z_alpha: not a number");
    else if (!parse_double(fields[2], zb))
      errors.push_back("row " + std::to_string(row) + " column z_beta: not a number");
    else {
      result.summary.ids.push_back(fields[0]);
      result.summary.pairs.push_back({za, zb});
    }
  }
  if (!errors.empty()) fail(errors, source_name);
  if (result.summary.pairs.empty())
    throw ParseError(source_name + ": no data rows");
  result.summary.validate();
  result.small_j_warning = result.summary.pairs.size() < 100;
  return result;
}

ParsedInput read_raw(std::istream& in, const std::vector<std::string>& header,
                     const std::string& source_name) {
  std::size_t n_mediators = 0;
  std::size_t n_covariates = 0;
  std::vector<std::string> errors;
  for (std::size_t i = 2; i < header.size(); ++i) {
    const std::string expected_m = "m_" + std::to_string(n_mediators + 1);
    const std::string expected_c = "c_" + std::to_string(n_covariates + 1);
    if (n_covariates == 0 && header[i] == expected_m)
      ++n_mediators;
    else if (header[i] == expected_c)
      ++n_covariates;
    else
      errors.push_back("header column " + std::to_string(i + 1) + ": expected '" +
                       (n_covariates == 0 ? expected_m + "' or '" : "") + expected_c +
                       "', got '" + header[i] + "'");
  }
  if (n_mediators == 0) errors.push_back("raw input needs at least one mediator column");
  if (!errors.empty()) fail(errors, source_name);

  const std::size_t n_cols = header.size();
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != n_cols) {
      errors.push_back("row " + std::to_string(row) + ": expected " +
                       std::to_string(n_cols) + " columns, got " +
                       std::to_string(fields.size()));
      continue;
    }
    std::vector<double> values(n_cols);
    for (std::size_t c = 0; c < n_cols; ++c)
      if (!parse_double(fields[c], values[c])) {
        errors.push_back("row " + std::to_string(row) + " column " +
                         std::to_string(c + 1) + ": not a number");
        break;
      }
    if (values.size() == n_cols && errors.empty()) rows.push_back(std::move(values));
  }
  if (!errors.empty()) fail(errors, source_name);

  Dataset data;
  data.n = rows.size();
  data.n_mediators = n_mediators;
  data.n_covariates = n_covariates;
  data.outcome.resize(data.n);
  data.exposure.resize(data.n);
  data.mediators.resize(data.n * n_mediators);
  data.covariates.resize(data.n * n_covariates);
  for (std::size_t i = 0; i < data.n; ++i) {
    data.outcome[i] = rows[i][0];
    data.exposure[i] = rows[i][1];
    for (std::size_t j = 0; j < n_mediators; ++j)
      data.mediators[j * data.n + i] = rows[i][2 + j];
    for (std::size_t q = 0; q < n_covariates; ++q)
      data.covariates[q * data.n + i] = rows[i][2 + n_mediators + q];
  }
  data.validate();

  FitResult fits = compute_zpairs(data);
  ParsedInput result;
  result.kind = InputKind::kRaw;
  result.summary = fits.to_summary_table();
  result.n_dropped = fits.fits.size() - result.summary.pairs.size();
  if (result.summary.pairs.empty())
    throw ParseError(source_name + ": every mediator fit failed");
  result.small_j_warning = result.summary.pairs.size() < 100;
  return result;
}

}  // namespace

ParsedInput read_input(std::istream& in, const std::string& source_name) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source_name + ": empty file");
  // Tolerate a UTF-8 byte-order mark.
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  auto header = split_csv_line(line);
  if (header.size() == 3 && header[0] == "id" && header[1] == "z_alpha" &&
      header[2] == "z_beta")
    return read_summary(in, source_name);
  if (header.size() >= 3 && header[0] == "y" && header[1] == "x")
    return read_raw(in, header, source_name);
  throw ParseError(source_name +
                   ": unrecognized header; expected 'id,z_alpha,z_beta' or "
                   "'y,x,m_1,...'");
}

ParsedInput read_input_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open file");
  return read_input(in, path);
}

ScenarioConfig parse_scenario_config(std::istream& in, const std::string& source_name) {
  ScenarioConfig config;
  std::vector<std::string> errors;
  std::map<std::string, bool> seen;
  std::string line;
  std::size_t row = 0;
  bool any_pi = false;
  while (std::getline(in, line)) {
    ++row;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      errors.push_back("line " + std::to_string(row) + ": expected key=value");
      continue;
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (seen[key])
      errors.push_back("line " + std::to_string(row) + ": duplicate key '" + key + "'");
    seen[key] = true;

    auto bad = [&](const std::string& why) {
      errors.push_back("line " + std::to_string(row) + ": " + key + " " + why);
    };
    auto want_double = [&](double& target) {
      if (!parse_double(value, target)) bad("must be a number");
    };
    auto want_size = [&](std::size_t& target) {
      std::uint64_t v = 0;
      if (!parse_u64(value, v))
        bad("must be a nonnegative integer");
      else
        target = static_cast<std::size_t>(v);
    };

    if (key == "n")
      want_size(config.n);
    else if (key == "j")
      want_size(config.n_mediators);
    else if (key == "tau")
      want_double(config.tau);
    else if (key == "r2") {
      double v = 0.0;
      if (!parse_double(value, v))
        bad("must be a number");
      else
        config.r2 = v;
    } else if (key == "pi00") {
      want_double(config.pi00);
      any_pi = true;
    } else if (key == "pi01") {
      want_double(config.pi01);
      any_pi = true;
    } else if (key == "pi10") {
      want_double(config.pi10);
      any_pi = true;
    } else if (key == "pi11") {
      want_double(config.pi11);
      any_pi = true;
    } else if (key == "beta_x")
      want_double(config.beta_x);
    else if (key == "seed") {
      std::uint64_t v = 0;
      if (!parse_u64(value, v))
        bad("must be a nonnegative integer");
      else
        config.seed = v;
    } else if (key == "replicates")
      want_size(config.replicates);
    else if (key == "cutoffs") {
      config.cutoffs.clear();
      for (const auto& field : split_csv_line(value)) {
        double c = 0.0;
        if (!parse_double(field, c)) {
          bad("entries must be numbers");
          break;
        }
        config.cutoffs.push_back(c);
      }
    } else if (key == "lambda")
      want_double(config.methods.lambda);
    else if (key == "gamma")
      want_double(config.methods.gamma);
    else if (key == "dact_epsilon")
      want_double(config.methods.dact_epsilon);
    else
      errors.push_back("line " + std::to_string(row) + ": unknown key '" + key + "'");
  }
  // Unset proportions stay at the all-H00 default; a partial set must
  // still land on the simplex, which validate() checks below.
  (void)any_pi;
  if (!errors.empty()) fail(errors, source_name);
  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    throw ParseError(source_name + ": " + e.what());
  }
  return config;
}

ScenarioConfig parse_scenario_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open file");
  return parse_scenario_config(in, path);
}

namespace {

// Benjamini-Hochberg rejection flags at the given level.
std::vector<char> bh_flags(std::span<const double> pvalues, double level) {
  const std::size_t m = pvalues.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return pvalues[a] < pvalues[b]; });
  std::size_t k = 0;
  for (std::size_t i = 0; i < m; ++i)
    if (pvalues[order[i]] <= level * static_cast<double>(i + 1) / static_cast<double>(m))
      k = i + 1;
  std::vector<char> flags(m, 0);
  for (std::size_t i = 0; i < k; ++i) flags[order[i]] = 1;
  return flags;
}

}  // namespace

void write_pvalue_table(std::ostream& out, const SummaryTable& table,
                        const PValueMatrix& matrix, double fwer,
                        std::optional<double> fdr) {
  static const char* kColumns[kMethodCount] = {
      "p_sobel",     "p_maxp",      "p_jtcomp", "p_hdmt_asym",
      "p_hdmt_adj",  "p_sobelcomp", "p_dact"};
  const double bonferroni = fwer / static_cast<double>(matrix.rows);

  std::vector<int> present;
  for (int m = 0; m < kMethodCount; ++m)
    if (!matrix.columns[m].empty()) present.push_back(m);

  out << "id";
  for (int m : present) out << "," << kColumns[m];
  for (int m : present) out << ",sig_" << (kColumns[m] + 2);
  std::vector<std::vector<char>> fdr_flags;
  if (fdr) {
    for (int m : present) {
      out << ",fdr_" << (kColumns[m] + 2);
      fdr_flags.push_back(bh_flags(matrix.columns[m], *fdr));
    }
  }
  out << "\n";

  for (std::size_t i = 0; i < matrix.rows; ++i) {
    out << (table.ids.empty() ? std::to_string(i) : table.ids[i]);
    for (int m : present) out << "," << format_double(matrix.columns[m][i]);
    for (int m : present)
      out << "," << (matrix.columns[m][i] < bonferroni ? 1 : 0);
    for (std::size_t k = 0; k < fdr_flags.size(); ++k)
      out << "," << static_cast<int>(fdr_flags[k][i]);
    out << "\n";
  }
}

void write_metric_report(std::ostream& out, const MetricReport& report) {
  out << "method,cutoff,"
      << (report.mode == MetricReport::Mode::kNull ? "mean_ratio" : "tpr")
      << ",sd,n_failures\n";
  for (int m = 0; m < kMethodCount; ++m) {
    if (report.cells[m].empty()) continue;
    const char* name = method_name(static_cast<Method>(m));
    for (std::size_t c = 0; c < report.cells[m].size(); ++c) {
      const MetricCell& cell = report.cells[m][c];
      out << name << ",";
      if (report.mode == MetricReport::Mode::kNull)
        out << format_double(report.cutoffs[c]);
      else
        out << "fdr05";
      out << "," << format_double(cell.mean) << "," << format_double(cell.sd) << ","
          << cell.n_failures << "\n";
    }
  }
}

void write_qq(std::ostream& out, const std::vector<QqPoint>& points) {
  out << "expected_neglog10,observed_neglog10\n";
  for (const QqPoint& p : points)
    out << format_double(p.expected_neglog10) << ","
        << format_double(p.observed_neglog10) << "\n";
}

Recommendation recommend_method(const NullProportions& props, double threshold) {
  Recommendation rec;
  rec.proportions = props;
  if (props.pi01 < threshold && props.pi10 < threshold) {
    rec.method = "sobelcomp";
    rec.rationale = "estimated pi01 and pi10 are both below " +
                    format_double(threshold) +
                    "; the sparse composite-null reference is well calibrated and "
                    "most powerful here";
  } else {
    rec.method = "hdmt";
    rec.rationale = "estimated pi01 or pi10 is not close to 0; the "
                    "proportion-weighted mixture test keeps the error rate at the "
                    "nominal level in dense regimes";
  }
  return rec;
}

}  // namespace medtest::io

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "maxt/example_data.hpp"
#include "maxt/simulation.hpp"

namespace maxt::cli {

// Exit codes shared by the command layer and documented in the README.
inline constexpr int kExitOk = 0;
inline constexpr int kExitBadInput = 2;    // malformed scenario file / data schema
inline constexpr int kExitNumerical = 3;   // numerical failure in an analysis
inline constexpr int kExitSmallGroup = 4;  // a group with fewer than 2 rows

struct ScenarioFileError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------
// Formatting
// ---------------------------------------------------------------------

inline std::string format_prob(double p) {
  char buf[32];
  if (p > 0.0 && p <= 1e-3)
    std::snprintf(buf, sizeof(buf), "%.2e", p);
  else
    std::snprintf(buf, sizeof(buf), "%.3f", p);
  return buf;
}

inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

inline std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + tmp + "' for writing");
    out << content;
    if (!out.flush()) throw std::runtime_error("failed writing '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------
// Scenario files (JSON). Field names mirror the power-table headers:
// n1, n2[, n3], ma1..m<d><k>, sa..sd, rho (or rho1..rho3 for J = 3),
// plus optional label/alpha/sims/seed/design per record and a defaults
// block. Unknown keys are rejected.
// ---------------------------------------------------------------------

inline std::vector<Scenario> parse_scenario_file(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& ex) {
    throw ScenarioFileError(std::string("scenario file: invalid JSON: ") + ex.what());
  }
  if (!doc.is_object()) throw ScenarioFileError("scenario file: top level must be an object");
  for (const auto& [key, _] : doc.items())
    if (key != "defaults" && key != "scenarios")
      throw ScenarioFileError("scenario file: unknown key '" + key + "'");

  double def_alpha = 0.05;
  long def_sims = 10000;
  std::uint64_t def_seed = 17051949;
  if (doc.contains("defaults")) {
    const auto& d = doc["defaults"];
    if (!d.is_object()) throw ScenarioFileError("scenario file: defaults must be an object");
    for (const auto& [key, _] : d.items())
      if (key != "alpha" && key != "sims" && key != "seed")
        throw ScenarioFileError("scenario file: unknown defaults key '" + key + "'");
    if (d.contains("alpha")) def_alpha = d["alpha"].get<double>();
    if (d.contains("sims")) def_sims = d["sims"].get<long>();
    if (d.contains("seed")) def_seed = d["seed"].get<std::uint64_t>();
  }
  if (!doc.contains("scenarios") || !doc["scenarios"].is_array() || doc["scenarios"].empty())
    throw ScenarioFileError("scenario file: needs a nonempty 'scenarios' array");

  std::vector<Scenario> out;
  int index = 0;
  for (const auto& rec : doc["scenarios"]) {
    ++index;
    const std::string where = "scenario #" + std::to_string(index);
    if (!rec.is_object()) throw ScenarioFileError(where + ": must be an object");

    auto fail = [&](const std::string& field, const std::string& why) -> ScenarioFileError {
      return ScenarioFileError(where + ": " + field + ": " + why);
    };
    auto number = [&](const std::string& field) {
      if (!rec[field].is_number()) throw fail(field, "must be a number");
      return rec[field].get<double>();
    };

    // group count from n1..n3, endpoint count from sa..sd
    int k = 0;
    while (k < 3 && rec.contains("n" + std::to_string(k + 1))) ++k;
    if (k < 2) throw fail("n1/n2", "scenario needs group sizes n1 and n2");
    int j = 0;
    while (j < 4 && rec.contains(std::string("s") + char('a' + j))) ++j;
    if (j < 1) throw fail("sa", "scenario needs at least one endpoint sd (sa)");

    std::vector<std::string> allowed = {"label", "alpha", "sims", "seed", "design", "rho"};
    for (int g = 1; g <= k; ++g) allowed.push_back("n" + std::to_string(g));
    for (int e = 0; e < j; ++e) {
      allowed.push_back(std::string("s") + char('a' + e));
      for (int g = 1; g <= k; ++g)
        allowed.push_back(std::string("m") + char('a' + e) + std::to_string(g));
    }
    if (j == 3)
      for (int r = 1; r <= 3; ++r) allowed.push_back("rho" + std::to_string(r));
    for (const auto& [key, _] : rec.items())
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
        throw ScenarioFileError(where + ": unknown key '" + key + "'");

    Scenario sc;
    sc.label = rec.value("label", std::string{});
    sc.group_sizes.resize(k);
    for (int g = 0; g < k; ++g) {
      const double n = number("n" + std::to_string(g + 1));
      if (n < 2 || n != std::floor(n))
        throw fail("n" + std::to_string(g + 1), "must be an integer >= 2");
      sc.group_sizes[g] = static_cast<int>(n);
    }
    sc.means.resize(k, j);
    sc.sds.resize(j);
    for (int e = 0; e < j; ++e) {
      const char letter = static_cast<char>('a' + e);
      for (int g = 0; g < k; ++g) {
        const std::string key = std::string("m") + letter + std::to_string(g + 1);
        if (!rec.contains(key)) throw fail(key, "missing group mean");
        sc.means(g, e) = number(key);
      }
      const std::string skey = std::string("s") + letter;
      sc.sds(e) = number(skey);
      if (!(sc.sds(e) > 0.0)) throw fail(skey, "must be > 0");
    }

    try {
      if (rec.contains("rho")) {
        const double rho = number("rho");
        if (!(rho >= -1.0 && rho <= 1.0)) throw fail("rho", "must lie in [-1, 1]");
        sc.rho = CorrelationMatrix::equicorrelated(j, rho);
      } else if (rec.contains("rho1")) {
        if (j != 3) throw fail("rho1", "rho1..rho3 are only valid for 3 endpoints");
        Eigen::MatrixXd m = Eigen::MatrixXd::Identity(3, 3);
        m(0, 1) = m(1, 0) = number("rho1");
        m(0, 2) = m(2, 0) = number("rho2");
        m(1, 2) = m(2, 1) = number("rho3");
        sc.rho = CorrelationMatrix(m);
      } else {
        throw fail("rho", "missing correlation");
      }
    } catch (const ScenarioFileError&) {
      throw;
    } catch (const std::exception& ex) {
      throw fail("rho", ex.what());
    }

    sc.alpha = rec.value("alpha", def_alpha);
    sc.sims = rec.value("sims", def_sims);
    sc.seed = rec.contains("seed") ? rec["seed"].get<std::uint64_t>()
                                   : derive_seed(def_seed, index - 1);
    if (rec.contains("design")) {
      const std::string d = rec["design"].get<std::string>();
      if (d == "two_sample")
        sc.design = Design::two_sample;
      else if (d == "dunnett")
        sc.design = Design::dunnett;
      else
        throw fail("design", "must be 'two_sample' or 'dunnett'");
    } else {
      sc.design = k == 2 ? Design::two_sample : Design::dunnett;
    }
    try {
      sc.validate();
    } catch (const std::exception& ex) {
      throw ScenarioFileError(where + ": " + ex.what());
    }
    out.push_back(std::move(sc));
  }

  for (const auto& sc : out)
    if (sc.n_groups() != out[0].n_groups() || sc.n_endpoints() != out[0].n_endpoints())
      throw ScenarioFileError(
          "scenario file: all scenarios must share one design shape (k groups, J endpoints), "
          "one table per file");
  return out;
}

// ---------------------------------------------------------------------
// Result table: inputs echoed, then IUT, UIT, m*, e*, aiaUIT, RR.
// Per-endpoint columns are e1..eJ in the two-sample design and a1, a2,
// b1, ... in the k-sample design, mirroring the power tables.
// ---------------------------------------------------------------------

inline std::string result_table_csv(const std::vector<TableEntry>& entries) {
  if (entries.empty()) throw std::invalid_argument("result_table_csv: no rows");
  const Scenario& first = entries[0].scenario;
  const int k = first.n_groups();
  const int j = first.n_endpoints();
  const int m = first.n_hypotheses();

  std::ostringstream out;
  out << "label";
  for (int g = 1; g <= k; ++g) out << ",n" << g;
  for (int e = 0; e < j; ++e)
    for (int g = 1; g <= k; ++g) out << ",m" << char('a' + e) << g;
  for (int e = 0; e < j; ++e) out << ",s" << char('a' + e);
  out << ",rho";
  out << ",IUT,UIT";
  for (int i = 1; i <= m; ++i) out << ",m" << i;
  if (k == 2)
    for (int e = 1; e <= j; ++e) out << ",e" << e;
  else
    for (int e = 0; e < j; ++e)
      for (int c = 1; c < k; ++c) out << "," << char('a' + e) << c;
  out << ",aiaUIT,RR\n";

  for (const auto& entry : entries) {
    const Scenario& sc = entry.scenario;
    out << csv_escape(sc.label);
    for (int g = 0; g < k; ++g) out << ',' << sc.group_sizes[g];
    for (int e = 0; e < j; ++e)
      for (int g = 0; g < k; ++g) out << ',' << format_number(sc.means(g, e));
    for (int e = 0; e < j; ++e) out << ',' << format_number(sc.sds(e));
    out << ',' << format_number(sc.rho.dim() > 1 ? sc.rho(0, 1) : 0.0);
    if (!entry.row) {
      out << ',' << csv_escape("error: " + entry.error) << "\n";
      continue;
    }
    const PowerRow& row = *entry.row;
    out << ',' << format_prob(row.iut) << ',' << format_prob(row.uit);
    for (double v : row.m) out << ',' << format_prob(v);
    for (double v : row.e) out << ',' << format_prob(v);
    out << ',' << format_prob(row.aia);
    out << ',';
    if (row.rr) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.3f", *row.rr);
      out << buf;
    }
    out << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------
// Dataset CSV (one group column + numeric endpoint columns).
// ---------------------------------------------------------------------

struct DataFileError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Splits one CSV line, honoring double-quoted cells and keeping a
// trailing empty field.
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
    } else {
      cell += c;
    }
  }
  cells.push_back(std::move(cell));
  return cells;
}

inline Dataset read_dataset_csv(const std::string& text, const std::string& group_col,
                                const std::optional<std::string>& control) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DataFileError("data file: empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_csv_line(line);
  int group_idx = -1;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c] == group_col) group_idx = static_cast<int>(c);
  if (group_idx < 0)
    throw DataFileError("data file: group column '" + group_col + "' not found");
  std::vector<std::string> endpoint_names;
  std::vector<int> endpoint_cols;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (static_cast<int>(c) != group_idx) {
      endpoint_names.push_back(header[c]);
      endpoint_cols.push_back(static_cast<int>(c));
    }
  if (endpoint_names.empty())
    throw DataFileError("data file: no endpoint columns besides '" + group_col + "'");

  std::vector<std::string> groups;
  std::vector<std::vector<double>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw DataFileError("data file: row " + std::to_string(line_no) + " has " +
                          std::to_string(cells.size()) + " cells, expected " +
                          std::to_string(header.size()));
    groups.push_back(cells[group_idx]);
    std::vector<double> vals;
    for (std::size_t e = 0; e < endpoint_cols.size(); ++e) {
      const std::string& cell = cells[endpoint_cols[e]];
      try {
        std::size_t pos = 0;
        const double v = std::stod(cell, &pos);
        if (pos != cell.size()) throw std::invalid_argument("trailing junk");
        vals.push_back(v);
      } catch (const std::exception&) {
        throw DataFileError("data file: row " + std::to_string(line_no) + ", column '" +
                            endpoint_names[e] + "': not a number: '" + cell + "'");
      }
    }
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw DataFileError("data file: no data rows");
  Eigen::MatrixXd responses(rows.size(), endpoint_names.size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < endpoint_names.size(); ++c) responses(r, c) = rows[r][c];
  return Dataset::assemble(groups, std::move(responses), endpoint_names, control);
}

inline std::string dataset_csv(const Dataset& data, const std::string& group_col) {
  std::ostringstream out;
  out << group_col;
  for (const auto& e : data.endpoint_names) out << ',' << e;
  out << "\n";
  for (int i = 0; i < data.n_obs(); ++i) {
    out << csv_escape(data.group_labels[data.group[i]]);
    for (int e = 0; e < data.n_endpoints(); ++e) out << ',' << format_full(data.responses(i, e));
    out << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------
// Analysis report (shared by the embedded example and user data).
// ---------------------------------------------------------------------

struct AnalysisReport {
  JointInference ji;
  Eigen::VectorXd marginal;
  Eigen::VectorXd adjusted;
  TestOutcome outcome;
  SimultaneousCI ci;
};

inline AnalysisReport analyze_dataset(const Dataset& data, double alpha,
                                      Alternative alt, CovarianceKind kind,
                                      const MvtOptions& opts = {}) {
  std::vector<OneWayFit> fits;
  for (int e = 0; e < data.n_endpoints(); ++e) fits.push_back(fit_oneway(data, e));
  const ContrastSet contrasts = dunnett_contrasts(data.n_groups(), data.group_labels);
  AnalysisReport rep{joint_inference(fits, contrasts, kind), {}, {}, {}, {}};
  // One part per hypothesis: the marginal column reports the plain
  // univariate p-values, as in the worked example.
  std::vector<std::vector<int>> singletons;
  for (int i = 0; i < rep.ji.size(); ++i) singletons.push_back({i});
  rep.marginal = marginal_p(rep.ji, singletons, alt, opts);
  rep.adjusted = maxt_adjusted_p(rep.ji, alt, opts);
  rep.outcome = decide(rep.marginal, rep.adjusted, alpha, alt);
  rep.ci = simultaneous_ci(rep.ji, 1.0 - alpha, alt, opts);
  return rep;
}

inline std::string report_csv(const AnalysisReport& rep) {
  std::ostringstream out;
  out << "hypothesis,estimate,std_error,t_stat,marginal_p,adjusted_p\n";
  for (int i = 0; i < rep.ji.size(); ++i) {
    char num[128];
    std::snprintf(num, sizeof(num), "%.6g,%.6g,%.6g", rep.ji.estimates(i),
                  rep.ji.std_errors(i), rep.ji.t_stats(i));
    out << csv_escape(rep.ji.hypothesis_names[i]) << ',' << num << ','
        << format_prob(rep.marginal(i))
        << ',' << format_prob(rep.adjusted(i)) << "\n";
  }
  return out.str();
}

inline std::string ci_csv(const AnalysisReport& rep) {
  const bool two_sided = rep.outcome.alternative == Alternative::two_sided;
  const bool less = rep.outcome.alternative == Alternative::less;
  std::ostringstream out;
  out << "hypothesis,estimate";
  if (!less) out << ",lower";
  if (less || two_sided) out << ",upper";
  out << "\n";
  for (int i = 0; i < rep.ji.size(); ++i) {
    char num[64];
    std::snprintf(num, sizeof(num), "%.6g", rep.ji.estimates(i));
    out << csv_escape(rep.ji.hypothesis_names[i]) << ',' << num;
    if (!less) {
      std::snprintf(num, sizeof(num), "%.6g", rep.ci.lower(i));
      out << ',' << num;
    }
    if (less || two_sided) {
      std::snprintf(num, sizeof(num), "%.6g", rep.ci.upper(i));
      out << ',' << num;
    }
    out << "\n";
  }
  return out.str();
}

inline std::string report_summary(const AnalysisReport& rep) {
  std::ostringstream out;
  out << "hypotheses: " << rep.ji.size() << ", df = " << rep.ji.df
      << ", alpha = " << rep.outcome.alpha << "\n";
  out << "p_iut_max = " << format_prob(rep.outcome.p_iut_max)
      << "  (global IUT " << (rep.outcome.iut_reject ? "rejected" : "not rejected") << ")\n";
  out << "p_aia_max = " << format_prob(rep.outcome.p_aia_max)
      << "  (global aiaUIT " << (rep.outcome.aia_reject ? "rejected" : "not rejected") << ")\n";
  out << "UIT (any adjusted < alpha): "
      << (rep.outcome.uit_reject ? "rejected" : "not rejected") << "\n";
  for (const auto& note : rep.ji.notes) out << "note: " << note << "\n";
  return out.str();
}

}  // namespace maxt::cli

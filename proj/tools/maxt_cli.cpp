#include <chrono>
#include <iostream>

#include <CLI11.hpp>

#include "maxt/cli.hpp"

namespace {

using namespace maxt;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw cli::ScenarioFileError("cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Alternative parse_alternative(const std::string& s) {
  if (s == "greater") return Alternative::greater;
  if (s == "less") return Alternative::less;
  if (s == "two-sided" || s == "two_sided") return Alternative::two_sided;
  throw CLI::ValidationError("--alternative must be greater|less|two-sided");
}

int cmd_simulate(const std::string& scenarios_path, std::optional<long> sims,
                 std::optional<std::uint64_t> seed, std::optional<double> alpha,
                 int threads, const std::string& out_path) {
  std::vector<Scenario> scenarios;
  try {
    scenarios = cli::parse_scenario_file(read_file(scenarios_path));
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return cli::kExitBadInput;
  }
  for (auto& sc : scenarios) {
    if (sims) sc.sims = *sims;
    if (seed) sc.seed = *seed;
    if (alpha) sc.alpha = *alpha;
    try {
      sc.validate();
    } catch (const std::exception& ex) {
      std::cerr << "error: " << ex.what() << "\n";
      return cli::kExitBadInput;
    }
  }
  SimulationOptions opts;
  opts.threads = threads;
  const auto t0 = std::chrono::steady_clock::now();
  bool numerical_failure = false;
  const auto entries = run_table(scenarios, opts, [&](int i, const TableEntry& e) {
    const double elapsed = std::chrono::duration<double>(
                               std::chrono::steady_clock::now() - t0)
                               .count();
    std::cerr << "row " << (i + 1) << "/" << scenarios.size();
    if (!e.scenario.label.empty()) std::cerr << " [" << e.scenario.label << "]";
    if (e.row) {
      std::cerr << " done";
      if (e.row->degenerate_retries > 0)
        std::cerr << " (" << e.row->degenerate_retries << " degenerate replicates resampled)";
    } else {
      std::cerr << " FAILED: " << e.error;
      numerical_failure = true;
    }
    std::cerr << " (" << static_cast<long>(elapsed) << "s elapsed)\n";
  });
  try {
    cli::write_file_atomic(out_path, cli::result_table_csv(entries));
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return cli::kExitNumerical;
  }
  if (numerical_failure) {
    for (const auto& e : entries)
      if (!e.row) std::cerr << "error: row '" << e.scenario.label << "': " << e.error << "\n";
    return cli::kExitNumerical;
  }
  return cli::kExitOk;
}

int run_analysis(const Dataset& data, double alpha, Alternative alt, CovarianceKind kind,
                 const std::string& out_path, const std::string& ci_path) {
  cli::AnalysisReport rep;
  try {
    rep = cli::analyze_dataset(data, alpha, alt, kind);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return cli::kExitNumerical;
  }
  try {
    cli::write_file_atomic(out_path, cli::report_csv(rep));
    if (!ci_path.empty()) cli::write_file_atomic(ci_path, cli::ci_csv(rep));
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return cli::kExitNumerical;
  }
  std::cout << cli::report_summary(rep);
  return cli::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simultaneous inference for multiple correlated endpoints: "
               "IUT vs. aiaUIT power simulation and max-T analysis"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Run a Monte Carlo power table from a scenario file");
  std::string scenarios_path, sim_out;
  long sims_override = -1;
  std::int64_t seed_override = -1;
  double alpha_override = -1.0;
  int threads = 1;
  sim->add_option("--scenarios", scenarios_path, "Scenario JSON file")->required();
  sim->add_option("--sims", sims_override, "Override replication count");
  sim->add_option("--seed", seed_override, "Override base seed");
  sim->add_option("--alpha", alpha_override, "Override significance level");
  sim->add_option("--threads", threads, "Worker threads (results are identical for any count)");
  sim->add_option("--out", sim_out, "Output CSV path")->required();

  // example
  auto* ex = app.add_subcommand("example", "Analyze the embedded dose-finding example");
  double ex_alpha = 0.05;
  std::string ex_out, ex_ci_out;
  ex->add_option("--alpha", ex_alpha, "Significance level");
  ex->add_option("--out", ex_out, "Report CSV path")->required();
  ex->add_option("--ci-out", ex_ci_out, "Simultaneous lower-limit CSV path")->required();

  // analyze
  auto* an = app.add_subcommand("analyze", "Analyze a CSV dataset (group column + endpoints)");
  std::string an_data, an_group, an_control, an_alt = "greater", an_cov = "sandwich", an_out;
  std::string an_ci_out;
  double an_alpha = 0.05;
  an->add_option("--data", an_data, "Input CSV")->required();
  an->add_option("--group-col", an_group, "Name of the group column")->required();
  an->add_option("--control", an_control, "Control group label (default: first in sorted order)");
  an->add_option("--alpha", an_alpha, "Significance level");
  an->add_option("--alternative", an_alt, "greater|less|two-sided");
  an->add_option("--cov", an_cov, "model|sandwich covariance");
  an->add_option("--out", an_out, "Report CSV path")->required();
  an->add_option("--ci-out", an_ci_out, "Optional simultaneous-limit CSV path");

  // patterns
  auto* pat = app.add_subcommand("patterns", "Enumerate the alternative patterns for J hypotheses");
  int pat_j = 0;
  pat->add_option("--j", pat_j, "Number of elementary hypotheses")->required();

  CLI11_PARSE(app, argc, argv);

  using namespace maxt;

  if (sim->parsed()) {
    return cmd_simulate(
        scenarios_path, sims_override >= 0 ? std::optional<long>(sims_override) : std::nullopt,
        seed_override >= 0 ? std::optional<std::uint64_t>(seed_override) : std::nullopt,
        alpha_override >= 0 ? std::optional<double>(alpha_override) : std::nullopt, threads,
        sim_out);
  }

  if (ex->parsed()) {
    if (!(ex_alpha > 0.0 && ex_alpha < 1.0)) {
      std::cerr << "error: alpha must be in (0, 1)\n";
      return cli::kExitBadInput;
    }
    return run_analysis(dose_finding_data(), ex_alpha, Alternative::greater,
                        CovarianceKind::sandwich, ex_out, ex_ci_out);
  }

  if (an->parsed()) {
    if (!(an_alpha > 0.0 && an_alpha < 1.0)) {
      std::cerr << "error: alpha must be in (0, 1)\n";
      return cli::kExitBadInput;
    }
    Alternative alt;
    CovarianceKind kind;
    try {
      alt = parse_alternative(an_alt);
      if (an_cov == "model")
        kind = CovarianceKind::model_based;
      else if (an_cov == "sandwich")
        kind = CovarianceKind::sandwich;
      else
        throw CLI::ValidationError("--cov must be model|sandwich");
    } catch (const std::exception& ex2) {
      std::cerr << "error: " << ex2.what() << "\n";
      return cli::kExitBadInput;
    }
    Dataset data;
    try {
      data = cli::read_dataset_csv(
          read_file(an_data), an_group,
          an_control.empty() ? std::nullopt : std::optional<std::string>(an_control));
    } catch (const DegenerateGroupError& ex2) {
      std::cerr << "error: " << ex2.what() << "\n";
      return cli::kExitSmallGroup;
    } catch (const std::exception& ex2) {
      std::cerr << "error: " << ex2.what() << "\n";
      return cli::kExitBadInput;
    }
    return run_analysis(data, an_alpha, alt, kind, an_out, an_ci_out);
  }

  if (pat->parsed()) {
    if (pat_j < 1 || pat_j > 20) {
      std::cerr << "error: --j must be between 1 and 20\n";
      return cli::kExitBadInput;
    }
    for (std::uint32_t mask : enumerate_alternative_patterns(pat_j)) {
      std::cout << '[';
      for (int b = 0; b < pat_j; ++b) {
        if (b) std::cout << ", ";
        std::cout << ((mask >> b) & 1u ? "H_A" : "H_0") << (b + 1);
      }
      std::cout << "]\n";
    }
    return cli::kExitOk;
  }

  return cli::kExitOk;
}

#pragma once

#include <atomic>
#include <functional>
#include <optional>
#include <thread>

#include "maxt/inference.hpp"
#include "maxt/sampling.hpp"

namespace maxt {

enum class Design { two_sample, dunnett };

// One row of a power table: k-sample design, per-group per-endpoint
// means, per-endpoint SDs and the endpoint correlation.
struct Scenario {
  std::string label;
  std::vector<int> group_sizes;       // k
  Eigen::MatrixXd means;              // k x J
  Eigen::VectorXd sds;                // J
  CorrelationMatrix rho = CorrelationMatrix::identity(1);
  double alpha = 0.05;
  long sims = 10000;
  std::uint64_t seed = 0;
  Design design = Design::two_sample;

  int n_groups() const { return static_cast<int>(group_sizes.size()); }
  int n_endpoints() const { return static_cast<int>(sds.size()); }
  int n_hypotheses() const { return (n_groups() - 1) * n_endpoints(); }

  void validate() const {
    const int k = n_groups();
    const int j = n_endpoints();
    if (k < 2) throw std::invalid_argument("scenario: need at least 2 groups (n1, n2)");
    for (int g = 0; g < k; ++g)
      if (group_sizes[g] < 2)
        throw std::invalid_argument("scenario: group size n" + std::to_string(g + 1) +
                                    " must be >= 2");
    if (j < 1) throw std::invalid_argument("scenario: need at least one endpoint");
    if (means.rows() != k || means.cols() != j)
      throw std::invalid_argument("scenario: means must be a k x J matrix");
    for (int e = 0; e < j; ++e)
      if (!(sds(e) > 0.0))
        throw std::invalid_argument("scenario: sd s" + std::string(1, char('a' + e)) +
                                    " must be > 0");
    if (rho.dim() != j)
      throw std::invalid_argument("scenario: rho dimension must match the endpoint count");
    if (!(alpha > 0.0 && alpha < 1.0))
      throw std::invalid_argument("scenario: alpha must be in (0, 1)");
    if (sims < 1) throw std::invalid_argument("scenario: sims must be >= 1");
    if (design == Design::two_sample && k != 2)
      throw std::invalid_argument("scenario: two_sample design requires exactly 2 groups");
    if (design == Design::dunnett && k < 3)
      throw std::invalid_argument("scenario: dunnett design requires at least 3 groups");
  }
};

// Estimated rejection rates of one scenario. `m` holds the joint
// max-T-adjusted marginal powers, `e` the per-endpoint elementary ones.
struct PowerRow {
  double iut = 0.0;
  double uit = 0.0;
  std::vector<double> m;
  std::vector<double> e;
  double aia = 0.0;
  std::optional<double> rr;  // aia / iut, absent when iut is 0
  long degenerate_retries = 0;
  std::vector<std::string> hypothesis_names;
};

struct SimulationOptions {
  int threads = 1;
  // Appendix-style per-replicate integration accuracy (the R tables were
  // produced at mvtnorm's 1e-3 default).
  MvtOptions mvt{1e-3, 20170519, 10, 400'000, true};
};

struct ReplicateRecord {
  Eigen::VectorXd adjusted_p;  // joint max-T over all M hypotheses
  Eigen::VectorXd endpoint_p;  // raw / within-endpoint-adjusted
  int retries = 0;
};

// One simulated replicate: generate correlated endpoint data per group,
// fit one model per endpoint, and compute the joint and per-endpoint
// p-value records.
inline ReplicateRecord run_replicate(const Scenario& sc, std::uint64_t rep_seed,
                                     const MvtOptions& base_opts = SimulationOptions{}.mvt) {
  sc.validate();
  const int k = sc.n_groups();
  const int j = sc.n_endpoints();
  RandomStream rng(derive_seed(rep_seed, 1));
  MvtOptions opts = base_opts;
  opts.seed = derive_seed(rep_seed, 2);

  std::vector<std::string> labels;
  labels.reserve(k);
  labels.push_back("C");
  for (int g = 1; g < k; ++g) labels.push_back("D" + std::to_string(g));
  std::vector<std::string> endpoints;
  for (int e = 0; e < j; ++e) endpoints.push_back("Y" + std::to_string(e + 1));

  const long n_total = [&] {
    long n = 0;
    for (int g = 0; g < k; ++g) n += sc.group_sizes[g];
    return n;
  }();

  ReplicateRecord rec;
  for (int attempt = 0;; ++attempt) {
    Eigen::MatrixXd responses(n_total, j);
    std::vector<std::string> obs_labels;
    obs_labels.reserve(n_total);
    long row = 0;
    for (int g = 0; g < k; ++g) {
      const Eigen::MatrixXd block =
          mvn_sample(sc.group_sizes[g], sc.means.row(g), sc.sds, sc.rho, rng);
      responses.middleRows(row, sc.group_sizes[g]) = block;
      for (int i = 0; i < sc.group_sizes[g]; ++i) obs_labels.push_back(labels[g]);
      row += sc.group_sizes[g];
    }
    try {
      const Dataset data = Dataset::assemble(obs_labels, std::move(responses),
                                             endpoints, labels[0]);
      std::vector<OneWayFit> fits;
      fits.reserve(j);
      for (int e = 0; e < j; ++e) fits.push_back(fit_oneway(data, e));
      const ContrastSet contrasts = dunnett_contrasts(k, data.group_labels);
      const JointInference ji =
          joint_inference(fits, contrasts, CovarianceKind::model_based);
      rec.adjusted_p = maxt_adjusted_p(ji, Alternative::greater, opts);
      rec.endpoint_p =
          marginal_p(ji, endpoint_partition(ji), Alternative::greater, opts);
      rec.retries = attempt;
      return rec;
    } catch (const SingularDesignError&) {
      if (attempt >= 10) throw;
    }
  }
}

// Empirical rejection rates over sc.sims independent replicates.
// Replicate seeds are split from the scenario seed by counter, and the
// tallies are integer counts, so the result is identical for any number
// of worker threads.
inline PowerRow simulate_power(const Scenario& sc,
                               const SimulationOptions& options = {}) {
  sc.validate();
  const int big_m = sc.n_hypotheses();
  const long sims = sc.sims;

  struct Tally {
    long iut = 0, uit = 0, aia = 0, retries = 0;
    std::vector<long> m, e;
  };

  const int threads = std::max(1, options.threads);
  std::vector<Tally> tallies(threads);
  for (auto& t : tallies) {
    t.m.assign(big_m, 0);
    t.e.assign(big_m, 0);
  }
  std::atomic<long> next{0};
  std::atomic<bool> failed{false};
  std::string error_message;
  std::mutex error_mu;

  auto worker = [&](int tid) {
    Tally& tally = tallies[tid];
    for (;;) {
      const long rep = next.fetch_add(1);
      if (rep >= sims || failed.load(std::memory_order_relaxed)) break;
      try {
        const ReplicateRecord rec =
            run_replicate(sc, derive_seed(sc.seed, static_cast<std::uint64_t>(rep)),
                          options.mvt);
        bool all_e = true, all_adj = true, any_adj = false;
        for (int i = 0; i < big_m; ++i) {
          const bool adj_rej = rec.adjusted_p(i) < sc.alpha;
          const bool e_rej = rec.endpoint_p(i) < sc.alpha;
          tally.m[i] += adj_rej;
          tally.e[i] += e_rej;
          all_adj &= adj_rej;
          any_adj |= adj_rej;
          all_e &= e_rej;
        }
        tally.iut += all_e;
        tally.uit += any_adj;
        tally.aia += all_adj;
        tally.retries += rec.retries;
      } catch (const std::exception& ex) {
        std::lock_guard<std::mutex> lock(error_mu);
        error_message = ex.what();
        failed.store(true);
        break;
      }
    }
  };

  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker, t);
    for (auto& t : pool) t.join();
  }
  if (failed.load()) throw std::runtime_error("simulate_power: replicate failed: " + error_message);

  Tally total;
  total.m.assign(big_m, 0);
  total.e.assign(big_m, 0);
  for (const auto& t : tallies) {
    total.iut += t.iut;
    total.uit += t.uit;
    total.aia += t.aia;
    total.retries += t.retries;
    for (int i = 0; i < big_m; ++i) {
      total.m[i] += t.m[i];
      total.e[i] += t.e[i];
    }
  }

  PowerRow row;
  row.iut = static_cast<double>(total.iut) / sims;
  row.uit = static_cast<double>(total.uit) / sims;
  row.aia = static_cast<double>(total.aia) / sims;
  row.m.resize(big_m);
  row.e.resize(big_m);
  for (int i = 0; i < big_m; ++i) {
    row.m[i] = static_cast<double>(total.m[i]) / sims;
    row.e[i] = static_cast<double>(total.e[i]) / sims;
  }
  if (total.iut > 0)
    row.rr = static_cast<double>(total.aia) / static_cast<double>(total.iut);
  row.degenerate_retries = total.retries;

  std::vector<std::string> labels{"C"};
  for (int g = 1; g < sc.n_groups(); ++g) labels.push_back("D" + std::to_string(g));
  for (int e = 0; e < sc.n_endpoints(); ++e)
    for (int c = 1; c < sc.n_groups(); ++c)
      row.hypothesis_names.push_back("Y" + std::to_string(e + 1) + ", C vs " + labels[c]);
  return row;
}

struct TableEntry {
  Scenario scenario;
  std::optional<PowerRow> row;
  std::string error;
};

// Runs every scenario; a failing row is reported in its entry while the
// remaining rows still compute.
inline std::vector<TableEntry> run_table(
    const std::vector<Scenario>& scenarios, const SimulationOptions& options = {},
    const std::function<void(int, const TableEntry&)>& progress = {}) {
  if (scenarios.empty()) throw std::invalid_argument("run_table: scenario list is empty");
  std::vector<TableEntry> out;
  out.reserve(scenarios.size());
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    TableEntry entry{scenarios[i], std::nullopt, {}};
    try {
      entry.row = simulate_power(scenarios[i], options);
    } catch (const std::exception& ex) {
      entry.error = ex.what();
    }
    if (progress) progress(static_cast<int>(i), entry);
    out.push_back(std::move(entry));
  }
  return out;
}

}  // namespace maxt

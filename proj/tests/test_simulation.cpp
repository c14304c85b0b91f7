#include <catch2/catch_amalgamated.hpp>

#include "maxt/simulation.hpp"
#include "oracles.hpp"

using namespace maxt;

namespace {

Scenario table1_row(double ma2, double mb2, double rho) {
  Scenario sc;
  sc.group_sizes = {20, 20};
  sc.means.resize(2, 2);
  sc.means << 1.0, 10.0, ma2, mb2;
  sc.sds.resize(2);
  sc.sds << 1.0, 11.0;
  sc.rho = CorrelationMatrix::equicorrelated(2, rho);
  sc.alpha = 0.05;
  sc.sims = 10000;
  sc.seed = 20250810;
  sc.design = Design::two_sample;
  return sc;
}

}  // namespace

TEST_CASE("scenario validation names the offending field") {
  Scenario sc = table1_row(1.0, 10.0, 0.9);
  sc.group_sizes = {20};
  REQUIRE_THROWS_AS(sc.validate(), std::invalid_argument);
  sc = table1_row(1.0, 10.0, 0.9);
  sc.sims = 0;
  REQUIRE_THROWS_WITH(sc.validate(), Catch::Matchers::ContainsSubstring("sims"));
  sc = table1_row(1.0, 10.0, 0.9);
  sc.alpha = 1.5;
  REQUIRE_THROWS_WITH(sc.validate(), Catch::Matchers::ContainsSubstring("alpha"));
  sc = table1_row(1.0, 10.0, 0.9);
  sc.sds(0) = 0.0;
  REQUIRE_THROWS_WITH(sc.validate(), Catch::Matchers::ContainsSubstring("sa"));
  sc = table1_row(1.0, 10.0, 0.9);
  sc.design = Design::dunnett;
  REQUIRE_THROWS_WITH(sc.validate(), Catch::Matchers::ContainsSubstring("dunnett"));
}

TEST_CASE("run_replicate: singleton family has adjusted == raw") {
  Scenario sc = table1_row(1.0, 10.0, 0.0);
  sc.means = Eigen::MatrixXd::Zero(2, 1);
  sc.sds = Eigen::VectorXd::Ones(1);
  sc.rho = CorrelationMatrix::identity(1);
  for (std::uint64_t rep = 0; rep < 20; ++rep) {
    const ReplicateRecord rec = run_replicate(sc, derive_seed(1, rep));
    REQUIRE(rec.adjusted_p.size() == 1);
    REQUIRE(rec.adjusted_p(0) == Catch::Approx(rec.endpoint_p(0)).margin(1e-12));
  }
}

TEST_CASE("run_replicate: records dominate the endpoint p-values (two-sample)") {
  const Scenario sc = table1_row(1.3, 18.0, 0.7);
  for (std::uint64_t rep = 0; rep < 50; ++rep) {
    const ReplicateRecord rec = run_replicate(sc, derive_seed(99, rep));
    REQUIRE(rec.adjusted_p.size() == 2);
    for (int i = 0; i < 2; ++i) {
      REQUIRE(rec.adjusted_p(i) >= rec.endpoint_p(i));  // joint max-T >= raw
      REQUIRE(rec.adjusted_p(i) >= 0.0);
      REQUIRE(rec.adjusted_p(i) <= 1.0);
    }
  }
}

TEST_CASE("adjusted p at the null center: P(max <= 0) = 0.25 analogue") {
  // With two independent statistics at t = (0, 0) the single-step
  // adjusted p is 1 - P(T1 <= 0, T2 <= 0) = 0.75.
  JointInference ji{Eigen::VectorXd::Zero(2),
                    Eigen::VectorXd::Ones(2),
                    Eigen::VectorXd::Zero(2),
                    kInfiniteDf,
                    CorrelationMatrix::identity(2),
                    {"a", "b"},
                    CovarianceKind::model_based,
                    {0, 1},
                    {}};
  const Eigen::VectorXd adj = maxt_adjusted_p(ji, Alternative::greater);
  REQUIRE(std::fabs(adj(0) - 0.75) < 1e-3);
}

TEST_CASE("raw p-values are uniform under the null") {
  Scenario sc = table1_row(1.0, 10.0, 0.0);
  sc.means = Eigen::MatrixXd::Constant(2, 1, 1.0);
  sc.sds = Eigen::VectorXd::Ones(1);
  sc.rho = CorrelationMatrix::identity(1);
  std::vector<double> pvals;
  const int n = 10000;
  for (int rep = 0; rep < n; ++rep)
    pvals.push_back(run_replicate(sc, derive_seed(31337, rep)).endpoint_p(0));
  const double d = oracle::ks_uniform(pvals);
  REQUIRE(d * std::sqrt(static_cast<double>(n)) < 1.628);  // 1% critical value
  // under H0 with one endpoint, the elementary rejection rate sits at alpha
  long rejections = 0;
  for (double p : pvals) rejections += p < 0.05;
  const double e1 = static_cast<double>(rejections) / n;
  REQUIRE(std::fabs(e1 - 0.05) < 3.0 * std::sqrt(0.05 * 0.95 / n));
}

TEST_CASE("Table 1 H0 row within Monte Carlo tolerance") {
  const Scenario sc = table1_row(1.0, 10.0, 0.9);  // all means equal across groups
  const PowerRow row = simulate_power(sc);
  REQUIRE(std::fabs(row.iut - 0.031) < 0.015);
  REQUIRE(std::fabs(row.aia - 0.028) < 0.015);
  REQUIRE(row.rr.has_value());
  REQUIRE(*row.rr == Catch::Approx(row.aia / row.iut));
  REQUIRE(row.hypothesis_names.size() == 2);
}

TEST_CASE("Table 1 effect row ma2=1.7 within Monte Carlo tolerance") {
  const Scenario sc = table1_row(1.7, 18.0, 0.9);
  const PowerRow row = simulate_power(sc);
  REQUIRE(std::fabs(row.iut - 0.654) < 0.02);
  REQUIRE(std::fabs(row.uit - 0.731) < 0.02);
  REQUIRE(std::fabs(row.aia - 0.599) < 0.02);
  REQUIRE(row.rr.has_value());
  REQUIRE(std::fabs(*row.rr - 0.916) < 0.03);
  // counting inclusions
  for (std::size_t i = 0; i < row.m.size(); ++i) {
    REQUIRE(row.aia <= row.m[i] + 1e-12);
    REQUIRE(row.m[i] <= row.uit + 1e-12);
  }
  REQUIRE(row.aia <= row.uit);
  REQUIRE(*row.rr <= 1.0);  // per-replicate aia => iut in the two-sample design
}

TEST_CASE("an infinite effect gives power one at any sims") {
  Scenario sc = table1_row(1.0, 10.0, 0.5);
  sc.means << 1.0, 10.0, 1.0 + 100.0 * 1.0, 10.0 + 100.0 * 11.0;  // +100 sigma shifts
  sc.sims = 40;
  const PowerRow row = simulate_power(sc);
  REQUIRE(row.iut == 1.0);
  REQUIRE(row.uit == 1.0);
  REQUIRE(row.aia == 1.0);
  for (double v : row.m) REQUIRE(v == 1.0);
  for (double v : row.e) REQUIRE(v == 1.0);
  REQUIRE(*row.rr == 1.0);
}

TEST_CASE("simulate_power is deterministic for any worker count") {
  Scenario sc = table1_row(1.5, 18.0, 0.7);
  sc.sims = 400;
  SimulationOptions one, eight;
  one.threads = 1;
  eight.threads = 8;
  const PowerRow a = simulate_power(sc, one);
  const PowerRow b = simulate_power(sc, eight);
  REQUIRE(a.iut == b.iut);
  REQUIRE(a.uit == b.uit);
  REQUIRE(a.aia == b.aia);
  REQUIRE(a.m == b.m);
  REQUIRE(a.e == b.e);
  REQUIRE(a.rr.value_or(-1) == b.rr.value_or(-1));
}

TEST_CASE("dunnett design: six hypotheses, within-endpoint adjusted elementary p") {
  Scenario sc;
  sc.group_sizes = {10, 10, 10};
  sc.means.resize(3, 3);
  sc.means << 1.0, 2.0, 10.0, 1.0, 2.0, 10.0, 1.0, 2.0, 10.0;
  sc.sds.resize(3);
  sc.sds << 1.0, 4.0, 11.0;
  sc.rho = CorrelationMatrix::equicorrelated(3, 0.9);
  sc.sims = 60;
  sc.seed = 7;
  sc.design = Design::dunnett;
  sc.validate();
  const ReplicateRecord rec = run_replicate(sc, derive_seed(sc.seed, 0));
  REQUIRE(rec.adjusted_p.size() == 6);
  REQUIRE(rec.endpoint_p.size() == 6);
  // within-endpoint adjusted p >= raw univariate p would need the raw; at
  // least the joint adjustment can never undercut the within-endpoint one
  // by more than integration noise
  for (int i = 0; i < 6; ++i)
    REQUIRE(rec.adjusted_p(i) >= rec.endpoint_p(i) - 2e-3);
  const PowerRow row = simulate_power(sc);
  REQUIRE(row.m.size() == 6);
  REQUIRE(row.hypothesis_names[0] == "Y1, C vs D1");
  REQUIRE(row.hypothesis_names[5] == "Y3, C vs D2");
  for (std::size_t i = 0; i < row.m.size(); ++i) {
    REQUIRE(row.aia <= row.m[i] + 1e-12);
    REQUIRE(row.m[i] <= row.uit + 1e-12);
  }
}

TEST_CASE("rr is absent when the IUT never rejects") {
  Scenario sc = table1_row(1.0, 10.0, 0.09);
  sc.means << 1.0, 10.0, 1.0 - 100.0, 10.0 - 1100.0;  // strong negative effects
  sc.sims = 30;
  const PowerRow row = simulate_power(sc);
  REQUIRE(row.iut == 0.0);
  REQUIRE_FALSE(row.rr.has_value());
}

TEST_CASE("run_table composes and reports per-row errors") {
  REQUIRE_THROWS_AS(run_table({}), std::invalid_argument);
  Scenario sc = table1_row(1.0, 10.0, 0.9);
  sc.sims = 200;
  const auto entries = run_table({sc});
  REQUIRE(entries.size() == 1);
  REQUIRE(entries[0].row.has_value());
  const PowerRow direct = simulate_power(sc);
  REQUIRE(entries[0].row->iut == direct.iut);
  REQUIRE(entries[0].row->aia == direct.aia);
}

#include <catch2/catch_amalgamated.hpp>

#include "maxt/example_data.hpp"
#include "maxt/inference.hpp"

using namespace maxt;

namespace {

// Synthetic JointInference with the given statistics and correlation.
JointInference make_ji(const Eigen::VectorXd& t, const CorrelationMatrix& corr, double df) {
  JointInference ji{t,
                    Eigen::VectorXd::Ones(t.size()),
                    t,
                    df,
                    corr,
                    {},
                    CovarianceKind::model_based,
                    {},
                    {}};
  for (int i = 0; i < t.size(); ++i) {
    ji.hypothesis_names.push_back("H" + std::to_string(i + 1));
    ji.endpoint_index.push_back(i);
  }
  return ji;
}

JointInference example_ji(CovarianceKind kind = CovarianceKind::sandwich) {
  const Dataset& data = dose_finding_data();
  std::vector<OneWayFit> fits;
  for (int e = 0; e < data.n_endpoints(); ++e) fits.push_back(fit_oneway(data, e));
  return joint_inference(fits, dunnett_contrasts(data.n_groups(), data.group_labels), kind);
}

std::vector<std::vector<int>> singletons(int m) {
  std::vector<std::vector<int>> parts;
  for (int i = 0; i < m; ++i) parts.push_back({i});
  return parts;
}

}  // namespace

TEST_CASE("singleton family: adjusted equals raw") {
  const JointInference ji = make_ji(Eigen::VectorXd::Constant(1, 1.3),
                                    CorrelationMatrix::identity(1), 38.0);
  const Eigen::VectorXd adj = maxt_adjusted_p(ji, Alternative::greater);
  REQUIRE(std::fabs(adj(0) - t_sf(1.3, 38.0)) < 1e-6);
}

TEST_CASE("extreme statistic has a vanishing adjusted p") {
  Eigen::VectorXd t(3);
  t << 50.0, 1.0, 0.5;
  const JointInference ji = make_ji(t, CorrelationMatrix::equicorrelated(3, 0.5), 38.0);
  const Eigen::VectorXd adj = maxt_adjusted_p(ji, Alternative::greater);
  REQUIRE(adj(0) < 1e-12);
}

TEST_CASE("marginal p basics") {
  const JointInference ji = make_ji(Eigen::VectorXd::Zero(1),
                                    CorrelationMatrix::identity(1), 38.0);
  REQUIRE(marginal_p(ji, singletons(1), Alternative::greater)(0) == Catch::Approx(0.5));
}

TEST_CASE("within-part adjustment with perfect correlation equals the raw p") {
  Eigen::VectorXd t(2);
  t << 2.0, 1.0;
  const JointInference ji = make_ji(t, CorrelationMatrix::equicorrelated(2, 1.0), 30.0);
  const Eigen::VectorXd p = marginal_p(ji, {{0, 1}}, Alternative::greater);
  REQUIRE(p(0) == Catch::Approx(t_sf(2.0, 30.0)).margin(1e-10));
  REQUIRE(p(1) == Catch::Approx(t_sf(1.0, 30.0)).margin(1e-10));
}

TEST_CASE("partition validation") {
  const JointInference ji = make_ji(Eigen::VectorXd::Zero(3),
                                    CorrelationMatrix::identity(3), 10.0);
  REQUIRE_THROWS_AS(marginal_p(ji, {{0, 1}}, Alternative::greater), PartitionMismatchError);
  REQUIRE_THROWS_AS(marginal_p(ji, {{0, 1}, {1, 2}}, Alternative::greater),
                    PartitionMismatchError);
  REQUIRE_THROWS_AS(marginal_p(ji, {{0, 1}, {2, 3}}, Alternative::greater),
                    PartitionMismatchError);
}

TEST_CASE("alternatives: less and two-sided") {
  Eigen::VectorXd t(2);
  t << -2.0, 1.0;
  const CorrelationMatrix r = CorrelationMatrix::equicorrelated(2, 0.3);
  const JointInference ji = make_ji(t, r, 20.0);

  const Eigen::VectorXd raw_less = marginal_p(ji, singletons(2), Alternative::less);
  REQUIRE(raw_less(0) == Catch::Approx(t_cdf(-2.0, 20.0)));
  const Eigen::VectorXd adj_less = maxt_adjusted_p(ji, Alternative::less);
  REQUIRE(adj_less(0) >= raw_less(0));

  const Eigen::VectorXd raw_two = marginal_p(ji, singletons(2), Alternative::two_sided);
  REQUIRE(raw_two(0) == Catch::Approx(2.0 * t_sf(2.0, 20.0)));
  const Eigen::VectorXd adj_two = maxt_adjusted_p(ji, Alternative::two_sided);
  for (int i = 0; i < 2; ++i) {
    REQUIRE(adj_two(i) >= raw_two(i) - 2e-4);
    REQUIRE(adj_two(i) <= std::min(1.0, 2.0 * raw_two(i)) + 2e-4);
  }
}

TEST_CASE("decide") {
  Eigen::VectorXd raw(2), adj(2);
  raw << 0.01, 0.04;
  adj << 0.02, 0.06;
  const TestOutcome o = decide(raw, adj, 0.05);
  REQUIRE(o.iut_reject);
  REQUIRE(o.uit_reject);
  REQUIRE_FALSE(o.aia_reject);
  REQUIRE(o.p_iut_max == 0.04);
  REQUIRE(o.p_aia_max == 0.06);

  raw << 0.049, 0.049;
  adj << 0.049, 0.049;
  const TestOutcome all = decide(raw, adj, 0.05);
  REQUIRE(all.iut_reject);
  REQUIRE(all.uit_reject);
  REQUIRE(all.aia_reject);

  REQUIRE_THROWS_AS(decide(raw, Eigen::VectorXd::Zero(3), 0.05), DimensionMismatchError);
  REQUIRE_THROWS_AS(decide(raw, adj, 0.0), std::invalid_argument);
}

TEST_CASE("decide implications hold on random p-vectors") {
  RandomStream rng(606);
  for (int rep = 0; rep < 1000; ++rep) {
    const int m = 1 + static_cast<int>(rng.uniform01() * 5);
    Eigen::VectorXd raw(m), adj(m);
    for (int i = 0; i < m; ++i) {
      raw(i) = rng.uniform01();
      adj(i) = std::min(1.0, raw(i) * (1.0 + rng.uniform01() * (m - 1)));
    }
    const TestOutcome o = decide(raw, adj, 0.05);
    if (o.aia_reject) {
      REQUIRE(o.uit_reject);
      REQUIRE(o.iut_reject);
    }
    REQUIRE(o.p_iut_max == raw.maxCoeff());
    REQUIRE(o.p_aia_max == adj.maxCoeff());
  }
}

TEST_CASE("Table 5: adjusted and marginal p-values of the worked example") {
  const JointInference ji = example_ji();
  REQUIRE(ji.size() == 6);
  REQUIRE(ji.df == 51.0);

  const Eigen::VectorXd adj = maxt_adjusted_p(ji, Alternative::greater);
  const Eigen::VectorXd raw = marginal_p(ji, singletons(6), Alternative::greater);

  REQUIRE(ji.hypothesis_names[2] == "EP1, C vs 80");
  REQUIRE(std::fabs(adj(2) - 0.0086) < 0.0015);
  REQUIRE(std::fabs(raw(2) - 0.002) < 0.001);

  REQUIRE(std::fabs(adj(0) - 0.681) < 0.005);
  REQUIRE(std::fabs(raw(0) - 0.341) < 0.003);
  REQUIRE(std::fabs(adj(1) - 0.033) < 0.005);
  REQUIRE(std::fabs(raw(1) - 0.008) < 0.003);

  // global decisions: max raw 0.341, max adjusted 0.681, both above 0.05
  const TestOutcome o = decide(raw, adj, 0.05);
  REQUIRE_FALSE(o.iut_reject);
  REQUIRE_FALSE(o.aia_reject);
  REQUIRE(std::fabs(o.p_iut_max - 0.341) < 0.003);
  REQUIRE(std::fabs(o.p_aia_max - 0.681) < 0.005);
}

TEST_CASE("dominance and Bonferroni sandwich on random instances") {
  RandomStream rng(7777);
  MvtOptions opts;
  opts.abs_tol = 1e-4;
  for (int rep = 0; rep < 40; ++rep) {
    const int m = 2 + static_cast<int>(rng.uniform01() * 3.999);
    Eigen::MatrixXd g(m, m + 2);
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < m + 2; ++c) g(r, c) = rng.normal();
    Eigen::MatrixXd cov = g * g.transpose();
    Eigen::VectorXd d = cov.diagonal().cwiseSqrt();
    Eigen::MatrixXd corr = d.asDiagonal().inverse() * cov * d.asDiagonal().inverse();
    corr = 0.5 * (corr + corr.transpose()).eval();
    corr.diagonal().setOnes();
    Eigen::VectorXd t(m);
    for (int i = 0; i < m; ++i) t(i) = -2.0 + 6.0 * rng.uniform01();
    const double df = 5.0 + 55.0 * rng.uniform01();
    const JointInference ji = make_ji(t, CorrelationMatrix(corr), df);
    const Eigen::VectorXd adj = maxt_adjusted_p(ji, Alternative::greater, opts);
    const Eigen::VectorXd raw = marginal_p(ji, singletons(m), Alternative::greater, opts);
    for (int i = 0; i < m; ++i) {
      REQUIRE(adj(i) >= raw(i));  // exact thanks to the clamp
      REQUIRE(adj(i) <= std::min(1.0, m * raw(i)) + 2e-4);
    }
  }
}

TEST_CASE("adjusted p is monotone in the statistic") {
  const CorrelationMatrix r = CorrelationMatrix::equicorrelated(3, 0.5);
  double prev = 2.0;
  for (double t : {-1.0, 0.0, 0.8, 1.6, 2.4, 3.2}) {
    Eigen::VectorXd tv(3);
    tv << t, 0.3, -0.2;
    const JointInference ji = make_ji(tv, r, 33.0);
    const double adj = maxt_adjusted_p(ji, Alternative::greater)(0);
    REQUIRE(adj <= prev + 2e-4);
    prev = adj;
  }
}

TEST_CASE("simultaneous CI: normal limit and duality") {
  // M=1, large df: lower = estimate - 1.645 * se
  JointInference ji1 = make_ji(Eigen::VectorXd::Constant(1, 2.0),
                               CorrelationMatrix::identity(1), 1e7);
  ji1.estimates(0) = 5.0;
  ji1.std_errors(0) = 2.0;
  ji1.t_stats(0) = 2.5;
  const SimultaneousCI ci1 = simultaneous_ci(ji1, 0.95);
  REQUIRE(std::fabs(ci1.lower(0) - (5.0 - 1.6449 * 2.0)) < 0.01 * 2.0);
  REQUIRE(std::isinf(ci1.upper(0)));

  // estimate 0 => lower < 0
  JointInference ji0 = make_ji(Eigen::VectorXd::Zero(2),
                               CorrelationMatrix::equicorrelated(2, 0.4), 20.0);
  const SimultaneousCI ci0 = simultaneous_ci(ji0, 0.9);
  REQUIRE(ci0.lower(0) < 0.0);
  REQUIRE(ci0.lower(1) < 0.0);

  // example: lower > 0 exactly when the adjusted p is below alpha
  const JointInference ji = example_ji();
  const SimultaneousCI ci = simultaneous_ci(ji, 0.95);
  const Eigen::VectorXd adj = maxt_adjusted_p(ji, Alternative::greater);
  for (int i = 0; i < ji.size(); ++i) REQUIRE((ci.lower(i) > 0.0) == (adj(i) < 0.05));
}

TEST_CASE("two-sided and less CIs") {
  JointInference ji = make_ji(Eigen::VectorXd::Constant(2, 1.0),
                              CorrelationMatrix::equicorrelated(2, 0.3), 25.0);
  ji.estimates << 1.0, -2.0;
  ji.std_errors << 0.5, 1.0;
  const SimultaneousCI two = simultaneous_ci(ji, 0.95, Alternative::two_sided);
  REQUIRE(two.lower(0) < ji.estimates(0));
  REQUIRE(two.upper(0) > ji.estimates(0));
  const SimultaneousCI less = simultaneous_ci(ji, 0.95, Alternative::less);
  REQUIRE(std::isinf(less.lower(0)));
  REQUIRE(less.upper(0) > ji.estimates(0));
}

TEST_CASE("alternative pattern enumeration") {
  REQUIRE(enumerate_alternative_patterns(1) == std::vector<std::uint32_t>{1});
  REQUIRE(enumerate_alternative_patterns(2) == std::vector<std::uint32_t>{1, 2, 3});
  REQUIRE(enumerate_alternative_patterns(4).size() == 15);
  REQUIRE_THROWS_AS(enumerate_alternative_patterns(0), std::invalid_argument);
  REQUIRE_THROWS_AS(enumerate_alternative_patterns(21), JTooLargeError);
}

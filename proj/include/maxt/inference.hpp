#pragma once

#include <cstdint>
#include <vector>

#include "maxt/models.hpp"
#include "maxt/mvt.hpp"

namespace maxt {

enum class Alternative { greater, less, two_sided };

namespace detail {

inline double raw_p_value(double t, double df, Alternative alt) {
  switch (alt) {
    case Alternative::greater: return t_sf(t, df);
    case Alternative::less: return t_cdf(t, df);
    case Alternative::two_sided: return std::min(1.0, 2.0 * t_sf(std::fabs(t), df));
  }
  return 1.0;
}

inline CorrelationMatrix sub_correlation(const CorrelationMatrix& corr,
                                         const std::vector<int>& idx);

// Deep-tail union probability P(any T_j > t) by inclusion-exclusion over
// small orthant probabilities. The complement route loses all relative
// accuracy once 1 - P(all <= t) falls below the integration noise; the
// orthant terms keep it. Truncation alternates around the truth
// (Bonferroni inequalities), so the error is bounded by the last term.
inline double tail_union_p(double t, const CorrelationMatrix& corr, double df,
                           const MvtOptions& opts) {
  const int m = corr.dim();
  const double single = t_sf(t, df);
  double total = m * single;
  const double inf = std::numeric_limits<double>::infinity();
  double sign = -1.0;
  for (int order = 2; order <= std::min(m, 5); ++order) {
    double s_r = 0.0;
    std::vector<int> idx(order);
    for (int i = 0; i < order; ++i) idx[i] = i;
    for (;;) {
      const CorrelationMatrix sub = sub_correlation(corr, idx);
      s_r += mvt_rectangle(Eigen::VectorXd::Constant(order, t),
                           Eigen::VectorXd::Constant(order, inf), sub, df, opts)
                 .value;
      int pos = order - 1;
      while (pos >= 0 && idx[pos] == m - order + pos) --pos;
      if (pos < 0) break;
      ++idx[pos];
      for (int i = pos + 1; i < order; ++i) idx[i] = idx[i - 1] + 1;
    }
    total += sign * s_r;
    sign = -sign;
    if (s_r <= 1e-3 * total) break;
  }
  return std::clamp(total, single, std::min(1.0, m * single));
}

// Single-step max-T p-value of statistic t against the family given by
// (corr, df). Clamped below by the marginal p: the adjustment can never
// undercut it, so integration noise is truncated there. Tiny one-sided
// tails are rerouted through the union expansion to preserve relative
// accuracy.
inline double single_step_p(double t, const CorrelationMatrix& corr, double df,
                            Alternative alt, const MvtOptions& opts) {
  const int m = corr.dim();
  const double raw = raw_p_value(t, df, alt);
  if (m == 1) return raw;
  if (alt != Alternative::two_sided && opts.abs_tol <= 1e-4 && m <= 16 &&
      m * raw < 1e-4) {
    const double tt = alt == Alternative::greater ? t : -t;
    return tail_union_p(tt, corr, df, opts);
  }
  double joint;
  switch (alt) {
    case Alternative::greater:
      joint = mvt_cdf(Eigen::VectorXd::Constant(m, t), corr, df, opts).value;
      break;
    case Alternative::less:
      joint = mvt_cdf(Eigen::VectorXd::Constant(m, -t), corr, df, opts).value;
      break;
    case Alternative::two_sided: {
      const double a = std::fabs(t);
      joint = mvt_rectangle(Eigen::VectorXd::Constant(m, -a),
                            Eigen::VectorXd::Constant(m, a), corr, df, opts)
                  .value;
      break;
    }
  }
  return std::clamp(1.0 - joint, raw, 1.0);
}

inline CorrelationMatrix sub_correlation(const CorrelationMatrix& corr,
                                         const std::vector<int>& idx) {
  const int m = static_cast<int>(idx.size());
  Eigen::MatrixXd sub(m, m);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c) sub(r, c) = corr(idx[r], idx[c]);
  return CorrelationMatrix(sub);
}

}  // namespace detail

// Marginal (per-hypothesis) p-values.
inline Eigen::VectorXd marginal_p_raw(const JointInference& ji, Alternative alt) {
  Eigen::VectorXd p(ji.size());
  for (int i = 0; i < ji.size(); ++i)
    p(i) = detail::raw_p_value(ji.t_stats(i), ji.df, alt);
  return p;
}

// Single-step max-T adjusted p-values over the whole family.
inline Eigen::VectorXd maxt_adjusted_p(const JointInference& ji, Alternative alt,
                                       const MvtOptions& opts = {}) {
  Eigen::VectorXd p(ji.size());
  for (int i = 0; i < ji.size(); ++i)
    p(i) = detail::single_step_p(ji.t_stats(i), ji.corr, ji.df, alt, opts);
  return p;
}

// Groups the hypothesis indices by the endpoint they belong to.
inline std::vector<std::vector<int>> endpoint_partition(const JointInference& ji) {
  std::vector<std::vector<int>> parts;
  for (int i = 0; i < ji.size(); ++i) {
    const int e = ji.endpoint_index[i];
    if (e >= static_cast<int>(parts.size())) parts.resize(e + 1);
    parts[e].push_back(i);
  }
  return parts;
}

// Per-part p-values: raw univariate for singleton parts, within-part
// single-step max-T (over that part's correlation block) otherwise.
inline Eigen::VectorXd marginal_p(const JointInference& ji,
                                  const std::vector<std::vector<int>>& partition,
                                  Alternative alt, const MvtOptions& opts = {}) {
  std::vector<int> seen(ji.size(), 0);
  for (const auto& part : partition)
    for (int i : part) {
      if (i < 0 || i >= ji.size() || seen[i]++)
        throw PartitionMismatchError("marginal_p: partition must cover each hypothesis exactly once");
    }
  for (int i = 0; i < ji.size(); ++i)
    if (!seen[i])
      throw PartitionMismatchError("marginal_p: partition must cover each hypothesis exactly once");

  Eigen::VectorXd p(ji.size());
  for (const auto& part : partition) {
    if (part.size() == 1) {
      p(part[0]) = detail::raw_p_value(ji.t_stats(part[0]), ji.df, alt);
      continue;
    }
    const CorrelationMatrix sub = detail::sub_correlation(ji.corr, part);
    for (int i : part)
      p(i) = detail::single_step_p(ji.t_stats(i), sub, ji.df, alt, opts);
  }
  return p;
}

struct TestOutcome {
  Eigen::VectorXd raw_p;
  Eigen::VectorXd adjusted_p;
  double alpha = 0.05;
  Alternative alternative = Alternative::greater;
  bool iut_reject = false;   // every raw p below alpha
  bool uit_reject = false;   // any adjusted p below alpha
  bool aia_reject = false;   // every adjusted p below alpha
  double p_iut_max = 1.0;    // max raw p
  double p_aia_max = 1.0;    // max adjusted p
};

inline TestOutcome decide(const Eigen::VectorXd& raw_p,
                          const Eigen::VectorXd& adjusted_p, double alpha,
                          Alternative alt = Alternative::greater) {
  if (raw_p.size() != adjusted_p.size() || raw_p.size() == 0)
    throw DimensionMismatchError("decide: p-value vectors must match and be nonempty");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("decide: alpha must be in (0, 1)");
  TestOutcome out;
  out.raw_p = raw_p;
  out.adjusted_p = adjusted_p;
  out.alpha = alpha;
  out.alternative = alt;
  out.p_iut_max = raw_p.maxCoeff();
  out.p_aia_max = adjusted_p.maxCoeff();
  out.iut_reject = out.p_iut_max < alpha;
  out.aia_reject = out.p_aia_max < alpha;
  out.uit_reject = adjusted_p.minCoeff() < alpha;
  return out;
}

struct SimultaneousCI {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  double level = 0.95;
  double quantile = 0.0;
};

// Single-step simultaneous confidence bounds for the contrast estimates,
// dual to the max-T adjusted tests.
inline SimultaneousCI simultaneous_ci(const JointInference& ji, double level,
                                      Alternative alt = Alternative::greater,
                                      const MvtOptions& opts = {}) {
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("simultaneous_ci: level must be in (0, 1)");
  const double inf = std::numeric_limits<double>::infinity();
  SimultaneousCI ci;
  ci.level = level;
  switch (alt) {
    case Alternative::greater:
      ci.quantile = equicoordinate_quantile(level, ji.corr, ji.df, opts);
      ci.lower = ji.estimates - ci.quantile * ji.std_errors;
      ci.upper = Eigen::VectorXd::Constant(ji.size(), inf);
      break;
    case Alternative::less:
      ci.quantile = equicoordinate_quantile(level, ji.corr, ji.df, opts);
      ci.lower = Eigen::VectorXd::Constant(ji.size(), -inf);
      ci.upper = ji.estimates + ci.quantile * ji.std_errors;
      break;
    case Alternative::two_sided:
      ci.quantile = symmetric_equicoordinate_quantile(level, ji.corr, ji.df, opts);
      ci.lower = ji.estimates - ci.quantile * ji.std_errors;
      ci.upper = ji.estimates + ci.quantile * ji.std_errors;
      break;
  }
  return ci;
}

// All 2^J - 1 nonempty subsets of {1..J} in binary counting order; bit j
// set means elementary hypothesis j+1 sits in the alternative.
inline std::vector<std::uint32_t> enumerate_alternative_patterns(int j) {
  if (j < 1) throw std::invalid_argument("enumerate_alternative_patterns: J must be >= 1");
  if (j > 20) throw JTooLargeError("enumerate_alternative_patterns: J must be <= 20");
  std::vector<std::uint32_t> out;
  out.reserve((1u << j) - 1);
  for (std::uint32_t mask = 1; mask < (1u << j); ++mask) out.push_back(mask);
  return out;
}

}  // namespace maxt

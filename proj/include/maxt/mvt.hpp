#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include <Eigen/Dense>

#include "maxt/correlation.hpp"
#include "maxt/distributions.hpp"
#include "maxt/rng.hpp"

namespace maxt {

// Estimated probability with a 3-sigma-style absolute error bound.
// `converged` is false when the evaluation budget ran out before the
// accuracy target was met; the estimate and bound are still honest.
struct ProbResult {
  double value = 0.0;
  double error_estimate = 0.0;
  bool converged = true;
};

struct MvtOptions {
  double abs_tol = 1e-4;
  std::uint64_t seed = 20170519;  // integration seed; fixed => deterministic
  int shifts = 10;                // random shifts per lattice stage
  long max_evals = 4'000'000;     // integrand evaluations per call
  // Route exactly-equicorrelated problems through the latent-factor
  // quadrature when the tolerance warrants it; off forces the lattice.
  bool allow_latent_fast_path = true;
};

namespace detail {

// ---------------------------------------------------------------------
// Quadrature nodes (Golub-Welsch), cached per size.
// ---------------------------------------------------------------------

using NodeTable = std::vector<std::pair<double, double>>;

inline std::shared_ptr<const NodeTable> golub_welsch(int n, bool hermite) {
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = hermite ? std::sqrt(k / 2.0) : k / std::sqrt(4.0 * k * k - 1.0);
    t(k, k - 1) = t(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
  const double mass = hermite ? std::sqrt(M_PI) : 2.0;
  auto table = std::make_shared<NodeTable>();
  table->reserve(n);
  for (int i = 0; i < n; ++i) {
    const double w = mass * es.eigenvectors()(0, i) * es.eigenvectors()(0, i);
    table->push_back({es.eigenvalues()(i), w});
  }
  return table;
}

inline std::shared_ptr<const NodeTable> cached_nodes(int n, bool hermite) {
  static std::mutex mu;
  static std::map<std::pair<int, bool>, std::shared_ptr<const NodeTable>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{n, hermite}];
  if (!slot) slot = golub_welsch(n, hermite);
  return slot;
}

// ---------------------------------------------------------------------
// Quantile table for the chi scale variable S = chi_df / sqrt(df),
// cached per df. Catmull-Rom interpolation on a uniform grid; the ends
// of (0,1) fall back to the exact quantile.
// ---------------------------------------------------------------------

class ChiScaleTable {
 public:
  explicit ChiScaleTable(double df) : df_(df) {
    s_.resize(kN);
    for (int i = 0; i < kN; ++i)
      s_[i] = chi_scale_quantile(kLo + (kHi - kLo) * i / (kN - 1), df);
  }

  double operator()(double u) const {
    const double t = (u - kLo) / (kHi - kLo) * (kN - 1);
    const int i = static_cast<int>(t);
    if (t < 1.0 || i > kN - 3) return chi_scale_quantile(u, df_);
    const double f = t - i;
    const double p0 = s_[i - 1], p1 = s_[i], p2 = s_[i + 1], p3 = s_[i + 2];
    return p1 + 0.5 * f * (p2 - p0 +
                           f * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 +
                                f * (3.0 * (p1 - p2) + p3 - p0)));
  }

 private:
  static constexpr int kN = 2049;
  static constexpr double kLo = 1.0 / 8192.0;
  static constexpr double kHi = 1.0 - 1.0 / 8192.0;
  double df_;
  std::vector<double> s_;
};

inline std::shared_ptr<const ChiScaleTable> cached_chi_table(double df) {
  static std::mutex mu;
  static std::map<double, std::shared_ptr<const ChiScaleTable>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[df];
  if (!slot) slot = std::make_shared<const ChiScaleTable>(df);
  return slot;
}

// ---------------------------------------------------------------------
// Separation-of-variables problem: reordered, pivoted Cholesky factor
// plus the permuted integration limits.
// ---------------------------------------------------------------------

struct SovProblem {
  int n = 0;
  Eigen::MatrixXd l;                  // lower-triangular factor
  std::vector<double> lower, upper;   // permuted limits (+-inf allowed)
  double df = kInfiniteDf;
  int qmc_dim = 1;
};

inline constexpr double kDegenerateVar = 1e-12;

// Gibson-Glasbey-Elston style ordering: at each step pick the variable
// with the smallest expected conditional interval probability; variables
// with (numerically) zero conditional variance go last and turn into
// indicator factors.
inline SovProblem build_sov(const Eigen::MatrixXd& corr, std::vector<double> lo,
                            std::vector<double> hi, double df) {
  const int n = static_cast<int>(lo.size());
  SovProblem p;
  p.n = n;
  p.df = df;
  p.qmc_dim = std::max((std::isinf(df) ? 0 : 1) + n - 1, 1);
  Eigen::MatrixXd c = corr;
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  std::vector<double> y_mean(n, 0.0);

  for (int k = 0; k < n; ++k) {
    int best = k;
    double best_width = 5.0;
    for (int i = k; i < n; ++i) {
      double var = c(i, i);
      double dot = 0.0;
      for (int j = 0; j < k; ++j) {
        var -= l(i, j) * l(i, j);
        dot += l(i, j) * y_mean[j];
      }
      double width;
      if (var <= kDegenerateVar) {
        width = 4.0;  // postpone degenerate coordinates
      } else {
        const double sd = std::sqrt(var);
        const double dlo = std::isinf(lo[i]) ? 0.0 : norm_cdf((lo[i] - dot) / sd);
        const double dhi = std::isinf(hi[i]) ? 1.0 : norm_cdf((hi[i] - dot) / sd);
        width = dhi - dlo;
      }
      if (width < best_width) {
        best_width = width;
        best = i;
      }
    }
    if (best != k) {
      c.row(k).swap(c.row(best));
      c.col(k).swap(c.col(best));
      l.row(k).swap(l.row(best));
      std::swap(lo[k], lo[best]);
      std::swap(hi[k], hi[best]);
    }
    double var = c(k, k);
    double dot = 0.0;
    for (int j = 0; j < k; ++j) {
      var -= l(k, j) * l(k, j);
      dot += l(k, j) * y_mean[j];
    }
    if (var <= kDegenerateVar) {
      l(k, k) = 0.0;
      y_mean[k] = 0.0;
      continue;
    }
    const double sd = std::sqrt(var);
    l(k, k) = sd;
    for (int i = k + 1; i < n; ++i) {
      double v = c(i, k);
      for (int j = 0; j < k; ++j) v -= l(i, j) * l(k, j);
      l(i, k) = v / sd;
    }
    const double at = std::isinf(lo[k]) ? -std::numeric_limits<double>::infinity()
                                        : (lo[k] - dot) / sd;
    const double bt = std::isinf(hi[k]) ? std::numeric_limits<double>::infinity()
                                        : (hi[k] - dot) / sd;
    const double d = std::isinf(at) ? 0.0 : norm_cdf(at);
    const double e = std::isinf(bt) ? 1.0 : norm_cdf(bt);
    const double pa = std::isinf(at) ? 0.0 : norm_pdf(at);
    const double pb = std::isinf(bt) ? 0.0 : norm_pdf(bt);
    y_mean[k] = (e - d > 1e-12) ? (pa - pb) / (e - d) : 0.0;
  }
  p.l = std::move(l);
  p.lower = std::move(lo);
  p.upper = std::move(hi);
  return p;
}

inline double sov_integrand(const SovProblem& p, const ChiScaleTable* chi,
                            const double* w, double* y) {
  int wi = 0;
  const double s = chi ? (*chi)(w[wi++]) : 1.0;
  double prob = 1.0;
  for (int k = 0; k < p.n; ++k) {
    double dot = 0.0;
    for (int j = 0; j < k; ++j) dot += p.l(k, j) * y[j];
    const double lkk = p.l(k, k);
    double d, e;
    if (lkk > 0.0) {
      d = std::isinf(p.lower[k]) ? 0.0 : norm_cdf((s * p.lower[k] - dot) / lkk);
      e = std::isinf(p.upper[k]) ? 1.0 : norm_cdf((s * p.upper[k] - dot) / lkk);
    } else {
      d = (!std::isinf(p.lower[k]) && s * p.lower[k] - dot > 0.0) ? 1.0 : 0.0;
      e = (!std::isinf(p.upper[k]) && s * p.upper[k] - dot < 0.0) ? 0.0 : 1.0;
    }
    const double f = e - d;
    if (f <= 0.0) return 0.0;
    prob *= f;
    if (k < p.n - 1) {
      if (lkk > 0.0) {
        double q = d + w[wi] * f;
        q = std::clamp(q, 1e-300, 1.0 - 1e-16);
        y[k] = norm_quantile(q);
      } else {
        y[k] = 0.0;
      }
      ++wi;
    }
  }
  return prob;
}

// Randomly shifted rank-1 lattice over the SOV transform. Stage sizes
// are primes near powers of two; the generating vector follows the
// sqrt-prime (Richtmyer) recipe, with the baker transformation for
// periodization. Stage estimates are pooled by inverse variance.
inline ProbResult rqmc_integrate(const SovProblem& p, const ChiScaleTable* chi,
                                 const MvtOptions& opts) {
  static constexpr long kStageSizes[] = {67,    127,   263,    521,   1031,
                                         2053,  4099,  8191,   16381, 32749,
                                         65521, 131071, 262139, 524287};
  static constexpr int kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31,
                                    37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79};
  const int dim = p.qmc_dim;
  const int nshift = std::max(opts.shifts, 4);
  RandomStream shift_rng(derive_seed(opts.seed, 0x6c747463ULL));

  int stage = dim <= 3 ? 0 : (dim <= 6 ? 2 : 3);
  double pooled_wv = 0.0, pooled_w = 0.0;
  double value = 0.0, err = 1.0;
  long used = 0;
  bool converged = false;

  std::vector<double> delta(dim), point(dim), y(std::max(p.n, 1));
  std::vector<long> z(dim), acc(dim);
  std::vector<double> shift_mean(nshift);

  for (; stage < static_cast<int>(std::size(kStageSizes)); ++stage) {
    const long n = kStageSizes[stage];
    if (used > 0 && used + static_cast<long>(nshift) * n > opts.max_evals) break;
    z[0] = 1;
    for (int j = 1; j < dim; ++j) {
      const double g = std::sqrt(static_cast<double>(kPrimes[j % std::size(kPrimes)]));
      z[j] = 1 + static_cast<long>((g - std::floor(g)) * static_cast<double>(n - 1));
    }
    for (int b = 0; b < nshift; ++b) {
      for (int j = 0; j < dim; ++j) {
        delta[j] = shift_rng.uniform01();
        acc[j] = 0;
      }
      double sum = 0.0, comp = 0.0;  // Kahan
      for (long k = 0; k < n; ++k) {
        for (int j = 0; j < dim; ++j) {
          double x = static_cast<double>(acc[j]) / static_cast<double>(n) + delta[j];
          if (x >= 1.0) x -= 1.0;
          point[j] = 1.0 - std::fabs(2.0 * x - 1.0);
          acc[j] += z[j];
          if (acc[j] >= n) acc[j] -= n;
        }
        const double t = sov_integrand(p, chi, point.data(), y.data()) - comp;
        const double snew = sum + t;
        comp = (snew - sum) - t;
        sum = snew;
      }
      shift_mean[b] = sum / static_cast<double>(n);
    }
    used += static_cast<long>(nshift) * n;
    double m = 0.0;
    for (int b = 0; b < nshift; ++b) m += shift_mean[b];
    m /= nshift;
    double var = 0.0;
    for (int b = 0; b < nshift; ++b)
      var += (shift_mean[b] - m) * (shift_mean[b] - m);
    var /= nshift * (nshift - 1);
    if (var <= 0.0) {  // integrand constant across shifts: exact
      value = m;
      err = 1e-15;
      converged = true;
      break;
    }
    pooled_w += 1.0 / var;
    pooled_wv += m / var;
    value = pooled_wv / pooled_w;
    err = 3.0 / std::sqrt(pooled_w);
    if (err <= opts.abs_tol) {
      converged = true;
      break;
    }
  }
  return {std::clamp(value, 0.0, 1.0), std::max(err, 1e-15), converged};
}

// ---------------------------------------------------------------------
// Equicorrelated fast path: a common latent factor reduces the problem
// to a 1-D Gauss-Hermite integral (times a 1-D quadrature over the chi
// scale for finite df). Self-validates with a coarser rule; callers fall
// back to the lattice when the two disagree.
// ---------------------------------------------------------------------

inline double equicorr_inner(const std::vector<double>& lo,
                             const std::vector<double>& hi, double r, double tau,
                             double z, double s) {
  double prod = 1.0;
  for (std::size_t j = 0; j < lo.size(); ++j) {
    const double e = std::isinf(hi[j]) ? 1.0 : norm_cdf((s * hi[j] - r * z) / tau);
    const double d = std::isinf(lo[j]) ? 0.0 : norm_cdf((s * lo[j] - r * z) / tau);
    const double f = e - d;
    if (f <= 0.0) return 0.0;
    prod *= f;
  }
  return prod;
}

inline double equicorr_value(const std::vector<double>& lo,
                             const std::vector<double>& hi, double rho, double df,
                             int n_hermite, int n_scale) {
  const double r = std::sqrt(rho);
  const double tau = std::sqrt(1.0 - rho);
  const auto gh = cached_nodes(n_hermite, true);
  const double inv_sqrt_pi = 1.0 / std::sqrt(M_PI);
  auto latent = [&](double s) {
    double acc = 0.0;
    for (const auto& [x, w] : *gh)
      acc += w * equicorr_inner(lo, hi, r, tau, M_SQRT2 * x, s);
    return acc * inv_sqrt_pi;
  };
  if (std::isinf(df)) return latent(1.0);
  const auto gl = cached_nodes(n_scale, false);  // on [-1, 1]
  double acc = 0.0;
  for (const auto& [x, w] : *gl)
    acc += 0.5 * w * latent(chi_scale_quantile(0.5 * (x + 1.0), df));
  return acc;
}

inline bool try_equicorr_path(const std::vector<double>& lo,
                              const std::vector<double>& hi, double rho, double df,
                              double tol, ProbResult* out) {
  if (rho < 0.0 || rho > 0.95) return false;
  const double fine = equicorr_value(lo, hi, rho, df, 96, 64);
  const double coarse = equicorr_value(lo, hi, rho, df, 64, 48);
  const double err = 3.0 * std::fabs(fine - coarse) + 2e-15;
  if (err > tol) return false;
  *out = {std::clamp(fine, 0.0, 1.0), err, true};
  return true;
}

inline ProbResult mvt_rectangle_impl(const Eigen::VectorXd& lower,
                                     const Eigen::VectorXd& upper,
                                     const CorrelationMatrix& R, double df,
                                     const MvtOptions& opts) {
  const int full = R.dim();
  if (lower.size() != full || upper.size() != full)
    throw DimensionMismatchError("mvt probability: limit size does not match correlation dim");
  if (!(df > 0.0)) throw std::invalid_argument("mvt probability: df must be > 0");

  // Drop coordinates with free limits; detect empty rectangles.
  std::vector<double> lo, hi;
  std::vector<int> keep;
  for (int i = 0; i < full; ++i) {
    const double a = lower(i), b = upper(i);
    if (std::isnan(a) || std::isnan(b))
      throw std::invalid_argument("mvt probability: NaN limit");
    if (b <= a || b == -std::numeric_limits<double>::infinity() ||
        a == std::numeric_limits<double>::infinity())
      return {0.0, 0.0, true};
    if (std::isinf(a) && std::isinf(b)) continue;
    lo.push_back(a);
    hi.push_back(b);
    keep.push_back(i);
  }
  const int n = static_cast<int>(lo.size());
  if (n == 0) return {1.0, 0.0, true};
  if (n == 1) {
    const double v = t_cdf(hi[0], df) - t_cdf(lo[0], df);
    return {std::clamp(v, 0.0, 1.0), 1e-15, true};
  }

  Eigen::MatrixXd sub(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) sub(i, j) = R(keep[i], keep[j]);

  double rho = 0.0;
  bool equi = true;
  for (int i = 0; i < n && equi; ++i)
    for (int j = i + 1; j < n; ++j) {
      if (i == 0 && j == 1) rho = sub(i, j);
      if (std::fabs(sub(i, j) - rho) > 1e-14) {
        equi = false;
        break;
      }
    }
  if (equi && rho > 1.0 - 1e-12) {
    // Perfect correlation: all coordinates are one variable.
    double a = -std::numeric_limits<double>::infinity();
    double b = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
      a = std::max(a, lo[i]);
      b = std::min(b, hi[i]);
    }
    const double v = b > a ? t_cdf(b, df) - t_cdf(a, df) : 0.0;
    return {std::clamp(v, 0.0, 1.0), 1e-15, true};
  }
  // The latent-factor quadrature has a fixed cost (~1e4 products); the
  // lattice is cheaper at loose tolerances, so only divert tight calls.
  if (equi && opts.allow_latent_fast_path && opts.abs_tol <= 5e-4) {
    ProbResult out;
    if (try_equicorr_path(lo, hi, rho, df, opts.abs_tol, &out)) return out;
  }

  SovProblem prob = build_sov(sub, std::move(lo), std::move(hi), df);
  std::shared_ptr<const ChiScaleTable> chi;
  if (!std::isinf(df)) chi = cached_chi_table(df);
  return rqmc_integrate(prob, chi.get(), opts);
}

}  // namespace detail

// P(lower_j <= T_j <= upper_j for all j) for the central multivariate t
// with correlation R and df degrees of freedom (df = +inf gives the
// multivariate normal).
inline ProbResult mvt_rectangle(const Eigen::VectorXd& lower,
                                const Eigen::VectorXd& upper,
                                const CorrelationMatrix& R, double df,
                                const MvtOptions& opts = {}) {
  return detail::mvt_rectangle_impl(lower, upper, R, df, opts);
}

// P(T_j <= b_j for all j).
inline ProbResult mvt_cdf(const Eigen::VectorXd& b, const CorrelationMatrix& R,
                          double df, const MvtOptions& opts = {}) {
  const Eigen::VectorXd lower = Eigen::VectorXd::Constant(
      b.size(), -std::numeric_limits<double>::infinity());
  return detail::mvt_rectangle_impl(lower, b, R, df, opts);
}

namespace detail {

template <typename CdfFn>
inline double bracketed_quantile(CdfFn&& cdf, double p, double lo, double hi,
                                 double tol_p) {
  double flo = cdf(lo), fhi = cdf(hi);
  double step = std::max(hi - lo, 0.25);
  while (flo > p) {
    hi = lo;
    fhi = flo;
    lo -= step;
    step *= 2.0;
    if (lo < -50.0) throw NonconvergenceError("equicoordinate quantile: no lower bracket in [-50, 50]");
    flo = cdf(lo);
  }
  while (fhi < p) {
    lo = hi;
    flo = fhi;
    hi += step;
    step *= 2.0;
    if (hi > 50.0) throw NonconvergenceError("equicoordinate quantile: no upper bracket in [-50, 50]");
    fhi = cdf(hi);
  }
  if (std::fabs(flo - p) <= tol_p) return lo;
  if (std::fabs(fhi - p) <= tol_p) return hi;
  for (int it = 0; it < 200; ++it) {
    double q;
    if (fhi - flo > 1e-14) {
      q = lo + (p - flo) * (hi - lo) / (fhi - flo);  // secant
      const double margin = 0.01 * (hi - lo);
      if (!(q > lo + margin && q < hi - margin)) q = 0.5 * (lo + hi);
    } else {
      q = 0.5 * (lo + hi);
    }
    const double fq = cdf(q);
    if (std::fabs(fq - p) <= tol_p) return q;
    if (fq < p) {
      lo = q;
      flo = fq;
    } else {
      hi = q;
      fhi = fq;
    }
    if (hi - lo < 1e-11) return 0.5 * (lo + hi);
  }
  throw NonconvergenceError("equicoordinate quantile: root iteration did not converge");
}

}  // namespace detail

// Smallest q with P(T_1 <= q, ..., T_J <= q) = p, solved to within tol_p
// in probability. This is the one-sided critical value / simultaneous
// confidence bound multiplier.
inline double equicoordinate_quantile(double p, const CorrelationMatrix& R,
                                      double df, const MvtOptions& opts = {},
                                      double tol_p = 1e-4) {
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("equicoordinate_quantile: p must be in (0, 1)");
  const int j = R.dim();
  if (j == 1) return t_quantile(p, df);
  MvtOptions io = opts;
  io.abs_tol = std::min(opts.abs_tol, tol_p / 4.0);
  auto cdf = [&](double q) {
    return mvt_cdf(Eigen::VectorXd::Constant(j, q), R, df, io).value;
  };
  const double lo = t_quantile(p, df);
  const double hi = std::max(t_quantile(std::pow(p, 1.0 / j), df), lo + 1e-3);
  return detail::bracketed_quantile(cdf, p, lo, hi, tol_p);
}

// q with P(|T_j| <= q for all j) = p; used for two-sided intervals.
inline double symmetric_equicoordinate_quantile(double p,
                                                const CorrelationMatrix& R,
                                                double df,
                                                const MvtOptions& opts = {},
                                                double tol_p = 1e-4) {
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("symmetric_equicoordinate_quantile: p must be in (0, 1)");
  const int j = R.dim();
  if (j == 1) return t_quantile(0.5 * (1.0 + p), df);
  MvtOptions io = opts;
  io.abs_tol = std::min(opts.abs_tol, tol_p / 4.0);
  auto cdf = [&](double q) {
    if (q <= 0.0) return 0.0;
    return mvt_rectangle(Eigen::VectorXd::Constant(j, -q),
                         Eigen::VectorXd::Constant(j, q), R, df, io)
        .value;
  };
  const double lo = t_quantile(0.5 * (1.0 + p), df);
  const double hi =
      std::max(t_quantile(0.5 * (1.0 + std::pow(p, 1.0 / j)), df), lo + 1e-3);
  return detail::bracketed_quantile(cdf, p, lo, hi, tol_p);
}

}  // namespace maxt

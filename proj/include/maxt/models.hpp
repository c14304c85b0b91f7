#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "maxt/correlation.hpp"
#include "maxt/errors.hpp"

namespace maxt {

// Group-labeled response matrix. Group 0 is the control; by default the
// control is the lexicographically first label, the remaining groups
// keep their order of first appearance.
struct Dataset {
  std::vector<int> group;                  // n codes in [0, k)
  std::vector<std::string> group_labels;   // k labels, control first
  Eigen::MatrixXd responses;               // n x J
  std::vector<std::string> endpoint_names; // J

  int n_obs() const { return static_cast<int>(group.size()); }
  int n_groups() const { return static_cast<int>(group_labels.size()); }
  int n_endpoints() const { return static_cast<int>(responses.cols()); }

  std::vector<int> group_sizes() const {
    std::vector<int> sizes(n_groups(), 0);
    for (int g : group) ++sizes[g];
    return sizes;
  }

  static Dataset assemble(const std::vector<std::string>& labels,
                          Eigen::MatrixXd responses,
                          std::vector<std::string> endpoint_names,
                          const std::optional<std::string>& control = {}) {
    const int n = static_cast<int>(labels.size());
    if (responses.rows() != n)
      throw DimensionMismatchError("dataset: group labels and responses disagree on n");
    if (static_cast<int>(endpoint_names.size()) != responses.cols())
      throw DimensionMismatchError("dataset: endpoint names and responses disagree on J");
    std::vector<std::string> order;
    for (const auto& l : labels)
      if (std::find(order.begin(), order.end(), l) == order.end()) order.push_back(l);
    std::string ctl;
    if (control) {
      ctl = *control;
      if (std::find(order.begin(), order.end(), ctl) == order.end())
        throw std::invalid_argument("dataset: control label '" + ctl + "' not present");
    } else {
      ctl = *std::min_element(order.begin(), order.end());
    }
    std::vector<std::string> final_order{ctl};
    for (const auto& l : order)
      if (l != ctl) final_order.push_back(l);

    Dataset d;
    d.group_labels = final_order;
    d.responses = std::move(responses);
    d.endpoint_names = std::move(endpoint_names);
    d.group.reserve(n);
    for (const auto& l : labels) {
      const auto it = std::find(final_order.begin(), final_order.end(), l);
      d.group.push_back(static_cast<int>(it - final_order.begin()));
    }
    const auto sizes = d.group_sizes();
    for (int g = 0; g < d.n_groups(); ++g)
      if (sizes[g] < 2)
        throw DegenerateGroupError("dataset: group '" + d.group_labels[g] +
                                   "' has fewer than 2 observations");
    if (!d.responses.allFinite())
      throw std::invalid_argument("dataset: responses contain missing/non-finite values");
    return d;
  }
};

// Per-endpoint one-way OLS fit in the group-means parameterization.
struct OneWayFit {
  std::string endpoint;
  Eigen::VectorXd group_means;   // k
  std::vector<int> group_sizes;  // k
  double residual_ss = 0.0;
  int df = 0;                    // n - k
  Eigen::VectorXd residuals;     // n
  std::vector<int> group;        // n codes, kept for the joint covariance
};

inline OneWayFit fit_oneway(const Dataset& data, int endpoint) {
  if (endpoint < 0 || endpoint >= data.n_endpoints())
    throw std::invalid_argument("fit_oneway: endpoint index out of range");
  const int n = data.n_obs();
  const int k = data.n_groups();
  OneWayFit fit;
  fit.endpoint = data.endpoint_names[endpoint];
  fit.group_sizes = data.group_sizes();
  for (int g = 0; g < k; ++g)
    if (fit.group_sizes[g] < 2)
      throw DegenerateGroupError("fit_oneway: group '" + data.group_labels[g] +
                                 "' has fewer than 2 observations");
  fit.group = data.group;
  fit.group_means = Eigen::VectorXd::Zero(k);
  for (int i = 0; i < n; ++i) fit.group_means(data.group[i]) += data.responses(i, endpoint);
  for (int g = 0; g < k; ++g) fit.group_means(g) /= fit.group_sizes[g];
  fit.residuals.resize(n);
  for (int i = 0; i < n; ++i)
    fit.residuals(i) = data.responses(i, endpoint) - fit.group_means(data.group[i]);
  fit.residual_ss = fit.residuals.squaredNorm();
  fit.df = n - k;
  return fit;
}

// m x k contrast matrix; rows sum to zero.
struct ContrastSet {
  Eigen::MatrixXd matrix;
  std::vector<std::string> names;
  int n_contrasts() const { return static_cast<int>(matrix.rows()); }
  int n_groups() const { return static_cast<int>(matrix.cols()); }
};

// Many-to-one comparisons: row i is -1 on the control, +1 on treatment i.
inline ContrastSet dunnett_contrasts(int k, const std::vector<std::string>& labels = {}) {
  if (k < 2) throw InvalidKError("dunnett_contrasts: need at least 2 groups");
  if (!labels.empty() && static_cast<int>(labels.size()) != k)
    throw DimensionMismatchError("dunnett_contrasts: label count does not match k");
  ContrastSet c;
  c.matrix = Eigen::MatrixXd::Zero(k - 1, k);
  for (int i = 0; i < k - 1; ++i) {
    c.matrix(i, 0) = -1.0;
    c.matrix(i, i + 1) = 1.0;
    if (labels.empty())
      c.names.push_back("G1 vs G" + std::to_string(i + 2));
    else
      c.names.push_back(labels[0] + " vs " + labels[i + 1]);
  }
  return c;
}

enum class CovarianceKind { model_based, sandwich };

// Stacked contrast inference across endpoints: estimates, standard
// errors, t statistics, a common df and the estimated correlation of the
// statistics. `endpoint_index` records which fit each hypothesis belongs
// to (hypotheses are stacked endpoint-major).
struct JointInference {
  Eigen::VectorXd estimates;
  Eigen::VectorXd std_errors;
  Eigen::VectorXd t_stats;
  double df = 0.0;
  CorrelationMatrix corr;
  std::vector<std::string> hypothesis_names;
  CovarianceKind covariance_kind = CovarianceKind::model_based;
  std::vector<int> endpoint_index;
  std::vector<std::string> notes;

  int size() const { return static_cast<int>(estimates.size()); }
};

// Joint covariance of all contrast estimates from stacked per-observation
// influence functions (the multiple-marginal-models step). The cross
// products give the HC0 sandwich; for the model-based kind the marginal
// scales are swapped for the classical pooled-variance standard errors
// while the influence-function correlation structure is kept.
inline JointInference joint_inference(const std::vector<OneWayFit>& fits,
                                      const ContrastSet& contrasts,
                                      CovarianceKind kind) {
  if (fits.empty()) throw std::invalid_argument("joint_inference: no fits supplied");
  const int j_ep = static_cast<int>(fits.size());
  const int k = static_cast<int>(fits[0].group_sizes.size());
  const int n = static_cast<int>(fits[0].residuals.size());
  const int m = contrasts.n_contrasts();
  if (contrasts.n_groups() != k)
    throw DimensionMismatchError("joint_inference: contrast columns do not match group count");
  for (const auto& f : fits) {
    if (f.group_sizes != fits[0].group_sizes || f.group != fits[0].group)
      throw MixedDesignError("joint_inference: fits disagree on the design");
  }
  const int big_m = m * j_ep;

  int df = fits[0].df;
  bool mixed_df = false;
  for (const auto& f : fits) {
    if (f.df != df) mixed_df = true;
    df = std::min(df, f.df);
  }

  // Per-group residual cross products: meat[g](j, l) = sum_{i in g} e_i^j e_i^l.
  std::vector<Eigen::MatrixXd> meat(k, Eigen::MatrixXd::Zero(j_ep, j_ep));
  for (int i = 0; i < n; ++i) {
    Eigen::MatrixXd& mg = meat[fits[0].group[i]];
    for (int a = 0; a < j_ep; ++a)
      for (int b = a; b < j_ep; ++b) {
        const double v = fits[a].residuals(i) * fits[b].residuals(i);
        mg(a, b) += v;
        if (a != b) mg(b, a) += v;
      }
  }

  JointInference ji{Eigen::VectorXd(big_m),
                    Eigen::VectorXd(big_m),
                    Eigen::VectorXd(big_m),
                    static_cast<double>(df),
                    CorrelationMatrix::identity(std::max(big_m, 1)),
                    {},
                    kind,
                    {},
                    {}};
  if (mixed_df)
    ji.notes.push_back("fits disagree on residual df; using the minimum (conservative)");

  Eigen::MatrixXd cov(big_m, big_m);
  for (int a = 0; a < j_ep; ++a)
    for (int p = 0; p < m; ++p)
      for (int b = 0; b < j_ep; ++b)
        for (int q = 0; q < m; ++q) {
          double v = 0.0;
          for (int g = 0; g < k; ++g) {
            const double ng = fits[0].group_sizes[g];
            v += contrasts.matrix(p, g) * contrasts.matrix(q, g) * meat[g](a, b) / (ng * ng);
          }
          cov(a * m + p, b * m + q) = v;
        }

  for (int a = 0; a < j_ep; ++a) {
    const double sigma2 = fits[a].residual_ss / fits[a].df;
    for (int p = 0; p < m; ++p) {
      const int idx = a * m + p;
      ji.estimates(idx) = contrasts.matrix.row(p) * fits[a].group_means;
      double classical = 0.0;
      for (int g = 0; g < k; ++g)
        classical += contrasts.matrix(p, g) * contrasts.matrix(p, g) /
                     fits[0].group_sizes[g];
      classical *= sigma2;
      const double sand = cov(idx, idx);
      if (!(sand > 0.0) || !(classical > 0.0))
        throw SingularDesignError("joint_inference: endpoint '" + fits[a].endpoint +
                                  "' has zero residual variance");
      ji.std_errors(idx) =
          std::sqrt(kind == CovarianceKind::sandwich ? sand : classical);
      ji.hypothesis_names.push_back(fits[a].endpoint + ", " + contrasts.names[p]);
      ji.endpoint_index.push_back(a);
    }
  }
  ji.t_stats = ji.estimates.cwiseQuotient(ji.std_errors);

  Eigen::MatrixXd corr(big_m, big_m);
  for (int r = 0; r < big_m; ++r)
    for (int c = 0; c < big_m; ++c) {
      double v = cov(r, c) / std::sqrt(cov(r, r) * cov(c, c));
      corr(r, c) = std::clamp(v, -1.0, 1.0);
    }
  for (int r = 0; r < big_m; ++r) corr(r, r) = 1.0;
  corr = 0.5 * (corr + corr.transpose()).eval();
  ji.corr = CorrelationMatrix(corr);
  return ji;
}

}  // namespace maxt

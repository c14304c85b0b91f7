#pragma once

#include <cmath>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "maxt/errors.hpp"

namespace maxt {

// Symmetric PSD matrix with unit diagonal. Houses both the specified
// endpoint correlation of a simulation scenario and the estimated
// correlation of a stacked set of test statistics.
class CorrelationMatrix {
 public:
  static constexpr double kPsdTol = 1e-10;

  CorrelationMatrix() : m_(Eigen::MatrixXd::Identity(1, 1)), min_eig_(1.0) {}

  explicit CorrelationMatrix(Eigen::MatrixXd entries) : m_(std::move(entries)) {
    validate();
  }

  static CorrelationMatrix identity(int dim) {
    return CorrelationMatrix(Eigen::MatrixXd::Identity(dim, dim));
  }

  static CorrelationMatrix equicorrelated(int dim, double rho) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(dim, dim, rho);
    m.diagonal().setOnes();
    return CorrelationMatrix(m);
  }

  int dim() const { return static_cast<int>(m_.rows()); }
  double operator()(int i, int j) const { return m_(i, j); }
  const Eigen::MatrixXd& entries() const { return m_; }
  double min_eigenvalue() const { return min_eig_; }

  // True when every off-diagonal entry equals the same rho (exactly, up to
  // one ulp-ish slack); used to route equicoordinate problems to the
  // latent-factor quadrature.
  bool is_equicorrelated(double* rho_out = nullptr) const {
    const int n = dim();
    if (n < 2) {
      if (rho_out) *rho_out = 0.0;
      return true;
    }
    const double rho = m_(0, 1);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (std::fabs(m_(i, j) - rho) > 1e-14) return false;
    if (rho_out) *rho_out = rho;
    return true;
  }

 private:
  void validate() {
    if (m_.rows() == 0 || m_.rows() != m_.cols())
      throw DimensionMismatchError("correlation matrix must be square and nonempty");
    const int n = dim();
    for (int i = 0; i < n; ++i) {
      if (std::fabs(m_(i, i) - 1.0) > 1e-12)
        throw std::invalid_argument("correlation matrix must have unit diagonal");
      m_(i, i) = 1.0;
      for (int j = 0; j < i; ++j) {
        if (std::fabs(m_(i, j) - m_(j, i)) > 1e-12)
          throw std::invalid_argument("correlation matrix must be symmetric");
        double v = 0.5 * (m_(i, j) + m_(j, i));
        if (std::fabs(v) > 1.0 + 1e-12)
          throw std::invalid_argument("correlation entries must lie in [-1, 1]");
        v = std::clamp(v, -1.0, 1.0);
        m_(i, j) = m_(j, i) = v;
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m_, Eigen::EigenvaluesOnly);
    min_eig_ = es.eigenvalues().minCoeff();
    if (min_eig_ < -kPsdTol)
      throw NotPsdError("correlation matrix is not positive semidefinite (min eigenvalue " +
                        std::to_string(min_eig_) + ")");
  }

  Eigen::MatrixXd m_;
  double min_eig_ = 0.0;
};

// Factor R = L * L^T. Positive definite input takes the Cholesky route;
// rank-deficient input falls back to the spectral factor with negative
// eigenvalues clipped to zero, columns ordered by decreasing eigenvalue
// and sign-normalized.
inline Eigen::MatrixXd factor_psd(const CorrelationMatrix& R) {
  const Eigen::MatrixXd& m = R.entries();
  const int n = R.dim();
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() == Eigen::Success) {
    Eigen::MatrixXd L = llt.matrixL();
    if ((L * L.transpose() - m).cwiseAbs().maxCoeff() < 1e-8) return L;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  Eigen::VectorXd ev = es.eigenvalues();  // ascending
  if (ev.minCoeff() < -CorrelationMatrix::kPsdTol)
    throw NotPsdError("factor_psd: matrix is not positive semidefinite");
  Eigen::MatrixXd L(n, n);
  for (int c = 0; c < n; ++c) {
    const int src = n - 1 - c;  // descending eigenvalue order
    const double lam = std::max(ev(src), 0.0);
    Eigen::VectorXd col = es.eigenvectors().col(src) * std::sqrt(lam);
    for (int r = 0; r < n; ++r) {
      if (std::fabs(col(r)) > 1e-14) {
        if (col(r) < 0.0) col = -col;
        break;
      }
    }
    L.col(c) = col;
  }
  return L;
}

}  // namespace maxt

#pragma once

#include <Eigen/Dense>

#include "maxt/correlation.hpp"
#include "maxt/rng.hpp"

namespace maxt {

// n i.i.d. rows from N(mu, D R D) with D = diag(sigma). Row-major draw
// order, so a fixed seed gives a bit-identical matrix.
inline Eigen::MatrixXd mvn_sample(long n, const Eigen::VectorXd& mu,
                                  const Eigen::VectorXd& sigma,
                                  const CorrelationMatrix& R, RandomStream& rng) {
  const int j = R.dim();
  if (n < 1) throw std::invalid_argument("mvn_sample: n must be >= 1");
  if (mu.size() != j || sigma.size() != j)
    throw DimensionMismatchError("mvn_sample: mu/sigma dimension does not match R");
  for (int i = 0; i < j; ++i)
    if (!(sigma(i) > 0.0))
      throw InvalidSigmaError("mvn_sample: sigma must be strictly positive");

  const Eigen::MatrixXd L = factor_psd(R);
  Eigen::MatrixXd out(n, j);
  Eigen::VectorXd z(j);
  for (long r = 0; r < n; ++r) {
    for (int c = 0; c < j; ++c) z(c) = rng.normal();
    out.row(r) = (mu + sigma.cwiseProduct(L * z)).transpose();
  }
  return out;
}

}  // namespace maxt

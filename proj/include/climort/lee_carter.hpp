#ifndef CLIMORT_LEE_CARTER_HPP
#define CLIMORT_LEE_CARTER_HPP

#include <Eigen/Dense>

#include "climort/common.hpp"

namespace climort {

// log m(x,t) = a(x) + b(x) kappa(t), with sum(b) = 1 and sum(kappa) = 0.
struct LcParams {
  Eigen::VectorXd a;      // N
  Eigen::VectorXd b;      // N
  Eigen::VectorXd kappa;  // T
};

struct LcFit {
  LcParams params;
  Eigen::MatrixXd fitted;  // N x T, log scale
};

// SVD estimation: a = row means; rank-1 SVD of the centered matrix gives
// kappa = d1 * v * sum(u) and b = u / sum(u). The SVD sign is fixed so that
// sum(u) > 0, and kappa is re-centered exactly with the shift absorbed in a.
LcFit fit_lc(const Eigen::MatrixXd& log_m);

}  // namespace climort

#endif

#ifndef CLIMORT_LI_LEE_HPP
#define CLIMORT_LI_LEE_HPP

#include <Eigen/Dense>
#include <vector>

#include "climort/lee_carter.hpp"

namespace climort {

// log m(x,t,i) = A(x,i) + B(x) K(t) + b(x,i) kappa(t,i).
// Loadings follow the Lee-Carter normalisation sum(B) = 1, sum(b(.,i)) = 1;
// sum(K) = 0 and sum(kappa(.,i)) = 0.
struct LlParams {
  Eigen::MatrixXd A;      // N x n
  Eigen::VectorXd B;      // N
  Eigen::VectorXd K;      // T
  Eigen::MatrixXd b;      // N x n
  Eigen::MatrixXd kappa;  // T x n
};

struct LlFit {
  LlParams params;
  std::vector<Eigen::MatrixXd> fitted;  // per region, N x T, log scale
};

// Product-ratio estimation: a Lee-Carter fit on the log geometric mean across
// regions (product term) plus one on each region's log ratio to it.
LlFit fit_ll(const std::vector<Eigen::MatrixXd>& log_m_per_region);

}  // namespace climort

#endif

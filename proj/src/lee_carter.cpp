#include "climort/lee_carter.hpp"

#include <cmath>

namespace climort {

LcFit fit_lc(const Eigen::MatrixXd& log_m) {
  const Eigen::Index N = log_m.rows();
  const Eigen::Index T = log_m.cols();
  if (N < 2 || T < 2) throw ModelError("Lee-Carter fit needs at least a 2x2 matrix");
  if (!log_m.allFinite()) throw ModelError("Lee-Carter fit: non-finite log mortality");

  LcFit fit;
  fit.params.a = log_m.rowwise().mean();
  const Eigen::MatrixXd centered = log_m.colwise() - fit.params.a;

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double d1 = svd.singularValues()[0];
  Eigen::VectorXd u = svd.matrixU().col(0);
  Eigen::VectorXd v = svd.matrixV().col(0);
  double usum = u.sum();
  if (usum < 0) {  // joint flip keeps u d1 v' invariant and makes sum(u) > 0
    u = -u;
    v = -v;
    usum = -usum;
  }
  if (std::abs(usum) < 1e-12)
    throw ModelError("Lee-Carter fit: degenerate loading sum (sum of u is zero)");

  fit.params.b = u / usum;
  fit.params.kappa = d1 * usum * v;

  // The row-centered matrix already gives sum(kappa) ~ 0; re-center exactly
  // and absorb the shift into a.
  const double shift = fit.params.kappa.mean();
  fit.params.kappa.array() -= shift;
  fit.params.a += shift * fit.params.b;

  fit.fitted = (fit.params.b * fit.params.kappa.transpose()).colwise() + fit.params.a;
  return fit;
}

}  // namespace climort

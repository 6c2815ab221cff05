#ifndef CLIMORT_DLNM_HPP
#define CLIMORT_DLNM_HPP

#include <Eigen/Dense>
#include <memory>
#include <optional>

#include "climort/splines.hpp"

namespace climort {

// Least-squares fit of one age group's partial residuals on a cross-basis.
struct DlnmFit {
  Eigen::VectorXd zeta;  // tensor coefficients, then HWD, CWD, intercept
  Eigen::MatrixXd cov;   // sigma2 * (X'X)^-1
  double sigma2 = 0.0;   // RSS / (n - p)
  std::shared_ptr<const CrossBasisSpec> spec;

  double hwd_coef() const { return zeta[spec->hwd_col()]; }
  double cwd_coef() const { return zeta[spec->cwd_col()]; }
  double intercept() const { return zeta[spec->intercept_col()]; }
};

// Reusable decomposition of a cross-basis design; backfitting solves against
// the same design once per age and iteration.
class DlnmSolver {
 public:
  explicit DlnmSolver(const CrossBasis& basis);

  Eigen::VectorXd solve(const Eigen::VectorXd& response) const;  // coefficients
  const Eigen::MatrixXd& xtx_inverse() const { return xtx_inv_; }
  const CrossBasis& basis() const { return basis_; }

 private:
  CrossBasis basis_;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_;
  Eigen::MatrixXd xtx_inv_;
};

DlnmFit fit_dlnm(const Eigen::VectorXd& partial_residuals, const CrossBasis& basis);
DlnmFit fit_dlnm(const Eigen::VectorXd& partial_residuals, const DlnmSolver& solver);

// p x n_draws matrix of parametric bootstrap draws zeta* ~ MVN(zeta, cov).
Eigen::MatrixXd bootstrap_coeffs(const DlnmFit& fit, int n_draws, std::uint64_t seed);

// Overall cumulative exposure-response relative to a reference UTCI; the
// default reference is the in-sample minimiser of the fitted curve.
struct ResponseCurve {
  Eigen::VectorXd utci;
  Eigen::VectorXd log_rr, rr, rr_lo, rr_hi;
  std::vector<bool> extrapolated;
  double reference = 0.0;
};

ResponseCurve overall_cumulative_curve(const DlnmFit& fit, const Eigen::VectorXd& grid,
                                       std::optional<double> reference = std::nullopt);

// RR profile across lags 0..L at a fixed exposure, relative to the reference.
struct LagSlice {
  Eigen::VectorXd lag;
  Eigen::VectorXd log_rr, rr, rr_lo, rr_hi;
  double utci = 0.0;
  double reference = 0.0;
};

LagSlice lag_slice(const DlnmFit& fit, double utci,
                   std::optional<double> reference = std::nullopt);

// In-sample minimiser of the cumulative curve (the minimum-risk UTCI).
double minimum_risk_utci(const DlnmFit& fit);

}  // namespace climort

#endif

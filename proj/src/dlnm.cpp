#include "climort/dlnm.hpp"

#include <cmath>
#include <sstream>

namespace climort {

namespace {

constexpr double kNormal975 = 1.959963984540054;  // Phi^-1(0.975)

std::string column_name(const CrossBasisSpec& spec, int col) {
  if (col == spec.hwd_col()) return "hwd";
  if (col == spec.cwd_col()) return "cwd";
  if (col == spec.intercept_col()) return "intercept";
  return "cb_" + std::to_string(col / spec.lag.dim() + 1) + "_" +
         std::to_string(col % spec.lag.dim() + 1);
}

}  // namespace

DlnmSolver::DlnmSolver(const CrossBasis& basis) : basis_(basis), qr_(basis.X) {
  const Eigen::Index n = basis_.X.rows();
  const Eigen::Index p = basis_.X.cols();
  if (n <= p)
    throw ModelError("DLNM fit needs more weeks than design columns (" + std::to_string(n) +
                     " <= " + std::to_string(p) + ")");
  qr_.setThreshold(1e-10);
  if (qr_.rank() < p) {
    std::ostringstream msg;
    msg << "DLNM design is rank deficient (rank " << qr_.rank() << " of " << p
        << "); dependent columns:";
    const auto perm = qr_.colsPermutation().indices();
    for (Eigen::Index i = qr_.rank(); i < p; ++i)
      msg << " " << column_name(basis_.spec, perm[i]);
    throw ModelError(msg.str());
  }
  // (X'X)^-1 = P R^-1 R^-T P' from the pivoted QR factor.
  const Eigen::MatrixXd R =
      qr_.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd Rinv =
      R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd inv_permuted = Rinv * Rinv.transpose();
  const auto perm = qr_.colsPermutation();
  xtx_inv_ = perm * inv_permuted * perm.transpose();
}

Eigen::VectorXd DlnmSolver::solve(const Eigen::VectorXd& response) const {
  return qr_.solve(response);
}

DlnmFit fit_dlnm(const Eigen::VectorXd& partial_residuals, const CrossBasis& basis) {
  return fit_dlnm(partial_residuals, DlnmSolver(basis));
}

DlnmFit fit_dlnm(const Eigen::VectorXd& partial_residuals, const DlnmSolver& solver) {
  const auto& X = solver.basis().X;
  if (partial_residuals.size() != X.rows())
    throw ModelError("DLNM fit: residual length does not match design rows");
  if (!partial_residuals.allFinite())
    throw ModelError("DLNM fit: non-finite partial residuals");

  DlnmFit fit;
  fit.spec = std::make_shared<CrossBasisSpec>(solver.basis().spec);
  fit.zeta = solver.solve(partial_residuals);
  const double rss = (partial_residuals - X * fit.zeta).squaredNorm();
  const double dof = static_cast<double>(X.rows() - X.cols());
  fit.sigma2 = rss / dof;
  fit.cov = fit.sigma2 * solver.xtx_inverse();
  return fit;
}

Eigen::MatrixXd bootstrap_coeffs(const DlnmFit& fit, int n_draws, std::uint64_t seed) {
  if (n_draws < 1) throw ModelError("bootstrap needs at least one draw");
  const Eigen::Index p = fit.zeta.size();

  // Symmetric PSD factor via the eigendecomposition; tiny negative
  // eigenvalues from roundoff are clamped, real ones are an error.
  const Eigen::MatrixXd sym = 0.5 * (fit.cov + fit.cov.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  const double scale = std::max(eig.eigenvalues().cwiseAbs().maxCoeff(), 1.0);
  Eigen::VectorXd lambda = eig.eigenvalues();
  for (Eigen::Index i = 0; i < p; ++i) {
    if (lambda[i] < -1e-10 * scale)
      throw ModelError("bootstrap covariance is not positive semi-definite");
    lambda[i] = std::max(lambda[i], 0.0);
  }
  const Eigen::MatrixXd factor = eig.eigenvectors() * lambda.cwiseSqrt().asDiagonal();

  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd draws(p, n_draws);
  for (int b = 0; b < n_draws; ++b) {
    Eigen::VectorXd z(p);
    for (Eigen::Index i = 0; i < p; ++i) z[i] = normal(rng);
    draws.col(b) = fit.zeta + factor * z;
  }
  return draws;
}

double minimum_risk_utci(const DlnmFit& fit) {
  const auto& spec = *fit.spec;
  const double lo = spec.exposure.boundary_min();
  const double hi = spec.exposure.boundary_max();
  const int n = 1001;
  double best_u = lo, best_val = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const double u = lo + (hi - lo) * i / (n - 1);
    const double val = spec.cumulative_coords(u).dot(fit.zeta);
    if (val < best_val) {
      best_val = val;
      best_u = u;
    }
  }
  return best_u;
}

ResponseCurve overall_cumulative_curve(const DlnmFit& fit, const Eigen::VectorXd& grid,
                                       std::optional<double> reference) {
  const auto& spec = *fit.spec;
  ResponseCurve curve;
  curve.reference = reference.value_or(minimum_risk_utci(fit));
  curve.utci = grid;
  const Eigen::Index n = grid.size();
  curve.log_rr.resize(n);
  curve.rr.resize(n);
  curve.rr_lo.resize(n);
  curve.rr_hi.resize(n);
  curve.extrapolated.resize(n);
  const Eigen::VectorXd ref_coords = spec.cumulative_coords(curve.reference);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = grid[i];
    curve.extrapolated[i] = u < spec.exposure.boundary_min() || u > spec.exposure.boundary_max();
    const Eigen::VectorXd delta = spec.cumulative_coords(u) - ref_coords;
    const double lrr = delta.dot(fit.zeta);
    const double se = std::sqrt(std::max(0.0, double(delta.transpose() * fit.cov * delta)));
    curve.log_rr[i] = lrr;
    curve.rr[i] = std::exp(lrr);
    curve.rr_lo[i] = std::exp(lrr - kNormal975 * se);
    curve.rr_hi[i] = std::exp(lrr + kNormal975 * se);
  }
  return curve;
}

LagSlice lag_slice(const DlnmFit& fit, double utci, std::optional<double> reference) {
  const auto& spec = *fit.spec;
  LagSlice slice;
  slice.utci = utci;
  slice.reference = reference.value_or(minimum_risk_utci(fit));
  const int L = spec.lag_max;
  slice.lag.resize(L + 1);
  slice.log_rr.resize(L + 1);
  slice.rr.resize(L + 1);
  slice.rr_lo.resize(L + 1);
  slice.rr_hi.resize(L + 1);
  for (int l = 0; l <= L; ++l) {
    const Eigen::VectorXd delta = spec.lag_coords(utci, l) - spec.lag_coords(slice.reference, l);
    const double lrr = delta.dot(fit.zeta);
    const double se = std::sqrt(std::max(0.0, double(delta.transpose() * fit.cov * delta)));
    slice.lag[l] = l;
    slice.log_rr[l] = lrr;
    slice.rr[l] = std::exp(lrr);
    slice.rr_lo[l] = std::exp(lrr - kNormal975 * se);
    slice.rr_hi[l] = std::exp(lrr + kNormal975 * se);
  }
  return slice;
}

}  // namespace climort

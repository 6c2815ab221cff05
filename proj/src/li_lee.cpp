#include "climort/li_lee.hpp"

namespace climort {

LlFit fit_ll(const std::vector<Eigen::MatrixXd>& log_m_per_region) {
  const int n = static_cast<int>(log_m_per_region.size());
  if (n < 2) throw ModelError("Li-Lee fit needs at least 2 regions");
  const Eigen::Index N = log_m_per_region.front().rows();
  const Eigen::Index T = log_m_per_region.front().cols();
  for (const auto& m : log_m_per_region)
    if (m.rows() != N || m.cols() != T)
      throw ModelError("Li-Lee fit: region matrices must share one shape");

  // log of the geometric mean across regions
  Eigen::MatrixXd log_p = Eigen::MatrixXd::Zero(N, T);
  for (const auto& m : log_m_per_region) log_p += m;
  log_p /= static_cast<double>(n);

  const LcFit product = fit_lc(log_p);

  LlFit fit;
  fit.params.B = product.params.b;
  fit.params.K = product.params.kappa;
  fit.params.A.resize(N, n);
  fit.params.b.resize(N, n);
  fit.params.kappa.resize(T, n);
  fit.fitted.reserve(n);
  for (int i = 0; i < n; ++i) {
    const Eigen::MatrixXd log_r = log_m_per_region[i] - log_p;
    const LcFit ratio = fit_lc(log_r);
    fit.params.A.col(i) = product.params.a + ratio.params.a;
    fit.params.b.col(i) = ratio.params.b;
    fit.params.kappa.col(i) = ratio.params.kappa;
    fit.fitted.push_back(product.fitted + ratio.fitted);
  }
  return fit;
}

}  // namespace climort

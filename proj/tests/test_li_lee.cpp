#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "climort/li_lee.hpp"

using namespace climort;

namespace {

Eigen::MatrixXd random_logm(int N, int T, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(N, T);
  for (int x = 0; x < N; ++x)
    for (int t = 0; t < T; ++t)
      m(x, t) = -7.0 + x + 0.3 * std::sin(0.2 * t) + 0.2 * normal(rng);
  return m;
}

double correlation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::VectorXd ca = a.array() - a.mean();
  const Eigen::VectorXd cb = b.array() - b.mean();
  return ca.dot(cb) / (ca.norm() * cb.norm());
}

}  // namespace

TEST_CASE("identical regions leave nothing region-specific") {
  const Eigen::MatrixXd m = random_logm(4, 120, 1);
  const LlFit fit = fit_ll({m, m, m});
  for (int i = 0; i < 3; ++i) {
    CHECK((fit.params.b.col(i) * fit.params.kappa.col(i).transpose()).cwiseAbs().maxCoeff() <
          1e-10);
    CHECK((fit.fitted[i] - fit.fitted[0]).cwiseAbs().maxCoeff() < 1e-10);
  }
  // the common part is the plain Lee-Carter fit of the shared matrix
  const LcFit lc = fit_lc(m);
  CHECK((fit.params.K - lc.params.kappa).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((fit.params.B - lc.params.b).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("two regions separated by a constant share K and split A by half the shift") {
  const Eigen::MatrixXd m1 = random_logm(4, 100, 2);
  const double c = 0.6;
  const Eigen::MatrixXd m2 = m1.array() + c;
  const LlFit fit = fit_ll({m1, m2});

  const LcFit lc1 = fit_lc(m1);
  CHECK((fit.params.K - lc1.params.kappa).cwiseAbs().maxCoeff() < 1e-8);
  const Eigen::VectorXd gap = fit.params.A.col(1) - fit.params.A.col(0);
  CHECK((gap.array() - c).abs().maxCoeff() < 1e-10);
  for (int i = 0; i < 2; ++i)
    CHECK((fit.params.b.col(i) * fit.params.kappa.col(i).transpose()).cwiseAbs().maxCoeff() <
          1e-10);
  // geometric-mean split puts the product intercept at row means of m1 + c/2
  // and the ratio intercepts at -c/2 and +c/2
  CHECK((fit.params.A.col(0) - m1.rowwise().mean()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("planted common trend is recovered") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int N = 4, T = 200, n = 3;
  Eigen::VectorXd B(N), K(T);
  for (int x = 0; x < N; ++x) B[x] = 1.0 + x;
  B /= B.sum();
  for (int t = 0; t < T; ++t) K[t] = 3.0 - 6.0 * t / (T - 1);
  K.array() -= K.mean();
  std::vector<Eigen::MatrixXd> logs;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd kap(T);
    for (int t = 0; t < T; ++t) kap[t] = 0.3 * std::sin(0.7 * t + i);  // near-orthogonal to K
    kap.array() -= kap.mean();
    Eigen::MatrixXd m = (B * K.transpose()) + 0.2 * (B * kap.transpose());
    m.colwise() += Eigen::VectorXd::Constant(N, -6.0 + 0.1 * i);
    for (int x = 0; x < N; ++x)
      for (int t = 0; t < T; ++t) m(x, t) += 0.02 * normal(rng);
    logs.push_back(m);
  }
  const LlFit fit = fit_ll(logs);
  CHECK(std::abs(correlation(fit.params.K, K)) > 0.99);
}

TEST_CASE("decomposition identities hold exactly") {
  std::vector<Eigen::MatrixXd> logs{random_logm(3, 80, 10), random_logm(3, 80, 11),
                                    random_logm(3, 80, 12)};
  // log p is the mean of the logs; ratios sum to zero
  Eigen::MatrixXd log_p = (logs[0] + logs[1] + logs[2]) / 3.0;
  Eigen::MatrixXd ratio_sum = Eigen::MatrixXd::Zero(3, 80);
  for (const auto& m : logs) ratio_sum += m - log_p;
  CHECK(ratio_sum.cwiseAbs().maxCoeff() < 1e-12);

  // fitted tensor = product fit + ratio fit in log scale
  const LlFit fit = fit_ll(logs);
  const LcFit product = fit_lc(log_p);
  for (int i = 0; i < 3; ++i) {
    const LcFit ratio = fit_lc(logs[i] - log_p);
    CHECK((fit.fitted[i] - (product.fitted + ratio.fitted)).cwiseAbs().maxCoeff() < 1e-10);
  }

  // constraints
  CHECK(std::abs(fit.params.K.sum()) < 1e-10);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(fit.params.kappa.col(i).sum()) < 1e-10);
}

TEST_CASE("fewer than two regions is an error") {
  CHECK_THROWS_AS(fit_ll({random_logm(3, 50, 1)}), ModelError);
}

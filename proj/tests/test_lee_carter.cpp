#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "climort/lee_carter.hpp"

using namespace climort;

namespace {

struct Rank1 {
  Eigen::VectorXd a, b, kappa;
  Eigen::MatrixXd log_m;
};

Rank1 make_rank1(int N, int T, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Rank1 r;
  r.a.resize(N);
  r.b.resize(N);
  r.kappa.resize(T);
  for (int x = 0; x < N; ++x) {
    r.a[x] = -8.0 + x;
    r.b[x] = 0.5 + std::abs(normal(rng));
  }
  r.b /= r.b.sum();
  for (int t = 0; t < T; ++t) r.kappa[t] = 2.0 - 4.0 * t / (T - 1) + 0.1 * normal(rng);
  r.kappa.array() -= r.kappa.mean();
  r.log_m = (r.b * r.kappa.transpose()).colwise() + r.a;
  return r;
}

// power iteration for the leading singular triple, independent of Eigen's SVD
double leading_singular_value(const Eigen::MatrixXd& m) {
  Eigen::VectorXd v = Eigen::VectorXd::Ones(m.cols()).normalized();
  for (int it = 0; it < 2000; ++it) v = (m.transpose() * (m * v)).normalized();
  return (m * v).norm();
}

}  // namespace

TEST_CASE("rank-1 input is recovered exactly") {
  const Rank1 truth = make_rank1(4, 260, 1);
  const LcFit fit = fit_lc(truth.log_m);
  CHECK((fit.params.a - truth.a).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((fit.params.b - truth.b).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((fit.params.kappa - truth.kappa).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((fit.fitted - truth.log_m).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("identification constraints hold to 1e-10") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(5, 120);
  for (int x = 0; x < 5; ++x)
    for (int t = 0; t < 120; ++t) m(x, t) = -6.0 + 0.5 * x + normal(rng);
  const LcFit fit = fit_lc(m);
  CHECK(std::abs(fit.params.b.sum() - 1.0) < 1e-10);
  CHECK(std::abs(fit.params.kappa.sum()) < 1e-10);
  // residual row means vanish
  const Eigen::MatrixXd resid = m - fit.fitted;
  CHECK(resid.rowwise().mean().cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("constant matrix gives zero time effect") {
  const Eigen::MatrixXd m = Eigen::MatrixXd::Constant(3, 50, -4.2);
  const LcFit fit = fit_lc(m);
  CHECK((fit.params.a.array() + 4.2).abs().maxCoeff() < 1e-12);
  CHECK((fit.params.b * fit.params.kappa.transpose()).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((fit.fitted.array() + 4.2).abs().maxCoeff() < 1e-10);
}

TEST_CASE("noisy rank-1 is reconstructed within the Eckart-Young bound") {
  const int N = 4, T = 260;
  const double sigma = 0.01;
  const Rank1 truth = make_rank1(N, T, 3);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> noise(0.0, sigma);
  Eigen::MatrixXd noisy = truth.log_m;
  for (int x = 0; x < N; ++x)
    for (int t = 0; t < T; ++t) noisy(x, t) += noise(rng);
  const LcFit fit = fit_lc(noisy);
  const double err = (fit.fitted - truth.log_m).norm();
  CHECK(err < 2.0 * sigma * std::sqrt(double(N) * T));
}

TEST_CASE("rank-1 reconstruction is optimal against a power-iteration oracle") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::MatrixXd m(3, 15);
    for (int x = 0; x < 3; ++x)
      for (int t = 0; t < 15; ++t) m(x, t) = normal(rng);
    const LcFit fit = fit_lc(m);
    const Eigen::MatrixXd centered = m.colwise() - m.rowwise().mean();
    const double best = leading_singular_value(centered);
    const double frob2 = centered.squaredNorm();
    const double achieved =
        (centered - fit.params.b * fit.params.kappa.transpose()).squaredNorm();
    CHECK(achieved == doctest::Approx(frob2 - best * best).epsilon(1e-6));
  }
}

TEST_CASE("invalid inputs are rejected") {
  CHECK_THROWS_AS(fit_lc(Eigen::MatrixXd::Zero(1, 10)), ModelError);
  CHECK_THROWS_AS(fit_lc(Eigen::MatrixXd::Zero(10, 1)), ModelError);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(3, 10);
  bad(1, 4) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(fit_lc(bad), ModelError);
}

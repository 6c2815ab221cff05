#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "climort/forecast.hpp"
#include "climort/synth.hpp"

using namespace climort;

namespace {

Eigen::VectorXd random_walk(int n, double drift, double sd, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sd);
  Eigen::VectorXd y(n);
  y[0] = 0.0;
  for (int t = 1; t < n; ++t) y[t] = y[t - 1] + drift + normal(rng);
  return y;
}

FittedModel default_lc_model(SynthData& data, std::uint64_t seed = 2024) {
  SynthConfig cfg;
  cfg.seed = seed;
  data = generate_synthetic(cfg);
  return backfit_lc(data.panel, data.climate, BackfitConfig{});
}

}  // namespace

TEST_CASE("random walk drift is recovered within 3 standard errors") {
  const double d = -0.02;
  const Eigen::VectorXd y = random_walk(260, d, 0.1, 1);
  const IndexModel model = fit_index_model(y);
  CHECK(std::abs(model.drift - d) < 3.0 * model.drift_se);
  CHECK(model.sigma2 > 0);
  CHECK_FALSE(model.fallback);
}

TEST_CASE("white-noise drift intervals cover zero in at least 90 percent of runs") {
  int covered = 0;
  const int reps = 200;
  for (int rep = 0; rep < reps; ++rep) {
    std::mt19937_64 rng(9000 + rep);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd y(200);
    for (int t = 0; t < 200; ++t) y[t] = normal(rng);
    const IndexModel model = fit_index_model(y);
    if (std::abs(model.drift) <= 1.959963984540054 * model.drift_se) ++covered;
  }
  CHECK(covered >= static_cast<int>(0.90 * reps));
}

TEST_CASE("degenerate series are rejected") {
  CHECK_THROWS_AS(fit_index_model(Eigen::VectorXd::Constant(100, 3.0)), ModelError);
  CHECK_THROWS_AS(fit_index_model(Eigen::VectorXd::LinSpaced(30, 0.0, 1.0)), ModelError);
}

TEST_CASE("the selected model is stationary and candidates are recorded") {
  const Eigen::VectorXd y = random_walk(260, 0.01, 0.2, 3);
  const IndexModel model = fit_index_model(y);
  CHECK(model.candidates.size() >= 4);
  for (const auto& cand : model.candidates)
    if (cand.name == model.name) CHECK(cand.stationary);
}

TEST_CASE("path simulation") {
  const Eigen::VectorXd y = random_walk(300, 0.05, 0.3, 4);
  IndexModel model = fit_index_model(y);

  SUBCASE("zero innovation variance collapses to the drift line") {
    IndexModel frozen = model;
    frozen.sigma2 = 0.0;
    const Eigen::MatrixXd paths = simulate_index_paths(frozen, 20, 25, 7);
    const Eigen::VectorXd point = index_point_forecast(frozen, 20);
    for (int b = 0; b < 25; ++b)
      CHECK((paths.col(b) - point).cwiseAbs().maxCoeff() < 1e-12);
  }

  SUBCASE("random-walk variance grows linearly with horizon") {
    IndexModel rw;
    rw.name = "rw_drift";
    rw.drift = 0.01;
    rw.sigma2 = 0.09;
    rw.y_last = 1.0;
    rw.diff_tail = {0.0};
    const int B = 10000;
    const Eigen::MatrixXd paths = simulate_index_paths(rw, 30, B, 11);
    const Eigen::VectorXd point = index_point_forecast(rw, 30);
    for (const int h : {5, 15, 30}) {
      const Eigen::ArrayXd dev = paths.row(h - 1).array() - point[h - 1];
      const double var = (dev - dev.mean()).square().sum() / (B - 1);
      CHECK(var == doctest::Approx(h * rw.sigma2).epsilon(0.10));
    }
  }

  SUBCASE("seeded determinism") {
    const Eigen::MatrixXd a = simulate_index_paths(model, 10, 50, 21);
    const Eigen::MatrixXd b = simulate_index_paths(model, 10, 50, 21);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("percentile helper interpolates order statistics") {
  std::vector<double> v{4.0, 1.0, 3.0, 2.0};
  CHECK(percentile(v, 0.0) == 1.0);
  CHECK(percentile(v, 1.0) == 4.0);
  CHECK(percentile(v, 0.5) == doctest::Approx(2.5));
  CHECK_THROWS_AS(percentile({}, 0.5), ModelError);
}

TEST_CASE("annualisation sums weekly rates over 52") {
  Eigen::VectorXd constant = Eigen::VectorXd::Constant(104, 0.003);
  const Eigen::VectorXd annual = annualize(constant);
  REQUIRE(annual.size() == 2);
  CHECK(annual[0] == doctest::Approx(0.003).epsilon(1e-12));

  Eigen::VectorXd spike = Eigen::VectorXd::Zero(52);
  spike[13] = 52.0 * 0.001;
  CHECK(annualize(spike)[0] == doctest::Approx(0.001).epsilon(1e-12));

  CHECK_THROWS_AS(annualize(Eigen::VectorXd::Zero(60)), InputError);
}

TEST_CASE("projection engine") {
  SynthData data;
  const FittedModel model = default_lc_model(data);

  SUBCASE("zero variance collapses the fan onto the point forecast") {
    ProjectionOptions opts;
    opts.n_paths = 200;
    opts.seed = 5;
    opts.zero_variance = true;
    const ProjectionFan fan = project(model, data.scenario_baseline, opts);
    for (std::size_t i = 0; i < fan.mean.size(); ++i)
      for (std::size_t x = 0; x < fan.mean[i].size(); ++x) {
        CHECK((fan.mean[i][x] - fan.point[i][x]).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((fan.lo[i][x] - fan.point[i][x]).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((fan.hi[i][x] - fan.point[i][x]).cwiseAbs().maxCoeff() < 1e-10);
      }
  }

  SUBCASE("fans are ordered and deterministic under the seed") {
    ProjectionOptions opts;
    opts.n_paths = 300;
    opts.seed = 6;
    const ProjectionFan fan = project(model, data.scenario_baseline, opts);
    for (std::size_t i = 0; i < fan.mean.size(); ++i)
      for (std::size_t x = 0; x < fan.mean[i].size(); ++x)
        for (int k = 0; k < fan.n_weeks; ++k) {
          CHECK(fan.lo[i][x][k] <= fan.mean[i][x][k] + 1e-12);
          CHECK(fan.mean[i][x][k] <= fan.hi[i][x][k] + 1e-12);
        }
    const ProjectionFan again = project(model, data.scenario_baseline, opts);
    CHECK((fan.mean[2][3] - again.mean[2][3]).cwiseAbs().maxCoeff() == 0.0);

    // annual aggregation happens on paths: the annual band is narrower than
    // the annualised weekly band because weekly extremes do not align
    const Eigen::VectorXd weekly_lo_annualised = annualize(fan.lo[2][3]);
    CHECK(fan.annual_lo[2][3][0] > weekly_lo_annualised[0]);
  }

  SUBCASE("path-mean log rates agree with the point forecast within 3 MC SE") {
    ProjectionOptions opts;
    opts.n_paths = 4000;
    opts.seed = 7;
    const ProjectionFan fan = project(model, data.scenario_baseline, opts);
    int outside = 0, total = 0;
    for (std::size_t i = 0; i < fan.mean_log.size(); ++i)
      for (std::size_t x = 0; x < fan.mean_log[i].size(); ++x)
        for (int k = 0; k < fan.n_weeks; k += 13) {
          const double gap = std::abs(fan.mean_log[i][x][k] - fan.point_log[i][x][k]);
          outside += gap > 3.0 * fan.se_log[i][x][k];
          ++total;
        }
    // 3-sigma exceptions are rare but not impossible
    CHECK(outside <= std::max(1, total / 50));
  }

  SUBCASE("a uniformly warmer scenario raises summer and lowers winter mortality") {
    ProjectionOptions opts;
    opts.n_paths = 500;
    opts.seed = 8;
    const ProjectionFan base = project(model, data.scenario_baseline, opts);
    std::vector<DailyClimateSeries> warm;
    for (const auto& s : data.scenario_baseline) warm.push_back(s.shifted(3.0));
    const ProjectionFan shifted = project(model, warm, opts);
    // aggregate age 85+ across regions and years
    double summer_base = 0, summer_warm = 0, winter_base = 0, winter_warm = 0;
    for (std::size_t i = 0; i < base.mean.size(); ++i)
      for (int k = 0; k < base.n_weeks; ++k) {
        const int week = k % 52 + 1;
        if (week >= 24 && week <= 34) {
          summer_base += base.mean[i][3][k];
          summer_warm += shifted.mean[i][3][k];
        }
        if (week <= 6 || week >= 48) {
          winter_base += base.mean[i][3][k];
          winter_warm += shifted.mean[i][3][k];
        }
      }
    CHECK(summer_warm > summer_base);
    CHECK(winter_warm < winter_base);
  }

  SUBCASE("scenario gaps are errors") {
    std::vector<DailyClimateSeries> broken;
    for (std::size_t i = 0; i + 1 < data.scenario_baseline.size(); ++i)
      broken.push_back(data.scenario_baseline[i]);
    CHECK_THROWS_AS(project(model, broken, ProjectionOptions{}), InputError);
  }
}

TEST_CASE("climate loading") {
  SynthData data;
  const FittedModel model = default_lc_model(data, 77);
  const ClimateLoadingSeries loading = climate_loading(model);

  SUBCASE("identity theta = 1 - exp(-S) against the fitted ratio, cell-exact") {
    for (int i = 0; i < model.n_regions(); ++i) {
      const Eigen::MatrixXd S = model.climate_log(i);
      const Eigen::MatrixXd total = model.fitted_log(i).array().exp();
      const Eigen::MatrixXd stochastic = model.stochastic_log(i).array().exp();
      for (int x = 0; x < model.n_ages(); ++x)
        for (int t = 0; t < model.n_weeks(); ++t) {
          const double theta = loading.theta[i][x][t];
          const double ratio = (total(x, t) - stochastic(x, t)) / total(x, t);
          CHECK(std::abs(theta - ratio) < 1e-12);
          CHECK(std::abs(theta - (1.0 - std::exp(-S(x, t)))) < 1e-12);
          CHECK(theta < 1.0);
        }
    }
  }

  SUBCASE("a doubled mortality ratio means a loading of one half") {
    // exp(S) = 2  =>  theta = 1 - 1/2
    CHECK(1.0 - std::exp(-std::log(2.0)) == doctest::Approx(0.5).epsilon(1e-15));
    FittedModel doubled = model;
    for (auto& per_region : doubled.zeta)
      for (auto& z : per_region) {
        z.setZero();
        z[doubled.basis[0].spec.intercept_col()] = std::log(2.0);
      }
    const ClimateLoadingSeries half = climate_loading(doubled);
    CHECK(half.theta[0][0][0] == doctest::Approx(0.5).epsilon(1e-12));
  }

  SUBCASE("zero climate component gives zero loading") {
    FittedModel null = model;
    for (auto& per_region : null.zeta)
      for (auto& z : per_region) z.setZero();
    const ClimateLoadingSeries zero = climate_loading(null);
    CHECK(zero.theta[0][0].cwiseAbs().maxCoeff() == 0.0);
    CHECK(zero.annual[0][0].cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("annualised loadings stay in a plausible band (diagnostic)") {
    int in_band = 0, total = 0;
    double worst = 0.0;
    for (int i = 0; i < model.n_regions(); ++i)
      for (int x = 0; x < model.n_ages(); ++x)
        for (int y = 0; y < loading.annual[i][x].size(); ++y) {
          const double v = loading.annual[i][x][y];
          in_band += (v >= -0.04 && v <= 0.06);
          ++total;
          worst = std::max(worst, std::abs(v));
          CHECK(std::isfinite(v));
        }
    MESSAGE("annual loadings in [-4%, 6%]: " << in_band << "/" << total
                                             << ", worst |annual| = " << worst);
  }
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "climort/evaluate.hpp"
#include "climort/synth.hpp"

using namespace climort;

namespace {

// Cheating reference model: predicts the held-out observations themselves.
class PerfectForesight : public CvModel {
 public:
  explicit PerfectForesight(const MortalityPanel& full) : full_(full) {}
  std::string name() const override { return "perfect"; }
  void fit(const MortalityPanel&, const std::vector<DailyClimateSeries>&) override {}
  std::vector<Eigen::MatrixXd> predict(int first_week, int horizon,
                                       const std::vector<DailyClimateSeries>&) override {
    std::vector<Eigen::MatrixXd> out;
    for (int i = 0; i < full_.n_regions(); ++i) {
      Eigen::MatrixXd m(full_.n_ages(), horizon);
      for (int x = 0; x < full_.n_ages(); ++x)
        for (int h = 0; h < horizon; ++h) m(x, h) = full_.rate(x, first_week + h, i);
      out.push_back(m);
    }
    return out;
  }

 private:
  MortalityPanel full_;
};

class ConstantPredictor : public CvModel {
 public:
  explicit ConstantPredictor(double value) : value_(value) {}
  std::string name() const override { return "constant"; }
  void fit(const MortalityPanel& panel, const std::vector<DailyClimateSeries>&) override {
    n_regions_ = panel.n_regions();
    n_ages_ = panel.n_ages();
  }
  std::vector<Eigen::MatrixXd> predict(int, int horizon,
                                       const std::vector<DailyClimateSeries>&) override {
    return std::vector<Eigen::MatrixXd>(
        n_regions_, Eigen::MatrixXd::Constant(n_ages_, horizon, value_));
  }

 private:
  double value_;
  int n_regions_ = 0, n_ages_ = 0;
};

// Records the panel length seen at each fit call.
class LeakProbe : public CvModel {
 public:
  std::string name() const override { return "probe"; }
  void fit(const MortalityPanel& panel, const std::vector<DailyClimateSeries>& climate) override {
    train_weeks.push_back(panel.n_weeks());
    climate_days.push_back(climate.front().day_end());
    n_regions_ = panel.n_regions();
    n_ages_ = panel.n_ages();
  }
  std::vector<Eigen::MatrixXd> predict(int, int horizon,
                                       const std::vector<DailyClimateSeries>&) override {
    return std::vector<Eigen::MatrixXd>(n_regions_,
                                        Eigen::MatrixXd::Constant(n_ages_, horizon, 1.0));
  }
  std::vector<int> train_weeks;
  std::vector<int> climate_days;

 private:
  int n_regions_ = 0, n_ages_ = 0;
};

}  // namespace

TEST_CASE("plan feasibility") {
  CvPlan plan;  // 102 / 8 / 78 / 10 folds
  CHECK_NOTHROW(validate_plan(plan, 260));
  CHECK(plan.train_end(1) == 102);
  CHECK(plan.train_end(10) == 174);
  CHECK_THROWS_WITH_AS(validate_plan(plan, 200), doctest::Contains("252 > T = 200"),
                       InputError);

  CvPlan literal = plan;
  literal.convention = CvPlan::FoldConvention::Equation;
  CHECK(literal.train_end(1) == 110);
  CHECK(literal.train_end(10) == 182);
  CHECK_NOTHROW(validate_plan(literal, 260));

  CvPlan bad = plan;
  bad.step = 0;
  CHECK_THROWS_AS(validate_plan(bad, 260), InputError);
}

TEST_CASE("perfect foresight scores zero and a constant matches the oracle") {
  SynthConfig cfg;
  cfg.seed = 404;
  const SynthData data = generate_synthetic(cfg);
  CvPlan plan;
  plan.folds = 3;  // keep the harness quick

  std::vector<std::unique_ptr<CvModel>> models;
  models.push_back(std::make_unique<PerfectForesight>(data.panel));
  const double c = 0.002;
  models.push_back(std::make_unique<ConstantPredictor>(c));
  const MaeTable table = run_cv(data.panel, data.climate, models, plan);

  for (int i = 0; i < data.panel.n_regions(); ++i)
    for (int x = 0; x < data.panel.n_ages(); ++x) {
      CHECK(table.get(data.panel.regions()[i], "perfect", data.panel.ages()[x].label) == 0.0);

      // brute-force mean absolute deviation oracle
      double sum = 0.0;
      for (int fold = 1; fold <= plan.folds; ++fold) {
        const int train_end = plan.train_end(fold);
        for (int h = 1; h <= plan.horizon; ++h)
          sum += std::abs(data.panel.rate(x, train_end + h, i) - c);
      }
      const double oracle = 100.0 * sum / (plan.folds * plan.horizon);
      const double got =
          table.get(data.panel.regions()[i], "constant", data.panel.ages()[x].label);
      CHECK(std::abs(got - oracle) < 1e-12);
    }
}

TEST_CASE("folds pass truncated data only") {
  SynthConfig cfg;
  cfg.seed = 405;
  const SynthData data = generate_synthetic(cfg);
  CvPlan plan;
  plan.folds = 4;
  auto probe = std::make_unique<LeakProbe>();
  LeakProbe* raw = probe.get();
  std::vector<std::unique_ptr<CvModel>> models;
  models.push_back(std::move(probe));
  run_cv(data.panel, data.climate, models, plan);
  REQUIRE(raw->train_weeks.size() == 4);
  for (int fold = 1; fold <= 4; ++fold) {
    CHECK(raw->train_weeks[fold - 1] == plan.train_end(fold));
    CHECK(raw->climate_days[fold - 1] == 7 * plan.train_end(fold));
  }
}

TEST_CASE("mae is invariant to region order") {
  SynthConfig cfg;
  cfg.seed = 406;
  const SynthData data = generate_synthetic(cfg);
  CvPlan plan;
  plan.folds = 2;

  auto run_for = [&](const MortalityPanel& panel,
                     const std::vector<DailyClimateSeries>& climate) {
    std::vector<std::unique_ptr<CvModel>> models;
    models.push_back(make_cv_model("baseline_lc", BackfitConfig{}));
    return run_cv(panel, climate, models, plan);
  };
  const MaeTable forward = run_for(data.panel, data.climate);

  // rebuild the panel with regions reversed
  std::vector<std::string> regions(data.panel.regions().rbegin(), data.panel.regions().rend());
  std::vector<Eigen::MatrixXd> rates, pops;
  std::vector<DailyClimateSeries> climate;
  for (int i = data.panel.n_regions() - 1; i >= 0; --i) {
    rates.push_back(data.panel.rates(i));
    Eigen::MatrixXd pop(data.panel.n_ages(), data.panel.n_years());
    for (int x = 0; x < data.panel.n_ages(); ++x)
      for (int y = 1; y <= data.panel.n_years(); ++y) pop(x, y - 1) = data.panel.population(x, y, i);
    pops.push_back(pop);
    climate.push_back(data.climate[i]);
  }
  const MortalityPanel reversed =
      MortalityPanel::from_rates(data.panel.ages(), regions, data.panel.start_year(), rates, pops);
  const MaeTable backward = run_for(reversed, climate);

  for (int i = 0; i < data.panel.n_regions(); ++i)
    for (int x = 0; x < data.panel.n_ages(); ++x) {
      const auto& region = data.panel.regions()[i];
      const auto& age = data.panel.ages()[x].label;
      CHECK(forward.get(region, "baseline_lc", age) ==
            doctest::Approx(backward.get(region, "baseline_lc", age)).epsilon(1e-12));
    }
}

TEST_CASE("the DLNM variant beats the baseline for climate-sensitive ages") {
  SynthConfig cfg;
  cfg.seed = 407;
  const SynthData data = generate_synthetic(cfg);
  CvPlan plan;  // full default plan on T=260
  std::vector<std::unique_ptr<CvModel>> models;
  models.push_back(make_cv_model("baseline_lc", BackfitConfig{}));
  models.push_back(make_cv_model("dlnm_lc", BackfitConfig{}));
  const MaeTable table = run_cv(data.panel, data.climate, models, plan);
  for (int x = 0; x < data.panel.n_ages(); ++x) {
    if (!data.climate_sensitive[x]) continue;
    double baseline = 0.0, dlnm = 0.0;
    for (const auto& region : data.panel.regions()) {
      baseline += table.get(region, "baseline_lc", data.panel.ages()[x].label);
      dlnm += table.get(region, "dlnm_lc", data.panel.ages()[x].label);
    }
    CHECK(dlnm < baseline);
  }
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "climort/climate_features.hpp"

using namespace climort;

namespace {

DailyClimateSeries series_from_max(const std::vector<double>& maxima, int day_start) {
  std::vector<double> mean(maxima.size()), mn(maxima.size());
  for (std::size_t i = 0; i < maxima.size(); ++i) {
    mean[i] = maxima[i] - 5.0;
    mn[i] = maxima[i] - 10.0;
  }
  return DailyClimateSeries("R", day_start, mean, mn, maxima);
}

DailyClimateSeries series_from_min(const std::vector<double>& minima, int day_start) {
  std::vector<double> mean(minima.size()), mx(minima.size());
  for (std::size_t i = 0; i < minima.size(); ++i) {
    mean[i] = minima[i] + 5.0;
    mx[i] = minima[i] + 10.0;
  }
  return DailyClimateSeries("R", day_start, mean, minima, mx);
}

// Independent sliding-window oracle over raw day vectors.
std::pair<int, int> brute_force_waves(const std::vector<double>& mx,
                                      const std::vector<double>& mn, int day_start, int week) {
  int hwd = 0, cwd = 0;
  for (int day = 7 * (week - 1) + 1; day <= 7 * week; ++day) {
    bool hot = true, cold = true;
    for (int back = 0; back <= 2; ++back) {
      const std::size_t idx = static_cast<std::size_t>(day - back - day_start);
      hot = hot && mx[idx] > 32.0;
      cold = cold && mn[idx] < -13.0;
    }
    hwd += hot ? 1 : 0;
    cwd += cold ? 1 : 0;
  }
  return {hwd, cwd};
}

}  // namespace

TEST_CASE("stress step function with inclusive band boundaries") {
  CHECK(stress(35.0) == StressLevel::Heat);
  CHECK(stress(0.0) == StressLevel::None);
  CHECK(stress(-13.0) == StressLevel::None);
  CHECK(stress(32.0) == StressLevel::None);
  CHECK(stress(32.0000001) == StressLevel::Heat);
  CHECK(stress(-13.0000001) == StressLevel::Cold);
  CHECK(stress(-40.0) == StressLevel::Cold);
}

TEST_CASE("a heatwave day needs three consecutive breaches") {
  // two cool lookback days, then 33,33,33,20,...: only day 3 qualifies
  const auto s = series_from_max({20, 20, 33, 33, 33, 20, 20, 20, 20}, -1);
  const auto w = wave_days(s, WeekIndex{1});
  CHECK(w.hwd == 1);
  CHECK(w.cwd == 0);
}

TEST_CASE("a fully hot week with hot lookback gives HWD = 7") {
  const auto s = series_from_max(std::vector<double>(9, 35.0), -1);
  CHECK(wave_days(s, WeekIndex{1}).hwd == 7);
}

TEST_CASE("minima never below -13 give CWD = 0") {
  const auto s = series_from_min(std::vector<double>(9, -12.9), -1);
  CHECK(wave_days(s, WeekIndex{1}).cwd == 0);
}

TEST_CASE("lookback crosses week boundaries") {
  // hot days 6,7,8: only day 8 (in week 2) completes three consecutive
  std::vector<double> maxima(16, 20.0);  // day_start -1 => day d at index d+1
  for (int day : {6, 7, 8}) maxima[static_cast<std::size_t>(day + 1)] = 35.0;
  const auto s = series_from_max(maxima, -1);
  CHECK(wave_days(s, WeekIndex{1}).hwd == 0);  // days 6,7 lack a third consecutive
  CHECK(wave_days(s, WeekIndex{2}).hwd == 1);  // day 8 completes the run
}

TEST_CASE("insufficient lookback is an error") {
  const auto s = series_from_max(std::vector<double>(7, 20.0), 1);
  CHECK_THROWS_AS(wave_days(s, WeekIndex{1}), InputError);
}

TEST_CASE("exact agreement with the brute-force oracle on 10000 random series") {
  std::mt19937_64 rng(20240101);
  std::uniform_real_distribution<double> level(-25.0, 45.0);
  std::uniform_int_distribution<int> week_count(1, 4);
  for (int rep = 0; rep < 10000; ++rep) {
    const int weeks = week_count(rng);
    const int day_start = -1;
    const int n = 7 * weeks - day_start + 1;
    std::vector<double> mx(n), mn(n), mean(n);
    for (int i = 0; i < n; ++i) {
      const double a = level(rng), b = level(rng);
      mn[i] = std::min(a, b);
      mx[i] = std::max(a, b);
      mean[i] = 0.5 * (mn[i] + mx[i]);
    }
    const DailyClimateSeries s("R", day_start, mean, mn, mx);
    for (int t = 1; t <= weeks; ++t) {
      const auto got = wave_days(s, WeekIndex{t});
      const auto [hwd, cwd] = brute_force_waves(mx, mn, day_start, t);
      REQUIRE(got.hwd == hwd);
      REQUIRE(got.cwd == cwd);
      REQUIRE(got.hwd >= 0);
      REQUIRE(got.hwd <= 7);
      REQUIRE(got.cwd >= 0);
      REQUIRE(got.cwd <= 7);
    }
  }
}

TEST_CASE("raising a daily max never decreases HWD") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> level(25.0, 40.0);
  std::uniform_int_distribution<int> pick(0, 8);
  for (int rep = 0; rep < 500; ++rep) {
    std::vector<double> mx(9), mn(9), mean(9);
    for (int i = 0; i < 9; ++i) {
      mx[i] = level(rng);
      mean[i] = mx[i] - 5.0;
      mn[i] = mx[i] - 10.0;
    }
    const DailyClimateSeries s("R", -1, mean, mn, mx);
    const int before = wave_days(s, WeekIndex{1}).hwd;
    auto raised = mx;
    raised[static_cast<std::size_t>(pick(rng))] += 6.0;
    const DailyClimateSeries s2("R", -1, mean, mn, raised);
    CHECK(wave_days(s2, WeekIndex{1}).hwd >= before);
  }
}

TEST_CASE("wave_series matches per-week calls") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> level(-30.0, 45.0);
  const int weeks = 10;
  const int n = 7 * weeks + 2;
  std::vector<double> mx(n), mn(n), mean(n);
  for (int i = 0; i < n; ++i) {
    const double a = level(rng), b = level(rng);
    mn[i] = std::min(a, b);
    mx[i] = std::max(a, b);
    mean[i] = 0.5 * (a + b);
  }
  const DailyClimateSeries s("R", -1, mean, mn, mx);
  const auto [hwd, cwd] = wave_series(s, 1, weeks);
  for (int t = 1; t <= weeks; ++t) {
    const auto w = wave_days(s, WeekIndex{t});
    CHECK(hwd[t - 1] == w.hwd);
    CHECK(cwd[t - 1] == w.cwd);
  }
}

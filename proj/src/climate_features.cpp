#include "climort/climate_features.hpp"

namespace climort {

StressLevel stress(double utci) {
  if (utci < kColdThreshold) return StressLevel::Cold;
  if (utci > kHeatThreshold) return StressLevel::Heat;
  return StressLevel::None;
}

namespace {

bool heat_day(const DailyClimateSeries& c, int day) {
  return stress(c.max_at(day)) == StressLevel::Heat &&
         stress(c.max_at(day - 1)) == StressLevel::Heat &&
         stress(c.max_at(day - 2)) == StressLevel::Heat;
}

bool cold_day(const DailyClimateSeries& c, int day) {
  return stress(c.min_at(day)) == StressLevel::Cold &&
         stress(c.min_at(day - 1)) == StressLevel::Cold &&
         stress(c.min_at(day - 2)) == StressLevel::Cold;
}

}  // namespace

WaveCounts wave_days(const DailyClimateSeries& climate, WeekIndex week) {
  const int first = 7 * (week.t - 1) + 1;
  const int last = 7 * week.t;
  if (!climate.covers(first - 2) || !climate.covers(last))
    throw InputError("region " + climate.region() + ": wave counts for week " +
                     std::to_string(week.t) + " need days " + std::to_string(first - 2) +
                     " .. " + std::to_string(last) + " but coverage is [" +
                     std::to_string(climate.day_start()) + ", " +
                     std::to_string(climate.day_end()) + "]");
  WaveCounts counts;
  for (int day = first; day <= last; ++day) {
    if (heat_day(climate, day)) ++counts.hwd;
    if (cold_day(climate, day)) ++counts.cwd;
  }
  return counts;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> wave_series(const DailyClimateSeries& climate,
                                                        int first_week, int n_weeks) {
  Eigen::VectorXd hwd(n_weeks), cwd(n_weeks);
  for (int k = 0; k < n_weeks; ++k) {
    const WaveCounts w = wave_days(climate, WeekIndex{first_week + k});
    hwd[k] = w.hwd;
    cwd[k] = w.cwd;
  }
  return {hwd, cwd};
}

}  // namespace climort

#ifndef CLIMORT_CLIMATE_FEATURES_HPP
#define CLIMORT_CLIMATE_FEATURES_HPP

#include <Eigen/Dense>

#include "climort/data_model.hpp"

namespace climort {

// Step classification of UTCI: -1 below -13 C, +1 above 32 C, else 0.
// Threshold values themselves are non-events.
enum class StressLevel : int { Cold = -1, None = 0, Heat = 1 };

StressLevel stress(double utci);

inline constexpr double kColdThreshold = -13.0;
inline constexpr double kHeatThreshold = 32.0;

struct WaveCounts {
  int hwd = 0;
  int cwd = 0;
};

// A heatwave day breaches the heat threshold (daily max) on the day and the
// two preceding days; coldwave days mirror this on the daily min. Counts are
// summed over the 7 days of week t. Lookback crosses week boundaries, so the
// series must cover days 7t-8 .. 7t.
WaveCounts wave_days(const DailyClimateSeries& climate, WeekIndex week);

// HWD and CWD columns for weeks [first_week, first_week + n_weeks).
std::pair<Eigen::VectorXd, Eigen::VectorXd> wave_series(const DailyClimateSeries& climate,
                                                        int first_week, int n_weeks);

}  // namespace climort

#endif

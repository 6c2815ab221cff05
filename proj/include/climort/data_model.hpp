#ifndef CLIMORT_DATA_MODEL_HPP
#define CLIMORT_DATA_MODEL_HPP

#include <Eigen/Dense>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "climort/common.hpp"

namespace climort {

struct AgeGroup {
  std::string label;
  int index = 0;  // 1-based, contiguous
};

std::vector<AgeGroup> make_age_groups(const std::vector<std::string>& labels);

// Weeks are 1-based; the reference day of week t is its last day, 7t.
struct WeekIndex {
  int t = 1;
  int reference_day() const { return 7 * t; }
};

// Day indices [7t, 7t-1, ..., 7t-L]. Indices at or below zero fall before
// the sample and must be covered by climate padding.
std::vector<int> lag_window(WeekIndex week, int lag_max);

// Daily climate values for one region on a day axis that may extend before
// day 1 (lag padding) and beyond the sample (scenario horizons).
class DailyClimateSeries {
 public:
  DailyClimateSeries(std::string region, int day_start,
                     std::vector<double> mean_utci, std::vector<double> min_utci,
                     std::vector<double> max_utci);

  const std::string& region() const { return region_; }
  int day_start() const { return day_start_; }
  int day_end() const { return day_start_ + static_cast<int>(mean_.size()) - 1; }
  std::size_t size() const { return mean_.size(); }
  bool covers(int day) const { return day >= day_start() && day <= day_end(); }

  double mean_at(int day) const { return mean_[at(day)]; }
  double min_at(int day) const { return min_[at(day)]; }
  double max_at(int day) const { return max_[at(day)]; }

  // Mean UTCI over [7t, 7t-1, ..., 7t-L]; throws if coverage is missing,
  // citing the padding the file would need.
  std::vector<double> mean_window(WeekIndex week, int lag_max) const;

  // Keep days <= last_day (training truncation).
  DailyClimateSeries truncated(int last_day) const;

  // Extend coverage down to first_day by replicating the first observed day.
  DailyClimateSeries padded_to(int first_day) const;

  // Add a constant to mean/min/max (scenario shifts).
  DailyClimateSeries shifted(double delta) const;

 private:
  std::size_t at(int day) const;

  std::string region_;
  int day_start_;
  std::vector<double> mean_, min_, max_;
};

// Raw ingested tables, keyed before validation into a panel.
struct DeathsTable {
  // (region, age label, calendar year, week 1..52) -> deaths
  std::map<std::tuple<std::string, std::string, int, int>, double> cells;
};

struct PopulationTable {
  // (region, age label, calendar year) -> population
  std::map<std::tuple<std::string, std::string, int>, double> cells;
};

// Weekly death counts, annual populations and derived rates for every
// (age, week, region) cell. Immutable once built.
class MortalityPanel {
 public:
  MortalityPanel() = default;  // empty placeholder; populate via build/from_rates

  static MortalityPanel build(const DeathsTable& deaths, const PopulationTable& population,
                              const std::vector<AgeGroup>& ages,
                              const std::vector<std::string>& regions, int start_year,
                              int n_years);

  // Direct construction from rates (synthetic data path). populations are
  // N x Y per region; rates N x T.
  static MortalityPanel from_rates(const std::vector<AgeGroup>& ages,
                                   const std::vector<std::string>& regions, int start_year,
                                   const std::vector<Eigen::MatrixXd>& rates,
                                   const std::vector<Eigen::MatrixXd>& population);

  int n_ages() const { return static_cast<int>(ages_.size()); }
  int n_weeks() const { return n_weeks_; }
  int n_regions() const { return static_cast<int>(regions_.size()); }
  int n_years() const { return n_weeks_ / weeks_per_year_; }
  int weeks_per_year() const { return weeks_per_year_; }
  int start_year() const { return start_year_; }
  const std::vector<AgeGroup>& ages() const { return ages_; }
  const std::vector<std::string>& regions() const { return regions_; }

  // Sample year (1-based) that week t belongs to, under the 52-week year.
  int year_of_week(int t) const { return (t - 1) / weeks_per_year_ + 1; }

  double deaths(int age, int week, int region) const;
  double population(int age, int sample_year, int region) const;
  double exposure(int age, int week, int region) const;  // P/52
  double rate(int age, int week, int region) const;
  bool zero_cell(int age, int week, int region) const;

  const Eigen::MatrixXd& rates(int region) const { return rates_[region]; }

  // N x T log rates; zero-death cells use the half-count correction 0.5/E.
  Eigen::MatrixXd log_rates(int region) const;

  MortalityPanel truncated(int n_weeks) const;

 private:
  void validate() const;

  std::vector<AgeGroup> ages_;
  std::vector<std::string> regions_;
  int n_weeks_ = 0;
  int weeks_per_year_ = 52;
  int start_year_ = 0;
  std::vector<Eigen::MatrixXd> deaths_;      // per region, N x T
  std::vector<Eigen::MatrixXd> rates_;       // per region, N x T
  std::vector<Eigen::MatrixXd> population_;  // per region, N x Y
};

}  // namespace climort

#endif

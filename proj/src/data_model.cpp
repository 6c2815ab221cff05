#include "climort/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace climort {

std::vector<AgeGroup> make_age_groups(const std::vector<std::string>& labels) {
  if (labels.empty()) throw InputError("age group list is empty");
  std::set<std::string> seen;
  std::vector<AgeGroup> out;
  int idx = 1;
  for (const auto& label : labels) {
    if (!seen.insert(label).second)
      throw InputError("duplicate age group label '" + label + "'");
    out.push_back({label, idx++});
  }
  return out;
}

std::vector<int> lag_window(WeekIndex week, int lag_max) {
  if (week.t < 1) throw InputError("week index must be >= 1");
  if (lag_max < 0) throw InputError("lag_max must be >= 0");
  std::vector<int> days(static_cast<std::size_t>(lag_max) + 1);
  for (int l = 0; l <= lag_max; ++l) days[l] = week.reference_day() - l;
  return days;
}

DailyClimateSeries::DailyClimateSeries(std::string region, int day_start,
                                       std::vector<double> mean_utci,
                                       std::vector<double> min_utci,
                                       std::vector<double> max_utci)
    : region_(std::move(region)),
      day_start_(day_start),
      mean_(std::move(mean_utci)),
      min_(std::move(min_utci)),
      max_(std::move(max_utci)) {
  if (mean_.empty()) throw InputError("climate series for region " + region_ + " is empty");
  if (mean_.size() != min_.size() || mean_.size() != max_.size())
    throw InputError("climate series for region " + region_ + " has mismatched lengths");
  for (std::size_t i = 0; i < mean_.size(); ++i) {
    if (!std::isfinite(mean_[i]) || !std::isfinite(min_[i]) || !std::isfinite(max_[i]))
      throw InputError("non-finite UTCI in region " + region_ + " at day " +
                       std::to_string(day_start_ + static_cast<int>(i)));
    if (!(min_[i] <= mean_[i] && mean_[i] <= max_[i]))
      throw InputError("region " + region_ + " day " +
                       std::to_string(day_start_ + static_cast<int>(i)) +
                       ": min/mean/max UTCI out of order");
  }
}

std::size_t DailyClimateSeries::at(int day) const {
  if (!covers(day))
    throw InputError("region " + region_ + ": day " + std::to_string(day) +
                     " outside climate coverage [" + std::to_string(day_start()) + ", " +
                     std::to_string(day_end()) + "]");
  return static_cast<std::size_t>(day - day_start_);
}

std::vector<double> DailyClimateSeries::mean_window(WeekIndex week, int lag_max) const {
  const auto days = lag_window(week, lag_max);
  if (days.back() < day_start()) {
    std::ostringstream msg;
    msg << "region " << region_ << ": lag window of week " << week.t << " needs day "
        << days.back() << " but coverage starts at day " << day_start()
        << "; supply " << (day_start() - days.back()) << " more leading day(s) of padding";
    throw InputError(msg.str());
  }
  std::vector<double> vals(days.size());
  for (std::size_t i = 0; i < days.size(); ++i) vals[i] = mean_at(days[i]);
  return vals;
}

DailyClimateSeries DailyClimateSeries::truncated(int last_day) const {
  if (last_day < day_start())
    throw InputError("cannot truncate climate series before its first day");
  const std::size_t n = static_cast<std::size_t>(std::min(last_day, day_end()) - day_start_) + 1;
  return DailyClimateSeries(region_, day_start_,
                            std::vector<double>(mean_.begin(), mean_.begin() + n),
                            std::vector<double>(min_.begin(), min_.begin() + n),
                            std::vector<double>(max_.begin(), max_.begin() + n));
}

DailyClimateSeries DailyClimateSeries::padded_to(int first_day) const {
  if (first_day >= day_start_) return *this;
  const std::size_t extra = static_cast<std::size_t>(day_start_ - first_day);
  std::vector<double> mean(extra, mean_.front()), mn(extra, min_.front()),
      mx(extra, max_.front());
  mean.insert(mean.end(), mean_.begin(), mean_.end());
  mn.insert(mn.end(), min_.begin(), min_.end());
  mx.insert(mx.end(), max_.begin(), max_.end());
  return DailyClimateSeries(region_, first_day, std::move(mean), std::move(mn), std::move(mx));
}

DailyClimateSeries DailyClimateSeries::shifted(double delta) const {
  std::vector<double> mean(mean_), mn(min_), mx(max_);
  for (auto& v : mean) v += delta;
  for (auto& v : mn) v += delta;
  for (auto& v : mx) v += delta;
  return DailyClimateSeries(region_, day_start_, std::move(mean), std::move(mn), std::move(mx));
}

MortalityPanel MortalityPanel::build(const DeathsTable& deaths, const PopulationTable& population,
                                     const std::vector<AgeGroup>& ages,
                                     const std::vector<std::string>& regions, int start_year,
                                     int n_years) {
  if (ages.empty() || regions.empty()) throw InputError("panel needs at least one age and region");
  if (n_years < 1) throw InputError("panel needs at least one year");
  MortalityPanel p;
  p.ages_ = ages;
  p.regions_ = regions;
  p.start_year_ = start_year;
  p.n_weeks_ = 52 * n_years;
  const int N = p.n_ages();

  for (int i = 0; i < p.n_regions(); ++i) {
    Eigen::MatrixXd D(N, p.n_weeks_), R(N, p.n_weeks_), P(N, n_years);
    for (int x = 0; x < N; ++x) {
      for (int y = 0; y < n_years; ++y) {
        const auto key = std::make_tuple(regions[i], ages[x].label, start_year + y);
        const auto it = population.cells.find(key);
        if (it == population.cells.end())
          throw InputError("missing population for (" + regions[i] + ", " + ages[x].label +
                           ", " + std::to_string(start_year + y) + ")");
        if (!(it->second > 0))
          throw InputError("non-positive population for (" + regions[i] + ", " +
                           ages[x].label + ", " + std::to_string(start_year + y) + ")");
        P(x, y) = it->second;
      }
      for (int t = 1; t <= p.n_weeks_; ++t) {
        const int year = start_year + (t - 1) / 52;
        const int week = (t - 1) % 52 + 1;
        const auto key = std::make_tuple(regions[i], ages[x].label, year, week);
        const auto it = deaths.cells.find(key);
        if (it == deaths.cells.end())
          throw InputError("missing deaths for (" + regions[i] + ", " + ages[x].label + ", " +
                           std::to_string(year) + ", week " + std::to_string(week) + ")");
        if (it->second < 0)
          throw InputError("negative deaths for (" + regions[i] + ", " + ages[x].label + ", " +
                           std::to_string(year) + ", week " + std::to_string(week) + ")");
        D(x, t - 1) = it->second;
        R(x, t - 1) = it->second / (P(x, (t - 1) / 52) / 52.0);
      }
    }
    p.deaths_.push_back(std::move(D));
    p.rates_.push_back(std::move(R));
    p.population_.push_back(std::move(P));
  }
  p.validate();
  return p;
}

MortalityPanel MortalityPanel::from_rates(const std::vector<AgeGroup>& ages,
                                          const std::vector<std::string>& regions,
                                          int start_year,
                                          const std::vector<Eigen::MatrixXd>& rates,
                                          const std::vector<Eigen::MatrixXd>& population) {
  MortalityPanel p;
  p.ages_ = ages;
  p.regions_ = regions;
  p.start_year_ = start_year;
  if (rates.size() != regions.size() || population.size() != regions.size())
    throw InputError("from_rates: one rate and population matrix per region required");
  p.n_weeks_ = static_cast<int>(rates.front().cols());
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const auto& R = rates[i];
    const auto& P = population[i];
    if (R.rows() != p.n_ages() || R.cols() != p.n_weeks_)
      throw InputError("from_rates: rate matrix shape mismatch");
    if (P.rows() != p.n_ages() || P.cols() != p.n_weeks_ / 52)
      throw InputError("from_rates: population matrix shape mismatch");
    Eigen::MatrixXd D(p.n_ages(), p.n_weeks_);
    for (int x = 0; x < p.n_ages(); ++x)
      for (int t = 0; t < p.n_weeks_; ++t) D(x, t) = R(x, t) * (P(x, t / 52) / 52.0);
    p.deaths_.push_back(std::move(D));
    p.rates_.push_back(R);
    p.population_.push_back(P);
  }
  p.validate();
  return p;
}

void MortalityPanel::validate() const {
  if (n_weeks_ % weeks_per_year_ != 0)
    throw InputError("panel length must be a whole number of 52-week years");
  for (int i = 0; i < n_regions(); ++i) {
    if (!deaths_[i].allFinite() || !rates_[i].allFinite() || !population_[i].allFinite())
      throw InputError("non-finite value in panel for region " + regions_[i]);
    if ((deaths_[i].array() < 0).any())
      throw InputError("negative deaths in panel for region " + regions_[i]);
    if ((population_[i].array() <= 0).any())
      throw InputError("non-positive population in panel for region " + regions_[i]);
  }
}

double MortalityPanel::deaths(int age, int week, int region) const {
  return deaths_[region](age, week - 1);
}

double MortalityPanel::population(int age, int sample_year, int region) const {
  return population_[region](age, sample_year - 1);
}

double MortalityPanel::exposure(int age, int week, int region) const {
  return population(age, year_of_week(week), region) / 52.0;
}

double MortalityPanel::rate(int age, int week, int region) const {
  return rates_[region](age, week - 1);
}

bool MortalityPanel::zero_cell(int age, int week, int region) const {
  return deaths_[region](age, week - 1) == 0.0;
}

Eigen::MatrixXd MortalityPanel::log_rates(int region) const {
  Eigen::MatrixXd L(n_ages(), n_weeks_);
  for (int x = 0; x < n_ages(); ++x)
    for (int t = 1; t <= n_weeks_; ++t) {
      double m = rate(x, t, region);
      if (m == 0.0) m = 0.5 / exposure(x, t, region);  // half-count continuity correction
      L(x, t - 1) = std::log(m);
    }
  return L;
}

MortalityPanel MortalityPanel::truncated(int n_weeks) const {
  if (n_weeks < 1 || n_weeks > n_weeks_)
    throw InputError("truncation length out of range");
  MortalityPanel p;
  p.ages_ = ages_;
  p.regions_ = regions_;
  p.start_year_ = start_year_;
  p.n_weeks_ = n_weeks;
  const int years = (n_weeks + weeks_per_year_ - 1) / weeks_per_year_;
  for (int i = 0; i < n_regions(); ++i) {
    p.deaths_.push_back(deaths_[i].leftCols(n_weeks));
    p.rates_.push_back(rates_[i].leftCols(n_weeks));
    p.population_.push_back(population_[i].leftCols(years));
  }
  return p;
}

}  // namespace climort

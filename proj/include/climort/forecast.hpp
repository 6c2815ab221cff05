#ifndef CLIMORT_FORECAST_HPP
#define CLIMORT_FORECAST_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "climort/backfit.hpp"

namespace climort {

// Dynamics for a fitted mortality index: a random walk with drift on the
// levels, optionally with AR terms and a seasonal AR term at lag 52 on the
// differences. Selected by corrected AIC over the restricted family.
struct IndexModel {
  std::string name = "rw_drift";
  double drift = 0.0;
  Eigen::VectorXd ar;          // phi_1..phi_p on centred differences
  double seasonal_ar = 0.0;
  bool has_seasonal = false;
  double sigma2 = 0.0;         // innovation variance
  double drift_se = 0.0;

  double y_last = 0.0;
  std::vector<double> diff_tail;  // most recent differences, oldest first

  struct Candidate {
    std::string name;
    double aicc = 0.0;
    bool stationary = true;
    bool finite = true;
  };
  std::vector<Candidate> candidates;
  bool fallback = false;

  int p() const { return static_cast<int>(ar.size()); }
  int max_lag() const { return has_seasonal ? 52 : p(); }
};

struct IndexModelOptions {
  int max_ar = 3;
  bool try_seasonal = true;
  int season_lag = 52;
};

IndexModel fit_index_model(const Eigen::VectorXd& series, const IndexModelOptions& opts = {});

// Deterministic forecast (innovations set to zero).
Eigen::VectorXd index_point_forecast(const IndexModel& model, int horizon);

// horizon x n_paths level trajectories with Gaussian innovations.
Eigen::MatrixXd simulate_index_paths(const IndexModel& model, int horizon, int n_paths,
                                     std::uint64_t seed);

struct ProjectionOptions {
  int n_paths = 10000;
  std::uint64_t seed = 1;
  int offset_weeks = 0;        // gap between sample end and scenario start
  bool zero_variance = false;  // suppress every stochastic source
  int weeks_per_year = 52;
};

// Simulated mortality percentiles per (region, age, week), plus per-path
// annual aggregates when the horizon covers whole years.
struct ProjectionFan {
  std::vector<std::string> regions;
  std::vector<AgeGroup> ages;
  int first_week = 1;  // global week index of the first projected week
  int n_weeks = 0;
  int n_paths = 0;
  std::uint64_t seed = 0;

  // [region][age], length n_weeks
  std::vector<std::vector<Eigen::VectorXd>> mean, lo, hi, point;
  // path mean and Monte Carlo standard error of the log rates
  std::vector<std::vector<Eigen::VectorXd>> mean_log, se_log;
  std::vector<std::vector<Eigen::VectorXd>> point_log;
  // [region][age], length n_weeks / 52 (empty when horizon is not whole years)
  std::vector<std::vector<Eigen::VectorXd>> annual_mean, annual_lo, annual_hi, annual_point;
  int n_years = 0;
};

ProjectionFan project(const FittedModel& model,
                      const std::vector<DailyClimateSeries>& scenario,
                      const ProjectionOptions& opts);

// theta = 1 - exp(-S) with S the fitted climate component; the annualised
// loading is the sum of weekly loadings within each year.
struct ClimateLoadingSeries {
  std::vector<std::string> regions;
  std::vector<AgeGroup> ages;
  std::vector<std::vector<Eigen::VectorXd>> theta;   // [region][age], length T
  std::vector<std::vector<Eigen::VectorXd>> annual;  // [region][age], length T/52
};

ClimateLoadingSeries climate_loading(const FittedModel& model);

// Sum of weekly rates divided by 52, per whole year; errors on partial years.
Eigen::VectorXd annualize(const Eigen::VectorXd& weekly, int weeks_per_year = 52);

// Linear-interpolation percentile of unsorted values (p in [0,1]).
double percentile(std::vector<double> values, double p);

}  // namespace climort

#endif

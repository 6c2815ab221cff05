#ifndef CLIMORT_INGEST_HPP
#define CLIMORT_INGEST_HPP

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "climort/backfit.hpp"
#include "climort/data_model.hpp"
#include "climort/evaluate.hpp"

namespace climort {

enum class Cadence { Daily, Hourly };

// Run-wide settings. Loaded from a flat key=value file; CLI flags override
// individual keys. The seed is echoed into every output file.
struct RunConfig {
  Variant variant = Variant::Lc;
  std::vector<std::string> regions;
  std::vector<std::string> age_groups;
  int start_year = 2015;
  int end_year = 2019;

  int lag_max = 21;
  int exposure_df = 4;
  int lag_df = 4;
  double backfit_delta = 1e-2;
  int backfit_max_iter = 20;

  int cv_initial = 102;
  int cv_step = 8;
  int cv_horizon = 78;
  int cv_folds = 10;
  std::string cv_fold_convention = "prose";  // or "equation"

  int n_boot = 1000;
  int n_paths = 10000;
  std::uint64_t seed = 20240101;
  std::string output_dir = "out";

  std::string deaths_csv, population_csv, climate_csv, scenario_csv;
  std::string climate_cadence = "daily";
  int project_start_year = 0;    // 0 -> end_year + 1
  int project_horizon_weeks = 0;  // 0 -> derive from the scenario file
  int curve_grid_points = 100;

  // synthetic generator knobs
  double synth_noise_sigma = 0.02;
  int synth_scenario_years = 15;
  double synth_scenario_shift = 3.0;
  bool synth_identical_regions = false;

  int n_weeks() const { return 52 * (end_year - start_year + 1); }
  int projection_offset_weeks() const;
  BackfitConfig backfit() const;
  CvPlan cv_plan() const;
  void validate() const;

  // Canonical key=value rendering (sorted keys); hashed into output headers.
  std::string canonical_text() const;
  std::uint64_t hash() const { return fnv1a64(canonical_text()); }
};

RunConfig load_config(const std::filesystem::path& path);
RunConfig config_from_pairs(const std::vector<std::pair<std::string, std::string>>& pairs);
void apply_override(RunConfig& cfg, const std::string& key, const std::string& value);

// CSV schema: region,age_group,year,week,deaths
DeathsTable read_mortality_csv(const std::filesystem::path& path);

// CSV schema: region,age_group,year,population
PopulationTable read_population_csv(const std::filesystem::path& path);

// Daily schema:  region,date,utci_mean,utci_min,utci_max
// Hourly schema: region,date,hour,utci (aggregated per calendar day)
// Rows are aligned so each region's final row is the last sample day 7T;
// leading rows beyond 7T days are lag padding. Missing padding is replicated
// from the first observed day with a warning.
std::vector<DailyClimateSeries> read_climate_csv(const std::filesystem::path& path,
                                                 Cadence cadence,
                                                 const std::vector<std::string>& regions,
                                                 int n_weeks, int lag_max);

// As the daily climate reader, on the scenario's own week axis starting at
// local week 1. Horizon defaults to the largest whole number of weeks.
std::vector<DailyClimateSeries> read_scenario_csv(const std::filesystem::path& path,
                                                  const std::vector<std::string>& regions,
                                                  std::optional<int> horizon_weeks = {});

// Days since 1970-01-01 for a YYYY-MM-DD string (ordering and gap checks).
long parse_date_serial(const std::string& date, int line_number);
std::string date_from_serial(long serial);
long date_serial(int year, int month, int day);

}  // namespace climort

#endif

#include "climort/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace climort {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(trim(field));
  if (!line.empty() && line.back() == sep) out.push_back("");
  return out;
}

struct CsvFile {
  std::filesystem::path path;
  std::vector<std::string> header;
  std::vector<std::pair<int, std::vector<std::string>>> rows;  // line number, fields
};

CsvFile read_csv(const std::filesystem::path& path, const std::vector<std::string>& expect) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open file: " + path.string());
  CsvFile csv;
  csv.path = path;
  std::string line;
  int line_number = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_number;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    auto fields = split(stripped, ',');
    if (!have_header) {
      if (fields != expect) {
        std::string want;
        for (const auto& f : expect) want += (want.empty() ? "" : ",") + f;
        throw InputError(path.string() + ":" + std::to_string(line_number) +
                         ": expected header '" + want + "'");
      }
      csv.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != expect.size())
      throw InputError(path.string() + ":" + std::to_string(line_number) + ": expected " +
                       std::to_string(expect.size()) + " fields, got " +
                       std::to_string(fields.size()));
    csv.rows.emplace_back(line_number, std::move(fields));
  }
  if (!have_header) throw InputError(path.string() + ": missing header row");
  if (csv.rows.empty()) throw InputError(path.string() + ": no data rows");
  return csv;
}

double parse_double(const CsvFile& csv, int line, const std::string& field,
                    const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (used != field.size()) throw std::invalid_argument(field);
    return v;
  } catch (const std::exception&) {
    throw InputError(csv.path.string() + ":" + std::to_string(line) + ": bad " + what + " '" +
                     field + "'");
  }
}

int parse_int(const CsvFile& csv, int line, const std::string& field, const std::string& what) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw InputError(csv.path.string() + ":" + std::to_string(line) + ": bad " + what + " '" +
                     field + "'");
  return v;
}

// Raw per-day values for one region, in file order.
struct DailyRecord {
  long serial = 0;
  double mean = 0, min = 0, max = 0;
};

std::vector<DailyClimateSeries> align_series(
    const std::filesystem::path& path, std::map<std::string, std::vector<DailyRecord>>& by_region,
    const std::vector<std::string>& regions, int n_weeks, std::optional<int> required_lead) {
  std::vector<DailyClimateSeries> out;
  for (const auto& region : regions) {
    const auto it = by_region.find(region);
    if (it == by_region.end())
      throw InputError(path.string() + ": no rows for region " + region);
    const auto& days = it->second;
    const int pad = static_cast<int>(days.size()) - 7 * n_weeks;
    if (pad < 0)
      throw InputError(path.string() + ": region " + region + " has " +
                       std::to_string(days.size()) + " days but " + std::to_string(7 * n_weeks) +
                       " sample days are required");
    std::vector<double> mean, mn, mx;
    mean.reserve(days.size());
    for (const auto& d : days) {
      mean.push_back(d.mean);
      mn.push_back(d.min);
      mx.push_back(d.max);
    }
    DailyClimateSeries series(region, 1 - pad, std::move(mean), std::move(mn), std::move(mx));
    if (required_lead && series.day_start() > *required_lead) {
      warn(path.string() + ": region " + region + " supplies " + std::to_string(pad) +
           " leading day(s) but " + std::to_string(1 - *required_lead) +
           " are needed; replicating the first day backwards");
      series = series.padded_to(*required_lead);
    }
    out.push_back(std::move(series));
  }
  return out;
}

}  // namespace

long date_serial(int y, int m, int d) {
  // civil-days algorithm
  y -= m <= 2;
  const long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2u) / 5u + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long>(doe) - 719468;
}

std::string date_from_serial(long serial) {
  long z = serial + 719468;
  const long era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const long y = static_cast<long>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp + (mp < 10 ? 3 : -9);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04ld-%02u-%02u", y + (m <= 2), m, d);
  return buf;
}

long parse_date_serial(const std::string& date, int line_number) {
  int y = 0, m = 0, d = 0;
  if (date.size() != 10 || date[4] != '-' || date[7] != '-' ||
      std::sscanf(date.c_str(), "%4d-%2d-%2d", &y, &m, &d) != 3 || m < 1 || m > 12 || d < 1 ||
      d > 31)
    throw InputError("line " + std::to_string(line_number) + ": bad date '" + date + "'");
  return date_serial(y, m, d);
}

DeathsTable read_mortality_csv(const std::filesystem::path& path) {
  const CsvFile csv = read_csv(path, {"region", "age_group", "year", "week", "deaths"});
  DeathsTable table;
  for (const auto& [line, f] : csv.rows) {
    const int year = parse_int(csv, line, f[2], "year");
    const int week = parse_int(csv, line, f[3], "week");
    const double deaths = parse_double(csv, line, f[4], "deaths");
    if (week < 1 || week > 53)
      throw InputError(path.string() + ":" + std::to_string(line) + ": week out of range");
    if (week == 53) {
      warn(path.string() + ":" + std::to_string(line) + ": dropping week 53 row (52-week years)");
      continue;
    }
    if (deaths < 0)
      throw InputError(path.string() + ":" + std::to_string(line) + ": negative deaths");
    const auto key = std::make_tuple(f[0], f[1], year, week);
    if (!table.cells.emplace(key, deaths).second)
      throw InputError(path.string() + ":" + std::to_string(line) + ": duplicate key (" + f[0] +
                       ", " + f[1] + ", " + std::to_string(year) + ", week " +
                       std::to_string(week) + ")");
  }
  return table;
}

PopulationTable read_population_csv(const std::filesystem::path& path) {
  const CsvFile csv = read_csv(path, {"region", "age_group", "year", "population"});
  PopulationTable table;
  for (const auto& [line, f] : csv.rows) {
    const int year = parse_int(csv, line, f[2], "year");
    const double pop = parse_double(csv, line, f[3], "population");
    if (!(pop > 0))
      throw InputError(path.string() + ":" + std::to_string(line) + ": population must be > 0");
    const auto key = std::make_tuple(f[0], f[1], year);
    if (!table.cells.emplace(key, pop).second)
      throw InputError(path.string() + ":" + std::to_string(line) + ": duplicate key (" + f[0] +
                       ", " + f[1] + ", " + std::to_string(year) + ")");
  }
  return table;
}

namespace {

std::map<std::string, std::vector<DailyRecord>> read_daily_rows(const CsvFile& csv) {
  std::map<std::string, std::vector<DailyRecord>> by_region;
  for (const auto& [line, f] : csv.rows) {
    DailyRecord rec;
    rec.serial = parse_date_serial(f[1], line);
    rec.mean = parse_double(csv, line, f[2], "utci_mean");
    rec.min = parse_double(csv, line, f[3], "utci_min");
    rec.max = parse_double(csv, line, f[4], "utci_max");
    auto& days = by_region[f[0]];
    if (!days.empty()) {
      if (rec.serial <= days.back().serial)
        throw InputError(csv.path.string() + ":" + std::to_string(line) +
                         ": dates out of order for region " + f[0]);
      if (rec.serial != days.back().serial + 1)
        throw InputError(csv.path.string() + ":" + std::to_string(line) +
                         ": gap before date " + f[1] + " for region " + f[0]);
    }
    days.push_back(rec);
  }
  return by_region;
}

std::map<std::string, std::vector<DailyRecord>> read_hourly_rows(const CsvFile& csv) {
  struct DayAccum {
    long serial = 0;
    std::vector<double> values;
    int last_hour = -1;
  };
  std::map<std::string, std::vector<DailyRecord>> by_region;
  std::map<std::string, DayAccum> open_day;

  auto flush = [&](const std::string& region, DayAccum& day) {
    if (day.values.empty()) return;
    if (day.values.size() < 24)
      warn(csv.path.string() + ": region " + region + " has only " +
           std::to_string(day.values.size()) + " hourly rows on one day; aggregating available hours");
    DailyRecord rec;
    rec.serial = day.serial;
    rec.min = *std::min_element(day.values.begin(), day.values.end());
    rec.max = *std::max_element(day.values.begin(), day.values.end());
    double sum = 0;
    for (double v : day.values) sum += v;
    rec.mean = sum / static_cast<double>(day.values.size());
    auto& days = by_region[region];
    if (!days.empty() && rec.serial != days.back().serial + 1)
      throw InputError(csv.path.string() + ": gap day before serial " +
                       std::to_string(rec.serial) + " for region " + region);
    days.push_back(rec);
    day = DayAccum{};
  };

  for (const auto& [line, f] : csv.rows) {
    const long serial = parse_date_serial(f[1], line);
    const int hour = parse_int(csv, line, f[2], "hour");
    const double utci = parse_double(csv, line, f[3], "utci");
    if (hour < 0 || hour > 23)
      throw InputError(csv.path.string() + ":" + std::to_string(line) + ": hour out of range");
    auto& day = open_day[f[0]];
    if (!day.values.empty() && serial != day.serial) {
      if (serial < day.serial)
        throw InputError(csv.path.string() + ":" + std::to_string(line) +
                         ": dates out of order for region " + f[0]);
      flush(f[0], day);
    }
    if (day.values.empty()) {
      day.serial = serial;
      day.last_hour = -1;
    }
    if (hour <= day.last_hour)
      throw InputError(csv.path.string() + ":" + std::to_string(line) +
                       ": duplicate or out-of-order hour for region " + f[0]);
    day.last_hour = hour;
    day.values.push_back(utci);
  }
  for (auto& [region, day] : open_day) flush(region, day);
  return by_region;
}

}  // namespace

std::vector<DailyClimateSeries> read_climate_csv(const std::filesystem::path& path,
                                                 Cadence cadence,
                                                 const std::vector<std::string>& regions,
                                                 int n_weeks, int lag_max) {
  auto by_region = [&] {
    if (cadence == Cadence::Daily) {
      const CsvFile csv = read_csv(path, {"region", "date", "utci_mean", "utci_min", "utci_max"});
      return read_daily_rows(csv);
    }
    const CsvFile csv = read_csv(path, {"region", "date", "hour", "utci"});
    return read_hourly_rows(csv);
  }();
  // lag windows need day 7 - lag_max; wave lookback needs day -1
  const int required_lead = std::min(7 - lag_max, -1);
  return align_series(path, by_region, regions, n_weeks, required_lead);
}

std::vector<DailyClimateSeries> read_scenario_csv(const std::filesystem::path& path,
                                                  const std::vector<std::string>& regions,
                                                  std::optional<int> horizon_weeks) {
  const CsvFile csv = read_csv(path, {"region", "date", "utci_mean", "utci_min", "utci_max"});
  auto by_region = read_daily_rows(csv);
  int horizon = 0;
  if (horizon_weeks) {
    horizon = *horizon_weeks;
  } else {
    std::size_t min_days = std::numeric_limits<std::size_t>::max();
    for (const auto& region : regions) {
      const auto it = by_region.find(region);
      if (it == by_region.end())
        throw InputError(path.string() + ": no rows for region " + region);
      min_days = std::min(min_days, it->second.size());
    }
    if (min_days % 7 != 0)
      throw InputError(path.string() + ": " + std::to_string(min_days) +
                       " rows per region is not a whole number of weeks; set "
                       "project_horizon_weeks so leading padding days can be identified");
    horizon = static_cast<int>(min_days / 7);
    if (horizon < 1) throw InputError(path.string() + ": scenario shorter than one week");
  }
  return align_series(path, by_region, regions, horizon, std::nullopt);
}

int RunConfig::projection_offset_weeks() const {
  const int start = project_start_year > 0 ? project_start_year : end_year + 1;
  if (start <= end_year)
    throw InputError("project_start_year must be after the sample end year");
  return 52 * (start - end_year - 1);
}

BackfitConfig RunConfig::backfit() const {
  BackfitConfig cfg;
  cfg.delta = backfit_delta;
  cfg.max_iter = backfit_max_iter;
  cfg.lag_max = lag_max;
  cfg.exposure_df = exposure_df;
  cfg.lag_df = lag_df;
  return cfg;
}

CvPlan RunConfig::cv_plan() const {
  CvPlan plan;
  plan.initial = cv_initial;
  plan.step = cv_step;
  plan.horizon = cv_horizon;
  plan.folds = cv_folds;
  plan.convention = cv_fold_convention == "equation" ? CvPlan::FoldConvention::Equation
                                                     : CvPlan::FoldConvention::Prose;
  return plan;
}

void RunConfig::validate() const {
  if (variant == Variant::Ll && regions.size() < 2)
    throw InputError("variant=ll needs at least 2 regions");
  if (regions.empty()) throw InputError("config: regions must not be empty");
  if (age_groups.empty()) throw InputError("config: age_groups must not be empty");
  std::set<std::string> uniq(regions.begin(), regions.end());
  if (uniq.size() != regions.size()) throw InputError("config: duplicate region");
  if (end_year < start_year) throw InputError("config: end_year before start_year");
  if (lag_max < 0) throw InputError("config: lag_max must be >= 0");
  if (exposure_df < 2 || lag_df < 2) throw InputError("config: spline dfs must be >= 2");
  if (!(backfit_delta > 0)) throw InputError("config: backfit_delta must be > 0");
  if (backfit_max_iter < 1) throw InputError("config: backfit_max_iter must be >= 1");
  if (cv_initial < 1 || cv_step < 1 || cv_horizon < 1 || cv_folds < 1)
    throw InputError("config: cv sizes must all be positive");
  if (cv_fold_convention != "prose" && cv_fold_convention != "equation")
    throw InputError("config: cv_fold_convention must be 'prose' or 'equation'");
  if (n_boot < 1 || n_paths < 1) throw InputError("config: n_boot and n_paths must be >= 1");
  if (climate_cadence != "daily" && climate_cadence != "hourly")
    throw InputError("config: climate_cadence must be 'daily' or 'hourly'");
  if (curve_grid_points < 2) throw InputError("config: curve_grid_points must be >= 2");
  if (project_horizon_weeks < 0)
    throw InputError("config: project_horizon_weeks must be >= 0");
  if (synth_scenario_years < 1) throw InputError("config: synth_scenario_years must be >= 1");
  make_age_groups(age_groups);  // uniqueness
}

namespace {

std::string join(const std::vector<std::string>& values) {
  std::string out;
  for (const auto& v : values) out += (out.empty() ? "" : ",") + v;
  return out;
}

std::vector<std::string> split_list(const std::string& value) {
  auto fields = split(value, ',');
  std::vector<std::string> out;
  for (auto& f : fields)
    if (!f.empty()) out.push_back(f);
  return out;
}

}  // namespace

std::string RunConfig::canonical_text() const {
  std::ostringstream out;
  out << "age_groups=" << join(age_groups) << "\n"
      << "backfit_delta=" << format_double(backfit_delta) << "\n"
      << "backfit_max_iter=" << backfit_max_iter << "\n"
      << "climate_cadence=" << climate_cadence << "\n"
      << "climate_csv=" << climate_csv << "\n"
      << "curve_grid_points=" << curve_grid_points << "\n"
      << "cv_fold_convention=" << cv_fold_convention << "\n"
      << "cv_folds=" << cv_folds << "\n"
      << "cv_horizon=" << cv_horizon << "\n"
      << "cv_initial=" << cv_initial << "\n"
      << "cv_step=" << cv_step << "\n"
      << "deaths_csv=" << deaths_csv << "\n"
      << "end_year=" << end_year << "\n"
      << "exposure_df=" << exposure_df << "\n"
      << "lag_df=" << lag_df << "\n"
      << "lag_max=" << lag_max << "\n"
      << "n_boot=" << n_boot << "\n"
      << "n_paths=" << n_paths << "\n"
      << "output_dir=" << output_dir << "\n"
      << "population_csv=" << population_csv << "\n"
      << "project_horizon_weeks=" << project_horizon_weeks << "\n"
      << "project_start_year=" << project_start_year << "\n"
      << "regions=" << join(regions) << "\n"
      << "scenario_csv=" << scenario_csv << "\n"
      << "seed=" << seed << "\n"
      << "start_year=" << start_year << "\n"
      << "synth_identical_regions=" << (synth_identical_regions ? 1 : 0) << "\n"
      << "synth_noise_sigma=" << format_double(synth_noise_sigma) << "\n"
      << "synth_scenario_shift=" << format_double(synth_scenario_shift) << "\n"
      << "synth_scenario_years=" << synth_scenario_years << "\n"
      << "variant=" << variant_name(variant) << "\n";
  return out.str();
}

void apply_override(RunConfig& cfg, const std::string& key, const std::string& value) {
  auto as_int = [&](const std::string& v) {
    try {
      std::size_t used = 0;
      const int parsed = std::stoi(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return parsed;
    } catch (const std::exception&) {
      throw InputError("config key '" + key + "': bad integer '" + v + "'");
    }
  };
  auto as_double = [&](const std::string& v) {
    try {
      std::size_t used = 0;
      const double parsed = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return parsed;
    } catch (const std::exception&) {
      throw InputError("config key '" + key + "': bad number '" + v + "'");
    }
  };

  if (key == "variant") {
    if (value == "lc")
      cfg.variant = Variant::Lc;
    else if (value == "ll")
      cfg.variant = Variant::Ll;
    else
      throw InputError("config: variant must be 'lc' or 'll'");
  } else if (key == "regions")
    cfg.regions = split_list(value);
  else if (key == "age_groups")
    cfg.age_groups = split_list(value);
  else if (key == "start_year")
    cfg.start_year = as_int(value);
  else if (key == "end_year")
    cfg.end_year = as_int(value);
  else if (key == "lag_max")
    cfg.lag_max = as_int(value);
  else if (key == "exposure_df")
    cfg.exposure_df = as_int(value);
  else if (key == "lag_df")
    cfg.lag_df = as_int(value);
  else if (key == "backfit_delta")
    cfg.backfit_delta = as_double(value);
  else if (key == "backfit_max_iter")
    cfg.backfit_max_iter = as_int(value);
  else if (key == "cv_initial")
    cfg.cv_initial = as_int(value);
  else if (key == "cv_step")
    cfg.cv_step = as_int(value);
  else if (key == "cv_horizon")
    cfg.cv_horizon = as_int(value);
  else if (key == "cv_folds")
    cfg.cv_folds = as_int(value);
  else if (key == "cv_fold_convention")
    cfg.cv_fold_convention = value;
  else if (key == "n_boot")
    cfg.n_boot = as_int(value);
  else if (key == "n_paths")
    cfg.n_paths = as_int(value);
  else if (key == "seed")
    cfg.seed = static_cast<std::uint64_t>(std::stoull(value));
  else if (key == "output_dir")
    cfg.output_dir = value;
  else if (key == "deaths_csv")
    cfg.deaths_csv = value;
  else if (key == "population_csv")
    cfg.population_csv = value;
  else if (key == "climate_csv")
    cfg.climate_csv = value;
  else if (key == "scenario_csv")
    cfg.scenario_csv = value;
  else if (key == "climate_cadence")
    cfg.climate_cadence = value;
  else if (key == "project_start_year")
    cfg.project_start_year = as_int(value);
  else if (key == "project_horizon_weeks")
    cfg.project_horizon_weeks = as_int(value);
  else if (key == "curve_grid_points")
    cfg.curve_grid_points = as_int(value);
  else if (key == "synth_noise_sigma")
    cfg.synth_noise_sigma = as_double(value);
  else if (key == "synth_scenario_years")
    cfg.synth_scenario_years = as_int(value);
  else if (key == "synth_scenario_shift")
    cfg.synth_scenario_shift = as_double(value);
  else if (key == "synth_identical_regions")
    cfg.synth_identical_regions = value == "1" || value == "true";
  else
    throw InputError("unknown config key '" + key + "'");
}

RunConfig config_from_pairs(const std::vector<std::pair<std::string, std::string>>& pairs) {
  RunConfig cfg;
  cfg.regions = {"EL30", "PT170", "ITI43"};
  cfg.age_groups = {"20-64", "65-74", "75-84", "85+"};
  for (const auto& [key, value] : pairs) apply_override(cfg, key, value);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file: " + path.string());
  std::vector<std::pair<std::string, std::string>> pairs;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw InputError(path.string() + ":" + std::to_string(line_number) +
                       ": expected key=value");
    pairs.emplace_back(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
  }
  return config_from_pairs(pairs);
}

}  // namespace climort

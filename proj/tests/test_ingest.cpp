#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <random>

#include "climort/ingest.hpp"
#include "climort/synth.hpp"

using namespace climort;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("climort_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path file(const std::string& name, const std::string& content) const {
    const fs::path p = path / name;
    std::ofstream out(p);
    out << content;
    return p;
  }
};

}  // namespace

TEST_CASE("mortality csv") {
  TempDir tmp;
  SUBCASE("a well-formed row becomes one cell") {
    const auto p = tmp.file("d.csv",
                            "region,age_group,year,week,deaths\n"
                            "EL30,85+,2015,1,312\n");
    const DeathsTable t = read_mortality_csv(p);
    REQUIRE(t.cells.size() == 1);
    CHECK(t.cells.at({"EL30", "85+", 2015, 1}) == 312.0);
  }
  SUBCASE("empty files are rejected") {
    const auto p = tmp.file("d.csv", "region,age_group,year,week,deaths\n");
    CHECK_THROWS_WITH_AS(read_mortality_csv(p), doctest::Contains("no data rows"), InputError);
  }
  SUBCASE("duplicate keys are rejected") {
    const auto p = tmp.file("d.csv",
                            "region,age_group,year,week,deaths\n"
                            "EL30,85+,2015,1,312\n"
                            "EL30,85+,2015,1,313\n");
    CHECK_THROWS_WITH_AS(read_mortality_csv(p), doctest::Contains("duplicate"), InputError);
  }
  SUBCASE("malformed rows carry their line number") {
    const auto p = tmp.file("d.csv",
                            "region,age_group,year,week,deaths\n"
                            "EL30,85+,2015,1,312\n"
                            "EL30,85+,2015,two,5\n");
    CHECK_THROWS_WITH_AS(read_mortality_csv(p), doctest::Contains(":3"), InputError);
  }
  SUBCASE("week 53 rows are dropped") {
    const auto p = tmp.file("d.csv",
                            "region,age_group,year,week,deaths\n"
                            "EL30,85+,2015,53,9\n"
                            "EL30,85+,2015,2,5\n");
    const DeathsTable t = read_mortality_csv(p);
    CHECK(t.cells.size() == 1);
  }
  SUBCASE("negative deaths are rejected") {
    const auto p = tmp.file("d.csv",
                            "region,age_group,year,week,deaths\n"
                            "EL30,85+,2015,1,-3\n");
    CHECK_THROWS_AS(read_mortality_csv(p), InputError);
  }
}

TEST_CASE("population csv") {
  TempDir tmp;
  const auto p = tmp.file("p.csv",
                          "region,age_group,year,population\n"
                          "EL30,85+,2015,60000\n");
  const PopulationTable t = read_population_csv(p);
  CHECK(t.cells.at({"EL30", "85+", 2015}) == 60000.0);
  const auto bad = tmp.file("bad.csv",
                            "region,age_group,year,population\n"
                            "EL30,85+,2015,0\n");
  CHECK_THROWS_AS(read_population_csv(bad), InputError);
}

namespace {

std::string hourly_day(const std::string& region, const std::string& date,
                       const std::vector<double>& values) {
  std::string out;
  for (std::size_t h = 0; h < values.size(); ++h)
    out += region + "," + date + "," + std::to_string(h) + "," + format_double(values[h]) + "\n";
  return out;
}

}  // namespace

TEST_CASE("hourly climate aggregation") {
  TempDir tmp;
  SUBCASE("constant hours give equal min, mean and max") {
    std::string body = "region,date,hour,utci\n";
    // 9 days (one short week + 2 lookback) of constant 20
    for (int d = 0; d < 9; ++d)
      body += hourly_day("R1", date_from_serial(1000 + d), std::vector<double>(24, 20.0));
    const auto p = tmp.file("c.csv", body);
    const auto series = read_climate_csv(p, Cadence::Hourly, {"R1"}, 1, 0);
    REQUIRE(series.size() == 1);
    CHECK(series[0].mean_at(1) == 20.0);
    CHECK(series[0].min_at(1) == 20.0);
    CHECK(series[0].max_at(1) == 20.0);
  }
  SUBCASE("one value per hour from 10 to 33") {
    std::vector<double> hours(24);
    for (int h = 0; h < 24; ++h) hours[h] = 10.0 + h;
    std::string body = "region,date,hour,utci\n";
    for (int d = 0; d < 9; ++d) body += hourly_day("R1", date_from_serial(2000 + d), hours);
    const auto p = tmp.file("c.csv", body);
    const auto series = read_climate_csv(p, Cadence::Hourly, {"R1"}, 1, 0);
    CHECK(series[0].min_at(1) == 10.0);
    CHECK(series[0].max_at(1) == 33.0);
    CHECK(series[0].mean_at(1) == doctest::Approx(21.5).epsilon(1e-14));
  }
  SUBCASE("aggregation matches a brute-force group-by on random rows") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> level(-10.0, 40.0);
    std::string body = "region,date,hour,utci\n";
    std::map<int, std::vector<double>> by_day;
    for (int d = 0; d < 16; ++d) {
      std::vector<double> hours(24);
      for (auto& v : hours) v = level(rng);
      by_day[d] = hours;
      body += hourly_day("R2", date_from_serial(3000 + d), hours);
    }
    const auto p = tmp.file("c.csv", body);
    const auto series = read_climate_csv(p, Cadence::Hourly, {"R2"}, 2, 0);
    for (int d = 0; d < 16; ++d) {
      const int day = series[0].day_start() + d;
      const auto& hours = by_day[d];
      double lo = hours[0], hi = hours[0], sum = 0.0;
      for (double v : hours) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        sum += v;
      }
      CHECK(series[0].min_at(day) == doctest::Approx(lo).epsilon(1e-14));
      CHECK(series[0].max_at(day) == doctest::Approx(hi).epsilon(1e-14));
      CHECK(series[0].mean_at(day) == doctest::Approx(sum / 24.0).epsilon(1e-14));
    }
  }
  SUBCASE("short days aggregate the available hours") {
    std::string body = "region,date,hour,utci\n";
    body += hourly_day("R1", date_from_serial(4000), std::vector<double>(24, 15.0));
    body += hourly_day("R1", date_from_serial(4001), {10.0, 20.0});  // 2 hours only
    for (int d = 2; d < 9; ++d)
      body += hourly_day("R1", date_from_serial(4000 + d), std::vector<double>(24, 15.0));
    const auto p = tmp.file("c.csv", body);
    const auto series = read_climate_csv(p, Cadence::Hourly, {"R1"}, 1, 0);
    CHECK(series[0].mean_at(series[0].day_start() + 1) == doctest::Approx(15.0));
  }
  SUBCASE("gap days and out-of-order dates are errors") {
    std::string gap = "region,date,hour,utci\n";
    gap += hourly_day("R1", date_from_serial(5000), std::vector<double>(24, 1.0));
    gap += hourly_day("R1", date_from_serial(5002), std::vector<double>(24, 1.0));
    CHECK_THROWS_WITH_AS(read_climate_csv(tmp.file("g.csv", gap), Cadence::Hourly, {"R1"}, 1, 0),
                         doctest::Contains("gap"), InputError);

    std::string disorder = "region,date,hour,utci\n";
    disorder += hourly_day("R1", date_from_serial(5002), std::vector<double>(24, 1.0));
    disorder += hourly_day("R1", date_from_serial(5000), std::vector<double>(24, 1.0));
    CHECK_THROWS_WITH_AS(
        read_climate_csv(tmp.file("o.csv", disorder), Cadence::Hourly, {"R1"}, 1, 0),
        doctest::Contains("order"), InputError);
  }
}

TEST_CASE("daily climate files") {
  TempDir tmp;
  std::string body = "region,date,utci_mean,utci_min,utci_max\n";
  for (int d = 0; d < 7 + 15; ++d)
    body += "R1," + date_from_serial(6000 + d) + ",12,8,16\n";
  const auto p = tmp.file("c.csv", body);
  const auto series = read_climate_csv(p, Cadence::Daily, {"R1"}, 1, 21);
  // 15 leading days cover the 21-day window of week 1 (day -14)
  CHECK(series[0].day_start() == -14);
  CHECK(series[0].day_end() == 7);

  SUBCASE("missing regions are named") {
    CHECK_THROWS_WITH_AS(read_climate_csv(p, Cadence::Daily, {"R9"}, 1, 21),
                         doctest::Contains("R9"), InputError);
  }
  SUBCASE("files shorter than the sample are rejected") {
    CHECK_THROWS_AS(read_climate_csv(p, Cadence::Daily, {"R1"}, 4, 21), InputError);
  }
  SUBCASE("insufficient padding is replicated backwards") {
    std::string short_body = "region,date,utci_mean,utci_min,utci_max\n";
    for (int d = 0; d < 7; ++d)
      short_body += "R1," + date_from_serial(6000 + d) + ",12,8,16\n";
    const auto sp = tmp.file("s.csv", short_body);
    const auto padded = read_climate_csv(sp, Cadence::Daily, {"R1"}, 1, 21);
    CHECK(padded[0].day_start() == -14);
    CHECK(padded[0].mean_at(-14) == 12.0);
  }
}

TEST_CASE("scenario files") {
  TempDir tmp;
  SUBCASE("a 15-year daily file maps to 780 weeks") {
    std::string body = "region,date,utci_mean,utci_min,utci_max\n";
    for (int d = 0; d < 5460; ++d)
      body += "R1," + date_from_serial(9000 + d) + ",15,10,20\n";
    const auto p = tmp.file("scen.csv", body);
    const auto series = read_scenario_csv(p, {"R1"});
    REQUIRE(series.size() == 1);
    CHECK(series[0].size() == 5460);
    CHECK(series[0].day_start() == 1);
    CHECK(series[0].day_end() == 7 * 780);
  }
  SUBCASE("a missing utci_max column is a schema error") {
    const auto p = tmp.file("scen.csv",
                            "region,date,utci_mean,utci_min\n"
                            "R1,2031-01-01,15,10\n");
    CHECK_THROWS_WITH_AS(read_scenario_csv(p, {"R1"}), doctest::Contains("header"), InputError);
  }
  SUBCASE("a warming ramp fixture has nondecreasing annual means") {
    SynthConfig cfg;
    cfg.regions = {"R1"};
    cfg.scenario_years = 6;
    const SynthData data = generate_synthetic(cfg);
    const auto warmed = ramped(data.scenario_baseline, 5.0);
    const auto& s = warmed[0];
    double prev = -1e9;
    for (int y = 0; y < 6; ++y) {
      double sum = 0.0;
      for (int d = 1; d <= 364; ++d) sum += s.mean_at(364 * y + d);
      const double annual = sum / 364.0;
      CHECK(annual > prev);
      prev = annual;
    }
  }
}

TEST_CASE("config loading, overrides and validation") {
  TempDir tmp;
  const auto p = tmp.file("cfg.txt",
                          "# comment\n"
                          "variant = ll\n"
                          "regions = A,B\n"
                          "seed = 99\n"
                          "lag_max = 14\n");
  RunConfig cfg = load_config(p);
  CHECK(cfg.variant == Variant::Ll);
  CHECK(cfg.regions == std::vector<std::string>{"A", "B"});
  CHECK(cfg.seed == 99);
  CHECK(cfg.lag_max == 14);
  CHECK_NOTHROW(cfg.validate());

  apply_override(cfg, "regions", "A");
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("2 regions"), InputError);
  CHECK_THROWS_AS(apply_override(cfg, "unknown_key", "1"), InputError);
  CHECK_THROWS_AS(apply_override(cfg, "lag_max", "abc"), InputError);

  apply_override(cfg, "variant", "lc");
  apply_override(cfg, "backfit_delta", "0");
  CHECK_THROWS_AS(cfg.validate(), InputError);

  // the canonical rendering is stable, so the hash is too
  RunConfig again = load_config(p);
  CHECK(again.canonical_text() == load_config(p).canonical_text());
  CHECK(again.hash() == load_config(p).hash());
}

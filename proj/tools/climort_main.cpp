#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "climort/bundle.hpp"
#include "climort/evaluate.hpp"
#include "climort/forecast.hpp"
#include "climort/ingest.hpp"
#include "climort/synth.hpp"

namespace fs = std::filesystem;
using namespace climort;

namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
};

RunConfig resolve_config(const CommonArgs& args) {
  RunConfig cfg = args.config_path.empty() ? config_from_pairs({}) : load_config(args.config_path);
  for (const auto& raw : args.overrides) {
    const auto eq = raw.find('=');
    if (eq == std::string::npos) throw InputError("--set expects key=value, got '" + raw + "'");
    apply_override(cfg, raw.substr(0, eq), raw.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

OutputContext make_context(const RunConfig& cfg) { return {cfg.hash(), cfg.seed}; }

std::vector<DailyClimateSeries> load_climate(const RunConfig& cfg) {
  if (cfg.climate_csv.empty()) throw InputError("config: climate_csv is required");
  return read_climate_csv(cfg.climate_csv,
                          cfg.climate_cadence == "hourly" ? Cadence::Hourly : Cadence::Daily,
                          cfg.regions, cfg.n_weeks(), cfg.lag_max);
}

MortalityPanel load_panel(const RunConfig& cfg) {
  if (cfg.deaths_csv.empty()) throw InputError("config: deaths_csv is required");
  if (cfg.population_csv.empty()) throw InputError("config: population_csv is required");
  return MortalityPanel::build(read_mortality_csv(cfg.deaths_csv),
                               read_population_csv(cfg.population_csv),
                               make_age_groups(cfg.age_groups), cfg.regions, cfg.start_year,
                               cfg.end_year - cfg.start_year + 1);
}

void write_climate_file(const fs::path& path, const OutputContext& ctx,
                        const std::vector<DailyClimateSeries>& series, long serial_base) {
  CsvWriter w(path, ctx, {"region", "date", "utci_mean", "utci_min", "utci_max"});
  for (const auto& s : series)
    for (int day = s.day_start(); day <= s.day_end(); ++day)
      w.row({s.region(), date_from_serial(serial_base + day - 1), format_double(s.mean_at(day)),
             format_double(s.min_at(day)), format_double(s.max_at(day))});
}

int cmd_synth(const RunConfig& cfg) {
  SynthConfig synth;
  synth.regions = cfg.regions;
  synth.age_labels = cfg.age_groups;
  synth.start_year = cfg.start_year;
  synth.n_years = cfg.end_year - cfg.start_year + 1;
  synth.seed = cfg.seed;
  synth.variant = cfg.variant;
  synth.lag_max = cfg.lag_max;
  synth.exposure_df = cfg.exposure_df;
  synth.lag_df = cfg.lag_df;
  synth.noise_sigma = cfg.synth_noise_sigma;
  synth.identical_regions = cfg.synth_identical_regions;
  synth.scenario_years = cfg.synth_scenario_years;
  if (static_cast<int>(synth.gamma.size()) != static_cast<int>(synth.age_labels.size())) {
    synth.gamma.assign(synth.age_labels.size(), 1.0);
    for (std::size_t x = 0; x < synth.gamma.size(); ++x)
      synth.gamma[x] = 0.25 + 1.05 * static_cast<double>(x) /
                                  std::max<std::size_t>(1, synth.gamma.size() - 1);
  }
  const SynthData data = generate_synthetic(synth);
  const OutputContext ctx = make_context(cfg);
  const fs::path dir = cfg.output_dir;
  fs::create_directories(dir);

  {
    CsvWriter w(dir / "deaths.csv", ctx, {"region", "age_group", "year", "week", "deaths"});
    const auto& p = data.panel;
    for (int i = 0; i < p.n_regions(); ++i)
      for (int x = 0; x < p.n_ages(); ++x)
        for (int t = 1; t <= p.n_weeks(); ++t)
          w.row({p.regions()[i], p.ages()[x].label,
                 std::to_string(cfg.start_year + (t - 1) / 52), std::to_string((t - 1) % 52 + 1),
                 format_double(p.deaths(x, t, i))});
  }
  {
    CsvWriter w(dir / "population.csv", ctx, {"region", "age_group", "year", "population"});
    const auto& p = data.panel;
    for (int i = 0; i < p.n_regions(); ++i)
      for (int x = 0; x < p.n_ages(); ++x)
        for (int y = 1; y <= p.n_years(); ++y)
          w.row({p.regions()[i], p.ages()[x].label, std::to_string(cfg.start_year + y - 1),
                 format_double(p.population(x, y, i))});
  }
  // day 1 of the sample maps to 1 January of the start year; scenario days
  // continue right after the last sample day
  const long base = date_serial(cfg.start_year, 1, 1);
  write_climate_file(dir / "climate_daily.csv", ctx, data.climate, base);
  const long scen_base = base + 7 * data.panel.n_weeks();
  write_climate_file(dir / "scenario_baseline.csv", ctx, data.scenario_baseline, scen_base);
  {
    std::vector<DailyClimateSeries> shifted;
    for (const auto& s : data.scenario_baseline) shifted.push_back(s.shifted(cfg.synth_scenario_shift));
    write_climate_file(dir / "scenario_shift.csv", ctx, shifted, scen_base);
  }
  write_climate_file(dir / "scenario_ramp.csv", ctx, ramped(data.scenario_baseline, 4.0),
                     scen_base);

  // ground truth for test assertions
  if (synth.variant == Variant::Lc) {
    CsvWriter w(dir / "truth_lc.csv", ctx, {"region", "param", "index", "value"});
    for (std::size_t i = 0; i < data.true_lc.size(); ++i) {
      for (int x = 0; x < data.true_lc[i].a.size(); ++x) {
        w.row({cfg.regions[i], "a", std::to_string(x + 1), format_double(data.true_lc[i].a[x])});
        w.row({cfg.regions[i], "b", std::to_string(x + 1), format_double(data.true_lc[i].b[x])});
      }
      for (int t = 0; t < data.true_lc[i].kappa.size(); ++t)
        w.row({cfg.regions[i], "kappa", std::to_string(t + 1),
               format_double(data.true_lc[i].kappa[t])});
    }
  } else {
    CsvWriter w(dir / "truth_ll.csv", ctx, {"region", "param", "index", "value"});
    for (int x = 0; x < data.true_ll.B.size(); ++x)
      w.row({"all", "B", std::to_string(x + 1), format_double(data.true_ll.B[x])});
    for (int t = 0; t < data.true_ll.K.size(); ++t)
      w.row({"all", "K", std::to_string(t + 1), format_double(data.true_ll.K[t])});
    for (std::size_t i = 0; i < cfg.regions.size(); ++i) {
      for (int x = 0; x < data.true_ll.A.rows(); ++x) {
        w.row({cfg.regions[i], "A", std::to_string(x + 1),
               format_double(data.true_ll.A(x, static_cast<int>(i)))});
        w.row({cfg.regions[i], "b", std::to_string(x + 1),
               format_double(data.true_ll.b(x, static_cast<int>(i)))});
      }
      for (int t = 0; t < data.true_ll.kappa.rows(); ++t)
        w.row({cfg.regions[i], "kappa", std::to_string(t + 1),
               format_double(data.true_ll.kappa(t, static_cast<int>(i)))});
    }
  }
  {
    CsvWriter w(dir / "truth_zeta.csv", ctx,
                {"region", "age_group", "coef_index", "value", "climate_sensitive"});
    for (std::size_t i = 0; i < data.true_zeta.size(); ++i)
      for (std::size_t x = 0; x < data.true_zeta[i].size(); ++x)
        for (Eigen::Index c = 0; c < data.true_zeta[i][x].size(); ++c)
          w.row({cfg.regions[i], cfg.age_groups[x], std::to_string(c),
                 format_double(data.true_zeta[i][x][c]), data.climate_sensitive[x] ? "1" : "0"});
  }
  {
    // ready-to-run config pointing at the generated files
    std::ofstream out(dir / "fit_config.txt");
    RunConfig echo = cfg;
    echo.deaths_csv = (dir / "deaths.csv").string();
    echo.population_csv = (dir / "population.csv").string();
    echo.climate_csv = (dir / "climate_daily.csv").string();
    echo.scenario_csv = (dir / "scenario_baseline.csv").string();
    echo.project_horizon_weeks = 52 * cfg.synth_scenario_years;
    echo.output_dir = (dir / "fit").string();
    out << echo.canonical_text();
  }
  std::cout << "synth: wrote " << dir.string() << " (seed " << cfg.seed << ")\n";
  return 0;
}

int cmd_fit(const RunConfig& cfg) {
  const MortalityPanel panel = load_panel(cfg);
  const auto climate = load_climate(cfg);
  const FittedModel model = cfg.variant == Variant::Lc
                                ? backfit_lc(panel, climate, cfg.backfit())
                                : backfit_ll(panel, climate, cfg.backfit());
  const EquivalenceReport report = check_equivalence(model);
  const OutputContext ctx = make_context(cfg);
  save_bundle(cfg.output_dir, model, ctx);
  save_equivalence(cfg.output_dir, report, ctx);
  std::cout << "fit: variant=" << variant_name(model.variant) << " iterations="
            << model.iterations << " converged=" << (model.converged ? "yes" : "no")
            << " equivalence_worst=" << report.worst << " seed=" << cfg.seed << "\n";
  if (!report.pass) {
    std::cerr << "error: equivalence check failed (worst " << report.worst << " > "
              << report.tolerance << ")\n";
    return 1;
  }
  return 0;
}

int cmd_curves(const RunConfig& cfg) {
  const FittedModel model = load_bundle(cfg.output_dir);
  const OutputContext ctx = make_context(cfg);
  CsvWriter curve_file(fs::path(cfg.output_dir) / "curves.csv", ctx,
                       {"region", "age_group", "utci", "log_rr", "rr", "rr_lo", "rr_hi"});
  CsvWriter slice_file(fs::path(cfg.output_dir) / "lag_slices.csv", ctx,
                       {"region", "age_group", "at_utci", "lag", "log_rr", "rr", "rr_lo", "rr_hi"});
  for (int i = 0; i < model.n_regions(); ++i) {
    for (int x = 0; x < model.n_ages(); ++x) {
      const DlnmFit fit = model.dlnm(i, x);
      const double lo = fit.spec->exposure.boundary_min();
      const double hi = fit.spec->exposure.boundary_max();
      Eigen::VectorXd grid(cfg.curve_grid_points);
      for (int g = 0; g < cfg.curve_grid_points; ++g)
        grid[g] = lo + (hi - lo) * g / (cfg.curve_grid_points - 1);
      const ResponseCurve curve = overall_cumulative_curve(fit, grid);
      for (Eigen::Index g = 0; g < grid.size(); ++g)
        curve_file.row({model.regions[i], model.ages[x].label, format_double(curve.utci[g]),
                        format_double(curve.log_rr[g]), format_double(curve.rr[g]),
                        format_double(curve.rr_lo[g]), format_double(curve.rr_hi[g])});
      for (const double at : {-5.0, 35.0}) {
        const LagSlice slice = lag_slice(fit, at);
        for (Eigen::Index l = 0; l < slice.lag.size(); ++l)
          slice_file.row({model.regions[i], model.ages[x].label, format_double(at),
                          std::to_string(static_cast<int>(slice.lag[l])),
                          format_double(slice.log_rr[l]), format_double(slice.rr[l]),
                          format_double(slice.rr_lo[l]), format_double(slice.rr_hi[l])});
      }
    }
  }
  std::cout << "curves: wrote " << curve_file.path().string() << "\n";
  return 0;
}

int cmd_loadings(const RunConfig& cfg) {
  const FittedModel model = load_bundle(cfg.output_dir);
  const ClimateLoadingSeries loading = climate_loading(model);
  const OutputContext ctx = make_context(cfg);
  CsvWriter weekly(fs::path(cfg.output_dir) / "loadings.csv", ctx,
                   {"region", "age_group", "year", "week", "theta"});
  CsvWriter annual(fs::path(cfg.output_dir) / "loadings_annual.csv", ctx,
                   {"region", "age_group", "year", "annual_theta"});
  for (int i = 0; i < model.n_regions(); ++i)
    for (int x = 0; x < model.n_ages(); ++x) {
      const auto& theta = loading.theta[i][x];
      for (Eigen::Index t = 0; t < theta.size(); ++t)
        weekly.row({model.regions[i], model.ages[x].label,
                    std::to_string(cfg.start_year + static_cast<int>(t) / 52),
                    std::to_string(static_cast<int>(t) % 52 + 1), format_double(theta[t])});
      const auto& a = loading.annual[i][x];
      for (Eigen::Index y = 0; y < a.size(); ++y)
        annual.row({model.regions[i], model.ages[x].label,
                    std::to_string(cfg.start_year + static_cast<int>(y)), format_double(a[y])});
    }
  std::cout << "loadings: wrote " << weekly.path().string() << "\n";
  return 0;
}

int cmd_cv(const RunConfig& cfg) {
  const MortalityPanel panel = load_panel(cfg);
  const auto climate = load_climate(cfg);
  std::vector<std::unique_ptr<CvModel>> models;
  models.push_back(make_cv_model("baseline_lc", cfg.backfit()));
  models.push_back(make_cv_model("dlnm_lc", cfg.backfit()));
  if (panel.n_regions() >= 2) {
    models.push_back(make_cv_model("baseline_ll", cfg.backfit()));
    models.push_back(make_cv_model("dlnm_ll", cfg.backfit()));
  }
  const MaeTable table = run_cv(panel, climate, models, cfg.cv_plan());
  const OutputContext ctx = make_context(cfg);
  fs::create_directories(cfg.output_dir);
  CsvWriter w(fs::path(cfg.output_dir) / "mae.csv", ctx,
              {"region", "model", "age_group", "mae_x100"});
  for (const auto& row : table.rows)
    w.row({row.region, row.model, row.age, format_double(row.mae_x100)});
  std::cout << "cv: wrote " << w.path().string() << "\n";
  return 0;
}

int cmd_project(const RunConfig& cfg, bool zero_variance) {
  const FittedModel model = load_bundle(cfg.output_dir);
  if (cfg.scenario_csv.empty()) throw InputError("config: scenario_csv is required");
  const auto scenario = read_scenario_csv(
      cfg.scenario_csv, cfg.regions,
      cfg.project_horizon_weeks > 0 ? std::optional<int>(cfg.project_horizon_weeks)
                                    : std::nullopt);
  ProjectionOptions opts;
  opts.n_paths = cfg.n_paths;
  opts.seed = cfg.seed;
  opts.offset_weeks = cfg.projection_offset_weeks();
  opts.zero_variance = zero_variance;
  const ProjectionFan fan = project(model, scenario, opts);

  const OutputContext ctx = make_context(cfg);
  const int first_global = fan.first_week;
  CsvWriter weekly(fs::path(cfg.output_dir) / "projection.csv", ctx,
                   {"region", "age_group", "year", "week", "mean", "p2.5", "p97.5"});
  for (int i = 0; i < model.n_regions(); ++i)
    for (int x = 0; x < model.n_ages(); ++x)
      for (int k = 0; k < fan.n_weeks; ++k) {
        const int w = first_global + k;
        weekly.row({model.regions[i], model.ages[x].label,
                    std::to_string(cfg.start_year + (w - 1) / 52),
                    std::to_string((w - 1) % 52 + 1), format_double(fan.mean[i][x][k]),
                    format_double(fan.lo[i][x][k]), format_double(fan.hi[i][x][k])});
      }
  if (fan.n_years > 0) {
    CsvWriter annual(fs::path(cfg.output_dir) / "projection_annual.csv", ctx,
                     {"region", "age_group", "year", "mean", "p2.5", "p97.5"});
    const int first_year = cfg.start_year + (first_global - 1) / 52;
    for (int i = 0; i < model.n_regions(); ++i)
      for (int x = 0; x < model.n_ages(); ++x)
        for (int y = 0; y < fan.n_years; ++y)
          annual.row({model.regions[i], model.ages[x].label, std::to_string(first_year + y),
                      format_double(fan.annual_mean[i][x][y]),
                      format_double(fan.annual_lo[i][x][y]),
                      format_double(fan.annual_hi[i][x][y])});
  }
  std::cout << "project: wrote " << weekly.path().string() << " (" << fan.n_paths
            << " paths, seed " << fan.seed << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"climate-driven stochastic mortality modelling"};
  app.set_version_flag("--version", std::string("climort ") + kVersion);
  app.require_subcommand(1);

  CommonArgs args;
  bool zero_variance = false;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("-c,--config", args.config_path, "key=value config file");
    cmd->add_option("--set", args.overrides, "override a config key (key=value, repeatable)");
  };

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset with ground truth");
  CLI::App* fit = app.add_subcommand("fit", "fit the backfitting model and write the bundle");
  CLI::App* curves = app.add_subcommand("curves", "export exposure-response curves and lag slices");
  CLI::App* loadings = app.add_subcommand("loadings", "export weekly and annual climate loadings");
  CLI::App* cv = app.add_subcommand("cv", "expanding-window cross-validation MAE table");
  CLI::App* project_cmd = app.add_subcommand("project", "Monte Carlo scenario projection");
  for (CLI::App* cmd : {synth, fit, curves, loadings, cv, project_cmd}) add_common(cmd);
  project_cmd->add_flag("--zero-variance", zero_variance,
                        "suppress all stochastic sources (point forecast)");

  try {
    app.parse(argc, argv);
    const RunConfig cfg = resolve_config(args);
    if (synth->parsed()) return cmd_synth(cfg);
    if (fit->parsed()) return cmd_fit(cfg);
    if (curves->parsed()) return cmd_curves(cfg);
    if (loadings->parsed()) return cmd_loadings(cfg);
    if (cv->parsed()) return cmd_cv(cfg);
    if (project_cmd->parsed()) return cmd_project(cfg, zero_variance);
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ModelError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

#include "climort/bundle.hpp"

#include <map>
#include <sstream>

namespace climort {

namespace {

std::string hex64(std::uint64_t v) {
  std::ostringstream out;
  out << std::hex << v;
  return out.str();
}

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

std::vector<std::vector<std::string>> read_rows(const std::filesystem::path& path,
                                                std::size_t n_fields) {
  std::ifstream in(path);
  if (!in) throw InputError("bundle: cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    if (!have_header) {
      have_header = true;
      continue;
    }
    auto fields = split(stripped, ',');
    if (fields.size() != n_fields)
      throw InputError("bundle: malformed row in " + path.string());
    rows.push_back(std::move(fields));
  }
  return rows;
}

double to_double(const std::string& s) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::stod(s);
}

}  // namespace

std::string OutputContext::header_line() const {
  return std::string("# climort ") + kVersion + " config_hash=" + hex64(config_hash) +
         " seed=" + std::to_string(seed);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const OutputContext& ctx,
                     const std::vector<std::string>& columns)
    : path_(path), out_(path), n_columns_(columns.size()) {
  if (!out_) throw InputError("cannot write file: " + path.string());
  out_ << ctx.header_line() << "\n";
  for (std::size_t i = 0; i < columns.size(); ++i)
    out_ << columns[i] << (i + 1 < columns.size() ? "," : "");
  out_ << "\n";
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  if (fields.size() != n_columns_)
    throw ModelError("csv writer: wrong field count for " + path_.string());
  for (std::size_t i = 0; i < fields.size(); ++i)
    out_ << fields[i] << (i + 1 < fields.size() ? "," : "");
  out_ << "\n";
  if (!out_) throw InputError("write failure: " + path_.string());
}

namespace {

void write_region_age_value(const std::filesystem::path& path, const OutputContext& ctx,
                            const FittedModel& model,
                            const std::function<double(int, int)>& value) {
  CsvWriter w(path, ctx, {"region", "age_group", "value"});
  for (int i = 0; i < model.n_regions(); ++i)
    for (int x = 0; x < model.n_ages(); ++x)
      w.row({model.regions[i], model.ages[x].label, format_double(value(i, x))});
}

void write_region_week_value(const std::filesystem::path& path, const OutputContext& ctx,
                             const FittedModel& model,
                             const std::function<double(int, int)>& value) {
  CsvWriter w(path, ctx, {"region", "week", "value"});
  for (int i = 0; i < model.n_regions(); ++i)
    for (int t = 0; t < model.n_weeks(); ++t)
      w.row({model.regions[i], std::to_string(t + 1), format_double(value(i, t))});
}

}  // namespace

void save_bundle(const std::filesystem::path& dir, const FittedModel& model,
                 const OutputContext& ctx) {
  std::filesystem::create_directories(dir);

  {
    std::ofstream manifest(dir / "manifest.txt");
    if (!manifest) throw InputError("cannot write " + (dir / "manifest.txt").string());
    manifest << ctx.header_line() << "\n";
    manifest << "bundle_version=1\n";
    manifest << "variant=" << variant_name(model.variant) << "\n";
    manifest << "seed=" << ctx.seed << "\n";
    manifest << "config_hash=" << hex64(ctx.config_hash) << "\n";
    std::string regions, ages;
    for (const auto& r : model.regions) regions += (regions.empty() ? "" : ",") + r;
    for (const auto& a : model.ages) ages += (ages.empty() ? "" : ",") + a.label;
    manifest << "regions=" << regions << "\n";
    manifest << "age_groups=" << ages << "\n";
    manifest << "n_weeks=" << model.n_weeks() << "\n";
    manifest << "iterations=" << model.iterations << "\n";
    manifest << "converged=" << (model.converged ? 1 : 0) << "\n";
    manifest << "delta=" << format_double(model.config.delta) << "\n";
    manifest << "max_iter=" << model.config.max_iter << "\n";
    manifest << "lag_max=" << model.config.lag_max << "\n";
    manifest << "exposure_df=" << model.config.exposure_df << "\n";
    manifest << "lag_df=" << model.config.lag_df << "\n";
  }

  {
    CsvWriter w(dir / "trace.csv", ctx, {"region", "iteration", "rss", "sup_change"});
    for (std::size_t k = 0; k < model.traces.size(); ++k) {
      const std::string label =
          model.variant == Variant::Lc ? model.regions[k] : std::string("all");
      const auto& trace = model.traces[k];
      for (std::size_t j = 0; j < trace.rss.size(); ++j)
        w.row({label, std::to_string(j), format_double(trace.rss[j]),
               j == 0 ? "" : format_double(trace.sup_change[j - 1])});
    }
  }

  if (model.variant == Variant::Lc) {
    write_region_age_value(dir / "lc_a.csv", ctx, model,
                           [&](int i, int x) { return model.lc[i].a[x]; });
    write_region_age_value(dir / "lc_b.csv", ctx, model,
                           [&](int i, int x) { return model.lc[i].b[x]; });
    write_region_week_value(dir / "lc_kappa.csv", ctx, model,
                            [&](int i, int t) { return model.lc[i].kappa[t]; });
  } else {
    write_region_age_value(dir / "ll_A.csv", ctx, model,
                           [&](int i, int x) { return model.ll.A(x, i); });
    write_region_age_value(dir / "ll_b.csv", ctx, model,
                           [&](int i, int x) { return model.ll.b(x, i); });
    write_region_week_value(dir / "ll_kappa.csv", ctx, model,
                            [&](int i, int t) { return model.ll.kappa(t, i); });
    {
      CsvWriter w(dir / "ll_B.csv", ctx, {"age_group", "value"});
      for (int x = 0; x < model.n_ages(); ++x)
        w.row({model.ages[x].label, format_double(model.ll.B[x])});
    }
    {
      CsvWriter w(dir / "ll_K.csv", ctx, {"week", "value"});
      for (int t = 0; t < model.n_weeks(); ++t)
        w.row({std::to_string(t + 1), format_double(model.ll.K[t])});
    }
  }

  {
    CsvWriter w(dir / "zeta.csv", ctx, {"region", "age_group", "coef_index", "value"});
    for (int i = 0; i < model.n_regions(); ++i)
      for (int x = 0; x < model.n_ages(); ++x)
        for (Eigen::Index c = 0; c < model.zeta[i][x].size(); ++c)
          w.row({model.regions[i], model.ages[x].label, std::to_string(c),
                 format_double(model.zeta[i][x][c])});
  }
  {
    CsvWriter w(dir / "zeta_iterations.csv", ctx,
                {"region", "age_group", "iteration", "coef_index", "value"});
    for (int i = 0; i < model.n_regions(); ++i)
      for (int x = 0; x < model.n_ages(); ++x)
        for (std::size_t j = 0; j < model.zeta_iterations[i][x].size(); ++j)
          for (Eigen::Index c = 0; c < model.zeta_iterations[i][x][j].size(); ++c)
            w.row({model.regions[i], model.ages[x].label, std::to_string(j), std::to_string(c),
                   format_double(model.zeta_iterations[i][x][j][c])});
  }
  {
    CsvWriter w(dir / "zeta_cov.csv", ctx, {"region", "age_group", "row", "col", "value"});
    for (int i = 0; i < model.n_regions(); ++i)
      for (int x = 0; x < model.n_ages(); ++x)
        for (Eigen::Index r = 0; r < model.zeta_cov[i][x].rows(); ++r)
          for (Eigen::Index c = 0; c < model.zeta_cov[i][x].cols(); ++c)
            w.row({model.regions[i], model.ages[x].label, std::to_string(r), std::to_string(c),
                   format_double(model.zeta_cov[i][x](r, c))});
  }
  write_region_age_value(dir / "sigma2.csv", ctx, model,
                         [&](int i, int x) { return model.sigma2[i][x]; });
  {
    CsvWriter w(dir / "knots.csv", ctx, {"region", "dimension", "index", "value"});
    for (int i = 0; i < model.n_regions(); ++i) {
      const auto& spec = model.basis[i].spec;
      for (std::size_t k = 0; k < spec.exposure.knots().size(); ++k)
        w.row({model.regions[i], "exposure", std::to_string(k),
               format_double(spec.exposure.knots()[k])});
      for (std::size_t k = 0; k < spec.lag.knots().size(); ++k)
        w.row({model.regions[i], "lag", std::to_string(k), format_double(spec.lag.knots()[k])});
    }
  }
  {
    CsvWriter w(dir / "design.csv", ctx, {"region", "week", "col", "value"});
    for (int i = 0; i < model.n_regions(); ++i)
      for (int t = 0; t < model.n_weeks(); ++t)
        for (Eigen::Index c = 0; c < model.basis[i].X.cols(); ++c)
          w.row({model.regions[i], std::to_string(t + 1), std::to_string(c),
                 format_double(model.basis[i].X(t, c))});
  }
  {
    CsvWriter w(dir / "log_rates.csv", ctx,
                {"region", "age_group", "week", "observed_log", "final_working_log"});
    for (int i = 0; i < model.n_regions(); ++i)
      for (int x = 0; x < model.n_ages(); ++x)
        for (int t = 0; t < model.n_weeks(); ++t)
          w.row({model.regions[i], model.ages[x].label, std::to_string(t + 1),
                 format_double(model.observed_log[i](x, t)),
                 format_double(model.final_working_log[i](x, t))});
  }
}

void save_equivalence(const std::filesystem::path& dir, const EquivalenceReport& report,
                      const OutputContext& ctx) {
  CsvWriter w(dir / "equivalence.csv", ctx,
              {"region", "age_group", "max_abs_diff", "worst_coefficient", "pass"});
  for (const auto& cell : report.cells)
    w.row({cell.region, cell.age, format_double(cell.max_abs_diff),
           std::to_string(cell.worst_coefficient),
           cell.max_abs_diff < report.tolerance ? "1" : "0"});
}

namespace {

std::map<std::string, std::string> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("bundle: cannot open " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) continue;
    kv[trim(stripped.substr(0, eq))] = trim(stripped.substr(eq + 1));
  }
  return kv;
}

int region_index(const FittedModel& model, const std::string& region) {
  for (int i = 0; i < model.n_regions(); ++i)
    if (model.regions[i] == region) return i;
  throw InputError("bundle: unknown region '" + region + "'");
}

int age_index(const FittedModel& model, const std::string& age) {
  for (int x = 0; x < model.n_ages(); ++x)
    if (model.ages[x].label == age) return x;
  throw InputError("bundle: unknown age group '" + age + "'");
}

}  // namespace

FittedModel load_bundle(const std::filesystem::path& dir) {
  const auto manifest = read_manifest(dir / "manifest.txt");
  auto need = [&](const std::string& key) {
    const auto it = manifest.find(key);
    if (it == manifest.end()) throw InputError("bundle manifest: missing key '" + key + "'");
    return it->second;
  };

  FittedModel model;
  model.variant = need("variant") == "ll" ? Variant::Ll : Variant::Lc;
  for (const auto& r : split(need("regions"), ','))
    if (!r.empty()) model.regions.push_back(r);
  std::vector<std::string> age_labels;
  for (const auto& a : split(need("age_groups"), ','))
    if (!a.empty()) age_labels.push_back(a);
  model.ages = make_age_groups(age_labels);
  const int n_weeks = std::stoi(need("n_weeks"));
  model.iterations = std::stoi(need("iterations"));
  model.converged = need("converged") == "1";
  model.config.delta = std::stod(need("delta"));
  model.config.max_iter = std::stoi(need("max_iter"));
  model.config.lag_max = std::stoi(need("lag_max"));
  model.config.exposure_df = std::stoi(need("exposure_df"));
  model.config.lag_df = std::stoi(need("lag_df"));

  const int n = model.n_regions();
  const int N = model.n_ages();

  // knots and design matrices
  std::vector<std::vector<double>> exposure_knots(n), lag_knots(n);
  for (const auto& f : read_rows(dir / "knots.csv", 4)) {
    const int i = region_index(model, f[0]);
    auto& target = f[1] == "exposure" ? exposure_knots[i] : lag_knots[i];
    const auto idx = static_cast<std::size_t>(std::stoi(f[2]));
    if (target.size() <= idx) target.resize(idx + 1);
    target[idx] = to_double(f[3]);
  }
  for (int i = 0; i < n; ++i) {
    CrossBasisSpec spec{NaturalCubicBasis(exposure_knots[i], false),
                        NaturalCubicBasis(lag_knots[i], true), model.config.lag_max};
    model.basis.push_back(CrossBasis{spec, 1, Eigen::MatrixXd::Zero(n_weeks, spec.n_cols())});
  }
  for (const auto& f : read_rows(dir / "design.csv", 4)) {
    const int i = region_index(model, f[0]);
    model.basis[i].X(std::stoi(f[1]) - 1, std::stoi(f[2])) = to_double(f[3]);
  }

  // stochastic parameters
  if (model.variant == Variant::Lc) {
    model.lc.assign(n, LcParams{Eigen::VectorXd::Zero(N), Eigen::VectorXd::Zero(N),
                                Eigen::VectorXd::Zero(n_weeks)});
    for (const auto& f : read_rows(dir / "lc_a.csv", 3))
      model.lc[region_index(model, f[0])].a[age_index(model, f[1])] = to_double(f[2]);
    for (const auto& f : read_rows(dir / "lc_b.csv", 3))
      model.lc[region_index(model, f[0])].b[age_index(model, f[1])] = to_double(f[2]);
    for (const auto& f : read_rows(dir / "lc_kappa.csv", 3))
      model.lc[region_index(model, f[0])].kappa[std::stoi(f[1]) - 1] = to_double(f[2]);
  } else {
    model.ll.A = Eigen::MatrixXd::Zero(N, n);
    model.ll.b = Eigen::MatrixXd::Zero(N, n);
    model.ll.B = Eigen::VectorXd::Zero(N);
    model.ll.K = Eigen::VectorXd::Zero(n_weeks);
    model.ll.kappa = Eigen::MatrixXd::Zero(n_weeks, n);
    for (const auto& f : read_rows(dir / "ll_A.csv", 3))
      model.ll.A(age_index(model, f[1]), region_index(model, f[0])) = to_double(f[2]);
    for (const auto& f : read_rows(dir / "ll_b.csv", 3))
      model.ll.b(age_index(model, f[1]), region_index(model, f[0])) = to_double(f[2]);
    for (const auto& f : read_rows(dir / "ll_B.csv", 2))
      model.ll.B[age_index(model, f[0])] = to_double(f[1]);
    for (const auto& f : read_rows(dir / "ll_K.csv", 2))
      model.ll.K[std::stoi(f[0]) - 1] = to_double(f[1]);
    for (const auto& f : read_rows(dir / "ll_kappa.csv", 3))
      model.ll.kappa(std::stoi(f[1]) - 1, region_index(model, f[0])) = to_double(f[2]);
  }

  const int p = model.basis.front().spec.n_cols();
  model.zeta.assign(n, std::vector<Eigen::VectorXd>(N, Eigen::VectorXd::Zero(p)));
  model.zeta_cov.assign(n, std::vector<Eigen::MatrixXd>(N, Eigen::MatrixXd::Zero(p, p)));
  model.sigma2.assign(n, std::vector<double>(N, 0.0));
  model.zeta_iterations.assign(n, std::vector<std::vector<Eigen::VectorXd>>(N));
  for (const auto& f : read_rows(dir / "zeta.csv", 4))
    model.zeta[region_index(model, f[0])][age_index(model, f[1])][std::stoi(f[2])] =
        to_double(f[3]);
  for (const auto& f : read_rows(dir / "zeta_cov.csv", 5))
    model.zeta_cov[region_index(model, f[0])][age_index(model, f[1])](std::stoi(f[2]),
                                                                      std::stoi(f[3])) =
        to_double(f[4]);
  for (const auto& f : read_rows(dir / "sigma2.csv", 3))
    model.sigma2[region_index(model, f[0])][age_index(model, f[1])] = to_double(f[2]);
  for (const auto& f : read_rows(dir / "zeta_iterations.csv", 5)) {
    auto& iters = model.zeta_iterations[region_index(model, f[0])][age_index(model, f[1])];
    const auto j = static_cast<std::size_t>(std::stoi(f[2]));
    if (iters.size() <= j) iters.resize(j + 1, Eigen::VectorXd::Zero(p));
    iters[j][std::stoi(f[3])] = to_double(f[4]);
  }

  model.observed_log.assign(n, Eigen::MatrixXd::Zero(N, n_weeks));
  model.final_working_log.assign(n, Eigen::MatrixXd::Zero(N, n_weeks));
  for (const auto& f : read_rows(dir / "log_rates.csv", 5)) {
    const int i = region_index(model, f[0]);
    const int x = age_index(model, f[1]);
    const int t = std::stoi(f[2]) - 1;
    model.observed_log[i](x, t) = to_double(f[3]);
    model.final_working_log[i](x, t) = to_double(f[4]);
  }

  model.traces.resize(model.variant == Variant::Lc ? n : 1);
  for (const auto& f : read_rows(dir / "trace.csv", 4)) {
    const int i = model.variant == Variant::Lc ? region_index(model, f[0]) : 0;
    model.traces[i].rss.push_back(to_double(f[2]));
    if (!f[3].empty()) model.traces[i].sup_change.push_back(to_double(f[3]));
  }
  for (auto& trace : model.traces) {
    trace.iterations = model.iterations;
    trace.converged = model.converged;
  }
  return model;
}

}  // namespace climort

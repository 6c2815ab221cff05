#include "climort/forecast.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace climort {

namespace {

struct CandidateSpec {
  std::string name;
  int p = 0;
  bool seasonal = false;
};

struct CandidateFit {
  IndexModel::Candidate record;
  double drift = 0.0;
  Eigen::VectorXd ar;
  double seasonal_ar = 0.0;
  bool seasonal = false;
  double sigma2 = 0.0;
  double drift_se = 0.0;
  bool usable = false;
};

bool stationary_ar(const Eigen::VectorXd& ar, double seasonal_ar, bool seasonal,
                   int season_lag) {
  const int q = seasonal ? season_lag : static_cast<int>(ar.size());
  if (q == 0) return true;
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(q);
  for (int i = 0; i < ar.size(); ++i) coef[i] = ar[i];
  if (seasonal) coef[season_lag - 1] += seasonal_ar;
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(q, q);
  companion.row(0) = coef.transpose();
  for (int i = 1; i < q; ++i) companion(i, i - 1) = 1.0;
  const auto eigenvalues = companion.eigenvalues();
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i)
    if (std::abs(eigenvalues[i]) >= 1.0 - 1e-8) return false;
  return true;
}

// Conditional least squares on the differenced series:
//   z_t = c + sum_i phi_i z_{t-i} + phi_s z_{t-52} + eps.
CandidateFit fit_candidate(const Eigen::VectorXd& z, const CandidateSpec& spec,
                           int season_lag) {
  CandidateFit fit;
  fit.record.name = spec.name;
  fit.seasonal = spec.seasonal;

  const int n_z = static_cast<int>(z.size());
  const int max_lag = spec.seasonal ? season_lag : spec.p;
  const int n_eff = n_z - max_lag;
  const int k_reg = 1 + spec.p + (spec.seasonal ? 1 : 0);
  const int k_aic = k_reg + 1;  // + innovation variance
  if (n_eff <= k_reg + 2 || n_eff - k_aic - 1 <= 0) {
    fit.record.finite = false;
    return fit;
  }

  Eigen::MatrixXd W(n_eff, k_reg);
  Eigen::VectorXd y(n_eff);
  for (int t = 0; t < n_eff; ++t) {
    const int idx = max_lag + t;
    y[t] = z[idx];
    W(t, 0) = 1.0;
    for (int i = 1; i <= spec.p; ++i) W(t, i) = z[idx - i];
    if (spec.seasonal) W(t, k_reg - 1) = z[idx - season_lag];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(W);
  if (qr.rank() < k_reg) {
    fit.record.finite = false;
    return fit;
  }
  const Eigen::VectorXd beta = qr.solve(y);
  const double rss = (y - W * beta).squaredNorm();
  const double sigma2_mle = rss / n_eff;
  if (!(sigma2_mle > 0) || !std::isfinite(sigma2_mle)) {
    fit.record.finite = false;
    return fit;
  }

  fit.ar = beta.segment(1, spec.p);
  if (spec.seasonal) fit.seasonal_ar = beta[k_reg - 1];
  const double phi_sum = fit.ar.sum() + fit.seasonal_ar;
  fit.record.stationary = stationary_ar(fit.ar, fit.seasonal_ar, spec.seasonal, season_lag);
  if (std::abs(1.0 - phi_sum) < 1e-8) fit.record.stationary = false;
  fit.drift = beta[0] / (1.0 - phi_sum);
  fit.sigma2 = rss / std::max(1, n_eff - k_reg);

  // delta-method SE of drift = c / (1 - sum(phi))
  const Eigen::MatrixXd R =
      qr.matrixR().topLeftCorner(k_reg, k_reg).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd Rinv =
      R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k_reg, k_reg));
  const Eigen::MatrixXd cov =
      fit.sigma2 * (qr.colsPermutation() * (Rinv * Rinv.transpose()) *
                    qr.colsPermutation().transpose());
  Eigen::VectorXd grad(k_reg);
  grad[0] = 1.0 / (1.0 - phi_sum);
  for (int i = 1; i < k_reg; ++i) grad[i] = beta[0] / ((1.0 - phi_sum) * (1.0 - phi_sum));
  fit.drift_se = std::sqrt(std::max(0.0, double(grad.transpose() * cov * grad)));

  const double kd = k_aic;
  fit.record.aicc = n_eff * std::log(sigma2_mle) + 2.0 * kd +
                    2.0 * kd * (kd + 1.0) / (n_eff - kd - 1.0);
  fit.record.finite = std::isfinite(fit.record.aicc) && std::isfinite(fit.drift) &&
                      std::isfinite(fit.drift_se);
  fit.usable = fit.record.finite && fit.record.stationary;
  return fit;
}

CandidateFit fit_rw_drift(const Eigen::VectorXd& z) {
  CandidateFit fit;
  fit.record.name = "rw_drift";
  const int n = static_cast<int>(z.size());
  fit.drift = z.mean();
  const double rss = (z.array() - fit.drift).square().sum();
  fit.sigma2 = rss / std::max(1, n - 1);
  fit.drift_se = std::sqrt(fit.sigma2 / n);
  const double sigma2_mle = rss / n;
  const double kd = 2.0;
  fit.record.aicc = (sigma2_mle > 0 && n - kd - 1 > 0)
                        ? n * std::log(sigma2_mle) + 2.0 * kd + 2.0 * kd * (kd + 1.0) / (n - kd - 1.0)
                        : std::numeric_limits<double>::quiet_NaN();
  fit.record.finite = std::isfinite(fit.record.aicc);
  fit.record.stationary = true;
  fit.usable = fit.record.finite;
  return fit;
}

}  // namespace

IndexModel fit_index_model(const Eigen::VectorXd& series, const IndexModelOptions& opts) {
  const int n = static_cast<int>(series.size());
  if (n < 60) throw ModelError("index model needs a series of length >= 60");
  if (!series.allFinite()) throw ModelError("index model: non-finite series");

  Eigen::VectorXd z(n - 1);
  for (int i = 0; i < n - 1; ++i) z[i] = series[i + 1] - series[i];

  std::vector<CandidateSpec> specs;
  for (int p = 1; p <= opts.max_ar; ++p) specs.push_back({"ar" + std::to_string(p), p, false});
  if (opts.try_seasonal)
    for (int p = 0; p <= opts.max_ar; ++p)
      specs.push_back({"ar" + std::to_string(p) + "_s" + std::to_string(opts.season_lag), p, true});

  std::vector<CandidateFit> fits;
  fits.push_back(fit_rw_drift(z));
  for (const auto& spec : specs) fits.push_back(fit_candidate(z, spec, opts.season_lag));

  const CandidateFit* best = nullptr;
  for (const auto& f : fits)
    if (f.usable && (best == nullptr || f.record.aicc < best->record.aicc)) best = &f;

  IndexModel model;
  for (const auto& f : fits) model.candidates.push_back(f.record);
  if (best == nullptr) {
    // all candidates degenerate; the random walk is the designated fallback
    const CandidateFit& rw = fits.front();
    if (!(rw.sigma2 > 0))
      throw ModelError("index model: degenerate series (zero innovation variance)");
    best = &rw;
    model.fallback = true;
  }
  model.name = best->record.name;
  model.drift = best->drift;
  model.ar = best->ar;
  model.seasonal_ar = best->seasonal_ar;
  model.has_seasonal = best->seasonal;
  model.sigma2 = best->sigma2;
  model.drift_se = best->drift_se;
  if (!(model.sigma2 > 0))
    throw ModelError("index model: degenerate series (zero innovation variance)");

  model.y_last = series[n - 1];
  const int tail = std::min<int>(n - 1, opts.season_lag + opts.max_ar);
  model.diff_tail.assign(z.data() + (n - 1 - tail), z.data() + (n - 1));
  return model;
}

namespace {

// One trajectory of differences continued from the fitted tail.
template <typename Noise>
void roll_differences(const IndexModel& m, int horizon, std::deque<double>& history,
                      Eigen::VectorXd& out_levels, double y0, Noise&& noise) {
  double y = y0;
  for (int h = 0; h < horizon; ++h) {
    double centred = 0.0;
    for (int i = 1; i <= m.p(); ++i)
      centred += m.ar[i - 1] * (history[history.size() - i] - m.drift);
    if (m.has_seasonal)
      centred += m.seasonal_ar * (history[history.size() - 52] - m.drift);
    const double z = m.drift + centred + noise();
    history.push_back(z);
    history.pop_front();
    y += z;
    out_levels[h] = y;
  }
}

std::deque<double> initial_history(const IndexModel& m) {
  const std::size_t needed = m.has_seasonal ? 52 : std::max(1, m.p());
  if (m.diff_tail.size() < needed)
    throw ModelError("index model tail too short for simulation");
  return std::deque<double>(m.diff_tail.end() - needed, m.diff_tail.end());
}

}  // namespace

Eigen::VectorXd index_point_forecast(const IndexModel& model, int horizon) {
  if (horizon < 1) throw ModelError("forecast horizon must be >= 1");
  Eigen::VectorXd levels(horizon);
  auto history = initial_history(model);
  roll_differences(model, horizon, history, levels, model.y_last, [] { return 0.0; });
  return levels;
}

Eigen::MatrixXd simulate_index_paths(const IndexModel& model, int horizon, int n_paths,
                                     std::uint64_t seed) {
  if (horizon < 1) throw ModelError("forecast horizon must be >= 1");
  if (n_paths < 1) throw ModelError("need at least one path");
  Eigen::MatrixXd paths(horizon, n_paths);
  const double sd = std::sqrt(std::max(0.0, model.sigma2));
  const auto base_history = initial_history(model);
  Eigen::VectorXd levels(horizon);
  for (int b = 0; b < n_paths; ++b) {
    Rng rng(substream_seed(seed, static_cast<std::uint64_t>(b)));
    std::normal_distribution<double> normal(0.0, 1.0);
    auto history = base_history;
    roll_differences(model, horizon, history, levels, model.y_last,
                     [&] { return sd == 0.0 ? 0.0 : sd * normal(rng); });
    paths.col(b) = levels;
  }
  return paths;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw ModelError("percentile of empty sample");
  std::sort(values.begin(), values.end());
  const double pos = p * (static_cast<double>(values.size()) - 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return values[lo] * (1.0 - frac) + values[hi] * frac;
}

Eigen::VectorXd annualize(const Eigen::VectorXd& weekly, int weeks_per_year) {
  const int T = static_cast<int>(weekly.size());
  if (T == 0 || T % weeks_per_year != 0)
    throw InputError("annualisation needs whole years (" + std::to_string(T) + " weeks given)");
  const int years = T / weeks_per_year;
  Eigen::VectorXd annual(years);
  for (int y = 0; y < years; ++y)
    annual[y] = weekly.segment(y * weeks_per_year, weeks_per_year).sum() / weeks_per_year;
  return annual;
}

namespace {

struct FanAccumulator {
  Eigen::VectorXd mean, lo, hi;
  void from_paths(const Eigen::MatrixXd& rates) {  // rows: time, cols: paths
    const int n = static_cast<int>(rates.rows());
    mean.resize(n);
    lo.resize(n);
    hi.resize(n);
    std::vector<double> buf(static_cast<std::size_t>(rates.cols()));
    for (int t = 0; t < n; ++t) {
      for (int b = 0; b < rates.cols(); ++b) buf[static_cast<std::size_t>(b)] = rates(t, b);
      mean[t] = rates.row(t).mean();
      lo[t] = percentile(buf, 0.025);
      hi[t] = percentile(buf, 0.975);
    }
  }
};

Eigen::MatrixXd annual_paths(const Eigen::MatrixXd& weekly_rates, int weeks_per_year) {
  const int years = static_cast<int>(weekly_rates.rows()) / weeks_per_year;
  Eigen::MatrixXd annual(years, weekly_rates.cols());
  for (int y = 0; y < years; ++y)
    annual.row(y) =
        weekly_rates.middleRows(y * weeks_per_year, weeks_per_year).colwise().sum() /
        static_cast<double>(weeks_per_year);
  return annual;
}

}  // namespace

ProjectionFan project(const FittedModel& model,
                      const std::vector<DailyClimateSeries>& scenario,
                      const ProjectionOptions& opts) {
  if (static_cast<int>(scenario.size()) != model.n_regions())
    throw InputError("project: one scenario series per region required");
  if (opts.n_paths < 1) throw InputError("project: n_paths must be >= 1");
  if (opts.offset_weeks < 0) throw InputError("project: offset_weeks must be >= 0");

  // Horizon from scenario coverage (local week axis).
  int horizon = std::numeric_limits<int>::max();
  for (const auto& s : scenario) horizon = std::min(horizon, s.day_end() / 7);
  if (horizon < 1) throw InputError("project: scenario does not cover a full week");

  const int L = model.config.lag_max;
  const int lead = std::min(7 - L, -1);  // lag window and wave lookback of week 1

  ProjectionFan fan;
  fan.regions = model.regions;
  fan.ages = model.ages;
  fan.first_week = model.n_weeks() + opts.offset_weeks + 1;
  fan.n_weeks = horizon;
  fan.n_paths = opts.n_paths;
  fan.seed = opts.seed;
  fan.n_years = horizon % opts.weeks_per_year == 0 ? horizon / opts.weeks_per_year : 0;

  const int n = model.n_regions();
  const int N = model.n_ages();
  const int steps = opts.offset_weeks + horizon;
  fan.mean.assign(n, std::vector<Eigen::VectorXd>(N));
  fan.lo.assign(n, std::vector<Eigen::VectorXd>(N));
  fan.hi.assign(n, std::vector<Eigen::VectorXd>(N));
  fan.point.assign(n, std::vector<Eigen::VectorXd>(N));
  fan.mean_log.assign(n, std::vector<Eigen::VectorXd>(N));
  fan.se_log.assign(n, std::vector<Eigen::VectorXd>(N));
  fan.point_log.assign(n, std::vector<Eigen::VectorXd>(N));
  if (fan.n_years > 0) {
    fan.annual_mean.assign(n, std::vector<Eigen::VectorXd>(N));
    fan.annual_lo.assign(n, std::vector<Eigen::VectorXd>(N));
    fan.annual_hi.assign(n, std::vector<Eigen::VectorXd>(N));
    fan.annual_point.assign(n, std::vector<Eigen::VectorXd>(N));
  }

  // Common stochastic trend paths (LL) are shared across regions.
  Eigen::MatrixXd common_paths;
  Eigen::VectorXd common_point;
  IndexModel common_model;
  if (model.variant == Variant::Ll) {
    common_model = fit_index_model(model.ll.K);
    if (opts.zero_variance) common_model.sigma2 = 0.0;
    common_paths = simulate_index_paths(common_model, steps, opts.n_paths,
                                        substream_seed(opts.seed, 1));
    common_point = index_point_forecast(common_model, steps);
  }

  for (int i = 0; i < n; ++i) {
    DailyClimateSeries padded = scenario[i];
    if (padded.day_start() > lead) {
      warn("scenario for region " + model.regions[i] + " lacks " +
           std::to_string(padded.day_start() - lead) +
           " leading day(s); replicating the first day backwards");
      padded = padded.padded_to(lead);
    }
    const CrossBasis scen_basis = build_cross_basis(padded, 1, horizon, model.basis[i].spec);

    IndexModel region_model = fit_index_model(
        model.variant == Variant::Lc ? model.lc[i].kappa : model.ll.kappa.col(i));
    if (opts.zero_variance) region_model.sigma2 = 0.0;
    const Eigen::MatrixXd region_paths = simulate_index_paths(
        region_model, steps, opts.n_paths, substream_seed(opts.seed, 100 + i));
    const Eigen::VectorXd region_point = index_point_forecast(region_model, steps);

    for (int x = 0; x < N; ++x) {
      const DlnmFit cell = model.dlnm(i, x);
      Eigen::MatrixXd draws;  // p x n_paths
      if (opts.zero_variance) {
        draws = cell.zeta.replicate(1, opts.n_paths);
      } else {
        draws = bootstrap_coeffs(cell, opts.n_paths,
                                 substream_seed(opts.seed, 10000 + i * 256 + x));
      }
      Eigen::MatrixXd log_rates = scen_basis.X * draws;  // horizon x n_paths

      // stochastic component per path
      for (int b = 0; b < opts.n_paths; ++b) {
        if (model.variant == Variant::Lc) {
          log_rates.col(b) += model.lc[i].a[x] * Eigen::VectorXd::Ones(horizon) +
                              model.lc[i].b[x] * region_paths.col(b).tail(horizon);
        } else {
          log_rates.col(b) += model.ll.A(x, i) * Eigen::VectorXd::Ones(horizon) +
                              model.ll.B[x] * common_paths.col(b).tail(horizon) +
                              model.ll.b(x, i) * region_paths.col(b).tail(horizon);
        }
      }

      // observation noise
      if (!opts.zero_variance && model.sigma2[i][x] > 0) {
        Rng rng(substream_seed(opts.seed, 20000 + i * 256 + x));
        std::normal_distribution<double> normal(0.0, std::sqrt(model.sigma2[i][x]));
        for (int b = 0; b < opts.n_paths; ++b)
          for (int t = 0; t < horizon; ++t) log_rates(t, b) += normal(rng);
      }

      const Eigen::MatrixXd rates = log_rates.array().exp().matrix();
      FanAccumulator acc;
      acc.from_paths(rates);
      fan.mean[i][x] = acc.mean;
      fan.lo[i][x] = acc.lo;
      fan.hi[i][x] = acc.hi;
      fan.mean_log[i][x] = log_rates.rowwise().mean();
      Eigen::VectorXd se(horizon);
      for (int t = 0; t < horizon; ++t) {
        const double mu = fan.mean_log[i][x][t];
        const double ss = (log_rates.row(t).array() - mu).square().sum();
        se[t] = std::sqrt(ss / std::max(1, opts.n_paths - 1)) / std::sqrt(double(opts.n_paths));
      }
      fan.se_log[i][x] = std::move(se);

      Eigen::VectorXd point_log = scen_basis.X * cell.zeta;
      if (model.variant == Variant::Lc)
        point_log += model.lc[i].a[x] * Eigen::VectorXd::Ones(horizon) +
                     model.lc[i].b[x] * region_point.tail(horizon);
      else
        point_log += model.ll.A(x, i) * Eigen::VectorXd::Ones(horizon) +
                     model.ll.B[x] * common_point.tail(horizon) +
                     model.ll.b(x, i) * region_point.tail(horizon);
      fan.point[i][x] = point_log.array().exp();
      fan.point_log[i][x] = point_log;

      if (fan.n_years > 0) {
        const Eigen::MatrixXd annual = annual_paths(rates, opts.weeks_per_year);
        FanAccumulator acc_a;
        acc_a.from_paths(annual);
        fan.annual_mean[i][x] = acc_a.mean;
        fan.annual_lo[i][x] = acc_a.lo;
        fan.annual_hi[i][x] = acc_a.hi;
        fan.annual_point[i][x] = annualize(fan.point[i][x], opts.weeks_per_year);
      }
    }
  }
  return fan;
}

ClimateLoadingSeries climate_loading(const FittedModel& model) {
  ClimateLoadingSeries out;
  out.regions = model.regions;
  out.ages = model.ages;
  const int T = model.n_weeks();
  const int years = T / 52;
  out.theta.assign(model.n_regions(), std::vector<Eigen::VectorXd>(model.n_ages()));
  out.annual.assign(model.n_regions(), std::vector<Eigen::VectorXd>(model.n_ages()));
  for (int i = 0; i < model.n_regions(); ++i) {
    const Eigen::MatrixXd S = model.climate_log(i);
    for (int x = 0; x < model.n_ages(); ++x) {
      Eigen::VectorXd theta(T);
      for (int t = 0; t < T; ++t) theta[t] = 1.0 - std::exp(-S(x, t));
      Eigen::VectorXd annual = Eigen::VectorXd::Zero(years);
      for (int y = 0; y < years; ++y) annual[y] = theta.segment(y * 52, 52).sum();
      out.theta[i][x] = std::move(theta);
      out.annual[i][x] = std::move(annual);
    }
  }
  return out;
}

}  // namespace climort

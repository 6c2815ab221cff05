#include "climort/synth.hpp"

#include <cmath>
#include <numbers>

#include "climort/climate_features.hpp"
#include "climort/splines.hpp"

namespace climort {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct ClimateProcess {
  double base = 17.0;
  double amplitude = 12.0;
  double ar = 0.75;
  double ar_sd = 1.2;
  double spread = 4.0;
  double spread_sd = 1.3;
};

// Seasonal UTCI with AR(1) weather noise. Winter cold snaps are injected so
// coldwave days occur at all in a Mediterranean-like climate. `global_offset`
// keeps the seasonal phase when a scenario continues past the sample.
DailyClimateSeries simulate_climate(const std::string& region, const ClimateProcess& proc,
                                    int day_start, int day_end, int global_offset,
                                    std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  const int n = day_end - day_start + 1;
  std::vector<double> mean(n), mn(n), mx(n);
  double state = 0.0;
  for (int k = 0; k < n; ++k) {
    state = proc.ar * state + proc.ar_sd * std::sqrt(1.0 - proc.ar * proc.ar) * normal(rng);
    const int day = global_offset + day_start + k;
    const double seasonal =
        proc.base + proc.amplitude * std::sin(kTwoPi * (day - 105.0) / 364.0);
    mean[k] = seasonal + state;
    mn[k] = mean[k] - (proc.spread + std::abs(proc.spread_sd * normal(rng)));
    mx[k] = mean[k] + (proc.spread + std::abs(proc.spread_sd * normal(rng)));
  }
  // cold snaps: multi-day winter events deep enough to cross -13; one per
  // winter always, a second sometimes, so short training windows still see
  // coldwave days
  const int years = n / 364 + 1;
  for (int y = 0; y < years; ++y) {
    const int events = 1 + (unif(rng) < 0.35 ? 1 : 0);
    for (int e = 0; e < events; ++e) {
      const int anchor = y * 364 + 300 + static_cast<int>(unif(rng) * 55.0);
      const int duration = 4 + static_cast<int>(unif(rng) * 3.0);
      const double depth = 20.0 + 6.0 * unif(rng);
      for (int d = anchor; d < anchor + duration && d < n; ++d) {
        mean[d] -= depth;
        mn[d] -= depth + 3.0;
        mx[d] -= depth;
      }
    }
  }
  return DailyClimateSeries(region, day_start, std::move(mean), std::move(mn), std::move(mx));
}

Eigen::VectorXd ar1_series(int n, double phi, double sd, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd s(n);
  double state = 0.0;
  for (int i = 0; i < n; ++i) {
    state = phi * state + sd * std::sqrt(1.0 - phi * phi) * normal(rng);
    s[i] = state;
  }
  return s;
}

Eigen::VectorXd centered_trend(int T, double from, double to, double ar_sd, Rng& rng) {
  Eigen::VectorXd k(T);
  for (int t = 0; t < T; ++t)
    k[t] = from + (to - from) * static_cast<double>(t) / (T - 1);
  k += ar1_series(T, 0.8, ar_sd, rng);
  k.array() -= k.mean();
  return k;
}

// Tensor coefficients approximating a U-shaped exposure surface with
// geometrically decaying lag weights. The exposure basis spans natural
// splines vanishing at the lowest knot, so the target is anchored there;
// relative-risk curves are invariant to that constant. The planted truth is
// X * eta, whatever the approximation error to the target shape.
Eigen::VectorXd plant_surface(const CrossBasisSpec& spec) {
  const double u_lo = spec.exposure.boundary_min();
  const double u_hi = spec.exposure.boundary_max();
  const double u_opt = u_lo + 0.7 * (u_hi - u_lo);
  const auto q = [&](double u) { return 0.18 * std::pow((u - u_opt) / 18.0, 2.0); };
  const int nu = 41;
  const int n_rows = nu * (spec.lag_max + 1);
  Eigen::MatrixXd G(n_rows, spec.tensor_cols());
  Eigen::VectorXd f(n_rows);
  double w_sum = 0.0;
  for (int l = 0; l <= spec.lag_max; ++l) w_sum += std::exp(-l / 5.0);
  int row = 0;
  for (int g = 0; g < nu; ++g) {
    const double u = u_lo + (u_hi - u_lo) * g / (nu - 1);
    const Eigen::RowVectorXd bu = spec.exposure.row(u);
    for (int l = 0; l <= spec.lag_max; ++l) {
      const Eigen::RowVectorXd cl = spec.lag.row(static_cast<double>(l));
      for (int j = 0; j < spec.exposure.dim(); ++j)
        for (int k = 0; k < spec.lag.dim(); ++k)
          G(row, j * spec.lag.dim() + k) = bu[j] * cl[k];
      f[row] = (q(u) - q(u_lo)) * std::exp(-l / 5.0) / w_sum;
      ++row;
    }
  }
  return G.colPivHouseholderQr().solve(f);
}

}  // namespace

SynthData generate_synthetic(const SynthConfig& cfg) {
  const int n = static_cast<int>(cfg.regions.size());
  const int N = static_cast<int>(cfg.age_labels.size());
  if (static_cast<int>(cfg.gamma.size()) != N)
    throw InputError("synth: gamma needs one entry per age group");
  if (cfg.variant == Variant::Ll && n < 2)
    throw InputError("synth: LL variant needs at least 2 regions");
  const int T = 52 * cfg.n_years;
  const int lead = std::min(7 - cfg.lag_max, -1);

  SynthData data;
  const auto ages = make_age_groups(cfg.age_labels);
  data.climate_sensitive.resize(N);
  for (int x = 0; x < N; ++x)
    data.climate_sensitive[x] = cfg.gamma[x] >= cfg.climate_sensitive_min;

  // climate, cross-basis and planted coefficients per region
  std::vector<CrossBasis> basis;
  for (int i = 0; i < n; ++i) {
    const int proc_idx = cfg.identical_regions ? 0 : i;
    ClimateProcess proc;
    proc.base = 16.0 + proc_idx;
    data.climate.push_back(simulate_climate(cfg.regions[i], proc, lead, 7 * T, 0,
                                            substream_seed(cfg.seed, 10 + proc_idx)));
    data.true_spec.push_back(make_cross_basis_spec(data.climate[i], 1, T, cfg.lag_max,
                                                   cfg.exposure_df, cfg.lag_df));
    basis.push_back(build_cross_basis(data.climate[i], 1, T, data.true_spec[i]));
  }

  data.true_zeta.assign(n, std::vector<Eigen::VectorXd>(N));
  for (int i = 0; i < n; ++i) {
    const auto& spec = data.true_spec[i];
    const Eigen::VectorXd eta = plant_surface(spec);
    const Eigen::RowVectorXd col_means = basis[i].X.colwise().mean();
    const double region_factor = cfg.identical_regions ? 1.0 : 1.0 + 0.15 * i;
    for (int x = 0; x < N; ++x) {
      const double scale = cfg.climate_scale * cfg.gamma[x] * region_factor;
      Eigen::VectorXd zeta = Eigen::VectorXd::Zero(spec.n_cols());
      zeta.head(spec.tensor_cols()) = scale * eta;
      zeta[spec.hwd_col()] = scale * cfg.hwd_beta;
      zeta[spec.cwd_col()] = scale * cfg.cwd_beta;
      // centre the planted climate component over the sample weeks
      zeta[spec.intercept_col()] = 0.0;
      zeta[spec.intercept_col()] = -col_means.dot(zeta);
      data.true_zeta[i][x] = std::move(zeta);
    }
  }

  // stochastic structure
  const Eigen::VectorXd b_base =
      [&] {
        Eigen::VectorXd b(N);
        for (int x = 0; x < N; ++x) b[x] = 1.0 + 0.4 * x;
        b /= b.sum();
        return b;
      }();
  Eigen::VectorXd a_base(N);
  for (int x = 0; x < N; ++x)
    a_base[x] = -9.2 + 1.3 * x;

  std::vector<Eigen::MatrixXd> stochastic(n);
  if (cfg.variant == Variant::Lc) {
    for (int i = 0; i < n; ++i) {
      const int idx = cfg.identical_regions ? 0 : i;
      Rng rng(substream_seed(cfg.seed, 100 + idx));
      LcParams truth;
      truth.a = a_base.array() + 0.04 * idx;
      truth.b = b_base;
      truth.kappa = centered_trend(T, 1.2, -1.2, 0.05, rng);
      stochastic[i] = (truth.b * truth.kappa.transpose()).colwise() + truth.a;
      data.true_lc.push_back(std::move(truth));
    }
  } else {
    Rng rng(substream_seed(cfg.seed, 100));
    data.true_ll.B = b_base;
    data.true_ll.K = centered_trend(T, 1.2, -1.2, 0.05, rng);
    data.true_ll.A.resize(N, n);
    data.true_ll.b.resize(N, n);
    data.true_ll.kappa.resize(T, n);
    for (int i = 0; i < n; ++i) {
      const int idx = cfg.identical_regions ? 0 : i;
      Rng region_rng(substream_seed(cfg.seed, 200 + idx));
      data.true_ll.A.col(i) = a_base.array() + 0.04 * idx;
      data.true_ll.b.col(i) = b_base;
      Eigen::VectorXd kap = cfg.identical_regions
                                ? Eigen::VectorXd::Zero(T)
                                : Eigen::VectorXd(ar1_series(T, 0.85, 0.12, region_rng));
      kap.array() -= kap.mean();
      data.true_ll.kappa.col(i) = kap;
      stochastic[i] = ((data.true_ll.B * data.true_ll.K.transpose()) +
                       (data.true_ll.b.col(i) * data.true_ll.kappa.col(i).transpose()))
                          .colwise() +
                      data.true_ll.A.col(i);
    }
  }

  // assemble rates
  std::vector<Eigen::MatrixXd> rates(n), population(n);
  for (int i = 0; i < n; ++i) {
    const int idx = cfg.identical_regions ? 0 : i;
    Rng rng(substream_seed(cfg.seed, 300 + idx));
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd log_m = stochastic[i];
    for (int x = 0; x < N; ++x) {
      log_m.row(x) += (basis[i].X * data.true_zeta[i][x]).transpose();
      for (int t = 0; t < T; ++t) log_m(x, t) += cfg.noise_sigma * normal(rng);
    }
    rates[i] = log_m.array().exp();
    Eigen::MatrixXd pop(N, cfg.n_years);
    const double region_scale = 1.0 - 0.12 * idx;
    for (int x = 0; x < N; ++x)
      for (int y = 0; y < cfg.n_years; ++y)
        pop(x, y) = region_scale * (1.6e6 - 3.4e5 * x) * (1.0 - 0.004 * y);
    population[i] = pop;
  }
  data.panel = MortalityPanel::from_rates(ages, cfg.regions, cfg.start_year, rates, population);

  // scenario continuing each region's climate process on a local week axis
  const int H = 52 * cfg.scenario_years;
  for (int i = 0; i < n; ++i) {
    const int idx = cfg.identical_regions ? 0 : i;
    ClimateProcess proc;
    proc.base = 16.0 + idx;
    data.scenario_baseline.push_back(simulate_climate(
        cfg.regions[i], proc, lead, 7 * H, 7 * T, substream_seed(cfg.seed, 400 + idx)));
  }
  return data;
}

std::vector<DailyClimateSeries> ramped(const std::vector<DailyClimateSeries>& scenario,
                                       double total_ramp) {
  std::vector<DailyClimateSeries> out;
  for (const auto& s : scenario) {
    std::vector<double> mean, mn, mx;
    const int n = static_cast<int>(s.size());
    mean.reserve(n);
    for (int k = 0; k < n; ++k) {
      const int day = s.day_start() + k;
      const double ramp = total_ramp * static_cast<double>(k) / (n - 1);
      mean.push_back(s.mean_at(day) + ramp);
      mn.push_back(s.min_at(day) + ramp);
      mx.push_back(s.max_at(day) + ramp);
    }
    out.emplace_back(s.region(), s.day_start(), std::move(mean), std::move(mn), std::move(mx));
  }
  return out;
}

}  // namespace climort

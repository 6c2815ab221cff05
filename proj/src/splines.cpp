#include "climort/splines.hpp"

#include <algorithm>
#include <cmath>

#include "climort/climate_features.hpp"

namespace climort {

namespace {

// Second derivatives of the natural cubic interpolant through (knots, y).
// Standard tridiagonal system with M_1 = M_K = 0.
Eigen::VectorXd natural_second_derivatives(const std::vector<double>& k,
                                           const Eigen::VectorXd& y) {
  const int K = static_cast<int>(k.size());
  Eigen::VectorXd m = Eigen::VectorXd::Zero(K);
  const int n = K - 2;  // interior equations
  if (n <= 0) return m;
  Eigen::VectorXd diag(n), sub(n), sup(n), rhs(n);
  for (int i = 0; i < n; ++i) {
    const double h0 = k[i + 1] - k[i];
    const double h1 = k[i + 2] - k[i + 1];
    sub[i] = h0 / 6.0;
    diag[i] = (h0 + h1) / 3.0;
    sup[i] = h1 / 6.0;
    rhs[i] = (y[i + 2] - y[i + 1]) / h1 - (y[i + 1] - y[i]) / h0;
  }
  // Thomas algorithm
  for (int i = 1; i < n; ++i) {
    const double w = sub[i] / diag[i - 1];
    diag[i] -= w * sup[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  Eigen::VectorXd sol(n);
  sol[n - 1] = rhs[n - 1] / diag[n - 1];
  for (int i = n - 2; i >= 0; --i) sol[i] = (rhs[i] - sup[i] * sol[i + 1]) / diag[i];
  m.segment(1, n) = sol;
  return m;
}

// Linear-interpolated quantile of sorted data at probability p.
double quantile_sorted(const std::vector<double>& sorted, double p) {
  const double pos = p * (static_cast<double>(sorted.size()) - 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

}  // namespace

NaturalCubicBasis::NaturalCubicBasis(std::vector<double> knots, bool with_intercept)
    : knots_(std::move(knots)), with_intercept_(with_intercept) {
  const int K = static_cast<int>(knots_.size());
  if (K < 2) throw InputError("natural cubic basis needs at least 2 knots");
  for (int i = 1; i < K; ++i)
    if (!(knots_[i] > knots_[i - 1]))
      throw InputError("knots must be strictly increasing (knot " + std::to_string(i) +
                       " = " + std::to_string(knots_[i]) + ")");
  if (dim() < 1) throw InputError("basis dimension must be >= 1");

  cardinal_second_.resize(K);
  slope_left_.resize(K);
  slope_right_.resize(K);
  const double h_first = knots_[1] - knots_[0];
  const double h_last = knots_[K - 1] - knots_[K - 2];
  for (int j = 0; j < K; ++j) {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(K);
    y[j] = 1.0;
    cardinal_second_[j] = natural_second_derivatives(knots_, y);
    const auto& m = cardinal_second_[j];
    slope_left_[j] = (y[1] - y[0]) / h_first - h_first * m[1] / 6.0;
    slope_right_[j] = (y[K - 1] - y[K - 2]) / h_last + h_last * m[K - 2] / 6.0;
  }
}

int NaturalCubicBasis::dim() const {
  return static_cast<int>(knots_.size()) - (with_intercept_ ? 0 : 1);
}

double NaturalCubicBasis::eval_cardinal(int j, double x) const {
  const int K = static_cast<int>(knots_.size());
  const auto y_at = [&](int i) { return i == j ? 1.0 : 0.0; };
  if (x <= knots_.front())
    return y_at(0) + slope_left_[j] * (x - knots_.front());
  if (x >= knots_.back())
    return y_at(K - 1) + slope_right_[j] * (x - knots_.back());
  // locate interval [k_i, k_{i+1}]
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
  const int i = static_cast<int>(it - knots_.begin()) - 1;
  const double h = knots_[i + 1] - knots_[i];
  const double a = (knots_[i + 1] - x) / h;
  const double b = (x - knots_[i]) / h;
  const auto& m = cardinal_second_[j];
  return a * y_at(i) + b * y_at(i + 1) +
         ((a * a * a - a) * m[i] + (b * b * b - b) * m[i + 1]) * h * h / 6.0;
}

Eigen::RowVectorXd NaturalCubicBasis::row(double x) const {
  if (!std::isfinite(x)) throw InputError("basis evaluated at non-finite value");
  Eigen::RowVectorXd r(dim());
  const int first = with_intercept_ ? 0 : 1;
  for (int j = 0; j < dim(); ++j) r[j] = eval_cardinal(first + j, x);
  return r;
}

Eigen::MatrixXd NaturalCubicBasis::matrix(std::span<const double> values) const {
  Eigen::MatrixXd out(values.size(), dim());
  for (std::size_t i = 0; i < values.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = row(values[i]);
  return out;
}

NaturalCubicBasis NaturalCubicBasis::from_quantiles(std::span<const double> values, int df) {
  if (df < 2) throw InputError("exposure basis df must be >= 2");
  if (values.size() < 2) throw InputError("need at least 2 exposure values to place knots");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> knots;
  knots.push_back(sorted.front());
  for (int i = 1; i <= df - 1; ++i)
    knots.push_back(quantile_sorted(sorted, static_cast<double>(i) / df));
  knots.push_back(sorted.back());
  for (std::size_t i = 1; i < knots.size(); ++i)
    if (!(knots[i] > knots[i - 1]))
      throw InputError("degenerate exposure quantiles: knots are not strictly increasing");
  return NaturalCubicBasis(std::move(knots), /*with_intercept=*/false);
}

NaturalCubicBasis NaturalCubicBasis::log_lag(int lag_max, int df) {
  if (df < 2) throw InputError("lag basis df must be >= 2");
  if (lag_max < 1) throw InputError("lag basis needs lag_max >= 1");
  std::vector<double> knots(df);
  const double top = std::log1p(static_cast<double>(lag_max));
  for (int i = 0; i < df; ++i)
    knots[i] = std::expm1(top * static_cast<double>(i) / (df - 1));
  knots.front() = 0.0;
  knots.back() = static_cast<double>(lag_max);
  return NaturalCubicBasis(std::move(knots), /*with_intercept=*/true);
}

Eigen::MatrixXd ncs_basis(std::span<const double> values, std::vector<double> knots,
                          bool with_intercept) {
  return NaturalCubicBasis(std::move(knots), with_intercept).matrix(values);
}

Eigen::MatrixXd CrossBasisSpec::lag_matrix() const {
  Eigen::MatrixXd C(lag_max + 1, lag.dim());
  for (int l = 0; l <= lag_max; ++l) C.row(l) = lag.row(static_cast<double>(l));
  return C;
}

Eigen::VectorXd CrossBasisSpec::lag_sums() const { return lag_matrix().colwise().sum(); }

Eigen::VectorXd CrossBasisSpec::cumulative_coords(double u) const {
  const Eigen::RowVectorXd bu = exposure.row(u);
  const Eigen::VectorXd cs = lag_sums();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n_cols());
  for (int j = 0; j < exposure.dim(); ++j)
    for (int k = 0; k < lag.dim(); ++k) v[j * lag.dim() + k] = bu[j] * cs[k];
  return v;
}

Eigen::VectorXd CrossBasisSpec::lag_coords(double u, int l) const {
  const Eigen::RowVectorXd bu = exposure.row(u);
  const Eigen::RowVectorXd cl = lag.row(static_cast<double>(l));
  Eigen::VectorXd v = Eigen::VectorXd::Zero(n_cols());
  for (int j = 0; j < exposure.dim(); ++j)
    for (int k = 0; k < lag.dim(); ++k) v[j * lag.dim() + k] = bu[j] * cl[k];
  return v;
}

CrossBasisSpec make_cross_basis_spec(const DailyClimateSeries& climate, int first_week,
                                     int n_weeks, int lag_max, int exposure_df, int lag_df) {
  if (n_weeks < 1) throw InputError("cross-basis needs at least one week");
  // Exposure knots come from the observed days feeding the lag windows.
  const int day_lo = std::max(7 * first_week - lag_max, climate.day_start());
  const int day_hi = std::min(7 * (first_week + n_weeks - 1), climate.day_end());
  if (day_hi < day_lo)
    throw InputError("climate series does not overlap the requested week range");
  std::vector<double> means;
  means.reserve(static_cast<std::size_t>(day_hi - day_lo + 1));
  for (int d = day_lo; d <= day_hi; ++d) means.push_back(climate.mean_at(d));
  return CrossBasisSpec{NaturalCubicBasis::from_quantiles(means, exposure_df),
                        NaturalCubicBasis::log_lag(lag_max, lag_df), lag_max};
}

CrossBasis build_cross_basis(const DailyClimateSeries& climate, int first_week, int n_weeks,
                             const CrossBasisSpec& spec) {
  CrossBasis cb{spec, first_week, Eigen::MatrixXd(n_weeks, spec.n_cols())};
  const Eigen::MatrixXd C = spec.lag_matrix();  // (L+1) x nu2
  const auto [hwd, cwd] = wave_series(climate, first_week, n_weeks);
  for (int r = 0; r < n_weeks; ++r) {
    const WeekIndex week{first_week + r};
    const std::vector<double> window = climate.mean_window(week, spec.lag_max);
    const Eigen::MatrixXd B = spec.exposure.matrix(window);  // (L+1) x nu1
    const Eigen::MatrixXd block = B.transpose() * C;         // nu1 x nu2
    for (int j = 0; j < spec.exposure.dim(); ++j)
      for (int k = 0; k < spec.lag.dim(); ++k)
        cb.X(r, j * spec.lag.dim() + k) = block(j, k);
    cb.X(r, spec.hwd_col()) = hwd[r];
    cb.X(r, spec.cwd_col()) = cwd[r];
    cb.X(r, spec.intercept_col()) = 1.0;
  }
  return cb;
}

}  // namespace climort

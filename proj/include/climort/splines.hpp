#ifndef CLIMORT_SPLINES_HPP
#define CLIMORT_SPLINES_HPP

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "climort/data_model.hpp"

namespace climort {

// Natural cubic spline basis on a fixed knot sequence, evaluated anywhere on
// the real line with linear extrapolation beyond the boundary knots.
//
// The cardinal basis on K knots spans the full K-dimensional natural spline
// space, which contains constants and linear functions. With
// with_intercept=false the first cardinal column is dropped: the remaining
// K-1 columns span a complement of the constants, so a design that carries
// its own intercept column stays full rank.
class NaturalCubicBasis {
 public:
  NaturalCubicBasis(std::vector<double> knots, bool with_intercept);

  // df columns spanning no constant; knots are df+1 values with boundaries at
  // min/max of `values` and interior knots at equally spaced quantiles.
  static NaturalCubicBasis from_quantiles(std::span<const double> values, int df);

  // df columns including the constant; knots equally spaced on the log(1+l)
  // scale over [0, lag_max].
  static NaturalCubicBasis log_lag(int lag_max, int df);

  int dim() const;
  bool with_intercept() const { return with_intercept_; }
  const std::vector<double>& knots() const { return knots_; }
  double boundary_min() const { return knots_.front(); }
  double boundary_max() const { return knots_.back(); }

  Eigen::RowVectorXd row(double x) const;
  Eigen::MatrixXd matrix(std::span<const double> values) const;

 private:
  std::vector<double> knots_;
  bool with_intercept_;
  // cardinal_second_[j] holds the natural-spline second derivatives at the
  // knots for the j-th cardinal function (unit value at knot j).
  std::vector<Eigen::VectorXd> cardinal_second_;
  Eigen::VectorXd slope_left_, slope_right_;  // boundary slopes per cardinal fn

  double eval_cardinal(int j, double x) const;
};

// Basis matrix for arbitrary values over the given knots; dimension equals
// knots.size() with the intercept, knots.size()-1 without.
Eigen::MatrixXd ncs_basis(std::span<const double> values, std::vector<double> knots,
                          bool with_intercept = true);

// Fixed design mapping a week to its lagged-exposure tensor block plus the
// heatwave/coldwave counts and an intercept.
struct CrossBasisSpec {
  NaturalCubicBasis exposure;  // no constant in span
  NaturalCubicBasis lag;       // constant in span
  int lag_max = 21;

  int tensor_cols() const { return exposure.dim() * lag.dim(); }
  int n_cols() const { return tensor_cols() + 3; }  // + HWD, CWD, intercept
  int hwd_col() const { return tensor_cols(); }
  int cwd_col() const { return tensor_cols() + 1; }
  int intercept_col() const { return tensor_cols() + 2; }

  // Lag basis evaluated at l = 0..L, one row per lag.
  Eigen::MatrixXd lag_matrix() const;
  // Column sums of lag_matrix(): weights for the overall cumulative effect.
  Eigen::VectorXd lag_sums() const;

  // Tensor coordinate vector of a single exposure u summed over all lags;
  // HWD/CWD/intercept positions are zero.
  Eigen::VectorXd cumulative_coords(double u) const;
  // Tensor coordinates of exposure u at one specific lag.
  Eigen::VectorXd lag_coords(double u, int lag) const;
};

CrossBasisSpec make_cross_basis_spec(const DailyClimateSeries& climate, int first_week,
                                     int n_weeks, int lag_max, int exposure_df, int lag_df);

struct CrossBasis {
  CrossBasisSpec spec;
  int first_week = 1;
  Eigen::MatrixXd X;  // n_weeks x spec.n_cols()

  int n_weeks() const { return static_cast<int>(X.rows()); }
};

CrossBasis build_cross_basis(const DailyClimateSeries& climate, int first_week, int n_weeks,
                             const CrossBasisSpec& spec);

}  // namespace climort

#endif

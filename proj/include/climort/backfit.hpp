#ifndef CLIMORT_BACKFIT_HPP
#define CLIMORT_BACKFIT_HPP

#include <string>
#include <vector>

#include "climort/data_model.hpp"
#include "climort/dlnm.hpp"
#include "climort/lee_carter.hpp"
#include "climort/li_lee.hpp"

namespace climort {

enum class Variant { Lc, Ll };

std::string variant_name(Variant v);

struct BackfitConfig {
  double delta = 1e-2;  // sup-norm parameter-change tolerance
  int max_iter = 20;    // J
  int lag_max = 21;
  int exposure_df = 4;
  int lag_df = 4;

  void validate() const;
};

// Per-region (LC) or joint (LL) iteration audit trail. sup_change[k] is the
// parameter change between iterations k and k+1; rss[k] the full-model
// residual sum of squares at iteration k.
struct ConvergenceTrace {
  std::vector<double> sup_change;
  std::vector<double> rss;
  int iterations = 0;  // r
  bool converged = false;
};

// Converged backfitting output: stochastic parameters plus accumulated DLNM
// coefficients per (region, age) with covariance from the single-DLNM refit.
struct FittedModel {
  Variant variant = Variant::Lc;
  std::vector<AgeGroup> ages;
  std::vector<std::string> regions;
  BackfitConfig config;

  std::vector<LcParams> lc;  // per region (LC variant)
  LlParams ll;               // (LL variant)

  std::vector<CrossBasis> basis;     // per region, in-sample design
  std::vector<Eigen::MatrixXd> observed_log;       // per region, N x T
  std::vector<Eigen::MatrixXd> final_working_log;  // per region: observed - accumulated climate

  // [region][age]
  std::vector<std::vector<Eigen::VectorXd>> zeta;
  std::vector<std::vector<Eigen::MatrixXd>> zeta_cov;
  std::vector<std::vector<double>> sigma2;
  // [region][age][iteration 0..r-1]
  std::vector<std::vector<std::vector<Eigen::VectorXd>>> zeta_iterations;

  std::vector<ConvergenceTrace> traces;  // per region (LC); single entry (LL)
  int iterations = 0;
  bool converged = false;

  int n_ages() const { return static_cast<int>(ages.size()); }
  int n_regions() const { return static_cast<int>(regions.size()); }
  int n_weeks() const { return static_cast<int>(observed_log.front().cols()); }

  // a + b kappa (LC) or A + B K + b kappa_i (LL), N x T.
  Eigen::MatrixXd stochastic_log(int region) const;
  // X zeta_total rows, N x T.
  Eigen::MatrixXd climate_log(int region) const;
  Eigen::MatrixXd fitted_log(int region) const { return stochastic_log(region) + climate_log(region); }

  // Accumulated DLNM coefficients as a standalone fit for curve evaluation.
  DlnmFit dlnm(int region, int age) const;
};

FittedModel backfit_lc(const MortalityPanel& panel,
                       const std::vector<DailyClimateSeries>& climate,
                       const BackfitConfig& cfg);

FittedModel backfit_ll(const MortalityPanel& panel,
                       const std::vector<DailyClimateSeries>& climate,
                       const BackfitConfig& cfg);

// Refit a single DLNM on the accumulated climate-driven component and compare
// its coefficients against the summed per-iteration coefficients.
struct EquivalenceReport {
  struct Cell {
    std::string region;
    std::string age;
    double max_abs_diff = 0.0;
    int worst_coefficient = 0;
  };
  std::vector<Cell> cells;
  double worst = 0.0;
  double tolerance = 1e-6;
  bool pass = false;
};

EquivalenceReport check_equivalence(const FittedModel& model, double tolerance = 1e-6);

}  // namespace climort

#endif

#ifndef CLIMORT_SYNTH_HPP
#define CLIMORT_SYNTH_HPP

#include <vector>

#include "climort/backfit.hpp"
#include "climort/data_model.hpp"

namespace climort {

// Controls for the synthetic data generator. The generated panel follows the
// model structure exactly: a stochastic age/time component, a climate
// component planted inside the span of the cross-basis, and Gaussian noise.
struct SynthConfig {
  std::vector<std::string> regions = {"EL30", "PT170", "ITI43"};
  std::vector<std::string> age_labels = {"20-64", "65-74", "75-84", "85+"};
  int start_year = 2015;
  int n_years = 5;
  std::uint64_t seed = 20240101;
  Variant variant = Variant::Lc;

  int lag_max = 21;
  int exposure_df = 4;
  int lag_df = 4;

  double noise_sigma = 0.02;
  // Per-age climate sensitivity; scales the planted exposure surface and the
  // wave coefficients. Ages with gamma >= climate_sensitive_min count as
  // climate-sensitive in the ground truth.
  std::vector<double> gamma = {0.25, 0.6, 1.0, 1.3};
  double climate_sensitive_min = 0.9;
  double hwd_beta = 0.016;
  double cwd_beta = 0.009;
  // Zero disables the climate component entirely (null-model data).
  double climate_scale = 1.0;

  bool identical_regions = false;
  int scenario_years = 15;
};

struct SynthData {
  MortalityPanel panel;
  std::vector<DailyClimateSeries> climate;            // historical, with lag padding
  std::vector<DailyClimateSeries> scenario_baseline;  // local week axis 1..52*scenario_years

  // ground truth
  std::vector<LcParams> true_lc;  // per region (LC variant)
  LlParams true_ll;               // (LL variant)
  std::vector<CrossBasisSpec> true_spec;                // per region
  std::vector<std::vector<Eigen::VectorXd>> true_zeta;  // [region][age]
  std::vector<bool> climate_sensitive;                  // per age
};

SynthData generate_synthetic(const SynthConfig& cfg);

// Scenario series with a linear warming ramp of `total_ramp` degrees applied
// across the horizon.
std::vector<DailyClimateSeries> ramped(const std::vector<DailyClimateSeries>& scenario,
                                       double total_ramp);

}  // namespace climort

#endif

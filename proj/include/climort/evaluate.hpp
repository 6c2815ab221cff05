#ifndef CLIMORT_EVALUATE_HPP
#define CLIMORT_EVALUATE_HPP

#include <memory>
#include <string>
#include <vector>

#include "climort/backfit.hpp"
#include "climort/forecast.hpp"

namespace climort {

struct CvPlan {
  int initial = 102;
  int step = 8;
  int horizon = 78;
  int folds = 10;
  // Training end of fold j (1-based): initial + step*(j-1) under Prose, or
  // initial + step*j under Equation.
  enum class FoldConvention { Prose, Equation } convention = FoldConvention::Prose;

  int train_end(int fold) const {
    const int shift = convention == FoldConvention::Prose ? fold - 1 : fold;
    return initial + step * shift;
  }
};

// Throws with the violated inequality when the plan does not fit in T weeks.
void validate_plan(const CvPlan& plan, int n_weeks);

// A forecasting model under cross-validation. fit() sees only training data;
// predict() may read observed climate over the test window but nothing else.
class CvModel {
 public:
  virtual ~CvModel() = default;
  virtual std::string name() const = 0;
  virtual void fit(const MortalityPanel& train_panel,
                   const std::vector<DailyClimateSeries>& train_climate) = 0;
  // Rates per region (N x horizon) for weeks [first_week, first_week+horizon).
  virtual std::vector<Eigen::MatrixXd> predict(
      int first_week, int horizon, const std::vector<DailyClimateSeries>& observed_climate) = 0;
};

// baseline_lc | dlnm_lc | baseline_ll | dlnm_ll
std::unique_ptr<CvModel> make_cv_model(const std::string& name, const BackfitConfig& cfg);

struct MaeTable {
  struct Row {
    std::string region;
    std::string model;
    std::string age;
    double mae_x100 = 0.0;
  };
  std::vector<Row> rows;

  double get(const std::string& region, const std::string& model, const std::string& age) const;
};

MaeTable run_cv(const MortalityPanel& panel, const std::vector<DailyClimateSeries>& climate,
                const std::vector<std::unique_ptr<CvModel>>& models, const CvPlan& plan);

}  // namespace climort

#endif

#include "climort/evaluate.hpp"

#include <cmath>
#include <sstream>

namespace climort {

void validate_plan(const CvPlan& plan, int n_weeks) {
  if (plan.initial < 1 || plan.step < 1 || plan.horizon < 1 || plan.folds < 1)
    throw InputError("cv plan: initial, step, horizon and folds must all be positive");
  const int last_train = plan.train_end(plan.folds);
  if (last_train + plan.horizon > n_weeks) {
    std::ostringstream msg;
    msg << "cv plan infeasible: " << plan.initial << " + " << plan.step << "*"
        << (plan.convention == CvPlan::FoldConvention::Prose ? plan.folds - 1 : plan.folds)
        << " + " << plan.horizon << " = " << last_train + plan.horizon << " > T = " << n_weeks;
    throw InputError(msg.str());
  }
}

namespace {

// Stochastic-only forecasts from LC or LL fits on the training window.
class BaselineLcModel : public CvModel {
 public:
  explicit BaselineLcModel(const BackfitConfig& cfg) : cfg_(cfg) {}
  std::string name() const override { return "baseline_lc"; }

  void fit(const MortalityPanel& panel,
           const std::vector<DailyClimateSeries>&) override {
    fits_.clear();
    index_.clear();
    for (int i = 0; i < panel.n_regions(); ++i) {
      fits_.push_back(fit_lc(panel.log_rates(i)));
      index_.push_back(fit_index_model(fits_.back().params.kappa));
    }
  }

  std::vector<Eigen::MatrixXd> predict(
      int, int horizon, const std::vector<DailyClimateSeries>&) override {
    std::vector<Eigen::MatrixXd> out;
    for (std::size_t i = 0; i < fits_.size(); ++i) {
      const Eigen::VectorXd kappa = index_point_forecast(index_[i], horizon);
      const auto& p = fits_[i].params;
      out.push_back(((p.b * kappa.transpose()).colwise() + p.a).array().exp());
    }
    return out;
  }

 private:
  BackfitConfig cfg_;
  std::vector<LcFit> fits_;
  std::vector<IndexModel> index_;
};

class BaselineLlModel : public CvModel {
 public:
  explicit BaselineLlModel(const BackfitConfig& cfg) : cfg_(cfg) {}
  std::string name() const override { return "baseline_ll"; }

  void fit(const MortalityPanel& panel,
           const std::vector<DailyClimateSeries>&) override {
    std::vector<Eigen::MatrixXd> logs;
    for (int i = 0; i < panel.n_regions(); ++i) logs.push_back(panel.log_rates(i));
    fit_ = fit_ll(logs);
    common_index_ = fit_index_model(fit_.params.K);
    region_index_.clear();
    for (int i = 0; i < panel.n_regions(); ++i)
      region_index_.push_back(fit_index_model(fit_.params.kappa.col(i)));
  }

  std::vector<Eigen::MatrixXd> predict(
      int, int horizon, const std::vector<DailyClimateSeries>&) override {
    const Eigen::VectorXd K = index_point_forecast(common_index_, horizon);
    std::vector<Eigen::MatrixXd> out;
    for (std::size_t i = 0; i < region_index_.size(); ++i) {
      const Eigen::VectorXd kap = index_point_forecast(region_index_[i], horizon);
      Eigen::MatrixXd log_m =
          fit_.params.B * K.transpose() + fit_.params.b.col(i) * kap.transpose();
      log_m.colwise() += fit_.params.A.col(i);
      out.push_back(log_m.array().exp());
    }
    return out;
  }

 private:
  BackfitConfig cfg_;
  LlFit fit_;
  IndexModel common_index_;
  std::vector<IndexModel> region_index_;
};

// Backfitted models: stochastic index forecast plus the accumulated DLNM
// applied to observed climate over the test window (training-window knots).
class BackfitCvModel : public CvModel {
 public:
  BackfitCvModel(Variant variant, const BackfitConfig& cfg) : variant_(variant), cfg_(cfg) {}
  std::string name() const override {
    return variant_ == Variant::Lc ? "dlnm_lc" : "dlnm_ll";
  }

  void fit(const MortalityPanel& panel,
           const std::vector<DailyClimateSeries>& climate) override {
    model_ = variant_ == Variant::Lc ? backfit_lc(panel, climate, cfg_)
                                     : backfit_ll(panel, climate, cfg_);
    region_index_.clear();
    if (variant_ == Variant::Lc) {
      for (int i = 0; i < model_.n_regions(); ++i)
        region_index_.push_back(fit_index_model(model_.lc[i].kappa));
    } else {
      common_index_ = fit_index_model(model_.ll.K);
      for (int i = 0; i < model_.n_regions(); ++i)
        region_index_.push_back(fit_index_model(model_.ll.kappa.col(i)));
    }
  }

  std::vector<Eigen::MatrixXd> predict(
      int first_week, int horizon,
      const std::vector<DailyClimateSeries>& observed_climate) override {
    std::vector<Eigen::MatrixXd> out;
    Eigen::VectorXd K;
    if (variant_ == Variant::Ll) K = index_point_forecast(common_index_, horizon);
    for (int i = 0; i < model_.n_regions(); ++i) {
      const Eigen::VectorXd kap = index_point_forecast(region_index_[i], horizon);
      const CrossBasis test_basis =
          build_cross_basis(observed_climate[i], first_week, horizon, model_.basis[i].spec);
      Eigen::MatrixXd log_m(model_.n_ages(), horizon);
      for (int x = 0; x < model_.n_ages(); ++x) {
        Eigen::VectorXd row = test_basis.X * model_.zeta[i][x];
        if (variant_ == Variant::Lc)
          row += model_.lc[i].a[x] * Eigen::VectorXd::Ones(horizon) + model_.lc[i].b[x] * kap;
        else
          row += model_.ll.A(x, i) * Eigen::VectorXd::Ones(horizon) +
                 model_.ll.B[x] * K + model_.ll.b(x, i) * kap;
        log_m.row(x) = row.transpose();
      }
      out.push_back(log_m.array().exp());
    }
    return out;
  }

 private:
  Variant variant_;
  BackfitConfig cfg_;
  FittedModel model_;
  IndexModel common_index_;
  std::vector<IndexModel> region_index_;
};

}  // namespace

std::unique_ptr<CvModel> make_cv_model(const std::string& name, const BackfitConfig& cfg) {
  if (name == "baseline_lc") return std::make_unique<BaselineLcModel>(cfg);
  if (name == "baseline_ll") return std::make_unique<BaselineLlModel>(cfg);
  if (name == "dlnm_lc") return std::make_unique<BackfitCvModel>(Variant::Lc, cfg);
  if (name == "dlnm_ll") return std::make_unique<BackfitCvModel>(Variant::Ll, cfg);
  throw InputError("unknown cv model '" + name + "'");
}

double MaeTable::get(const std::string& region, const std::string& model,
                     const std::string& age) const {
  for (const auto& row : rows)
    if (row.region == region && row.model == model && row.age == age) return row.mae_x100;
  throw InputError("mae table: no row for (" + region + ", " + model + ", " + age + ")");
}

MaeTable run_cv(const MortalityPanel& panel, const std::vector<DailyClimateSeries>& climate,
                const std::vector<std::unique_ptr<CvModel>>& models, const CvPlan& plan) {
  validate_plan(plan, panel.n_weeks());
  if (static_cast<int>(climate.size()) != panel.n_regions())
    throw InputError("run_cv needs one climate series per region");

  const int N = panel.n_ages();
  const int n = panel.n_regions();
  MaeTable table;
  for (const auto& model : models) {
    Eigen::MatrixXd abs_err_sum = Eigen::MatrixXd::Zero(N, n);
    for (int fold = 1; fold <= plan.folds; ++fold) {
      const int train_end = plan.train_end(fold);
      const MortalityPanel train_panel = panel.truncated(train_end);
      std::vector<DailyClimateSeries> train_climate;
      for (const auto& c : climate) train_climate.push_back(c.truncated(7 * train_end));

      model->fit(train_panel, train_climate);
      const auto predicted = model->predict(train_end + 1, plan.horizon, climate);
      if (static_cast<int>(predicted.size()) != n)
        throw ModelError("cv model '" + model->name() + "' returned wrong region count");

      for (int i = 0; i < n; ++i) {
        if (predicted[i].rows() != N || predicted[i].cols() != plan.horizon)
          throw ModelError("cv model '" + model->name() + "' returned wrong forecast shape");
        for (int x = 0; x < N; ++x)
          for (int h = 0; h < plan.horizon; ++h)
            abs_err_sum(x, i) +=
                std::abs(panel.rate(x, train_end + 1 + h, i) - predicted[i](x, h));
      }
    }
    const double denom = static_cast<double>(plan.folds) * plan.horizon;
    for (int i = 0; i < n; ++i)
      for (int x = 0; x < N; ++x)
        table.rows.push_back({panel.regions()[i], model->name(), panel.ages()[x].label,
                              100.0 * abs_err_sum(x, i) / denom});
  }
  return table;
}

}  // namespace climort

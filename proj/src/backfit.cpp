#include "climort/backfit.hpp"

#include <cmath>

namespace climort {

std::string variant_name(Variant v) { return v == Variant::Lc ? "lc" : "ll"; }

void BackfitConfig::validate() const {
  if (!(delta > 0)) throw InputError("backfit delta must be > 0");
  if (max_iter < 1) throw InputError("backfit max_iter must be >= 1");
  if (lag_max < 0) throw InputError("lag_max must be >= 0");
  if (exposure_df < 2 || lag_df < 2) throw InputError("spline dfs must be >= 2");
}

namespace {

double sup_abs_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

double sup_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

double lc_param_change(const LcParams& cur, const LcParams& prev) {
  return std::max({sup_abs_diff(cur.a, prev.a), sup_abs_diff(cur.b, prev.b),
                   sup_abs_diff(cur.kappa, prev.kappa)});
}

double ll_param_change(const LlParams& cur, const LlParams& prev) {
  return std::max({sup_abs_diff(cur.A, prev.A), sup_abs_diff(cur.B, prev.B),
                   sup_abs_diff(cur.K, prev.K), sup_abs_diff(cur.b, prev.b),
                   sup_abs_diff(cur.kappa, prev.kappa)});
}

// Accumulated-coefficient covariance and residual variance from the
// single-DLNM view of the converged fit: sigma2 from the full-model
// residuals, scaled by the design's (X'X)^-1.
void finalize_cell(FittedModel& model, const DlnmSolver& solver, int region, int age) {
  const auto& X = solver.basis().X;
  const int T = model.n_weeks();
  const int p = static_cast<int>(X.cols());
  const Eigen::VectorXd resid = model.observed_log[region].row(age).transpose() -
                                model.stochastic_log(region).row(age).transpose() -
                                X * model.zeta[region][age];
  model.sigma2[region][age] = resid.squaredNorm() / static_cast<double>(T - p);
  model.zeta_cov[region][age] = model.sigma2[region][age] * solver.xtx_inverse();
}

}  // namespace

Eigen::MatrixXd FittedModel::stochastic_log(int region) const {
  if (variant == Variant::Lc) {
    const auto& p = lc[region];
    return (p.b * p.kappa.transpose()).colwise() + p.a;
  }
  const Eigen::MatrixXd common = ll.B * ll.K.transpose();
  const Eigen::MatrixXd specific = ll.b.col(region) * ll.kappa.col(region).transpose();
  return (common + specific).colwise() + ll.A.col(region);
}

Eigen::MatrixXd FittedModel::climate_log(int region) const {
  Eigen::MatrixXd S(n_ages(), n_weeks());
  for (int x = 0; x < n_ages(); ++x)
    S.row(x) = (basis[region].X * zeta[region][x]).transpose();
  return S;
}

DlnmFit FittedModel::dlnm(int region, int age) const {
  DlnmFit fit;
  fit.zeta = zeta[region][age];
  fit.cov = zeta_cov[region][age];
  fit.sigma2 = sigma2[region][age];
  fit.spec = std::make_shared<CrossBasisSpec>(basis[region].spec);
  return fit;
}

FittedModel backfit_lc(const MortalityPanel& panel,
                       const std::vector<DailyClimateSeries>& climate,
                       const BackfitConfig& cfg) {
  cfg.validate();
  if (static_cast<int>(climate.size()) != panel.n_regions())
    throw InputError("backfit needs one climate series per region");

  FittedModel model;
  model.variant = Variant::Lc;
  model.ages = panel.ages();
  model.regions = panel.regions();
  model.config = cfg;
  const int N = panel.n_ages();
  const int T = panel.n_weeks();

  for (int i = 0; i < panel.n_regions(); ++i) {
    const CrossBasisSpec spec =
        make_cross_basis_spec(climate[i], 1, T, cfg.lag_max, cfg.exposure_df, cfg.lag_df);
    model.basis.push_back(build_cross_basis(climate[i], 1, T, spec));
    model.observed_log.push_back(panel.log_rates(i));
  }
  model.zeta.resize(panel.n_regions());
  model.zeta_cov.assign(panel.n_regions(), std::vector<Eigen::MatrixXd>(N));
  model.sigma2.assign(panel.n_regions(), std::vector<double>(N, 0.0));
  model.zeta_iterations.resize(panel.n_regions());
  model.traces.resize(panel.n_regions());
  model.lc.resize(panel.n_regions());

  for (int i = 0; i < panel.n_regions(); ++i) {
    const DlnmSolver solver(model.basis[i]);
    const Eigen::MatrixXd& observed = model.observed_log[i];
    Eigen::MatrixXd working = observed;

    ConvergenceTrace trace;
    std::vector<std::vector<Eigen::VectorXd>> pieces(N);  // [age][iteration]
    LcParams prev;
    LcFit current;
    int r = 0;
    bool converged = false;

    for (int j = 0;; ++j) {
      current = fit_lc(working);
      // Full-model RSS at iteration j: observed minus accumulated climate is
      // exactly the working matrix.
      trace.rss.push_back((working - current.fitted).squaredNorm());
      if (!current.fitted.allFinite())
        throw ModelError("backfit: non-finite Lee-Carter fit at iteration " + std::to_string(j));

      double change = std::numeric_limits<double>::infinity();
      if (j > 0) {
        change = lc_param_change(current.params, prev);
        trace.sup_change.push_back(change);
      }
      prev = current.params;

      for (int x = 0; x < N; ++x) {
        const Eigen::VectorXd e =
            (working.row(x).array() - current.params.a[x]).matrix().transpose();
        if (!e.allFinite())
          throw ModelError("backfit: non-finite partial residuals at iteration " +
                           std::to_string(j));
        Eigen::VectorXd zeta_j;
        try {
          zeta_j = solver.solve(e);
        } catch (const ModelError& err) {
          throw ModelError("backfit iteration " + std::to_string(j) + ": " + err.what());
        }
        working.row(x) -= (model.basis[i].X * zeta_j).transpose();
        pieces[x].push_back(std::move(zeta_j));
      }

      if (j == cfg.max_iter || (j > 0 && change < cfg.delta)) {
        r = j;
        converged = j > 0 && change < cfg.delta;
        break;
      }
    }

    trace.iterations = r;
    trace.converged = converged;
    model.traces[i] = std::move(trace);
    model.lc[i] = current.params;
    // Re-derive the final working matrix from the retained iterations: the
    // last loop pass also fitted a DLNM whose piece is not part of the model.
    model.final_working_log.push_back(observed);
    model.zeta[i].resize(N);
    model.zeta_iterations[i].resize(N);
    for (int x = 0; x < N; ++x) {
      pieces[x].resize(r);  // keep iterations 0..r-1
      Eigen::VectorXd total = Eigen::VectorXd::Zero(model.basis[i].X.cols());
      for (const auto& piece : pieces[x]) {
        model.final_working_log[i].row(x) -= (model.basis[i].X * piece).transpose();
        total += piece;
      }
      model.zeta[i][x] = std::move(total);
      model.zeta_iterations[i][x] = std::move(pieces[x]);
    }
    for (int x = 0; x < N; ++x) finalize_cell(model, solver, i, x);
  }

  model.iterations = 0;
  model.converged = true;
  for (const auto& t : model.traces) {
    model.iterations = std::max(model.iterations, t.iterations);
    model.converged = model.converged && t.converged;
  }
  return model;
}

FittedModel backfit_ll(const MortalityPanel& panel,
                       const std::vector<DailyClimateSeries>& climate,
                       const BackfitConfig& cfg) {
  cfg.validate();
  if (panel.n_regions() < 2) throw InputError("LL variant needs at least 2 regions");
  if (static_cast<int>(climate.size()) != panel.n_regions())
    throw InputError("backfit needs one climate series per region");

  FittedModel model;
  model.variant = Variant::Ll;
  model.ages = panel.ages();
  model.regions = panel.regions();
  model.config = cfg;
  const int N = panel.n_ages();
  const int T = panel.n_weeks();
  const int n = panel.n_regions();

  std::vector<DlnmSolver> solvers;
  for (int i = 0; i < n; ++i) {
    const CrossBasisSpec spec =
        make_cross_basis_spec(climate[i], 1, T, cfg.lag_max, cfg.exposure_df, cfg.lag_df);
    model.basis.push_back(build_cross_basis(climate[i], 1, T, spec));
    model.observed_log.push_back(panel.log_rates(i));
    solvers.emplace_back(model.basis[i]);
  }
  model.zeta.resize(n);
  model.zeta_cov.assign(n, std::vector<Eigen::MatrixXd>(N));
  model.sigma2.assign(n, std::vector<double>(N, 0.0));
  model.zeta_iterations.resize(n);

  std::vector<Eigen::MatrixXd> working = model.observed_log;
  std::vector<std::vector<std::vector<Eigen::VectorXd>>> pieces(
      n, std::vector<std::vector<Eigen::VectorXd>>(N));

  ConvergenceTrace trace;
  LlParams prev;
  LlFit current;
  int r = 0;
  bool converged = false;

  for (int j = 0;; ++j) {
    current = fit_ll(working);
    double rss = 0.0;
    for (int i = 0; i < n; ++i) rss += (working[i] - current.fitted[i]).squaredNorm();
    trace.rss.push_back(rss);

    double change = std::numeric_limits<double>::infinity();
    if (j > 0) {
      change = ll_param_change(current.params, prev);
      trace.sup_change.push_back(change);
    }
    prev = current.params;

    for (int i = 0; i < n; ++i) {
      for (int x = 0; x < N; ++x) {
        const Eigen::VectorXd e =
            (working[i].row(x).array() - current.params.A(x, i)).matrix().transpose();
        if (!e.allFinite())
          throw ModelError("backfit: non-finite partial residuals at iteration " +
                           std::to_string(j));
        Eigen::VectorXd zeta_j;
        try {
          zeta_j = solvers[i].solve(e);
        } catch (const ModelError& err) {
          throw ModelError("backfit iteration " + std::to_string(j) + ": " + err.what());
        }
        working[i].row(x) -= (model.basis[i].X * zeta_j).transpose();
        pieces[i][x].push_back(std::move(zeta_j));
      }
    }

    if (j == cfg.max_iter || (j > 0 && change < cfg.delta)) {
      r = j;
      converged = j > 0 && change < cfg.delta;
      break;
    }
  }

  trace.iterations = r;
  trace.converged = converged;
  model.traces.push_back(std::move(trace));
  model.ll = current.params;
  model.iterations = r;
  model.converged = converged;

  for (int i = 0; i < n; ++i) {
    model.final_working_log.push_back(model.observed_log[i]);
    model.zeta[i].resize(N);
    model.zeta_iterations[i].resize(N);
    for (int x = 0; x < N; ++x) {
      pieces[i][x].resize(r);
      Eigen::VectorXd total = Eigen::VectorXd::Zero(model.basis[i].X.cols());
      for (const auto& piece : pieces[i][x]) {
        model.final_working_log[i].row(x) -= (model.basis[i].X * piece).transpose();
        total += piece;
      }
      model.zeta[i][x] = std::move(total);
      model.zeta_iterations[i][x] = std::move(pieces[i][x]);
    }
    for (int x = 0; x < N; ++x) finalize_cell(model, solvers[i], i, x);
  }
  return model;
}

EquivalenceReport check_equivalence(const FittedModel& model, double tolerance) {
  EquivalenceReport report;
  report.tolerance = tolerance;
  for (int i = 0; i < model.n_regions(); ++i) {
    const DlnmSolver solver(model.basis[i]);
    for (int x = 0; x < model.n_ages(); ++x) {
      // The accumulated climate component is the observed log rates minus the
      // final working matrix; refitting one DLNM on it must recover the
      // summed per-iteration coefficients.
      const Eigen::VectorXd target = (model.observed_log[i].row(x) -
                                      model.final_working_log[i].row(x))
                                         .transpose();
      const Eigen::VectorXd single = solver.solve(target);
      Eigen::Index worst_idx = 0;
      const double diff = (single - model.zeta[i][x]).cwiseAbs().maxCoeff(&worst_idx);
      report.cells.push_back(
          {model.regions[i], model.ages[x].label, diff, static_cast<int>(worst_idx)});
      report.worst = std::max(report.worst, diff);
    }
  }
  report.pass = report.worst < tolerance;
  return report;
}

}  // namespace climort

#pragma once

#include "fsbench/data.hpp"
#include "fsbench/lasso.hpp"
#include "fsbench/logistic.hpp"
#include "fsbench/selection.hpp"

namespace fsbench {

struct LassoSelectOptions {
  CvOptions cv;
  LassoOptions solver;
};

/// Support of the L1 logistic fit at the cross-validated lambda.
inline SelectionResult lasso_select(const Matrix& x, const Labels& y, const LassoSelectOptions& opt = {}) {
  const auto path = cv_lambda_path(x, y, opt.cv, opt.solver);
  // refit on all rows along the grid down to the chosen lambda
  const std::vector<double> head(path.lambdas.begin(), path.lambdas.begin() + static_cast<std::ptrdiff_t>(path.chosen) + 1);
  const auto fits = fit_lasso_path(x, y, head, opt.solver);
  const auto& fit = fits.back();
  SelectionResult res;
  res.method = "lasso";
  res.mode = SelectionMode::thresholded;
  res.selected = fit.support();
  res.diagnostics["coefficients"] = std::vector<double>(fit.coefficients.data(), fit.coefficients.data() + fit.coefficients.size());
  res.diagnostics["lambda"] = {fit.lambda};
  res.diagnostics["cv_auc"] = path.cv_mean;
  if (!fit.converged) res.warnings.push_back("lasso refit did not converge");
  return res;
}

/// LASSO with per-feature penalty factors lambda * w_j.
inline SelectionResult weighted_lasso_select(const Matrix& x, const Labels& y, std::vector<double> weights,
                                             LassoSelectOptions opt = {}) {
  opt.solver.penalty_factors = std::move(weights);
  return lasso_select(x, y, opt);
}

inline constexpr double kAdaptivePilotL2 = 1e-3;
inline constexpr double kAdaptiveWeightEps = 1e-6;

/// Adaptive LASSO: a lightly ridge-penalised logistic pilot fit gives
/// weights w_j = 1 / (|beta_j|^gamma + 1e-6) for a weighted LASSO.
inline SelectionResult adaptive_lasso_select(const Matrix& x, const Labels& y, double gamma = 1.0,
                                             const LassoSelectOptions& opt = {}) {
  LogisticOptions pilot_opt;
  pilot_opt.l2 = kAdaptivePilotL2;
  const auto pilot = fit_logistic(x, y, pilot_opt);
  std::vector<double> w(static_cast<std::size_t>(x.cols()));
  for (std::size_t j = 0; j < w.size(); ++j)
    w[j] = 1.0 / (std::pow(std::abs(pilot.coef[static_cast<Eigen::Index>(j)]), gamma) + kAdaptiveWeightEps);
  auto res = weighted_lasso_select(x, y, w, opt);
  res.method = "adaptive_lasso";
  res.diagnostics["weights"] = w;
  return res;
}

struct BolassoOptions {
  std::size_t inner_B = 32;
  double freq_threshold = 0.5;
  std::uint64_t seed = 0;
  LassoSelectOptions lasso;
};

/// Bolasso: LASSO on bootstrap replicates of the given rows, keep features
/// with selection frequency >= threshold, then a second LASSO on those.
inline SelectionResult bolasso_select(const Matrix& x, const Labels& y, const BolassoOptions& opt = {}) {
  const std::size_t p = static_cast<std::size_t>(x.cols());
  const auto resamples = make_resamples(y, opt.inner_B, ResampleKind::bootstrap, 1.0, opt.seed);
  std::vector<double> freq(p, 0.0);
  for (const auto& rs : resamples) {
    auto inner = opt.lasso;
    inner.cv.seed = derive_seed(opt.seed, rs.ordinal);
    const auto sel = lasso_select(select_rows(x, rs.in_indices), select_labels(y, rs.in_indices), inner);
    for (Index j : sel.selected) freq[j] += 1.0;
  }
  for (auto& f : freq) f /= static_cast<double>(resamples.size());
  IndexList kept;
  for (std::size_t j = 0; j < p; ++j)
    if (freq[j] >= opt.freq_threshold) kept.push_back(j);

  SelectionResult res;
  res.method = "bolasso";
  res.mode = SelectionMode::thresholded;
  res.diagnostics["frequency"] = freq;
  if (kept.empty()) return res;
  auto refit_opt = opt.lasso;
  refit_opt.cv.seed = derive_seed(opt.seed, 0);
  const auto refit = lasso_select(select_columns(x, kept), y, refit_opt);
  for (Index c : refit.selected) res.selected.push_back(kept[c]);
  return res;
}

struct StabilitySelectionOptions {
  std::size_t inner_B = 50;
  double subsample_ratio = 0.5;
  double freq_threshold = 0.6;
  std::size_t n_lambdas = 20;
  std::uint64_t seed = 0;
  LassoOptions solver;
};

/// Lower end of the stability-selection grid: the universal threshold for
/// the null gradient of standardised features on an m-row subsample,
/// sqrt(ybar (1 - ybar)) * sqrt(2 log p / m).
inline double stability_lambda_floor(const Labels& y, std::size_t p, std::size_t m) {
  const double ybar = static_cast<double>(count_positive(y)) / static_cast<double>(y.size());
  return std::sqrt(ybar * (1.0 - ybar)) * std::sqrt(2.0 * std::log(static_cast<double>(std::max<std::size_t>(p, 2))) /
                                                    static_cast<double>(m));
}

/// Stability selection: LASSO paths on random subsamples over a fixed
/// lambda grid; a feature's frequency is its largest selection frequency
/// over the grid, and features at or above the threshold are kept.
inline SelectionResult stability_selection_select(const Matrix& x, const Labels& y,
                                                  const StabilitySelectionOptions& opt = {}) {
  require_two_classes(y, "stability_selection_select");
  const std::size_t p = static_cast<std::size_t>(x.cols());
  const auto m = static_cast<std::size_t>(std::llround(opt.subsample_ratio * static_cast<double>(y.size())));
  const double lo = stability_lambda_floor(y, p, m);
  const double hi = std::max(lambda_max(x, y, opt.solver.penalty_factors), lo);
  const auto grid = lambda_grid(hi, lo / hi, opt.n_lambdas);
  const auto resamples = make_resamples(y, opt.inner_B, ResampleKind::subsample, opt.subsample_ratio, opt.seed);
  std::vector<std::vector<double>> counts(grid.size(), std::vector<double>(p, 0.0));
  for (const auto& rs : resamples) {
    const auto fits = fit_lasso_path(select_rows(x, rs.in_indices), select_labels(y, rs.in_indices), grid, opt.solver);
    for (std::size_t l = 0; l < grid.size(); ++l)
      for (Index j : fits[l].support()) counts[l][j] += 1.0;
  }
  std::vector<double> freq(p, 0.0);
  for (std::size_t l = 0; l < grid.size(); ++l)
    for (std::size_t j = 0; j < p; ++j) freq[j] = std::max(freq[j], counts[l][j] / static_cast<double>(resamples.size()));
  SelectionResult res;
  res.method = "stability_selection";
  res.mode = SelectionMode::thresholded;
  for (std::size_t j = 0; j < p; ++j)
    if (freq[j] >= opt.freq_threshold) res.selected.push_back(j);
  res.diagnostics["frequency"] = freq;
  res.diagnostics["lambdas"] = grid;
  return res;
}

}  // namespace fsbench

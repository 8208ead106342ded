#pragma once

#include "fsbench/common.hpp"
#include "fsbench/metrics.hpp"

namespace fsbench {

struct LassoOptions {
  // Per-feature penalty factors (lambda * w_j); empty means all ones.
  std::vector<double> penalty_factors;
  double tol = 1e-8;            // KKT violation at which a fit counts as converged
  int max_iter = 100;           // outer Newton steps
  int max_inner_sweeps = 2000;  // coordinate sweeps per Newton step
};

struct LassoFit {
  double lambda = 0.0;
  Vector coefficients;
  double intercept = 0.0;
  bool converged = false;
  int iterations = 0;  // Newton steps
  double kkt = 0.0;    // max KKT violation at return

  IndexList support() const {
    IndexList s;
    for (Eigen::Index j = 0; j < coefficients.size(); ++j)
      if (coefficients[j] != 0.0) s.push_back(static_cast<Index>(j));
    return s;
  }
};

struct WarmStart {
  Vector coefficients;
  double intercept = 0.0;
};

namespace detail {

inline double soft_threshold(double z, double t) noexcept {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

inline double penalty_factor(const LassoOptions& opt, Eigen::Index j) {
  return opt.penalty_factors.empty() ? 1.0 : opt.penalty_factors[static_cast<std::size_t>(j)];
}

}  // namespace detail

/// Smallest lambda at which the all-zero solution is optimal:
/// max_j |(1/n) sum_i x_ij (y_i - ybar)| / w_j.
inline double lambda_max(const Matrix& x, const Labels& y, const std::vector<double>& penalty_factors = {}) {
  const Eigen::Index n = x.rows();
  Vector r(n);
  const double ybar = static_cast<double>(count_positive(y)) / static_cast<double>(n);
  for (Eigen::Index i = 0; i < n; ++i) r[i] = y[static_cast<std::size_t>(i)] - ybar;
  const Vector g = x.transpose() * r / static_cast<double>(n);
  double lm = 0.0;
  for (Eigen::Index j = 0; j < g.size(); ++j) {
    const double w = penalty_factors.empty() ? 1.0 : penalty_factors[static_cast<std::size_t>(j)];
    if (w > 0.0) lm = std::max(lm, std::abs(g[j]) / w);
  }
  return lm;
}

/// Largest violation of the L1-logistic optimality conditions
///   g_j + lambda w_j sign(beta_j) = 0  (beta_j != 0),  |g_j| <= lambda w_j  (beta_j = 0),
/// with g the mean log-loss gradient; the intercept gradient must vanish.
inline double lasso_kkt_violation(const Matrix& x, const Vector& yv, const Vector& eta, const Vector& beta, double lambda,
                                  const LassoOptions& opt) {
  const Eigen::Index n = x.rows();
  Vector resid(n);
  for (Eigen::Index i = 0; i < n; ++i) resid[i] = sigmoid(eta[i]) - yv[i];
  const Vector g = x.transpose() * resid / static_cast<double>(n);
  double worst = std::abs(resid.mean());
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    const double pen = lambda * detail::penalty_factor(opt, j);
    const double v = beta[j] != 0.0 ? std::abs(g[j] + pen * (beta[j] > 0 ? 1.0 : -1.0)) : std::max(0.0, std::abs(g[j]) - pen);
    worst = std::max(worst, v);
  }
  return worst;
}

/// L1-penalised logistic regression:
///   min (1/n) sum logloss + lambda * sum_j w_j |beta_j|,  intercept free.
///
/// Proximal Newton: each outer step minimises the penalised quadratic
/// approximation of the log-loss (IRLS weights p(1-p), floored at 1e-5) by
/// cyclic coordinate descent with active-set passes, then backtracks on the
/// true objective. Converged when the KKT violation drops below `tol`;
/// otherwise the last iterate is returned with converged = false.
inline LassoFit fit_lasso_logistic(const Matrix& x, const Labels& y, double lambda, const LassoOptions& opt = {},
                                   const WarmStart* warm = nullptr) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("fit_lasso_logistic: lambda must be >= 0");
  const Eigen::Index n = x.rows(), p = x.cols();
  if (static_cast<std::size_t>(n) != y.size()) throw DataError("fit_lasso_logistic: row/label count mismatch");
  if (!opt.penalty_factors.empty() && opt.penalty_factors.size() != static_cast<std::size_t>(p))
    throw std::invalid_argument("fit_lasso_logistic: penalty factor count differs from feature count");
  const double inv_n = 1.0 / static_cast<double>(n);

  LassoFit fit;
  fit.lambda = lambda;
  Vector beta = Vector::Zero(p);
  double b0;
  if (warm && warm->coefficients.size() == p) {
    beta = warm->coefficients;
    b0 = warm->intercept;
  } else {
    const double prev = std::clamp(static_cast<double>(count_positive(y)) * inv_n, 1e-6, 1.0 - 1e-6);
    b0 = std::log(prev / (1.0 - prev));
  }
  Vector yv(n);
  for (Eigen::Index i = 0; i < n; ++i) yv[i] = y[static_cast<std::size_t>(i)];
  std::vector<double> pen(static_cast<std::size_t>(p));
  for (Eigen::Index j = 0; j < p; ++j) pen[static_cast<std::size_t>(j)] = lambda * detail::penalty_factor(opt, j);

  auto objective = [&](const Vector& e, const Vector& b) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double v = e[i];
      s += (v > 0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v))) - yv[i] * v;
    }
    double l1 = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) l1 += pen[static_cast<std::size_t>(j)] * std::abs(b[j]);
    return s * inv_n + l1;
  };

  Vector eta = (x * beta).array() + b0;
  Vector w(n), res(n), xw(p);
  std::vector<Eigen::Index> active;
  fit.kkt = lasso_kkt_violation(x, yv, eta, beta, lambda, opt);
  while (fit.kkt >= opt.tol && fit.iterations < opt.max_iter) {
    ++fit.iterations;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double pr = sigmoid(eta[i]);
      w[i] = std::max(pr * (1.0 - pr), 1e-5);
      res[i] = (yv[i] - pr) / w[i];  // working residual z - eta
    }
    for (Eigen::Index j = 0; j < p; ++j) xw[j] = x.col(j).cwiseProduct(x.col(j)).dot(w) * inv_n;
    const double wsum = w.sum() * inv_n;

    // coordinate descent on the penalised weighted least-squares model
    Vector nb = beta;
    double nb0 = b0;
    auto step_intercept = [&]() {
      const double delta = res.dot(w) * inv_n / wsum;
      nb0 += delta;
      res.array() -= delta;
      return std::abs(delta) * std::sqrt(wsum);
    };
    auto step_coord = [&](Eigen::Index j) {
      if (!(xw[j] > 0.0)) return 0.0;
      const double g = x.col(j).cwiseProduct(w).dot(res) * inv_n + xw[j] * nb[j];
      const double next = detail::soft_threshold(g, pen[static_cast<std::size_t>(j)]) / xw[j];
      const double delta = next - nb[j];
      if (delta == 0.0) return 0.0;
      nb[j] = next;
      res.noalias() -= delta * x.col(j);
      return std::abs(delta) * std::sqrt(xw[j]);
    };
    const double inner_tol = std::min(1e-3, 0.1 * fit.kkt);
    for (int sweep = 0; sweep < opt.max_inner_sweeps;) {
      double change = step_intercept();
      for (Eigen::Index j = 0; j < p; ++j) change = std::max(change, step_coord(j));
      ++sweep;
      if (change < inner_tol * 1e-2) break;
      active.clear();
      for (Eigen::Index j = 0; j < p; ++j)
        if (nb[j] != 0.0) active.push_back(j);
      while (sweep < opt.max_inner_sweeps) {
        double c = step_intercept();
        for (Eigen::Index j : active) c = std::max(c, step_coord(j));
        ++sweep;
        if (c < inner_tol * 1e-2) break;
      }
    }

    // backtracking on the true objective
    const Vector dbeta = nb - beta;
    const double db0 = nb0 - b0;
    const Vector deta = (x * dbeta).array() + db0;
    const double f0 = objective(eta, beta);
    double t = 1.0;
    bool moved = false;
    for (int halving = 0; halving < 40; ++halving, t *= 0.5) {
      const Vector e1 = eta + t * deta;
      const Vector b1 = beta + t * dbeta;
      if (objective(e1, b1) <= f0 + 1e-15 * std::abs(f0)) {
        beta = b1;
        b0 += t * db0;
        eta = e1;
        moved = true;
        break;
      }
    }
    fit.kkt = lasso_kkt_violation(x, yv, eta, beta, lambda, opt);
    if (!moved) break;
  }
  fit.converged = fit.kkt < opt.tol;
  fit.coefficients = std::move(beta);
  fit.intercept = b0;
  return fit;
}

/// Descending log-spaced grid from lambda_hi to lambda_hi * min_ratio.
inline std::vector<double> lambda_grid(double lambda_hi, double min_ratio, std::size_t count) {
  std::vector<double> g(count);
  if (count == 1) {
    g[0] = lambda_hi;
    return g;
  }
  for (std::size_t k = 0; k < count; ++k)
    g[k] = lambda_hi * std::pow(min_ratio, static_cast<double>(k) / static_cast<double>(count - 1));
  return g;
}

/// Warm-started fits along a descending grid.
inline std::vector<LassoFit> fit_lasso_path(const Matrix& x, const Labels& y, const std::vector<double>& lambdas,
                                            const LassoOptions& opt = {}) {
  std::vector<LassoFit> path;
  path.reserve(lambdas.size());
  WarmStart warm;
  for (double lam : lambdas) {
    path.push_back(fit_lasso_logistic(x, y, lam, opt, path.empty() ? nullptr : &warm));
    warm.coefficients = path.back().coefficients;
    warm.intercept = path.back().intercept;
  }
  return path;
}

enum class CvRule { min, one_se };

inline const char* to_string(CvRule r) { return r == CvRule::min ? "min" : "1se"; }

struct CvOptions {
  int folds = 5;
  std::size_t n_lambdas = 50;
  double min_ratio = 1e-3;
  CvRule rule = CvRule::one_se;
  std::uint64_t seed = 0;
};

struct LambdaPath {
  std::vector<double> lambdas;  // strictly descending
  std::vector<double> cv_mean;  // held-out AUC
  std::vector<double> cv_sd;
  std::size_t chosen = 0;
  CvRule rule = CvRule::one_se;

  double chosen_lambda() const { return lambdas.at(chosen); }
};

/// Stratified k-fold cross-validation of held-out AUC along the lambda grid.
/// "min" picks the best mean AUC; "1se" picks the largest lambda whose mean
/// is within one standard error (SD / sqrt(folds)) of the best.
inline LambdaPath cv_lambda_path(const Matrix& x, const Labels& y, const CvOptions& cv = {},
                                 const LassoOptions& opt = {}) {
  if (cv.folds < 2) throw std::invalid_argument("cv_lambda_path: folds must be >= 2");
  if (cv.n_lambdas < 1) throw std::invalid_argument("cv_lambda_path: need at least one lambda");
  require_two_classes(y, "cv_lambda_path");
  LambdaPath path;
  path.rule = cv.rule;
  const double lm = lambda_max(x, y, opt.penalty_factors);
  path.lambdas = lambda_grid(lm > 0 ? lm : 1e-12, cv.min_ratio, cv.n_lambdas);
  const auto fold_of = stratified_folds(y, cv.folds, cv.seed);
  const std::size_t L = path.lambdas.size();
  std::vector<std::vector<double>> auc(L);
  for (int f = 0; f < cv.folds; ++f) {
    IndexList train, test;
    for (Index i = 0; i < y.size(); ++i) (fold_of[i] == f ? test : train).push_back(i);
    const Matrix xtr = select_rows(x, train), xte = select_rows(x, test);
    const Labels ytr = select_labels(y, train), yte = select_labels(y, test);
    const auto fits = fit_lasso_path(xtr, ytr, path.lambdas, opt);
    for (std::size_t l = 0; l < L; ++l) {
      const Vector eta = (xte * fits[l].coefficients).array() + fits[l].intercept;
      auc[l].push_back(auc_score(eta, yte));
    }
  }
  path.cv_mean.resize(L);
  path.cv_sd.resize(L);
  std::size_t best = 0;
  for (std::size_t l = 0; l < L; ++l) {
    path.cv_mean[l] = mean_of(auc[l]);
    path.cv_sd[l] = sd_of(auc[l]);
    if (path.cv_mean[l] > path.cv_mean[best]) best = l;
  }
  path.chosen = best;
  if (cv.rule == CvRule::one_se) {
    const double bar = path.cv_mean[best] - path.cv_sd[best] / std::sqrt(static_cast<double>(cv.folds));
    for (std::size_t l = 0; l <= best; ++l)
      if (path.cv_mean[l] >= bar) {
        path.chosen = l;
        break;
      }
  }
  return path;
}

}  // namespace fsbench

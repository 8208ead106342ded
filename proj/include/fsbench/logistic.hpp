#pragma once

#include "fsbench/common.hpp"

namespace fsbench {

struct LogisticOptions {
  // L2 penalty in the mean-loss scale: (1/n) sum logloss + l2/2 * ||beta||^2.
  // The intercept is never penalised.
  double l2 = 0.0;
  int max_iter = 100;
  double grad_tol = 1e-8;
};

struct LogisticFit {
  Vector coef;  // without intercept
  double intercept = 0.0;
  bool converged = false;
  bool separated = false;  // iteration cap hit with diverging coefficients
  int iterations = 0;
  double grad_norm = 0.0;  // max-norm of the mean-loss gradient at return
  Matrix covariance;       // inverse observed information, (p+1)x(p+1), intercept first; empty if singular
};

namespace detail {

inline double mean_logloss(const Vector& eta, const Labels& y) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double e = eta[i];
    // log(1 + exp(e)) - y e, stable in both tails
    const double softplus = e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
    s += softplus - (y[static_cast<std::size_t>(i)] == 1 ? e : 0.0);
  }
  return s / static_cast<double>(eta.size());
}

}  // namespace detail

/// Logistic regression by damped Newton (IRLS) on the mean log-loss.
///
/// Stops when the gradient max-norm falls below grad_tol or after max_iter
/// Newton steps. Under separation the iteration cap is reached with growing
/// coefficients; the fit is then flagged and still usable for prediction.
inline LogisticFit fit_logistic(const Matrix& x, const Labels& y, const LogisticOptions& opt = {}) {
  const Eigen::Index n = x.rows(), p = x.cols();
  if (static_cast<std::size_t>(n) != y.size()) throw DataError("fit_logistic: row/label count mismatch");
  Matrix design(n, p + 1);
  design.col(0).setOnes();
  design.rightCols(p) = x;
  Vector yv(n);
  for (Eigen::Index i = 0; i < n; ++i) yv[i] = y[static_cast<std::size_t>(i)];

  Vector beta = Vector::Zero(p + 1);
  const double prevalence = std::clamp(yv.mean(), 1e-6, 1.0 - 1e-6);
  beta[0] = std::log(prevalence / (1.0 - prevalence));
  const double inv_n = 1.0 / static_cast<double>(n);

  auto objective = [&](const Vector& b) {
    const Vector eta = design * b;
    return detail::mean_logloss(eta, y) + 0.5 * opt.l2 * b.tail(p).squaredNorm();
  };

  LogisticFit fit;
  Vector prob(n), grad(p + 1);
  Matrix hess(p + 1, p + 1);
  double obj = objective(beta);
  for (int it = 0; it < opt.max_iter; ++it) {
    const Vector eta = design * beta;
    for (Eigen::Index i = 0; i < n; ++i) prob[i] = sigmoid(eta[i]);
    grad = design.transpose() * (prob - yv) * inv_n;
    grad.tail(p) += opt.l2 * beta.tail(p);
    fit.grad_norm = grad.cwiseAbs().maxCoeff();
    fit.iterations = it;
    if (fit.grad_norm < opt.grad_tol) {
      fit.converged = true;
      break;
    }
    const Vector w = (prob.array() * (1.0 - prob.array())).matrix();
    hess.noalias() = design.transpose() * w.asDiagonal() * design * inv_n;
    hess.diagonal().tail(p).array() += opt.l2;
    hess.diagonal().array() += 1e-12;
    Eigen::LDLT<Matrix> ldlt(hess);
    Vector step = ldlt.solve(grad);
    if (ldlt.info() != Eigen::Success || !step.allFinite()) step = grad;  // gradient fallback
    double t = 1.0;
    Vector trial = beta - step;
    double trial_obj = objective(trial);
    while (!(trial_obj <= obj) && t > 1e-10) {
      t *= 0.5;
      trial = beta - t * step;
      trial_obj = objective(trial);
    }
    if (!(trial_obj <= obj)) break;  // no descent possible
    beta = trial;
    obj = trial_obj;
    fit.iterations = it + 1;
  }
  {
    const Vector eta = design * beta;
    for (Eigen::Index i = 0; i < n; ++i) prob[i] = sigmoid(eta[i]);
    grad = design.transpose() * (prob - yv) * inv_n;
    grad.tail(p) += opt.l2 * beta.tail(p);
    fit.grad_norm = grad.cwiseAbs().maxCoeff();
    fit.converged = fit.grad_norm < opt.grad_tol;
    // Separation: every row fitted almost exactly, or probabilities pinned
    // at 0/1 by diverging coefficients. The maximum likelihood estimate does
    // not exist, so the fit is not reported as converged.
    const double worst_resid = (prob - yv).cwiseAbs().maxCoeff();
    const double extreme = (prob.array() * (1.0 - prob.array())).minCoeff();
    const double biggest = p > 0 ? beta.tail(p).cwiseAbs().maxCoeff() : 0.0;
    fit.separated = opt.l2 == 0.0 && p > 0 && (worst_resid < 1e-6 || (extreme < 1e-10 && biggest > 30.0));
    if (fit.separated) fit.converged = false;
  }
  fit.intercept = beta[0];
  fit.coef = beta.tail(p);

  // Covariance of the estimates from the information matrix (sum scale).
  {
    const Vector eta = design * beta;
    for (Eigen::Index i = 0; i < n; ++i) prob[i] = sigmoid(eta[i]);
    const Vector w = (prob.array() * (1.0 - prob.array())).matrix();
    Matrix info = design.transpose() * w.asDiagonal() * design;
    info.diagonal().tail(p).array() += opt.l2 * static_cast<double>(n);
    Eigen::FullPivLU<Matrix> lu(info);
    if (lu.isInvertible()) fit.covariance = lu.inverse();
  }
  return fit;
}

inline Vector logistic_predict(const LogisticFit& fit, const Matrix& x) {
  Vector eta = (x * fit.coef).array() + fit.intercept;
  for (Eigen::Index i = 0; i < eta.size(); ++i) eta[i] = sigmoid(eta[i]);
  return eta;
}

}  // namespace fsbench

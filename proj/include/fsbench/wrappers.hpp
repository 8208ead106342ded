#pragma once

#include "fsbench/classifiers.hpp"
#include "fsbench/information.hpp"
#include "fsbench/metrics.hpp"
#include "fsbench/selection.hpp"

#include <cmath>

namespace fsbench {

/// L2 logistic regression (C = 1), the usual RFE base.
inline ClassifierSpec default_rfe_base() { return ClassifierSpec{ClassifierKind::logistic, {{"C", 1.0}}}; }

/// Recursive feature elimination down to k features. Each round refits
/// `base` on the survivors and drops the ceil(drop_fraction * current)
/// least important (lowest index first among equal importances), never
/// going below k.
inline SelectionResult rfe_select(const Matrix& x, const Labels& y, const ClassifierSpec& base, std::size_t k,
                                  double drop_fraction = 0.1, std::uint64_t seed = 0) {
  if (k < 1) throw std::invalid_argument("rfe_select: k must be >= 1");
  if (!(drop_fraction > 0.0 && drop_fraction < 1.0)) throw std::invalid_argument("rfe_select: drop_fraction must lie in (0, 1)");
  const std::size_t p = static_cast<std::size_t>(x.cols());
  SelectionResult res;
  res.method = "rfe";
  res.mode = SelectionMode::fixed_k;
  if (k > p) {
    res.warnings.push_back("requested k exceeds feature count; selecting all");
    k = p;
  }
  IndexList alive = iota_indices(p);
  std::vector<double> dropped_per_round;
  int round = 0;
  while (alive.size() > k) {
    const auto model = fit(base, select_columns(x, alive), y, derive_seed(seed, static_cast<std::uint64_t>(round)));
    if (!model.importances()) throw ConfigError("rfe_select: classifier '" + base.name() + "' exposes no importances");
    const auto& imp = *model.importances();
    const auto cur = alive.size();
    const std::size_t drop =
        std::min(cur - k, std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(drop_fraction * static_cast<double>(cur) - 1e-9))));
    IndexList order = iota_indices(cur);
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return imp[a] < imp[b]; });
    std::vector<bool> gone(cur, false);
    for (std::size_t t = 0; t < drop; ++t) gone[order[t]] = true;
    IndexList next;
    for (std::size_t c = 0; c < cur; ++c)
      if (!gone[c]) next.push_back(alive[c]);
    alive = std::move(next);
    dropped_per_round.push_back(static_cast<double>(drop));
    ++round;
  }
  res.selected = alive;
  res.diagnostics["dropped_per_round"] = dropped_per_round;
  return res;
}

/// Mean held-out AUC of `base` on the given columns over stratified folds.
inline double cv_auc(const Matrix& x, const Labels& y, const ClassifierSpec& base, const std::vector<int>& fold_of,
                     int folds, std::uint64_t seed = 0) {
  std::vector<double> aucs;
  for (int f = 0; f < folds; ++f) {
    IndexList train, test;
    for (Index i = 0; i < y.size(); ++i) (fold_of[i] == f ? test : train).push_back(i);
    const Labels ytr = select_labels(y, train), yte = select_labels(y, test);
    const auto model = fit(base, select_rows(x, train), ytr, derive_seed(seed, static_cast<std::uint64_t>(f)));
    aucs.push_back(auc_score(std::span<const double>(model.predict_proba(select_rows(x, test))), yte));
  }
  return mean_of(aucs);
}

/// Greedy forward selection by cross-validated AUC. Adds the best candidate
/// (lowest index on ties) up to k_max features, then returns the prefix with
/// the highest recorded cv AUC (smaller size on ties).
inline SelectionResult forward_select(const Matrix& x, const Labels& y, const ClassifierSpec& base, std::size_t k_max,
                                      int folds = 5, std::uint64_t seed = 0) {
  if (k_max < 1) throw std::invalid_argument("forward_select: k_max must be >= 1");
  require_two_classes(y, "forward_select");
  const std::size_t p = static_cast<std::size_t>(x.cols());
  SelectionResult res;
  res.method = "forward";
  res.mode = SelectionMode::thresholded;
  if (k_max > p) {
    res.warnings.push_back("k_max exceeds feature count; clamped");
    k_max = p;
  }
  const auto fold_of = stratified_folds(y, folds, seed);
  IndexList chosen;
  std::vector<bool> used(p, false);
  std::vector<double> trace;
  for (std::size_t step = 0; step < k_max; ++step) {
    double best = -1.0;
    Index best_j = p;
    for (Index j = 0; j < p; ++j) {
      if (used[j]) continue;
      IndexList cols = chosen;
      cols.push_back(j);
      const double a = cv_auc(select_columns(x, cols), y, base, fold_of, folds, seed);
      if (a > best + kGreedyTieTol) {
        best = a;
        best_j = j;
      }
    }
    chosen.push_back(best_j);
    used[best_j] = true;
    trace.push_back(best);
  }
  std::size_t best_len = 1;
  for (std::size_t s = 1; s < trace.size(); ++s)
    if (trace[s] > trace[best_len - 1]) best_len = s + 1;
  res.selected.assign(chosen.begin(), chosen.begin() + static_cast<std::ptrdiff_t>(best_len));
  res.diagnostics["cv_auc"] = trace;
  res.diagnostics["order"] = std::vector<double>(chosen.begin(), chosen.end());
  return res;
}

}  // namespace fsbench

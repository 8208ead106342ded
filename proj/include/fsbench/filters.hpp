#pragma once

#include "fsbench/common.hpp"
#include "fsbench/information.hpp"
#include "fsbench/logistic.hpp"
#include "fsbench/selection.hpp"
#include "fsbench/stats.hpp"

namespace fsbench {

enum class StatScore { t_score, fisher, gini };

inline const char* to_string(StatScore s) {
  switch (s) {
    case StatScore::t_score: return "t_score";
    case StatScore::fisher: return "fisher";
    case StatScore::gini: return "gini";
  }
  return "?";
}

namespace detail {

inline double fisher_score(const Eigen::Ref<const Vector>& x, const Labels& y) {
  const auto m = stats::class_moments(x, y);
  const double n = m.n0 + m.n1;
  const double mu = (m.n0 * m.mean0 + m.n1 * m.mean1) / n;
  const double between = m.n0 * (m.mean0 - mu) * (m.mean0 - mu) + m.n1 * (m.mean1 - mu) * (m.mean1 - mu);
  // sum_c n_c * sigma_c^2 with population class variances
  const double within = m.ss0 + m.ss1;
  if (!(within > 0.0)) return between > 0.0 ? 1e12 : 0.0;
  return between / within;
}

// Smallest size-weighted Gini impurity over all splits between distinct
// consecutive values. A constant column returns the parent impurity.
inline double min_gini_impurity(const Eigen::Ref<const Vector>& x, const Labels& y) {
  const std::size_t n = y.size();
  IndexList order = iota_indices(n);
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return x[static_cast<Eigen::Index>(a)] < x[static_cast<Eigen::Index>(b)];
  });
  const double total_pos = static_cast<double>(count_positive(y));
  const double nn = static_cast<double>(n);
  auto gini = [](double pos, double cnt) {
    if (cnt <= 0) return 0.0;
    const double q = pos / cnt;
    return 1.0 - q * q - (1.0 - q) * (1.0 - q);
  };
  double best = gini(total_pos, nn);
  double left_pos = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    left_pos += y[order[i]];
    if (x[static_cast<Eigen::Index>(order[i])] == x[static_cast<Eigen::Index>(order[i + 1])]) continue;
    const double nl = static_cast<double>(i + 1), nr = nn - nl;
    const double w = (nl * gini(left_pos, nl) + nr * gini(total_pos - left_pos, nr)) / nn;
    best = std::min(best, w);
  }
  return best;
}

}  // namespace detail

/// Univariate class-separation scores; every method returns higher-is-better.
///   t_score  |Welch t|
///   fisher   sum_c n_c (mu_c - mu)^2 / sum_c n_c sigma_c^2
///   gini     minus the minimum weighted Gini impurity over all splits
inline FeatureScores score_statistical(const Matrix& x, const Labels& y, StatScore method) {
  require_two_classes(y, "score_statistical");
  if (method != StatScore::gini) {
    const auto pos = count_positive(y);
    if (pos < 2 || y.size() - pos < 2) throw DataError("score_statistical: each class needs at least 2 rows");
  }
  FeatureScores fs;
  fs.method = to_string(method);
  fs.scores.resize(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    double s = 0.0;
    switch (method) {
      case StatScore::t_score: s = std::abs(stats::welch_t_test(x.col(j), y).t); break;
      case StatScore::fisher: s = detail::fisher_score(x.col(j), y); break;
      case StatScore::gini: s = -detail::min_gini_impurity(x.col(j), y); break;
    }
    fs.scores[static_cast<std::size_t>(j)] = s;
  }
  return fs;
}

/// ReliefF weights for a binary outcome.
///
/// For each sampled row, the `neighbors` nearest rows of the same class
/// (hits) and of the other class (misses) are found by Euclidean distance,
/// ties to the lower row index. Each feature loses its range-normalised
/// difference to the hits and gains its difference to the misses, averaged
/// over rounds and neighbours. With sample_rounds == n the rows are visited
/// in order and the result is deterministic.
inline FeatureScores relieff_score(const Matrix& x, const Labels& y, std::size_t neighbors = 5,
                                   std::size_t sample_rounds = 0, std::uint64_t seed = 0) {
  require_two_classes(y, "relieff_score");
  const std::size_t n = y.size();
  const std::size_t p = static_cast<std::size_t>(x.cols());
  const std::size_t pos = count_positive(y);
  if (std::min(pos, n - pos) < neighbors + 1)
    throw DataError("relieff_score: each class needs at least neighbors + 1 rows");
  if (sample_rounds == 0) sample_rounds = n;

  IndexList rounds;
  if (sample_rounds >= n) {
    rounds = iota_indices(n);
  } else {
    Rng rng(seed);
    for (std::size_t r = 0; r < sample_rounds; ++r) rounds.push_back(static_cast<Index>(rng.below(n)));
  }

  Vector range(static_cast<Eigen::Index>(p));
  for (std::size_t f = 0; f < p; ++f) {
    const auto c = x.col(static_cast<Eigen::Index>(f));
    range[static_cast<Eigen::Index>(f)] = c.maxCoeff() - c.minCoeff();
  }
  Vector weights = Vector::Zero(static_cast<Eigen::Index>(p));
  std::vector<double> dist(n);
  IndexList order;
  for (Index i : rounds) {
    const auto ii = static_cast<Eigen::Index>(i);
    for (std::size_t r = 0; r < n; ++r) dist[r] = (x.row(static_cast<Eigen::Index>(r)) - x.row(ii)).squaredNorm();
    order = iota_indices(n);
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return dist[a] < dist[b]; });
    std::size_t hits = 0, misses = 0;
    for (Index r : order) {
      if (r == i) continue;
      const bool same = y[r] == y[i];
      if (same && hits == neighbors) continue;
      if (!same && misses == neighbors) continue;
      const double sign = same ? -1.0 : 1.0;
      (same ? hits : misses) += 1;
      for (std::size_t f = 0; f < p; ++f) {
        const auto ff = static_cast<Eigen::Index>(f);
        if (range[ff] > 0) weights[ff] += sign * std::abs(x(static_cast<Eigen::Index>(r), ff) - x(ii, ff)) / range[ff];
      }
      if (hits == neighbors && misses == neighbors) break;
    }
  }
  weights /= static_cast<double>(rounds.size() * neighbors);
  FeatureScores fs;
  fs.method = "relieff";
  fs.scores.assign(weights.data(), weights.data() + weights.size());
  return fs;
}

// Guard added to the mean redundancy before dividing.
inline constexpr double kMrmrEps = 1e-12;

/// mRMR with ANOVA-F relevance and mean |Pearson r| redundancy; candidates
/// are ranked by F / (redundancy + 1e-12).
inline SelectionResult mrmr_select(const Matrix& x, const Labels& y, std::size_t k) {
  require_two_classes(y, "mrmr_select");
  if (k < 1) throw std::invalid_argument("mrmr_select: k must be >= 1");
  const std::size_t p = static_cast<std::size_t>(x.cols());
  SelectionResult res;
  res.method = "mrmr";
  res.mode = SelectionMode::fixed_k;
  if (k > p) {
    res.warnings.push_back("requested k exceeds feature count; selecting all");
    k = p;
  }
  std::vector<double> f_value(p), red_sum(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) f_value[j] = stats::anova_f(x.col(static_cast<Eigen::Index>(j)), y);
  std::vector<bool> chosen(p, false);
  auto argmax = [&](auto&& score_of) {
    std::size_t best = p;
    double best_s = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      if (chosen[j]) continue;
      const double s = score_of(j);
      if (best == p || s > best_s + kGreedyTieTol * std::max(1.0, std::abs(best_s))) {
        best = j;
        best_s = s;
      }
    }
    return best;
  };
  std::size_t last = argmax([&](std::size_t j) { return f_value[j]; });
  chosen[last] = true;
  res.selected.push_back(last);
  while (res.selected.size() < k) {
    for (std::size_t j = 0; j < p; ++j)
      if (!chosen[j])
        red_sum[j] += std::abs(stats::pearson(x.col(static_cast<Eigen::Index>(j)), x.col(static_cast<Eigen::Index>(last))));
    const double m = static_cast<double>(res.selected.size());
    last = argmax([&](std::size_t j) { return f_value[j] / (red_sum[j] / m + kMrmrEps); });
    chosen[last] = true;
    res.selected.push_back(last);
  }
  res.diagnostics["f_value"] = f_value;
  return res;
}

/// Average-linkage agglomerative clustering of features on 1 - |Spearman rho|,
/// stopped at `k` clusters. Labels are numbered by each cluster's smallest
/// member, so equal partitions give equal label vectors.
inline std::vector<int> hcluster_assign(const Matrix& x, std::size_t k) {
  const std::size_t p = static_cast<std::size_t>(x.cols());
  if (k < 1 || k > p) throw std::invalid_argument("hcluster: k must lie in [1, p]");
  std::vector<Vector> ranks;
  ranks.reserve(p);
  for (std::size_t j = 0; j < p; ++j) ranks.push_back(stats::average_ranks(x.col(static_cast<Eigen::Index>(j))));
  Matrix d(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  for (std::size_t a = 0; a < p; ++a) {
    d(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a)) = 0.0;
    for (std::size_t b = a + 1; b < p; ++b) {
      const double v = 1.0 - std::abs(stats::pearson(ranks[a], ranks[b]));
      d(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = v;
      d(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = v;
    }
  }
  std::vector<IndexList> members(p);
  for (std::size_t j = 0; j < p; ++j) members[j] = {j};
  std::vector<bool> alive(p, true);
  std::size_t clusters = p;
  while (clusters > k) {
    std::size_t ba = p, bb = p;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < p; ++a) {
      if (!alive[a]) continue;
      for (std::size_t b = a + 1; b < p; ++b) {
        if (!alive[b]) continue;
        if (d(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) < best) {
          best = d(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
          ba = a;
          bb = b;
        }
      }
    }
    // Lance-Williams update for average linkage; cluster bb folds into ba.
    const double na = static_cast<double>(members[ba].size()), nb = static_cast<double>(members[bb].size());
    for (std::size_t c = 0; c < p; ++c) {
      if (!alive[c] || c == ba || c == bb) continue;
      const auto ic = static_cast<Eigen::Index>(c);
      const double v = (na * d(static_cast<Eigen::Index>(ba), ic) + nb * d(static_cast<Eigen::Index>(bb), ic)) / (na + nb);
      d(static_cast<Eigen::Index>(ba), ic) = v;
      d(ic, static_cast<Eigen::Index>(ba)) = v;
    }
    members[ba].insert(members[ba].end(), members[bb].begin(), members[bb].end());
    members[bb].clear();
    alive[bb] = false;
    --clusters;
  }
  std::vector<int> label(p, -1);
  int next = 0;
  for (std::size_t j = 0; j < p; ++j) {
    if (label[j] >= 0) continue;
    for (std::size_t c = 0; c < p; ++c) {
      if (!alive[c]) continue;
      if (std::find(members[c].begin(), members[c].end(), j) != members[c].end()) {
        for (Index m : members[c]) label[m] = next;
        break;
      }
    }
    ++next;
  }
  return label;
}

/// One representative per cluster: the member with the largest
/// |point-biserial r| against the outcome (lower index on ties).
inline SelectionResult hcluster_select(const Matrix& x, const Labels& y, std::size_t k) {
  require_two_classes(y, "hcluster_select");
  const auto label = hcluster_assign(x, k);
  const std::size_t p = label.size();
  std::vector<double> pb(p);
  for (std::size_t j = 0; j < p; ++j) pb[j] = std::abs(stats::point_biserial(x.col(static_cast<Eigen::Index>(j)), y));
  std::vector<std::size_t> best(k, p);
  for (std::size_t j = 0; j < p; ++j) {
    auto& b = best[static_cast<std::size_t>(label[j])];
    if (b == p || pb[j] > pb[b]) b = j;
  }
  SelectionResult res;
  res.method = "hcluster";
  res.mode = SelectionMode::fixed_k;
  res.selected.assign(best.begin(), best.end());
  std::sort(res.selected.begin(), res.selected.end());
  res.diagnostics["point_biserial"] = pb;
  res.diagnostics["cluster"] = std::vector<double>(label.begin(), label.end());
  return res;
}

/// Benjamini-Hochberg step-up adjusted p-values, returned in input order.
inline std::vector<double> bh_adjust(std::span<const double> pvalues) {
  for (double v : pvalues)
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("bh_adjust: p-values must lie in [0, 1]");
  const std::size_t m = pvalues.size();
  IndexList order = iota_indices(m);
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return pvalues[a] < pvalues[b]; });
  std::vector<double> q(m);
  double running = 1.0;
  for (std::size_t r = m; r-- > 0;) {
    const double v = pvalues[order[r]] * static_cast<double>(m) / static_cast<double>(r + 1);
    running = std::min(running, v);
    q[order[r]] = running;
  }
  return q;
}

/// Union of BH-significant features from a Welch t-test and from per-feature
/// logistic regressions adjusted for `covariates`. The two p-value families
/// are adjusted separately over the candidate (non-covariate) features.
inline SelectionResult padjust_union_filter(const Matrix& x, const Labels& y, double alpha = 0.05,
                                            std::span<const Index> covariates = {}) {
  require_two_classes(y, "padjust_union_filter");
  const std::size_t p = static_cast<std::size_t>(x.cols());
  std::vector<bool> is_cov(p, false);
  for (Index c : covariates) {
    if (c >= p) throw std::invalid_argument("padjust_union_filter: covariate index out of range");
    is_cov[c] = true;
  }
  IndexList candidates;
  for (std::size_t j = 0; j < p; ++j)
    if (!is_cov[j]) candidates.push_back(j);

  SelectionResult res;
  res.method = "padjust_union";
  res.mode = SelectionMode::thresholded;
  std::vector<double> p_t, p_lr;
  std::vector<double> lr_flag(p, 0.0);
  Matrix design(x.rows(), static_cast<Eigen::Index>(covariates.size()) + 1);
  for (std::size_t c = 0; c < covariates.size(); ++c)
    design.col(static_cast<Eigen::Index>(c) + 1) = x.col(static_cast<Eigen::Index>(covariates[c]));
  for (Index j : candidates) {
    const auto jj = static_cast<Eigen::Index>(j);
    p_t.push_back(stats::welch_t_test(x.col(jj), y).p);
    design.col(0) = x.col(jj);
    const auto fit = fit_logistic(design, y);
    double pv = 1.0;
    if (fit.converged && !fit.separated && fit.covariance.size() > 0 && fit.covariance(1, 1) > 0.0) {
      pv = stats::normal_two_sided_p(fit.coef[0] / std::sqrt(fit.covariance(1, 1)));
    } else {
      lr_flag[j] = 1.0;
      res.warnings.push_back("logistic fit did not converge for feature " + std::to_string(j) + "; LR p-value set to 1");
    }
    p_lr.push_back(pv);
  }
  const auto q_t = bh_adjust(p_t);
  const auto q_lr = bh_adjust(p_lr);
  std::vector<double> qt_full(p, 1.0), qlr_full(p, 1.0), pt_full(p, 1.0), plr_full(p, 1.0);
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const Index j = candidates[c];
    qt_full[j] = q_t[c];
    qlr_full[j] = q_lr[c];
    pt_full[j] = p_t[c];
    plr_full[j] = p_lr[c];
    if (q_t[c] <= alpha || q_lr[c] <= alpha) res.selected.push_back(j);
  }
  res.diagnostics["q_t"] = qt_full;
  res.diagnostics["q_lr"] = qlr_full;
  res.diagnostics["p_t"] = pt_full;
  res.diagnostics["p_lr"] = plr_full;
  res.diagnostics["lr_nonconverged"] = lr_flag;
  return res;
}

}  // namespace fsbench

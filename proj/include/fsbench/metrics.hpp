#pragma once

#include "fsbench/common.hpp"

#include <array>
#include <map>
#include <string>

namespace fsbench {

enum class Metric { auc, accuracy, sensitivity, specificity, ppv, npv };

inline constexpr std::array<Metric, 6> kAllMetrics{Metric::auc,         Metric::accuracy, Metric::sensitivity,
                                                   Metric::specificity, Metric::ppv,      Metric::npv};

inline const char* to_string(Metric m) {
  switch (m) {
    case Metric::auc: return "auc";
    case Metric::accuracy: return "accuracy";
    case Metric::sensitivity: return "sensitivity";
    case Metric::specificity: return "specificity";
    case Metric::ppv: return "ppv";
    case Metric::npv: return "npv";
  }
  return "?";
}

// PPV/NPV are undefined when no row is predicted positive/negative; they are
// then empty and left out of any aggregation.
struct BinaryMetrics {
  double auc = 0.5;
  double accuracy = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  std::optional<double> ppv;
  std::optional<double> npv;

  std::optional<double> get(Metric m) const {
    switch (m) {
      case Metric::auc: return auc;
      case Metric::accuracy: return accuracy;
      case Metric::sensitivity: return sensitivity;
      case Metric::specificity: return specificity;
      case Metric::ppv: return ppv;
      case Metric::npv: return npv;
    }
    return std::nullopt;
  }
};

/// Mann-Whitney AUC; tied scores across classes count one half.
inline double auc_score(std::span<const double> scores, const Labels& labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("auc_score: length mismatch");
  const std::size_t n = scores.size();
  IndexList order = iota_indices(n);
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return scores[a] < scores[b]; });
  double rank_sum_pos = 0.0;
  double n_pos = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t k = i;
    while (k + 1 < n && scores[order[k + 1]] == scores[order[i]]) ++k;
    const double avg = 0.5 * static_cast<double>(i + k) + 1.0;
    for (std::size_t t = i; t <= k; ++t)
      if (labels[order[t]] == 1) {
        rank_sum_pos += avg;
        n_pos += 1.0;
      }
    i = k + 1;
  }
  const double n_neg = static_cast<double>(n) - n_pos;
  if (n_pos == 0.0 || n_neg == 0.0) throw DataError("auc_score: single-class labels");
  return (rank_sum_pos - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

inline double auc_score(const Vector& scores, const Labels& labels) {
  return auc_score(std::span<const double>(scores.data(), static_cast<std::size_t>(scores.size())), labels);
}

/// AUC plus confusion metrics at `threshold` (score >= threshold predicts 1).
inline BinaryMetrics binary_metrics(std::span<const double> scores, const Labels& labels, double threshold = 0.5) {
  for (double s : scores)
    if (!std::isfinite(s)) throw std::invalid_argument("binary_metrics: non-finite score");
  BinaryMetrics m;
  m.auc = auc_score(scores, labels);
  double tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] >= threshold;
    if (labels[i] == 1)
      (pred ? tp : fn) += 1;
    else
      (pred ? fp : tn) += 1;
  }
  m.accuracy = (tp + tn) / static_cast<double>(scores.size());
  m.sensitivity = tp / (tp + fn);
  m.specificity = tn / (tn + fp);
  if (tp + fp > 0) m.ppv = tp / (tp + fp);
  if (tn + fn > 0) m.npv = tn / (tn + fn);
  return m;
}

inline BinaryMetrics binary_metrics(const Vector& scores, const Labels& labels, double threshold = 0.5) {
  return binary_metrics(std::span<const double>(scores.data(), static_cast<std::size_t>(scores.size())), labels,
                        threshold);
}

// ---------------------------------------------------------------------------
// Optimism correction

inline constexpr double kWeightOOB = 0.632;
inline constexpr double kWeightApparent = 0.368;

/// theta_app - mean_b(theta_boot - theta_orig).
inline double harrell_correct(double theta_app, std::span<const double> theta_boot, std::span<const double> theta_orig) {
  if (theta_boot.size() != theta_orig.size() || theta_boot.empty())
    throw std::invalid_argument("harrell_correct: need equal, non-empty score sequences");
  double o = 0.0;
  for (std::size_t b = 0; b < theta_boot.size(); ++b) o += theta_boot[b] - theta_orig[b];
  o /= static_cast<double>(theta_boot.size());
  return theta_app - o;
}

inline double dot632_from_out(double theta_app, double theta_out) {
  return kWeightApparent * theta_app + kWeightOOB * theta_out;
}

/// 0.368 * theta_app + 0.632 * mean(theta_oob).
inline double dot632_correct(double theta_app, std::span<const double> theta_oob) {
  if (theta_oob.empty()) throw std::invalid_argument("dot632_correct: no out-of-bag scores");
  return dot632_from_out(theta_app, mean_of(theta_oob));
}

struct Dot632Plus {
  double corrected = 0.0;
  double R = 0.0;
  double w = kWeightOOB;
};

/// .632+ estimate. R = (app - out) / (app - gamma), set to 0 when app <= out
/// or app <= gamma and clamped to [0, 1]; w = 0.632 / (1 - 0.368 R).
inline Dot632Plus dot632plus_correct(double theta_app, double theta_out, double gamma) {
  Dot632Plus r;
  if (theta_app > theta_out && theta_app > gamma) r.R = std::clamp((theta_app - theta_out) / (theta_app - gamma), 0.0, 1.0);
  if (r.R == 0.0) {
    r.corrected = dot632_from_out(theta_app, theta_out);
    return r;
  }
  r.w = kWeightOOB / (1.0 - kWeightApparent * r.R);
  r.corrected = (1.0 - r.w) * theta_app + r.w * theta_out;
  if (r.R == 1.0) r.corrected = theta_out;  // w == 1 up to rounding
  return r;
}

inline std::optional<double> metric_value(std::span<const double> scores, const Labels& labels, Metric metric,
                                          double threshold = 0.5) {
  return binary_metrics(scores, labels, threshold).get(metric);
}

/// Permutation estimate of the no-information score for any metric.
inline std::optional<double> permutation_no_information(std::span<const double> scores, const Labels& labels,
                                                        Metric metric, double threshold = 0.5, std::uint64_t seed = 0,
                                                        int permutations = 200) {
  Rng rng(seed);
  Labels perm = labels;
  double sum = 0.0;
  int used = 0;
  for (int t = 0; t < permutations; ++t) {
    rng.shuffle(perm);
    if (auto v = metric_value(scores, perm, metric, threshold)) {
      sum += *v;
      ++used;
    }
  }
  if (used == 0) return std::nullopt;
  return sum / used;
}

/// No-information score gamma: the expected metric when outcome and
/// predictions are unrelated. AUC is 0.5 analytically; accuracy uses the
/// agreement formula q p + (1 - q)(1 - p) with q the predicted-positive rate
/// and p the prevalence; other metrics average over seeded label permutations.
inline std::optional<double> no_information_score(std::span<const double> scores, const Labels& labels, Metric metric,
                                                  double threshold = 0.5, std::uint64_t seed = 0,
                                                  int permutations = 200) {
  if (metric == Metric::auc) return 0.5;
  if (metric == Metric::accuracy) {
    double q = 0.0;
    for (double s : scores) q += s >= threshold ? 1.0 : 0.0;
    q /= static_cast<double>(scores.size());
    const double prev = static_cast<double>(count_positive(labels)) / static_cast<double>(labels.size());
    return q * prev + (1.0 - q) * (1.0 - prev);
  }
  return permutation_no_information(scores, labels, metric, threshold, seed, permutations);
}

enum class OcMethod { harrell, dot632, dot632plus };

inline const char* to_string(OcMethod m) {
  switch (m) {
    case OcMethod::harrell: return "harrell";
    case OcMethod::dot632: return "dot632";
    case OcMethod::dot632plus: return "dot632plus";
  }
  return "?";
}

/// Components of one optimism-corrected estimate. Missing bootstrap values
/// (undefined metric on that resample) are dropped before averaging.
struct PerformanceEstimate {
  double theta_app = 0.0;
  std::vector<double> theta_boot;
  std::vector<double> theta_orig;
  std::vector<double> theta_oob;
  double theta_out = 0.0;
  double optimism = 0.0;
  double gamma = 0.5;
  double R = 0.0;
  double w = kWeightOOB;
  std::map<std::string, double> corrected;  // harrell, dot632, dot632plus
};

inline std::optional<PerformanceEstimate> estimate_performance(std::optional<double> theta_app,
                                                               const std::vector<std::optional<double>>& boot,
                                                               const std::vector<std::optional<double>>& orig,
                                                               const std::vector<std::optional<double>>& oob,
                                                               std::optional<double> gamma) {
  if (!theta_app || !gamma) return std::nullopt;
  PerformanceEstimate e;
  e.theta_app = *theta_app;
  e.gamma = *gamma;
  for (std::size_t b = 0; b < boot.size(); ++b)
    if (boot[b] && orig[b]) {
      e.theta_boot.push_back(*boot[b]);
      e.theta_orig.push_back(*orig[b]);
    }
  for (const auto& v : oob)
    if (v) e.theta_oob.push_back(*v);
  if (e.theta_boot.empty() || e.theta_oob.empty()) return std::nullopt;
  e.theta_out = mean_of(e.theta_oob);
  e.corrected["harrell"] = harrell_correct(e.theta_app, e.theta_boot, e.theta_orig);
  e.optimism = e.theta_app - e.corrected["harrell"];
  e.corrected["dot632"] = dot632_correct(e.theta_app, e.theta_oob);
  const auto plus = dot632plus_correct(e.theta_app, e.theta_out, e.gamma);
  e.R = plus.R;
  e.w = plus.w;
  e.corrected["dot632plus"] = plus.corrected;
  return e;
}

// ---------------------------------------------------------------------------
// Selection stability and frequencies

struct SelectionEnsemble {
  std::size_t B = 0;
  std::size_t p = 0;
  std::vector<IndexList> sets;
  std::vector<double> frequencies;  // p-hat_f
  std::vector<double> variances;    // s_f^2 = B/(B-1) p-hat (1 - p-hat)
  double mean_size = 0.0;           // k-bar
  std::optional<double> stability;  // empty when k-bar is 0 or p
};

inline std::vector<double> selection_frequencies(const std::vector<IndexList>& sets, std::size_t p) {
  std::vector<double> f(p, 0.0);
  for (const auto& s : sets)
    for (Index j : s) {
      if (j >= p) throw std::invalid_argument("selection_frequencies: feature index out of range");
      f[j] += 1.0;
    }
  if (!sets.empty())
    for (auto& v : f) v /= static_cast<double>(sets.size());
  return f;
}

/// Nogueira's frequency-based stability
///   S = 1 - mean_f(s_f^2) / ((k/p)(1 - k/p)).
inline SelectionEnsemble make_ensemble(std::vector<IndexList> sets, std::size_t p) {
  if (sets.size() < 2) throw std::invalid_argument("stability needs at least 2 selections");
  SelectionEnsemble e;
  e.B = sets.size();
  e.p = p;
  e.frequencies = selection_frequencies(sets, p);
  const double B = static_cast<double>(e.B);
  e.variances.resize(p);
  double mean_var = 0.0;
  for (std::size_t f = 0; f < p; ++f) {
    e.variances[f] = B / (B - 1.0) * e.frequencies[f] * (1.0 - e.frequencies[f]);
    mean_var += e.variances[f];
  }
  mean_var /= static_cast<double>(p);
  double total = 0.0;
  for (const auto& s : sets) total += static_cast<double>(s.size());
  e.mean_size = total / B;
  const double kp = e.mean_size / static_cast<double>(p);
  if (e.mean_size > 0.0 && e.mean_size < static_cast<double>(p)) e.stability = 1.0 - mean_var / (kp * (1.0 - kp));
  e.sets = std::move(sets);
  return e;
}

inline std::optional<double> nogueira_stability(const std::vector<IndexList>& sets, std::size_t p) {
  return make_ensemble(sets, p).stability;
}

/// For each feature, the number of methods whose selection frequency is at
/// least `threshold`.
inline std::vector<int> high_confidence_counts(const std::map<std::string, std::vector<double>>& freq_by_method,
                                               std::size_t p, double threshold = 0.5) {
  std::vector<int> counts(p, 0);
  for (const auto& [method, freq] : freq_by_method)
    for (std::size_t f = 0; f < p && f < freq.size(); ++f)
      if (freq[f] >= threshold) ++counts[f];
  return counts;
}

// ---------------------------------------------------------------------------
// Recovery against a known truth set

struct RecoveryMetrics {
  double tpr = 0, fpr = 0, fdr = 0, for_ = 0;
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

inline RecoveryMetrics recovery_metrics(std::span<const Index> selected, std::span<const Index> truth, std::size_t p) {
  std::vector<char> sel(p, 0), tru(p, 0);
  for (Index j : selected) {
    if (j >= p) throw std::invalid_argument("recovery_metrics: selected index out of range");
    sel[j] = 1;
  }
  for (Index j : truth) {
    if (j >= p) throw std::invalid_argument("recovery_metrics: truth index out of range");
    tru[j] = 1;
  }
  RecoveryMetrics r;
  for (std::size_t j = 0; j < p; ++j) {
    if (sel[j] && tru[j]) ++r.tp;
    else if (sel[j]) ++r.fp;
    else if (tru[j]) ++r.fn;
    else ++r.tn;
  }
  auto ratio = [](double a, double b) { return b > 0 ? a / b : 0.0; };
  r.tpr = ratio(static_cast<double>(r.tp), static_cast<double>(r.tp + r.fn));
  r.fpr = ratio(static_cast<double>(r.fp), static_cast<double>(r.fp + r.tn));
  r.fdr = static_cast<double>(r.fp) / static_cast<double>(std::max<std::size_t>(r.tp + r.fp, 1));
  r.for_ = static_cast<double>(r.fn) / static_cast<double>(std::max<std::size_t>(r.fn + r.tn, 1));
  return r;
}

/// Fraction of resample models whose class call (score >= threshold) differs
/// from the full-data model, per row.
inline std::vector<double> instability_index(std::span<const double> full_scores,
                                             const std::vector<std::vector<double>>& resample_scores,
                                             double threshold = 0.5) {
  std::vector<double> out(full_scores.size(), 0.0);
  if (resample_scores.empty()) return out;
  for (const auto& rs : resample_scores) {
    if (rs.size() != full_scores.size()) throw std::invalid_argument("instability_index: length mismatch");
    for (std::size_t i = 0; i < rs.size(); ++i)
      if ((rs[i] >= threshold) != (full_scores[i] >= threshold)) out[i] += 1.0;
  }
  for (auto& v : out) v /= static_cast<double>(resample_scores.size());
  return out;
}

}  // namespace fsbench

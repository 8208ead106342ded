#pragma once

#include "fsbench/filters.hpp"
#include "fsbench/logistic.hpp"
#include "fsbench/metrics.hpp"
#include "fsbench/parallel.hpp"
#include "fsbench/selection.hpp"

#include <nlohmann/json.hpp>

#include <functional>

namespace fsbench {

inline constexpr double kTruthCoefCap = 20.0;
inline constexpr int kMaxLabelRedraws = 100;

/// Known sparse logistic truth model used to generate semi-synthetic labels.
struct SimulationSpec {
  IndexList truth;
  std::vector<double> beta;  // aligned with truth
  double intercept = 0.0;
  double noise_sd = 1.0;
  std::size_t replicates = 36;
  std::uint64_t seed = 0;
  bool separated = false;  // truth fit hit separation or the coefficient cap

  void validate(std::size_t p) const {
    if (truth.empty()) throw ConfigError("simulation: truth set must not be empty");
    if (beta.size() != truth.size()) throw ConfigError("simulation: beta length differs from truth set size");
    for (Index j : truth)
      if (j >= p) throw ConfigError("simulation: truth index " + std::to_string(j) + " out of range");
    if (!(noise_sd >= 0.0)) throw ConfigError("simulation: noise_sd must be >= 0");
  }

  /// Replicate r in [1, replicates] draws noise from child_seed(seed, r).
  std::uint64_t replicate_seed(std::size_t r) const { return child_seed(seed, r); }
};

struct TruthModel {
  std::vector<double> beta;
  double intercept = 0.0;
  bool separated = false;
  bool capped = false;
};

/// Unpenalised logistic fit on the truth columns (the same routine the
/// logistic classifier uses). Coefficients are capped at |beta| <= 20.
inline TruthModel fit_truth_model(const Matrix& x, const Labels& y, std::span<const Index> truth) {
  if (truth.empty()) throw ConfigError("fit_truth_model: empty truth set");
  require_two_classes(y, "fit_truth_model");
  const Matrix xs = select_columns(x, truth);
  for (Eigen::Index c = 0; c < xs.cols(); ++c)
    if (xs.col(c).maxCoeff() - xs.col(c).minCoeff() <= 0.0)
      throw DataError("fit_truth_model: truth feature " + std::to_string(truth[static_cast<std::size_t>(c)]) + " is constant");
  const auto fit = fit_logistic(xs, y);
  TruthModel tm;
  tm.separated = fit.separated;
  tm.intercept = std::clamp(fit.intercept, -kTruthCoefCap, kTruthCoefCap);
  tm.capped = tm.intercept != fit.intercept;
  for (Eigen::Index c = 0; c < fit.coef.size(); ++c) {
    const double b = std::clamp(fit.coef[c], -kTruthCoefCap, kTruthCoefCap);
    tm.capped = tm.capped || b != fit.coef[c];
    tm.beta.push_back(b);
  }
  return tm;
}

/// Builds a simulation spec whose coefficients come from fit_truth_model.
inline SimulationSpec make_simulation_spec(const Matrix& x, const Labels& y, IndexList truth, double noise_sd,
                                           std::size_t replicates, std::uint64_t seed) {
  const auto tm = fit_truth_model(x, y, truth);
  SimulationSpec s;
  s.truth = std::move(truth);
  s.beta = tm.beta;
  s.intercept = tm.intercept;
  s.noise_sd = noise_sd;
  s.replicates = replicates;
  s.seed = seed;
  s.separated = tm.separated || tm.capped;
  return s;
}

/// The top-s features by BH-adjusted univariate logistic Wald p-value
/// (ties by raw p-value, then index).
inline IndexList select_truth_by_pvalue(const Matrix& x, const Labels& y, std::size_t s) {
  const std::size_t p = static_cast<std::size_t>(x.cols());
  if (s < 1 || s > p) throw ConfigError("simulation: top-s truth size must lie in [1, p]");
  const auto res = padjust_union_filter(x, y, 1.0);
  const auto& q = res.diagnostics.at("q_lr");
  const auto& praw = res.diagnostics.at("p_lr");
  IndexList order = iota_indices(p);
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    if (q[a] != q[b]) return q[a] < q[b];
    return praw[a] < praw[b];
  });
  order.resize(s);
  std::sort(order.begin(), order.end());
  return order;
}

/// Linear predictor intercept + X_S beta.
inline Vector truth_linear_predictor(const Matrix& x, const SimulationSpec& spec) {
  Vector lp = Vector::Constant(x.rows(), spec.intercept);
  for (std::size_t t = 0; t < spec.truth.size(); ++t) lp += spec.beta[t] * x.col(static_cast<Eigen::Index>(spec.truth[t]));
  return lp;
}

/// Label rule: score = sigmoid(lp + eps) >= 0.5, i.e. lp + eps >= 0.
inline int simulated_label(double lp, double eps) { return lp + eps >= 0.0 ? 1 : 0; }

/// One draw of labels from `rng` without any class-balance check.
inline Labels draw_labels(const Vector& lp, double noise_sd, Rng& rng) {
  Labels y(static_cast<std::size_t>(lp.size()));
  for (Eigen::Index i = 0; i < lp.size(); ++i)
    y[static_cast<std::size_t>(i)] = simulated_label(lp[i], noise_sd > 0.0 ? noise_sd * rng.normal() : 0.0);
  return y;
}

/// Labels of replicate r. Noise is redrawn (same stream) until both classes
/// occur, at most 100 times.
inline Labels simulate_outcome(const Matrix& x, const SimulationSpec& spec, std::size_t replicate) {
  spec.validate(static_cast<std::size_t>(x.cols()));
  const Vector lp = truth_linear_predictor(x, spec);
  Rng rng(spec.replicate_seed(replicate));
  const int attempts = spec.noise_sd > 0.0 ? kMaxLabelRedraws : 1;
  for (int a = 0; a < attempts; ++a) {
    Labels y = draw_labels(lp, spec.noise_sd, rng);
    if (has_both_classes(y)) return y;
  }
  throw DataError("simulate_outcome: replicate " + std::to_string(replicate) + " stayed single-class after " +
                  std::to_string(attempts) + " draws");
}

// ---------------------------------------------------------------------------
// Recovery experiment

/// A feature-selection method as seen by the recovery experiment:
/// (matrix, labels, k, seed) -> selection.
struct RecoveryMethod {
  std::string name;
  bool fixed_size = true;
  std::function<SelectionResult(const Matrix&, const Labels&, std::size_t, std::uint64_t)> run;
};

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
  bool operator==(const MeanSd&) const = default;
};

inline MeanSd mean_sd(std::span<const double> v) {
  if (v.empty()) return {};
  return {mean_of(v), v.size() > 1 ? sd_of(v) : 0.0};
}

struct RecoverySummary {
  MeanSd tpr, fpr, fdr, for_;
  std::size_t replicates = 0;  // successful replicates
  std::size_t failures = 0;
  std::vector<RecoveryMetrics> per_replicate;
};

/// Regenerates labels for each replicate and runs every method on (X, y~).
/// Fixed-size methods get k = |truth|.
inline std::map<std::string, RecoverySummary> run_recovery_experiment(const Matrix& x, const SimulationSpec& spec,
                                                                      const std::vector<RecoveryMethod>& methods,
                                                                      std::size_t workers = 1) {
  const std::size_t p = static_cast<std::size_t>(x.cols());
  spec.validate(p);
  const std::size_t R = spec.replicates, M = methods.size(), s = spec.truth.size();
  std::vector<Labels> labels(R);
  for (std::size_t r = 0; r < R; ++r) labels[r] = simulate_outcome(x, spec, r + 1);

  std::vector<std::optional<RecoveryMetrics>> cell(R * M);
  parallel_for(R * M, workers, [&](std::size_t u) {
    const std::size_t r = u / M, m = u % M;
    const auto seed = derive_seed(spec.replicate_seed(r + 1), hash_tag(methods[m].name));
    std::optional<SelectionResult> sel;
    try {
      sel = methods[m].run(x, labels[r], s, seed);
    } catch (const std::exception&) {
      return;  // counted as a failed replicate for this method
    }
    const auto rm = recovery_metrics(sel->selected, spec.truth, p);
    if (sel->mode == SelectionMode::fixed_k && p > s &&
        rm.fpr > static_cast<double>(sel->k()) / static_cast<double>(p - s) + 1e-12)
      throw std::logic_error("fixed-size selection exceeds its FPR bound");
    cell[u] = rm;
  });

  std::map<std::string, RecoverySummary> out;
  for (std::size_t m = 0; m < M; ++m) {
    RecoverySummary sum;
    std::vector<double> tpr, fpr, fdr, fo;
    for (std::size_t r = 0; r < R; ++r) {
      const auto& c = cell[r * M + m];
      if (!c) {
        ++sum.failures;
        continue;
      }
      sum.per_replicate.push_back(*c);
      tpr.push_back(c->tpr);
      fpr.push_back(c->fpr);
      fdr.push_back(c->fdr);
      fo.push_back(c->for_);
    }
    sum.replicates = tpr.size();
    sum.tpr = mean_sd(tpr);
    sum.fpr = mean_sd(fpr);
    sum.fdr = mean_sd(fdr);
    sum.for_ = mean_sd(fo);
    out[methods[m].name] = std::move(sum);
  }
  return out;
}

/// Audit manifest written beside generated label files.
inline nlohmann::json simulation_manifest(const SimulationSpec& spec) {
  nlohmann::json j;
  j["truth"] = spec.truth;
  j["beta"] = spec.beta;
  j["intercept"] = spec.intercept;
  j["noise_sd"] = spec.noise_sd;
  j["replicates"] = spec.replicates;
  j["seed"] = spec.seed;
  j["separated"] = spec.separated;
  return j;
}

inline SimulationSpec simulation_from_manifest(const nlohmann::json& j) {
  SimulationSpec s;
  s.truth = j.at("truth").get<IndexList>();
  s.beta = j.at("beta").get<std::vector<double>>();
  s.intercept = j.at("intercept").get<double>();
  s.noise_sd = j.at("noise_sd").get<double>();
  s.replicates = j.at("replicates").get<std::size_t>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.separated = j.value("separated", false);
  return s;
}

}  // namespace fsbench

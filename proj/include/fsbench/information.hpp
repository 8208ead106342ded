#pragma once

#include "fsbench/common.hpp"
#include "fsbench/selection.hpp"

#include <map>

namespace fsbench {

// Discrete variable as dense codes 0..levels-1.
struct DiscreteColumn {
  std::vector<int> codes;
  int levels = 0;
};

/// Equal-frequency binning: a value's bin is floor(bins * #{values < v} / n),
/// so tied values always share a bin and the map is monotone.
template <typename Column>
DiscreteColumn discretize_equal_frequency(const Column& x, int bins) {
  if (bins < 1) throw std::invalid_argument("discretize: bins must be >= 1");
  const auto n = static_cast<std::size_t>(x.size());
  std::vector<double> sorted(n);
  for (std::size_t i = 0; i < n; ++i) sorted[i] = x[static_cast<Eigen::Index>(i)];
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> raw(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = x[static_cast<Eigen::Index>(i)];
    const auto below = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), v) - sorted.begin());
    raw[i] = std::min(bins - 1, static_cast<int>((static_cast<std::size_t>(bins) * below) / n));
  }
  // compact to consecutive codes
  std::vector<int> remap(static_cast<std::size_t>(bins), -1);
  DiscreteColumn out;
  out.codes.resize(n);
  std::vector<bool> used(static_cast<std::size_t>(bins), false);
  for (int r : raw) used[static_cast<std::size_t>(r)] = true;
  for (int b = 0; b < bins; ++b)
    if (used[static_cast<std::size_t>(b)]) remap[static_cast<std::size_t>(b)] = out.levels++;
  for (std::size_t i = 0; i < n; ++i) out.codes[i] = remap[static_cast<std::size_t>(raw[i])];
  return out;
}

/// Codes for already-discrete values (each distinct value its own level, in
/// ascending value order).
template <typename Column>
DiscreteColumn encode_levels(const Column& x) {
  std::map<double, int> levels;
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(x.size()); ++i) levels.emplace(x[i], 0);
  int next = 0;
  for (auto& [v, code] : levels) code = next++;
  DiscreteColumn out;
  out.levels = next;
  out.codes.reserve(static_cast<std::size_t>(x.size()));
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(x.size()); ++i) out.codes.push_back(levels.at(x[i]));
  return out;
}

inline DiscreteColumn labels_column(const Labels& y) {
  DiscreteColumn out;
  out.levels = 2;
  out.codes.assign(y.begin(), y.end());
  return out;
}

namespace info {

// Plug-in entropies in nats.
inline double entropy_of_counts(const std::vector<int>& counts, double n) {
  double h = 0.0;
  for (int c : counts)
    if (c > 0) {
      const double q = c / n;
      h -= q * std::log(q);
    }
  return h;
}

inline double entropy(const DiscreteColumn& a) {
  std::vector<int> counts(static_cast<std::size_t>(a.levels), 0);
  for (int c : a.codes) ++counts[static_cast<std::size_t>(c)];
  return entropy_of_counts(counts, static_cast<double>(a.codes.size()));
}

inline double joint_entropy(const DiscreteColumn& a, const DiscreteColumn& b) {
  std::vector<int> counts(static_cast<std::size_t>(a.levels * b.levels), 0);
  for (std::size_t i = 0; i < a.codes.size(); ++i) ++counts[static_cast<std::size_t>(a.codes[i] * b.levels + b.codes[i])];
  return entropy_of_counts(counts, static_cast<double>(a.codes.size()));
}

inline double joint_entropy(const DiscreteColumn& a, const DiscreteColumn& b, const DiscreteColumn& c) {
  std::vector<int> counts(static_cast<std::size_t>(a.levels * b.levels * c.levels), 0);
  for (std::size_t i = 0; i < a.codes.size(); ++i)
    ++counts[static_cast<std::size_t>((a.codes[i] * b.levels + b.codes[i]) * c.levels + c.codes[i])];
  return entropy_of_counts(counts, static_cast<double>(a.codes.size()));
}

inline double mutual_information(const DiscreteColumn& a, const DiscreteColumn& b) {
  return entropy(a) + entropy(b) - joint_entropy(a, b);
}

// I(A;B | C)
inline double conditional_mutual_information(const DiscreteColumn& a, const DiscreteColumn& b, const DiscreteColumn& c) {
  return joint_entropy(a, c) + joint_entropy(b, c) - joint_entropy(a, b, c) - entropy(c);
}

// H(A | B)
inline double conditional_entropy(const DiscreteColumn& a, const DiscreteColumn& b) {
  return joint_entropy(a, b) - entropy(b);
}

}  // namespace info

enum class MiCriterion { cife, cmim, disr, jmi };

inline const char* to_string(MiCriterion c) {
  switch (c) {
    case MiCriterion::cife: return "cife";
    case MiCriterion::cmim: return "cmim";
    case MiCriterion::disr: return "disr";
    case MiCriterion::jmi: return "jmi";
  }
  return "?";
}

// Score differences below this count as ties (resolved to the lower index).
inline constexpr double kGreedyTieTol = 1e-10;

/// Greedy forward selection on discrete features.
///
/// The first pick maximises I(X;Y) for every criterion. Afterwards each
/// candidate X_k is scored against the selected set S:
///   CIFE  I(X_k;Y) - sum I(X_j;X_k) + sum I(X_j;X_k|Y)
///   JMI   same terms with both sums scaled by 1/|S|
///   CMIM  min_j I(X_k;Y|X_j)
///   DISR  sum_j [I(X_k;Y) + I(X_j;Y|X_k)] / [H(X_k) + H(X_k|X_j) + H(Y|X_k) - I(Y;X_j|X_k)]
inline SelectionResult greedy_mi_select(const std::vector<DiscreteColumn>& features, const Labels& y,
                                        MiCriterion criterion, std::size_t k) {
  if (k < 1) throw std::invalid_argument("greedy_mi_select: k must be >= 1");
  const std::size_t p = features.size();
  SelectionResult res;
  res.method = to_string(criterion);
  res.mode = SelectionMode::fixed_k;
  if (k > p) {
    res.warnings.push_back("requested k exceeds feature count; selecting all");
    k = p;
  }
  const DiscreteColumn yc = labels_column(y);
  std::vector<double> relevance(p), h_feature(p), h_y_given(p);
  for (std::size_t f = 0; f < p; ++f) {
    relevance[f] = info::mutual_information(features[f], yc);
    h_feature[f] = info::entropy(features[f]);
    h_y_given[f] = info::conditional_entropy(yc, features[f]);
  }
  std::vector<double> sum_red(p, 0.0), sum_cond(p, 0.0), disr(p, 0.0);
  std::vector<double> cmim(p, std::numeric_limits<double>::infinity());
  std::vector<bool> chosen(p, false);
  std::vector<double> step_scores;

  auto pick = [&](auto&& score_of) {
    std::size_t best = p;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t f = 0; f < p; ++f) {
      if (chosen[f]) continue;
      const double s = score_of(f);
      if (best == p || s > best_score + kGreedyTieTol) {
        best = f;
        best_score = s;
      }
    }
    chosen[best] = true;
    res.selected.push_back(best);
    step_scores.push_back(best_score);
    return best;
  };

  std::size_t last = pick([&](std::size_t f) { return relevance[f]; });
  while (res.selected.size() < k) {
    const DiscreteColumn& xj = features[last];
    for (std::size_t f = 0; f < p; ++f) {
      if (chosen[f]) continue;
      const DiscreteColumn& xk = features[f];
      switch (criterion) {
        case MiCriterion::cife:
        case MiCriterion::jmi:
          sum_red[f] += info::mutual_information(xj, xk);
          sum_cond[f] += info::conditional_mutual_information(xj, xk, yc);
          break;
        case MiCriterion::cmim:
          cmim[f] = std::min(cmim[f], info::conditional_mutual_information(xk, yc, xj));
          break;
        case MiCriterion::disr: {
          const double i_y_j_given_k = info::conditional_mutual_information(yc, xj, xk);
          const double joint_rel = relevance[f] + i_y_j_given_k;
          const double joint_h = h_feature[f] + info::conditional_entropy(xk, xj) + h_y_given[f] - i_y_j_given_k;
          if (joint_h > 0.0) disr[f] += joint_rel / joint_h;
          break;
        }
      }
    }
    const double s = static_cast<double>(res.selected.size());
    last = pick([&](std::size_t f) {
      switch (criterion) {
        case MiCriterion::cife: return relevance[f] - sum_red[f] + sum_cond[f];
        case MiCriterion::jmi: return relevance[f] - sum_red[f] / s + sum_cond[f] / s;
        case MiCriterion::cmim: return cmim[f];
        case MiCriterion::disr: return disr[f];
      }
      return 0.0;
    });
  }
  res.diagnostics["relevance"] = relevance;
  res.diagnostics["step_scores"] = step_scores;
  return res;
}

/// Discretises continuous columns into `bins` equal-frequency bins (columns
/// flagged categorical keep their own codes) and runs the greedy selection.
inline SelectionResult greedy_mi_select(const Matrix& x, const Labels& y, MiCriterion criterion, std::size_t k,
                                        int bins = 5, const std::vector<bool>& categorical = {}) {
  require_two_classes(y, "greedy_mi_select");
  std::vector<DiscreteColumn> cols;
  cols.reserve(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const bool cat = static_cast<std::size_t>(j) < categorical.size() && categorical[static_cast<std::size_t>(j)];
    cols.push_back(cat ? encode_levels(x.col(j)) : discretize_equal_frequency(x.col(j), bins));
  }
  return greedy_mi_select(cols, y, criterion, k);
}

}  // namespace fsbench

#pragma once

#include "fsbench/common.hpp"

#include <boost/math/distributions/students_t.hpp>

namespace fsbench::stats {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Two-sided normal p-value for a Wald statistic.
inline double normal_two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

struct ClassMoments {
  double n0 = 0, n1 = 0;
  double mean0 = 0, mean1 = 0;
  double ss0 = 0, ss1 = 0;  // within-class sums of squared deviations
};

template <typename Column>
ClassMoments class_moments(const Column& x, const Labels& y) {
  ClassMoments m;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] == 1) {
      m.n1 += 1;
      m.mean1 += x[static_cast<Eigen::Index>(i)];
    } else {
      m.n0 += 1;
      m.mean0 += x[static_cast<Eigen::Index>(i)];
    }
  }
  m.mean0 /= m.n0;
  m.mean1 /= m.n1;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double v = x[static_cast<Eigen::Index>(i)];
    if (y[i] == 1)
      m.ss1 += (v - m.mean1) * (v - m.mean1);
    else
      m.ss0 += (v - m.mean0) * (v - m.mean0);
  }
  return m;
}

struct TTest {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
};

/// Welch (unequal-variance) two-sample t-test, class 1 minus class 0.
/// A zero standard error yields t = 0, p = 1 when the means agree and a
/// saturated statistic with p = 0 otherwise.
template <typename Column>
TTest welch_t_test(const Column& x, const Labels& y) {
  const auto m = class_moments(x, y);
  if (m.n0 < 2 || m.n1 < 2) throw DataError("welch_t_test: each class needs at least 2 rows");
  const double v0 = m.ss0 / (m.n0 - 1), v1 = m.ss1 / (m.n1 - 1);
  const double a = v0 / m.n0, b = v1 / m.n1;
  const double se = std::sqrt(a + b);
  const double diff = m.mean1 - m.mean0;
  TTest out;
  const double scale = std::max({1.0, std::abs(m.mean0), std::abs(m.mean1)});
  if (!(se > 1e-14 * scale)) {
    if (std::abs(diff) <= 1e-14 * scale) return out;
    out.t = diff > 0 ? 1e12 : -1e12;
    out.df = m.n0 + m.n1 - 2;
    out.p = 0.0;
    return out;
  }
  out.t = diff / se;
  out.df = (a + b) * (a + b) / (a * a / (m.n0 - 1) + b * b / (m.n1 - 1));
  boost::math::students_t dist(out.df);
  out.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(out.t)));
  return out;
}

/// One-way ANOVA F statistic for two groups.
template <typename Column>
double anova_f(const Column& x, const Labels& y) {
  const auto m = class_moments(x, y);
  const double n = m.n0 + m.n1;
  const double grand = (m.n0 * m.mean0 + m.n1 * m.mean1) / n;
  const double between = m.n0 * (m.mean0 - grand) * (m.mean0 - grand) + m.n1 * (m.mean1 - grand) * (m.mean1 - grand);
  const double within = m.ss0 + m.ss1;
  if (!(within > 0.0)) return between > 0.0 ? 1e12 : 0.0;
  return between / (within / (n - 2.0));
}

/// Pearson correlation; 0 when either vector is constant.
template <typename A, typename B>
double pearson(const A& a, const B& b) {
  const auto n = static_cast<Eigen::Index>(a.size());
  double ma = 0, mb = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0, saa = 0, sbb = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (!(saa > 0) || !(sbb > 0)) return 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

/// Point-biserial correlation: Pearson r against the 0/1 outcome.
template <typename Column>
double point_biserial(const Column& x, const Labels& y) {
  Vector yy(static_cast<Eigen::Index>(y.size()));
  for (std::size_t i = 0; i < y.size(); ++i) yy[static_cast<Eigen::Index>(i)] = y[i];
  return pearson(x, yy);
}

/// Fractional ranks (1-based, ties share their average rank).
template <typename Column>
Vector average_ranks(const Column& x) {
  const auto n = static_cast<std::size_t>(x.size());
  IndexList order = iota_indices(n);
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return x[static_cast<Eigen::Index>(a)] < x[static_cast<Eigen::Index>(b)]; });
  Vector r(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n;) {
    std::size_t k = i;
    while (k + 1 < n && x[static_cast<Eigen::Index>(order[k + 1])] == x[static_cast<Eigen::Index>(order[i])]) ++k;
    const double avg = 0.5 * static_cast<double>(i + k) + 1.0;
    for (std::size_t t = i; t <= k; ++t) r[static_cast<Eigen::Index>(order[t])] = avg;
    i = k + 1;
  }
  return r;
}

template <typename A, typename B>
double spearman(const A& a, const B& b) {
  return pearson(average_ranks(a), average_ranks(b));
}

}  // namespace fsbench::stats

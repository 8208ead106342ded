#pragma once

#include "fsbench/common.hpp"
#include "fsbench/logistic.hpp"
#include "fsbench/tree.hpp"

#include <map>
#include <string>
#include <variant>

namespace fsbench {

enum class ClassifierKind { logistic, lda, knn, random_forest, gradient_boosting };

inline const char* to_string(ClassifierKind k) {
  switch (k) {
    case ClassifierKind::logistic: return "logistic";
    case ClassifierKind::lda: return "lda";
    case ClassifierKind::knn: return "knn";
    case ClassifierKind::random_forest: return "random_forest";
    case ClassifierKind::gradient_boosting: return "gradient_boosting";
  }
  return "?";
}

inline ClassifierKind classifier_kind_from(const std::string& s) {
  if (s == "logistic") return ClassifierKind::logistic;
  if (s == "lda") return ClassifierKind::lda;
  if (s == "knn") return ClassifierKind::knn;
  if (s == "random_forest") return ClassifierKind::random_forest;
  if (s == "gradient_boosting") return ClassifierKind::gradient_boosting;
  throw ConfigError("unknown classifier '" + s + "'");
}

/// Classifier kind plus numeric hyperparameters. Absent keys take the
/// defaults listed in `param`.
///
///   logistic           C (inverse L2 strength, sum-loss scale; absent = unpenalised), max_iter = 100
///   lda                reg = 1e-6 (added to the pooled covariance diagonal)
///   knn                n_neighbors = 5
///   random_forest      n_estimators = 200, max_depth = 2, min_samples_leaf = 40, max_features = 0.7
///   gradient_boosting  n_estimators = 100, learning_rate = 0.1, max_depth = 2, min_samples_leaf = 40,
///                      max_features = 0.7, subsample = 0.7
struct ClassifierSpec {
  ClassifierKind kind = ClassifierKind::logistic;
  std::map<std::string, double> params;

  std::string name() const { return to_string(kind); }

  double param(const std::string& key) const {
    if (auto it = params.find(key); it != params.end()) return it->second;
    static const std::map<std::string, double> defaults{
        {"max_iter", 100},     {"reg", 1e-6},           {"n_neighbors", 5},     {"n_estimators_rf", 200},
        {"max_depth", 2},      {"min_samples_leaf", 40}, {"max_features", 0.7}, {"n_estimators_gb", 100},
        {"learning_rate", 0.1}, {"subsample", 0.7}};
    if (key == "n_estimators")
      return defaults.at(kind == ClassifierKind::random_forest ? "n_estimators_rf" : "n_estimators_gb");
    if (auto it = defaults.find(key); it != defaults.end()) return it->second;
    throw ConfigError("classifier '" + name() + "' has no parameter '" + key + "'");
  }

  bool has(const std::string& key) const { return params.count(key) > 0; }

  void validate() const {
    auto positive_int = [&](const char* key) {
      const double v = param(key);
      if (!(v >= 1) || v != std::floor(v)) throw ConfigError(name() + ": " + key + " must be an integer >= 1");
    };
    switch (kind) {
      case ClassifierKind::logistic:
        if (has("C") && !(param("C") > 0)) throw ConfigError("logistic: C must be > 0");
        positive_int("max_iter");
        break;
      case ClassifierKind::lda:
        if (!(param("reg") >= 0)) throw ConfigError("lda: reg must be >= 0");
        break;
      case ClassifierKind::knn: positive_int("n_neighbors"); break;
      case ClassifierKind::gradient_boosting:
        if (!(param("learning_rate") > 0)) throw ConfigError("gradient_boosting: learning_rate must be > 0");
        if (!(param("subsample") > 0 && param("subsample") <= 1)) throw ConfigError("gradient_boosting: subsample must lie in (0, 1]");
        [[fallthrough]];
      case ClassifierKind::random_forest:
        positive_int("n_estimators");
        positive_int("max_depth");
        positive_int("min_samples_leaf");
        if (!(param("max_features") > 0 && param("max_features") <= 1))
          throw ConfigError(name() + ": max_features must lie in (0, 1]");
        break;
    }
  }
};

namespace model {

struct Constant {
  double prob = 0.5;
};

struct Logistic {
  LogisticFit fit;
};

struct Lda {
  Vector w;
  double b = 0.0;
};

struct Knn {
  Matrix x;
  Labels y;
  std::size_t k = 5;
};

struct Forest {
  std::vector<RegressionTree> trees;
};

struct Boosted {
  double init = 0.0;
  double learning_rate = 0.1;
  std::vector<RegressionTree> trees;  // leaf values hold Newton steps
};

}  // namespace model

/// A trained classifier. Immutable after fit; predict_proba is const and
/// safe to call concurrently.
class FittedModel {
 public:
  using State = std::variant<model::Constant, model::Logistic, model::Lda, model::Knn, model::Forest, model::Boosted>;

  FittedModel(ClassifierSpec spec, std::size_t n_features, State state, std::optional<std::vector<double>> importances,
              std::vector<std::string> warnings = {})
      : spec_(std::move(spec)), n_features_(n_features), state_(std::move(state)),
        importances_(std::move(importances)), warnings_(std::move(warnings)) {}

  const ClassifierSpec& spec() const { return spec_; }
  std::size_t n_features() const { return n_features_; }
  const State& state() const { return state_; }
  const std::optional<std::vector<double>>& importances() const { return importances_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

  std::vector<double> predict_proba(const Matrix& x) const {
    if (static_cast<std::size_t>(x.cols()) != n_features_)
      throw DataError("predict_proba: expected " + std::to_string(n_features_) + " columns, got " +
                      std::to_string(x.cols()));
    const auto n = static_cast<std::size_t>(x.rows());
    std::vector<double> out(n);
    std::visit(
        [&](const auto& m) {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, model::Constant>) {
            std::fill(out.begin(), out.end(), m.prob);
          } else if constexpr (std::is_same_v<T, model::Logistic>) {
            const Vector pr = logistic_predict(m.fit, x);
            for (std::size_t i = 0; i < n; ++i) out[i] = pr[static_cast<Eigen::Index>(i)];
          } else if constexpr (std::is_same_v<T, model::Lda>) {
            const Vector eta = (x * m.w).array() + m.b;
            for (std::size_t i = 0; i < n; ++i) out[i] = sigmoid(eta[static_cast<Eigen::Index>(i)]);
          } else if constexpr (std::is_same_v<T, model::Knn>) {
            predict_knn(m, x, out);
          } else if constexpr (std::is_same_v<T, model::Forest>) {
            for (std::size_t i = 0; i < n; ++i) {
              double s = 0.0;
              for (const auto& t : m.trees) s += t.predict_row(x, static_cast<Eigen::Index>(i));
              out[i] = s / static_cast<double>(m.trees.size());
            }
          } else if constexpr (std::is_same_v<T, model::Boosted>) {
            for (std::size_t i = 0; i < n; ++i) {
              double f = m.init;
              for (const auto& t : m.trees) f += m.learning_rate * t.predict_row(x, static_cast<Eigen::Index>(i));
              out[i] = sigmoid(f);
            }
          }
        },
        state_);
    for (auto& v : out) v = std::clamp(v, 0.0, 1.0);
    return out;
  }

 private:
  static void predict_knn(const model::Knn& m, const Matrix& x, std::vector<double>& out) {
    const auto n_train = static_cast<std::size_t>(m.x.rows());
    const std::size_t k = std::min(m.k, n_train);
    std::vector<double> dist(n_train);
    IndexList order;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (std::size_t r = 0; r < n_train; ++r) dist[r] = (m.x.row(static_cast<Eigen::Index>(r)) - x.row(i)).squaredNorm();
      order = iota_indices(n_train);
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), [&](Index a, Index b) {
        return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
      });
      double pos = 0.0;
      for (std::size_t t = 0; t < k; ++t) pos += m.y[order[t]];
      out[static_cast<std::size_t>(i)] = pos / static_cast<double>(k);
    }
  }

  ClassifierSpec spec_;
  std::size_t n_features_;
  State state_;
  std::optional<std::vector<double>> importances_;
  std::vector<std::string> warnings_;
};

namespace detail {

inline std::vector<double> normalized(const Vector& v) {
  const double s = v.sum();
  std::vector<double> out(static_cast<std::size_t>(v.size()), 0.0);
  if (s > 0)
    for (Eigen::Index j = 0; j < v.size(); ++j) out[static_cast<std::size_t>(j)] = v[j] / s;
  return out;
}

inline TreeParams tree_params(const ClassifierSpec& spec) {
  TreeParams tp;
  tp.max_depth = static_cast<int>(spec.param("max_depth"));
  tp.min_samples_leaf = static_cast<std::size_t>(spec.param("min_samples_leaf"));
  tp.max_features = spec.param("max_features");
  return tp;
}

}  // namespace detail

/// Trains `spec` on x / y. Zero-column inputs give a constant model at the
/// training prevalence. `seed` drives the tree ensembles.
inline FittedModel fit(const ClassifierSpec& spec, const Matrix& x, const Labels& y, std::uint64_t seed = 0) {
  spec.validate();
  require_two_classes(y, "fit");
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw DataError("fit: row/label count mismatch");
  if (!x.allFinite()) throw DataError("fit: non-finite feature values");
  const std::size_t n = y.size();
  const auto p = static_cast<std::size_t>(x.cols());
  const double prevalence = static_cast<double>(count_positive(y)) / static_cast<double>(n);
  if (p == 0) return FittedModel(spec, 0, model::Constant{prevalence}, std::vector<double>{});

  Vector yv(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) yv[static_cast<Eigen::Index>(i)] = y[i];

  switch (spec.kind) {
    case ClassifierKind::logistic: {
      LogisticOptions opt;
      opt.max_iter = static_cast<int>(spec.param("max_iter"));
      if (spec.has("C")) opt.l2 = 1.0 / (spec.param("C") * static_cast<double>(n));
      auto lf = fit_logistic(x, y, opt);
      std::vector<std::string> warn;
      if (lf.separated) warn.push_back("logistic: separation detected; coefficients diverge");
      else if (!lf.converged) warn.push_back("logistic: did not converge");
      std::vector<double> imp(p);
      for (std::size_t j = 0; j < p; ++j) imp[j] = std::abs(lf.coef[static_cast<Eigen::Index>(j)]);
      return FittedModel(spec, p, model::Logistic{std::move(lf)}, std::move(imp), std::move(warn));
    }
    case ClassifierKind::lda: {
      Vector mu0 = Vector::Zero(static_cast<Eigen::Index>(p)), mu1 = Vector::Zero(static_cast<Eigen::Index>(p));
      double n0 = 0, n1 = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (y[i] == 1) {
          mu1 += x.row(static_cast<Eigen::Index>(i)).transpose();
          n1 += 1;
        } else {
          mu0 += x.row(static_cast<Eigen::Index>(i)).transpose();
          n0 += 1;
        }
      }
      mu0 /= n0;
      mu1 /= n1;
      Matrix centered = x;
      for (std::size_t i = 0; i < n; ++i)
        centered.row(static_cast<Eigen::Index>(i)) -= (y[i] == 1 ? mu1 : mu0).transpose();
      Matrix cov = centered.transpose() * centered / static_cast<double>(n);
      cov.diagonal().array() += spec.param("reg");
      const Vector w = cov.ldlt().solve(mu1 - mu0);
      if (!w.allFinite()) throw FitError("lda: singular pooled covariance");
      const double b = -0.5 * (mu1 + mu0).dot(w) + std::log(n1 / n0);
      std::vector<double> imp(p);
      for (std::size_t j = 0; j < p; ++j) imp[j] = std::abs(w[static_cast<Eigen::Index>(j)]);
      return FittedModel(spec, p, model::Lda{w, b}, std::move(imp));
    }
    case ClassifierKind::knn:
      return FittedModel(spec, p, model::Knn{x, y, static_cast<std::size_t>(spec.param("n_neighbors"))}, std::nullopt);
    case ClassifierKind::random_forest: {
      const auto tp = detail::tree_params(spec);
      const auto trees = static_cast<std::size_t>(spec.param("n_estimators"));
      model::Forest forest;
      Vector imp_sum = Vector::Zero(static_cast<Eigen::Index>(p));
      for (std::size_t t = 0; t < trees; ++t) {
        Rng rng(derive_seed(seed, t));
        IndexList rows(n);
        for (auto& r : rows) r = static_cast<Index>(rng.below(n));
        Vector imp = Vector::Zero(static_cast<Eigen::Index>(p));
        forest.trees.push_back(RegressionTree::grow(x, yv, rows, tp, rng, &imp));
        const double s = imp.sum();
        if (s > 0) imp_sum += imp / s;
      }
      imp_sum /= static_cast<double>(trees);
      return FittedModel(spec, p, std::move(forest), detail::normalized(imp_sum));
    }
    case ClassifierKind::gradient_boosting: {
      const auto tp = detail::tree_params(spec);
      const auto rounds = static_cast<std::size_t>(spec.param("n_estimators"));
      const double lr = spec.param("learning_rate");
      const auto m = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(spec.param("subsample") * static_cast<double>(n))));
      model::Boosted gb;
      gb.learning_rate = lr;
      gb.init = std::log(prevalence / (1.0 - prevalence));
      Vector f = Vector::Constant(static_cast<Eigen::Index>(n), gb.init);
      Vector resid(static_cast<Eigen::Index>(n)), prob(static_cast<Eigen::Index>(n));
      Vector imp = Vector::Zero(static_cast<Eigen::Index>(p));
      for (std::size_t round = 0; round < rounds; ++round) {
        Rng rng(derive_seed(seed, round));
        for (std::size_t i = 0; i < n; ++i) {
          prob[static_cast<Eigen::Index>(i)] = sigmoid(f[static_cast<Eigen::Index>(i)]);
          resid[static_cast<Eigen::Index>(i)] = yv[static_cast<Eigen::Index>(i)] - prob[static_cast<Eigen::Index>(i)];
        }
        IndexList perm = iota_indices(n);
        for (std::size_t i = 0; i < m; ++i) std::swap(perm[i], perm[i + rng.below(n - i)]);
        IndexList rows(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(m));
        std::sort(rows.begin(), rows.end());
        auto tree = RegressionTree::grow(x, resid, rows, tp, rng, &imp);
        // Newton step per leaf from the in-bag rows
        auto& nodes = tree.nodes();
        std::vector<double> num(nodes.size(), 0.0), den(nodes.size(), 0.0);
        for (Index r : rows) {
          const auto leaf = static_cast<std::size_t>(tree.leaf_of(x, static_cast<Eigen::Index>(r)));
          const auto rr = static_cast<Eigen::Index>(r);
          num[leaf] += resid[rr];
          den[leaf] += prob[rr] * (1.0 - prob[rr]);
        }
        for (std::size_t k = 0; k < nodes.size(); ++k)
          if (nodes[k].feature < 0) nodes[k].value = den[k] > 1e-12 ? num[k] / den[k] : 0.0;
        for (std::size_t i = 0; i < n; ++i) f[static_cast<Eigen::Index>(i)] += lr * tree.predict_row(x, static_cast<Eigen::Index>(i));
        gb.trees.push_back(std::move(tree));
      }
      return FittedModel(spec, p, std::move(gb), detail::normalized(imp));
    }
  }
  throw ConfigError("unsupported classifier");
}

inline std::vector<double> predict_proba(const FittedModel& m, const Matrix& x) { return m.predict_proba(x); }

}  // namespace fsbench

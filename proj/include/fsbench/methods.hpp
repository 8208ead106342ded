#pragma once

#include "fsbench/embedded.hpp"
#include "fsbench/filters.hpp"
#include "fsbench/information.hpp"
#include "fsbench/selection.hpp"
#include "fsbench/simulation.hpp"
#include "fsbench/wrappers.hpp"

#include <nlohmann/json.hpp>

#include <set>

namespace fsbench {

/// One configured feature-selection method. `name` labels it in reports
/// (defaults to the id) so one id can appear with different parameters.
struct MethodSpec {
  std::string id;
  std::string name;
  nlohmann::json params = nlohmann::json::object();

  const std::string& label() const { return name.empty() ? id : name; }
};

/// Inputs shared by every method call.
struct MethodContext {
  std::size_t k = 10;                // size for fixed-size methods
  bool force_k = false;              // ignore a per-method "k" (recovery protocol)
  IndexList covariates;              // forced adjustment columns for padjust_union
  std::vector<bool> categorical;     // columns discretised by their own levels
  std::uint64_t seed = 0;
};

namespace detail {

struct MethodInfo {
  bool fixed_size;
  std::set<std::string> keys;
};

inline const std::map<std::string, MethodInfo>& method_table() {
  static const std::map<std::string, MethodInfo> table{
      {"t_score", {true, {"k"}}},
      {"fisher", {true, {"k"}}},
      {"gini", {true, {"k"}}},
      {"relieff", {true, {"k", "neighbors"}}},
      {"cife", {true, {"k", "bins"}}},
      {"cmim", {true, {"k", "bins"}}},
      {"disr", {true, {"k", "bins"}}},
      {"jmi", {true, {"k", "bins"}}},
      {"mrmr", {true, {"k"}}},
      {"hcluster", {true, {"k"}}},
      {"padjust_union", {false, {"alpha"}}},
      {"random", {true, {"k", "k_min", "k_max"}}},
      {"lasso", {false, {"folds", "n_lambdas", "min_ratio", "rule"}}},
      {"adaptive_lasso", {false, {"folds", "n_lambdas", "min_ratio", "rule", "gamma"}}},
      {"bolasso", {false, {"folds", "n_lambdas", "min_ratio", "rule", "inner_B", "threshold"}}},
      {"stability_selection", {false, {"inner_B", "ratio", "threshold", "n_lambdas"}}},
      {"rfe", {true, {"k", "base", "base_params", "drop_fraction"}}},
      {"forward", {false, {"k_max", "base", "base_params", "folds"}}},
      {"full", {false, {}}},
  };
  return table;
}

inline const MethodInfo& method_info(const std::string& id) {
  const auto& t = method_table();
  auto it = t.find(id);
  if (it == t.end()) throw ConfigError("unknown feature-selection method '" + id + "'");
  return it->second;
}

inline double num(const nlohmann::json& params, const char* key, double fallback) {
  if (!params.contains(key)) return fallback;
  const auto& v = params.at(key);
  if (!v.is_number()) throw ConfigError(std::string("method parameter '") + key + "' must be a number");
  return v.get<double>();
}

inline std::size_t count_param(const nlohmann::json& params, const char* key, std::size_t fallback) {
  const double v = num(params, key, static_cast<double>(fallback));
  if (!(v >= 1) || v != std::floor(v)) throw ConfigError(std::string("method parameter '") + key + "' must be an integer >= 1");
  return static_cast<std::size_t>(v);
}

inline LassoSelectOptions lasso_options(const nlohmann::json& params, std::uint64_t seed) {
  LassoSelectOptions o;
  o.cv.folds = static_cast<int>(count_param(params, "folds", 5));
  o.cv.n_lambdas = count_param(params, "n_lambdas", 50);
  o.cv.min_ratio = num(params, "min_ratio", 1e-3);
  o.cv.seed = seed;
  if (params.contains("rule")) {
    const auto r = params.at("rule").get<std::string>();
    if (r == "min") o.cv.rule = CvRule::min;
    else if (r == "1se") o.cv.rule = CvRule::one_se;
    else throw ConfigError("lasso rule must be 'min' or '1se'");
  }
  return o;
}

inline ClassifierSpec base_classifier(const nlohmann::json& params, ClassifierSpec fallback) {
  if (!params.contains("base")) return fallback;
  ClassifierSpec spec{classifier_kind_from(params.at("base").get<std::string>()), {}};
  if (params.contains("base_params"))
    for (const auto& [key, v] : params.at("base_params").items()) spec.params[key] = v.get<double>();
  spec.validate();
  return spec;
}

}  // namespace detail

inline bool is_fixed_size(const std::string& id) { return detail::method_info(id).fixed_size; }

/// Checks the id and rejects unknown parameter keys.
inline void validate_method(const MethodSpec& m) {
  const auto& info = detail::method_info(m.id);
  if (!m.params.is_object()) throw ConfigError("method '" + m.label() + "': params must be an object");
  for (const auto& [key, v] : m.params.items())
    if (!info.keys.count(key)) throw ConfigError("method '" + m.label() + "' has no parameter '" + key + "'");
}

/// Runs one configured method on a preprocessed matrix.
inline SelectionResult run_method(const MethodSpec& m, const Matrix& x, const Labels& y, const MethodContext& ctx) {
  validate_method(m);
  const auto& P = m.params;
  const std::size_t p = static_cast<std::size_t>(x.cols());
  const std::size_t k = ctx.force_k ? ctx.k : detail::count_param(P, "k", ctx.k);
  SelectionResult r;
  const std::string& id = m.id;
  if (id == "t_score") r = select_top_k(score_statistical(x, y, StatScore::t_score), k);
  else if (id == "fisher") r = select_top_k(score_statistical(x, y, StatScore::fisher), k);
  else if (id == "gini") r = select_top_k(score_statistical(x, y, StatScore::gini), k);
  else if (id == "relieff")
    r = select_top_k(relieff_score(x, y, detail::count_param(P, "neighbors", 5), 0, ctx.seed), k);
  else if (id == "cife" || id == "cmim" || id == "disr" || id == "jmi") {
    const MiCriterion c = id == "cife" ? MiCriterion::cife : id == "cmim" ? MiCriterion::cmim
                          : id == "disr" ? MiCriterion::disr : MiCriterion::jmi;
    r = greedy_mi_select(x, y, c, k, static_cast<int>(detail::count_param(P, "bins", 5)), ctx.categorical);
  } else if (id == "mrmr") r = mrmr_select(x, y, k);
  else if (id == "hcluster") r = hcluster_select(x, y, k);
  else if (id == "padjust_union") r = padjust_union_filter(x, y, detail::num(P, "alpha", 0.05), ctx.covariates);
  else if (id == "random") {
    SizeRange range{k, k};
    if (!ctx.force_k && (P.contains("k_min") || P.contains("k_max")))
      range = {detail::count_param(P, "k_min", 1), detail::count_param(P, "k_max", p)};
    range.hi = std::min(range.hi, p);
    range.lo = std::min(range.lo, range.hi);
    r = random_select(p, range, ctx.seed);
  } else if (id == "lasso") r = lasso_select(x, y, detail::lasso_options(P, ctx.seed));
  else if (id == "adaptive_lasso")
    r = adaptive_lasso_select(x, y, detail::num(P, "gamma", 1.0), detail::lasso_options(P, ctx.seed));
  else if (id == "bolasso") {
    BolassoOptions o;
    o.inner_B = detail::count_param(P, "inner_B", 32);
    o.freq_threshold = detail::num(P, "threshold", 0.5);
    o.seed = ctx.seed;
    o.lasso = detail::lasso_options(P, ctx.seed);
    r = bolasso_select(x, y, o);
  } else if (id == "stability_selection") {
    StabilitySelectionOptions o;
    o.inner_B = detail::count_param(P, "inner_B", 50);
    o.subsample_ratio = detail::num(P, "ratio", 0.5);
    o.freq_threshold = detail::num(P, "threshold", 0.6);
    o.n_lambdas = detail::count_param(P, "n_lambdas", 20);
    o.seed = ctx.seed;
    r = stability_selection_select(x, y, o);
  } else if (id == "rfe")
    r = rfe_select(x, y, detail::base_classifier(P, default_rfe_base()), k, detail::num(P, "drop_fraction", 0.1), ctx.seed);
  else if (id == "forward")
    r = forward_select(x, y, detail::base_classifier(P, ClassifierSpec{}), ctx.force_k ? k : detail::count_param(P, "k_max", k),
                       static_cast<int>(detail::count_param(P, "folds", 5)), ctx.seed);
  else if (id == "full") {
    r.mode = SelectionMode::thresholded;
    r.selected = iota_indices(p);
  }
  r.method = m.label();
  return r;
}

/// Adapts configured methods to the recovery experiment's calling shape.
inline std::vector<RecoveryMethod> recovery_methods(const std::vector<MethodSpec>& specs, const MethodContext& base) {
  std::vector<RecoveryMethod> out;
  for (const auto& m : specs) {
    RecoveryMethod rm;
    rm.name = m.label();
    rm.fixed_size = is_fixed_size(m.id);
    rm.run = [m, base](const Matrix& x, const Labels& y, std::size_t k, std::uint64_t seed) {
      MethodContext ctx = base;
      ctx.k = k;
      ctx.force_k = true;
      ctx.seed = seed;
      return run_method(m, x, y, ctx);
    };
    out.push_back(std::move(rm));
  }
  return out;
}

}  // namespace fsbench

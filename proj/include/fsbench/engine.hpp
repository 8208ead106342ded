#pragma once

#include "fsbench/classifiers.hpp"
#include "fsbench/data.hpp"
#include "fsbench/methods.hpp"
#include "fsbench/metrics.hpp"
#include "fsbench/parallel.hpp"
#include "fsbench/prefilter.hpp"
#include "fsbench/report.hpp"
#include "fsbench/simulation.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <set>

namespace fsbench {

inline constexpr const char* kVersion = "0.1.0";

struct VifConfig {
  bool enabled = false;
  double threshold = 5.0;
};

/// Semi-synthetic recovery run: the truth set is an explicit list of
/// feature names / column indices, or the `top` best features by adjusted
/// logistic p-value.
struct SimulationConfig {
  std::vector<Json> truth;
  std::size_t top = 0;
  double noise_sd = 1.0;
  std::size_t replicates = 36;
  std::optional<std::uint64_t> seed;
};

struct BenchmarkConfig {
  std::vector<MethodSpec> methods;
  std::vector<ClassifierSpec> classifiers;
  std::vector<std::string> classifier_names;  // parallel to classifiers
  std::size_t B = 100;
  ResampleKind resample = ResampleKind::bootstrap;
  double ratio = 1.0;
  OcMethod oc_method = OcMethod::dot632plus;
  std::size_t k = 10;
  double high_confidence = 0.5;
  double threshold = 0.5;
  std::uint64_t seed = 0;
  VifConfig vif;
  std::optional<SimulationConfig> simulation;
  std::vector<std::string> covariates;
  std::size_t workers = 1;
  bool include_full_control = true;

  const std::string& classifier_name(std::size_t c) const { return classifier_names[c]; }

  void validate() const {
    if (methods.empty()) throw ConfigError("config: at least one method is required");
    if (classifiers.empty()) throw ConfigError("config: at least one classifier is required");
    if (B < 2) throw ConfigError("config: B must be >= 2");
    if (k < 1) throw ConfigError("config: k must be >= 1");
    if (!(ratio > 0.0 && ratio <= 1.0)) throw ConfigError("config: resample ratio must lie in (0, 1]");
    if (!(high_confidence >= 0.0 && high_confidence <= 1.0)) throw ConfigError("config: high_confidence must lie in [0, 1]");
    if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("config: threshold must lie in (0, 1)");
    if (!(vif.threshold >= 1.0)) throw ConfigError("config: vif threshold must be >= 1");
    if (workers < 1) throw ConfigError("config: workers must be >= 1");
    std::set<std::string> seen;
    for (const auto& m : methods) {
      validate_method(m);
      if (!seen.insert(m.label()).second) throw ConfigError("config: duplicate method name '" + m.label() + "'");
    }
    seen.clear();
    if (classifier_names.size() != classifiers.size()) throw ConfigError("config: classifier names out of sync");
    for (std::size_t c = 0; c < classifiers.size(); ++c) {
      classifiers[c].validate();
      if (!seen.insert(classifier_names[c]).second)
        throw ConfigError("config: duplicate classifier name '" + classifier_names[c] + "'");
    }
    if (simulation) {
      if (simulation->truth.empty() == (simulation->top == 0))
        throw ConfigError("config: simulation needs exactly one of 'truth' or 'top'");
      if (simulation->replicates < 1) throw ConfigError("config: simulation replicates must be >= 1");
      if (!(simulation->noise_sd >= 0.0)) throw ConfigError("config: simulation noise_sd must be >= 0");
    }
  }
};

namespace detail {

inline void reject_unknown(const Json& j, const std::set<std::string>& keys, const std::string& where) {
  for (const auto& [key, v] : j.items())
    if (!keys.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

}  // namespace detail

/// Parses the JSON config (schema in the README). Strings are accepted as
/// shorthand for methods and classifiers without parameters.
inline BenchmarkConfig config_from_json(const Json& j) {
  try {
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    detail::reject_unknown(j,
                           {"methods", "classifiers", "B", "resample", "oc_method", "k", "high_confidence", "threshold", "seed",
                            "vif", "simulation", "covariates", "workers", "include_full_control"},
                           "config");
    BenchmarkConfig c;
    for (const auto& m : j.at("methods")) {
      MethodSpec spec;
      if (m.is_string()) {
        spec.id = m.get<std::string>();
      } else {
        detail::reject_unknown(m, {"id", "name", "params"}, "method");
        spec.id = m.at("id").get<std::string>();
        spec.name = m.value("name", std::string());
        if (m.contains("params")) spec.params = m.at("params");
      }
      c.methods.push_back(std::move(spec));
    }
    for (const auto& cl : j.at("classifiers")) {
      ClassifierSpec spec;
      std::string name;
      if (cl.is_string()) {
        spec.kind = classifier_kind_from(cl.get<std::string>());
      } else {
        detail::reject_unknown(cl, {"kind", "name", "params"}, "classifier");
        spec.kind = classifier_kind_from(cl.at("kind").get<std::string>());
        name = cl.value("name", std::string());
        if (cl.contains("params"))
          for (const auto& [key, v] : cl.at("params").items()) spec.params[key] = v.get<double>();
      }
      c.classifier_names.push_back(name.empty() ? spec.name() : name);
      c.classifiers.push_back(std::move(spec));
    }
    c.B = j.value("B", c.B);
    if (j.contains("resample")) {
      const auto& r = j.at("resample");
      detail::reject_unknown(r, {"kind", "ratio"}, "resample");
      const auto kind = r.value("kind", std::string("bootstrap"));
      if (kind == "bootstrap") c.resample = ResampleKind::bootstrap;
      else if (kind == "subsample") {
        c.resample = ResampleKind::subsample;
        c.ratio = 0.632;
      } else throw ConfigError("config: resample kind must be 'bootstrap' or 'subsample'");
      c.ratio = r.value("ratio", c.ratio);
    }
    if (j.contains("oc_method")) {
      const auto oc = j.at("oc_method").get<std::string>();
      if (oc == "harrell") c.oc_method = OcMethod::harrell;
      else if (oc == "dot632") c.oc_method = OcMethod::dot632;
      else if (oc == "dot632plus") c.oc_method = OcMethod::dot632plus;
      else throw ConfigError("config: oc_method must be harrell, dot632 or dot632plus");
    }
    c.k = j.value("k", c.k);
    c.high_confidence = j.value("high_confidence", c.high_confidence);
    c.threshold = j.value("threshold", c.threshold);
    c.seed = j.value("seed", c.seed);
    if (j.contains("vif")) {
      const auto& v = j.at("vif");
      detail::reject_unknown(v, {"enabled", "threshold"}, "vif");
      c.vif.enabled = v.value("enabled", true);
      c.vif.threshold = v.value("threshold", c.vif.threshold);
    }
    if (j.contains("simulation") && !j.at("simulation").is_null()) {
      const auto& s = j.at("simulation");
      detail::reject_unknown(s, {"truth", "top", "noise_sd", "replicates", "seed"}, "simulation");
      SimulationConfig sc;
      if (s.contains("truth")) sc.truth = s.at("truth").get<std::vector<Json>>();
      sc.top = s.value("top", sc.top);
      sc.noise_sd = s.value("noise_sd", sc.noise_sd);
      sc.replicates = s.value("replicates", sc.replicates);
      if (s.contains("seed")) sc.seed = s.at("seed").get<std::uint64_t>();
      c.simulation = std::move(sc);
    }
    if (j.contains("covariates")) c.covariates = j.at("covariates").get<std::vector<std::string>>();
    c.workers = j.value("workers", c.workers);
    c.include_full_control = j.value("include_full_control", c.include_full_control);
    c.validate();
    return c;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

inline BenchmarkConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

/// Canonical JSON form of the parsed config (defaults filled in).
inline Json config_to_json(const BenchmarkConfig& c) {
  Json j;
  for (const auto& m : c.methods) j["methods"].push_back({{"id", m.id}, {"name", m.label()}, {"params", m.params}});
  for (std::size_t i = 0; i < c.classifiers.size(); ++i)
    j["classifiers"].push_back({{"kind", c.classifiers[i].name()}, {"name", c.classifier_names[i]}, {"params", c.classifiers[i].params}});
  j["B"] = c.B;
  j["resample"] = {{"kind", to_string(c.resample)}, {"ratio", c.ratio}};
  j["oc_method"] = to_string(c.oc_method);
  j["k"] = c.k;
  j["high_confidence"] = c.high_confidence;
  j["threshold"] = c.threshold;
  j["seed"] = c.seed;
  j["vif"] = {{"enabled", c.vif.enabled}, {"threshold", c.vif.threshold}};
  if (c.simulation) {
    Json s{{"noise_sd", c.simulation->noise_sd}, {"replicates", c.simulation->replicates}};
    if (!c.simulation->truth.empty()) s["truth"] = c.simulation->truth;
    if (c.simulation->top) s["top"] = c.simulation->top;
    if (c.simulation->seed) s["seed"] = *c.simulation->seed;
    j["simulation"] = s;
  }
  j["covariates"] = c.covariates;
  j["include_full_control"] = c.include_full_control;
  return j;
}

namespace detail {

inline std::string hex64(std::uint64_t h) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

inline std::uint64_t hash_bytes(std::uint64_t h, const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string dataset_hash(const Dataset& d) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  h = hash_bytes(h, d.features().data(), sizeof(double) * static_cast<std::size_t>(d.features().size()));
  for (Eigen::Index i = 0; i < d.missing().size(); ++i) {
    const unsigned char bit = d.missing().data()[i] ? 1 : 0;
    h = hash_bytes(h, &bit, 1);
  }
  h = hash_bytes(h, d.outcome().data(), sizeof(int) * d.outcome().size());
  for (const auto& name : d.feature_names()) h = hash_bytes(h, name.data(), name.size() + 1);
  return hex64(h);
}

inline std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::optional<BinaryMetrics> try_metrics(const std::vector<double>& scores, const Labels& y, double threshold) {
  if (scores.empty() || !has_both_classes(y)) return std::nullopt;
  return binary_metrics(std::span<const double>(scores), y, threshold);
}

inline std::vector<double> take(const std::vector<double>& v, std::span<const Index> rows) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (Index r : rows) out.push_back(v[r]);
  return out;
}

struct ClassifierOutcome {
  std::optional<std::string> error;
  std::optional<BinaryMetrics> boot, orig, oob;  // for the apparent unit only `orig` is set
  std::vector<double> full_scores;               // predictions on every original row
};

struct UnitOutcome {
  std::optional<std::string> error;  // preprocessing or FS failure
  IndexList selected;
  SelectionMode mode = SelectionMode::fixed_k;
  double seconds = 0.0;
  std::vector<ClassifierOutcome> classifiers;
};

inline MaybeReal metric_of(const std::optional<BinaryMetrics>& m, Metric metric) {
  if (!m) return std::nullopt;
  return m->get(metric);
}

/// Training inputs of one pipeline run: preprocessing fitted on `in_rows`
/// only, then applied to every row.
struct UnitInputs {
  PreprocessState state;
  Matrix x_full, x_in;
  Labels y_in;
};

inline UnitInputs prepare_unit(const Dataset& data, std::span<const Index> in_rows) {
  UnitInputs u;
  u.state = fit_preprocess(data, in_rows);
  u.x_full = apply_preprocess(u.state, data);
  u.x_in = select_rows(u.x_full, in_rows);
  u.y_in = select_labels(data.outcome(), in_rows);
  return u;
}

}  // namespace detail

/// Seed handed to method `label` on resample b (b = 0 is the full data).
inline std::uint64_t method_seed(std::uint64_t seed, std::size_t b, const std::string& label) {
  return derive_seed(child_seed(seed, b), hash_tag(label));
}

/// Full benchmark: optional VIF prefilter, the apparent pipeline on the full
/// data, then B resamples each refitting preprocessing, feature selection
/// and every classifier on the in-sample rows only. Failures are recorded
/// per cell and never abort the run.
inline ReportBundle run_benchmark(const Dataset& input, const BenchmarkConfig& cfg_in) {
  BenchmarkConfig cfg = cfg_in;
  cfg.validate();
  ReportBundle bundle;
  bundle.provenance.timestamps["started"] = detail::utc_now();
  bundle.provenance.seed = cfg.seed;
  bundle.provenance.version = kVersion;
  bundle.provenance.config_hash = detail::hex64(hash_tag(config_to_json(cfg).dump()));
  bundle.provenance.data_hash = detail::dataset_hash(input);

  // optional VIF prefilter on the full data
  Dataset data = input;
  if (cfg.vif.enabled) {
    const Matrix z = apply_preprocess(fit_preprocess(input), input);
    const auto vr = iterative_vif_filter(z, cfg.vif.threshold);
    for (const auto& rm : vr.removal_trace) bundle.vif_removed.push_back(input.feature_meta()[rm.feature].name);
    data = input.with_columns(vr.surviving);
  }
  const Labels& y = data.outcome();
  const std::size_t n = data.n(), p = data.p();
  if (cfg.include_full_control &&
      std::none_of(cfg.methods.begin(), cfg.methods.end(), [](const MethodSpec& m) { return m.id == "full"; }))
    cfg.methods.push_back(MethodSpec{"full", "full", Json::object()});

  MethodContext base_ctx;
  base_ctx.k = cfg.k;
  for (const auto& meta : data.feature_meta()) base_ctx.categorical.push_back(meta.kind == FeatureKind::categorical);
  for (const auto& name : cfg.covariates) {
    if (auto j = data.find_feature(name)) base_ctx.covariates.push_back(*j);
    else bundle.warnings.push_back("covariate '" + name + "' not found (or removed by the VIF prefilter)");
  }

  const std::size_t M = cfg.methods.size(), C = cfg.classifiers.size(), B = cfg.B;
  const auto resamples = make_resamples(y, B, cfg.resample, cfg.ratio, cfg.seed);
  const IndexList all_rows = iota_indices(n);

  // unit u = b * M + m, b = 0 is the apparent (full-data) pipeline
  std::vector<detail::UnitOutcome> units((B + 1) * M);
  const std::size_t workers = workers_from_env(cfg.workers);
  parallel_for(units.size(), workers, [&](std::size_t u) {
    const std::size_t b = u / M, m = u % M;
    auto& out = units[u];
    out.classifiers.resize(C);
    const auto& method = cfg.methods[m];
    const IndexList& in_rows = b == 0 ? all_rows : resamples[b - 1].in_indices;
    Matrix x_in, x_full;
    Labels y_in;
    try {
      auto prepared = detail::prepare_unit(data, in_rows);
      x_full = std::move(prepared.x_full);
      x_in = std::move(prepared.x_in);
      y_in = std::move(prepared.y_in);
      MethodContext ctx = base_ctx;
      ctx.seed = method_seed(cfg.seed, b, method.label());
      const auto t0 = std::chrono::steady_clock::now();
      const auto sel = run_method(method, x_in, y_in, ctx);
      out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      out.selected = sel.selected;
      out.mode = sel.mode;
    } catch (const std::exception& e) {
      out.error = e.what();
      return;
    }
    const Matrix xs_in = select_columns(x_in, out.selected), xs_full = select_columns(x_full, out.selected);
    for (std::size_t c = 0; c < C; ++c) {
      auto& co = out.classifiers[c];
      try {
        const auto model = fit(cfg.classifiers[c], xs_in, y_in,
                               derive_seed(method_seed(cfg.seed, b, method.label()), hash_tag(cfg.classifier_name(c))));
        co.full_scores = model.predict_proba(xs_full);
        co.orig = detail::try_metrics(co.full_scores, y, cfg.threshold);
        if (b > 0) {
          co.boot = detail::try_metrics(detail::take(co.full_scores, in_rows), y_in, cfg.threshold);
          const auto& oob = resamples[b - 1].oob_indices;
          co.oob = detail::try_metrics(detail::take(co.full_scores, oob), select_labels(y, oob), cfg.threshold);
        }
      } catch (const std::exception& e) {
        co.error = e.what();
        co.full_scores.clear();
      }
    }
  });

  // single-threaded reduction in config order
  bundle.settings = {B,         to_string(cfg.resample),  cfg.ratio, to_string(cfg.oc_method), cfg.k, cfg.high_confidence,
                     cfg.threshold, n, input.p(), p};
  const std::string oc = to_string(cfg.oc_method);
  std::map<std::string, std::vector<double>> freq_by_method;
  for (std::size_t m = 0; m < M; ++m) {
    const auto& method = cfg.methods[m];
    const auto& app = units[m];
    MethodReport mr;
    mr.method = method.label();
    mr.id = method.id;
    mr.control = method.id == "full";
    mr.mode = to_string(app.error ? SelectionMode::fixed_k : app.mode);
    if (mr.control) mr.mode = "control";
    mr.apparent_selection = app.selected;
    if (app.error) mr.errors.push_back("full data: " + *app.error);
    std::vector<IndexList> sets;
    std::vector<double> sizes, secs;
    for (std::size_t b = 1; b <= B; ++b) {
      const auto& u = units[b * M + m];
      if (u.error) {
        ++mr.failed_resamples;
        mr.sizes.push_back(std::nullopt);
        if (mr.errors.size() < 5) mr.errors.push_back("resample " + std::to_string(b) + ": " + *u.error);
        continue;
      }
      sets.push_back(u.selected);
      sizes.push_back(static_cast<double>(u.selected.size()));
      mr.sizes.push_back(static_cast<double>(u.selected.size()));
      secs.push_back(u.seconds);
    }
    mr.size = mean_sd(sizes);
    bundle.timing[mr.method] = mean_sd(secs);
    if (sets.size() >= 2) {
      const auto ens = make_ensemble(sets, p);
      mr.frequencies = ens.frequencies;
      mr.stability = mr.control ? MaybeReal(1.0) : ens.stability;
    } else {
      mr.frequencies.assign(p, 0.0);
      bundle.warnings.push_back("method '" + mr.method + "': fewer than 2 successful resamples; stability undefined");
    }
    if (!mr.control) freq_by_method[mr.method] = mr.frequencies;

    // per-classifier cells
    MaybeReal best_auc;
    for (std::size_t c = 0; c < C; ++c) {
      CellReport cell;
      cell.method = mr.method;
      cell.classifier = cfg.classifier_name(c);
      cell.control = mr.control;
      const auto& app_c = app.classifiers.empty() ? detail::ClassifierOutcome{} : app.classifiers[c];
      if (app.error) cell.error = *app.error;
      else if (app_c.error) cell.error = *app_c.error;
      for (std::size_t b = 1; b <= B; ++b) {
        const auto& u = units[b * M + m];
        if (u.error || u.classifiers[c].error) ++cell.failed_resamples;
      }
      for (Metric metric : kAllMetrics) {
        const std::string key = to_string(metric);
        const MaybeReal theta_app = detail::metric_of(app_c.orig, metric);
        std::vector<MaybeReal> boot, orig, oob;
        for (std::size_t b = 1; b <= B; ++b) {
          const auto& u = units[b * M + m];
          if (u.error) continue;
          const auto& co = u.classifiers[c];
          boot.push_back(detail::metric_of(co.boot, metric));
          orig.push_back(detail::metric_of(co.orig, metric));
          oob.push_back(detail::metric_of(co.oob, metric));
        }
        MaybeReal gamma;
        if (!cell.error && !app_c.full_scores.empty())
          gamma = no_information_score(std::span<const double>(app_c.full_scores), y, metric, cfg.threshold,
                                       derive_seed(cfg.seed, hash_tag("gamma/" + cell.method + "/" + cell.classifier + "/" + key)));
        cell.apparent[key] = theta_app;
        cell.gamma[key] = gamma;
        const auto est = estimate_performance(theta_app, boot, orig, oob, gamma);
        cell.theta_out[key] = est ? MaybeReal(est->theta_out) : std::nullopt;
        for (const char* name : {"harrell", "dot632", "dot632plus"})
          cell.corrected[key][name] = est ? MaybeReal(est->corrected.at(name)) : std::nullopt;
      }
      const auto auc = cell.corrected["auc"][oc];
      if (auc && (!best_auc || *auc > *best_auc)) {
        best_auc = auc;
        mr.best_classifier = cell.classifier;
      }
      bundle.cells.push_back(std::move(cell));
    }

    // instability index of the best classifier
    if (mr.best_classifier) {
      std::size_t c = 0;
      while (cfg.classifier_name(c) != *mr.best_classifier) ++c;
      std::vector<std::vector<double>> per_b;
      for (std::size_t b = 1; b <= B; ++b) {
        const auto& u = units[b * M + m];
        if (!u.error && !u.classifiers[c].error) per_b.push_back(u.classifiers[c].full_scores);
      }
      mr.instability = instability_index(std::span<const double>(app.classifiers[c].full_scores), per_b, cfg.threshold);
    }
    bundle.methods.push_back(std::move(mr));
  }

  const auto hc = high_confidence_counts(freq_by_method, p, cfg.high_confidence);
  for (std::size_t j = 0; j < p; ++j) {
    FeatureReport fr;
    fr.name = data.feature_meta()[j].name;
    for (const auto& [name, freq] : freq_by_method) fr.frequency[name] = freq[j];
    fr.high_confidence = hc[j];
    bundle.features.push_back(std::move(fr));
  }

  // semi-synthetic recovery experiment on the full preprocessed matrix
  if (cfg.simulation) {
    const auto& sc = *cfg.simulation;
    const Matrix z = apply_preprocess(fit_preprocess(data), data);
    IndexList truth;
    if (sc.top > 0) {
      truth = select_truth_by_pvalue(z, y, sc.top);
    } else {
      for (const auto& t : sc.truth) {
        if (t.is_string()) {
          auto j = data.find_feature(t.get<std::string>());
          if (!j) throw ConfigError("simulation: truth feature '" + t.get<std::string>() + "' not found");
          truth.push_back(*j);
        } else {
          const auto j = t.get<std::size_t>();
          if (j >= p) throw ConfigError("simulation: truth index out of range");
          truth.push_back(j);
        }
      }
      std::sort(truth.begin(), truth.end());
      truth.erase(std::unique(truth.begin(), truth.end()), truth.end());
    }
    const auto spec = make_simulation_spec(z, y, truth, sc.noise_sd, sc.replicates,
                                           sc.seed.value_or(derive_seed(cfg.seed, hash_tag("simulation"))));
    if (spec.separated) bundle.warnings.push_back("simulation: truth model separated; coefficients capped at 20");
    std::vector<MethodSpec> rec_methods;
    for (const auto& m : cfg.methods)
      if (m.id != "full") rec_methods.push_back(m);
    const auto rec = run_recovery_experiment(z, spec, recovery_methods(rec_methods, base_ctx), workers);
    for (auto& mr : bundle.methods) {
      auto it = rec.find(mr.method);
      if (it == rec.end()) continue;
      const auto& s = it->second;
      mr.recovery = RecoveryReport{s.tpr, s.fpr, s.fdr, s.for_, s.replicates, s.failures};
    }
    Json manifest = simulation_manifest(spec);
    std::vector<std::string> names;
    for (Index j : spec.truth) names.push_back(data.feature_meta()[j].name);
    manifest["truth_names"] = names;
    bundle.simulation = manifest;
  }
  bundle.provenance.timestamps["finished"] = detail::utc_now();
  return bundle;
}

}  // namespace fsbench

#pragma once

#include "fsbench/common.hpp"
#include "fsbench/simulation.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

namespace nlohmann {

template <typename T>
struct adl_serializer<std::optional<T>> {
  static void to_json(json& j, const std::optional<T>& v) {
    if (v) j = *v;
    else j = nullptr;
  }
  static void from_json(const json& j, std::optional<T>& v) {
    if (j.is_null()) v.reset();
    else v = j.get<T>();
  }
};

}  // namespace nlohmann

namespace fsbench {

using Json = nlohmann::json;
using MaybeReal = std::optional<double>;

/// Scores of one (method, classifier) pair. Metric maps are keyed by metric
/// name; `corrected` holds every correction method per metric.
struct CellReport {
  std::string method;
  std::string classifier;
  bool control = false;
  std::optional<std::string> error;
  std::size_t failed_resamples = 0;
  std::map<std::string, MaybeReal> apparent;
  std::map<std::string, MaybeReal> theta_out;
  std::map<std::string, MaybeReal> gamma;
  std::map<std::string, std::map<std::string, MaybeReal>> corrected;

  bool operator==(const CellReport&) const = default;
};

struct RecoveryReport {
  MeanSd tpr, fpr, fdr, for_;
  std::size_t replicates = 0;
  std::size_t failures = 0;

  bool operator==(const RecoveryReport&) const = default;
};

struct MethodReport {
  std::string method;
  std::string id;
  bool control = false;
  std::string mode;
  MaybeReal stability;
  MeanSd size;
  std::vector<MaybeReal> sizes;  // per resample; null when the FS step failed
  std::vector<double> frequencies;
  IndexList apparent_selection;
  std::size_t failed_resamples = 0;
  std::vector<std::string> errors;
  std::optional<std::string> best_classifier;
  std::vector<double> instability;
  std::optional<RecoveryReport> recovery;

  bool operator==(const MethodReport&) const = default;
};

struct FeatureReport {
  std::string name;
  std::map<std::string, double> frequency;
  int high_confidence = 0;

  bool operator==(const FeatureReport&) const = default;
};

struct Settings {
  std::size_t B = 0;
  std::string resample;
  double ratio = 1.0;
  std::string oc_method;
  std::size_t k = 0;
  double high_confidence = 0.5;
  double threshold = 0.5;
  std::size_t n = 0;
  std::size_t p_input = 0;
  std::size_t p_used = 0;

  bool operator==(const Settings&) const = default;
};

struct Provenance {
  std::string config_hash;
  std::string data_hash;
  std::uint64_t seed = 0;
  std::string version;
  std::map<std::string, std::string> timestamps;

  bool operator==(const Provenance&) const = default;
};

struct ReportBundle {
  Settings settings;
  std::vector<CellReport> cells;
  std::vector<MethodReport> methods;
  std::vector<FeatureReport> features;
  std::vector<std::string> vif_removed;
  std::optional<Json> simulation;
  std::map<std::string, MeanSd> timing;  // FS-step seconds per method
  Provenance provenance;
  std::vector<std::string> warnings;

  bool operator==(const ReportBundle&) const = default;

  const CellReport* cell(const std::string& method, const std::string& classifier) const {
    for (const auto& c : cells)
      if (c.method == method && c.classifier == classifier) return &c;
    return nullptr;
  }
  const MethodReport* method(const std::string& name) const {
    for (const auto& m : methods)
      if (m.method == name) return &m;
    return nullptr;
  }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(MeanSd, mean, sd)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(CellReport, method, classifier, control, error, failed_resamples, apparent, theta_out,
                                   gamma, corrected)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(RecoveryReport, tpr, fpr, fdr, for_, replicates, failures)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(MethodReport, method, id, control, mode, stability, size, sizes, frequencies,
                                   apparent_selection, failed_resamples, errors, best_classifier, instability, recovery)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(FeatureReport, name, frequency, high_confidence)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(Settings, B, resample, ratio, oc_method, k, high_confidence, threshold, n, p_input, p_used)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(Provenance, config_hash, data_hash, seed, version, timestamps)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ReportBundle, settings, cells, methods, features, vif_removed, simulation, timing,
                                   provenance, warnings)

/// Canonical JSON text: sorted keys, two-space indent, shortest round-trip
/// doubles, null for missing values.
inline std::string to_canonical_json(const ReportBundle& b) { return Json(b).dump(2) + "\n"; }

inline ReportBundle bundle_from_json(const Json& j) {
  try {
    return j.get<ReportBundle>();
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed report bundle: ") + e.what());
  }
}

inline ReportBundle bundle_from_text(const std::string& text) {
  try {
    return bundle_from_json(Json::parse(text));
  } catch (const Json::parse_error& e) {
    throw DataError(std::string("report bundle is not valid JSON: ") + e.what());
  }
}

/// Copy of the bundle JSON without run-time-dependent fields (FS timings and
/// timestamps); equal for repeated runs of the same configuration.
inline Json deterministic_view(Json j) {
  j.erase("timing");
  if (j.contains("provenance")) j["provenance"].erase("timestamps");
  return j;
}

namespace detail {

inline std::string fmt(const MaybeReal& v, int digits = 3) {
  if (!v || !std::isfinite(*v)) return "NA";
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << *v;
  return os.str();
}

inline std::string fmt_pm(const MeanSd& v, int digits = 2) { return fmt(v.mean, digits) + " ± " + fmt(v.sd, digits); }

inline MaybeReal corrected_value(const CellReport& c, const std::string& metric, const std::string& oc) {
  auto it = c.corrected.find(metric);
  if (it == c.corrected.end()) return std::nullopt;
  auto jt = it->second.find(oc);
  return jt == it->second.end() ? std::nullopt : jt->second;
}

}  // namespace detail

/// Human-readable summary: one performance row per (method, classifier)
/// including control rows, stability vs AUC, feature frequencies,
/// per-row instability and the VIF prefilter outcome.
inline std::string render_markdown(const ReportBundle& b) {
  using detail::fmt;
  const auto& oc = b.settings.oc_method;
  const bool recovery = std::any_of(b.methods.begin(), b.methods.end(), [](const MethodReport& m) { return m.recovery.has_value(); });
  std::ostringstream md;
  md << "# Feature-selection benchmark\n\n";
  md << "- rows: " << b.settings.n << ", features: " << b.settings.p_used << " (of " << b.settings.p_input << ")\n";
  md << "- resamples: " << b.settings.B << " " << b.settings.resample << ", correction: " << oc << "\n";
  md << "- seed: " << b.provenance.seed << ", config hash: " << b.provenance.config_hash << "\n\n";

  md << "## Performance\n\n";
  md << "| method | classifier | AUC | accuracy | sensitivity | specificity | PPV | NPV | stability | size | FS runtime (s) |";
  if (recovery) md << " TPR | FPR | FDR | FOR |";
  md << "\n|---|---|---|---|---|---|---|---|---|---|---|";
  if (recovery) md << "---|---|---|---|";
  md << "\n";
  for (const auto& c : b.cells) {
    const auto* m = b.method(c.method);
    md << "| " << c.method << (c.control ? " (control)" : "") << " | " << c.classifier << " |";
    for (const char* metric : {"auc", "accuracy", "sensitivity", "specificity", "ppv", "npv"})
      md << " " << (c.error ? "failed" : fmt(detail::corrected_value(c, metric, oc))) << " |";
    md << " " << (m ? fmt(m->stability, 2) : "NA") << " | " << (m ? detail::fmt_pm(m->size, 1) : "NA") << " |";
    auto t = b.timing.find(c.method);
    md << " " << (t != b.timing.end() ? detail::fmt_pm(t->second, 4) : "NA") << " |";
    if (recovery) {
      if (m && m->recovery)
        md << " " << detail::fmt_pm(m->recovery->tpr) << " | " << detail::fmt_pm(m->recovery->fpr) << " | "
           << detail::fmt_pm(m->recovery->fdr) << " | " << detail::fmt_pm(m->recovery->for_) << " |";
      else
        md << " NA | NA | NA | NA |";
    }
    md << "\n";
  }

  md << "\n## Stability vs AUC\n\n| method | best classifier | AUC | stability |\n|---|---|---|---|\n";
  for (const auto& m : b.methods) {
    MaybeReal auc;
    if (m.best_classifier)
      if (const auto* c = b.cell(m.method, *m.best_classifier)) auc = detail::corrected_value(*c, "auc", oc);
    md << "| " << m.method << " | " << m.best_classifier.value_or("NA") << " | " << fmt(auc) << " | " << fmt(m.stability, 2)
       << " |\n";
  }

  std::vector<std::string> fs_methods;
  for (const auto& m : b.methods)
    if (!m.control) fs_methods.push_back(m.method);
  md << "\n## Feature selection frequencies\n\n| feature |";
  for (const auto& name : fs_methods) md << " " << name << " |";
  md << " high-confidence methods |\n|---|";
  for (std::size_t i = 0; i < fs_methods.size(); ++i) md << "---|";
  md << "---|\n";
  for (const auto& f : b.features) {
    md << "| " << f.name << " |";
    for (const auto& name : fs_methods) {
      auto it = f.frequency.find(name);
      md << " " << (it == f.frequency.end() ? "NA" : fmt(it->second, 2)) << " |";
    }
    md << " " << f.high_confidence << " |\n";
  }

  md << "\n## Instability index\n\n| method | classifier | mean | rows > 0.1 | rows > 0.3 |\n|---|---|---|---|---|\n";
  for (const auto& m : b.methods) {
    if (m.instability.empty()) continue;
    const auto n = static_cast<double>(m.instability.size());
    const auto above = [&](double t) {
      return static_cast<double>(std::count_if(m.instability.begin(), m.instability.end(), [t](double v) { return v > t; })) / n;
    };
    md << "| " << m.method << " | " << m.best_classifier.value_or("NA") << " | " << fmt(mean_of(m.instability)) << " | "
       << fmt(100.0 * above(0.1), 1) << "% | " << fmt(100.0 * above(0.3), 1) << "% |\n";
  }

  if (!b.vif_removed.empty()) {
    md << "\n## VIF prefilter\n\nRemoved:";
    for (const auto& f : b.vif_removed) md << " " << f;
    md << "\n";
  }
  if (!b.warnings.empty()) {
    md << "\n## Warnings\n\n";
    for (const auto& w : b.warnings) md << "- " << w << "\n";
  }
  return md.str();
}

enum class ReportFormat { json, markdown, both };

/// Writes report.json and/or report.md into out_dir (created if needed).
inline std::vector<std::filesystem::path> generate_report(const ReportBundle& b, ReportFormat format,
                                                          const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error("cannot create output directory '" + out_dir.string() + "': " + ec.message());
  std::vector<std::filesystem::path> written;
  auto write = [&](const std::string& name, const std::string& text) {
    const auto path = out_dir / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw Error("failed while writing '" + path.string() + "'");
    written.push_back(path);
  };
  if (format != ReportFormat::markdown) write("report.json", to_canonical_json(b));
  if (format != ReportFormat::json) write("report.md", render_markdown(b));
  return written;
}

}  // namespace fsbench

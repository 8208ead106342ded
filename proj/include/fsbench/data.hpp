#pragma once

#include "fsbench/common.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_set>

namespace fsbench {

enum class FeatureKind { continuous, categorical };

inline const char* to_string(FeatureKind k) {
  return k == FeatureKind::continuous ? "continuous" : "categorical";
}

struct FeatureMeta {
  std::string name;
  FeatureKind kind = FeatureKind::continuous;
};

using MissingMask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Tabular binary-classification dataset with an explicit missing mask.
///
/// Entries of `features()` under a set mask bit are meaningless (stored as 0).
/// Immutable after construction; safe to share across threads.
class Dataset {
 public:
  Dataset(Matrix features, MissingMask missing, std::vector<FeatureMeta> meta, Labels outcome)
      : x_(std::move(features)), missing_(std::move(missing)), meta_(std::move(meta)), y_(std::move(outcome)) {
    if (x_.rows() < 2) throw DataError("dataset needs at least 2 rows");
    if (x_.cols() < 1) throw DataError("dataset needs at least 1 feature");
    if (static_cast<Eigen::Index>(y_.size()) != x_.rows()) throw DataError("outcome length differs from row count");
    if (static_cast<Eigen::Index>(meta_.size()) != x_.cols()) throw DataError("feature metadata length differs from column count");
    if (missing_.rows() != x_.rows() || missing_.cols() != x_.cols())
      throw DataError("missing mask shape differs from feature matrix");
    for (int v : y_)
      if (v != 0 && v != 1) throw DataError("outcome must be coded 0/1");
    require_two_classes(y_, "dataset");
    for (Eigen::Index j = 0; j < x_.cols(); ++j)
      for (Eigen::Index i = 0; i < x_.rows(); ++i)
        if (missing_(i, j)) x_(i, j) = 0.0;
  }

  // Convenience for fully observed data.
  Dataset(Matrix features, std::vector<FeatureMeta> meta, Labels outcome)
      : Dataset(features, MissingMask::Constant(features.rows(), features.cols(), false), std::move(meta),
                std::move(outcome)) {}

  std::size_t n() const { return static_cast<std::size_t>(x_.rows()); }
  std::size_t p() const { return static_cast<std::size_t>(x_.cols()); }
  const Matrix& features() const { return x_; }
  const MissingMask& missing() const { return missing_; }
  const std::vector<FeatureMeta>& feature_meta() const { return meta_; }
  const Labels& outcome() const { return y_; }

  double missing_fraction() const {
    return static_cast<double>(missing_.count()) / static_cast<double>(missing_.size());
  }

  std::vector<std::string> feature_names() const {
    std::vector<std::string> names;
    names.reserve(meta_.size());
    for (const auto& m : meta_) names.push_back(m.name);
    return names;
  }

  std::optional<Index> find_feature(const std::string& name) const {
    for (Index j = 0; j < meta_.size(); ++j)
      if (meta_[j].name == name) return j;
    return std::nullopt;
  }

  Dataset with_columns(std::span<const Index> cols) const {
    MissingMask m(x_.rows(), static_cast<Eigen::Index>(cols.size()));
    std::vector<FeatureMeta> meta;
    for (std::size_t c = 0; c < cols.size(); ++c) {
      m.col(static_cast<Eigen::Index>(c)) = missing_.col(static_cast<Eigen::Index>(cols[c]));
      meta.push_back(meta_[cols[c]]);
    }
    return Dataset(select_columns(x_, cols), std::move(m), std::move(meta), y_);
  }

  Dataset with_outcome(Labels y) const { return Dataset(x_, missing_, meta_, std::move(y)); }

 private:
  Matrix x_;
  MissingMask missing_;
  std::vector<FeatureMeta> meta_;
  Labels y_;
};

// ---------------------------------------------------------------------------
// CSV loading

struct CsvOptions {
  std::vector<std::string> missing_sentinels{"", "NA", "NaN"};
  std::size_t max_categories = 10;
  std::map<std::string, FeatureKind> schema_hints;
  char delimiter = ',';
};

namespace detail {

// RFC-4180 records: quoted fields may contain delimiters, doubled quotes and
// line breaks. Trailing CR is dropped.
inline std::vector<std::vector<std::string>> parse_csv(std::istream& in, char delim) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, field_started = false, any = false;
  char c;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    if (!(row.size() == 1 && row[0].empty())) rows.push_back(std::move(row));
    row.clear();
  };
  while (in.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == delim) {
      end_field();
    } else if (c == '\n') {
      end_row();
    } else if (c == '\r') {
      // swallowed; CRLF handled by the following '\n'
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (quoted) throw DataError("csv: unterminated quoted field");
  if (any && (field_started || !row.empty() || !field.empty())) end_row();
  return rows;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

inline std::optional<double> parse_number(const std::string& raw) {
  const std::string s = trim(raw);
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace detail

/// Parses CSV text into a Dataset. `target` names the outcome column.
///
/// The outcome must take exactly two distinct values. Values already in {0,1}
/// are kept; any other pair maps the smaller (numeric order if both parse,
/// otherwise lexicographic) to 0.
inline Dataset parse_dataset(std::istream& in, const std::string& target, const CsvOptions& opt = {}) {
  auto rows = detail::parse_csv(in, opt.delimiter);
  if (rows.empty()) throw DataError("csv: missing header row");
  const auto header = rows.front();
  {
    std::set<std::string> seen;
    for (const auto& h : header)
      if (!seen.insert(h).second) throw DataError("csv: duplicate column name '" + h + "'");
  }
  const auto tpos = std::find(header.begin(), header.end(), target);
  if (tpos == header.end()) throw DataError("csv: target column '" + target + "' not found");
  const std::size_t tcol = static_cast<std::size_t>(tpos - header.begin());
  const std::size_t n = rows.size() - 1;
  for (std::size_t r = 1; r < rows.size(); ++r)
    if (rows[r].size() != header.size())
      throw DataError("csv: row " + std::to_string(r + 1) + " has " + std::to_string(rows[r].size()) +
                      " fields, header has " + std::to_string(header.size()));

  const std::unordered_set<std::string> sentinels(opt.missing_sentinels.begin(), opt.missing_sentinels.end());
  auto is_missing = [&](const std::string& s) { return sentinels.count(s) > 0 || sentinels.count(detail::trim(s)) > 0; };

  // Outcome
  std::vector<std::string> raw_y;
  raw_y.reserve(n);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (is_missing(rows[r][tcol])) throw DataError("csv: missing outcome in row " + std::to_string(r + 1));
    raw_y.push_back(detail::trim(rows[r][tcol]));
  }
  Labels y(n);
  {
    std::vector<std::string> distinct(raw_y.begin(), raw_y.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() == 1) throw DataError("single-class outcome in column '" + target + "'");
    if (distinct.size() > 2)
      throw DataError("csv: target column '" + target + "' is not binary (" + std::to_string(distinct.size()) +
                      " distinct values)");
    const auto a = detail::parse_number(distinct[0]);
    const auto b = detail::parse_number(distinct[1]);
    std::string low = distinct[0];
    if (a && b) {
      // numeric ordering; {0,1} is the common case
      low = (*a < *b) ? distinct[0] : distinct[1];
    }
    for (std::size_t i = 0; i < n; ++i) y[i] = raw_y[i] == low ? 0 : 1;
  }

  const std::size_t p = header.size() - 1;
  if (p == 0) throw DataError("csv: no feature columns");
  Matrix x = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  MissingMask miss = MissingMask::Constant(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p), false);
  std::vector<FeatureMeta> meta;
  meta.reserve(p);
  Eigen::Index j = 0;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == tcol) continue;
    std::set<double> distinct;
    std::size_t parsed = 0;
    for (std::size_t r = 1; r < rows.size(); ++r) {
      const auto& cell = rows[r][c];
      std::optional<double> v;
      if (!is_missing(cell)) v = detail::parse_number(cell);
      const auto i = static_cast<Eigen::Index>(r - 1);
      if (v) {
        x(i, j) = *v;
        ++parsed;
        if (distinct.size() <= opt.max_categories) distinct.insert(*v);
      } else {
        miss(i, j) = true;
      }
    }
    if (parsed == 0) throw DataError("csv: column '" + header[c] + "' has no parseable values");
    FeatureKind kind = distinct.size() <= opt.max_categories ? FeatureKind::categorical : FeatureKind::continuous;
    if (auto h = opt.schema_hints.find(header[c]); h != opt.schema_hints.end()) kind = h->second;
    meta.push_back({header[c], kind});
    ++j;
  }
  return Dataset(std::move(x), std::move(miss), std::move(meta), std::move(y));
}

inline Dataset load_csv(const std::string& path, const std::string& target, const CsvOptions& opt = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  return parse_dataset(in, target, opt);
}

// ---------------------------------------------------------------------------
// Preprocessing: imputation then z-scoring, fitted on training rows only.

struct PreprocessState {
  std::vector<double> impute;     // median (continuous) or mode (categorical)
  std::vector<double> center;     // mean after imputation
  std::vector<double> scale;      // population SD after imputation; 1 for constant features
  std::vector<bool> constant;     // flagged when SD is numerically zero
  std::vector<FeatureKind> kinds;

  std::size_t p() const { return impute.size(); }
};

namespace detail {

inline double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size();
  return (m % 2 == 1) ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

// Most frequent value; ties go to the smallest value.
inline double mode_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double best = v.front();
  std::size_t best_count = 0;
  for (std::size_t i = 0; i < v.size();) {
    std::size_t k = i;
    while (k < v.size() && v[k] == v[i]) ++k;
    if (k - i > best_count) {
      best_count = k - i;
      best = v[i];
    }
    i = k;
  }
  return best;
}

}  // namespace detail

/// Fits imputation values and z-score parameters on `rows` (a multiset;
/// repeated bootstrap rows count with multiplicity).
inline PreprocessState fit_preprocess(const Dataset& data, std::span<const Index> rows) {
  if (rows.empty()) throw DataError("fit_preprocess: empty row set");
  const auto& x = data.features();
  const auto& miss = data.missing();
  PreprocessState st;
  const std::size_t p = data.p();
  st.impute.resize(p);
  st.center.resize(p);
  st.scale.resize(p);
  st.constant.resize(p);
  st.kinds.resize(p);
  std::vector<double> obs;
  for (std::size_t j = 0; j < p; ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    obs.clear();
    for (Index r : rows)
      if (!miss(static_cast<Eigen::Index>(r), jj)) obs.push_back(x(static_cast<Eigen::Index>(r), jj));
    const auto& meta = data.feature_meta()[j];
    if (obs.empty()) throw DataError("feature '" + meta.name + "' is missing in all training rows");
    st.kinds[j] = meta.kind;
    st.impute[j] = meta.kind == FeatureKind::categorical ? detail::mode_of(obs) : detail::median_of(obs);

    double sum = 0.0;
    for (Index r : rows) {
      const auto i = static_cast<Eigen::Index>(r);
      sum += miss(i, jj) ? st.impute[j] : x(i, jj);
    }
    const double mean = sum / static_cast<double>(rows.size());
    double ss = 0.0;
    for (Index r : rows) {
      const auto i = static_cast<Eigen::Index>(r);
      const double v = (miss(i, jj) ? st.impute[j] : x(i, jj)) - mean;
      ss += v * v;
    }
    const double sd = std::sqrt(ss / static_cast<double>(rows.size()));
    st.center[j] = mean;
    st.constant[j] = !(sd > 1e-12 * std::max(1.0, std::abs(mean)));
    st.scale[j] = st.constant[j] ? 1.0 : sd;
  }
  return st;
}

inline PreprocessState fit_preprocess(const Dataset& data) {
  const auto all = iota_indices(data.n());
  return fit_preprocess(data, all);
}

/// Imputes and standardises `rows` of `data` with a previously fitted state.
inline Matrix apply_preprocess(const PreprocessState& st, const Dataset& data, std::span<const Index> rows) {
  if (st.p() != data.p()) throw DataError("apply_preprocess: schema mismatch (feature count differs)");
  for (std::size_t j = 0; j < st.p(); ++j)
    if (st.kinds[j] != data.feature_meta()[j].kind) throw DataError("apply_preprocess: schema mismatch (feature kind differs)");
  const auto& x = data.features();
  const auto& miss = data.missing();
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(st.p()));
  for (std::size_t j = 0; j < st.p(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const auto i = static_cast<Eigen::Index>(rows[r]);
      const double v = miss(i, jj) ? st.impute[j] : x(i, jj);
      out(static_cast<Eigen::Index>(r), jj) = st.constant[j] ? 0.0 : (v - st.center[j]) / st.scale[j];
    }
  }
  return out;
}

inline Matrix apply_preprocess(const PreprocessState& st, const Dataset& data) {
  const auto all = iota_indices(data.n());
  return apply_preprocess(st, data, all);
}

// ---------------------------------------------------------------------------
// Resampling

enum class ResampleKind { bootstrap, subsample };

inline const char* to_string(ResampleKind k) { return k == ResampleKind::bootstrap ? "bootstrap" : "subsample"; }

struct Resample {
  ResampleKind kind = ResampleKind::bootstrap;
  IndexList in_indices;   // multiset for bootstrap
  IndexList oob_indices;  // ascending
  std::uint64_t seed = 0;
  std::size_t ordinal = 1;
};

inline constexpr int kMaxResampleRetries = 100;

/// Draws one resample from its own child seed. Redraws until the training
/// rows contain both classes.
inline Resample make_resample(const Labels& y, ResampleKind kind, double ratio, std::uint64_t seed, std::size_t ordinal) {
  const std::size_t n = y.size();
  Resample rs;
  rs.kind = kind;
  rs.seed = child_seed(seed, ordinal);
  rs.ordinal = ordinal;
  Rng rng(rs.seed);
  for (int attempt = 0; attempt < kMaxResampleRetries; ++attempt) {
    rs.in_indices.clear();
    if (kind == ResampleKind::bootstrap) {
      rs.in_indices.resize(n);
      for (auto& r : rs.in_indices) r = static_cast<Index>(rng.below(n));
    } else {
      const auto m = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
      IndexList perm = iota_indices(n);
      // partial Fisher-Yates
      for (std::size_t i = 0; i < m; ++i) std::swap(perm[i], perm[i + rng.below(n - i)]);
      rs.in_indices.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(m));
      std::sort(rs.in_indices.begin(), rs.in_indices.end());
    }
    bool has0 = false, has1 = false;
    for (Index r : rs.in_indices) (y[r] == 1 ? has1 : has0) = true;
    if (has0 && has1) {
      std::vector<bool> used(n, false);
      for (Index r : rs.in_indices) used[r] = true;
      rs.oob_indices.clear();
      for (Index i = 0; i < n; ++i)
        if (!used[i]) rs.oob_indices.push_back(i);
      return rs;
    }
  }
  throw DataError("make_resamples: could not draw a two-class resample after " + std::to_string(kMaxResampleRetries) +
                  " attempts");
}

inline std::vector<Resample> make_resamples(const Labels& y, std::size_t B, ResampleKind kind, double ratio,
                                            std::uint64_t seed) {
  if (B < 1) throw std::invalid_argument("make_resamples: B must be >= 1");
  if (kind == ResampleKind::subsample && !(ratio > 0.0 && ratio <= 1.0))
    throw std::invalid_argument("make_resamples: subsample ratio must lie in (0, 1]");
  std::vector<Resample> out;
  out.reserve(B);
  for (std::size_t b = 1; b <= B; ++b) out.push_back(make_resample(y, kind, ratio, seed, b));
  return out;
}

inline std::vector<Resample> make_resamples(const Dataset& data, std::size_t B, ResampleKind kind, double ratio,
                                            std::uint64_t seed) {
  return make_resamples(data.outcome(), B, kind, ratio, seed);
}

}  // namespace fsbench

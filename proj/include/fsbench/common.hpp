#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fsbench {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = std::size_t;
using IndexList = std::vector<Index>;
using Labels = std::vector<int>;

// Base for all library errors. The CLI maps DataError to exit code 2 and
// everything else to 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class FitError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Seeds and random draws.
//
// Every stochastic step owns a 64-bit seed derived from its parent, so results
// never depend on the order in which independent units are executed. The
// draw helpers below are written out instead of using <random> distributions,
// whose output is implementation-defined.

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Child seed for resample / replicate `ordinal`.
inline constexpr std::uint64_t child_seed(std::uint64_t seed, std::uint64_t ordinal) noexcept {
  return seed ^ ordinal;
}

// Seed for an independent named sub-stream (method index, fold split, ...).
inline constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) noexcept {
  return splitmix64(seed ^ splitmix64(tag + 0x632BE59BD9B4E019ULL));
}

inline constexpr std::uint64_t hash_tag(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept : state_(splitmix64(seed)) {}

  std::uint64_t next() noexcept {
    // xorshift64* over a splitmix-initialised state
    state_ ^= state_ >> 12;
    state_ ^= state_ << 25;
    state_ ^= state_ >> 27;
    return state_ * 0x2545F4914F6CDD1DULL;
  }

  // Uniform on [0, 1).
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform integer on [0, bound), unbiased.
  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("Rng::below: empty range");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t r;
    do {
      r = next();
    } while (r >= limit);
    return r % bound;
  }

  // Standard normal via Box-Muller, caching the second draw.
  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// ---------------------------------------------------------------------------
// Small shared helpers.

inline Matrix select_columns(const Matrix& x, std::span<const Index> cols) {
  Matrix out(x.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = x.col(static_cast<Eigen::Index>(cols[c]));
  return out;
}

inline Matrix select_rows(const Matrix& x, std::span<const Index> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(rows[r]));
  return out;
}

inline Labels select_labels(const Labels& y, std::span<const Index> rows) {
  Labels out;
  out.reserve(rows.size());
  for (Index r : rows) out.push_back(y[r]);
  return out;
}

inline IndexList iota_indices(std::size_t n) {
  IndexList v(n);
  std::iota(v.begin(), v.end(), Index{0});
  return v;
}

inline std::size_t count_positive(const Labels& y) {
  return static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
}

inline bool has_both_classes(const Labels& y) {
  const auto pos = count_positive(y);
  return pos > 0 && pos < y.size();
}

inline void require_two_classes(const Labels& y, const char* where) {
  if (!has_both_classes(y)) throw DataError(std::string(where) + ": single-class outcome");
}

// Indices ordered by descending score; equal scores keep ascending index.
inline IndexList rank_descending(std::span<const double> scores) {
  IndexList order = iota_indices(scores.size());
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return scores[a] > scores[b]; });
  return order;
}

inline double mean_of(std::span<const double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Sample standard deviation (n - 1); zero for fewer than two values.
inline double sd_of(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

inline double sigmoid(double t) noexcept {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// Stratified assignment of rows to `folds` folds. Each class is shuffled
// independently and dealt round-robin, so every fold gets both classes
// whenever each class has at least `folds` members.
inline std::vector<int> stratified_folds(const Labels& y, int folds, std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("stratified_folds: folds must be >= 2");
  std::vector<int> fold_of(y.size(), 0);
  Rng rng(seed);
  int next = 0;
  for (int cls : {0, 1}) {
    IndexList members;
    for (Index i = 0; i < y.size(); ++i)
      if (y[i] == cls) members.push_back(i);
    if (members.size() < static_cast<std::size_t>(folds))
      throw DataError("stratified_folds: class " + std::to_string(cls) + " has fewer rows than folds");
    rng.shuffle(members);
    for (Index r : members) {
      fold_of[r] = next;
      next = (next + 1) % folds;
    }
  }
  return fold_of;
}

}  // namespace fsbench

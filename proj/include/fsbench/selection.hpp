#pragma once

#include "fsbench/common.hpp"

#include <map>
#include <set>
#include <string>

namespace fsbench {

enum class SelectionMode { fixed_k, thresholded };

inline const char* to_string(SelectionMode m) { return m == SelectionMode::fixed_k ? "fixed_k" : "thresholded"; }

struct FeatureScores {
  std::string method;
  std::vector<double> scores;
  bool higher_is_better = true;
};

struct SelectionResult {
  std::string method;
  IndexList selected;  // unique, in selection/rank order
  SelectionMode mode = SelectionMode::fixed_k;
  // Per-feature or per-step numbers (p-values, scores, frequencies, ...).
  std::map<std::string, std::vector<double>> diagnostics;
  std::vector<std::string> warnings;

  std::size_t k() const { return selected.size(); }

  IndexList sorted() const {
    IndexList s = selected;
    std::sort(s.begin(), s.end());
    return s;
  }
};

/// The k best features by score, ties broken towards the lower index.
inline SelectionResult select_top_k(const FeatureScores& fs, std::size_t k) {
  if (k < 1) throw std::invalid_argument("select_top_k: k must be >= 1");
  std::vector<double> key = fs.scores;
  if (!fs.higher_is_better)
    for (auto& v : key) v = -v;
  const IndexList order = rank_descending(key);
  SelectionResult r;
  r.method = fs.method;
  r.mode = SelectionMode::fixed_k;
  if (k > order.size()) r.warnings.push_back("requested k exceeds feature count; selecting all");
  r.selected.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(std::min(k, order.size())));
  r.diagnostics["scores"] = fs.scores;
  return r;
}

struct SizeRange {
  std::size_t lo = 1;
  std::size_t hi = 1;
};

/// Uniform random subset of `pool`. A range draws k uniformly from
/// [lo, hi] first.
inline SelectionResult random_select(std::span<const Index> pool, SizeRange k, std::uint64_t seed) {
  if (k.lo > k.hi) throw std::invalid_argument("random_select: empty size range");
  if (k.hi > pool.size()) throw std::invalid_argument("random_select: k exceeds pool size");
  Rng rng(seed);
  const std::size_t size = k.lo == k.hi ? k.lo : k.lo + static_cast<std::size_t>(rng.below(k.hi - k.lo + 1));
  IndexList perm(pool.begin(), pool.end());
  for (std::size_t i = 0; i < size; ++i) std::swap(perm[i], perm[i + rng.below(perm.size() - i)]);
  SelectionResult r;
  r.method = "random";
  r.mode = SelectionMode::fixed_k;
  r.selected.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(size));
  return r;
}

inline SelectionResult random_select(std::size_t p, SizeRange k, std::uint64_t seed) {
  const IndexList pool = iota_indices(p);
  return random_select(pool, k, seed);
}

inline SelectionResult random_select(std::size_t p, std::size_t k, std::uint64_t seed) {
  return random_select(p, SizeRange{k, k}, seed);
}

}  // namespace fsbench

#pragma once

#include "fsbench/common.hpp"

#include <map>

namespace fsbench {

inline constexpr double kVifCap = 1e12;
inline constexpr double kMaxR2 = 1.0 - 1e-12;

struct VifValue {
  double vif = 1.0;
  double r2 = 0.0;
  bool constant = false;  // column j has no variance; VIF defined as 1
};

struct VifRemoval {
  Index feature = 0;
  double vif = 0.0;
};

struct VifReport {
  IndexList surviving;  // ascending original indices
  std::vector<VifRemoval> removal_trace;
  std::map<Index, double> final_vifs;
  std::map<Index, double> final_r2;
};

/// VIF of column `j` against the columns listed in `others` (plus intercept).
///
/// The regression uses a complete orthogonal decomposition, so rank-deficient
/// designs get the minimum-norm solution. R^2 is clamped to [0, 1 - 1e-12].
inline VifValue compute_vif(const Matrix& x, Index j, std::span<const Index> others) {
  const Eigen::Index n = x.rows();
  const Vector target = x.col(static_cast<Eigen::Index>(j));
  const double mean = target.mean();
  const double sst = (target.array() - mean).square().sum();
  VifValue out;
  if (!(sst > 1e-24 * std::max(1.0, static_cast<double>(n) * mean * mean))) {
    out.constant = true;
    return out;
  }
  Matrix design(n, static_cast<Eigen::Index>(others.size()) + 1);
  design.col(0).setOnes();
  for (std::size_t c = 0; c < others.size(); ++c)
    design.col(static_cast<Eigen::Index>(c) + 1) = x.col(static_cast<Eigen::Index>(others[c]));
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(design);
  const Vector coef = cod.solve(target);
  const double sse = (target - design * coef).squaredNorm();
  out.r2 = std::clamp(1.0 - sse / sst, 0.0, kMaxR2);
  out.vif = std::min(1.0 / (1.0 - out.r2), kVifCap);
  return out;
}

/// VIF of column `j` against every other column of `x`.
inline VifValue compute_vif(const Matrix& x, Index j) {
  if (x.cols() < 2) throw std::invalid_argument("compute_vif: need at least 2 columns");
  IndexList others;
  for (Index c = 0; c < static_cast<Index>(x.cols()); ++c)
    if (c != j) others.push_back(c);
  return compute_vif(x, j, others);
}

/// Repeatedly drops the feature with the largest VIF (lowest index on ties)
/// until every remaining VIF is <= threshold or one feature is left.
inline VifReport iterative_vif_filter(const Matrix& x, double threshold = 5.0) {
  if (!(threshold > 1.0)) throw std::invalid_argument("iterative_vif_filter: threshold must exceed 1");
  VifReport rep;
  IndexList alive = iota_indices(static_cast<std::size_t>(x.cols()));
  std::vector<VifValue> vifs;
  while (true) {
    vifs.clear();
    if (alive.size() == 1) {
      vifs.push_back(VifValue{});
    } else {
      for (Index a = 0; a < alive.size(); ++a) {
        IndexList others;
        others.reserve(alive.size() - 1);
        for (Index b = 0; b < alive.size(); ++b)
          if (b != a) others.push_back(alive[b]);
        vifs.push_back(compute_vif(x, alive[a], others));
      }
    }
    std::size_t worst = 0;
    for (std::size_t a = 1; a < vifs.size(); ++a)
      if (vifs[a].vif > vifs[worst].vif) worst = a;
    if (alive.size() == 1 || vifs[worst].vif <= threshold) break;
    rep.removal_trace.push_back({alive[worst], vifs[worst].vif});
    alive.erase(alive.begin() + static_cast<std::ptrdiff_t>(worst));
  }
  rep.surviving = alive;
  for (std::size_t a = 0; a < alive.size(); ++a) {
    rep.final_vifs[alive[a]] = vifs[a].vif;
    rep.final_r2[alive[a]] = vifs[a].r2;
  }
  return rep;
}

}  // namespace fsbench

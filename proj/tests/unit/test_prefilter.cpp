#include "fsbench/data.hpp"
#include "fsbench/prefilter.hpp"

#include <catch_amalgamated.hpp>

#include "oracles.hpp"
#include "planted.hpp"

#include <algorithm>
#include <numeric>

using namespace fsbench;

TEST_CASE("orthogonal columns have VIF 1", "[prefilter]") {
  Matrix x(4, 2);
  x << 1, 1, -1, 1, 1, -1, -1, -1;
  CHECK(compute_vif(x, 0).vif == Catch::Approx(1.0).margin(1e-12));
  CHECK(compute_vif(x, 1).vif == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("VIF equals 1 / (1 - R^2)", "[prefilter]") {
  // x0 = x1 + e with var(e) chosen so that R^2 = 0.8 exactly on these rows
  Matrix x(4, 2);
  const double a = 1.0, e = 0.5;  // R^2 = a^2 / (a^2 + e^2) = 0.8
  x << a + e, a, -a + e, -a, a - e, a, -a - e, -a;
  const auto v = compute_vif(x, 0);
  CHECK(v.r2 == Catch::Approx(0.8).epsilon(1e-12));
  CHECK(v.vif == Catch::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("duplicated column hits the VIF cap", "[prefilter]") {
  Rng rng(3);
  Matrix x = testkit::random_normal(30, 3, rng);
  x.col(2) = x.col(0);
  const auto v = compute_vif(x, 0);
  CHECK(v.vif == kVifCap);
  CHECK(v.r2 == kMaxR2);
}

TEST_CASE("constant column is flagged with VIF 1", "[prefilter]") {
  Rng rng(4);
  Matrix x = testkit::random_normal(20, 3, rng);
  x.col(1).setConstant(2.5);
  const auto v = compute_vif(x, 1);
  CHECK(v.constant);
  CHECK(v.vif == 1.0);
}

TEST_CASE("compute_vif matches the normal-equations oracle", "[prefilter][property]") {
  Rng rng(2024);
  for (int rep = 0; rep < 30; ++rep) {
    Matrix x = testkit::random_normal(50, 10, rng);
    x.col(3) += 0.8 * x.col(0) - 0.5 * x.col(7);
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double ours = compute_vif(x, static_cast<Index>(j)).vif;
      const double ref = oracle::vif_normal_equations(x, j);
      CHECK(std::abs(ours - ref) / ref < 1e-6);
    }
  }
}

TEST_CASE("near-orthogonal columns all survive", "[prefilter]") {
  Rng rng(5);
  const Matrix x = testkit::random_normal(200, 3, rng);
  const auto rep = iterative_vif_filter(x, 5.0);
  CHECK(rep.surviving == IndexList{0, 1, 2});
  CHECK(rep.removal_trace.empty());
}

TEST_CASE("near-dependent trio loses its max-VIF member first", "[prefilter]") {
  Rng rng(6);
  Matrix x = testkit::random_normal(100, 5, rng);
  for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, 2) = x(i, 0) + x(i, 1) + 1e-3 * rng.normal();
  IndexList all{0, 1, 2, 3, 4};
  Index worst = 0;
  double worst_v = -1;
  for (Index j : all) {
    const double v = oracle::vif_normal_equations(x, static_cast<Eigen::Index>(j));
    if (v > worst_v) {
      worst_v = v;
      worst = j;
    }
  }
  const auto rep = iterative_vif_filter(x, 5.0);
  REQUIRE(rep.removal_trace.size() == 1);
  CHECK(rep.removal_trace[0].feature == worst);
  CHECK(worst == 2);
  for (const auto& [j, v] : rep.final_vifs) CHECK(v <= 5.0);
}

TEST_CASE("VIF report invariants", "[prefilter][property]") {
  Rng rng(7);
  for (int rep = 0; rep < 10; ++rep) {
    Matrix x = testkit::random_normal(80, 8, rng);
    x.col(1) = 0.9 * x.col(0) + 0.3 * x.col(1);
    x.col(5) = 0.7 * x.col(4) + 0.7 * x.col(3) + 0.2 * x.col(5);
    const auto r = iterative_vif_filter(x, 3.0);
    // recomputed VIFs on survivors stay under the threshold
    const Matrix kept = select_columns(x, r.surviving);
    for (Eigen::Index j = 0; j < kept.cols(); ++j) CHECK(compute_vif(kept, static_cast<Index>(j)).vif <= 3.0 + 1e-6);
    for (const auto& [j, v] : r.final_vifs) CHECK(v == Catch::Approx(1.0 / (1.0 - r.final_r2.at(j))).epsilon(1e-9));
    // each removal was the maximum among the features alive at that step
    IndexList alive = iota_indices(8);
    for (const auto& step : r.removal_trace) {
      for (std::size_t a = 0; a < alive.size(); ++a) {
        IndexList others;
        for (std::size_t b = 0; b < alive.size(); ++b)
          if (b != a) others.push_back(alive[b]);
        CHECK(compute_vif(x, alive[a], others).vif <= step.vif);
      }
      alive.erase(std::find(alive.begin(), alive.end(), step.feature));
    }
  }
}

TEST_CASE("column permutation only relabels the result", "[prefilter][property]") {
  Rng rng(8);
  Matrix x = testkit::random_normal(60, 6, rng);
  x.col(4) = x.col(0) - x.col(2) + 0.05 * x.col(4);
  const auto base = iterative_vif_filter(x, 5.0);
  const IndexList perm{5, 3, 1, 4, 0, 2};
  const Matrix xp = select_columns(x, perm);
  const auto pr = iterative_vif_filter(xp, 5.0);
  IndexList mapped;
  for (Index j : pr.surviving) mapped.push_back(perm[j]);
  std::sort(mapped.begin(), mapped.end());
  CHECK(mapped == base.surviving);
}

TEST_CASE("single feature stops the filter", "[prefilter]") {
  Matrix x(10, 1);
  for (int i = 0; i < 10; ++i) x(i, 0) = i;
  const auto r = iterative_vif_filter(x, 5.0);
  CHECK(r.surviving == IndexList{0});
  CHECK_THROWS(iterative_vif_filter(x, 1.0));
}

TEST_CASE("collinear fixture loses exactly one dependent column", "[prefilter]") {
  const auto d = load_csv(std::string(FSBENCH_FIXTURE_DIR) + "/collinear_toy.csv", "y");
  const Matrix z = apply_preprocess(fit_preprocess(d), d);
  const auto r = iterative_vif_filter(z, 5.0);
  REQUIRE(r.removal_trace.size() == 1);
  CHECK(r.removal_trace[0].feature <= 2);
  for (const auto& [j, v] : r.final_vifs) CHECK(v <= 5.0);
}

#include "fsbench/classifiers.hpp"
#include "fsbench/data.hpp"
#include "fsbench/metrics.hpp"

#include <catch_amalgamated.hpp>

#include "oracles.hpp"
#include "planted.hpp"

#include <cmath>
#include <set>

using namespace fsbench;

namespace {

std::vector<double> random_scores(std::size_t n, Rng& rng, bool ties) {
  std::vector<double> s(n);
  for (auto& v : s) v = ties ? std::floor(rng.uniform() * 6.0) / 6.0 : rng.uniform();
  return s;
}

IndexList random_subset(std::size_t k, std::size_t p, Rng& rng) {
  IndexList all = iota_indices(p);
  for (std::size_t i = 0; i < k; ++i) std::swap(all[i], all[i + rng.below(p - i)]);
  all.resize(k);
  std::sort(all.begin(), all.end());
  return all;
}

}  // namespace

TEST_CASE("binary metrics on a perfect ranking", "[metrics]") {
  const std::vector<double> s{0.9, 0.8, 0.2, 0.1};
  const Labels y{1, 1, 0, 0};
  const auto m = binary_metrics(std::span<const double>(s), y);
  CHECK(m.auc == 1.0);
  CHECK(m.sensitivity == 1.0);
  CHECK(m.specificity == 1.0);
  CHECK(m.accuracy == 1.0);
  CHECK(*m.ppv == 1.0);
  CHECK(*m.npv == 1.0);
}

TEST_CASE("constant scores give AUC one half and undefined NPV", "[metrics]") {
  const std::vector<double> s(6, 0.7);
  const Labels y{1, 0, 1, 0, 0, 1};
  const auto m = binary_metrics(std::span<const double>(s), y);
  CHECK(m.auc == 0.5);
  CHECK_FALSE(m.npv.has_value());
  CHECK(*m.ppv == 0.5);
  CHECK_THROWS(binary_metrics(std::span<const double>(s), Labels(6, 1)));
}

TEST_CASE("AUC equals the pairwise oracle", "[metrics][property]") {
  Rng rng(1);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 2 + rng.below(299);
    const auto s = random_scores(n, rng, rep % 2 == 0);
    Labels y = testkit::random_labels(n, rng, 0.2 + 0.6 * rng.uniform());
    CHECK(std::abs(auc_score(std::span<const double>(s), y) - oracle::pairwise_auc(s, std::vector<int>(y.begin(), y.end()))) <
          1e-12);
  }
}

TEST_CASE("AUC is invariant under increasing transforms", "[metrics][property]") {
  Rng rng(2);
  for (int rep = 0; rep < 20; ++rep) {
    const auto s = random_scores(100, rng, true);
    const Labels y = testkit::random_labels(100, rng);
    std::vector<double> t(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) t[i] = std::exp(3.0 * s[i]) - 7.0;
    CHECK(auc_score(std::span<const double>(s), y) == auc_score(std::span<const double>(t), y));
  }
}

TEST_CASE("Harrell correction", "[metrics]") {
  const std::vector<double> same{0.8, 0.7, 0.75};
  CHECK(harrell_correct(0.9, same, same) == 0.9);
  const std::vector<double> boot{0.95, 0.85}, orig{0.85, 0.75};
  CHECK(harrell_correct(0.9, boot, orig) == Catch::Approx(0.8).epsilon(1e-15));
}

TEST_CASE(".632 correction", "[metrics]") {
  CHECK(kWeightOOB + kWeightApparent == 1.0);
  const std::vector<double> oob{0.7, 0.7};
  CHECK(dot632_correct(0.7, oob) == Catch::Approx(0.7).epsilon(1e-15));
  const std::vector<double> half{0.4, 0.6};
  CHECK(dot632_correct(1.0, half) == Catch::Approx(0.684).epsilon(1e-15));
}

TEST_CASE(".632+ anchor cases", "[metrics]") {
  // no overfitting: identical to .632
  const auto none = dot632plus_correct(0.7, 0.75, 0.5);
  CHECK(none.R == 0.0);
  CHECK(none.w == kWeightOOB);
  CHECK(std::abs(none.corrected - dot632_from_out(0.7, 0.75)) < 1e-12);
  const auto equal = dot632plus_correct(0.8, 0.8, 0.5);
  CHECK(equal.corrected == dot632_from_out(0.8, 0.8));

  // complete overfitting: theta_out
  const auto full = dot632plus_correct(0.9, 0.5, 0.5);
  CHECK(full.R == 1.0);
  CHECK(std::abs(full.w - 1.0) < 1e-12);
  CHECK(std::abs(full.corrected - 0.5) < 1e-12);
  const auto below = dot632plus_correct(0.9, 0.3, 0.5);  // out below gamma clamps R to 1
  CHECK(below.R == 1.0);
  CHECK(std::abs(below.corrected - 0.3) < 1e-12);

  // hand evaluation: R = 0.3 / 0.4, w = 0.632 / (1 - 0.368 * 0.75)
  const auto mid = dot632plus_correct(0.9, 0.6, 0.5);
  const double w = 0.632 / (1.0 - 0.368 * 0.75);
  CHECK(std::abs(mid.R - 0.75) < 1e-12);
  CHECK(std::abs(mid.w - w) < 1e-12);
  CHECK(std::abs(mid.corrected - ((1.0 - w) * 0.9 + w * 0.6)) < 1e-12);
  CHECK(mid.corrected == Catch::Approx(0.638).margin(5e-4));

  // app at or below gamma
  CHECK(dot632plus_correct(0.45, 0.4, 0.5).R == 0.0);
}

TEST_CASE(".632+ weight bounds", "[metrics][property]") {
  Rng rng(3);
  for (int rep = 0; rep < 1000; ++rep) {
    const double app = rng.uniform(), out = rng.uniform(), g = rng.uniform();
    const auto r = dot632plus_correct(app, out, g);
    CHECK(r.R >= 0.0);
    CHECK(r.R <= 1.0);
    CHECK(r.w >= kWeightOOB - 1e-15);
    CHECK(r.w <= 1.0 + 1e-12);
    CHECK(r.corrected >= std::min(app, out) - 1e-12);
    CHECK(r.corrected <= std::max(app, out) + 1e-12);
  }
}

TEST_CASE("no-information score", "[metrics]") {
  Rng rng(4);
  const auto s = random_scores(50, rng, false);
  const Labels y = testkit::random_labels(50, rng);
  CHECK(*no_information_score(std::span<const double>(s), y, Metric::auc) == 0.5);

  const std::vector<double> ones(10, 0.9);
  const Labels y3{1, 1, 1, 0, 0, 0, 0, 0, 0, 0};
  CHECK(*no_information_score(std::span<const double>(ones), y3, Metric::accuracy) == Catch::Approx(0.3).epsilon(1e-15));

  for (int rep = 0; rep < 20; ++rep) {
    const auto sc = random_scores(200, rng, false);
    const Labels yy = testkit::random_labels(200, rng, 0.3);
    const double analytic = *no_information_score(std::span<const double>(sc), yy, Metric::accuracy);
    const double perm = *permutation_no_information(std::span<const double>(sc), yy, Metric::accuracy, 0.5,
                                                    static_cast<std::uint64_t>(rep));
    CHECK(std::abs(analytic - perm) < 0.02);
  }
}

TEST_CASE("Harrell correction lowers an overfit apparent AUC", "[metrics][slow]") {
  int lowered = 0;
  for (int s = 0; s < 100; ++s) {
    const auto pl = testkit::make_planted(100, 20, 2, 0.5, 4000 + static_cast<std::uint64_t>(s));
    const ClassifierSpec spec{};
    const auto full = fit(spec, pl.x, pl.y);
    const auto app = full.predict_proba(pl.x);
    const double theta_app = auc_score(std::span<const double>(app), pl.y);
    std::vector<double> boot, orig;
    for (const auto& rs : make_resamples(pl.y, 10, ResampleKind::bootstrap, 0.0, static_cast<std::uint64_t>(s))) {
      const Matrix xb = select_rows(pl.x, rs.in_indices);
      const Labels yb = select_labels(pl.y, rs.in_indices);
      const auto m = fit(spec, xb, yb);
      const auto pb = m.predict_proba(xb), po = m.predict_proba(pl.x);
      boot.push_back(auc_score(std::span<const double>(pb), yb));
      orig.push_back(auc_score(std::span<const double>(po), pl.y));
    }
    lowered += harrell_correct(theta_app, boot, orig) <= theta_app;
  }
  CHECK(lowered == 100);
}

TEST_CASE("estimate_performance assembles all three corrections", "[metrics]") {
  const std::vector<std::optional<double>> boot{0.95, std::nullopt, 0.9}, orig{0.85, 0.8, 0.8}, oob{0.7, 0.72, std::nullopt};
  const auto e = estimate_performance(0.9, boot, orig, oob, 0.5);
  REQUIRE(e);
  CHECK(e->theta_boot.size() == 2);
  CHECK(e->theta_oob.size() == 2);
  CHECK(e->theta_out == Catch::Approx(0.71).epsilon(1e-15));
  CHECK(e->corrected.at("harrell") == e->theta_app - e->optimism);
  CHECK(e->optimism == Catch::Approx(0.1).epsilon(1e-12));
  CHECK(e->corrected.at("dot632") == Catch::Approx(0.368 * 0.9 + 0.632 * 0.71).epsilon(1e-15));
  CHECK(e->corrected.at("dot632plus") == dot632plus_correct(0.9, e->theta_out, 0.5).corrected);
  CHECK_FALSE(estimate_performance(std::nullopt, boot, orig, oob, 0.5));
}

TEST_CASE("Nogueira stability anchors", "[metrics]") {
  const std::vector<IndexList> same(5, IndexList{1, 3});
  CHECK(*nogueira_stability(same, 6) == 1.0);
  CHECK(*nogueira_stability({{0}, {1}}, 2) == Catch::Approx(-1.0).epsilon(1e-15));
  CHECK_FALSE(nogueira_stability({{}, {}}, 4).has_value());
  CHECK_FALSE(nogueira_stability({{0, 1}, {0, 1}}, 2).has_value());
  CHECK_THROWS(nogueira_stability({{0}}, 3));
}

TEST_CASE("random fixed-size selection has stability near zero", "[metrics]") {
  Rng rng(5);
  double total = 0.0;
  for (int t = 0; t < 500; ++t) {
    std::vector<IndexList> sets;
    for (int b = 0; b < 20; ++b) sets.push_back(random_subset(5, 30, rng));
    total += *nogueira_stability(sets, 30);
  }
  const double mean = total / 500.0;
  CHECK(mean > -0.05);
  CHECK(mean < 0.05);
}

TEST_CASE("two equal-size sets reduce to the Kuncheva index", "[metrics][property]") {
  Rng rng(6);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t p = 3 + rng.below(20);
    const std::size_t k = 1 + rng.below(p - 1);
    const auto a = random_subset(k, p, rng), b = random_subset(k, p, rng);
    const double ref = oracle::kuncheva(std::set<std::size_t>(a.begin(), a.end()), std::set<std::size_t>(b.begin(), b.end()), p);
    CHECK(std::abs(*nogueira_stability({a, b}, p) - ref) < 1e-12);
  }
}

TEST_CASE("selection ensemble fields", "[metrics]") {
  const auto e = make_ensemble({{0, 1}, {0, 2}, {0}, {0, 1, 2}}, 4);
  CHECK(e.frequencies == std::vector<double>{1.0, 0.5, 0.5, 0.0});
  CHECK(e.mean_size == 2.0);
  CHECK(e.variances[0] == 0.0);
  CHECK(e.variances[3] == 0.0);
  CHECK(e.variances[1] == Catch::Approx(4.0 / 3.0 * 0.25).epsilon(1e-15));
  CHECK(*e.stability <= 1.0);

  const std::map<std::string, std::vector<double>> by{{"a", {1.0, 0.4, 0.5}}, {"b", {0.6, 0.5, 0.1}}};
  CHECK(high_confidence_counts(by, 3) == std::vector<int>{2, 1, 1});
  CHECK(high_confidence_counts(by, 3, 0.55) == std::vector<int>{2, 0, 0});
}

TEST_CASE("recovery metrics", "[metrics]") {
  const IndexList truth{1, 4, 7};
  const auto exact = recovery_metrics(truth, truth, 10);
  CHECK(exact.tpr == 1.0);
  CHECK(exact.fpr == 0.0);
  CHECK(exact.fdr == 0.0);
  const auto miss = recovery_metrics(IndexList{0, 2, 3}, truth, 10);
  CHECK(miss.tpr == 0.0);
  CHECK(miss.fdr == 1.0);
  CHECK(miss.for_ == Catch::Approx(3.0 / 7.0).epsilon(1e-15));
  const auto none = recovery_metrics(IndexList{}, truth, 10);
  CHECK(none.fdr == 0.0);
  CHECK_THROWS(recovery_metrics(IndexList{10}, truth, 10));

  Rng rng(7);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t p = 5 + rng.below(40);
    const auto sel = random_subset(rng.below(p + 1), p, rng), tru = random_subset(1 + rng.below(p), p, rng);
    const auto r = recovery_metrics(sel, tru, p);
    CHECK(r.tp + r.fp + r.fn + r.tn == p);
    CHECK(r.tpr == static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn));
  }
}

TEST_CASE("random subsets reach the hypergeometric expected TPR", "[metrics]") {
  Rng rng(8);
  const std::size_t p = 374, k = 19;
  const auto truth = random_subset(19, p, rng);
  double sum = 0.0;
  for (int t = 0; t < 2000; ++t) sum += recovery_metrics(random_subset(k, p, rng), truth, p).tpr;
  CHECK(std::abs(sum / 2000.0 - oracle::random_subset_expected_tpr(k, p)) < 0.01);
}

TEST_CASE("instability index", "[metrics]") {
  const std::vector<double> full{0.9, 0.1, 0.6};
  CHECK(instability_index(full, {full, full}) == std::vector<double>(3, 0.0));
  const std::vector<double> flip{0.2, 0.1, 0.7};
  CHECK(instability_index(full, {full, flip}) == std::vector<double>{0.5, 0.0, 0.0});
  CHECK_THROWS(instability_index(full, {{0.1}}));
}

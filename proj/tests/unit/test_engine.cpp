#include "fsbench/engine.hpp"

#include <catch_amalgamated.hpp>

#include "planted.hpp"

#include <cmath>

using namespace fsbench;

namespace {

BenchmarkConfig parse(const char* text) { return config_from_json(Json::parse(text)); }

Dataset toy(std::size_t n, std::size_t p, std::uint64_t seed) {
  const auto pl = testkit::make_planted(n, p, 2, 1.0, seed);
  return testkit::as_dataset(pl.x, pl.y);
}

std::string view(const ReportBundle& b) { return deterministic_view(Json(b)).dump(); }

}  // namespace

TEST_CASE("smoke run on a small toy", "[engine]") {
  const auto data = toy(20, 5, 1);
  const auto cfg = parse(R"({"methods": ["random"], "classifiers": ["logistic"], "B": 2, "k": 2, "seed": 3})");
  const auto b = run_benchmark(data, cfg);
  REQUIRE(b.methods.size() == 2);  // random plus the full-data control
  REQUIRE(b.cells.size() == 2);
  const auto* r = b.method("random");
  REQUIRE(r);
  CHECK(r->stability.has_value());
  CHECK(*r->stability <= 1.0);
  CHECK(r->sizes.size() == 2);
  CHECK(r->size.mean == 2.0);
  CHECK(r->frequencies.size() == 5);
  CHECK(r->apparent_selection.size() == 2);
  CHECK(r->instability.size() == 20);
  const auto* cell = b.cell("random", "logistic");
  REQUIRE(cell);
  for (Metric m : {Metric::auc, Metric::accuracy, Metric::sensitivity, Metric::specificity}) {
    const auto key = to_string(m);
    CHECK(cell->apparent.at(key).has_value());
    CHECK(cell->corrected.at(key).at("dot632plus").has_value());
    CHECK(cell->corrected.at(key).count("harrell") == 1);
    CHECK(cell->corrected.at(key).count("dot632") == 1);
  }
  CHECK(b.features.size() == 5);
  CHECK(b.settings.B == 2);
  CHECK(b.settings.n == 20);
  CHECK(b.provenance.seed == 3);
  CHECK(b.provenance.timestamps.count("started") == 1);
  CHECK(b.timing.count("random") == 1);
}

TEST_CASE("random selection is unstable and the full control is perfectly stable", "[engine]") {
  const auto data = toy(80, 30, 2);
  const auto cfg = parse(R"({"methods": ["random"], "classifiers": ["logistic"], "B": 40, "k": 5, "seed": 4})");
  const auto b = run_benchmark(data, cfg);
  CHECK(std::abs(*b.method("random")->stability) < 0.15);
  const auto* full = b.method("full");
  REQUIRE(full);
  CHECK(full->control);
  CHECK(full->mode == "control");
  CHECK(*full->stability == 1.0);
  CHECK(full->apparent_selection == iota_indices(30));
  CHECK(b.cell("full", "logistic")->control);
  // the control does not count towards high-confidence features
  for (const auto& f : b.features) CHECK(f.frequency.count("full") == 0);
}

TEST_CASE("every configured pair appears exactly once", "[engine]") {
  const auto data = toy(60, 8, 3);
  const auto cfg = parse(R"({"methods": ["t_score", {"id": "t_score", "name": "t_score_k2", "params": {"k": 2}}],
                            "classifiers": ["logistic", "lda", {"kind": "knn", "name": "knn3", "params": {"n_neighbors": 3}}],
                            "B": 3, "k": 4, "seed": 5})");
  const auto b = run_benchmark(data, cfg);
  CHECK(b.cells.size() == 9);
  for (const char* m : {"t_score", "t_score_k2", "full"})
    for (const char* c : {"logistic", "lda", "knn3"}) {
      int count = 0;
      for (const auto& cell : b.cells) count += cell.method == m && cell.classifier == c;
      CHECK(count == 1);
    }
  CHECK(b.method("t_score_k2")->size.mean == 2.0);
  CHECK(b.method("t_score")->size.mean == 4.0);
}

TEST_CASE("results do not depend on the worker count", "[engine]") {
  const auto data = toy(60, 12, 6);
  auto cfg = parse(R"({"methods": ["t_score", "random", "lasso", "mrmr"], "classifiers": ["logistic", "random_forest"],
                       "B": 6, "k": 3, "seed": 7})");
  const auto one = run_benchmark(data, cfg);
  cfg.workers = 3;
  const auto three = run_benchmark(data, cfg);
  CHECK(view(one) == view(three));
  cfg.workers = 1;
  CHECK(view(run_benchmark(data, cfg)) == view(one));
  cfg.seed = 8;
  CHECK(view(run_benchmark(data, cfg)) != view(one));
}

TEST_CASE("preprocessing sees only in-sample rows", "[engine]") {
  Rng rng(9);
  Matrix x = testkit::random_normal(50, 4, rng);
  const Labels y = testkit::random_labels(50, rng);
  MissingMask miss = MissingMask::Constant(50, 4, false);
  for (int i = 0; i < 50; i += 7) miss(i, 2) = true;
  std::vector<FeatureMeta> meta;
  for (int j = 0; j < 4; ++j) meta.push_back({"f" + std::to_string(j), FeatureKind::continuous});

  for (std::size_t b = 1; b <= 10; ++b) {
    const auto rs = make_resample(y, ResampleKind::bootstrap, 1.0, 11, b);
    REQUIRE_FALSE(rs.oob_indices.empty());
    const Dataset clean(x, miss, meta, y);
    Matrix planted = x;
    for (Index r : rs.oob_indices) planted(static_cast<Eigen::Index>(r), 0) = 1e9;
    const Dataset dirty(planted, miss, meta, y);

    const auto a = detail::prepare_unit(clean, rs.in_indices);
    const auto d = detail::prepare_unit(dirty, rs.in_indices);
    CHECK(a.state.impute == d.state.impute);
    CHECK(a.state.center == d.state.center);
    CHECK(a.state.scale == d.state.scale);
    CHECK(a.x_in == d.x_in);
    CHECK(d.state.center[0] < 10.0);
    // fitting on every row would have seen the outlier
    CHECK(fit_preprocess(dirty).center[0] > 1e6);

    // the imputed value is the median over in-sample observed values
    std::vector<double> seen;
    for (Index r : rs.in_indices)
      if (!miss(static_cast<Eigen::Index>(r), 2)) seen.push_back(x(static_cast<Eigen::Index>(r), 2));
    std::sort(seen.begin(), seen.end());
    const std::size_t m = seen.size();
    const double median = m % 2 ? seen[m / 2] : 0.5 * (seen[m / 2 - 1] + seen[m / 2]);
    CHECK(a.state.impute[2] == Catch::Approx(median).epsilon(1e-14));
  }
}

TEST_CASE("an OOB-only outlier leaves every resample's selection untouched", "[engine]") {
  const auto pl = testkit::make_planted(60, 6, 2, 1.0, 12);
  const auto cfg = parse(R"({"methods": ["t_score"], "classifiers": ["logistic"], "B": 2, "k": 2, "seed": 13})");
  const auto resamples = make_resamples(pl.y, 2, ResampleKind::bootstrap, 1.0, 13);
  // a row that is out-of-bag in every resample
  std::vector<int> in_count(60, 0);
  for (const auto& rs : resamples)
    for (Index r : rs.in_indices) in_count[r] = 1;
  std::size_t row = 60;
  for (std::size_t i = 0; i < 60; ++i)
    if (!in_count[i]) row = i;
  REQUIRE(row < 60);
  Matrix planted = pl.x;
  planted(static_cast<Eigen::Index>(row), pl.spec.truth[0]) = -1e6;
  const auto clean = run_benchmark(testkit::as_dataset(pl.x, pl.y), cfg);
  const auto dirty = run_benchmark(testkit::as_dataset(planted, pl.y), cfg);
  CHECK(clean.method("t_score")->frequencies == dirty.method("t_score")->frequencies);
  CHECK(clean.method("t_score")->sizes == dirty.method("t_score")->sizes);
}

TEST_CASE("a failing cell leaves the others unchanged", "[engine]") {
  // the minority class is so small that 5-fold forward selection fails on some resamples
  Rng rng(14);
  const Matrix x = testkit::random_normal(30, 4, rng);
  Labels y(30, 0);
  for (int i = 0; i < 6; ++i) y[static_cast<std::size_t>(i * 5)] = 1;
  const auto data = testkit::as_dataset(x, y);
  const auto with = run_benchmark(data, parse(R"({"methods": ["t_score", "forward"], "classifiers": ["logistic", "knn"],
                                                   "B": 12, "k": 2, "seed": 15})"));
  const auto without = run_benchmark(data, parse(R"({"methods": ["t_score"], "classifiers": ["logistic"],
                                                      "B": 12, "k": 2, "seed": 15})"));
  const auto* fwd = with.method("forward");
  REQUIRE(fwd);
  CHECK(fwd->failed_resamples > 0);
  CHECK(fwd->failed_resamples < 12);
  CHECK_FALSE(fwd->errors.empty());
  CHECK(*with.cell("t_score", "logistic") == *without.cell("t_score", "logistic"));
  CHECK(with.method("t_score")->frequencies == without.method("t_score")->frequencies);
  CHECK(with.method("t_score")->stability == without.method("t_score")->stability);
}

TEST_CASE("VIF prefilter and simulation inside a run", "[engine]") {
  const auto d = load_csv(std::string(FSBENCH_FIXTURE_DIR) + "/collinear_toy.csv", "y");
  const auto b = run_benchmark(d, parse(R"({"methods": ["t_score"], "classifiers": ["logistic"], "B": 3, "k": 2,
                                            "vif": {"threshold": 5}, "seed": 1,
                                            "simulation": {"truth": ["x4", 0], "replicates": 4}})"));
  REQUIRE(b.vif_removed.size() == 1);
  CHECK(b.settings.p_input == 5);
  CHECK(b.settings.p_used == 4);
  CHECK(b.features.size() == 4);
  REQUIRE(b.simulation.has_value());
  CHECK(b.simulation->at("replicates") == 4);
  const auto& rec = b.method("t_score")->recovery;
  REQUIRE(rec.has_value());
  CHECK(rec->replicates == 4);
  CHECK_FALSE(b.method("full")->recovery.has_value());
}

TEST_CASE("config validation", "[engine]") {
  CHECK_THROWS_AS(parse(R"({"methods": [], "classifiers": ["logistic"]})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"methods": ["random"], "classifiers": []})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"methods": ["random"], "classifiers": ["logistic"], "B": 1})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"methods": ["nope"], "classifiers": ["logistic"]})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"methods": ["random"], "classifiers": ["svm"]})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"methods": ["random", "random"], "classifiers": ["logistic"]})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"methods": ["random"], "classifiers": ["logistic"], "bogus": 1})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"methods": [{"id": "lasso", "params": {"lambda": 1}}], "classifiers": ["logistic"]})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"methods": ["random"], "classifiers": ["logistic"], "B": "ten"})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"methods": ["random"], "classifiers": ["logistic"], "simulation": {"replicates": 3}})"),
                  ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);

  const auto c = parse(R"({"methods": ["random"], "classifiers": ["logistic"]})");
  CHECK(c.B == 100);
  CHECK(c.oc_method == OcMethod::dot632plus);
  CHECK(c.high_confidence == 0.5);
  CHECK(parse(R"({"methods": ["random"], "classifiers": ["logistic"], "resample": {"kind": "subsample"}})").ratio == 0.632);
}

TEST_CASE("seeds are derived per unit", "[engine]") {
  CHECK(method_seed(1, 0, "lasso") != method_seed(1, 1, "lasso"));
  CHECK(method_seed(1, 1, "lasso") != method_seed(1, 1, "random"));
  CHECK(method_seed(1, 1, "lasso") == method_seed(1, 1, "lasso"));
}

#include "fsbench/classifiers.hpp"
#include "fsbench/methods.hpp"
#include "fsbench/simulation.hpp"

#include <catch_amalgamated.hpp>

#include "oracles.hpp"
#include "planted.hpp"

#include <cmath>

using namespace fsbench;

namespace {

SimulationSpec spec_of(IndexList truth, std::vector<double> beta, double intercept, double sd, std::uint64_t seed) {
  SimulationSpec s;
  s.truth = std::move(truth);
  s.beta = std::move(beta);
  s.intercept = intercept;
  s.noise_sd = sd;
  s.seed = seed;
  return s;
}

double prevalence(const Labels& y) { return static_cast<double>(count_positive(y)) / static_cast<double>(y.size()); }

}  // namespace

TEST_CASE("a zero score maps to label 1 without noise", "[simulation]") {
  CHECK(simulated_label(0.0, 0.0) == 1);
  CHECK(simulated_label(-1e-300, 0.0) == 0);
  Rng rng(1);
  const Labels y = draw_labels(Vector::Zero(25), 0.0, rng);
  CHECK(y == Labels(25, 1));

  // beta = 0 with zero noise gives one class, which simulate_outcome refuses
  Matrix x = testkit::random_normal(25, 3, rng);
  CHECK_THROWS_AS(simulate_outcome(x, spec_of({1}, {0.0}, 0.0, 0.0, 1), 1), DataError);

  // rows whose predictor is exactly 0 are labelled 1 alongside the rest
  x.col(1) << Vector::LinSpaced(25, -12.0, 12.0);
  const Labels z = simulate_outcome(x, spec_of({1}, {1.0}, 0.0, 0.0, 1), 1);
  for (Eigen::Index i = 0; i < 25; ++i) CHECK(z[static_cast<std::size_t>(i)] == (x(i, 1) >= 0.0 ? 1 : 0));
  CHECK(z[12] == 1);
}

TEST_CASE("a large linear predictor always gives label 1", "[simulation]") {
  Rng rng(2);
  Matrix x = testkit::random_normal(400, 2, rng);
  x.col(0).setConstant(1.0);
  x(0, 0) = -1.0;  // keep both classes possible
  const auto s = spec_of({0}, {10.0}, 0.0, 1.0, 3);
  for (std::size_t r = 1; r <= 20; ++r) {
    const Labels y = simulate_outcome(x, s, r);
    CHECK(count_positive(y) >= 399);
  }
}

TEST_CASE("label prevalence follows the probit closed form", "[simulation]") {
  Rng rng(3);
  const Matrix x = testkit::random_normal(1000, 4, rng);
  const auto s = spec_of({0, 2}, {1.2, -0.7}, 0.4, 1.0, 11);
  const Vector lp = truth_linear_predictor(x, s);
  const double expected = oracle::probit_prevalence(std::vector<double>(lp.data(), lp.data() + lp.size()), 1.0);
  double sum = 0.0;
  for (std::size_t r = 1; r <= 200; ++r) sum += prevalence(simulate_outcome(x, s, r));
  CHECK(std::abs(sum / 200.0 - expected) < 0.02);
}

TEST_CASE("tiny noise reproduces the sign of the linear predictor", "[simulation]") {
  Rng rng(4);
  const Matrix x = testkit::random_normal(300, 3, rng);
  const auto s = spec_of({0, 1}, {1.0, 0.5}, 0.1, 1e-9, 5);
  const Vector lp = truth_linear_predictor(x, s);
  for (std::size_t r = 1; r <= 5; ++r) {
    const Labels y = simulate_outcome(x, s, r);
    for (Eigen::Index i = 0; i < lp.size(); ++i)
      if (std::abs(lp[i]) > 1e-6) CHECK(y[static_cast<std::size_t>(i)] == (lp[i] >= 0 ? 1 : 0));
  }
}

TEST_CASE("replicates differ but share their prevalence", "[simulation]") {
  Rng rng(5);
  const Matrix x = testkit::random_normal(500, 3, rng);
  const auto s = spec_of({0}, {0.8}, 0.0, 1.0, 6);
  const Labels a = simulate_outcome(x, s, 1), b = simulate_outcome(x, s, 2);
  CHECK(a != b);
  CHECK(a == simulate_outcome(x, s, 1));
  // binomial sd of a prevalence at n = 500 is about 0.022
  CHECK(std::abs(prevalence(a) - prevalence(b)) < 0.1);
  auto other = s;
  other.seed = 7;
  CHECK(simulate_outcome(x, other, 1) != a);
}

TEST_CASE("spec validation", "[simulation]") {
  const Matrix x = Matrix::Zero(10, 3);
  CHECK_THROWS_AS(simulate_outcome(x, spec_of({}, {}, 0, 1, 0), 1), ConfigError);
  CHECK_THROWS_AS(simulate_outcome(x, spec_of({5}, {1}, 0, 1, 0), 1), ConfigError);
  CHECK_THROWS_AS(simulate_outcome(x, spec_of({0}, {1, 2}, 0, 1, 0), 1), ConfigError);
  CHECK_THROWS_AS(simulate_outcome(x, spec_of({0}, {1}, 0, -1, 0), 1), ConfigError);
}

TEST_CASE("truth model uses the logistic classifier fit and caps separation", "[simulation]") {
  const auto pl = testkit::make_planted(300, 6, 2, 0.8, 8);
  const IndexList truth{1, 4};
  const auto tm = fit_truth_model(pl.x, pl.y, truth);
  const auto lf = fit_logistic(select_columns(pl.x, truth), pl.y);
  CHECK(tm.beta[0] == lf.coef[0]);
  CHECK(tm.beta[1] == lf.coef[1]);
  CHECK(tm.intercept == lf.intercept);
  CHECK_FALSE(tm.separated);
  CHECK_FALSE(tm.capped);

  Labels thresh(300);
  for (Eigen::Index i = 0; i < 300; ++i) thresh[static_cast<std::size_t>(i)] = pl.x(i, 3) > 0 ? 1 : 0;
  const auto sep = fit_truth_model(pl.x, thresh, IndexList{3});
  CHECK(sep.separated);
  CHECK(sep.beta[0] > 0.0);
  CHECK(sep.beta[0] <= kTruthCoefCap);

  Matrix xc = pl.x;
  xc.col(2).setConstant(1.0);
  CHECK_THROWS_AS(fit_truth_model(xc, pl.y, IndexList{2}), DataError);
}

TEST_CASE("truth coefficients are near zero for unrelated labels", "[simulation][slow]") {
  Rng rng(9);
  int small = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const Matrix x = testkit::random_normal(500, 3, rng);
    const Labels y = testkit::random_labels(500, rng);
    const auto tm = fit_truth_model(x, y, IndexList{0, 1, 2});
    small += std::all_of(tm.beta.begin(), tm.beta.end(), [](double b) { return std::abs(b) < 0.3; });
  }
  CHECK(small == 100);
}

TEST_CASE("truth set by adjusted p-value picks the planted features", "[simulation]") {
  const auto pl = testkit::make_planted(400, 15, 3, 1.5, 10);
  IndexList top = select_truth_by_pvalue(pl.x, pl.y, 3);
  std::sort(top.begin(), top.end());
  CHECK(top == pl.spec.truth);
  const auto spec = make_simulation_spec(pl.x, pl.y, top, 1.0, 36, 4);
  CHECK(spec.beta.size() == 3);
  CHECK(spec.truth == top);
}

TEST_CASE("recovery experiment with an oracle method and the random control", "[simulation]") {
  auto pl = testkit::make_planted(200, 40, 4, 1.0, 11);
  pl.spec.replicates = 12;
  std::vector<RecoveryMethod> methods;
  methods.push_back({"oracle", false, [&](const Matrix&, const Labels&, std::size_t, std::uint64_t) {
                       SelectionResult r;
                       r.selected = pl.spec.truth;
                       r.mode = SelectionMode::thresholded;
                       return r;
                     }});
  methods.push_back({"broken", false, [](const Matrix&, const Labels&, std::size_t, std::uint64_t) -> SelectionResult {
                       throw FitError("nope");
                     }});
  for (auto& m : recovery_methods({MethodSpec{"random"}, MethodSpec{"t_score"}}, MethodContext{}))
    methods.push_back(std::move(m));
  const auto out = run_recovery_experiment(pl.x, pl.spec, methods);

  CHECK(out.at("oracle").tpr == MeanSd{1.0, 0.0});
  CHECK(out.at("oracle").fpr == MeanSd{0.0, 0.0});
  CHECK(out.at("oracle").replicates == 12);
  CHECK(out.at("broken").replicates == 0);
  CHECK(out.at("broken").failures == 12);
  for (const auto& rm : out.at("random").per_replicate) {
    CHECK(rm.tp + rm.fp == 4);
    CHECK(rm.fpr <= 4.0 / 36.0 + 1e-12);
  }
  for (const auto& rm : out.at("t_score").per_replicate) CHECK(rm.tp + rm.fp == 4);
  CHECK(out.at("t_score").tpr.mean > out.at("random").tpr.mean);

  // worker count does not change anything
  const auto par = run_recovery_experiment(pl.x, pl.spec, methods, 3);
  for (const auto& [name, sum] : out) {
    CHECK(par.at(name).tpr == sum.tpr);
    CHECK(par.at(name).fpr == sum.fpr);
  }
}

TEST_CASE("random control matches the hypergeometric expectation in the experiment", "[simulation]") {
  auto pl = testkit::make_planted(100, 50, 5, 1.0, 12);
  pl.spec.replicates = 400;
  const auto out = run_recovery_experiment(pl.x, pl.spec, recovery_methods({MethodSpec{"random"}}, MethodContext{}));
  CHECK(std::abs(out.at("random").tpr.mean - oracle::random_subset_expected_tpr(5, 50)) < 0.02);
}

TEST_CASE("fixed-size methods stay under the FPR bound", "[simulation][property]") {
  auto pl = testkit::make_planted(150, 20, 3, 0.8, 13);
  pl.spec.replicates = 6;
  std::vector<MethodSpec> specs;
  for (const auto& [id, info] : detail::method_table())
    if (info.fixed_size) specs.push_back(MethodSpec{id});
  const auto out = run_recovery_experiment(pl.x, pl.spec, recovery_methods(specs, MethodContext{}));
  for (const auto& [name, sum] : out) {
    CHECK(sum.failures == 0);
    for (const auto& rm : sum.per_replicate) CHECK(rm.fpr <= 3.0 / 17.0 + 1e-12);
  }
}

TEST_CASE("simulation manifest round-trips", "[simulation]") {
  auto s = spec_of({2, 7}, {0.5, -1.25}, 0.3, 1.0, 99);
  s.replicates = 36;
  s.separated = true;
  const auto j = simulation_manifest(s);
  for (const char* key : {"truth", "beta", "intercept", "noise_sd", "replicates", "seed"}) CHECK(j.contains(key));
  const auto back = simulation_from_manifest(nlohmann::json::parse(j.dump()));
  CHECK(back.truth == s.truth);
  CHECK(back.beta == s.beta);
  CHECK(back.intercept == s.intercept);
  CHECK(back.noise_sd == s.noise_sd);
  CHECK(back.replicates == 36);
  CHECK(back.seed == 99);
  CHECK(back.separated);
}

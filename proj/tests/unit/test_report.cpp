#include "fsbench/engine.hpp"

#include <catch_amalgamated.hpp>

#include "planted.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace fsbench;

namespace {

ReportBundle small_run(bool simulate) {
  const auto pl = testkit::make_planted(60, 8, 2, 1.0, 21);
  std::string cfg = R"({"methods": ["t_score", "random"], "classifiers": ["logistic", "lda"], "B": 3, "k": 2, "seed": 5)";
  if (simulate) cfg += R"(, "simulation": {"top": 2, "replicates": 3})";
  cfg += "}";
  return run_benchmark(testkit::as_dataset(pl.x, pl.y), config_from_json(Json::parse(cfg)));
}

std::vector<std::string> performance_rows(const std::string& md) {
  std::istringstream in(md);
  std::string line;
  bool inside = false;
  std::vector<std::string> rows;
  while (std::getline(in, line)) {
    if (line.rfind("## ", 0) == 0) inside = line == "## Performance";
    else if (inside && line.rfind("| ", 0) == 0 && line.rfind("| method", 0) != 0) rows.push_back(line);
  }
  return rows;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("report JSON round-trips", "[report]") {
  for (bool sim : {false, true}) {
    const auto b = small_run(sim);
    const auto text = to_canonical_json(b);
    const auto back = bundle_from_text(text);
    CHECK(back == b);
    CHECK(to_canonical_json(back) == text);
  }
  CHECK_THROWS_AS(bundle_from_text("{not json"), DataError);
  CHECK_THROWS_AS(bundle_from_text("{}"), DataError);
}

TEST_CASE("canonical JSON has sorted keys and nulls for missing values", "[report]") {
  const auto b = small_run(false);
  const auto j = Json::parse(to_canonical_json(b));
  std::string prev;
  for (const auto& [key, v] : j.items()) {
    CHECK(prev < key);
    prev = key;
  }
  CHECK(j.at("simulation").is_null());
  CHECK(j.at("methods").at(0).at("recovery").is_null());
}

TEST_CASE("markdown has one performance row per pair plus the controls", "[report]") {
  const auto b = small_run(false);
  const auto md = render_markdown(b);
  const auto rows = performance_rows(md);
  const std::size_t methods = 2, classifiers = 2, control_rows = classifiers;
  CHECK(rows.size() == methods * classifiers + control_rows);
  std::size_t controls = 0;
  for (const auto& r : rows) controls += r.find("(control)") != std::string::npos;
  CHECK(controls == control_rows);
  for (const char* section : {"## Stability vs AUC", "## Feature selection frequencies", "## Instability index"})
    CHECK(md.find(section) != std::string::npos);
}

TEST_CASE("recovery columns appear only with a simulation", "[report]") {
  const auto plain = render_markdown(small_run(false));
  CHECK(plain.find("TPR") == std::string::npos);
  CHECK(plain.find("FOR") == std::string::npos);
  const auto sim = render_markdown(small_run(true));
  CHECK(sim.find("| TPR | FPR | FDR | FOR |") != std::string::npos);
}

TEST_CASE("deterministic view drops run-time fields only", "[report]") {
  const auto b = small_run(false);
  const Json full = b;
  const auto v = deterministic_view(full);
  CHECK_FALSE(v.contains("timing"));
  CHECK_FALSE(v.at("provenance").contains("timestamps"));
  CHECK(v.at("cells") == full.at("cells"));
  CHECK(v.at("provenance").at("config_hash") == full.at("provenance").at("config_hash"));
  CHECK(v.size() == full.size() - 1);
}

TEST_CASE("generate_report writes the requested files", "[report]") {
  const auto b = small_run(false);
  const auto dir = std::filesystem::temp_directory_path() / "fsbench_report_test";
  std::filesystem::remove_all(dir);
  const auto both = generate_report(b, ReportFormat::both, dir / "nested");
  REQUIRE(both.size() == 2);
  CHECK(slurp(dir / "nested" / "report.json") == to_canonical_json(b));
  CHECK(slurp(dir / "nested" / "report.md") == render_markdown(b));
  CHECK(generate_report(b, ReportFormat::json, dir / "j").size() == 1);
  CHECK_FALSE(std::filesystem::exists(dir / "j" / "report.md"));
  // a regular file where the directory should go
  std::ofstream(dir / "blocker") << "x";
  CHECK_THROWS_AS(generate_report(b, ReportFormat::json, dir / "blocker" / "sub"), Error);
  std::filesystem::remove_all(dir);
}

#include "fsbench/fsbench.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

using namespace fsbench;

enum Exit { kOk = 0, kUsage = 1, kData = 2, kRuntime = 3 };

struct RunArgs {
  std::string data, target, config, out = "fsbench_out";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
};

struct VifArgs {
  std::string data, target;
  double threshold = 5.0;
};

struct SimulateArgs {
  std::string data, target, truth, out = "fsbench_sim";
  std::size_t replicates = 36;
  double noise_sd = 1.0;
  std::uint64_t seed = 0;
};

struct ReportArgs {
  std::string bundle, format = "md";
};

int cmd_run(const RunArgs& a) {
  const auto data = load_csv(a.data, a.target);
  auto cfg = load_config(a.config);
  if (a.seed) cfg.seed = *a.seed;
  if (a.workers) cfg.workers = *a.workers;
  const auto bundle = run_benchmark(data, cfg);
  for (const auto& path : generate_report(bundle, ReportFormat::both, a.out)) std::cout << path.string() << "\n";
  return kOk;
}

int cmd_vif(const VifArgs& a) {
  const auto data = load_csv(a.data, a.target);
  const Matrix z = apply_preprocess(fit_preprocess(data), data);
  const auto rep = iterative_vif_filter(z, a.threshold);
  const auto names = data.feature_names();
  Json out;
  out["threshold"] = a.threshold;
  out["surviving"] = Json::array();
  for (Index j : rep.surviving) out["surviving"].push_back(names[j]);
  out["trace"] = Json::array();
  for (const auto& r : rep.removal_trace) out["trace"].push_back({{"feature", names[r.feature]}, {"vif", r.vif}});
  out["final_vifs"] = Json::object();
  for (const auto& [j, v] : rep.final_vifs) out["final_vifs"][names[j]] = v;
  std::cout << out.dump(2) << "\n";
  return kOk;
}

IndexList parse_truth(const std::string& spec, const Dataset& data, const Matrix& z) {
  if (spec.rfind("top:", 0) == 0) return select_truth_by_pvalue(z, data.outcome(), std::stoul(spec.substr(4)));
  IndexList truth;
  std::stringstream ss(spec);
  for (std::string name; std::getline(ss, name, ',');) {
    auto j = data.find_feature(name);
    if (!j) throw ConfigError("truth feature '" + name + "' not found");
    truth.push_back(*j);
  }
  return truth;
}

int cmd_simulate(const SimulateArgs& a) {
  const auto data = load_csv(a.data, a.target);
  const Matrix z = apply_preprocess(fit_preprocess(data), data);
  const auto spec = make_simulation_spec(z, data.outcome(), parse_truth(a.truth, data, z), a.noise_sd, a.replicates, a.seed);
  std::filesystem::create_directories(a.out);
  const auto labels_path = std::filesystem::path(a.out) / "labels.csv";
  std::ofstream csv(labels_path);
  if (!csv) throw Error("cannot write '" + labels_path.string() + "'");
  std::vector<Labels> reps;
  for (std::size_t r = 1; r <= spec.replicates; ++r) reps.push_back(simulate_outcome(z, spec, r));
  csv << "row";
  for (std::size_t r = 1; r <= spec.replicates; ++r) csv << ",rep_" << r;
  csv << "\n";
  for (std::size_t i = 0; i < data.n(); ++i) {
    csv << i;
    for (const auto& y : reps) csv << "," << y[i];
    csv << "\n";
  }
  Json manifest = simulation_manifest(spec);
  std::vector<std::string> names;
  for (Index j : spec.truth) names.push_back(data.feature_meta()[j].name);
  manifest["truth_names"] = names;
  manifest["labels"] = "labels.csv";
  const auto manifest_path = std::filesystem::path(a.out) / "manifest.json";
  std::ofstream(manifest_path) << manifest.dump(2) << "\n";
  std::cout << manifest.dump(2) << "\n";
  return kOk;
}

int cmd_report(const ReportArgs& a) {
  std::ifstream in(a.bundle);
  if (!in) throw DataError("cannot open bundle '" + a.bundle + "'");
  std::stringstream text;
  text << in.rdbuf();
  const auto bundle = bundle_from_text(text.str());
  if (a.format == "json") std::cout << to_canonical_json(bundle);
  else std::cout << render_markdown(bundle);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feature-selection benchmarking with bootstrap optimism correction"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run a benchmark and write report.json / report.md");
  run_cmd->add_option("--data", run.data, "CSV file")->required();
  run_cmd->add_option("--target", run.target, "Outcome column")->required();
  run_cmd->add_option("--config", run.config, "JSON config")->required();
  run_cmd->add_option("--out", run.out, "Output directory");
  run_cmd->add_option("--seed", run.seed, "Override the config seed");
  run_cmd->add_option("--workers", run.workers, "Worker threads");

  VifArgs vif;
  auto* vif_cmd = app.add_subcommand("vif", "Iterative VIF prefilter; prints JSON");
  vif_cmd->add_option("--data", vif.data, "CSV file")->required();
  vif_cmd->add_option("--target", vif.target, "Outcome column")->required();
  vif_cmd->add_option("--threshold", vif.threshold, "Maximum VIF kept")->check(CLI::PositiveNumber);

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Generate semi-synthetic labels from a truth model");
  sim_cmd->add_option("--data", sim.data, "CSV file")->required();
  sim_cmd->add_option("--target", sim.target, "Outcome column")->required();
  sim_cmd->add_option("--truth", sim.truth, "Comma-separated feature names, or top:S")->required();
  sim_cmd->add_option("--replicates", sim.replicates, "Noise replicates")->required()->check(CLI::PositiveNumber);
  sim_cmd->add_option("--noise-sd", sim.noise_sd, "Noise standard deviation")->check(CLI::NonNegativeNumber);
  sim_cmd->add_option("--seed", sim.seed, "Seed");
  sim_cmd->add_option("--out", sim.out, "Output directory");

  ReportArgs rep;
  auto* rep_cmd = app.add_subcommand("report", "Render a saved report bundle");
  rep_cmd->add_option("--bundle", rep.bundle, "report.json")->required();
  rep_cmd->add_option("--format", rep.format, "md or json")->check(CLI::IsMember({"md", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*run_cmd) return cmd_run(run);
    if (*vif_cmd) return cmd_vif(vif);
    if (*sim_cmd) return cmd_simulate(sim);
    if (*rep_cmd) return cmd_report(rep);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}

#include <CLI11.hpp>
#include <omp.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "sbrrm/scenario.hpp"
#include "sbrrm/socp_solver.hpp"
#include "sbrrm/verify.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

sbrrm::ScenarioSpec load_spec(const std::string& path, std::uint64_t seed_override,
                              const std::string& out_dir,
                              const std::vector<std::string>& algorithms) {
  sbrrm::ScenarioSpec spec = sbrrm::scenario_from_json(read_file(path));
  if (seed_override != 0) spec.seed_base = seed_override;
  if (!out_dir.empty()) spec.out_dir = out_dir;
  if (!algorithms.empty()) {
    spec.algorithms.clear();
    for (const std::string& name : algorithms) {
      const auto a = sbrrm::algorithm_from_string(name);
      if (!a) throw std::runtime_error("unknown algorithm: " + name);
      spec.algorithms.push_back(*a);
    }
  }
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"millimeter-wave self-backhaul radio resource management simulator"};
  app.require_subcommand(1);

  std::string spec_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  int parallel = 0;
  bool allow_failures = false;
  std::vector<std::string> algorithms;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("spec", spec_path, "scenario spec JSON")->required();
    cmd->add_option("--seed", seed, "override the spec's base seed");
    cmd->add_option("--out-dir", out_dir, "output directory");
    cmd->add_option("--algorithms", algorithms, "subset of LB,UB,BnC,RnP1,RnP2")
        ->delimiter(',');
    cmd->add_option("--parallel", parallel, "OpenMP thread count (0 = default)");
    cmd->add_flag("--allow-failures", allow_failures,
                  "exit 0 even when some records failed");
  };

  CLI::App* cmd_run = app.add_subcommand("run", "Monte-Carlo sweep of a scenario");
  add_common(cmd_run);
  CLI::App* cmd_slotted = app.add_subcommand("slotted", "time-slotted run with weight updates");
  add_common(cmd_slotted);
  CLI::App* cmd_validate = app.add_subcommand("validate", "validate a scenario spec");
  cmd_validate->add_option("spec", spec_path, "scenario spec JSON")->required();
  CLI::App* cmd_oracle =
      app.add_subcommand("oracle", "brute-force reference optimum for a tiny instance");
  add_common(cmd_oracle);

  CLI11_PARSE(app, argc, argv);

  try {
    if (parallel > 0) omp_set_num_threads(parallel);

    if (cmd_validate->parsed()) {
      const sbrrm::ScenarioSpec spec = load_spec(spec_path, 0, "", {});
      const auto points = sbrrm::expand_sweep(spec);
      int bad = 0;
      for (const sbrrm::SweepPoint& p : points) {
        const sbrrm::SystemConfig cfg = sbrrm::config_for_point(spec, p);
        const sbrrm::ValidationReport report =
            sbrrm::validate_config(cfg, spec.ue_table, spec.sbs_table);
        if (!report.ok()) {
          ++bad;
          std::cout << "INVALID " << p.key() << "\n";
          for (const std::string& v : report.violations) std::cout << "  " << v << "\n";
        }
      }
      std::cout << (bad == 0 ? "spec valid" : "spec invalid") << " (" << points.size()
                << " sweep points)\n";
      return bad == 0 ? 0 : 1;
    }

    if (cmd_run->parsed()) {
      const sbrrm::ScenarioSpec spec = load_spec(spec_path, seed, out_dir, algorithms);
      const sbrrm::ScenarioResult result = sbrrm::run_scenario(spec, parallel != 1);
      if (!spec.out_dir.empty()) {
        std::filesystem::create_directories(spec.out_dir);
        write_file(spec.out_dir + "/records.csv", sbrrm::records_to_csv(result.records));
        write_file(spec.out_dir + "/summary.json", sbrrm::summary_to_json(result));
      } else {
        std::cout << sbrrm::records_to_csv(result.records);
      }
      std::cerr << result.records.size() << " records, " << result.failures << " failures\n";
      return (result.failures == 0 || allow_failures) ? 0 : 1;
    }

    if (cmd_slotted->parsed()) {
      const sbrrm::ScenarioSpec spec = load_spec(spec_path, seed, out_dir, algorithms);
      const sbrrm::SlottedResult result = sbrrm::run_slotted(spec);
      int failures = 0;
      for (const sbrrm::SlotRecord& rec : result.slots)
        if (rec.status != "ok") ++failures;
      if (!spec.out_dir.empty()) {
        std::filesystem::create_directories(spec.out_dir);
        write_file(spec.out_dir + "/slots.csv", sbrrm::slotted_to_csv(result));
      } else {
        std::cout << sbrrm::slotted_to_csv(result);
      }
      std::cerr << result.slots.size() << " slots, " << failures << " failures\n";
      return (failures == 0 || allow_failures) ? 0 : 1;
    }

    if (cmd_oracle->parsed()) {
      const sbrrm::ScenarioSpec spec = load_spec(spec_path, seed, out_dir, algorithms);
      const auto points = sbrrm::expand_sweep(spec);
      const sbrrm::SystemConfig cfg = sbrrm::config_for_point(spec, points.front());
      const sbrrm::RandomStream root(spec.seed_base);
      const sbrrm::Topology topology =
          sbrrm::make_default_topology(cfg, spec.topology, root.stream("topology"));
      const sbrrm::ChannelSet channels = sbrrm::generate_channels(
          topology, cfg, spec.channel_model, root.stream("channel").key());
      const sbrrm::verify::BruteForceResult oracle = sbrrm::verify::brute_force_optimum(
          cfg, spec.ue_table, spec.sbs_table, channels, spec.algo.solver);
      sbrrm::AlgoParams algo = spec.algo;
      algo.seed = root.stream("algorithm").key();
      const sbrrm::RrmSolution bnc =
          sbrrm::solve_bnc_misocp(cfg, spec.ue_table, spec.sbs_table, channels, algo);
      std::cout << "{\n  \"oracle_status\": \""
                << (oracle.status == sbrrm::verify::BruteForceStatus::optimal
                        ? "optimal"
                        : oracle.status == sbrrm::verify::BruteForceStatus::infeasible
                              ? "infeasible"
                              : "too-large")
                << "\",\n  \"oracle_objective\": " << oracle.objective
                << ",\n  \"tuples\": " << oracle.tuples_enumerated
                << ",\n  \"bnc_status\": \"" << sbrrm::to_string(bnc.status)
                << "\",\n  \"bnc_objective\": " << bnc.objective << "\n}\n";
      const bool match =
          oracle.status == sbrrm::verify::BruteForceStatus::optimal && bnc.succeeded() &&
          std::abs(oracle.objective - bnc.objective) <=
              1e-6 * std::max(1.0, std::abs(oracle.objective));
      return match || allow_failures ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

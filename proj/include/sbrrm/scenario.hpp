#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sbrrm/algorithms.hpp"
#include "sbrrm/channel.hpp"
#include "sbrrm/system_model.hpp"

namespace sbrrm {

enum class Algorithm { lb, ub, bnc, rnp1, rnp2 };

const char* to_string(Algorithm a);
std::optional<Algorithm> algorithm_from_string(const std::string& name);

/// One simulation campaign: a cartesian sweep over the listed axes, a number
/// of seeded realizations per point, and a set of algorithms run on the same
/// channel draw for paired comparison.
struct ScenarioSpec {
  std::string id = "custom";
  SystemConfig base_config;
  RateTable ue_table;
  RateTable sbs_table;
  TopologyParams topology;
  ChannelModelParams channel_model;
  // Sweep axes; empty lists mean "use the base config value".
  std::vector<double> mbs_power_dbm;
  std::vector<double> sbs_power_dbm;
  std::vector<int> clusters;
  std::vector<int> sbs_per_cluster;
  std::vector<ArrayGeometry> mbs_arrays;
  std::vector<double> chi_backhaul;
  std::vector<double> chi_access;
  int realizations = 1;
  std::uint64_t seed_base = 1;
  std::vector<Algorithm> algorithms{Algorithm::lb, Algorithm::ub, Algorithm::rnp1};
  AlgoParams algo;
  // Slotted runs.
  int slots = 0;
  double slot_duration_s = 1.0;
  std::string out_dir;

  ScenarioSpec();
};

struct SweepPoint {
  double mbs_power_dbm = 0.0;
  double sbs_power_dbm = 0.0;
  int clusters = 0;
  int sbs_per_cluster = 0;
  ArrayGeometry mbs_array;
  double chi_backhaul = 0.0;
  double chi_access = 0.0;
  int index = 0;

  std::string key() const;
};

std::vector<SweepPoint> expand_sweep(const ScenarioSpec& spec);
SystemConfig config_for_point(const ScenarioSpec& spec, const SweepPoint& point);

struct RunRecord {
  std::string scenario_id;
  SweepPoint point;
  std::uint64_t seed = 0;
  Algorithm algorithm = Algorithm::lb;
  std::string status;               // ok | failed:<reason>
  double access_throughput_bps = 0.0;    // realized on the exact channels
  double planned_access_throughput_bps = 0.0;
  double backhaul_throughput_bps = 0.0;
  double objective = 0.0;
  std::vector<int> ue_rate_indices;  // -1 when unserved
  int iterations = 0;
  double wall_time_s = 0.0;
  std::string channel_hash;
  bool ok() const { return status == "ok"; }
};

struct ScenarioSummaryEntry {
  std::string point_key;
  Algorithm algorithm = Algorithm::lb;
  int successes = 0;
  int failures = 0;
  double mean_access_bps = 0.0;
  double std_access_bps = 0.0;
  double median_wall_time_s = 0.0;
};

struct ScenarioResult {
  std::vector<RunRecord> records;
  std::vector<ScenarioSummaryEntry> summary;
  int failures = 0;
};

/// Runs every sweep point x seed x algorithm on identical channel
/// realizations, verifies each output against the problem constraints, and
/// evaluates realized throughput on the exact (unperturbed) channels.
/// Realizations fan out over OpenMP when parallel; record order is
/// deterministic either way.
ScenarioResult run_scenario(const ScenarioSpec& spec, bool parallel = true);

struct SlotRecord {
  int slot = 0;
  int round = 0;
  std::uint64_t seed = 0;
  std::string status;
  std::vector<double> ue_rate_bps;         // per global UE this slot
  std::vector<double> cumulative_bits;     // per global UE after this slot
  std::vector<double> weights;             // weights used in this slot
};

struct SlottedResult {
  std::vector<SlotRecord> slots;
  /// Per round, per cluster: max/min cumulative throughput ratio.
  std::vector<std::vector<double>> fairness_ratio;
};

/// Serves disjoint batches of U_served UEs per cluster per slot until every
/// UE is served, then updates the weights from reciprocal cumulative rates
/// (floored, renormalized) and continues. Channels are redrawn each round.
SlottedResult run_slotted(const ScenarioSpec& spec);

std::string records_to_csv(const std::vector<RunRecord>& records);
std::string summary_to_json(const ScenarioResult& result);
std::string slotted_to_csv(const SlottedResult& result);

std::string scenario_to_json(const ScenarioSpec& spec);
ScenarioSpec scenario_from_json(const std::string& text);

}  // namespace sbrrm

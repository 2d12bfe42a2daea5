#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sbrrm/scenario.hpp"

using namespace sbrrm;

namespace {

ScenarioSpec small_spec() {
  ScenarioSpec spec;
  spec.id = "unit";
  spec.base_config.num_clusters = 1;
  spec.base_config.sbs_per_cluster = 1;
  spec.base_config.ue_per_cluster = 2;
  spec.base_config.ue_served_per_cluster = 1;
  spec.base_config.max_serving_sbs = 1;
  spec.base_config.mbs_array = {4, 2};
  spec.base_config.sbs_array = {2, 2};
  spec.base_config.set_uniform_weights();
  RateTable two;
  two.entries = {{0.2344, 0.2159}, {0.6016, 0.6610}};
  spec.ue_table = two;
  spec.sbs_table = two;
  spec.topology.cluster_ring_radius_m = 60.0;
  spec.topology.ue_disk_radius_m = 20.0;
  spec.mbs_power_dbm = {20.0};
  spec.sbs_power_dbm = {10.0};
  spec.realizations = 2;
  spec.seed_base = 7;
  spec.algorithms = {Algorithm::lb, Algorithm::ub, Algorithm::rnp1};
  return spec;
}

}  // namespace

TEST_CASE("sweep expansion is a cartesian product") {
  ScenarioSpec spec = small_spec();
  spec.mbs_power_dbm = {10.0, 20.0};
  spec.sbs_power_dbm = {0.0, 5.0, 10.0};
  spec.chi_backhaul = {0.0, 0.5};
  const auto points = expand_sweep(spec);
  CHECK(points.size() == 2 * 3 * 2);
  CHECK(points.front().index == 0);
  CHECK(points.back().index == static_cast<int>(points.size()) - 1);
}

TEST_CASE("scenario json round-trip") {
  ScenarioSpec spec = small_spec();
  spec.chi_access = {0.0, 0.3};
  spec.algo.bnb_rel_gap = 0.05;
  const ScenarioSpec back = scenario_from_json(scenario_to_json(spec));
  CHECK(back.id == spec.id);
  CHECK(back.base_config.num_clusters == 1);
  CHECK(back.chi_access == spec.chi_access);
  CHECK(back.algorithms.size() == 3);
  CHECK(back.algo.bnb_rel_gap == 0.05);
  CHECK(back.ue_table.size() == 2);
}

TEST_CASE("scenario run is deterministic and complete") {
  const ScenarioSpec spec = small_spec();
  const ScenarioResult a = run_scenario(spec);
  const ScenarioResult b = run_scenario(spec);
  REQUIRE(a.records.size() == spec.realizations * spec.algorithms.size());
  // Bit-identical modulo the wall-time column (the one non-deterministic field).
  auto strip_times = [](std::vector<RunRecord> records) {
    for (RunRecord& r : records) r.wall_time_s = 0.0;
    return records_to_csv(records);
  };
  CHECK(strip_times(a.records) == strip_times(b.records));

  int ok_rows = 0;
  for (const RunRecord& rec : a.records)
    if (rec.ok()) ++ok_rows;
  CHECK(ok_rows == static_cast<int>(a.records.size()) - a.failures);

  // Paired comparison: every algorithm of one seed sees the same channels.
  for (int s = 0; s < spec.realizations; ++s) {
    std::string hash;
    for (const RunRecord& rec : a.records) {
      if (rec.seed != spec.seed_base + static_cast<std::uint64_t>(s)) continue;
      if (hash.empty()) hash = rec.channel_hash;
      CHECK(rec.channel_hash == hash);
    }
  }

  // Ordering: LB <= RnP1 <= UB on successful paired records.
  for (int s = 0; s < spec.realizations; ++s) {
    double lb = -1, ub = -1, rnp1 = -1;
    for (const RunRecord& rec : a.records) {
      if (rec.seed != spec.seed_base + static_cast<std::uint64_t>(s) || !rec.ok()) continue;
      if (rec.algorithm == Algorithm::lb) lb = rec.access_throughput_bps;
      if (rec.algorithm == Algorithm::ub) ub = rec.access_throughput_bps;
      if (rec.algorithm == Algorithm::rnp1) rnp1 = rec.planned_access_throughput_bps;
    }
    if (lb >= 0 && rnp1 >= 0) CHECK(lb <= rnp1 * (1.0 + 1e-6));
    if (ub >= 0 && rnp1 >= 0) CHECK(rnp1 <= ub * (1.0 + 1e-6));
  }

  const std::string csv = records_to_csv(a.records);
  CHECK(csv.find("scenario,") == 0);
  const std::string summary = summary_to_json(a);
  CHECK(summary.find("mean_access_bps") != std::string::npos);
}

TEST_CASE("slotted run serves every UE once per round") {
  ScenarioSpec spec = small_spec();
  spec.base_config.ue_per_cluster = 2;
  spec.base_config.ue_served_per_cluster = 1;
  spec.base_config.set_uniform_weights();
  spec.slots = 4;  // two rounds of two slots
  spec.algorithms = {Algorithm::rnp1};
  const SlottedResult result = run_slotted(spec);
  REQUIRE(result.slots.size() == 4);
  // Within one round the served sets are disjoint and cover everyone.
  for (int round = 0; round < 2; ++round) {
    std::vector<int> served_count(2, 0);
    for (int slot = 2 * round; slot < 2 * round + 2; ++slot) {
      if (result.slots[slot].status != "ok") continue;
      for (int ue = 0; ue < 2; ++ue)
        if (result.slots[slot].ue_rate_bps[ue] > 0.0) ++served_count[ue];
    }
    for (int ue = 0; ue < 2; ++ue) CHECK(served_count[ue] <= 1);
  }
  CHECK(result.fairness_ratio.size() == 2);
  const std::string csv = slotted_to_csv(result);
  CHECK(csv.find("slot,round") == 0);
}

TEST_CASE("slotted requires divisible admission counts") {
  ScenarioSpec spec = small_spec();
  spec.base_config.ue_per_cluster = 3;
  spec.base_config.ue_served_per_cluster = 2;
  spec.base_config.set_uniform_weights();
  spec.slots = 2;
  CHECK_THROWS_AS(run_slotted(spec), std::invalid_argument);
}

TEST_CASE("weights floor guards never-served UEs") {
  // After one round with a zero-rate UE the reciprocal update must stay
  // finite and normalized.
  ScenarioSpec spec = small_spec();
  spec.base_config.ue_per_cluster = 2;
  spec.base_config.ue_served_per_cluster = 1;
  spec.base_config.sbs_power_w = 1e-18;  // nothing can be served
  spec.base_config.set_uniform_weights();
  spec.slots = 4;
  spec.algorithms = {Algorithm::rnp1};
  const SlottedResult result = run_slotted(spec);
  for (const SlotRecord& rec : result.slots) {
    double sum = 0.0;
    for (double w : rec.weights) {
      CHECK(std::isfinite(w));
      sum += w;
    }
    CHECK(sum == doctest::Approx(1.0));
  }
}

#include "sbrrm/scenario.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <sstream>

#include "sbrrm/verify.hpp"

namespace sbrrm {

using nlohmann::json;

ScenarioSpec::ScenarioSpec() {
  ue_table = default_rate_table();
  sbs_table = default_rate_table();
  base_config.set_uniform_weights();
}

const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::lb: return "LB";
    case Algorithm::ub: return "UB";
    case Algorithm::bnc: return "BnC";
    case Algorithm::rnp1: return "RnP1";
    case Algorithm::rnp2: return "RnP2";
  }
  return "?";
}

std::optional<Algorithm> algorithm_from_string(const std::string& name) {
  if (name == "LB") return Algorithm::lb;
  if (name == "UB") return Algorithm::ub;
  if (name == "BnC") return Algorithm::bnc;
  if (name == "RnP1") return Algorithm::rnp1;
  if (name == "RnP2") return Algorithm::rnp2;
  return std::nullopt;
}

std::string SweepPoint::key() const {
  std::ostringstream out;
  out << "Pmbs=" << mbs_power_dbm << "dBm;Psbs=" << sbs_power_dbm << "dBm;L=" << clusters
      << ";B=" << sbs_per_cluster << ";Nmbs=" << mbs_array.rows << "x" << mbs_array.cols
      << ";chiB=" << chi_backhaul << ";chiA=" << chi_access;
  return out.str();
}

std::vector<SweepPoint> expand_sweep(const ScenarioSpec& spec) {
  auto or_default = [](const std::vector<double>& list, double fallback) {
    return list.empty() ? std::vector<double>{fallback} : list;
  };
  const std::vector<double> pm =
      or_default(spec.mbs_power_dbm, watts_to_dbm(spec.base_config.mbs_power_w));
  const std::vector<double> ps =
      or_default(spec.sbs_power_dbm, watts_to_dbm(spec.base_config.sbs_power_w));
  const std::vector<int> ls =
      spec.clusters.empty() ? std::vector<int>{spec.base_config.num_clusters} : spec.clusters;
  const std::vector<int> bs = spec.sbs_per_cluster.empty()
                                  ? std::vector<int>{spec.base_config.sbs_per_cluster}
                                  : spec.sbs_per_cluster;
  const std::vector<ArrayGeometry> arrays =
      spec.mbs_arrays.empty() ? std::vector<ArrayGeometry>{spec.base_config.mbs_array}
                              : spec.mbs_arrays;
  const std::vector<double> chib = or_default(spec.chi_backhaul, 0.0);
  const std::vector<double> chia = or_default(spec.chi_access, 0.0);

  std::vector<SweepPoint> points;
  int index = 0;
  for (double a : pm)
    for (double b : ps)
      for (int l : ls)
        for (int bb : bs)
          for (const ArrayGeometry& arr : arrays)
            for (double cb : chib)
              for (double ca : chia) {
                SweepPoint p;
                p.mbs_power_dbm = a;
                p.sbs_power_dbm = b;
                p.clusters = l;
                p.sbs_per_cluster = bb;
                p.mbs_array = arr;
                p.chi_backhaul = cb;
                p.chi_access = ca;
                p.index = index++;
                points.push_back(p);
              }
  return points;
}

SystemConfig config_for_point(const ScenarioSpec& spec, const SweepPoint& point) {
  SystemConfig cfg = spec.base_config;
  cfg.mbs_power_w = dbm_to_watts(point.mbs_power_dbm);
  cfg.sbs_power_w = dbm_to_watts(point.sbs_power_dbm);
  cfg.num_clusters = point.clusters;
  cfg.sbs_per_cluster = point.sbs_per_cluster;
  cfg.max_serving_sbs = std::min(spec.base_config.max_serving_sbs, cfg.sbs_per_cluster);
  cfg.mbs_array = point.mbs_array;
  cfg.set_uniform_weights();
  return cfg;
}

namespace {

/// Realized throughput on the exact channels: a UE's rate counts only if its
/// SINR meets the selected target and its cluster's backhaul stream decodes.
double realized_throughput(const SystemConfig& cfg, const RateTable& ue_table,
                           const RateTable& sbs_table, const ChannelSet& exact,
                           const RrmVariables& vars, std::vector<int>* rate_indices) {
  const int j_ue = ue_table.size();
  const int j_sbs = sbs_table.size();
  Eigen::VectorXd kappa = vars.kappa;
  for (int i = 0; i < kappa.size(); ++i) kappa(i) = std::round(kappa(i));
  const Eigen::VectorXd ue_sinr = verify::sinr_ue(cfg, exact, vars.w, kappa);
  const verify::SbsSinr sbs_sinr = verify::sinr_sbs(cfg, exact, vars.m);
  double total = 0.0;
  for (int l = 0; l < cfg.num_clusters; ++l) {
    double beta_target = 0.0;
    for (int j = 0; j < j_sbs; ++j)
      beta_target += std::round(vars.beta(l * j_sbs + j)) * sbs_table[j].sinr_target;
    const bool backhaul_ok = sbs_sinr.cluster_min(l) >= beta_target * (1.0 - 1e-9);
    for (int u = 0; u < cfg.ue_per_cluster; ++u) {
      int selected = -1;
      for (int j = 0; j < j_ue; ++j)
        if (std::round(vars.alpha((l * cfg.ue_per_cluster + u) * j_ue + j)) == 1.0)
          selected = j;
      if (rate_indices) (*rate_indices)[cfg.ue_index(l, u)] = selected;
      if (selected < 0) continue;
      const bool ue_ok =
          ue_sinr(cfg.ue_index(l, u)) >= ue_table[selected].sinr_target * (1.0 - 1e-9);
      if (ue_ok && backhaul_ok) total += ue_table[selected].rate_bps_hz;
    }
  }
  return total * cfg.access_bandwidth_hz;
}

RunRecord run_one(const ScenarioSpec& spec, const SweepPoint& point, std::uint64_t seed,
                  Algorithm algorithm) {
  RunRecord rec;
  rec.scenario_id = spec.id;
  rec.point = point;
  rec.seed = seed;
  rec.algorithm = algorithm;

  const SystemConfig cfg = config_for_point(spec, point);
  const ValidationReport valid = validate_config(cfg, spec.ue_table, spec.sbs_table);
  if (!valid.ok()) {
    rec.status = "failed:invalid-config";
    return rec;
  }
  const RandomStream root(seed);
  const Topology topology =
      make_default_topology(cfg, spec.topology, root.stream("topology"));
  const ChannelSet exact =
      generate_channels(topology, cfg, spec.channel_model, root.stream("channel").key());
  ChannelSet estimated = exact;
  if (point.chi_backhaul > 0.0) {
    estimated = perturb_channels(
        estimated, {point.chi_backhaul, PerturbationScope::backhaul,
                    root.stream("perturb.b").key()});
  }
  if (point.chi_access > 0.0) {
    estimated = perturb_channels(
        estimated,
        {point.chi_access, PerturbationScope::access, root.stream("perturb.a").key()});
  }
  rec.channel_hash = channel_hash(estimated);
  rec.ue_rate_indices.assign(cfg.total_ue(), -1);

  AlgoParams algo = spec.algo;
  algo.seed = root.stream("algorithm").key();

  if (algorithm == Algorithm::lb) {
    rec.status = "ok";
    rec.access_throughput_bps = lower_bound_rate(cfg, spec.ue_table);
    rec.planned_access_throughput_bps = rec.access_throughput_bps;
    return rec;
  }
  if (algorithm == Algorithm::ub) {
    const RrmSolution ub = solve_upper_bound(cfg, spec.sbs_table, estimated, algo);
    if (!ub.succeeded()) {
      rec.status = std::string("failed:") + to_string(ub.status);
      return rec;
    }
    rec.status = "ok";
    rec.backhaul_throughput_bps = ub.backhaul_throughput;
    rec.access_throughput_bps = ub.backhaul_throughput;  // bound on the access side
    rec.planned_access_throughput_bps = ub.backhaul_throughput;
    rec.objective = ub.objective;
    rec.iterations = ub.nodes_explored;
    rec.wall_time_s = ub.wall_time_s;
    return rec;
  }

  RrmSolution sol;
  switch (algorithm) {
    case Algorithm::bnc:
      sol = solve_bnc_misocp(cfg, spec.ue_table, spec.sbs_table, estimated, algo);
      break;
    case Algorithm::rnp1:
      sol = solve_rnp1(cfg, spec.ue_table, spec.sbs_table, estimated, algo);
      break;
    case Algorithm::rnp2: {
      const PredesignedBeams beams =
          predesign_beams(cfg, spec.sbs_table, topology, spec.channel_model, estimated, algo);
      sol = solve_rnp2(cfg, spec.ue_table, spec.sbs_table, estimated, algo, beams);
      break;
    }
    default: break;
  }
  rec.iterations = sol.iterations;
  rec.wall_time_s = sol.wall_time_s;
  if (!sol.succeeded()) {
    rec.status = std::string("failed:") + to_string(sol.status) +
                 (sol.message.empty() ? "" : ":" + sol.message);
    return rec;
  }
  // Every reported solution must hold up against the exact problem
  // constraints on the channels the algorithm saw.
  const verify::FeasibilityReport feas = verify::check_feasibility_pprime(
      cfg, spec.ue_table, spec.sbs_table, estimated, sol.vars);
  if (!feas.pass) {
    rec.status = "failed:verification";
    return rec;
  }
  rec.status = "ok";
  rec.objective = sol.objective;
  rec.planned_access_throughput_bps = sol.access_throughput;
  rec.backhaul_throughput_bps = sol.backhaul_throughput;
  rec.access_throughput_bps = realized_throughput(cfg, spec.ue_table, spec.sbs_table, exact,
                                                  sol.vars, &rec.ue_rate_indices);
  return rec;
}

}  // namespace

ScenarioResult run_scenario(const ScenarioSpec& spec, bool parallel) {
  const std::vector<SweepPoint> points = expand_sweep(spec);
  struct Task {
    int point_index;
    int seed_index;
    int algo_index;
  };
  std::vector<Task> tasks;
  for (std::size_t p = 0; p < points.size(); ++p)
    for (int s = 0; s < spec.realizations; ++s)
      for (std::size_t a = 0; a < spec.algorithms.size(); ++a)
        tasks.push_back({static_cast<int>(p), s, static_cast<int>(a)});

  ScenarioResult result;
  result.records.resize(tasks.size());
  const int threads = (parallel && !omp_in_parallel()) ? omp_get_max_threads() : 1;
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(tasks.size()); ++i) {
    const Task& t = tasks[i];
    result.records[i] = run_one(spec, points[t.point_index],
                                spec.seed_base + static_cast<std::uint64_t>(t.seed_index),
                                spec.algorithms[t.algo_index]);
  }

  for (const RunRecord& rec : result.records)
    if (!rec.ok()) ++result.failures;

  // Mean/std/median summaries per (sweep point, algorithm).
  for (std::size_t p = 0; p < points.size(); ++p) {
    for (const Algorithm a : spec.algorithms) {
      ScenarioSummaryEntry entry;
      entry.point_key = points[p].key();
      entry.algorithm = a;
      std::vector<double> throughput, times;
      for (const RunRecord& rec : result.records) {
        if (rec.point.index != points[p].index || rec.algorithm != a) continue;
        if (!rec.ok()) {
          ++entry.failures;
          continue;
        }
        ++entry.successes;
        throughput.push_back(rec.access_throughput_bps);
        times.push_back(rec.wall_time_s);
      }
      if (!throughput.empty()) {
        double mean = 0.0;
        for (double v : throughput) mean += v;
        mean /= throughput.size();
        double var = 0.0;
        for (double v : throughput) var += (v - mean) * (v - mean);
        entry.mean_access_bps = mean;
        entry.std_access_bps = std::sqrt(var / throughput.size());
        std::sort(times.begin(), times.end());
        entry.median_wall_time_s = times[times.size() / 2];
      }
      result.summary.push_back(std::move(entry));
    }
  }
  return result;
}

SlottedResult run_slotted(const ScenarioSpec& spec) {
  const std::vector<SweepPoint> points = expand_sweep(spec);
  const SystemConfig cfg = config_for_point(spec, points.front());
  if (cfg.ue_per_cluster % cfg.ue_served_per_cluster != 0)
    throw std::invalid_argument("slotted: ue_per_cluster must be divisible by ue_served");
  const int slots_per_round = cfg.ue_per_cluster / cfg.ue_served_per_cluster;
  const int j_ue = spec.ue_table.size();
  const int j_sbs = spec.sbs_table.size();

  Algorithm algorithm = Algorithm::rnp1;
  for (const Algorithm a : spec.algorithms)
    if (a == Algorithm::rnp1 || a == Algorithm::rnp2) {
      algorithm = a;
      break;
    }

  SlottedResult result;
  const RandomStream root(spec.seed_base);
  const Topology topology =
      make_default_topology(cfg, spec.topology, root.stream("topology"));

  SystemConfig slot_cfg = cfg;
  std::vector<double> cumulative_bits(cfg.total_ue(), 0.0);
  std::vector<bool> served_this_round(cfg.total_ue(), false);
  ChannelSet channels;
  PredesignedBeams beams;

  for (int slot = 0; slot < spec.slots; ++slot) {
    const int round = slot / slots_per_round;
    const int slot_in_round = slot % slots_per_round;
    if (slot_in_round == 0) {
      std::fill(served_this_round.begin(), served_this_round.end(), false);
      channels = generate_channels(topology, cfg, spec.channel_model,
                                   root.stream("round.channel", round).key());
      if (round > 0) {
        // Reciprocal cumulative-rate weights with a one-bit floor, normalized.
        double sum = 0.0;
        for (int i = 0; i < cfg.total_ue(); ++i) {
          slot_cfg.weights[i] = 1.0 / (1.0 + cumulative_bits[i]);
          sum += slot_cfg.weights[i];
        }
        for (double& w : slot_cfg.weights) w /= sum;
      }
      if (algorithm == Algorithm::rnp2) {
        AlgoParams pre = spec.algo;
        pre.seed = root.stream("round.predesign", round).key();
        beams = predesign_beams(slot_cfg, spec.sbs_table, topology, spec.channel_model,
                                channels, pre);
      }
    }

    BinaryState base = BinaryState::all_free(slot_cfg, j_ue, j_sbs);
    for (int l = 0; l < cfg.num_clusters; ++l)
      for (int u = 0; u < cfg.ue_per_cluster; ++u)
        if (served_this_round[cfg.ue_index(l, u)])
          for (int j = 0; j < j_ue; ++j)
            base.alpha_pin[(l * cfg.ue_per_cluster + u) * j_ue + j] = Pin::zero;

    AlgoParams algo = spec.algo;
    algo.seed = root.stream("slot", slot).key();
    RrmSolution sol;
    if (algorithm == Algorithm::rnp2)
      sol = solve_rnp2(slot_cfg, spec.ue_table, spec.sbs_table, channels, algo, beams, &base);
    else
      sol = solve_rnp1(slot_cfg, spec.ue_table, spec.sbs_table, channels, algo, &base);

    SlotRecord rec;
    rec.slot = slot;
    rec.round = round;
    rec.seed = algo.seed;
    rec.weights = slot_cfg.weights;
    rec.ue_rate_bps.assign(cfg.total_ue(), 0.0);
    if (sol.succeeded()) {
      rec.status = "ok";
      for (int l = 0; l < cfg.num_clusters; ++l)
        for (int u = 0; u < cfg.ue_per_cluster; ++u) {
          const int ue = cfg.ue_index(l, u);
          for (int j = 0; j < j_ue; ++j) {
            if (std::round(sol.vars.alpha((l * cfg.ue_per_cluster + u) * j_ue + j)) == 1.0) {
              rec.ue_rate_bps[ue] = spec.ue_table[j].rate_bps_hz * cfg.access_bandwidth_hz;
              served_this_round[ue] = true;
            }
          }
        }
    } else {
      rec.status = std::string("failed:") + to_string(sol.status);
    }
    for (int i = 0; i < cfg.total_ue(); ++i)
      cumulative_bits[i] += rec.ue_rate_bps[i] * spec.slot_duration_s;
    rec.cumulative_bits = cumulative_bits;
    result.slots.push_back(std::move(rec));

    if (slot_in_round == slots_per_round - 1) {
      std::vector<double> ratios(cfg.num_clusters, 1.0);
      for (int l = 0; l < cfg.num_clusters; ++l) {
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (int u = 0; u < cfg.ue_per_cluster; ++u) {
          const double v = cumulative_bits[cfg.ue_index(l, u)];
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
        ratios[l] = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
      }
      result.fairness_ratio.push_back(std::move(ratios));
    }
  }
  return result;
}

std::string records_to_csv(const std::vector<RunRecord>& records) {
  std::ostringstream out;
  out.precision(17);
  out << "scenario,sweep_index,mbs_power_dbm,sbs_power_dbm,clusters,sbs_per_cluster,"
         "mbs_rows,mbs_cols,chi_backhaul,chi_access,seed,algorithm,status,"
         "access_throughput_bps,planned_access_throughput_bps,backhaul_throughput_bps,"
         "objective,ue_rate_indices,iterations,wall_time_s,channel_hash\n";
  for (const RunRecord& r : records) {
    out << r.scenario_id << ',' << r.point.index << ',' << r.point.mbs_power_dbm << ','
        << r.point.sbs_power_dbm << ',' << r.point.clusters << ',' << r.point.sbs_per_cluster
        << ',' << r.point.mbs_array.rows << ',' << r.point.mbs_array.cols << ','
        << r.point.chi_backhaul << ',' << r.point.chi_access << ',' << r.seed << ','
        << to_string(r.algorithm) << ',' << r.status << ',' << r.access_throughput_bps << ','
        << r.planned_access_throughput_bps << ',' << r.backhaul_throughput_bps << ','
        << r.objective << ',';
    for (std::size_t i = 0; i < r.ue_rate_indices.size(); ++i) {
      if (i) out << ';';
      out << r.ue_rate_indices[i];
    }
    out << ',' << r.iterations << ',' << r.wall_time_s << ',' << r.channel_hash << '\n';
  }
  return out.str();
}

std::string summary_to_json(const ScenarioResult& result) {
  json j;
  j["failures"] = result.failures;
  json entries = json::array();
  for (const ScenarioSummaryEntry& e : result.summary) {
    entries.push_back({{"point", e.point_key},
                       {"algorithm", to_string(e.algorithm)},
                       {"successes", e.successes},
                       {"failures", e.failures},
                       {"mean_access_bps", e.mean_access_bps},
                       {"std_access_bps", e.std_access_bps},
                       {"median_wall_time_s", e.median_wall_time_s}});
  }
  j["summary"] = std::move(entries);
  return j.dump(2);
}

std::string slotted_to_csv(const SlottedResult& result) {
  std::ostringstream out;
  out.precision(17);
  out << "slot,round,status,ue,rate_bps,cumulative_bits,weight\n";
  for (const SlotRecord& rec : result.slots)
    for (std::size_t ue = 0; ue < rec.ue_rate_bps.size(); ++ue)
      out << rec.slot << ',' << rec.round << ',' << rec.status << ',' << ue << ','
          << rec.ue_rate_bps[ue] << ',' << rec.cumulative_bits[ue] << ','
          << rec.weights[ue] << '\n';
  return out.str();
}

namespace {

json topology_to_json(const TopologyParams& t) {
  return {{"cluster_ring_radius_m", t.cluster_ring_radius_m},
          {"sbs_circle_radius_m", t.sbs_circle_radius_m},
          {"ue_disk_radius_m", t.ue_disk_radius_m},
          {"mbs_height_m", t.mbs_height_m},
          {"sbs_height_m", t.sbs_height_m},
          {"ue_height_m", t.ue_height_m}};
}

void topology_from_json(const json& j, TopologyParams& t) {
  t.cluster_ring_radius_m = j.value("cluster_ring_radius_m", t.cluster_ring_radius_m);
  t.sbs_circle_radius_m = j.value("sbs_circle_radius_m", t.sbs_circle_radius_m);
  t.ue_disk_radius_m = j.value("ue_disk_radius_m", t.ue_disk_radius_m);
  t.mbs_height_m = j.value("mbs_height_m", t.mbs_height_m);
  t.sbs_height_m = j.value("sbs_height_m", t.sbs_height_m);
  t.ue_height_m = j.value("ue_height_m", t.ue_height_m);
}

json channel_to_json(const ChannelModelParams& c) {
  return {{"carrier_hz", c.carrier_hz},
          {"backhaul_shadow_sigma_db", c.backhaul_shadow_sigma_db},
          {"access_shadow_sigma_los_db", c.access_shadow_sigma_los_db},
          {"access_shadow_sigma_nlos_db", c.access_shadow_sigma_nlos_db},
          {"rician_k_db", c.rician_k_db},
          {"los_probability_override", c.los_probability_override},
          {"enable_shadowing", c.enable_shadowing}};
}

void channel_from_json(const json& j, ChannelModelParams& c) {
  c.carrier_hz = j.value("carrier_hz", c.carrier_hz);
  c.backhaul_shadow_sigma_db = j.value("backhaul_shadow_sigma_db", c.backhaul_shadow_sigma_db);
  c.access_shadow_sigma_los_db =
      j.value("access_shadow_sigma_los_db", c.access_shadow_sigma_los_db);
  c.access_shadow_sigma_nlos_db =
      j.value("access_shadow_sigma_nlos_db", c.access_shadow_sigma_nlos_db);
  c.rician_k_db = j.value("rician_k_db", c.rician_k_db);
  c.los_probability_override = j.value("los_probability_override", c.los_probability_override);
  c.enable_shadowing = j.value("enable_shadowing", c.enable_shadowing);
}

json algo_to_json(const AlgoParams& a) {
  return {{"max_mm_iterations", a.max_mm_iterations},
          {"objective_improvement_tol", a.objective_improvement_tol},
          {"lambda_alpha", a.lambda_alpha},
          {"lambda_beta", a.lambda_beta},
          {"lambda_kappa", a.lambda_kappa},
          {"lambda_escalation", a.lambda_escalation},
          {"lambda_cap_factor", a.lambda_cap_factor},
          {"binary_mse_tol", a.binary_mse_tol},
          {"bnb_node_limit", a.bnb_node_limit},
          {"bnb_rel_gap", a.bnb_rel_gap},
          {"branching_rule", a.branching_rule},
          {"initial_attempt_limit", a.initial_attempt_limit},
          {"initial_candidates", a.initial_candidates},
          {"predesign_realizations", a.predesign_realizations},
          {"feasibility_tol", a.solver.feasibility_tol},
          {"gap_tol", a.solver.gap_tol},
          {"max_iterations", a.solver.max_iterations}};
}

void algo_from_json(const json& j, AlgoParams& a) {
  a.max_mm_iterations = j.value("max_mm_iterations", a.max_mm_iterations);
  a.objective_improvement_tol =
      j.value("objective_improvement_tol", a.objective_improvement_tol);
  a.lambda_alpha = j.value("lambda_alpha", a.lambda_alpha);
  a.lambda_beta = j.value("lambda_beta", a.lambda_beta);
  a.lambda_kappa = j.value("lambda_kappa", a.lambda_kappa);
  a.lambda_escalation = j.value("lambda_escalation", a.lambda_escalation);
  a.lambda_cap_factor = j.value("lambda_cap_factor", a.lambda_cap_factor);
  a.binary_mse_tol = j.value("binary_mse_tol", a.binary_mse_tol);
  a.bnb_node_limit = j.value("bnb_node_limit", a.bnb_node_limit);
  a.bnb_rel_gap = j.value("bnb_rel_gap", a.bnb_rel_gap);
  a.branching_rule = j.value("branching_rule", a.branching_rule);
  a.initial_attempt_limit = j.value("initial_attempt_limit", a.initial_attempt_limit);
  a.initial_candidates = j.value("initial_candidates", a.initial_candidates);
  a.predesign_realizations = j.value("predesign_realizations", a.predesign_realizations);
  a.solver.feasibility_tol = j.value("feasibility_tol", a.solver.feasibility_tol);
  a.solver.gap_tol = j.value("gap_tol", a.solver.gap_tol);
  a.solver.max_iterations = j.value("max_iterations", a.solver.max_iterations);
}

}  // namespace

std::string scenario_to_json(const ScenarioSpec& spec) {
  json j;
  j["id"] = spec.id;
  j["config"] = json::parse(config_to_json(spec.base_config, spec.ue_table, spec.sbs_table));
  j["topology"] = topology_to_json(spec.topology);
  j["channel_model"] = channel_to_json(spec.channel_model);
  j["sweep"] = {{"mbs_power_dbm", spec.mbs_power_dbm},
                {"sbs_power_dbm", spec.sbs_power_dbm},
                {"clusters", spec.clusters},
                {"sbs_per_cluster", spec.sbs_per_cluster},
                {"chi_backhaul", spec.chi_backhaul},
                {"chi_access", spec.chi_access}};
  json arrays = json::array();
  for (const ArrayGeometry& a : spec.mbs_arrays)
    arrays.push_back({{"rows", a.rows}, {"cols", a.cols}});
  j["sweep"]["mbs_arrays"] = std::move(arrays);
  j["realizations"] = spec.realizations;
  j["seed_base"] = spec.seed_base;
  json algos = json::array();
  for (const Algorithm a : spec.algorithms) algos.push_back(to_string(a));
  j["algorithms"] = std::move(algos);
  j["algo_params"] = algo_to_json(spec.algo);
  j["slots"] = spec.slots;
  j["slot_duration_s"] = spec.slot_duration_s;
  j["out_dir"] = spec.out_dir;
  return j.dump(2);
}

ScenarioSpec scenario_from_json(const std::string& text) {
  const json j = json::parse(text);
  ScenarioSpec spec;
  spec.id = j.value("id", spec.id);
  if (j.contains("config")) {
    config_from_json(j.at("config").dump(), spec.base_config, spec.ue_table, spec.sbs_table);
  }
  if (j.contains("topology")) topology_from_json(j.at("topology"), spec.topology);
  if (j.contains("channel_model")) channel_from_json(j.at("channel_model"), spec.channel_model);
  if (j.contains("sweep")) {
    const json& s = j.at("sweep");
    spec.mbs_power_dbm = s.value("mbs_power_dbm", spec.mbs_power_dbm);
    spec.sbs_power_dbm = s.value("sbs_power_dbm", spec.sbs_power_dbm);
    spec.clusters = s.value("clusters", spec.clusters);
    spec.sbs_per_cluster = s.value("sbs_per_cluster", spec.sbs_per_cluster);
    spec.chi_backhaul = s.value("chi_backhaul", spec.chi_backhaul);
    spec.chi_access = s.value("chi_access", spec.chi_access);
    if (s.contains("mbs_arrays"))
      for (const json& a : s.at("mbs_arrays"))
        spec.mbs_arrays.push_back({a.at("rows").get<int>(), a.at("cols").get<int>()});
  }
  spec.realizations = j.value("realizations", spec.realizations);
  spec.seed_base = j.value("seed_base", spec.seed_base);
  if (j.contains("algorithms")) {
    spec.algorithms.clear();
    for (const json& a : j.at("algorithms")) {
      const auto algo = algorithm_from_string(a.get<std::string>());
      if (!algo) throw std::invalid_argument("unknown algorithm " + a.get<std::string>());
      spec.algorithms.push_back(*algo);
    }
  }
  if (j.contains("algo_params")) algo_from_json(j.at("algo_params"), spec.algo);
  spec.slots = j.value("slots", spec.slots);
  spec.slot_duration_s = j.value("slot_duration_s", spec.slot_duration_s);
  spec.out_dir = j.value("out_dir", spec.out_dir);
  return spec;
}

}  // namespace sbrrm

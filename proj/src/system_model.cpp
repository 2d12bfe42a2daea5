#include "sbrrm/system_model.hpp"

#include <cmath>
#include <json.hpp>
#include <sstream>

namespace sbrrm {

using nlohmann::json;

void SystemConfig::set_uniform_weights() {
  weights.assign(static_cast<std::size_t>(total_ue()), 1.0 / total_ue());
}

RateTable default_rate_table() {
  RateTable t;
  t.entries = {{0.2344, 0.2159},
               {0.6016, 0.6610},
               {1.1758, 1.7474},
               {2.7305, 10.6316},
               {5.5547, 95.6974}};
  return t;
}

int rate_index_for_sinr(const RateTable& table, double sinr) {
  int best = -1;
  for (int j = 0; j < table.size(); ++j) {
    if (table[j].sinr_target <= sinr) best = j;
  }
  return best;
}

Topology make_default_topology(const SystemConfig& cfg, const TopologyParams& params,
                               const RandomStream& stream) {
  Topology topo;
  topo.mbs_position = {0.0, 0.0, params.mbs_height_m};
  topo.clusters.resize(cfg.num_clusters);
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (int l = 0; l < cfg.num_clusters; ++l) {
    ClusterTopology& cl = topo.clusters[l];
    const double phi = 2.0 * M_PI * l / cfg.num_clusters;
    cl.center = {params.cluster_ring_radius_m * std::cos(phi),
                 params.cluster_ring_radius_m * std::sin(phi), 0.0};
    centroid += cl.center;
    for (int b = 0; b < cfg.sbs_per_cluster; ++b) {
      const double psi = 2.0 * M_PI * b / cfg.sbs_per_cluster;
      Eigen::Vector3d pos = cl.center;
      pos.x() += params.sbs_circle_radius_m * std::cos(psi);
      pos.y() += params.sbs_circle_radius_m * std::sin(psi);
      pos.z() = params.sbs_height_m;
      cl.sbs_positions.push_back(pos);
      Eigen::Vector3d look = cl.center - pos;
      look.z() = 0.0;
      cl.sbs_boresights.push_back(look.norm() > 0 ? look.normalized()
                                                  : Eigen::Vector3d::UnitX());
    }
    RandomStream ue_stream = stream.stream("topology.ue", static_cast<std::uint64_t>(l));
    for (int u = 0; u < cfg.ue_per_cluster; ++u) {
      const double r = params.ue_disk_radius_m * std::sqrt(ue_stream.uniform());
      const double a = 2.0 * M_PI * ue_stream.uniform();
      Eigen::Vector3d pos = cl.center;
      pos.x() += r * std::cos(a);
      pos.y() += r * std::sin(a);
      pos.z() = params.ue_height_m;
      cl.ue_positions.push_back(pos);
    }
  }
  centroid /= std::max(1, cfg.num_clusters);
  Eigen::Vector3d look = centroid - topo.mbs_position;
  look.z() = 0.0;
  topo.mbs_boresight = look.norm() > 0 ? look.normalized() : Eigen::Vector3d::UnitX();
  return topo;
}

namespace {

void check_table(const RateTable& t, const char* name, ValidationReport& report) {
  if (t.entries.empty()) {
    report.violations.push_back(std::string(name) + ": empty");
    return;
  }
  for (int j = 0; j < t.size(); ++j) {
    if (t[j].rate_bps_hz <= 0.0 || t[j].sinr_target <= 0.0) {
      report.violations.push_back(std::string(name) + ": entry " + std::to_string(j + 1) +
                                  " not positive");
    }
    if (j > 0 && (t[j].rate_bps_hz <= t[j - 1].rate_bps_hz ||
                  t[j].sinr_target <= t[j - 1].sinr_target)) {
      report.violations.push_back(std::string(name) + ": not strictly increasing at entry " +
                                  std::to_string(j + 1));
    }
  }
}

}  // namespace

ValidationReport validate_config(const SystemConfig& cfg, const RateTable& ue_table,
                                 const RateTable& sbs_table) {
  ValidationReport report;
  auto bad = [&report](const std::string& msg) { report.violations.push_back(msg); };

  if (cfg.num_clusters < 1) bad("num_clusters: must be >= 1");
  if (cfg.sbs_per_cluster < 1) bad("sbs_per_cluster: must be >= 1");
  if (cfg.ue_served_per_cluster < 1) bad("ue_served_per_cluster: must be >= 1");
  if (cfg.ue_per_cluster < cfg.ue_served_per_cluster)
    bad("ue_per_cluster: must be >= ue_served_per_cluster");
  if (cfg.sbs_max_streams < 1) bad("sbs_max_streams: must be >= 1");
  if (cfg.min_serving_sbs < 1) bad("min_serving_sbs: must be >= 1");
  if (cfg.max_serving_sbs < cfg.min_serving_sbs)
    bad("max_serving_sbs: must be >= min_serving_sbs");
  if (cfg.max_serving_sbs > cfg.sbs_per_cluster)
    bad("max_serving_sbs: must be <= sbs_per_cluster");
  if (cfg.mbs_array.rows < 1 || cfg.mbs_array.cols < 1) bad("mbs_array: must be >= 1x1");
  if (cfg.sbs_array.rows < 1 || cfg.sbs_array.cols < 1) bad("sbs_array: must be >= 1x1");

  // Stream budget: with fewer streams than served UEs the per-SBS stream cap
  // and the per-cluster admission count cannot hold together (C7/C14 conflict).
  if (cfg.ue_served_per_cluster > cfg.sbs_per_cluster * cfg.sbs_max_streams)
    bad("ue_served_per_cluster: C7/C14 conflict, exceeds sbs_per_cluster * sbs_max_streams");

  if (!(cfg.mbs_power_w > 0.0)) bad("mbs_power_w: must be > 0");
  if (!(cfg.sbs_power_w > 0.0)) bad("sbs_power_w: must be > 0");
  if (!(cfg.access_bandwidth_hz > 0.0)) bad("access_bandwidth_hz: must be > 0");
  if (!(cfg.backhaul_bandwidth_hz > 0.0)) bad("backhaul_bandwidth_hz: must be > 0");
  if (!(cfg.sbs_noise_w > 0.0)) bad("sbs_noise_w: must be > 0");
  if (!(cfg.ue_noise_w > 0.0)) bad("ue_noise_w: must be > 0");

  if (static_cast<int>(cfg.weights.size()) != cfg.total_ue()) {
    bad("weights: size must be num_clusters * ue_per_cluster");
  } else {
    double sum = 0.0;
    bool negative = false;
    for (double w : cfg.weights) {
      sum += w;
      negative = negative || w < 0.0;
    }
    if (negative) bad("weights: must be nonnegative");
    if (std::abs(sum - 1.0) > 1e-12) bad("weights: must sum to 1 within 1e-12");
  }

  check_table(ue_table, "ue_rate_table", report);
  check_table(sbs_table, "sbs_rate_table", report);
  return report;
}

ValidationReport validate_topology(const SystemConfig& cfg, const Topology& topology) {
  ValidationReport report;
  auto bad = [&report](const std::string& msg) { report.violations.push_back(msg); };
  if (static_cast<int>(topology.clusters.size()) != cfg.num_clusters)
    bad("topology: cluster count mismatch");
  if (std::abs(topology.mbs_boresight.norm() - 1.0) > 1e-9)
    bad("topology: mbs_boresight not unit-normalized");
  for (std::size_t l = 0; l < topology.clusters.size(); ++l) {
    const ClusterTopology& cl = topology.clusters[l];
    if (static_cast<int>(cl.sbs_positions.size()) != cfg.sbs_per_cluster)
      bad("topology: cluster " + std::to_string(l) + " SBS count mismatch");
    if (static_cast<int>(cl.ue_positions.size()) != cfg.ue_per_cluster)
      bad("topology: cluster " + std::to_string(l) + " UE count mismatch");
    for (const Eigen::Vector3d& d : cl.sbs_boresights) {
      if (std::abs(d.norm() - 1.0) > 1e-9) {
        bad("topology: cluster " + std::to_string(l) + " boresight not unit-normalized");
        break;
      }
    }
  }
  return report;
}

double lower_bound_rate(const SystemConfig& cfg, const RateTable& ue_table) {
  return ue_table[0].rate_bps_hz * cfg.access_bandwidth_hz * cfg.ue_served_per_cluster *
         cfg.num_clusters;
}

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

namespace {

json table_to_json(const RateTable& t) {
  json arr = json::array();
  for (const RateEntry& e : t.entries)
    arr.push_back({{"rate_bps_hz", e.rate_bps_hz}, {"sinr_target", e.sinr_target}});
  return arr;
}

RateTable table_from_json(const json& arr) {
  RateTable t;
  for (const json& e : arr)
    t.entries.push_back({e.at("rate_bps_hz").get<double>(), e.at("sinr_target").get<double>()});
  return t;
}

}  // namespace

std::string config_to_json(const SystemConfig& cfg, const RateTable& ue_table,
                           const RateTable& sbs_table) {
  json j{{"num_clusters", cfg.num_clusters},
         {"sbs_per_cluster", cfg.sbs_per_cluster},
         {"ue_per_cluster", cfg.ue_per_cluster},
         {"ue_served_per_cluster", cfg.ue_served_per_cluster},
         {"mbs_array", {{"rows", cfg.mbs_array.rows}, {"cols", cfg.mbs_array.cols}}},
         {"sbs_array", {{"rows", cfg.sbs_array.rows}, {"cols", cfg.sbs_array.cols}}},
         {"sbs_max_streams", cfg.sbs_max_streams},
         {"min_serving_sbs", cfg.min_serving_sbs},
         {"max_serving_sbs", cfg.max_serving_sbs},
         {"mbs_power_w", cfg.mbs_power_w},
         {"sbs_power_w", cfg.sbs_power_w},
         {"access_bandwidth_hz", cfg.access_bandwidth_hz},
         {"backhaul_bandwidth_hz", cfg.backhaul_bandwidth_hz},
         {"sbs_noise_w", cfg.sbs_noise_w},
         {"ue_noise_w", cfg.ue_noise_w},
         {"weights", cfg.weights},
         {"ue_rate_table", table_to_json(ue_table)},
         {"sbs_rate_table", table_to_json(sbs_table)}};
  return j.dump(2);
}

void config_from_json(const std::string& text, SystemConfig& cfg, RateTable& ue_table,
                      RateTable& sbs_table) {
  const json j = json::parse(text);
  cfg.num_clusters = j.at("num_clusters").get<int>();
  cfg.sbs_per_cluster = j.at("sbs_per_cluster").get<int>();
  cfg.ue_per_cluster = j.at("ue_per_cluster").get<int>();
  cfg.ue_served_per_cluster = j.at("ue_served_per_cluster").get<int>();
  cfg.mbs_array = {j.at("mbs_array").at("rows").get<int>(), j.at("mbs_array").at("cols").get<int>()};
  cfg.sbs_array = {j.at("sbs_array").at("rows").get<int>(), j.at("sbs_array").at("cols").get<int>()};
  cfg.sbs_max_streams = j.at("sbs_max_streams").get<int>();
  cfg.min_serving_sbs = j.at("min_serving_sbs").get<int>();
  cfg.max_serving_sbs = j.at("max_serving_sbs").get<int>();
  cfg.mbs_power_w = j.at("mbs_power_w").get<double>();
  cfg.sbs_power_w = j.at("sbs_power_w").get<double>();
  cfg.access_bandwidth_hz = j.at("access_bandwidth_hz").get<double>();
  cfg.backhaul_bandwidth_hz = j.at("backhaul_bandwidth_hz").get<double>();
  cfg.sbs_noise_w = j.at("sbs_noise_w").get<double>();
  cfg.ue_noise_w = j.at("ue_noise_w").get<double>();
  cfg.weights = j.at("weights").get<std::vector<double>>();
  if (j.contains("ue_rate_table")) ue_table = table_from_json(j.at("ue_rate_table"));
  if (j.contains("sbs_rate_table")) sbs_table = table_from_json(j.at("sbs_rate_table"));
}

}  // namespace sbrrm

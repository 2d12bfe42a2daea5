#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "sbrrm/rng.hpp"

namespace sbrrm {

struct ArrayGeometry {
  int rows = 1;
  int cols = 1;
  int count() const { return rows * cols; }
};

/// Static problem data: dimensions, powers, bandwidths, noise and weights.
/// Powers are linear watts throughout; dBm exists only at the CLI boundary.
struct SystemConfig {
  int num_clusters = 5;           // L
  int sbs_per_cluster = 3;        // B
  int ue_per_cluster = 20;        // U
  int ue_served_per_cluster = 4;  // U_served
  ArrayGeometry mbs_array{16, 4};
  ArrayGeometry sbs_array{4, 4};
  int sbs_max_streams = 4;
  int min_serving_sbs = 1;  // B_min
  int max_serving_sbs = 3;  // B_max
  double mbs_power_w = 3.9810717055349722;   // 36 dBm
  double sbs_power_w = 0.025118864315095794; // 14 dBm
  double access_bandwidth_hz = 100e6;
  double backhaul_bandwidth_hz = 100e6;
  double sbs_noise_w = 1.9952623149688787e-12;  // -87 dBm over 100 MHz
  double ue_noise_w = 1.9952623149688787e-12;
  /// One weight per UE, indexed cluster-major: weights[l * U + u].
  std::vector<double> weights;

  int mbs_antennas() const { return mbs_array.count(); }
  int sbs_antennas() const { return sbs_array.count(); }
  int total_sbs() const { return num_clusters * sbs_per_cluster; }
  int total_ue() const { return num_clusters * ue_per_cluster; }
  int ue_index(int cluster, int ue) const { return cluster * ue_per_cluster + ue; }
  int sbs_index(int cluster, int sbs) const { return cluster * sbs_per_cluster + sbs; }
  double weight(int cluster, int ue) const { return weights[ue_index(cluster, ue)]; }

  /// Equal priority for every UE: w_u = 1 / (L * U).
  void set_uniform_weights();
};

struct RateEntry {
  double rate_bps_hz = 0.0;   // R_j
  double sinr_target = 0.0;   // Gamma_j, linear
};

/// Ordered table of (rate, target SINR) pairs, strictly increasing in both.
struct RateTable {
  std::vector<RateEntry> entries;
  int size() const { return static_cast<int>(entries.size()); }
  const RateEntry& operator[](int j) const { return entries[j]; }
};

/// The five-entry QPSK/QAM table used for both UE and SBS links.
RateTable default_rate_table();

/// Largest index j with Gamma_j <= sinr, or -1 if even the smallest target is
/// not met.
int rate_index_for_sinr(const RateTable& table, double sinr);

struct ClusterTopology {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  std::vector<Eigen::Vector3d> sbs_positions;
  std::vector<Eigen::Vector3d> ue_positions;
  /// Unit boresight directions of the SBS arrays (toward the cluster center).
  std::vector<Eigen::Vector3d> sbs_boresights;
};

struct Topology {
  Eigen::Vector3d mbs_position = Eigen::Vector3d::Zero();
  Eigen::Vector3d mbs_boresight = Eigen::Vector3d::UnitX();
  std::vector<ClusterTopology> clusters;
};

/// Knobs of the default layout generator. The geometry is a config input;
/// these defaults are declared here, not taken from any reference deployment.
struct TopologyParams {
  double cluster_ring_radius_m = 100.0;
  double sbs_circle_radius_m = 15.0;
  double ue_disk_radius_m = 35.0;
  double mbs_height_m = 25.0;
  double sbs_height_m = 10.0;
  double ue_height_m = 1.5;
};

/// Cluster centers spread at equal angles on a ring around the MBS, SBSs on a
/// circle around each center, UEs uniform in a disk. Deterministic given the
/// stream.
Topology make_default_topology(const SystemConfig& cfg, const TopologyParams& params,
                               const RandomStream& stream);

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

/// Checks every invariant of the config and both rate tables; returns one
/// entry per violation, naming the offending field.
ValidationReport validate_config(const SystemConfig& cfg, const RateTable& ue_table,
                                 const RateTable& sbs_table);

ValidationReport validate_topology(const SystemConfig& cfg, const Topology& topology);

/// Worst-case access throughput in bps: every admitted UE at the lowest rate.
double lower_bound_rate(const SystemConfig& cfg, const RateTable& ue_table);

double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);

// JSON round-trip; schema documented in docs/formats.md.
std::string config_to_json(const SystemConfig& cfg, const RateTable& ue_table,
                           const RateTable& sbs_table);
void config_from_json(const std::string& text, SystemConfig& cfg, RateTable& ue_table,
                      RateTable& sbs_table);

}  // namespace sbrrm

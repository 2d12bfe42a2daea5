#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "sbrrm/rng.hpp"
#include "sbrrm/system_model.hpp"

namespace sbrrm {

/// Uniform planar array in its own frame: elements on a rows x cols grid with
/// the given pitch in wavelengths, boresight along the frame x-axis.
struct PlanarArray {
  int rows = 1;
  int cols = 1;
  double spacing_wavelengths = 0.5;
  Eigen::Vector3d boresight = Eigen::Vector3d::UnitX();
  int count() const { return rows * cols; }
};

/// Simplified propagation model standing in for the full geometry-based
/// standard: UMa-LOS path loss on the backhaul, UMi LOS/NLOS on the access,
/// log-normal shadowing, Rician (LOS) or Rayleigh (NLOS) small-scale fading.
/// All defaults are declared values of this artifact, not reference numbers.
struct ChannelModelParams {
  double carrier_hz = 41e9;
  double backhaul_shadow_sigma_db = 4.0;
  double access_shadow_sigma_los_db = 4.0;
  double access_shadow_sigma_nlos_db = 7.82;
  double rician_k_db = 10.0;
  /// Forces every access link LOS (>= 1) or NLOS (<= 0); in between the
  /// distance-based UMi probability applies.
  double los_probability_override = -1.0;
  bool enable_shadowing = true;
};

/// One channel realization: backhaul vectors g_b (MBS -> SBS b) and access
/// vectors h_{b,u} (SBS b -> UE u), indexed by the global SBS and UE indices
/// of the config.
struct ChannelSet {
  std::vector<Eigen::VectorXcd> backhaul;                // g_b, length N_tx_MBS
  std::vector<std::vector<Eigen::VectorXcd>> access;     // access[b][u_global], length N_tx_SBS
  double carrier_hz = 0.0;
  std::string seed_provenance;

  const Eigen::VectorXcd& g(int sbs) const { return backhaul[sbs]; }
  const Eigen::VectorXcd& h(int sbs, int ue_global) const { return access[sbs][ue_global]; }
};

enum class PerturbationScope { backhaul, access, both };

/// Contamination model: estimated = sqrt(1 - chi^2) * exact + chi * noise,
/// with noise ~ CN(0, ||exact||^2 I / K).
struct PerturbationSpec {
  double chi = 0.0;
  PerturbationScope scope = PerturbationScope::both;
  std::uint64_t seed = 0;
};

/// UPA response for a direction given in the array frame. Entry (m, n) has
/// phase 2*pi*spacing*(m*sin(el) + n*sin(az)*cos(el)) relative to element
/// (0, 0); every entry has unit modulus.
Eigen::VectorXcd steering_vector(const PlanarArray& array, double azimuth_rad,
                                 double elevation_rad);

/// Azimuth/elevation of `target` as seen from `origin` in the frame whose
/// x-axis is the (horizontal) boresight direction.
void relative_angles(const Eigen::Vector3d& origin, const Eigen::Vector3d& boresight,
                     const Eigen::Vector3d& target, double& azimuth_rad,
                     double& elevation_rad);

double uma_los_pathloss_db(double distance_m, double carrier_hz);
double umi_los_pathloss_db(double distance_m, double carrier_hz);
double umi_nlos_pathloss_db(double distance_m, double carrier_hz);
/// Distance-based UMi LOS probability.
double umi_los_probability(double distance_2d_m);

/// g_b = sqrt(pathloss * shadowing) * steering(MBS array, direction to b).
/// Pure function of (topology, cfg, params, seed).
std::vector<Eigen::VectorXcd> generate_backhaul_channels(const Topology& topology,
                                                         const SystemConfig& cfg,
                                                         const ChannelModelParams& params,
                                                         std::uint64_t seed);

/// LOS links are Rician around the steering vector, NLOS links i.i.d. complex
/// Gaussian, both scaled by path loss and shadowing.
std::vector<std::vector<Eigen::VectorXcd>> generate_access_channels(
    const Topology& topology, const SystemConfig& cfg, const ChannelModelParams& params,
    std::uint64_t seed);

ChannelSet generate_channels(const Topology& topology, const SystemConfig& cfg,
                             const ChannelModelParams& params, std::uint64_t seed);

ChannelSet perturb_channels(const ChannelSet& channels, const PerturbationSpec& spec);

/// Order-independent content hash, recorded to prove paired comparisons ran
/// on identical realizations.
std::string channel_hash(const ChannelSet& channels);

std::string channels_to_json(const ChannelSet& channels);
ChannelSet channels_from_json(const std::string& text);

}  // namespace sbrrm

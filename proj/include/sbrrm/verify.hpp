#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "sbrrm/channel.hpp"
#include "sbrrm/conic.hpp"
#include "sbrrm/formulation.hpp"
#include "sbrrm/system_model.hpp"

namespace sbrrm::verify {

/// Per-SBS SINRs computed straight from the multicast beams, plus the
/// per-cluster minimum that sets the cluster rate.
struct SbsSinr {
  Eigen::VectorXd per_sbs;      // by global SBS index
  Eigen::VectorXd cluster_min;  // by cluster
};

SbsSinr sinr_sbs(const SystemConfig& cfg, const ChannelSet& channels,
                 const std::vector<Eigen::VectorXcd>& m);

/// Per-UE SINRs with effective beamformers kappa * w, exactly as the system
/// model defines them (coherent in-cluster combining, intra- and
/// inter-cluster interference).
Eigen::VectorXd sinr_ue(const SystemConfig& cfg, const ChannelSet& channels,
                        const std::vector<Eigen::MatrixXcd>& w, const Eigen::VectorXd& kappa);

struct FamilyCheck {
  std::string family;
  bool pass = true;
  double worst_slack = std::numeric_limits<double>::infinity();
};

struct FeasibilityReport {
  std::vector<FamilyCheck> families;
  Eigen::VectorXd ue_sinr;
  Eigen::VectorXd cluster_sbs_sinr;
  double objective = 0.0;  // recomputed weighted sum-rate
  bool pass = true;

  const FamilyCheck* find(const std::string& family) const;
  std::string to_json() const;
};

/// Checks every constraint of the original problem against a candidate
/// solution, with relative tolerance where constraints have natural scale and
/// 1e-9 absolute for integrality.
FeasibilityReport check_feasibility_pprime(const SystemConfig& cfg, const RateTable& ue_table,
                                           const RateTable& sbs_table,
                                           const ChannelSet& channels, const RrmVariables& vars,
                                           double tol = 1e-6);

enum class BruteForceStatus { optimal, infeasible, too_large };

struct BruteForceResult {
  BruteForceStatus status = BruteForceStatus::infeasible;
  double objective = 0.0;
  Eigen::VectorXd alpha, beta, kappa;
  std::uint64_t tuples_enumerated = 0;
};

/// Exhaustive reference optimum: enumerates every binary tuple obeying the
/// counting structure and solves the fixed-binary continuous program for
/// each. Refuses instances whose filtered tuple space exceeds max_tuples.
/// The enumeration loop runs OpenMP-parallel when parallel=true; the serial
/// path is kept as a reference and both give identical results.
BruteForceResult brute_force_optimum(const SystemConfig& cfg, const RateTable& ue_table,
                                     const RateTable& sbs_table, const ChannelSet& channels,
                                     const conic::SolverOptions& solver_opts = {},
                                     std::uint64_t max_tuples = 1u << 20,
                                     bool parallel = true);

/// Number of binary tuples the brute force would enumerate (before the
/// static backhaul-budget filter).
std::uint64_t count_admissible_tuples(const SystemConfig& cfg, int j_ue, int j_sbs);

}  // namespace sbrrm::verify

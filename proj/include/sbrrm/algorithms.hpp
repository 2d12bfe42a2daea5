#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sbrrm/channel.hpp"
#include "sbrrm/conic.hpp"
#include "sbrrm/formulation.hpp"
#include "sbrrm/system_model.hpp"

namespace sbrrm {

struct AlgoParams {
  int max_mm_iterations = 30;               // MM iteration cap per penalty level
  double objective_improvement_tol = 1e-4;  // relative surrogate improvement stop
  /// Penalty weights; 0 selects the default scale
  /// 10 * max_j(omega_max * R_j) * L * U.
  double lambda_alpha = 0.0;
  double lambda_beta = 0.0;
  double lambda_kappa = 0.0;
  double lambda_escalation = 5.0;
  double lambda_cap_factor = 125.0;  // cap = initial lambda * cap_factor
  double binary_mse_tol = 1e-4;
  int bnb_node_limit = 20000;
  double bnb_rel_gap = 1e-4;
  std::string branching_rule = "most-fractional";
  int initial_attempt_limit = 100;
  int initial_candidates = 3;       // feasible starts examined before picking the best
  int predesign_realizations = 50;  // channel draws averaged into the multicast predesign
  std::uint64_t seed = 0;
  conic::SolverOptions solver;
};

enum class RrmStatus { optimal, feasible, infeasible, node_limit, failed };

const char* to_string(RrmStatus status);

struct IterationTrace {
  int iteration = 0;
  double weighted_rate = 0.0;
  double surrogate = 0.0;   // linearized penalized objective at the iterate
  double penalized = 0.0;   // exact penalized objective at the iterate
  double binary_mse = 0.0;
  double lambda_alpha = 0.0;
  double wall_time_s = 0.0;
};

struct RrmSolution {
  RrmStatus status = RrmStatus::failed;
  RrmVariables vars;
  double objective = 0.0;              // weighted sum-rate, no bandwidth factor
  double access_throughput = 0.0;      // bps
  double backhaul_throughput = 0.0;    // bps
  double bound = 0.0;                  // certified bound (branch-and-bound)
  double rel_gap = 0.0;
  int nodes_explored = 0;
  int iterations = 0;
  std::vector<IterationTrace> trace;
  double wall_time_s = 0.0;
  int repair_rounds = 0;
  std::string message;

  bool succeeded() const {
    return status == RrmStatus::optimal || status == RrmStatus::feasible;
  }
};

/// Exact search: best-first branch-and-bound over the relaxed program, most
/// fractional branching, incumbents from integral nodes. Terminates with a
/// certified relative gap or at the node limit.
RrmSolution solve_bnc_misocp(const SystemConfig& cfg, const RateTable& ue_table,
                             const RateTable& sbs_table, const ChannelSet& channels,
                             const AlgoParams& params);

/// Backhaul-only bound: the same search over the beta/multicast program.
/// backhaul_throughput carries the bound value; vars holds the argmax beams
/// and rate selection.
RrmSolution solve_upper_bound(const SystemConfig& cfg, const RateTable& sbs_table,
                              const ChannelSet& channels, const AlgoParams& params);

enum class InitialPointMode { full, gains };

struct InitialPoint {
  BinaryState binaries;  // sampled values, free masks
  RrmVariables vars;
  double objective = 0.0;
  int attempts_used = 0;
  int socp_solves = 0;
};

/// Random counting-feasible binary samples tested through the fixed-binary
/// continuous program; returns the best feasible candidate found within the
/// attempt budget, or nullopt.
std::optional<InitialPoint> find_initial_point(const SystemConfig& cfg,
                                               const RateTable& ue_table,
                                               const RateTable& sbs_table,
                                               const ChannelSet& channels,
                                               const AlgoParams& params, InitialPointMode mode,
                                               const PredesignedBeams* beams = nullptr,
                                               const BinaryState* base_state = nullptr);

/// Relax-and-penalize loop over the full beamforming subproblem.
/// base_state, when given, carries pin masks honored by every subproblem
/// (used by the slotted runner to exclude already-served UEs).
RrmSolution solve_rnp1(const SystemConfig& cfg, const RateTable& ue_table,
                       const RateTable& sbs_table, const ChannelSet& channels,
                       const AlgoParams& params, const BinaryState* base_state = nullptr);

/// Relax-and-penalize loop over the gain-only subproblem with predesigned
/// beams; the returned solution is expanded back to full beamformers.
RrmSolution solve_rnp2(const SystemConfig& cfg, const RateTable& ue_table,
                       const RateTable& sbs_table, const ChannelSet& channels,
                       const AlgoParams& params, const PredesignedBeams& beams,
                       const BinaryState* base_state = nullptr);

/// Rounds relaxed binaries (per-row argmax, admission by row mass, counting
/// repairs), re-solves the fixed-binary program, and if infeasible demotes the
/// weakest admitted UE in favor of the next candidate for up to B rounds.
RrmSolution round_and_repair(const SystemConfig& cfg, const RateTable& ue_table,
                             const RateTable& sbs_table, const ChannelSet& channels,
                             const RrmVariables& relaxed, const AlgoParams& params,
                             InitialPointMode mode, const PredesignedBeams* beams = nullptr,
                             const BinaryState* base_state = nullptr);

/// ZF unicast directions for the given realization plus multicast directions
/// averaged from upper-bound solutions across `params.predesign_realizations`
/// auxiliary channel draws of the same topology.
PredesignedBeams predesign_beams(const SystemConfig& cfg, const RateTable& sbs_table,
                                 const Topology& topology, const ChannelModelParams& chan_params,
                                 const ChannelSet& channels, const AlgoParams& params);

/// Writes the per-iteration trace as CSV (iteration, objective, binary MSE,
/// wall time and penalty bookkeeping).
std::string trace_to_csv(const std::vector<IterationTrace>& trace);

}  // namespace sbrrm

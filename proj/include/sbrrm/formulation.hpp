#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "sbrrm/channel.hpp"
#include "sbrrm/conic.hpp"
#include "sbrrm/system_model.hpp"

namespace sbrrm {

/// Index maps from semantic variables to positions in a conic program's
/// decision block. Complex quantities are stored as contiguous [Re..., Im...]
/// runs.
///
/// Kinds:
///  - full: multicast beams m_l, unicast beams w_{b,u}, powers p, binaries.
///  - upper_bound: m_l and beta only.
///  - gains: complex gains t_l and v_{b,u} in place of the beams.
struct VariableLayout {
  enum class Kind { full, upper_bound, gains };

  Kind kind = Kind::full;
  int L = 0, B = 0, U = 0, J_ue = 0, J_sbs = 0, N_m = 0, N_s = 0;
  int off_m = -1, off_w = -1, off_t = -1, off_v = -1;
  int off_p = -1, off_kappa = -1, off_alpha = -1, off_beta = -1;
  int total = 0;

  static VariableLayout make(Kind kind, const SystemConfig& cfg, int j_ue, int j_sbs);

  int m_re(int l, int a) const { return off_m + l * 2 * N_m + a; }
  int m_im(int l, int a) const { return off_m + l * 2 * N_m + N_m + a; }
  int w_re(int l, int b, int u, int a) const {
    return off_w + ((l * B + b) * U + u) * 2 * N_s + a;
  }
  int w_im(int l, int b, int u, int a) const {
    return off_w + ((l * B + b) * U + u) * 2 * N_s + N_s + a;
  }
  int t_re(int l) const { return off_t + 2 * l; }
  int t_im(int l) const { return off_t + 2 * l + 1; }
  int v_re(int l, int b, int u) const { return off_v + 2 * ((l * B + b) * U + u); }
  int v_im(int l, int b, int u) const { return off_v + 2 * ((l * B + b) * U + u) + 1; }
  int p_var(int l, int b, int u) const { return off_p + (l * B + b) * U + u; }
  int kappa_var(int l, int b, int u) const { return off_kappa + (l * B + b) * U + u; }
  int alpha_var(int l, int u, int j) const { return off_alpha + (l * U + u) * J_ue + j; }
  int beta_var(int l, int j) const { return off_beta + l * J_sbs + j; }

  int alpha_count() const { return L * U * J_ue; }
  int beta_count() const { return L * J_sbs; }
  int kappa_count() const { return L * B * U; }
};

/// Constraint-deactivation constants: Q_u bounds the interference-plus-noise
/// seen by UE u under any feasible beams, Q_b the one seen by SBS b.
struct BigMConstants {
  Eigen::VectorXd q_ue;   // indexed by global UE
  Eigen::VectorXd q_sbs;  // indexed by global SBS
};

BigMConstants compute_big_m(const ChannelSet& channels, const SystemConfig& cfg);

enum class Pin : std::uint8_t { free_var, zero, one };

/// Relaxed binary block: values in [0,1] (used as the MM linearization
/// reference) plus per-entry pin masks honored by every builder.
struct BinaryState {
  Eigen::VectorXd alpha, beta, kappa;
  std::vector<Pin> alpha_pin, beta_pin, kappa_pin;

  static BinaryState all_free(const SystemConfig& cfg, int j_ue, int j_sbs);
  /// Pins every entry to round(value); values must be near-binary.
  static BinaryState pin_all(const SystemConfig& cfg, int j_ue, int j_sbs,
                             const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta,
                             const Eigen::VectorXd& kappa);
  int num_binaries() const {
    return static_cast<int>(alpha.size() + beta.size() + kappa.size());
  }
};

struct PenaltyWeights {
  double alpha = 0.0;
  double beta = 0.0;
  double kappa = 0.0;
};

/// Unit-norm predesigned directions and their channel coefficients:
/// c_{b,u} = h_{b,u}^H w_hat_{b,u}, r_{b,l} = Re{g_b^H m_hat_l}, plus the full
/// complex interference blocks behind the gain-only cones.
struct PredesignedBeams {
  std::vector<std::vector<Eigen::VectorXcd>> w_hat;  // [global sbs][u in cluster]
  std::vector<Eigen::VectorXcd> m_hat;               // [cluster]
  Eigen::MatrixXcd c;          // total_sbs x U, h_{b,u}^H w_hat_{b,u} (own cluster UEs)
  Eigen::MatrixXcd backhaul;   // total_sbs x L, g_b^H m_hat_l
  Eigen::VectorXd r;           // per (l*B+b): Re{g_b^H m_hat_l} for the own cluster
  /// access(bu_col, ue_row): h_{b',u}^H w_hat_{b',u'} for every serving pair
  /// (b', u') against every UE u; column index (l'*B+b')*U+u'.
  Eigen::MatrixXcd access;
};

/// Continuous/relaxed variable values pulled out of a solver point.
struct RrmVariables {
  std::vector<Eigen::VectorXcd> m;    // per cluster, N_m
  std::vector<Eigen::MatrixXcd> w;    // per global SBS, N_s x U
  Eigen::MatrixXd p;                  // total_sbs x U
  Eigen::VectorXd alpha, beta, kappa;
  std::vector<std::complex<double>> t;  // gain variant
  Eigen::MatrixXcd v;                    // total_sbs x U, gain variant

  double alpha_at(const SystemConfig& cfg, int j_ue, int l, int u, int j) const {
    return alpha((l * cfg.ue_per_cluster + u) * j_ue + j);
  }
  double beta_at(int j_sbs, int l, int j) const { return beta(l * j_sbs + j); }
  double kappa_at(const SystemConfig& cfg, int l, int b, int u) const {
    return kappa((l * cfg.sbs_per_cluster + b) * cfg.ue_per_cluster + u);
  }
};

/// Continuous relaxation of the exact mixed-integer conic program: rate
/// selection objective over box-relaxed binaries with the power, counting,
/// backhaul-budget, SINR cone and coupling constraints. Pin masks fix binary
/// entries. SINR rows are scaled by the noise std so the built program is
/// noise-normalized (solutions are unaffected).
conic::ConicProgram build_p0_relaxation(const SystemConfig& cfg, const RateTable& ue_table,
                                        const RateTable& sbs_table, const ChannelSet& channels,
                                        const BigMConstants& big_m, const BinaryState& state);

/// Backhaul-only relaxation: maximizes the backhaul sum throughput over
/// multicast beams and beta, ignoring the access side.
conic::ConicProgram build_pub_relaxation(const SystemConfig& cfg, const RateTable& sbs_table,
                                         const ChannelSet& channels, const BigMConstants& big_m,
                                         const BinaryState& state);

/// Penalized MM subproblem over the same feasible set as the relaxation:
/// objective = weighted rate - sum of linearized concave penalties around the
/// reference point. The constant part of the linearization is not
/// representable in a linear objective; add penalty_constant() to the solver
/// objective to obtain the true surrogate value.
conic::ConicProgram build_rnp1_subproblem(const SystemConfig& cfg, const RateTable& ue_table,
                                          const RateTable& sbs_table, const ChannelSet& channels,
                                          const BigMConstants& big_m, const BinaryState& reference,
                                          const PenaltyWeights& penalties);

/// Gain-only MM subproblem: beams are fixed to the predesigned directions and
/// only their complex gains are optimized.
conic::ConicProgram build_rnp2_subproblem(const SystemConfig& cfg, const RateTable& ue_table,
                                          const RateTable& sbs_table, const ChannelSet& channels,
                                          const PredesignedBeams& beams, const BigMConstants& big_m,
                                          const BinaryState& reference,
                                          const PenaltyWeights& penalties);

/// Unit-norm unicast directions from the Tikhonov-regularized pseudo-inverse
/// of the stacked in-cluster UE channels; reduces to the matched filter for a
/// single UE.
std::vector<std::vector<Eigen::VectorXcd>> design_zf_beams(const ChannelSet& channels,
                                                           const SystemConfig& cfg,
                                                           double regularization = 1e-3);

/// Phase-aligns (first entry rotated real-nonnegative), normalizes and
/// averages per-realization multicast beams, then renormalizes.
/// Throws std::invalid_argument on an empty list and std::runtime_error on a
/// degenerate (near-cancelling) average.
std::vector<Eigen::VectorXcd> design_multicast_beams(
    const std::vector<std::vector<Eigen::VectorXcd>>& ub_solutions);

PredesignedBeams make_predesigned_beams(const SystemConfig& cfg, const ChannelSet& channels,
                                        std::vector<std::vector<Eigen::VectorXcd>> w_hat,
                                        std::vector<Eigen::VectorXcd> m_hat);

RrmVariables extract_variables(const VariableLayout& layout, const Eigen::VectorXd& x);

/// Expands gain-only variables to full beamformers: m_l = t_l m_hat_l,
/// w_{b,u} = v_{b,u} w_hat_{b,u}.
void expand_gains(const SystemConfig& cfg, const PredesignedBeams& beams, RrmVariables& vars);

/// Exact penalty sum lambda * sum(x - x^2) per family (zero exactly on
/// binary vectors, positive otherwise).
double exact_penalty(const BinaryState& values, const PenaltyWeights& penalties);

/// Value of the linearized penalty at `values` around `reference`.
double surrogate_penalty(const BinaryState& values, const BinaryState& reference,
                         const PenaltyWeights& penalties);

/// Constant term of the linearized penalty (add to the solver objective to
/// recover the surrogate value).
double penalty_constant(const BinaryState& reference, const PenaltyWeights& penalties);

/// Mean squared distance of all binary entries to their rounded values.
double binary_mse(const BinaryState& values);

double weighted_rate_objective(const SystemConfig& cfg, const RateTable& ue_table,
                               const Eigen::VectorXd& alpha);
double access_throughput_bps(const SystemConfig& cfg, const RateTable& ue_table,
                             const Eigen::VectorXd& alpha);
double backhaul_throughput_bps(const SystemConfig& cfg, const RateTable& sbs_table,
                               const Eigen::VectorXd& beta);

}  // namespace sbrrm

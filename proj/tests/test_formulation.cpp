#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sbrrm/formulation.hpp"
#include "sbrrm/socp_solver.hpp"
#include "sbrrm/verify.hpp"

using namespace sbrrm;

namespace {

SystemConfig s1_config() {
  SystemConfig cfg;
  cfg.num_clusters = 2;
  cfg.sbs_per_cluster = 3;
  cfg.ue_per_cluster = 6;
  cfg.ue_served_per_cluster = 3;
  cfg.max_serving_sbs = 3;
  cfg.mbs_array = {16, 4};
  cfg.sbs_array = {4, 4};
  cfg.mbs_power_w = dbm_to_watts(27.0);
  cfg.sbs_power_w = dbm_to_watts(14.0);
  cfg.set_uniform_weights();
  return cfg;
}

SystemConfig tiny_config() {
  SystemConfig cfg;
  cfg.num_clusters = 1;
  cfg.sbs_per_cluster = 1;
  cfg.ue_per_cluster = 2;
  cfg.ue_served_per_cluster = 1;
  cfg.max_serving_sbs = 1;
  cfg.sbs_max_streams = 2;
  cfg.mbs_array = {4, 2};
  cfg.sbs_array = {2, 2};
  cfg.mbs_power_w = 1.0;
  cfg.sbs_power_w = 0.1;
  cfg.sbs_noise_w = 1e-9;
  cfg.ue_noise_w = 1e-9;
  cfg.set_uniform_weights();
  return cfg;
}

RateTable two_rate_table() {
  RateTable t;
  t.entries = {{0.2344, 0.2159}, {0.6016, 0.6610}};
  return t;
}

ChannelSet channels_for(const SystemConfig& cfg, std::uint64_t seed) {
  const Topology topo = make_default_topology(cfg, TopologyParams{}, RandomStream(seed));
  return generate_channels(topo, cfg, ChannelModelParams{}, seed);
}

int full_formula(const SystemConfig& cfg, int j_ue, int j_sbs) {
  const int L = cfg.num_clusters, B = cfg.sbs_per_cluster, U = cfg.ue_per_cluster;
  return 2 * L * cfg.mbs_antennas() + 2 * L * B * U * cfg.sbs_antennas() + 2 * L * B * U +
         L * j_sbs + L * U * j_ue;
}

int gains_formula(const SystemConfig& cfg, int j_ue, int j_sbs) {
  const int L = cfg.num_clusters, B = cfg.sbs_per_cluster, U = cfg.ue_per_cluster;
  return 2 * L + 4 * L * B * U + L * j_sbs + L * U * j_ue;
}

int ub_formula(const SystemConfig& cfg, int j_sbs) {
  return cfg.num_clusters * j_sbs + 2 * cfg.num_clusters * cfg.mbs_antennas();
}

}  // namespace

TEST_CASE("variable layout counts match the closed forms") {
  // The S1-scale case pins the full layout to 1550 decision variables.
  const SystemConfig s1 = s1_config();
  const RateTable table = default_rate_table();
  const VariableLayout full = VariableLayout::make(VariableLayout::Kind::full, s1, 5, 5);
  CHECK(full.total == 1550);
  CHECK(full.total == full_formula(s1, 5, 5));

  // Defaults pin the gain-only layout to 1735 decision variables.
  SystemConfig defaults;
  defaults.set_uniform_weights();
  const VariableLayout gains =
      VariableLayout::make(VariableLayout::Kind::gains, defaults, 5, 5);
  CHECK(gains.total == 1735);
  CHECK(gains.total == gains_formula(defaults, 5, 5));

  // Randomized shapes.
  RandomStream stream(99);
  for (int trial = 0; trial < 5; ++trial) {
    SystemConfig cfg;
    cfg.num_clusters = 1 + static_cast<int>(stream.uniform_int(4));
    cfg.sbs_per_cluster = 1 + static_cast<int>(stream.uniform_int(3));
    cfg.ue_per_cluster = 2 + static_cast<int>(stream.uniform_int(5));
    cfg.ue_served_per_cluster = 1;
    cfg.max_serving_sbs = cfg.sbs_per_cluster;
    cfg.mbs_array = {2 + static_cast<int>(stream.uniform_int(4)), 2};
    cfg.sbs_array = {1 + static_cast<int>(stream.uniform_int(3)), 2};
    cfg.set_uniform_weights();
    const int j_ue = 2 + static_cast<int>(stream.uniform_int(4));
    const int j_sbs = 2 + static_cast<int>(stream.uniform_int(4));
    CHECK(VariableLayout::make(VariableLayout::Kind::full, cfg, j_ue, j_sbs).total ==
          full_formula(cfg, j_ue, j_sbs));
    CHECK(VariableLayout::make(VariableLayout::Kind::gains, cfg, j_ue, j_sbs).total ==
          gains_formula(cfg, j_ue, j_sbs));
    CHECK(VariableLayout::make(VariableLayout::Kind::upper_bound, cfg, 1, j_sbs).total ==
          ub_formula(cfg, j_sbs));
  }
  (void)table;
}

TEST_CASE("built programs carry exactly the layout's decision variables") {
  const SystemConfig cfg = s1_config();
  const RateTable table = default_rate_table();
  const ChannelSet channels = channels_for(cfg, 11);
  const BigMConstants big_m = compute_big_m(channels, cfg);
  const BinaryState state = BinaryState::all_free(cfg, 5, 5);
  const conic::ConicProgram p0 =
      build_p0_relaxation(cfg, table, table, channels, big_m, state);
  CHECK(p0.num_decision_variables == 1550);
  const conic::ConicProgram pub = build_pub_relaxation(cfg, table, channels, big_m, state);
  CHECK(pub.num_decision_variables == ub_formula(cfg, 5));
}

TEST_CASE("big-M constants") {
  SystemConfig cfg = tiny_config();
  cfg.sbs_power_w = 1.0;
  cfg.ue_noise_w = 1.0;
  cfg.sbs_noise_w = 1.0;
  cfg.mbs_power_w = 1.0;
  ChannelSet channels;
  channels.backhaul.assign(1, Eigen::VectorXcd::Zero(cfg.mbs_antennas()));
  channels.access.assign(1, std::vector<Eigen::VectorXcd>(
                                2, Eigen::VectorXcd::Zero(cfg.sbs_antennas())));

  SUBCASE("all-zero channels collapse to the noise floor") {
    const BigMConstants bm = compute_big_m(channels, cfg);
    CHECK(bm.q_ue(0) == doctest::Approx(1.0));
    CHECK(bm.q_sbs(0) == doctest::Approx(1.0));
  }
  SUBCASE("hand-evaluated single link") {
    channels.access[0][0](0) = std::complex<double>(1.0, 1.0);  // ||h||^2 = 2
    const BigMConstants bm = compute_big_m(channels, cfg);
    CHECK(bm.q_ue(0) == doctest::Approx(std::sqrt(3.0)));
  }
  SUBCASE("scaling in the SBS power") {
    channels.access[0][0](0) = std::complex<double>(1.0, 1.0);
    cfg.ue_noise_w = 1e-30;  // effectively zero against P * ||h||^2
    const BigMConstants a = compute_big_m(channels, cfg);
    cfg.sbs_power_w *= 2.0;
    const BigMConstants b = compute_big_m(channels, cfg);
    CHECK(b.q_ue(0) / a.q_ue(0) == doctest::Approx(std::sqrt(2.0)));
  }
}

TEST_CASE("all binaries pinned to zero contradicts the admission count") {
  const SystemConfig cfg = tiny_config();
  const RateTable table = two_rate_table();
  const ChannelSet channels = channels_for(cfg, 3);
  const BigMConstants big_m = compute_big_m(channels, cfg);
  BinaryState state = BinaryState::all_free(cfg, 2, 2);
  state = BinaryState::pin_all(cfg, 2, 2, state.alpha, state.beta, state.kappa);  // all zero
  const conic::SolveReport report =
      conic::solve(build_p0_relaxation(cfg, table, table, channels, big_m, state));
  CHECK(report.status == conic::SolveStatus::infeasible);
}

TEST_CASE("pinning kappa to zero forces zero power and beams") {
  // One cluster, two SBSs, one served UE: the SBS with kappa = 0 must end up
  // with p = 0 and w = 0 within solver tolerance.
  SystemConfig cfg = tiny_config();
  cfg.sbs_per_cluster = 2;
  cfg.ue_per_cluster = 2;
  cfg.ue_served_per_cluster = 2;
  cfg.max_serving_sbs = 2;
  cfg.sbs_max_streams = 2;
  cfg.sbs_noise_w = 1e-12;
  cfg.ue_noise_w = 1e-12;
  cfg.set_uniform_weights();
  const RateTable table = two_rate_table();
  const ChannelSet channels = channels_for(cfg, 8);
  const BigMConstants big_m = compute_big_m(channels, cfg);
  const VariableLayout lay = VariableLayout::make(VariableLayout::Kind::full, cfg, 2, 2);

  // alpha: both UEs at rate 0; beta: rate 1; kappa: SBS0 -> both UEs,
  // SBS1 -> UE0 only; the pair (SBS1, UE1) is pinned to zero.
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(lay.alpha_count());
  alpha(lay.alpha_var(0, 0, 0) - lay.off_alpha) = 1.0;
  alpha(lay.alpha_var(0, 1, 0) - lay.off_alpha) = 1.0;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(lay.beta_count());
  beta(1) = 1.0;
  Eigen::VectorXd kappa = Eigen::VectorXd::Zero(lay.kappa_count());
  kappa(0 * cfg.ue_per_cluster + 0) = 1.0;
  kappa(0 * cfg.ue_per_cluster + 1) = 1.0;
  kappa(1 * cfg.ue_per_cluster + 0) = 1.0;
  const BinaryState state = BinaryState::pin_all(cfg, 2, 2, alpha, beta, kappa);

  const conic::SolveReport report =
      conic::solve(build_p0_relaxation(cfg, table, table, channels, big_m, state));
  REQUIRE(report.status == conic::SolveStatus::optimal);
  const RrmVariables vars = extract_variables(lay, report.x);
  CHECK(vars.p(1, 1) <= 1e-7);
  CHECK(vars.w[1].col(1).norm() <= 1e-5);
}

TEST_CASE("penalty values on and off binary points") {
  SystemConfig cfg = tiny_config();
  const PenaltyWeights pen{2.0, 2.0, 2.0};
  BinaryState values = BinaryState::all_free(cfg, 2, 2);

  SUBCASE("binary vectors have exactly zero penalty") {
    values.alpha(0) = 1.0;
    values.kappa(0) = 1.0;
    CHECK(exact_penalty(values, pen) == 0.0);
    // Surrogate around the same point also vanishes.
    CHECK(surrogate_penalty(values, values, pen) == 0.0);
  }
  SUBCASE("fractional entries are penalized") {
    values.alpha(0) = 0.5;
    CHECK(exact_penalty(values, pen) == doctest::Approx(2.0 * 0.25));
  }
  SUBCASE("linearization at the origin reduces to a plain sum") {
    BinaryState ref = BinaryState::all_free(cfg, 2, 2);  // all zeros
    values.alpha(0) = 0.7;
    values.beta(1) = 0.2;
    CHECK(surrogate_penalty(values, ref, pen) == doctest::Approx(2.0 * (0.7 + 0.2)));
  }
  SUBCASE("entry at one with reference one contributes zero") {
    BinaryState ref = BinaryState::all_free(cfg, 2, 2);
    ref.alpha(0) = 1.0;
    values.alpha(0) = 1.0;
    CHECK(surrogate_penalty(values, ref, pen) == doctest::Approx(0.0));
  }
}

TEST_CASE("zero-forcing beam design") {
  SystemConfig cfg = tiny_config();
  cfg.sbs_array = {2, 2};
  cfg.set_uniform_weights();

  SUBCASE("single UE reduces to the matched filter") {
    SystemConfig one = cfg;
    one.ue_per_cluster = 1;
    one.ue_served_per_cluster = 1;
    one.set_uniform_weights();
    ChannelSet channels;
    channels.backhaul.assign(1, Eigen::VectorXcd::Ones(one.mbs_antennas()));
    Eigen::VectorXcd h(4);
    h << std::complex<double>(1, 2), std::complex<double>(0, -1), 0.5, 1.0;
    channels.access.assign(1, std::vector<Eigen::VectorXcd>(1, h));
    const auto w = design_zf_beams(channels, one);
    const double cosine = std::abs((w[0][0].adjoint() * h)(0)) / h.norm();
    CHECK(cosine == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(w[0][0].norm() == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("orthogonal channels give exact nulls as regularization vanishes") {
    ChannelSet channels;
    channels.backhaul.assign(1, Eigen::VectorXcd::Ones(cfg.mbs_antennas()));
    Eigen::VectorXcd h1 = Eigen::VectorXcd::Zero(4), h2 = Eigen::VectorXcd::Zero(4);
    h1(0) = 1.0;
    h2(1) = 1.0;
    channels.access.assign(1, {h1, h2});
    const auto w = design_zf_beams(channels, cfg, 1e-12);
    CHECK(std::abs((h1.adjoint() * w[0][1])(0)) < 1e-9);
    CHECK(std::abs((h2.adjoint() * w[0][0])(0)) < 1e-9);
  }

  SUBCASE("more UEs than antennas still yields unit-norm directions") {
    SystemConfig wide = cfg;
    wide.ue_per_cluster = 6;
    wide.ue_served_per_cluster = 1;
    wide.set_uniform_weights();
    const ChannelSet channels = channels_for(wide, 4);
    const auto w = design_zf_beams(channels, wide);
    for (int u = 0; u < 6; ++u) CHECK(w[0][u].norm() == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("multicast beam averaging") {
  Eigen::VectorXcd v(3);
  v << std::complex<double>(1, 0), std::complex<double>(0, 1), std::complex<double>(-0.5, 0.5);

  SUBCASE("single realization is phase-aligned and normalized") {
    const auto m = design_multicast_beams({{v}});
    REQUIRE(m.size() == 1);
    CHECK(m[0].norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m[0](0).imag() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(m[0](0).real() >= 0.0);
  }
  SUBCASE("phase-rotated copies average to the common direction") {
    const Eigen::VectorXcd r = v * std::polar(1.0, M_PI / 2.0);
    const auto m = design_multicast_beams({{v}, {r}});
    const double cosine = std::abs((m[0].adjoint() * v)(0)) / v.norm();
    CHECK(cosine == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("cancelling directions with a zero leading entry are degenerate") {
    Eigen::VectorXcd z(2);
    z << 0.0, 1.0;
    CHECK_THROWS_AS(design_multicast_beams({{z}, {Eigen::VectorXcd(-z)}}),
                    std::runtime_error);
  }
  SUBCASE("empty input is rejected") {
    CHECK_THROWS_AS(design_multicast_beams({}), std::invalid_argument);
  }
}

TEST_CASE("gain-only subproblem dimensions and basic infeasibilities") {
  SystemConfig cfg = tiny_config();
  cfg.sbs_per_cluster = 2;
  cfg.ue_per_cluster = 2;
  cfg.ue_served_per_cluster = 1;
  cfg.max_serving_sbs = 2;
  cfg.set_uniform_weights();
  const RateTable table = two_rate_table();
  const ChannelSet channels = channels_for(cfg, 21);
  const BigMConstants big_m = compute_big_m(channels, cfg);
  const auto w_hat = design_zf_beams(channels, cfg);
  std::vector<Eigen::VectorXcd> m_hat{channels.g(0).normalized()};
  const PredesignedBeams beams = make_predesigned_beams(cfg, channels, w_hat, m_hat);
  CHECK(beams.r(0) >= 0.0);

  const BinaryState state = BinaryState::all_free(cfg, 2, 2);
  const conic::ConicProgram p2 = build_rnp2_subproblem(cfg, table, table, channels, beams,
                                                       big_m, state, PenaltyWeights{});
  CHECK(p2.num_decision_variables == gains_formula(cfg, 2, 2));
  const conic::SolveReport relaxed = conic::solve(p2);
  CHECK(relaxed.status == conic::SolveStatus::optimal);
}

TEST_CASE("rnp1 subproblem at an all-zero reference penalizes plain sums") {
  const SystemConfig cfg = tiny_config();
  const RateTable table = two_rate_table();
  const ChannelSet channels = channels_for(cfg, 5);
  const BigMConstants big_m = compute_big_m(channels, cfg);
  const BinaryState ref = BinaryState::all_free(cfg, 2, 2);
  const PenaltyWeights pen{10.0, 10.0, 10.0};
  const conic::ConicProgram program =
      build_rnp1_subproblem(cfg, table, table, channels, big_m, ref, pen);
  // Objective coefficient of alpha(0,0,0): weight * R_1 - lambda.
  const VariableLayout lay = VariableLayout::make(VariableLayout::Kind::full, cfg, 2, 2);
  CHECK(program.objective[lay.alpha_var(0, 0, 0)] ==
        doctest::Approx(cfg.weight(0, 0) * table[0].rate_bps_hz - 10.0));
  CHECK(penalty_constant(ref, pen) == 0.0);
}

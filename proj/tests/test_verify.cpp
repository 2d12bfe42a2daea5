#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sbrrm/verify.hpp"

using namespace sbrrm;

namespace {

// One cluster, one SBS, one UE, synthetic unit channels.
SystemConfig unit_cfg(int clusters, int sbs, int ues) {
  SystemConfig cfg;
  cfg.num_clusters = clusters;
  cfg.sbs_per_cluster = sbs;
  cfg.ue_per_cluster = ues;
  cfg.ue_served_per_cluster = 1;
  cfg.max_serving_sbs = sbs;
  cfg.mbs_array = {2, 1};
  cfg.sbs_array = {2, 1};
  cfg.sbs_noise_w = 1.0;
  cfg.ue_noise_w = 1.0;
  cfg.set_uniform_weights();
  return cfg;
}

}  // namespace

TEST_CASE("backhaul SINR without interference") {
  SystemConfig cfg = unit_cfg(1, 1, 1);
  cfg.sbs_noise_w = 0.5;
  ChannelSet channels;
  Eigen::VectorXcd g(2);
  g << 1.0, 0.0;
  channels.backhaul = {g};
  channels.access = {{Eigen::VectorXcd::Zero(2)}};
  std::vector<Eigen::VectorXcd> m{g};  // g^H m = 1
  const verify::SbsSinr s = verify::sinr_sbs(cfg, channels, m);
  CHECK(s.per_sbs(0) == doctest::Approx(2.0));
  CHECK(s.cluster_min(0) == doctest::Approx(2.0));
}

TEST_CASE("backhaul SINR with interference, direct substitution") {
  SystemConfig cfg = unit_cfg(2, 1, 1);
  ChannelSet channels;
  Eigen::VectorXcd g(2);
  g << 1.0, 1.0;
  channels.backhaul = {g, g};
  channels.access.assign(2, {Eigen::VectorXcd::Zero(2), Eigen::VectorXcd::Zero(2)});
  Eigen::VectorXcd m1(2), m2(2);
  m1 << 2.0, 0.0;  // |g^H m1|^2 = 4
  m2 << 1.0, 0.0;  // |g^H m2|^2 = 1
  const verify::SbsSinr s = verify::sinr_sbs(cfg, channels, {m1, m2});
  CHECK(s.per_sbs(0) == doctest::Approx(4.0 / 2.0));
}

TEST_CASE("SINRs are invariant under per-beam phase rotation") {
  SystemConfig cfg = unit_cfg(2, 2, 2);
  cfg.ue_served_per_cluster = 2;
  cfg.sbs_max_streams = 2;
  cfg.set_uniform_weights();
  const Topology topo = make_default_topology(cfg, TopologyParams{}, RandomStream(4));
  const ChannelSet channels = generate_channels(topo, cfg, ChannelModelParams{}, 17);
  RandomStream stream(55);
  std::vector<Eigen::VectorXcd> m(2);
  std::vector<Eigen::MatrixXcd> w(cfg.total_sbs(), Eigen::MatrixXcd(2, 2));
  for (auto& ml : m) {
    ml.resize(2);
    for (int i = 0; i < 2; ++i) ml(i) = stream.complex_normal();
  }
  for (auto& wb : w)
    for (int u = 0; u < 2; ++u)
      for (int i = 0; i < 2; ++i) wb(i, u) = stream.complex_normal();
  Eigen::VectorXd kappa = Eigen::VectorXd::Ones(cfg.total_sbs() * cfg.ue_per_cluster);

  const verify::SbsSinr base_sbs = verify::sinr_sbs(cfg, channels, m);
  const Eigen::VectorXd base_ue = verify::sinr_ue(cfg, channels, w, kappa);

  auto rotated_m = m;
  rotated_m[1] *= std::polar(1.0, 1.234);
  const verify::SbsSinr rot_sbs = verify::sinr_sbs(cfg, channels, rotated_m);
  CHECK((rot_sbs.per_sbs - base_sbs.per_sbs).cwiseAbs().maxCoeff() <
        1e-12 * base_sbs.per_sbs.cwiseAbs().maxCoeff());

  // Rotating one UE's beams on every serving SBS leaves all UE SINRs alone.
  auto rotated_w = w;
  for (auto& wb : rotated_w) wb.col(1) *= std::polar(1.0, -0.77);
  const Eigen::VectorXd rot_ue = verify::sinr_ue(cfg, channels, rotated_w, kappa);
  CHECK((rot_ue - base_ue).cwiseAbs().maxCoeff() < 1e-12 * base_ue.cwiseAbs().maxCoeff());
}

TEST_CASE("UE SINR direct cases") {
  SUBCASE("single link") {
    SystemConfig cfg = unit_cfg(1, 1, 1);
    ChannelSet channels;
    channels.backhaul = {Eigen::VectorXcd::Ones(2)};
    Eigen::VectorXcd h(2);
    h << 2.0, 0.0;
    channels.access = {{h}};
    std::vector<Eigen::MatrixXcd> w{Eigen::MatrixXcd::Zero(2, 1)};
    w[0](0, 0) = 1.0;  // h^H w = 2
    Eigen::VectorXd kappa = Eigen::VectorXd::Ones(1);
    const Eigen::VectorXd s = verify::sinr_ue(cfg, channels, w, kappa);
    CHECK(s(0) == doctest::Approx(4.0));
    kappa(0) = 0.0;
    CHECK(verify::sinr_ue(cfg, channels, w, kappa)(0) == doctest::Approx(0.0));
  }
  SUBCASE("coherent combining over two SBSs") {
    SystemConfig cfg = unit_cfg(1, 2, 1);
    ChannelSet channels;
    channels.backhaul = {Eigen::VectorXcd::Ones(2), Eigen::VectorXcd::Ones(2)};
    Eigen::VectorXcd h(2);
    h << 1.0, 0.0;
    channels.access = {{h}, {h}};
    std::vector<Eigen::MatrixXcd> w(2, Eigen::MatrixXcd::Zero(2, 1));
    w[0](0, 0) = 1.0;
    w[1](0, 0) = 1.0;  // each contributes h^H w = 1
    Eigen::VectorXd kappa = Eigen::VectorXd::Ones(2);
    const Eigen::VectorXd s = verify::sinr_ue(cfg, channels, w, kappa);
    CHECK(s(0) == doctest::Approx(4.0));  // |1 + 1|^2 / 1
  }
}

TEST_CASE("feasibility report flags constructed violations") {
  SystemConfig cfg = unit_cfg(1, 1, 2);
  cfg.sbs_max_streams = 1;
  // SINR lands near 25: enough for the lowest rate, far below the top one.
  cfg.sbs_noise_w = 1e-3;
  cfg.ue_noise_w = 1e-3;
  cfg.set_uniform_weights();
  const RateTable table = default_rate_table();
  ChannelSet channels;
  Eigen::VectorXcd g(2);
  g << 1.0, 0.0;
  channels.backhaul = {g};
  Eigen::VectorXcd h0(2), h1(2);
  h0 << 1.0, 0.0;
  h1 << 0.0, 1.0;
  channels.access = {{h0, h1}};

  RrmVariables vars;
  vars.m = {std::sqrt(cfg.mbs_power_w) * g / g.norm()};
  vars.w.assign(1, Eigen::MatrixXcd::Zero(2, 2));
  vars.w[0](0, 0) = std::sqrt(cfg.sbs_power_w);
  vars.p = Eigen::MatrixXd::Zero(1, 2);
  vars.p(0, 0) = cfg.sbs_power_w;
  vars.alpha = Eigen::VectorXd::Zero(2 * 5);
  vars.beta = Eigen::VectorXd::Zero(5);
  vars.kappa = Eigen::VectorXd::Zero(2);
  vars.alpha(0 * 5 + 0) = 1.0;  // UE0 at the lowest rate
  vars.beta(4) = 1.0;           // backhaul comfortably above it
  vars.kappa(0) = 1.0;

  const verify::FeasibilityReport ok_report =
      verify::check_feasibility_pprime(cfg, table, table, channels, vars);
  CHECK(ok_report.pass);
  CHECK(ok_report.objective == doctest::Approx(0.5 * table[0].rate_bps_hz));

  SUBCASE("unsupported rate fails the access SINR family") {
    RrmVariables bad = vars;
    bad.alpha(0 * 5 + 0) = 0.0;
    bad.alpha(0 * 5 + 4) = 1.0;  // demands SINR 95.7 that the link cannot give
    const verify::FeasibilityReport report =
        verify::check_feasibility_pprime(cfg, table, table, channels, bad);
    CHECK_FALSE(report.pass);
    const verify::FamilyCheck* c5 = report.find("C5");
    REQUIRE(c5 != nullptr);
    CHECK_FALSE(c5->pass);
    CHECK(c5->worst_slack < 0.0);
  }
  SUBCASE("zero solution fails the admission count") {
    RrmVariables zero = vars;
    zero.alpha.setZero();
    zero.kappa.setZero();
    const verify::FeasibilityReport report =
        verify::check_feasibility_pprime(cfg, table, table, channels, zero);
    CHECK_FALSE(report.pass);
    const verify::FamilyCheck* c14 = report.find("C14");
    REQUIRE(c14 != nullptr);
    CHECK_FALSE(c14->pass);
  }
  SUBCASE("report serializes to json") {
    const std::string text = ok_report.to_json();
    CHECK(text.find("\"families\"") != std::string::npos);
  }
}

TEST_CASE("brute force enumeration count matches an independent count") {
  SystemConfig cfg;
  cfg.num_clusters = 1;
  cfg.sbs_per_cluster = 2;
  cfg.ue_per_cluster = 3;
  cfg.ue_served_per_cluster = 2;
  cfg.min_serving_sbs = 1;
  cfg.max_serving_sbs = 2;
  cfg.sbs_max_streams = 2;
  cfg.set_uniform_weights();
  const int j_ue = 2, j_sbs = 2;

  // Independent count: loop over all subsets/rates/masks directly.
  std::uint64_t expected = 0;
  for (int mask_u = 0; mask_u < 8; ++mask_u) {
    if (__builtin_popcount(mask_u) != 2) continue;
    std::uint64_t rate_combos = j_ue * j_ue;
    std::uint64_t kappa_count = 0;
    for (int mask_k = 0; mask_k < 64; ++mask_k) {
      bool ok = true;
      int rowsum[2] = {0, 0};
      int colsum[3] = {0, 0, 0};
      for (int b = 0; b < 2 && ok; ++b)
        for (int u = 0; u < 3; ++u) {
          const bool set = mask_k & (1 << (b * 3 + u));
          if (!set) continue;
          if (!(mask_u & (1 << u))) ok = false;  // only admitted UEs
          ++rowsum[b];
          ++colsum[u];
        }
      for (int b = 0; b < 2; ++b) ok = ok && rowsum[b] >= 1 && rowsum[b] <= 2;
      for (int u = 0; u < 3; ++u) {
        const bool admitted = mask_u & (1 << u);
        if (admitted) ok = ok && colsum[u] >= 1 && colsum[u] <= 2;
        else ok = ok && colsum[u] == 0;
      }
      if (ok) ++kappa_count;
    }
    expected += rate_combos * kappa_count * j_sbs;
  }
  CHECK(verify::count_admissible_tuples(cfg, j_ue, j_sbs) == expected);
}

TEST_CASE("brute force reports infeasible when power cannot reach any target") {
  SystemConfig cfg;
  cfg.num_clusters = 1;
  cfg.sbs_per_cluster = 1;
  cfg.ue_per_cluster = 2;
  cfg.ue_served_per_cluster = 1;
  cfg.max_serving_sbs = 1;
  cfg.mbs_array = {2, 2};
  cfg.sbs_array = {2, 2};
  cfg.mbs_power_w = 1e-18;
  cfg.sbs_power_w = 1e-18;
  cfg.set_uniform_weights();
  RateTable table;
  table.entries = {{0.2344, 0.2159}, {0.6016, 0.6610}};
  const Topology topo = make_default_topology(cfg, TopologyParams{}, RandomStream(3));
  const ChannelSet channels = generate_channels(topo, cfg, ChannelModelParams{}, 3);
  const verify::BruteForceResult result =
      verify::brute_force_optimum(cfg, table, table, channels);
  CHECK(result.status == verify::BruteForceStatus::infeasible);
  CHECK(result.tuples_enumerated > 0);
}

TEST_CASE("brute force refuses oversized instances") {
  SystemConfig cfg;
  cfg.num_clusters = 2;
  cfg.sbs_per_cluster = 2;
  cfg.ue_per_cluster = 4;
  cfg.ue_served_per_cluster = 2;
  cfg.max_serving_sbs = 2;
  cfg.sbs_max_streams = 2;
  cfg.set_uniform_weights();
  const RateTable table = default_rate_table();
  const Topology topo = make_default_topology(cfg, TopologyParams{}, RandomStream(3));
  const ChannelSet channels = generate_channels(topo, cfg, ChannelModelParams{}, 3);
  const verify::BruteForceResult result =
      verify::brute_force_optimum(cfg, table, table, channels, {}, /*max_tuples=*/100);
  CHECK(result.status == verify::BruteForceStatus::too_large);
}

TEST_CASE("parallel and serial enumeration agree") {
  SystemConfig cfg;
  cfg.num_clusters = 1;
  cfg.sbs_per_cluster = 1;
  cfg.ue_per_cluster = 2;
  cfg.ue_served_per_cluster = 1;
  cfg.max_serving_sbs = 1;
  cfg.mbs_array = {2, 2};
  cfg.sbs_array = {2, 2};
  cfg.sbs_noise_w = 1e-13;
  cfg.ue_noise_w = 1e-13;
  cfg.set_uniform_weights();
  RateTable table;
  table.entries = {{0.2344, 0.2159}, {0.6016, 0.6610}};
  const Topology topo = make_default_topology(cfg, TopologyParams{}, RandomStream(6));
  const ChannelSet channels = generate_channels(topo, cfg, ChannelModelParams{}, 6);
  const verify::BruteForceResult par =
      verify::brute_force_optimum(cfg, table, table, channels, {}, 1 << 20, true);
  const verify::BruteForceResult ser =
      verify::brute_force_optimum(cfg, table, table, channels, {}, 1 << 20, false);
  REQUIRE(par.status == verify::BruteForceStatus::optimal);
  REQUIRE(ser.status == verify::BruteForceStatus::optimal);
  CHECK(par.objective == ser.objective);
  CHECK(par.alpha == ser.alpha);
  CHECK(par.kappa == ser.kappa);
}

#include "sbrrm/verify.hpp"

#include <omp.h>

#include <cmath>
#include <json.hpp>

#include "sbrrm/socp_solver.hpp"

namespace sbrrm::verify {

using nlohmann::json;

SbsSinr sinr_sbs(const SystemConfig& cfg, const ChannelSet& channels,
                 const std::vector<Eigen::VectorXcd>& m) {
  SbsSinr out;
  out.per_sbs.resize(cfg.total_sbs());
  out.cluster_min.resize(cfg.num_clusters);
  for (int l = 0; l < cfg.num_clusters; ++l) {
    double worst = std::numeric_limits<double>::infinity();
    for (int b = 0; b < cfg.sbs_per_cluster; ++b) {
      const int sbs = cfg.sbs_index(l, b);
      const Eigen::VectorXcd& g = channels.g(sbs);
      double signal = 0.0, interference = 0.0;
      for (int lp = 0; lp < cfg.num_clusters; ++lp) {
        const double power = std::norm((g.adjoint() * m[lp])(0));
        if (lp == l) signal = power;
        else interference += power;
      }
      const double sinr = signal / (interference + cfg.sbs_noise_w);
      out.per_sbs(sbs) = sinr;
      worst = std::min(worst, sinr);
    }
    out.cluster_min(l) = worst;
  }
  return out;
}

Eigen::VectorXd sinr_ue(const SystemConfig& cfg, const ChannelSet& channels,
                        const std::vector<Eigen::MatrixXcd>& w, const Eigen::VectorXd& kappa) {
  const int total_ue = cfg.total_ue();
  Eigen::VectorXd out(total_ue);
  for (int l = 0; l < cfg.num_clusters; ++l) {
    for (int u = 0; u < cfg.ue_per_cluster; ++u) {
      const int ue = cfg.ue_index(l, u);
      double signal = 0.0, interference = 0.0;
      for (int lp = 0; lp < cfg.num_clusters; ++lp) {
        for (int up = 0; up < cfg.ue_per_cluster; ++up) {
          std::complex<double> combined = 0.0;
          for (int bp = 0; bp < cfg.sbs_per_cluster; ++bp) {
            const int sbs = cfg.sbs_index(lp, bp);
            const double k = kappa((lp * cfg.sbs_per_cluster + bp) * cfg.ue_per_cluster + up);
            if (k == 0.0) continue;
            combined += k * (channels.h(sbs, ue).adjoint() * w[sbs].col(up))(0);
          }
          const double power = std::norm(combined);
          if (lp == l && up == u) signal = power;
          else interference += power;
        }
      }
      out(ue) = signal / (interference + cfg.ue_noise_w);
    }
  }
  return out;
}

const FamilyCheck* FeasibilityReport::find(const std::string& family) const {
  for (const FamilyCheck& f : families)
    if (f.family == family) return &f;
  return nullptr;
}

std::string FeasibilityReport::to_json() const {
  json j;
  j["pass"] = pass;
  j["objective"] = objective;
  json fams = json::array();
  for (const FamilyCheck& f : families)
    fams.push_back({{"family", f.family}, {"pass", f.pass}, {"worst_slack", f.worst_slack}});
  j["families"] = std::move(fams);
  j["ue_sinr"] = std::vector<double>(ue_sinr.data(), ue_sinr.data() + ue_sinr.size());
  j["cluster_sbs_sinr"] = std::vector<double>(cluster_sbs_sinr.data(),
                                              cluster_sbs_sinr.data() + cluster_sbs_sinr.size());
  return j.dump();
}

FeasibilityReport check_feasibility_pprime(const SystemConfig& cfg, const RateTable& ue_table,
                                           const RateTable& sbs_table,
                                           const ChannelSet& channels, const RrmVariables& vars,
                                           double tol) {
  FeasibilityReport report;
  const int j_ue = ue_table.size();
  const int j_sbs = sbs_table.size();

  auto push = [&report](const std::string& name, double worst, double family_tol) {
    FamilyCheck f;
    f.family = name;
    f.worst_slack = worst;
    f.pass = worst >= -family_tol;
    report.pass = report.pass && f.pass;
    report.families.push_back(std::move(f));
  };

  // Integrality of alpha, beta, kappa (absolute tolerance 1e-9).
  {
    double dev = 0.0;
    auto scan = [&dev](const Eigen::VectorXd& v) {
      for (int i = 0; i < v.size(); ++i) dev = std::max(dev, std::abs(v(i) - std::round(v(i))));
    };
    scan(vars.alpha);
    scan(vars.beta);
    scan(vars.kappa);
    push("C1/C6/C11 integrality", -dev, 1e-9);
  }

  Eigen::VectorXd alpha = vars.alpha, beta = vars.beta, kappa = vars.kappa;
  for (int i = 0; i < alpha.size(); ++i) alpha(i) = std::round(alpha(i));
  for (int i = 0; i < beta.size(); ++i) beta(i) = std::round(beta(i));
  for (int i = 0; i < kappa.size(); ++i) kappa(i) = std::round(kappa(i));

  // C2: at most one rate per UE.
  {
    double worst = std::numeric_limits<double>::infinity();
    for (int l = 0; l < cfg.num_clusters; ++l)
      for (int u = 0; u < cfg.ue_per_cluster; ++u) {
        double sum = 0.0;
        for (int j = 0; j < j_ue; ++j) sum += alpha((l * cfg.ue_per_cluster + u) * j_ue + j);
        worst = std::min(worst, 1.0 - sum);
      }
    push("C2", worst, 1e-9);
  }
  // C3: MBS power.
  {
    double used = 0.0;
    for (const Eigen::VectorXcd& ml : vars.m) used += ml.squaredNorm();
    push("C3", (cfg.mbs_power_w - used) / cfg.mbs_power_w, tol);
  }
  // C4: per-SBS power with effective beams.
  {
    double worst = std::numeric_limits<double>::infinity();
    for (int l = 0; l < cfg.num_clusters; ++l)
      for (int b = 0; b < cfg.sbs_per_cluster; ++b) {
        const int sbs = cfg.sbs_index(l, b);
        double used = 0.0;
        for (int u = 0; u < cfg.ue_per_cluster; ++u) {
          const double k = kappa((l * cfg.sbs_per_cluster + b) * cfg.ue_per_cluster + u);
          used += k * k * vars.w[sbs].col(u).squaredNorm();
        }
        worst = std::min(worst, (cfg.sbs_power_w - used) / cfg.sbs_power_w);
      }
    push("C4", worst, tol);
  }
  // C5: UE SINR against the selected target.
  report.ue_sinr = sinr_ue(cfg, channels, vars.w, kappa);
  {
    double worst = std::numeric_limits<double>::infinity();
    for (int l = 0; l < cfg.num_clusters; ++l)
      for (int u = 0; u < cfg.ue_per_cluster; ++u) {
        double target = 0.0;
        for (int j = 0; j < j_ue; ++j)
          target += alpha((l * cfg.ue_per_cluster + u) * j_ue + j) * ue_table[j].sinr_target;
        if (target <= 0.0) continue;
        worst = std::min(worst, (report.ue_sinr(cfg.ue_index(l, u)) - target) / target);
      }
    push("C5", worst, tol);
  }
  // C7-C10 stream and association counting.
  {
    double w7 = std::numeric_limits<double>::infinity(), w8 = w7, w9 = w7, w10 = w7;
    for (int l = 0; l < cfg.num_clusters; ++l) {
      for (int b = 0; b < cfg.sbs_per_cluster; ++b) {
        double rowsum = 0.0;
        for (int u = 0; u < cfg.ue_per_cluster; ++u)
          rowsum += kappa((l * cfg.sbs_per_cluster + b) * cfg.ue_per_cluster + u);
        w7 = std::min(w7, cfg.sbs_max_streams - rowsum);
        w8 = std::min(w8, rowsum - 1.0);
      }
      for (int u = 0; u < cfg.ue_per_cluster; ++u) {
        double colsum = 0.0, admitted = 0.0;
        for (int b = 0; b < cfg.sbs_per_cluster; ++b)
          colsum += kappa((l * cfg.sbs_per_cluster + b) * cfg.ue_per_cluster + u);
        for (int j = 0; j < j_ue; ++j)
          admitted += alpha((l * cfg.ue_per_cluster + u) * j_ue + j);
        w9 = std::min(w9, cfg.max_serving_sbs * admitted - colsum);
        w10 = std::min(w10, colsum - cfg.min_serving_sbs * admitted);
      }
    }
    push("C7", w7, 1e-9);
    push("C8", w8, 1e-9);
    push("C9", w9, 1e-9);
    push("C10", w10, 1e-9);
  }
  // C12: exactly one backhaul rate per cluster.
  {
    double worst = std::numeric_limits<double>::infinity();
    for (int l = 0; l < cfg.num_clusters; ++l) {
      double sum = 0.0;
      for (int j = 0; j < j_sbs; ++j) sum += beta(l * j_sbs + j);
      worst = std::min(worst, -std::abs(sum - 1.0));
    }
    push("C12", worst, 1e-9);
  }
  // C13: access throughput within the backhaul budget, per cluster.
  {
    double worst = std::numeric_limits<double>::infinity();
    for (int l = 0; l < cfg.num_clusters; ++l) {
      double access = 0.0, backhaul = 0.0;
      for (int u = 0; u < cfg.ue_per_cluster; ++u)
        for (int j = 0; j < j_ue; ++j)
          access += alpha((l * cfg.ue_per_cluster + u) * j_ue + j) * ue_table[j].rate_bps_hz;
      for (int j = 0; j < j_sbs; ++j) backhaul += beta(l * j_sbs + j) * sbs_table[j].rate_bps_hz;
      access *= cfg.access_bandwidth_hz;
      backhaul *= cfg.backhaul_bandwidth_hz;
      worst = std::min(worst, (backhaul - access) / std::max(backhaul, 1.0));
    }
    push("C13", worst, tol);
  }
  // C14: exactly U_served admitted per cluster.
  {
    double worst = std::numeric_limits<double>::infinity();
    for (int l = 0; l < cfg.num_clusters; ++l) {
      double sum = 0.0;
      for (int u = 0; u < cfg.ue_per_cluster; ++u)
        for (int j = 0; j < j_ue; ++j) sum += alpha((l * cfg.ue_per_cluster + u) * j_ue + j);
      worst = std::min(worst, -std::abs(sum - cfg.ue_served_per_cluster));
    }
    push("C14", worst, 1e-9);
  }
  // C15: cluster SINR against the selected backhaul target.
  const SbsSinr sbs = sinr_sbs(cfg, channels, vars.m);
  report.cluster_sbs_sinr = sbs.cluster_min;
  {
    double worst = std::numeric_limits<double>::infinity();
    for (int l = 0; l < cfg.num_clusters; ++l) {
      double target = 0.0;
      for (int j = 0; j < j_sbs; ++j) target += beta(l * j_sbs + j) * sbs_table[j].sinr_target;
      if (target <= 0.0) continue;
      worst = std::min(worst, (sbs.cluster_min(l) - target) / target);
    }
    push("C15", worst, tol);
  }

  report.objective = weighted_rate_objective(cfg, ue_table, alpha);
  return report;
}

// ---------------------------------------------------------------------------
// Brute force
// ---------------------------------------------------------------------------

namespace {

struct ClusterPattern {
  std::vector<int> admitted;        // UE indices within the cluster
  std::vector<int> rates;           // rate index per admitted UE
  std::vector<std::uint8_t> kappa;  // B x U, row-major (b * U + u)
  int beta_j = 0;
  double rate_sum_bps = 0.0;        // access bandwidth * sum of rates
  double weighted_rate = 0.0;
};

void enumerate_subsets(int u_count, int pick, std::vector<std::vector<int>>& out) {
  std::vector<int> cur(pick);
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == pick) {
      out.push_back(cur);
      return;
    }
    for (int u = start; u <= u_count - (pick - depth); ++u) {
      cur[depth] = u;
      rec(u + 1, depth + 1);
    }
  };
  rec(0, 0);
}

std::vector<std::vector<std::uint8_t>> enumerate_kappa(const SystemConfig& cfg,
                                                       const std::vector<int>& admitted) {
  const int b_count = cfg.sbs_per_cluster;
  const int u_count = cfg.ue_per_cluster;
  const int bits = b_count * static_cast<int>(admitted.size());
  std::vector<std::vector<std::uint8_t>> out;
  for (std::uint64_t mask = 0; mask < (1ull << bits); ++mask) {
    std::vector<std::uint8_t> kappa(b_count * u_count, 0);
    int bit = 0;
    for (int b = 0; b < b_count; ++b)
      for (int a : admitted) kappa[b * u_count + a] = (mask >> bit++) & 1u;
    bool ok = true;
    for (int b = 0; b < b_count && ok; ++b) {
      int rowsum = 0;
      for (int u = 0; u < u_count; ++u) rowsum += kappa[b * u_count + u];
      ok = rowsum >= 1 && rowsum <= cfg.sbs_max_streams;
    }
    for (std::size_t a = 0; a < admitted.size() && ok; ++a) {
      int colsum = 0;
      for (int b = 0; b < b_count; ++b) colsum += kappa[b * u_count + admitted[a]];
      ok = colsum >= cfg.min_serving_sbs && colsum <= cfg.max_serving_sbs;
    }
    if (ok) out.push_back(std::move(kappa));
  }
  return out;
}

std::vector<ClusterPattern> enumerate_cluster_patterns(const SystemConfig& cfg,
                                                       const RateTable& ue_table, int j_sbs,
                                                       int cluster) {
  std::vector<ClusterPattern> out;
  std::vector<std::vector<int>> subsets;
  enumerate_subsets(cfg.ue_per_cluster, cfg.ue_served_per_cluster, subsets);
  const int j_ue = ue_table.size();
  for (const std::vector<int>& admitted : subsets) {
    const auto kappas = enumerate_kappa(cfg, admitted);
    if (kappas.empty()) continue;
    std::vector<int> rates(admitted.size(), 0);
    while (true) {
      for (const auto& kappa : kappas) {
        for (int bj = 0; bj < j_sbs; ++bj) {
          ClusterPattern p;
          p.admitted = admitted;
          p.rates = rates;
          p.kappa = kappa;
          p.beta_j = bj;
          for (std::size_t a = 0; a < admitted.size(); ++a) {
            p.rate_sum_bps += ue_table[rates[a]].rate_bps_hz * cfg.access_bandwidth_hz;
            p.weighted_rate +=
                cfg.weight(cluster, admitted[a]) * ue_table[rates[a]].rate_bps_hz;
          }
          out.push_back(std::move(p));
        }
      }
      int pos = static_cast<int>(rates.size()) - 1;
      while (pos >= 0 && rates[pos] == j_ue - 1) rates[pos--] = 0;
      if (pos < 0) break;
      rates[pos]++;
    }
  }
  return out;
}

}  // namespace

std::uint64_t count_admissible_tuples(const SystemConfig& cfg, int j_ue, int j_sbs) {
  std::uint64_t per_cluster = 0;
  std::vector<std::vector<int>> subsets;
  enumerate_subsets(cfg.ue_per_cluster, cfg.ue_served_per_cluster, subsets);
  std::uint64_t rate_combos = 1;
  for (int i = 0; i < cfg.ue_served_per_cluster; ++i) rate_combos *= j_ue;
  for (const std::vector<int>& admitted : subsets)
    per_cluster += enumerate_kappa(cfg, admitted).size() * rate_combos * j_sbs;
  std::uint64_t total = 1;
  for (int l = 0; l < cfg.num_clusters; ++l) total *= per_cluster;
  return total;
}

BruteForceResult brute_force_optimum(const SystemConfig& cfg, const RateTable& ue_table,
                                     const RateTable& sbs_table, const ChannelSet& channels,
                                     const conic::SolverOptions& solver_opts,
                                     std::uint64_t max_tuples, bool parallel) {
  BruteForceResult result;
  const int j_ue = ue_table.size();
  const int j_sbs = sbs_table.size();
  std::vector<std::vector<ClusterPattern>> patterns(cfg.num_clusters);
  std::uint64_t total = 1;
  for (int l = 0; l < cfg.num_clusters; ++l) {
    patterns[l] = enumerate_cluster_patterns(cfg, ue_table, j_sbs, l);
    if (patterns[l].empty()) return result;  // no counting-feasible assignment
    total *= patterns[l].size();
    if (total > max_tuples) {
      result.status = BruteForceStatus::too_large;
      return result;
    }
  }
  result.tuples_enumerated = total;

  const BigMConstants big_m = compute_big_m(channels, cfg);
  const double budget_ratio = cfg.backhaul_bandwidth_hz / cfg.access_bandwidth_hz;

  struct Candidate {
    double objective = -std::numeric_limits<double>::infinity();
    std::int64_t index = -1;
  };

  auto evaluate = [&](std::uint64_t tuple) -> std::optional<double> {
    // Static backhaul-budget check first: it only involves binaries.
    std::uint64_t rem = tuple;
    std::vector<const ClusterPattern*> chosen(cfg.num_clusters);
    for (int l = 0; l < cfg.num_clusters; ++l) {
      chosen[l] = &patterns[l][rem % patterns[l].size()];
      rem /= patterns[l].size();
      const double backhaul = budget_ratio * sbs_table[chosen[l]->beta_j].rate_bps_hz *
                              cfg.access_bandwidth_hz;
      if (chosen[l]->rate_sum_bps > backhaul * (1.0 + 1e-12)) return std::nullopt;
    }
    BinaryState state = BinaryState::all_free(cfg, j_ue, j_sbs);
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(state.alpha.size());
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(state.beta.size());
    Eigen::VectorXd kappa = Eigen::VectorXd::Zero(state.kappa.size());
    double objective = 0.0;
    for (int l = 0; l < cfg.num_clusters; ++l) {
      const ClusterPattern& p = *chosen[l];
      for (std::size_t a = 0; a < p.admitted.size(); ++a)
        alpha((l * cfg.ue_per_cluster + p.admitted[a]) * j_ue + p.rates[a]) = 1.0;
      beta(l * j_sbs + p.beta_j) = 1.0;
      for (int b = 0; b < cfg.sbs_per_cluster; ++b)
        for (int u = 0; u < cfg.ue_per_cluster; ++u)
          kappa((l * cfg.sbs_per_cluster + b) * cfg.ue_per_cluster + u) =
              p.kappa[b * cfg.ue_per_cluster + u];
      objective += p.weighted_rate;
    }
    state = BinaryState::pin_all(cfg, j_ue, j_sbs, alpha, beta, kappa);
    const conic::ConicProgram program =
        build_p0_relaxation(cfg, ue_table, sbs_table, channels, big_m, state);
    const conic::SolveReport report = conic::solve(program, solver_opts);
    if (report.status != conic::SolveStatus::optimal) return std::nullopt;
    return objective;
  };

  Candidate best;
  if (parallel && total > 1) {
    const int threads = omp_in_parallel() ? 1 : omp_get_max_threads();
    std::vector<Candidate> local(threads);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (std::int64_t t = 0; t < static_cast<std::int64_t>(total); ++t) {
      const int tid = omp_get_thread_num();
      const auto obj = evaluate(static_cast<std::uint64_t>(t));
      if (!obj) continue;
      Candidate& cand = local[tid];
      if (*obj > cand.objective || (*obj == cand.objective && t < cand.index)) {
        cand.objective = *obj;
        cand.index = t;
      }
    }
    for (const Candidate& cand : local) {
      if (cand.index < 0) continue;
      if (cand.objective > best.objective ||
          (cand.objective == best.objective && cand.index < best.index)) {
        best = cand;
      }
    }
  } else {
    for (std::int64_t t = 0; t < static_cast<std::int64_t>(total); ++t) {
      const auto obj = evaluate(static_cast<std::uint64_t>(t));
      if (!obj) continue;
      if (*obj > best.objective || (*obj == best.objective && t < best.index)) {
        best.objective = *obj;
        best.index = t;
      }
    }
  }

  if (best.index < 0) return result;  // infeasible
  // Rebuild the winning assignment.
  std::uint64_t rem = static_cast<std::uint64_t>(best.index);
  result.alpha = Eigen::VectorXd::Zero(cfg.total_ue() * j_ue);
  result.beta = Eigen::VectorXd::Zero(cfg.num_clusters * j_sbs);
  result.kappa = Eigen::VectorXd::Zero(cfg.total_sbs() * cfg.ue_per_cluster);
  for (int l = 0; l < cfg.num_clusters; ++l) {
    const ClusterPattern& p = patterns[l][rem % patterns[l].size()];
    rem /= patterns[l].size();
    for (std::size_t a = 0; a < p.admitted.size(); ++a)
      result.alpha((l * cfg.ue_per_cluster + p.admitted[a]) * j_ue + p.rates[a]) = 1.0;
    result.beta(l * j_sbs + p.beta_j) = 1.0;
    for (int b = 0; b < cfg.sbs_per_cluster; ++b)
      for (int u = 0; u < cfg.ue_per_cluster; ++u)
        result.kappa((l * cfg.sbs_per_cluster + b) * cfg.ue_per_cluster + u) =
            p.kappa[b * cfg.ue_per_cluster + u];
  }
  result.status = BruteForceStatus::optimal;
  result.objective = best.objective;
  return result;
}

}  // namespace sbrrm::verify
